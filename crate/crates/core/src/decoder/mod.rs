//! Beam search with class-triggered bias transducers.
//!
//! Outside any class the search extends hypotheses with every scorer token.
//! Emitting a class enter tag moves the hypothesis to the start of that
//! class's transducer; from there only the transducer's arcs (and the exit
//! tag, at final states) are allowed. Inside candidates score
//! `log P_b + λ_c log P_c`. Outside candidates score `log P_b + λ_b Γ_t`,
//! where `Γ_t` averages the best `log P_c` of each inside hypothesis at step
//! `t` and is 0 when there are none.

mod channel;
mod scorer;
mod table;

use std::cmp::Ordering;

use ctxbias_wfst::{StateId, EPSILON};

use crate::bias::BiasClass;
use crate::bpe::END_OF_WORD;
use crate::error::{Error, Result};
use crate::tags::is_tag;

pub use channel::{ChannelConfig, ConfusionTable, NgramModel, NoisyChannelScorer};
pub use scorer::{log_sum_exp, normalize_log, Scorer, TokenId, Vocab, EOS};
pub use table::TableScorer;

#[derive(Debug, Clone, PartialEq)]
pub struct DecoderConfig {
    pub beam_size: usize,
    pub lambda_c: f64,
    pub lambda_b: f64,
    pub length_penalty_alpha: f64,
    pub max_steps: usize,
}

impl Default for DecoderConfig {
    fn default() -> Self {
        DecoderConfig {
            beam_size: 8,
            lambda_c: 0.1,
            lambda_b: 1.0,
            length_penalty_alpha: 0.1,
            max_steps: 64,
        }
    }
}

impl DecoderConfig {
    pub fn validate(&self) -> Result<()> {
        if self.beam_size == 0 {
            return Err(Error::Config("beam size must be at least 1".into()));
        }
        if self.max_steps == 0 {
            return Err(Error::Config("max steps must be at least 1".into()));
        }
        for (name, v) in [
            ("lambda_c", self.lambda_c),
            ("lambda_b", self.lambda_b),
            ("length penalty", self.length_penalty_alpha),
        ] {
            if !v.is_finite() {
                return Err(Error::Config(format!("{name} must be finite")));
            }
        }
        Ok(())
    }

    /// `((5 + len) / 6)^α`.
    pub fn length_penalty(&self, len: usize) -> f64 {
        ((5.0 + len as f64) / 6.0).powf(self.length_penalty_alpha)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepScore {
    pub base: f64,
    /// `log P_c` for candidates inside a class transducer.
    pub context: Option<f64>,
    pub gamma: f64,
    pub total: f64,
}

/// Position inside a class transducer: class index and state.
pub type FstPosition = (usize, StateId);

#[derive(Debug, Clone, PartialEq)]
pub struct Hypothesis {
    pub tokens: Vec<TokenId>,
    /// Word emitted by the transducer arc that produced each token.
    pub outputs: Vec<Option<String>>,
    pub step_scores: Vec<StepScore>,
    pub accum_score: f64,
    pub fst_state: Option<FstPosition>,
    pub finished: bool,
}

impl Hypothesis {
    fn empty() -> Self {
        Hypothesis {
            tokens: Vec::new(),
            outputs: Vec::new(),
            step_scores: Vec::new(),
            accum_score: 0.0,
            fst_state: None,
            finished: false,
        }
    }

    /// Length without the end-of-sequence token.
    pub fn output_len(&self) -> usize {
        self.tokens.len() - usize::from(self.finished)
    }

    fn extend(&self, token: TokenId, output: Option<String>, step: StepScore, next: Option<FstPosition>, finished: bool) -> Self {
        let mut h = self.clone();
        h.tokens.push(token);
        h.outputs.push(output);
        h.accum_score += step.total;
        h.step_scores.push(step);
        h.fst_state = next;
        h.finished = finished;
        h
    }
}

/// One way to continue from a transducer state.
#[derive(Debug, Clone, PartialEq)]
pub struct FstMove {
    pub token: String,
    pub log_pc: f64,
    /// `None` when the move is the exit tag.
    pub next: Option<StateId>,
    pub output: Option<String>,
}

/// Candidates from `state` of `class`'s transducer: every outgoing arc with
/// `log P_c = -w`, plus the exit tag with `-final weight` at final states.
pub fn expand_in_fst(class: &BiasClass, state: StateId) -> Vec<FstMove> {
    let fst = &class.fst;
    let mut out: Vec<FstMove> = fst
        .arcs(state)
        .iter()
        .map(|arc| FstMove {
            token: fst.isymbols().symbol(arc.ilabel).expect("input label").to_string(),
            log_pc: -arc.weight.value(),
            next: Some(arc.nextstate),
            output: (arc.olabel != EPSILON)
                .then(|| fst.osymbols().symbol(arc.olabel).expect("output label").to_string()),
        })
        .collect();
    if fst.is_final(state) {
        out.push(FstMove {
            token: class.exit_tag.clone(),
            log_pc: -fst.final_weight(state).value(),
            next: None,
            output: None,
        });
    }
    out
}

/// An unscored extension of beam entry `hyp`.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub hyp: usize,
    pub token: TokenId,
    pub base: f64,
    /// Present iff the candidate extends a path inside a class transducer.
    pub context: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepTrace {
    pub kappa: usize,
    pub gamma: f64,
}

/// Scores one step's candidates.
pub fn score_step(candidates: &[Candidate], cfg: &DecoderConfig) -> (Vec<StepScore>, StepTrace) {
    let mut best: Vec<(usize, f64)> = Vec::new();
    for c in candidates {
        if let Some(pc) = c.context {
            match best.iter_mut().find(|(h, _)| *h == c.hyp) {
                Some((_, b)) => *b = b.max(pc),
                None => best.push((c.hyp, pc)),
            }
        }
    }
    let kappa = best.len();
    let gamma = if kappa == 0 {
        0.0
    } else {
        best.iter().map(|(_, b)| b).sum::<f64>() / kappa as f64
    };
    let scores = candidates
        .iter()
        .map(|c| {
            let total = match c.context {
                Some(pc) => c.base + cfg.lambda_c * pc,
                None => c.base + cfg.lambda_b * gamma,
            };
            StepScore {
                base: c.base,
                context: c.context,
                gamma,
                total,
            }
        })
        .collect();
    (scores, StepTrace { kappa, gamma })
}

#[derive(Debug, Clone, PartialEq)]
pub struct NBestEntry {
    pub hypothesis: Hypothesis,
    /// Accumulated score divided by the length penalty.
    pub score: f64,
    pub tokens: Vec<String>,
    /// Words with class tags; spans inside a transducer show its outputs.
    pub text: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchResult {
    pub nbest: Vec<NBestEntry>,
    pub trace: Vec<StepTrace>,
}

impl SearchResult {
    pub fn best(&self) -> &NBestEntry {
        &self.nbest[0]
    }
}

struct ClassRuntime<'a> {
    class: &'a BiasClass,
    exit: TokenId,
    /// Input label of the class transducer to scorer token id.
    labels: Vec<TokenId>,
}

enum Kind {
    Plain,
    Enter(usize),
    Exit,
    Eos,
}

struct Extension {
    hyp: usize,
    token: TokenId,
    output: Option<String>,
    next: Option<FstPosition>,
    finished: bool,
}

pub struct Decoder<'a> {
    scorer: &'a dyn Scorer,
    classes: Vec<ClassRuntime<'a>>,
    kinds: Vec<Kind>,
    cfg: DecoderConfig,
}

impl<'a> Decoder<'a> {
    /// Checks that the scorer vocabulary covers every class tag and
    /// transducer token.
    pub fn new(scorer: &'a dyn Scorer, classes: &'a [BiasClass], cfg: DecoderConfig) -> Result<Self> {
        cfg.validate()?;
        let vocab = scorer.vocab();
        let eos = vocab.eos()?;
        let missing = |t: &str| Error::Config(format!("scorer vocabulary lacks token {t:?}"));
        let mut kinds: Vec<Kind> = (0..vocab.len()).map(|_| Kind::Plain).collect();
        kinds[eos as usize] = Kind::Eos;
        let mut runtimes = Vec::new();
        for (ci, class) in classes.iter().enumerate() {
            let enter = vocab.id(&class.enter_tag).ok_or_else(|| missing(&class.enter_tag))?;
            let exit = vocab.id(&class.exit_tag).ok_or_else(|| missing(&class.exit_tag))?;
            for (id, kind) in [(enter, Kind::Enter(ci)), (exit, Kind::Exit)] {
                if !matches!(kinds[id as usize], Kind::Plain) {
                    return Err(Error::Config(format!(
                        "token {:?} is used by more than one class",
                        vocab.token(id)
                    )));
                }
                kinds[id as usize] = kind;
            }
            let isyms = class.fst.isymbols();
            let mut labels = vec![TokenId::MAX; isyms.len()];
            for (label, sym) in isyms.iter() {
                if label == EPSILON {
                    continue;
                }
                labels[label as usize] = match vocab.id(sym) {
                    Some(id) => id,
                    None => {
                        let used = class.fst.states().any(|q| class.fst.arcs(q).iter().any(|a| a.ilabel == label));
                        if used {
                            return Err(missing(sym));
                        }
                        TokenId::MAX
                    }
                };
            }
            runtimes.push(ClassRuntime { class, exit, labels });
        }
        Ok(Decoder {
            scorer,
            classes: runtimes,
            kinds,
            cfg,
        })
    }

    pub fn config(&self) -> &DecoderConfig {
        &self.cfg
    }

    fn extensions(&self, hi: usize, h: &Hypothesis, base: &[f64], out: &mut Vec<(Extension, Candidate)>) {
        let mut push = |ext: Extension, context: Option<f64>| {
            let b = base[ext.token as usize];
            if b == f64::NEG_INFINITY {
                return;
            }
            let cand = Candidate {
                hyp: hi,
                token: ext.token,
                base: b,
                context,
            };
            out.push((ext, cand));
        };
        match h.fst_state {
            Some((ci, q)) => {
                let rt = &self.classes[ci];
                let fst = &rt.class.fst;
                for arc in fst.arcs(q) {
                    let output = (arc.olabel != EPSILON)
                        .then(|| fst.osymbols().symbol(arc.olabel).expect("output label").to_string());
                    let ext = Extension {
                        hyp: hi,
                        token: rt.labels[arc.ilabel as usize],
                        output,
                        next: Some((ci, arc.nextstate)),
                        finished: false,
                    };
                    push(ext, Some(-arc.weight.value()));
                }
                if fst.is_final(q) {
                    let ext = Extension {
                        hyp: hi,
                        token: rt.exit,
                        output: None,
                        next: None,
                        finished: false,
                    };
                    push(ext, Some(-fst.final_weight(q).value()));
                }
            }
            None => {
                for (tok, kind) in self.kinds.iter().enumerate() {
                    let (next, finished) = match kind {
                        Kind::Plain => (None, false),
                        Kind::Enter(ci) => match self.classes[*ci].class.fst.start() {
                            Some(s) => (Some((*ci, s)), false),
                            None => continue,
                        },
                        Kind::Exit => continue,
                        Kind::Eos => (None, true),
                    };
                    let ext = Extension {
                        hyp: hi,
                        token: tok as TokenId,
                        output: None,
                        next,
                        finished,
                    };
                    push(ext, None);
                }
            }
        }
    }

    pub fn decode(&self, utt: &str) -> Result<SearchResult> {
        let mut beam = vec![Hypothesis::empty()];
        let mut finished: Vec<Hypothesis> = Vec::new();
        let mut trace = Vec::new();
        for _ in 0..self.cfg.max_steps {
            if beam.is_empty() {
                break;
            }
            let mut exts = Vec::new();
            for (hi, h) in beam.iter().enumerate() {
                let base = self.scorer.log_probs(utt, &h.tokens)?;
                if base.len() != self.scorer.vocab().len() {
                    return Err(Error::Config("scorer returned a distribution of the wrong size".into()));
                }
                self.extensions(hi, h, &base, &mut exts);
            }
            let candidates: Vec<Candidate> = exts.iter().map(|(_, c)| c.clone()).collect();
            let (scores, step) = score_step(&candidates, &self.cfg);
            trace.push(step);

            let accum: Vec<f64> = exts.iter().zip(&scores).map(|((e, _), s)| beam[e.hyp].accum_score + s.total).collect();
            let mut order: Vec<usize> = (0..exts.len()).collect();
            let cmp = |&a: &usize, &b: &usize| {
                let (ea, eb) = (&exts[a].0, &exts[b].0);
                accum[b].total_cmp(&accum[a]).then_with(|| {
                    let ta = beam[ea.hyp].tokens.iter().chain(std::iter::once(&ea.token));
                    let tb = beam[eb.hyp].tokens.iter().chain(std::iter::once(&eb.token));
                    ta.cmp(tb)
                })
            };
            if order.len() > self.cfg.beam_size {
                order.select_nth_unstable_by(self.cfg.beam_size - 1, cmp);
                order.truncate(self.cfg.beam_size);
            }
            order.sort_by(cmp);
            let mut slots: Vec<Option<(Extension, Candidate)>> = exts.into_iter().map(Some).collect();
            let next: Vec<Hypothesis> = order
                .into_iter()
                .map(|i| {
                    let (e, _) = slots[i].take().expect("selected once");
                    beam[e.hyp].extend(e.token, e.output, scores[i], e.next, e.finished)
                })
                .collect();
            let (done, active): (Vec<_>, Vec<_>) = next.into_iter().partition(|h| h.finished);
            finished.extend(done);
            beam = active;
        }
        if finished.is_empty() {
            return Err(Error::NoHypothesis);
        }
        let vocab = self.scorer.vocab();
        let mut nbest: Vec<NBestEntry> = finished
            .into_iter()
            .map(|h| {
                let score = h.accum_score / self.cfg.length_penalty(h.output_len());
                let tokens: Vec<String> = h.tokens[..h.output_len()]
                    .iter()
                    .map(|&t| vocab.token(t).to_string())
                    .collect();
                let text = self.render(&h, &tokens);
                NBestEntry {
                    hypothesis: h,
                    score,
                    tokens,
                    text,
                }
            })
            .collect();
        nbest.sort_by(|a, b| by_score(a.score, b.score, &a.hypothesis, &b.hypothesis));
        Ok(SearchResult { nbest, trace })
    }

    fn render(&self, h: &Hypothesis, tokens: &[String]) -> String {
        let mut words: Vec<String> = Vec::new();
        let mut pending = String::new();
        let mut inside = false;
        for (i, tok) in tokens.iter().enumerate() {
            let kind = &self.kinds[h.tokens[i] as usize];
            match kind {
                Kind::Enter(_) | Kind::Exit => {
                    flush(&mut pending, &mut words);
                    inside = matches!(kind, Kind::Enter(_));
                    words.push(tok.clone());
                }
                _ if inside => words.extend(h.outputs[i].iter().cloned()),
                _ if is_tag(tok) => {
                    flush(&mut pending, &mut words);
                    words.push(tok.clone());
                }
                _ => match tok.strip_suffix(END_OF_WORD) {
                    Some(piece) => {
                        pending.push_str(piece);
                        flush(&mut pending, &mut words);
                    }
                    None => pending.push_str(tok),
                },
            }
        }
        flush(&mut pending, &mut words);
        words.join(" ")
    }
}

fn flush(pending: &mut String, words: &mut Vec<String>) {
    if !pending.is_empty() {
        words.push(std::mem::take(pending));
    }
}

/// Higher score first, then lexicographically smaller token ids.
fn by_score(a: f64, b: f64, ha: &Hypothesis, hb: &Hypothesis) -> Ordering {
    b.total_cmp(&a).then_with(|| ha.tokens.cmp(&hb.tokens))
}

/// Convenience wrapper around [`Decoder`].
pub fn beam_search(utt: &str, scorer: &dyn Scorer, classes: &[BiasClass], cfg: &DecoderConfig) -> Result<SearchResult> {
    Decoder::new(scorer, classes, cfg.clone())?.decode(utt)
}

/// Writes `utt_id<TAB>rank<TAB>score<TAB>text` lines, ranks from 1.
pub fn write_nbest<W: std::io::Write>(mut w: W, utt: &str, result: &SearchResult, n: usize) -> Result<()> {
    for (rank, e) in result.nbest.iter().take(n).enumerate() {
        writeln!(w, "{utt}\t{}\t{:.6}\t{}", rank + 1, e.score, e.text)?;
    }
    Ok(())
}

/// One decoded line: utterance, rank, score, text.
#[derive(Debug, Clone, PartialEq)]
pub struct DecodeLine {
    pub utt: String,
    pub rank: usize,
    pub score: f64,
    pub text: String,
}

pub fn read_nbest<R: std::io::BufRead>(r: R, source_name: &str) -> Result<Vec<DecodeLine>> {
    let mut out = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let bad = || Error::format(source_name, i + 1, "expected `utt_id<TAB>rank<TAB>score<TAB>text`");
        let f: Vec<&str> = line.splitn(4, '\t').collect();
        if f.len() < 3 {
            return Err(bad());
        }
        out.push(DecodeLine {
            utt: f[0].to_string(),
            rank: f[1].parse().map_err(|_| bad())?,
            score: f[2].parse().map_err(|_| bad())?,
            text: f.get(3).unwrap_or(&"").to_string(),
        });
    }
    Ok(out)
}

/// Scorer token inventory for decoding with `bpe`: its tokens and `</s>`.
pub fn decoding_vocab(bpe: &crate::bpe::BpeModel) -> Result<Vocab> {
    let mut tokens = bpe.token_inventory();
    tokens.push(EOS.to_string());
    Vocab::new(tokens)
}
