use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::Args;
use ctxbias::bias::{
    attach_mapped_alternatives, read_manifest, read_phrase_list, replace_with_mapped, BiasClass,
};
use ctxbias::bpe::{word_counts, BpeModel};
use ctxbias::corpus::{read_corpus, write_corpus, Utterance};
use ctxbias::decoder::{
    decoding_vocab, read_nbest, write_nbest, ChannelConfig, ConfusionTable, Decoder, DecoderConfig,
    NoisyChannelScorer, Scorer, TableScorer,
};
use ctxbias::eval::{evaluate, read_bias_counts, Buckets};
use ctxbias::mapper::{LetterRules, Lexicon, UnigramModel, WordMapper};
use ctxbias::relabel::insert_tags;
use ctxbias::tags::strip_tags;
use ctxbias::Error;
use ctxbias_wfst::text::{write_fst, write_symbols};

use crate::io::{open, output, read_lines, source, CliError, CliResult};
use crate::OutArg;

#[derive(Debug, Args)]
pub struct BpeLearnArgs {
    /// Corpus in `utt_id<TAB>text` form.
    #[arg(long)]
    pub corpus: PathBuf,
    /// Stop once the vocabulary has this many symbols.
    #[arg(long, default_value_t = 1000)]
    pub vocab_size: usize,
    /// Class names whose enter and exit tags are kept atomic.
    #[arg(long = "class", value_name = "NAME")]
    pub classes: Vec<String>,
    /// Output model directory.
    #[arg(long)]
    pub model: PathBuf,
}

pub fn bpe_learn(a: BpeLearnArgs) -> CliResult<()> {
    let corpus = read_corpus(open(&a.corpus)?, &source(&a.corpus))?;
    let tags: Vec<String> = a
        .classes
        .iter()
        .flat_map(|c| [ctxbias::tags::enter_tag(c), ctxbias::tags::exit_tag(c)])
        .collect();
    let model = BpeModel::learn(word_counts(corpus.iter().map(Utterance::text)), a.vocab_size, &tags)?;
    model.save(&a.model)?;
    Ok(())
}

#[derive(Debug, Args)]
pub struct BpeApplyArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Corpus in `utt_id<TAB>text` form.
    #[arg(long)]
    pub corpus: PathBuf,
    #[command(flatten)]
    pub out: OutArg,
}

pub fn bpe_apply(a: BpeApplyArgs) -> CliResult<()> {
    let model = BpeModel::load(&a.model)?;
    let corpus = read_corpus(open(&a.corpus)?, &source(&a.corpus))?;
    let segmented: Vec<Utterance> = corpus
        .iter()
        .map(|u| Utterance {
            id: u.id.clone(),
            words: model.apply_words(&u.words),
        })
        .collect();
    let mut w = output(a.out.out.as_deref())?;
    write_corpus(&segmented, &mut w)?;
    w.flush()?;
    Ok(())
}

/// Pronunciation resources for the word mapper.
#[derive(Debug, Args)]
pub struct MapperArgs {
    /// `word<TAB>phones` pronunciation lexicon.
    #[arg(long)]
    pub lexicon: Option<PathBuf>,
    /// `word<TAB>count` unigram counts.
    #[arg(long)]
    pub unigram: Option<PathBuf>,
    /// `letters<TAB>phones` rules for words missing from the lexicon.
    #[arg(long)]
    pub rules: Option<PathBuf>,
    /// Extra cost per output word.
    #[arg(long, default_value_t = 0.0)]
    pub word_penalty: f64,
}

impl MapperArgs {
    fn load(&self) -> CliResult<WordMapper> {
        let (Some(lex), Some(uni)) = (&self.lexicon, &self.unigram) else {
            return Err(CliError::Config("word mapping needs --lexicon and --unigram".into()));
        };
        let lexicon = Lexicon::read(open(lex)?, &source(lex))?;
        let unigram = UnigramModel::read(open(uni)?, &source(uni))?;
        let rules = match &self.rules {
            Some(p) => Some(LetterRules::read(open(p)?, &source(p))?),
            None => None,
        };
        Ok(WordMapper::new(lexicon, &unigram, rules, self.word_penalty)?)
    }
}

#[derive(Debug, Args)]
pub struct BiasBuildArgs {
    /// Subword model directory.
    #[arg(long)]
    pub model: PathBuf,
    /// `phrase<TAB>frequency` list; the frequency defaults to 1.
    #[arg(long)]
    pub phrases: PathBuf,
    /// Class name, which also determines the tags.
    #[arg(long, default_value = "contact")]
    pub class: String,
    /// Add a mapped spelling for phrases containing rare words.
    #[arg(long)]
    pub with_mapping: bool,
    /// Use only the mapped spelling where one exists.
    #[arg(long, requires = "with_mapping")]
    pub replace: bool,
    #[command(flatten)]
    pub mapper: MapperArgs,
    /// Input (subword) symbol table output.
    #[arg(long)]
    pub isymbols: Option<PathBuf>,
    /// Output (word) symbol table output.
    #[arg(long)]
    pub osymbols: Option<PathBuf>,
    #[command(flatten)]
    pub out: OutArg,
}

pub fn bias_build(a: BiasBuildArgs) -> CliResult<()> {
    let model = BpeModel::load(&a.model)?;
    let mut phrases = read_phrase_list(open(&a.phrases)?, &source(&a.phrases))?;
    if a.with_mapping {
        let mapper = a.mapper.load()?;
        let mapping = mapper.mapping_table(phrases.iter().flat_map(|p| p.words.iter().map(String::as_str)));
        phrases = if a.replace {
            replace_with_mapped(&phrases, &mapping, &model)
        } else {
            attach_mapped_alternatives(&phrases, &mapping, &model)
        };
    }
    let class = BiasClass::compile(&a.class, phrases, &model)?;
    let mut w = output(a.out.out.as_deref())?;
    write_fst(&class.fst, &mut w)?;
    w.flush()?;
    if let Some(p) = &a.isymbols {
        write_symbols(class.fst.isymbols(), output(Some(p))?)?;
    }
    if let Some(p) = &a.osymbols {
        write_symbols(class.fst.osymbols(), output(Some(p))?)?;
    }
    Ok(())
}

#[derive(Debug, Args)]
pub struct MapArgs {
    #[command(flatten)]
    pub mapper: MapperArgs,
    /// File of phrases, one per line; standard input when absent and no
    /// phrases are given.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Phrases to map.
    pub phrases: Vec<String>,
    #[command(flatten)]
    pub out: OutArg,
}

/// Writes `input<TAB>mapping<TAB>cost`; unmappable phrases are reported on
/// standard error and skipped.
pub fn map(a: MapArgs) -> CliResult<()> {
    let mapper = a.mapper.load()?;
    let phrases = if a.phrases.is_empty() {
        read_lines(a.input.as_deref())?
    } else {
        a.phrases.clone()
    };
    let mut w = output(a.out.out.as_deref())?;
    let mut failed = None;
    for p in &phrases {
        let words: Vec<&str> = p.split_whitespace().collect();
        match mapper.map_phrase(&words) {
            Ok(m) => writeln!(w, "{}\t{}\t{:.6}", words.join(" "), m.words.join(" "), m.cost)?,
            Err(e @ Error::NoPronunciationMatch(_)) => {
                eprintln!("warning: {e}");
                failed = Some(e);
            }
            Err(e) => return Err(e.into()),
        }
    }
    w.flush()?;
    match failed {
        Some(e) if phrases.len() == 1 => Err(e.into()),
        _ => Ok(()),
    }
}

#[derive(Debug, Args)]
pub struct RelabelArgs {
    /// Untagged transcriptions, `utt_id<TAB>text`.
    #[arg(long)]
    pub refs: PathBuf,
    /// Tagged recognizer output, `utt_id<TAB>text`.
    #[arg(long)]
    pub hyps: PathBuf,
    #[command(flatten)]
    pub out: OutArg,
}

/// Transcriptions without a hypothesis are copied through unchanged.
pub fn relabel(a: RelabelArgs) -> CliResult<()> {
    let refs = read_corpus(open(&a.refs)?, &source(&a.refs))?;
    let hyps = read_corpus(open(&a.hyps)?, &source(&a.hyps))?;
    let by_id: BTreeMap<&str, &Utterance> = hyps.iter().map(|u| (u.id.as_str(), u)).collect();
    if let Some(h) = hyps.iter().find(|h| !refs.iter().any(|r| r.id == h.id)) {
        return Err(Error::MissingReference(h.id.clone()).into());
    }
    let mut out = Vec::with_capacity(refs.len());
    for r in &refs {
        let words = match by_id.get(r.id.as_str()) {
            Some(h) => insert_tags(&r.words, &h.words)?,
            None => r.words.clone(),
        };
        out.push(Utterance { id: r.id.clone(), words });
    }
    let mut w = output(a.out.out.as_deref())?;
    write_corpus(&out, &mut w)?;
    w.flush()?;
    Ok(())
}

#[derive(Debug, Args)]
pub struct DecodeArgs {
    /// Subword model directory; required with --classes or the channel
    /// scorer.
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Score table, `history<TAB>token<TAB>logprob`.
    #[arg(long, conflicts_with_all = ["confusion", "train"])]
    pub table: Option<PathBuf>,
    /// Confusion table for the noisy-channel scorer,
    /// `intended<TAB>emitted<TAB>prob`.
    #[arg(long, requires = "train")]
    pub confusion: Option<PathBuf>,
    /// Tagged training text for the channel scorer's n-gram prior.
    #[arg(long, requires = "confusion")]
    pub train: Option<PathBuf>,
    /// What was said in each utterance, `utt_id<TAB>words`. Required by
    /// the channel scorer; also supplies utterance ids.
    #[arg(long)]
    pub refs: Option<PathBuf>,
    /// Utterance ids to decode, one per line.
    #[arg(long)]
    pub utts: Option<PathBuf>,
    /// Class manifest, `class<TAB>enter_tag<TAB>exit_tag<TAB>phrase_file`.
    /// Phrase files are relative to the manifest.
    #[arg(long)]
    pub classes: Option<PathBuf>,
    #[arg(long, default_value_t = 8)]
    pub beam: usize,
    #[arg(long, default_value_t = 0.1, allow_negative_numbers = true)]
    pub lambda_c: f64,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pub lambda_b: f64,
    #[arg(long, default_value_t = 0.1, allow_negative_numbers = true)]
    pub length_penalty: f64,
    #[arg(long, default_value_t = 64)]
    pub max_steps: usize,
    /// Hypotheses written per utterance.
    #[arg(long, default_value_t = 1)]
    pub nbest: usize,
    /// Channel scorer n-gram order.
    #[arg(long, default_value_t = 3)]
    pub order: usize,
    #[arg(long, default_value_t = 1.0)]
    pub lm_weight: f64,
    #[arg(long, default_value_t = 1e-4)]
    pub floor: f64,
    #[arg(long, default_value_t = 0.0)]
    pub noise_std: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub out: OutArg,
}

fn load_classes(manifest: &Path, model: &BpeModel) -> CliResult<Vec<BiasClass>> {
    let base = manifest.parent().unwrap_or(Path::new("."));
    let entries = read_manifest(open(manifest)?, &source(manifest))?;
    let mut classes = Vec::with_capacity(entries.len());
    for e in entries {
        let path = base.join(&e.phrase_file);
        let phrases = read_phrase_list(open(&path)?, &source(&path))?;
        classes.push(BiasClass::compile_with_tags(&e.class_name, &e.enter_tag, &e.exit_tag, phrases, model)?);
    }
    Ok(classes)
}

pub fn decode(a: DecodeArgs) -> CliResult<()> {
    let cfg = DecoderConfig {
        beam_size: a.beam,
        lambda_c: a.lambda_c,
        lambda_b: a.lambda_b,
        length_penalty_alpha: a.length_penalty,
        max_steps: a.max_steps,
    };
    cfg.validate()?;
    let model = a.model.as_deref().map(BpeModel::load).transpose()?;
    let need_model = || CliError::Config("--model is required with --classes or --confusion".into());
    let refs = match &a.refs {
        Some(p) => Some(read_corpus(open(p)?, &source(p))?),
        None => None,
    };

    let scorer: Box<dyn Scorer> = match (&a.table, &a.confusion, &a.train) {
        (Some(t), None, None) => {
            let vocab = model.as_ref().map(decoding_vocab).transpose()?;
            Box::new(TableScorer::read(open(t)?, &source(t), vocab)?)
        }
        (None, Some(c), Some(t)) => {
            let model = model.as_ref().ok_or_else(need_model)?;
            let refs = refs
                .as_ref()
                .ok_or_else(|| CliError::Config("the channel scorer needs --refs".into()))?;
            let confusion = ConfusionTable::read(open(c)?, &source(c))?;
            let training: Vec<Vec<String>> = read_corpus(open(t)?, &source(t))?
                .iter()
                .map(|u| model.apply_words(&u.words))
                .collect();
            let intended: BTreeMap<String, Vec<String>> = refs
                .iter()
                .map(|u| (u.id.clone(), model.apply_words(&strip_tags(&u.words))))
                .collect();
            let ccfg = ChannelConfig {
                order: a.order,
                lm_weight: a.lm_weight,
                floor: a.floor,
                noise_std: a.noise_std,
                seed: a.seed,
            };
            Box::new(NoisyChannelScorer::new(decoding_vocab(model)?, &training, &intended, &confusion, ccfg)?)
        }
        _ => return Err(CliError::Config("give either --table or both --confusion and --train".into())),
    };

    let classes = match &a.classes {
        Some(m) => load_classes(m, model.as_ref().ok_or_else(need_model)?)?,
        None => Vec::new(),
    };
    let ids: Vec<String> = match (&a.utts, &refs) {
        (Some(p), _) => read_lines(Some(p))?,
        (None, Some(r)) => r.iter().map(|u| u.id.clone()).collect(),
        (None, None) => return Err(CliError::Config("give --utts or --refs to name the utterances".into())),
    };
    if let Some(bad) = ids.iter().find(|id| id.split_whitespace().count() != 1) {
        return Err(CliError::Config(format!("bad utterance id {bad:?}")));
    }

    let decoder = Decoder::new(scorer.as_ref(), &classes, cfg)?;
    let mut w = output(a.out.out.as_deref())?;
    for id in &ids {
        let result = decoder.decode(id)?;
        write_nbest(&mut w, id, &result, a.nbest.max(1))?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Decoder output, `utt_id<TAB>rank<TAB>score<TAB>text`.
    #[arg(long)]
    pub decodes: PathBuf,
    /// Tagged references, `utt_id<TAB>text`.
    #[arg(long)]
    pub refs: PathBuf,
    /// `utt_id<TAB>count` bias phrase counts; counted from reference tags
    /// when absent.
    #[arg(long)]
    pub bias_counts: Option<PathBuf>,
    /// Lower bucket edges; the last bucket is open.
    #[arg(long, default_value = "0,1,2,3")]
    pub buckets: String,
    /// Also write `bucket,count,wer` rows here.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    #[command(flatten)]
    pub out: OutArg,
}

pub fn eval(a: EvalArgs) -> CliResult<()> {
    let buckets = Buckets::parse(&a.buckets)?;
    let decodes = read_nbest(open(&a.decodes)?, &source(&a.decodes))?;
    let refs = read_corpus(open(&a.refs)?, &source(&a.refs))?;
    let counts = match &a.bias_counts {
        Some(p) => Some(read_bias_counts(open(p)?, &source(p))?),
        None => None,
    };
    let mut report = evaluate(&decodes, &refs, counts.as_ref(), &buckets)?;
    report.config = vec![
        ("decodes".into(), source(&a.decodes)),
        ("refs".into(), source(&a.refs)),
        ("buckets".into(), a.buckets.clone()),
    ];
    let mut w = output(a.out.out.as_deref())?;
    w.write_all(report.to_tsv().as_bytes())?;
    w.flush()?;
    if let Some(p) = &a.csv {
        let mut c = output(Some(p))?;
        c.write_all(report.to_csv().as_bytes())?;
        c.flush()?;
    }
    Ok(())
}

