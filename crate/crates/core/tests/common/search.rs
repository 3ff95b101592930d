//! Exhaustive reference search applying the step scoring rules to every
//! live prefix, without pruning.

use std::collections::{BTreeMap, BTreeSet};

use ctxbias::bias::BiasClass;
use ctxbias::decoder::{DecoderConfig, Scorer, TokenId, EOS};

/// All finished sequences of at most `cfg.max_steps` tokens, best first,
/// with their length-normalized scores.
pub fn exhaustive(scorer: &dyn Scorer, classes: &[BiasClass], cfg: &DecoderConfig) -> Vec<(Vec<TokenId>, f64)> {
    #[derive(Clone)]
    struct Live {
        tokens: Vec<TokenId>,
        state: Option<(usize, usize)>,
        accum: f64,
    }
    let vocab = scorer.vocab();
    let eos = vocab.id(EOS).unwrap();
    let enters: BTreeMap<TokenId, usize> = classes
        .iter()
        .enumerate()
        .map(|(i, c)| (vocab.id(&c.enter_tag).unwrap(), i))
        .collect();
    let exits: BTreeSet<TokenId> = classes.iter().map(|c| vocab.id(&c.exit_tag).unwrap()).collect();
    let mut live = vec![Live {
        tokens: vec![],
        state: None,
        accum: 0.0,
    }];
    let mut done = Vec::new();
    for _ in 0..cfg.max_steps {
        // (prefix, token, log P_b, log P_c, next state, finishes)
        let mut ext: Vec<(usize, TokenId, f64, Option<f64>, Option<(usize, usize)>, bool)> = Vec::new();
        for (i, p) in live.iter().enumerate() {
            let base = scorer.log_probs("u", &p.tokens).unwrap();
            match p.state {
                Some((c, q)) => {
                    let fst = &classes[c].fst;
                    for arc in fst.arcs(q) {
                        let tok = vocab.id(fst.isymbols().symbol(arc.ilabel).unwrap()).unwrap();
                        ext.push((i, tok, base[tok as usize], Some(-arc.weight.value()), Some((c, arc.nextstate)), false));
                    }
                    if fst.is_final(q) {
                        let tok = vocab.id(&classes[c].exit_tag).unwrap();
                        ext.push((i, tok, base[tok as usize], Some(-fst.final_weight(q).value()), None, false));
                    }
                }
                None => {
                    for tok in 0..vocab.len() as TokenId {
                        if exits.contains(&tok) {
                            continue;
                        }
                        let next = enters.get(&tok).map(|&c| (c, classes[c].fst.start().unwrap()));
                        ext.push((i, tok, base[tok as usize], None, next, tok == eos));
                    }
                }
            }
        }
        ext.retain(|e| e.2 > f64::NEG_INFINITY);
        let mut best: BTreeMap<usize, f64> = BTreeMap::new();
        for e in &ext {
            if let Some(pc) = e.3 {
                let b = best.entry(e.0).or_insert(f64::NEG_INFINITY);
                *b = b.max(pc);
            }
        }
        let gamma = if best.is_empty() {
            0.0
        } else {
            best.values().sum::<f64>() / best.len() as f64
        };
        let mut next = Vec::new();
        for (i, tok, base, pc, state, fin) in ext {
            let s = match pc {
                Some(pc) => base + cfg.lambda_c * pc,
                None => base + cfg.lambda_b * gamma,
            };
            let mut tokens = live[i].tokens.clone();
            tokens.push(tok);
            let accum = live[i].accum + s;
            if fin {
                let len = tokens.len() - 1;
                done.push((tokens, accum / ((5.0 + len as f64) / 6.0).powf(cfg.length_penalty_alpha)));
            } else {
                next.push(Live { tokens, state, accum });
            }
        }
        live = next;
    }
    done.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    done
}
