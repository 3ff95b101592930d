use std::collections::HashMap;

use crate::error::{Error, Result};

pub type TokenId = u32;

/// End-of-sequence token every scorer vocabulary must contain.
pub const EOS: &str = "</s>";

/// Dense token inventory of a scorer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocab {
    tokens: Vec<String>,
    index: HashMap<String, TokenId>,
}

impl Vocab {
    /// Token ids follow iteration order; duplicates are rejected.
    pub fn new<I, S>(tokens: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut v = Vocab {
            tokens: Vec::new(),
            index: HashMap::new(),
        };
        for t in tokens {
            let t = t.into();
            if t.is_empty() || t.chars().any(char::is_whitespace) {
                return Err(Error::Config(format!("invalid token {t:?}")));
            }
            if v.index.insert(t.clone(), v.tokens.len() as TokenId).is_some() {
                return Err(Error::Config(format!("duplicate token {t:?}")));
            }
            v.tokens.push(t);
        }
        if v.tokens.is_empty() {
            return Err(Error::Config("empty vocabulary".into()));
        }
        Ok(v)
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn id(&self, token: &str) -> Option<TokenId> {
        self.index.get(token).copied()
    }

    pub fn token(&self, id: TokenId) -> &str {
        &self.tokens[id as usize]
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn ids<S: AsRef<str>>(&self, tokens: &[S]) -> Result<Vec<TokenId>> {
        tokens
            .iter()
            .map(|t| {
                self.id(t.as_ref())
                    .ok_or_else(|| Error::Config(format!("token {:?} not in vocabulary", t.as_ref())))
            })
            .collect()
    }

    pub fn eos(&self) -> Result<TokenId> {
        self.id(EOS)
            .ok_or_else(|| Error::Config(format!("vocabulary lacks the end-of-sequence token {EOS}")))
    }
}

/// Stand-in for the base model: a log-probability distribution over the
/// vocabulary given an utterance handle and the token history.
pub trait Scorer {
    fn vocab(&self) -> &Vocab;

    /// One natural-log probability per vocabulary id; `-inf` marks an
    /// impossible token. Must be deterministic.
    fn log_probs(&self, utt: &str, history: &[TokenId]) -> Result<Vec<f64>>;
}

/// `ln Σ exp(x)`, stable for large magnitudes.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + xs.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}

/// Shifts log scores so they form a distribution.
pub fn normalize_log(xs: &mut [f64]) {
    let z = log_sum_exp(xs);
    for x in xs {
        *x -= z;
    }
}
