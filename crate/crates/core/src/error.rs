use std::io;

use ctxbias_wfst::FstError;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Fst(#[from] FstError),
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("{source_name}:{line}: {msg}")]
    Format {
        source_name: String,
        line: usize,
        msg: String,
    },
    #[error("empty corpus")]
    EmptyCorpus,
    #[error("malformed subword sequence: {0}")]
    MalformedTokens(String),
    #[error("phrase frequency must be positive, got {0}")]
    NonPositiveFrequency(f64),
    #[error("arc count must be at least 1")]
    ZeroArcCount,
    #[error("empty phrase list")]
    EmptyPhraseList,
    #[error("phrase {phrase:?} cannot be tokenized: {reason}")]
    Untokenizable { phrase: String, reason: String },
    #[error("word {0:?} is in the unigram model but not in the lexicon")]
    MissingFromLexicon(String),
    #[error("empty pronunciation list")]
    EmptyPronunciations,
    #[error("no word sequence matches a pronunciation of {0:?}")]
    NoPronunciationMatch(String),
    #[error("unbalanced class tags: {0}")]
    UnbalancedTags(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("no hypothesis survived the search")]
    NoHypothesis,
    #[error("empty reference for utterance {0:?}")]
    EmptyReference(String),
    #[error("no reference for utterance {0:?}")]
    MissingReference(String),
}

impl Error {
    pub(crate) fn format(source_name: impl Into<String>, line: usize, msg: impl Into<String>) -> Self {
        Error::Format {
            source_name: source_name.into(),
            line,
            msg: msg.into(),
        }
    }

    /// Whether the error comes from inconsistent configuration (flags,
    /// vocabularies, manifests) rather than bad input data.
    pub fn is_config(&self) -> bool {
        matches!(self, Error::Config(_))
    }
}
