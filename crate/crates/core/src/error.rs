use std::io;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error("{what}, line {line}: {message}")]
    Parse { what: String, line: usize, message: String },

    #[error("invalid UTF-8 on line {line}")]
    InvalidUtf8 { line: usize },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("invalid hyperparameters: {0}")]
    Hyperparams(String),

    #[error("vocabulary is empty after applying min_count {min_count}")]
    EmptyVocabulary { min_count: u64 },

    #[error("corpus has {tokens} tokens, needs at least {needed}")]
    CorpusTooShort { tokens: usize, needed: usize },

    #[error("training diverged: non-finite parameter after epoch {epoch}")]
    NonFinite { epoch: usize },

    #[error("unembeddable token {0:?}")]
    Unembeddable(String),

    #[error("zero-norm vector")]
    ZeroNorm,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("empty candidate set: {0}")]
    EmptyCandidates(String),

    #[error("word {word:?} is not in the estimated {language} vocabulary")]
    NotInSourceVocabulary { word: String, language: String },

    #[error("out-of-vocabulary words: {0:?}")]
    OutOfVocabulary(Vec<String>),

    #[error("unknown language {0:?}")]
    UnknownLanguage(String),

    #[error("no evaluable sources: none of the lexicon sources is covered by the gold dictionary")]
    NoGoldCoverage,

    #[error("untranslatable document: no token produced a target-language vector")]
    Untranslatable,

    #[error("document has no embeddable token")]
    EmptyDocument,

    #[error("sample pool exhausted while expanding seed {seed} ({added} of {wanted} added)")]
    PoolExhausted { seed: usize, added: usize, wanted: usize },

    #[error("gold id {0} is missing from the pool")]
    MissingGoldId(usize),

    #[error("infeasible synthetic spec: {0}")]
    InfeasibleSpec(String),

    #[error("missing baseline artifact: {0}")]
    MissingBaseline(String),

    #[error("bad model file: {0}")]
    Format(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(what: impl Into<String>, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            what: what.into(),
            line,
            message: message.into(),
        }
    }
}
