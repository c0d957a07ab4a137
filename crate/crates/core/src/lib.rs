//! Bilingual lexicon induction from a single polyglot embedding space.
//!
//! One subword Skip-gram model is trained on a corpus that mixes two
//! languages. Its vocabulary is split by language from a few seed words, and
//! translations are retrieved by nearest-neighbor search restricted to the
//! other language's vocabulary. On top of that sit document translation,
//! nearest-neighbor document sampling, retrieval evaluation, and the
//! loanword and numeral ablations.
//!
//! The numeric core is generic over [`Scalar`] (`f32` or `f64`); the aliases
//! below fix the usual choice.

pub mod analysis;
pub mod corpus;
pub mod embedding;
pub mod error;
pub mod langid;
pub mod lexicon;
pub mod scalar;
pub mod xlingual;

pub use corpus::{Corpus, Document, TranslationPairList};
pub use embedding::{EmbeddingModel, Hyperparams, Neighbor, Vocab};
pub use error::{Error, Result};
pub use langid::{Band, Label, LangId, LanguagePartition, SeedSet};
pub use lexicon::{Direction, EvalReport, GoldDictionary, Lexicon};
pub use scalar::Scalar;

/// Single-precision model, the default for training and the CLI.
pub type Model = EmbeddingModel<f32>;
/// Double-precision model.
pub type Model64 = EmbeddingModel<f64>;
pub type Lexicon32 = Lexicon<f32>;
pub type DocEmbedding32 = xlingual::DocEmbedding<f32>;
