//! Subword Skip-gram embeddings over a mixed-language corpus.

mod io;
mod knn;
pub mod subword;
mod train;

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::scalar::{normalize, Scalar};

pub use knn::{cosine_distance, AllowSet, Neighbor};
pub use train::{train, train_with_threads};

/// Training configuration. Defaults follow the usual FastText Skip-gram
/// setup with 100 dimensions and 2..4 character n-grams.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Hyperparams {
    pub dim: usize,
    pub min_n: usize,
    pub max_n: usize,
    pub epochs: usize,
    pub window: usize,
    pub negatives: usize,
    pub min_count: u64,
    pub learning_rate: f64,
    pub bucket_count: usize,
    pub subsample_threshold: f64,
    pub rng_seed: u64,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Hyperparams {
            dim: 100,
            min_n: 2,
            max_n: 4,
            epochs: 5,
            window: 5,
            negatives: 5,
            min_count: 5,
            learning_rate: 0.05,
            bucket_count: 2_000_000,
            subsample_threshold: 1e-4,
            rng_seed: 1,
        }
    }
}

impl Hyperparams {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Hyperparams(m.to_string()));
        if self.dim == 0 {
            return bad("dim must be positive");
        }
        if self.min_n == 0 || self.min_n > self.max_n {
            return bad("need 0 < min_n <= max_n");
        }
        if self.epochs == 0 || self.window == 0 || self.negatives == 0 {
            return bad("epochs, window and negatives must be at least 1");
        }
        if self.min_count == 0 {
            return bad("min_count must be at least 1");
        }
        if self.bucket_count == 0 || self.bucket_count > u32::MAX as usize {
            return bad("bucket_count must be in 1..=u32::MAX");
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be positive");
        }
        if self.subsample_threshold.is_nan() || self.subsample_threshold <= 0.0 {
            return bad("subsample_threshold must be positive");
        }
        Ok(())
    }
}

/// Dense word ids with corpus counts. Ids are assigned by descending count,
/// ties by ascending word.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Vocab {
    words: Vec<String>,
    counts: Vec<u64>,
    index: HashMap<String, usize>,
    total_tokens: u64,
}

impl Vocab {
    /// Builds a vocabulary from `(word, count)` entries. Duplicate words are
    /// rejected.
    pub fn from_counts(entries: impl IntoIterator<Item = (String, u64)>, total_tokens: u64) -> Result<Self> {
        let mut entries: Vec<(String, u64)> = entries.into_iter().collect();
        entries.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        Self::from_ordered(entries, total_tokens)
    }

    /// Keeps the given order as the id order.
    pub fn from_ordered(entries: Vec<(String, u64)>, total_tokens: u64) -> Result<Self> {
        let mut v = Vocab {
            total_tokens,
            ..Vocab::default()
        };
        for (word, count) in entries {
            if v.index.insert(word.clone(), v.words.len()).is_some() {
                return Err(Error::Format(format!("duplicate vocabulary word {word:?}")));
            }
            v.words.push(word);
            v.counts.push(count);
        }
        Ok(v)
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn id(&self, word: &str) -> Option<usize> {
        self.index.get(word).copied()
    }

    pub fn word(&self, id: usize) -> &str {
        &self.words[id]
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn count(&self, id: usize) -> u64 {
        self.counts[id]
    }

    pub fn count_of(&self, word: &str) -> Option<u64> {
        self.id(word).map(|i| self.counts[i])
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn total_tokens(&self) -> u64 {
        self.total_tokens
    }

    pub fn contains(&self, word: &str) -> bool {
        self.index.contains_key(word)
    }
}

/// Tokens with corpus frequency at least `h.min_count`, with exact counts.
pub fn build_vocab(c: &Corpus, h: &Hyperparams) -> Result<Vocab> {
    if c.token_count() == 0 {
        return Err(Error::EmptyVocabulary { min_count: h.min_count });
    }
    let freqs = c.frequencies();
    let vocab = Vocab::from_counts(
        freqs
            .into_iter()
            .filter(|&(_, n)| n >= h.min_count)
            .map(|(w, n)| (w.to_string(), n)),
        c.token_count() as u64,
    )?;
    if vocab.is_empty() {
        return Err(Error::EmptyVocabulary { min_count: h.min_count });
    }
    Ok(vocab)
}

/// Hashed character n-gram vectors.
#[derive(Clone, Debug, PartialEq)]
pub struct SubwordTable<F> {
    pub bucket_count: usize,
    pub min_n: usize,
    pub max_n: usize,
    pub dim: usize,
    /// `bucket_count * dim`, row-major.
    pub data: Vec<F>,
}

impl<F: Scalar> SubwordTable<F> {
    pub fn buckets(&self, word: &str) -> Vec<usize> {
        subword::subword_buckets(word, self.min_n, self.max_n, self.bucket_count)
    }

    pub fn row(&self, bucket: usize) -> &[F] {
        &self.data[bucket * self.dim..(bucket + 1) * self.dim]
    }
}

/// A trained (or loaded) embedding model.
///
/// In-vocabulary words are represented by the mean of their word row and
/// the rows of their character n-grams; that composition is computed once and
/// cached, together with a unit-length copy used by every cosine query.
#[derive(Clone, Debug)]
pub struct EmbeddingModel<F> {
    vocab: Vocab,
    hyperparams: Hyperparams,
    word_rows: Vec<F>,
    subwords: Option<SubwordTable<F>>,
    composed: Vec<F>,
    unit: Vec<F>,
}

impl<F: Scalar> EmbeddingModel<F> {
    /// Assembles a model from raw word rows and an optional subword table.
    pub fn from_parts(
        vocab: Vocab,
        word_rows: Vec<F>,
        subwords: Option<SubwordTable<F>>,
        hyperparams: Hyperparams,
    ) -> Result<Self> {
        let dim = hyperparams.dim;
        if dim == 0 || word_rows.len() != vocab.len() * dim {
            return Err(Error::Dimension {
                expected: vocab.len() * dim,
                got: word_rows.len(),
            });
        }
        if let Some(s) = &subwords {
            if s.dim != dim || s.data.len() != s.bucket_count * dim {
                return Err(Error::Dimension {
                    expected: s.bucket_count * dim,
                    got: s.data.len(),
                });
            }
        }
        let mut composed = Vec::with_capacity(word_rows.len());
        for (id, row) in word_rows.chunks_exact(dim).enumerate() {
            composed.extend(compose(row, subwords.as_ref(), vocab.word(id)));
        }
        Self::with_composed(vocab, word_rows, subwords, hyperparams, composed)
    }

    fn with_composed(
        vocab: Vocab,
        word_rows: Vec<F>,
        subwords: Option<SubwordTable<F>>,
        hyperparams: Hyperparams,
        composed: Vec<F>,
    ) -> Result<Self> {
        if composed.iter().chain(&word_rows).any(|x| !x.is_finite())
            || subwords.as_ref().is_some_and(|s| s.data.iter().any(|x| !x.is_finite()))
        {
            return Err(Error::Format("non-finite value in model".into()));
        }
        let mut unit = composed.clone();
        for row in unit.chunks_exact_mut(hyperparams.dim) {
            if !normalize(row) {
                row.iter_mut().for_each(|x| *x = F::zero());
            }
        }
        Ok(EmbeddingModel {
            vocab,
            hyperparams,
            word_rows,
            subwords,
            composed,
            unit,
        })
    }

    pub fn vocab(&self) -> &Vocab {
        &self.vocab
    }

    pub fn hyperparams(&self) -> &Hyperparams {
        &self.hyperparams
    }

    pub fn dim(&self) -> usize {
        self.hyperparams.dim
    }

    pub fn subwords(&self) -> Option<&SubwordTable<F>> {
        self.subwords.as_ref()
    }

    /// Raw word row, before subword composition.
    pub fn word_row(&self, id: usize) -> &[F] {
        let d = self.dim();
        &self.word_rows[id * d..(id + 1) * d]
    }

    /// The composed vector of an in-vocabulary word.
    pub fn vector(&self, id: usize) -> &[F] {
        let d = self.dim();
        &self.composed[id * d..(id + 1) * d]
    }

    /// Unit-length composed vector; all zeros for a zero vector.
    pub fn unit_vector(&self, id: usize) -> &[F] {
        let d = self.dim();
        &self.unit[id * d..(id + 1) * d]
    }

    /// Raw (unnormalized) representation of any token. Out-of-vocabulary
    /// tokens use the mean of their n-gram rows and need a subword table.
    pub fn embed_word(&self, w: &str) -> Result<Vec<F>> {
        if let Some(id) = self.vocab.id(w) {
            return Ok(self.vector(id).to_vec());
        }
        match &self.subwords {
            Some(table) => {
                let buckets = table.buckets(w);
                if buckets.is_empty() {
                    return Err(Error::Unembeddable(w.to_string()));
                }
                let mut v = vec![F::zero(); self.dim()];
                for b in &buckets {
                    crate::scalar::axpy(F::one(), table.row(*b), &mut v);
                }
                let n = F::of(buckets.len() as f64);
                v.iter_mut().for_each(|x| *x /= n);
                Ok(v)
            }
            None => Err(Error::Unembeddable(w.to_string())),
        }
    }

    /// [`embed_word`](Self::embed_word) scaled to unit length.
    pub fn embed_unit(&self, w: &str) -> Result<Vec<F>> {
        if let Some(id) = self.vocab.id(w) {
            let u = self.unit_vector(id);
            if u.iter().all(|x| x.is_zero()) {
                return Err(Error::ZeroNorm);
            }
            return Ok(u.to_vec());
        }
        let mut v = self.embed_word(w)?;
        if !normalize(&mut v) {
            return Err(Error::ZeroNorm);
        }
        Ok(v)
    }

    /// Converts the parameters to another scalar type.
    pub fn cast<G: Scalar>(&self) -> EmbeddingModel<G> {
        let conv = |v: &[F]| v.iter().map(|x| G::of(x.as_f64())).collect::<Vec<G>>();
        EmbeddingModel {
            vocab: self.vocab.clone(),
            hyperparams: self.hyperparams.clone(),
            word_rows: conv(&self.word_rows),
            subwords: self.subwords.as_ref().map(|s| SubwordTable {
                bucket_count: s.bucket_count,
                min_n: s.min_n,
                max_n: s.max_n,
                dim: s.dim,
                data: conv(&s.data),
            }),
            composed: conv(&self.composed),
            unit: conv(&self.unit),
        }
    }
}

/// Mean of a word row and its n-gram rows.
fn compose<F: Scalar>(row: &[F], subwords: Option<&SubwordTable<F>>, word: &str) -> Vec<F> {
    let mut v = row.to_vec();
    if let Some(table) = subwords {
        let buckets = table.buckets(word);
        for b in &buckets {
            crate::scalar::axpy(F::one(), table.row(*b), &mut v);
        }
        let n = F::of((buckets.len() + 1) as f64);
        v.iter_mut().for_each(|x| *x /= n);
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Document;

    fn corpus(lines: &[&str]) -> Corpus {
        Corpus::new(lines.iter().map(|l| Document::from_line(l)).collect(), "t")
    }

    #[test]
    fn build_vocab_examples() {
        let c = corpus(&["a a b"]);
        let h2 = Hyperparams {
            min_count: 2,
            ..Hyperparams::default()
        };
        let v = build_vocab(&c, &h2).unwrap();
        assert_eq!(v.words(), ["a"]);
        assert_eq!(v.count_of("a"), Some(2));
        let h1 = Hyperparams {
            min_count: 1,
            ..Hyperparams::default()
        };
        let v = build_vocab(&c, &h1).unwrap();
        assert_eq!((v.count_of("a"), v.count_of("b")), (Some(2), Some(1)));
        assert_eq!(v.total_tokens(), 3);
        assert!(matches!(
            build_vocab(&corpus(&["a"]), &h2),
            Err(Error::EmptyVocabulary { .. })
        ));
    }

    #[test]
    fn ids_are_dense_and_ordered_by_count() {
        let v = Vocab::from_counts([("b".to_string(), 3), ("c".to_string(), 5), ("a".to_string(), 3)], 11).unwrap();
        assert_eq!(v.words(), ["c", "a", "b"]);
        assert_eq!(v.id("b"), Some(2));
    }

    #[test]
    fn hyperparams_validation() {
        assert!(Hyperparams::default().validate().is_ok());
        let bad = Hyperparams {
            min_n: 3,
            max_n: 2,
            ..Hyperparams::default()
        };
        assert!(bad.validate().is_err());
        let bad = Hyperparams {
            window: 0,
            ..Hyperparams::default()
        };
        assert!(bad.validate().is_err());
    }

    fn tiny_model() -> EmbeddingModel<f64> {
        let h = Hyperparams {
            dim: 3,
            bucket_count: 7,
            ..Hyperparams::default()
        };
        let vocab = Vocab::from_counts([("ab".to_string(), 4), ("x".to_string(), 2)], 6).unwrap();
        let table = SubwordTable {
            bucket_count: 7,
            min_n: 2,
            max_n: 4,
            dim: 3,
            data: (0..21).map(|i| (i as f64 * 0.37).sin()).collect(),
        };
        EmbeddingModel::from_parts(vocab, vec![1.0, 0.0, 0.5, -0.25, 2.0, 0.0], Some(table), h).unwrap()
    }

    #[test]
    fn embed_word_composes_mean_of_rows() {
        let m = tiny_model();
        let table = m.subwords().unwrap();
        let buckets = table.buckets("ab");
        let mut want = m.word_row(0).to_vec();
        for b in &buckets {
            for (w, x) in want.iter_mut().zip(table.row(*b)) {
                *w += x;
            }
        }
        for w in want.iter_mut() {
            *w /= (buckets.len() + 1) as f64;
        }
        let got = m.embed_word("ab").unwrap();
        for (g, w) in got.iter().zip(&want) {
            assert!((g - w).abs() < 1e-12);
        }
    }

    #[test]
    fn oov_uses_subwords_only_and_single_chars_embed() {
        let m = tiny_model();
        let v = m.embed_word("q").unwrap();
        assert_eq!(v.len(), 3);
        assert!(v.iter().all(|x| x.is_finite()));
        let table = m.subwords().unwrap();
        let buckets = table.buckets("ba");
        let mut want = vec![0.0; 3];
        for b in &buckets {
            for (w, x) in want.iter_mut().zip(table.row(*b)) {
                *w += x / buckets.len() as f64;
            }
        }
        let got = m.embed_word("ba").unwrap();
        for (g, w) in got.iter().zip(&want) {
            assert!((g - w).abs() < 1e-12);
        }
    }

    #[test]
    fn unembeddable_without_ngrams() {
        let mut m = tiny_model();
        if let Some(t) = m.subwords.as_mut() {
            t.min_n = 5;
            t.max_n = 6;
        }
        assert!(matches!(m.embed_word("zz"), Err(Error::Unembeddable(_))));
        // in-vocabulary words never need n-grams
        assert!(m.embed_word("x").is_ok());
    }
}
