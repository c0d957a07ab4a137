use std::cmp::Ordering;

use rayon::prelude::*;

use super::EmbeddingModel;
use crate::error::{Error, Result};
use crate::scalar::{dot, norm, normalize, Scalar};

/// Below this many candidates the scan stays on the calling thread.
const PARALLEL_SCAN_MIN: usize = 16_384;

/// A ranked retrieval result.
#[derive(Clone, Debug, PartialEq)]
pub struct Neighbor<F> {
    pub id: usize,
    pub word: String,
    /// Cosine distance in `[0, 2]`.
    pub distance: F,
}

/// `1 - cos(u, v)`, clamped to `[0, 2]` against rounding.
pub fn cosine_distance<F: Scalar>(u: &[F], v: &[F]) -> Result<F> {
    if u.len() != v.len() {
        return Err(Error::Dimension {
            expected: u.len(),
            got: v.len(),
        });
    }
    let (nu, nv) = (norm(u), norm(v));
    if nu.is_zero() || nv.is_zero() {
        return Err(Error::ZeroNorm);
    }
    let d = F::one() - dot(u, v) / (nu * nv);
    Ok(d.max(F::zero()).min(F::of(2.0)))
}

/// Candidate restriction for neighbor queries: every vocabulary word, or a
/// sorted set of vocabulary ids.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum AllowSet {
    All,
    Ids(Vec<usize>),
}

impl AllowSet {
    pub fn from_ids(mut ids: Vec<usize>) -> Self {
        ids.sort_unstable();
        ids.dedup();
        AllowSet::Ids(ids)
    }

    /// Resolves words against the model vocabulary; unknown words are an
    /// error listing every offender.
    pub fn from_words<'a, F: Scalar>(m: &EmbeddingModel<F>, words: impl IntoIterator<Item = &'a str>) -> Result<Self> {
        let mut ids = Vec::new();
        let mut missing = Vec::new();
        for w in words {
            match m.vocab().id(w) {
                Some(id) => ids.push(id),
                None => missing.push(w.to_string()),
            }
        }
        if !missing.is_empty() {
            return Err(Error::OutOfVocabulary(missing));
        }
        Ok(Self::from_ids(ids))
    }

    pub fn len(&self, vocab_size: usize) -> usize {
        match self {
            AllowSet::All => vocab_size,
            AllowSet::Ids(ids) => ids.len(),
        }
    }

    pub fn contains(&self, id: usize) -> bool {
        match self {
            AllowSet::All => true,
            AllowSet::Ids(ids) => ids.binary_search(&id).is_ok(),
        }
    }

    /// A copy without `id`.
    pub fn without(&self, id: usize, vocab_size: usize) -> AllowSet {
        match self {
            AllowSet::All => AllowSet::Ids((0..vocab_size).filter(|&i| i != id).collect()),
            AllowSet::Ids(ids) => AllowSet::Ids(ids.iter().copied().filter(|&i| i != id).collect()),
        }
    }
}

fn by_distance_then_id<F: Scalar>(a: &(F, usize), b: &(F, usize)) -> Ordering {
    a.0.partial_cmp(&b.0).unwrap_or(Ordering::Equal).then(a.1.cmp(&b.1))
}

/// Keeps the `k` smallest `(distance, id)` pairs, sorted.
fn select_k<F: Scalar>(mut scored: Vec<(F, usize)>, k: usize) -> Vec<(F, usize)> {
    if scored.len() > k {
        scored.select_nth_unstable_by(k - 1, by_distance_then_id);
        scored.truncate(k);
    }
    scored.sort_unstable_by(by_distance_then_id);
    scored
}

impl<F: Scalar> EmbeddingModel<F> {
    /// Exact k nearest in-vocabulary words of `query` by cosine distance,
    /// restricted to `allow`. Ties are broken by ascending vocabulary id.
    /// Words whose vector is zero sit at distance 1 from everything.
    pub fn nearest_neighbors(&self, query: &[F], k: usize, allow: &AllowSet) -> Result<Vec<Neighbor<F>>> {
        if k == 0 {
            return Err(Error::Precondition("k must be at least 1".into()));
        }
        if query.len() != self.dim() {
            return Err(Error::Dimension {
                expected: self.dim(),
                got: query.len(),
            });
        }
        let n = allow.len(self.vocab().len());
        if n == 0 {
            return Err(Error::EmptyCandidates("allow set is empty".into()));
        }
        let mut q = query.to_vec();
        if !normalize(&mut q) {
            return Err(Error::ZeroNorm);
        }
        let score = |id: usize| {
            let d = F::one() - dot(&q, self.unit_vector(id));
            (d.max(F::zero()).min(F::of(2.0)), id)
        };
        let scored: Vec<(F, usize)> = match allow {
            AllowSet::All if n >= PARALLEL_SCAN_MIN => (0..n).into_par_iter().map(score).collect(),
            AllowSet::All => (0..n).map(score).collect(),
            AllowSet::Ids(ids) if n >= PARALLEL_SCAN_MIN => ids.par_iter().map(|&i| score(i)).collect(),
            AllowSet::Ids(ids) => ids.iter().map(|&i| score(i)).collect(),
        };
        Ok(select_k(scored, k)
            .into_iter()
            .map(|(distance, id)| Neighbor {
                id,
                word: self.vocab().word(id).to_string(),
                distance,
            })
            .collect())
    }
}
