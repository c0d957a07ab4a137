//! Cross-lingual document operations: word-by-word translated document
//! embeddings with a mutual nearest-neighbor filter, nearest-neighbor
//! expansion of a seed set inside a document pool, and sentence retrieval
//! evaluation.

use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::io::Write;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::corpus::{decode_lines, Document};
use crate::embedding::{cosine_distance, EmbeddingModel, Neighbor};
use crate::error::{Error, Result};
use crate::langid::Label;
use crate::lexicon::{check_ks, Constraints, EvalReport, Translator};
use crate::scalar::{axpy, Scalar};

/// Neighbors fetched per seed document during sampling.
pub const DEFAULT_SAMPLE_SIZE: usize = 5;
/// Translation candidates per word when translating documents.
pub const DEFAULT_N: usize = 10;

/// Mean of unit word vectors for one document.
#[derive(Clone, Debug, PartialEq)]
pub struct DocEmbedding<F> {
    pub vector: Vec<F>,
    pub doc_id: Option<usize>,
    /// Tokens that contributed nothing (unembeddable or untranslatable).
    pub skipped: usize,
}

fn mean<F: Scalar>(vectors: &[Vec<F>], dim: usize) -> Vec<F> {
    let mut out = vec![F::zero(); dim];
    for v in vectors {
        axpy(F::one(), v, &mut out);
    }
    let n = F::of(vectors.len() as f64);
    out.iter_mut().for_each(|x| *x /= n);
    out
}

/// Mean of the unit-normalized embeddings of every embeddable token.
pub fn document_embedding<F: Scalar>(m: &EmbeddingModel<F>, doc: &Document) -> Result<DocEmbedding<F>> {
    let mut vectors = Vec::with_capacity(doc.len());
    let mut skipped = 0;
    for t in &doc.tokens {
        match m.embed_unit(t) {
            Ok(v) => vectors.push(v),
            Err(_) => skipped += 1,
        }
    }
    if vectors.is_empty() {
        return Err(Error::EmptyDocument);
    }
    Ok(DocEmbedding {
        vector: mean(&vectors, m.dim()),
        doc_id: None,
        skipped,
    })
}

/// Targets among the top-`n` translations of `w` whose own top-`n` back
/// translations contain `w`, in forward rank order.
pub fn mutual_candidates<F: Scalar>(
    tr: &Translator<'_, F>,
    back: &Translator<'_, F>,
    w: &str,
    n: usize,
) -> Result<Vec<Neighbor<F>>> {
    let forward = tr.top_translations(w, n)?;
    Ok(forward
        .into_iter()
        .filter(|cand| {
            back.top_translations(&cand.word, n)
                .map(|bt| bt.iter().any(|b| b.word == w))
                .unwrap_or(false)
        })
        .collect())
}

/// How one mutual candidate is picked per source word.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SelectionPolicy {
    /// Uniformly at random (more diverse output).
    Random,
    /// Always the closest candidate.
    Top,
}

impl SelectionPolicy {
    pub fn name(self) -> &'static str {
        match self {
            SelectionPolicy::Random => "random",
            SelectionPolicy::Top => "top",
        }
    }
}

impl std::fmt::Display for SelectionPolicy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for SelectionPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "random" => Ok(SelectionPolicy::Random),
            "top" => Ok(SelectionPolicy::Top),
            _ => Err(Error::Precondition(format!(
                "unknown policy {s:?}, expected random or top"
            ))),
        }
    }
}

/// Embedding of a document translated word by word into the target
/// language.
///
/// Tokens already labeled with the target language keep their own unit
/// vector. Every other token (source-labeled or abstained) is replaced by one
/// of its mutual candidates, or dropped when it has none.
pub fn translate_embedding<F: Scalar>(
    tr: &Translator<'_, F>,
    doc: &Document,
    n: usize,
    policy: SelectionPolicy,
    rng_seed: u64,
) -> Result<DocEmbedding<F>> {
    let back = tr.reversed();
    translate_embedding_with(tr, &back, doc, n, policy, rng_seed)
}

fn translate_embedding_with<F: Scalar>(
    tr: &Translator<'_, F>,
    back: &Translator<'_, F>,
    doc: &Document,
    n: usize,
    policy: SelectionPolicy,
    rng_seed: u64,
) -> Result<DocEmbedding<F>> {
    if doc.is_empty() {
        return Err(Error::Precondition("document is empty".into()));
    }
    let m = tr.model();
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut collected = Vec::new();
    let mut skipped = 0;
    for w in &doc.tokens {
        if tr.partition().label(w) == Label::Lang(tr.target_lang()) {
            match m.embed_unit(w) {
                Ok(v) => collected.push(v),
                Err(_) => skipped += 1,
            }
            continue;
        }
        let cands = mutual_candidates(tr, back, w, n).unwrap_or_default();
        let pick = match policy {
            SelectionPolicy::Top => cands.first(),
            SelectionPolicy::Random => cands.choose(&mut rng),
        };
        match pick {
            Some(c) => collected.push(m.unit_vector(c.id).to_vec()),
            None => skipped += 1,
        }
    }
    if collected.is_empty() {
        return Err(Error::Untranslatable);
    }
    Ok(DocEmbedding {
        vector: mean(&collected, m.dim()),
        doc_id: None,
        skipped,
    })
}

/// Documents with precomputed embeddings, addressed by their line number in
/// the pool file.
#[derive(Clone, Debug, Default)]
pub struct SamplePool<F> {
    pub ids: Vec<usize>,
    pub documents: Vec<Document>,
    pub embeddings: Vec<Vec<F>>,
}

impl<F: Scalar> SamplePool<F> {
    /// Embeds every document; documents without an embeddable token are left
    /// out of the pool.
    pub fn build(m: &EmbeddingModel<F>, docs: &[Document]) -> Self {
        let embedded: Vec<Option<Vec<F>>> = docs
            .par_iter()
            .map(|d| document_embedding(m, d).ok().map(|e| e.vector))
            .collect();
        let mut pool = SamplePool::default();
        for (i, (d, e)) in docs.iter().zip(embedded).enumerate() {
            if let Some(e) = e {
                pool.ids.push(i);
                pool.documents.push(d.clone());
                pool.embeddings.push(e);
            }
        }
        pool
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    fn position(&self, id: usize) -> Option<usize> {
        self.ids.binary_search(&id).ok()
    }

    /// Pool embeddings as a text matrix: `<rows> <dim>` then `id v1 .. v_dim`
    /// per document.
    pub fn write_embeddings(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut out = Vec::new();
        let dim = self.embeddings.first().map_or(0, Vec::len);
        let io = |e| Error::io(path, e);
        writeln!(out, "{} {}", self.len(), dim).map_err(io)?;
        for (id, e) in self.ids.iter().zip(&self.embeddings) {
            write!(out, "{id}").map_err(io)?;
            for x in e {
                write!(out, " {x}").map_err(io)?;
            }
            writeln!(out).map_err(io)?;
        }
        fs::write(path, out).map_err(io)
    }

    /// Restores embeddings written by [`write_embeddings`](Self::write_embeddings)
    /// for the given pool documents.
    pub fn with_embeddings(docs: &[Document], path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let what = path.display().to_string();
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        let lines = decode_lines(&bytes)?;
        let mut pool = SamplePool::default();
        for (i, line) in lines.iter().enumerate().skip(1) {
            let mut f = line.split(' ');
            let id: usize = f
                .next()
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| Error::parse(&what, i + 1, "bad document id"))?;
            let doc = docs
                .get(id)
                .ok_or_else(|| Error::parse(&what, i + 1, format!("id {id} beyond the pool")))?;
            let v = f
                .map(|x| x.parse::<F>())
                .collect::<std::result::Result<Vec<F>, _>>()
                .map_err(|_| Error::parse(&what, i + 1, "bad number"))?;
            if pool.ids.last().is_some_and(|&last| last >= id) {
                return Err(Error::parse(&what, i + 1, "ids must increase"));
            }
            pool.ids.push(id);
            pool.documents.push(doc.clone());
            pool.embeddings.push(v);
        }
        Ok(pool)
    }
}

/// A seed for [`nn_sample`]: an embedding, plus its pool id when the seed is
/// itself a pool document.
#[derive(Clone, Debug)]
pub struct SeedDoc<F> {
    pub embedding: Vec<F>,
    pub pool_id: Option<usize>,
}

/// Nearest-neighbor expansion of a seed set inside a pool.
///
/// Seeds are processed in order. For each one the pool is walked outward by
/// increasing cosine distance (ties by pool id); each fetched document not yet
/// sampled and not a seed is added, until `size` documents have been added for
/// that seed. Returns pool ids in the order they were added.
pub fn nn_sample<F: Scalar>(seeds: &[SeedDoc<F>], pool: &SamplePool<F>, size: usize) -> Result<Vec<usize>> {
    let seed_ids: HashSet<usize> = seeds.iter().filter_map(|s| s.pool_id).collect();
    let mut expanded: Vec<usize> = Vec::with_capacity(seeds.len() * size);
    let mut taken: HashSet<usize> = HashSet::new();
    for (si, seed) in seeds.iter().enumerate() {
        let mut order: Vec<(F, usize)> = pool
            .ids
            .iter()
            .zip(&pool.embeddings)
            .map(|(&id, e)| Ok((cosine_distance(&seed.embedding, e)?, id)))
            .collect::<Result<_>>()?;
        order.sort_unstable_by(|a, b| a.0.partial_cmp(&b.0).expect("finite distances").then(a.1.cmp(&b.1)));
        let mut cursor = order.iter();
        let mut added = 0;
        while added < size {
            let Some(&(_, id)) = cursor.next() else {
                return Err(Error::PoolExhausted {
                    seed: si,
                    added,
                    wanted: size,
                });
            };
            if !seed_ids.contains(&id) && taken.insert(id) {
                expanded.push(id);
                added += 1;
            }
        }
    }
    Ok(expanded)
}

/// Sentence retrieval: translate each source document, rank the pool by
/// cosine distance (ties by pool id), and score whether the true counterpart
/// lands in the top K. Untranslatable sources count as misses.
#[allow(clippy::too_many_arguments)]
pub fn retrieval_eval<F: Scalar>(
    tr: &Translator<'_, F>,
    sources: &[Document],
    pool: &SamplePool<F>,
    gold: &BTreeMap<usize, usize>,
    n: usize,
    policy: SelectionPolicy,
    ks: &[usize],
    rng_seed: u64,
    dataset: &str,
) -> Result<RetrievalOutcome> {
    check_ks(ks, pool.len())?;
    for &target in gold.values() {
        if pool.position(target).is_none() {
            return Err(Error::MissingGoldId(target));
        }
    }
    let back = tr.reversed();
    let evaluated: Vec<(usize, usize)> = gold
        .iter()
        .filter(|(s, _)| **s < sources.len())
        .map(|(s, t)| (*s, *t))
        .collect();
    let ranks: Vec<Option<usize>> = evaluated
        .par_iter()
        .map(|&(s, t)| {
            let seed = rng_seed.wrapping_add(s as u64);
            let emb = translate_embedding_with(tr, &back, &sources[s], n, policy, seed).ok()?;
            let true_pos = pool.position(t).expect("checked above");
            let d_true = cosine_distance(&emb.vector, &pool.embeddings[true_pos]).ok()?;
            let mut rank = 0;
            for (id, e) in pool.ids.iter().zip(&pool.embeddings) {
                let d = cosine_distance(&emb.vector, e).ok()?;
                if d < d_true || (d == d_true && *id < t) {
                    rank += 1;
                }
            }
            Some(rank)
        })
        .collect();
    let n_eval = evaluated.len();
    if n_eval == 0 {
        return Err(Error::Precondition("no source document has a gold counterpart".into()));
    }
    let p_at = ks
        .iter()
        .map(|&k| {
            let hits = ranks.iter().filter(|r| r.is_some_and(|r| r < k)).count();
            (k, hits as f64 / n_eval as f64)
        })
        .collect();
    Ok(RetrievalOutcome {
        report: EvalReport {
            direction: tr.direction().to_string(),
            dataset: dataset.to_string(),
            constraints: Constraints {
                source_band: None,
                target_min_freq: tr.target_min_freq(),
                n,
                policy: Some(policy.name().to_string()),
            },
            n_evaluated: n_eval,
            n_skipped: sources.len().saturating_sub(n_eval),
            p_at,
        },
        untranslatable: ranks.iter().filter(|r| r.is_none()).count(),
        ranks,
    })
}

#[derive(Clone, Debug)]
pub struct RetrievalOutcome {
    pub report: EvalReport,
    /// 0-based rank of the true counterpart per evaluated source (gold order);
    /// `None` when the source could not be translated.
    pub ranks: Vec<Option<usize>>,
    pub untranslatable: usize,
}

/// Reads a gold id map: `source_line<TAB>target_line`, 0-based.
pub fn read_id_map(path: impl AsRef<Path>) -> Result<BTreeMap<usize, usize>> {
    let path = path.as_ref();
    let what = path.display().to_string();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let mut map = BTreeMap::new();
    for (i, line) in decode_lines(&bytes)?.into_iter().enumerate() {
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let bad = || Error::parse(&what, i + 1, "expected source_line<TAB>target_line");
        let (a, b) = line.split_once('\t').ok_or_else(bad)?;
        let a: usize = a.trim().parse().map_err(|_| bad())?;
        let b: usize = b.trim().parse().map_err(|_| bad())?;
        if map.insert(a, b).is_some() {
            return Err(Error::parse(&what, i + 1, format!("source {a} mapped twice")));
        }
    }
    Ok(map)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedding::{Hyperparams, Vocab};
    use crate::langid::LanguagePartition;
    use proptest::prelude::*;
    use rand::Rng;
    use std::collections::HashMap;

    fn model(words: &[(&str, Vec<f64>)]) -> EmbeddingModel<f64> {
        let vocab = Vocab::from_ordered(words.iter().map(|w| (w.0.to_string(), 10)).collect(), 100).unwrap();
        let h = Hyperparams {
            dim: words[0].1.len(),
            ..Hyperparams::default()
        };
        EmbeddingModel::from_parts(vocab, words.iter().flat_map(|w| w.1.clone()).collect(), None, h).unwrap()
    }

    fn doc(s: &str) -> Document {
        Document::from_line(s)
    }

    #[test]
    fn document_embedding_basics() {
        let m = model(&[("a", vec![3.0, 0.0]), ("b", vec![0.0, 1.0])]);
        let e = document_embedding(&m, &doc("a")).unwrap();
        assert_eq!(e.vector, [1.0, 0.0]);
        let ab = document_embedding(&m, &doc("a b")).unwrap();
        assert_eq!(ab.vector, document_embedding(&m, &doc("b a")).unwrap().vector);
        assert_eq!(ab.vector, document_embedding(&m, &doc("a b a b")).unwrap().vector);
        let skipped = document_embedding(&m, &doc("a zzz")).unwrap();
        assert_eq!(skipped.skipped, 1);
        assert!(matches!(document_embedding(&m, &doc("zzz")), Err(Error::EmptyDocument)));
    }

    /// l1: s*, l2: t*. s1<->t1 mutual; h is an l2 hub close to everything l1.
    fn hub_setup() -> (EmbeddingModel<f64>, LanguagePartition) {
        let words = [
            ("s1", vec![1.0, 0.2, 0.0], "l1"),
            ("s2", vec![1.0, -0.2, 0.0], "l1"),
            ("s3", vec![1.0, 0.0, 0.9], "l1"),
            ("t1", vec![0.5, 0.2, 0.0], "l2"),
            ("hub", vec![0.9, 0.0, 0.4], "l2"),
            ("t9", vec![0.0, 1.0, 0.0], "l2"),
        ];
        let m = model(&words.iter().map(|w| (w.0, w.1.clone())).collect::<Vec<_>>());
        let counts: HashMap<String, u64> = words.iter().map(|w| (w.0.to_string(), 10)).collect();
        let p = LanguagePartition::from_labels(words.iter().map(|w| (w.0, w.2)), &counts);
        (m, p)
    }

    #[test]
    fn hub_without_return_is_filtered() {
        let (m, p) = hub_setup();
        let tr = Translator::new(&m, &p, "l1:l2".parse().unwrap(), 0).unwrap();
        let back = tr.reversed();
        // s2's nearest target is the hub, whose nearest source is s3
        assert_eq!(tr.translate_word("s2").unwrap().word, "hub");
        assert_eq!(back.translate_word("hub").unwrap().word, "s3");
        let c = mutual_candidates(&tr, &back, "s2", 1).unwrap();
        assert!(c.is_empty());
        let c = mutual_candidates(&tr, &back, "s1", 1).unwrap();
        assert_eq!(c[0].word, "t1");
    }

    #[test]
    fn translate_embedding_branches() {
        let (m, p) = hub_setup();
        let tr = Translator::new(&m, &p, "l1:l2".parse().unwrap(), 0).unwrap();
        // already-target document: its own mean of unit vectors
        let d = doc("t1 t9");
        let e = translate_embedding(&tr, &d, 1, SelectionPolicy::Random, 5).unwrap();
        assert_eq!(e.vector, document_embedding(&m, &d).unwrap().vector);
        // nothing translatable
        assert!(matches!(
            translate_embedding(&tr, &doc("s2 unknown"), 1, SelectionPolicy::Top, 0),
            Err(Error::Untranslatable)
        ));
        // TOP ignores the seed
        let d = doc("s1 s2 s3 t9");
        let a = translate_embedding(&tr, &d, 3, SelectionPolicy::Top, 1).unwrap();
        let b = translate_embedding(&tr, &d, 3, SelectionPolicy::Top, 999).unwrap();
        assert_eq!(a, b);
        let norm: f64 = a.vector.iter().map(|x| x * x).sum::<f64>().sqrt();
        assert!(norm <= 1.0 + 1e-12);
    }

    fn pool_from(vectors: Vec<Vec<f64>>) -> SamplePool<f64> {
        SamplePool {
            ids: (0..vectors.len()).collect(),
            documents: vec![Document::default(); vectors.len()],
            embeddings: vectors,
        }
    }

    #[test]
    fn single_seed_takes_nearest() {
        let pool = pool_from((0..10).map(|i| vec![1.0, i as f64 * 0.1]).collect());
        let seed = SeedDoc {
            embedding: vec![1.0, 0.0],
            pool_id: None,
        };
        assert_eq!(
            nn_sample(std::slice::from_ref(&seed), &pool, 5).unwrap(),
            [0, 1, 2, 3, 4]
        );
        assert!(matches!(
            nn_sample(&[seed], &pool, 11),
            Err(Error::PoolExhausted { seed: 0, added: 10, .. })
        ));
    }

    /// Two seeds at nearly the same spot: the second skips the five documents
    /// the first one took.
    #[test]
    fn second_seed_skips_shared_neighbors() {
        let pool = pool_from((0..12).map(|i| vec![1.0, i as f64 * 0.1]).collect());
        let seeds = [
            SeedDoc {
                embedding: vec![1.0, 0.0],
                pool_id: None,
            },
            SeedDoc {
                embedding: vec![1.0, 0.01],
                pool_id: None,
            },
        ];
        // hand trace: seed 0 takes 0..5; seed 1 walks 0,1,2,3,4 (taken) then 5..10
        assert_eq!(nn_sample(&seeds, &pool, 5).unwrap(), [0, 1, 2, 3, 4, 5, 6, 7, 8, 9]);
    }

    #[test]
    fn seed_documents_are_never_sampled() {
        let pool = pool_from((0..8).map(|i| vec![1.0, i as f64 * 0.1]).collect());
        let seeds = [SeedDoc {
            embedding: vec![1.0, 0.0],
            pool_id: Some(0),
        }];
        assert_eq!(nn_sample(&seeds, &pool, 3).unwrap(), [1, 2, 3]);
    }

    #[test]
    fn retrieval_on_tiny_pool() {
        let (m, p) = hub_setup();
        let tr = Translator::new(&m, &p, "l1:l2".parse().unwrap(), 0).unwrap();
        let pool_docs = vec![doc("t1"), doc("t9")];
        let pool = SamplePool::build(&m, &pool_docs);
        let sources = vec![doc("s1"), doc("t9")];
        let gold: BTreeMap<usize, usize> = [(0, 0), (1, 1)].into_iter().collect();
        let out = retrieval_eval(&tr, &sources, &pool, &gold, 1, SelectionPolicy::Top, &[1, 2], 0, "t").unwrap();
        assert_eq!(out.report.p(1), Some(1.0));
        assert_eq!(out.report.p(2), Some(1.0));
        let missing: BTreeMap<usize, usize> = [(0, 7)].into_iter().collect();
        assert!(matches!(
            retrieval_eval(&tr, &sources, &pool, &missing, 1, SelectionPolicy::Top, &[1], 0, "t"),
            Err(Error::MissingGoldId(7))
        ));
    }

    #[test]
    fn pool_embeddings_round_trip() {
        let m = model(&[("a", vec![3.0, 0.5]), ("b", vec![0.1, 1.0])]);
        let docs = vec![doc("a b"), doc("zzz"), doc("b")];
        let pool = SamplePool::build(&m, &docs);
        assert_eq!(pool.ids, [0, 2]);
        let dir = tempfile::tempdir().unwrap();
        let f = dir.path().join("pool.emb");
        pool.write_embeddings(&f).unwrap();
        let back = SamplePool::<f64>::with_embeddings(&docs, &f).unwrap();
        assert_eq!(back.ids, pool.ids);
        assert_eq!(back.embeddings, pool.embeddings);
    }

    /// Literal transcription of the sampling pseudocode: a fresh linear scan
    /// per fetch for the nearest document strictly after the last fetched
    /// `(distance, id)`.
    pub(crate) fn nn_sample_oracle(seeds: &[SeedDoc<f64>], pool: &SamplePool<f64>, size: usize) -> Option<Vec<usize>> {
        let seed_set: Vec<usize> = seeds.iter().filter_map(|s| s.pool_id).collect();
        let mut e: Vec<usize> = Vec::new();
        for c in seeds {
            let mut count = 0;
            let mut dist = 0.0;
            let mut last: Option<usize> = None;
            while count < size {
                let mut best: Option<(f64, usize)> = None;
                for (&id, emb) in pool.ids.iter().zip(&pool.embeddings) {
                    let d = cosine_distance(&c.embedding, emb).unwrap();
                    let after = d > dist || (d == dist && last.is_none_or(|l| id > l));
                    if after && best.is_none_or(|(bd, bi)| d < bd || (d == bd && id < bi)) {
                        best = Some((d, id));
                    }
                }
                let (d, neighbor) = best?;
                dist = d;
                last = Some(neighbor);
                if !e.contains(&neighbor) && !seed_set.contains(&neighbor) {
                    e.push(neighbor);
                    count += 1;
                }
            }
        }
        Some(e)
    }

    proptest! {
        #[test]
        fn nn_sample_matches_oracle(seed in 0u64..10_000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let n_pool = rng.gen_range(1..=50);
            let dim = 3;
            // a few exact duplicates exercise the id tie-break
            let mut vectors: Vec<Vec<f64>> = (0..n_pool)
                .map(|_| (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect())
                .collect();
            for i in 1..n_pool {
                if rng.gen_bool(0.1) {
                    vectors[i] = vectors[rng.gen_range(0..i)].clone();
                }
            }
            let pool = pool_from(vectors);
            let n_seeds = rng.gen_range(1..=4);
            let seeds: Vec<SeedDoc<f64>> = (0..n_seeds)
                .map(|_| {
                    if rng.gen_bool(0.3) {
                        let id = rng.gen_range(0..n_pool);
                        SeedDoc { embedding: pool.embeddings[id].clone(), pool_id: Some(id) }
                    } else {
                        SeedDoc { embedding: (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect(), pool_id: None }
                    }
                })
                .collect();
            let size = rng.gen_range(1..=5);
            let got = nn_sample(&seeds, &pool, size).ok();
            prop_assert_eq!(got, nn_sample_oracle(&seeds, &pool, size));
        }
    }
}
