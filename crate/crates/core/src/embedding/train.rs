//! Skip-gram with negative sampling over word + character n-gram inputs.

use std::sync::atomic::{AtomicU64, Ordering};

use rand::distributions::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::WeightedAliasIndex;

use super::{build_vocab, subword, EmbeddingModel, Hyperparams, SubwordTable};
use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::scalar::{axpy, dot, Scalar};

/// Exponent applied to unigram counts for the negative-sampling
/// distribution.
const NEGATIVE_POWER: f64 = 0.75;

/// Row-major matrix shared between training workers without locks.
///
/// Workers race on rows the same way asynchronous SGD implementations do;
/// with one worker every access is sequential.
struct SharedMatrix<F> {
    ptr: *mut F,
    dim: usize,
}

// SAFETY: the pointer targets a Vec that outlives every worker (scoped
// threads). Concurrent row updates are the intended lock-free SGD scheme.
unsafe impl<F: Send> Send for SharedMatrix<F> {}
unsafe impl<F: Sync> Sync for SharedMatrix<F> {}

impl<F> SharedMatrix<F> {
    fn new(data: &mut [F], dim: usize) -> Self {
        SharedMatrix {
            ptr: data.as_mut_ptr(),
            dim,
        }
    }

    #[allow(clippy::mut_from_ref)]
    fn row(&self, r: usize) -> &mut [F] {
        // SAFETY: callers only pass row indices below the row count the
        // matrix was created with, and never hold two rows of the same
        // matrix at once.
        unsafe { std::slice::from_raw_parts_mut(self.ptr.add(r * self.dim), self.dim) }
    }
}

struct Shared<'a, F> {
    input: SharedMatrix<F>,
    output: SharedMatrix<F>,
    /// Input row ids (word row first, then offset n-gram rows) per word.
    inputs_of: &'a [Vec<usize>],
    keep_prob: &'a [f64],
    negatives: &'a WeightedAliasIndex<f64>,
    vocab_size: usize,
    hp: &'a Hyperparams,
    progress: AtomicU64,
    scheduled: f64,
}

/// Trains with a single worker; fully reproducible for a fixed seed.
pub fn train<F: Scalar>(c: &Corpus, h: &Hyperparams) -> Result<EmbeddingModel<F>> {
    train_with_threads(c, h, 1)
}

/// Trains with `threads` asynchronous workers. `threads <= 1` is the
/// deterministic single-worker mode.
pub fn train_with_threads<F: Scalar>(c: &Corpus, h: &Hyperparams, threads: usize) -> Result<EmbeddingModel<F>> {
    h.validate()?;
    let vocab = build_vocab(c, h)?;
    let total_tokens = c.token_count();
    if total_tokens < h.window + 1 {
        return Err(Error::CorpusTooShort {
            tokens: total_tokens,
            needed: h.window + 1,
        });
    }
    let dim = h.dim;
    let n_words = vocab.len();

    let mut rng = ChaCha8Rng::seed_from_u64(h.rng_seed);
    let bound = 1.0 / dim as f64;
    let mut input: Vec<F> = (0..(n_words + h.bucket_count) * dim)
        .map(|_| F::of(rng.gen_range(-bound..bound)))
        .collect();
    let mut output = vec![F::zero(); n_words * dim];

    let inputs_of: Vec<Vec<usize>> = vocab
        .words()
        .iter()
        .enumerate()
        .map(|(id, w)| {
            std::iter::once(id)
                .chain(
                    subword::subword_buckets(w, h.min_n, h.max_n, h.bucket_count)
                        .into_iter()
                        .map(|b| n_words + b),
                )
                .collect()
        })
        .collect();
    let total = vocab.total_tokens() as f64;
    let keep_prob: Vec<f64> = vocab
        .counts()
        .iter()
        .map(|&n| {
            let r = h.subsample_threshold / (n as f64 / total);
            r.sqrt() + r
        })
        .collect();
    let negatives = WeightedAliasIndex::new(
        vocab
            .counts()
            .iter()
            .map(|&n| (n as f64).powf(NEGATIVE_POWER))
            .collect(),
    )
    .map_err(|e| Error::Hyperparams(format!("negative sampling table: {e}")))?;

    let docs: Vec<(Vec<usize>, u64)> = c
        .documents
        .iter()
        .filter(|d| !d.is_empty())
        .map(|d| {
            let ids = d.tokens.iter().filter_map(|t| vocab.id(t)).collect();
            (ids, d.len() as u64)
        })
        .collect();

    {
        let shared = Shared {
            input: SharedMatrix::new(&mut input, dim),
            output: SharedMatrix::new(&mut output, dim),
            inputs_of: &inputs_of,
            keep_prob: &keep_prob,
            negatives: &negatives,
            vocab_size: n_words,
            hp: h,
            progress: AtomicU64::new(0),
            scheduled: (h.epochs as f64) * total_tokens as f64,
        };
        for epoch in 0..h.epochs {
            let workers = threads.max(1).min(docs.len().max(1));
            if workers == 1 {
                let mut rng = ChaCha8Rng::seed_from_u64(worker_seed(h.rng_seed, epoch, 0));
                run_worker(&shared, &docs, &mut rng);
            } else {
                let chunk = docs.len().div_ceil(workers);
                std::thread::scope(|s| {
                    for (w, part) in docs.chunks(chunk).enumerate() {
                        let shared = &shared;
                        s.spawn(move || {
                            let mut rng = ChaCha8Rng::seed_from_u64(worker_seed(h.rng_seed, epoch, w));
                            run_worker(shared, part, &mut rng);
                        });
                    }
                });
            }
            let finite = |m: &SharedMatrix<F>, rows: usize| (0..rows).all(|r| m.row(r).iter().all(|x| x.is_finite()));
            if !finite(&shared.input, n_words + h.bucket_count) || !finite(&shared.output, n_words) {
                return Err(Error::NonFinite { epoch: epoch + 1 });
            }
        }
    }

    // move the small word block out instead of the large bucket block, so the
    // bucket rows are not duplicated
    let word_rows: Vec<F> = input[..n_words * dim].to_vec();
    input.drain(..n_words * dim);
    input.shrink_to_fit();
    let subword_data = input;
    let table = SubwordTable {
        bucket_count: h.bucket_count,
        min_n: h.min_n,
        max_n: h.max_n,
        dim,
        data: subword_data,
    };
    EmbeddingModel::from_parts(vocab, word_rows, Some(table), h.clone())
}

fn worker_seed(seed: u64, epoch: usize, worker: usize) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ ((epoch as u64) << 32) ^ (worker as u64).wrapping_add(1)
}

fn run_worker<F: Scalar>(sh: &Shared<'_, F>, docs: &[(Vec<usize>, u64)], rng: &mut ChaCha8Rng) {
    let h = sh.hp;
    let lr0 = h.learning_rate;
    let mut kept = Vec::new();
    let mut hidden = vec![F::zero(); h.dim];
    let mut grad = vec![F::zero(); h.dim];
    for (ids, n_tokens) in docs {
        let done = sh.progress.load(Ordering::Relaxed) as f64;
        let lr = F::of((lr0 * (1.0 - done / sh.scheduled)).max(0.0));

        kept.clear();
        kept.extend(ids.iter().copied().filter(|&id| rng.gen::<f64>() < sh.keep_prob[id]));
        for i in 0..kept.len() {
            let radius = rng.gen_range(1..=h.window);
            let lo = i.saturating_sub(radius);
            let hi = (i + radius).min(kept.len() - 1);
            let inputs = &sh.inputs_of[kept[i]];
            for (j, &ctx) in kept.iter().enumerate().take(hi + 1).skip(lo) {
                if j != i {
                    sgd_step(sh, inputs, ctx, lr, rng, &mut hidden, &mut grad);
                }
            }
        }
        sh.progress.fetch_add(*n_tokens, Ordering::Relaxed);
    }
}

fn sgd_step<F: Scalar>(
    sh: &Shared<'_, F>,
    inputs: &[usize],
    target: usize,
    lr: F,
    rng: &mut ChaCha8Rng,
    hidden: &mut [F],
    grad: &mut [F],
) {
    hidden.iter_mut().for_each(|x| *x = F::zero());
    for &r in inputs {
        axpy(F::one(), sh.input.row(r), hidden);
    }
    let inv = F::one() / F::of(inputs.len() as f64);
    hidden.iter_mut().for_each(|x| *x *= inv);
    grad.iter_mut().for_each(|x| *x = F::zero());

    binary_logistic(sh, hidden, grad, target, F::one(), lr);
    if sh.vocab_size > 1 {
        for _ in 0..sh.hp.negatives {
            let neg = loop {
                let n = sh.negatives.sample(rng);
                if n != target {
                    break n;
                }
            };
            binary_logistic(sh, hidden, grad, neg, F::zero(), lr);
        }
    }
    for &r in inputs {
        axpy(F::one(), grad, sh.input.row(r));
    }
}

#[inline]
fn binary_logistic<F: Scalar>(sh: &Shared<'_, F>, hidden: &[F], grad: &mut [F], target: usize, label: F, lr: F) {
    let out = sh.output.row(target);
    let score = sigmoid(dot(hidden, out));
    let alpha = lr * (label - score);
    axpy(alpha, out, grad);
    axpy(alpha, hidden, out);
}

#[inline]
fn sigmoid<F: Scalar>(x: F) -> F {
    F::one() / (F::one() + (-x).exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Document;
    use crate::embedding::cosine_distance;

    fn small_hp(seed: u64) -> Hyperparams {
        Hyperparams {
            dim: 16,
            epochs: 5,
            min_count: 1,
            bucket_count: 1000,
            rng_seed: seed,
            ..Hyperparams::default()
        }
    }

    #[test]
    fn single_worker_is_reproducible() {
        let c = Corpus::new(
            (0..50)
                .map(|i| Document::from_line(&format!("a b c d{} e f g", i % 7)))
                .collect(),
            "t",
        );
        let m1: EmbeddingModel<f32> = train(&c, &small_hp(9)).unwrap();
        let m2: EmbeddingModel<f32> = train(&c, &small_hp(9)).unwrap();
        for id in 0..m1.vocab().len() {
            assert_eq!(m1.vector(id), m2.vector(id));
        }
        assert_eq!(m1.subwords().unwrap().data, m2.subwords().unwrap().data);
        let m3: EmbeddingModel<f32> = train(&c, &small_hp(10)).unwrap();
        assert_ne!(m1.vector(0), m3.vector(0));
    }

    #[test]
    fn identical_tokens_stay_finite() {
        let c = Corpus::new(vec![Document::from_line(&"zz ".repeat(200))], "t");
        let m: EmbeddingModel<f64> = train(&c, &small_hp(1)).unwrap();
        assert_eq!(m.vocab().len(), 1);
        assert!(m.vector(0).iter().all(|x| x.is_finite()));
    }

    #[test]
    fn too_short_corpus() {
        let c = Corpus::new(vec![Document::from_line("a b c")], "t");
        assert!(matches!(
            train::<f32>(&c, &small_hp(1)),
            Err(Error::CorpusTooShort { tokens: 3, needed: 6 })
        ));
    }

    #[test]
    fn multi_worker_trains() {
        let c = Corpus::new(
            (0..40)
                .map(|i| Document::from_line(&format!("p q x{} r{}", i % 5, i % 3)))
                .collect(),
            "t",
        );
        let m: EmbeddingModel<f32> = train_with_threads(&c, &small_hp(4), 3).unwrap();
        assert!(m.vector(0).iter().all(|x| x.is_finite()));
    }

    /// Co-occurring tokens end up closer than a token that is never seen
    /// with them, in at least 9 of 10 seeds.
    #[test]
    fn cooccurrence_pulls_words_together() {
        let mut lines = Vec::new();
        for i in 0..300 {
            lines.push(format!("pqq qpp u{} v{}", i % 11, i % 13));
            lines.push(format!("rrz w{} y{} zz{}", i % 17, i % 7, i % 5));
        }
        let c = Corpus::new(lines.iter().map(|l| Document::from_line(l)).collect(), "t");
        let mut wins = 0;
        for seed in 0..10 {
            let h = Hyperparams {
                dim: 20,
                min_count: 1,
                bucket_count: 5000,
                // every token is frequent at this size; keep them all
                subsample_threshold: 1.0,
                rng_seed: seed,
                ..Hyperparams::default()
            };
            let m: EmbeddingModel<f32> = train(&c, &h).unwrap();
            let p = m.embed_word("pqq").unwrap();
            let q = m.embed_word("qpp").unwrap();
            let r = m.embed_word("rrz").unwrap();
            if cosine_distance(&p, &q).unwrap() < cosine_distance(&p, &r).unwrap() {
                wins += 1;
            }
        }
        assert!(wins >= 9, "only {wins}/10 seeds");
    }
}
