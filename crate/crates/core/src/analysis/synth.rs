//! Synthetic two-language corpus with known ground truth.
//!
//! Both languages render the same latent concepts. Each concept belongs to one
//! topic; documents walk through a topic, hopping to a concept's collocates
//! or resampling from the topic's Zipf weights. A set of planted concepts is
//! borrowed: in a document of one language its slot is rendered with the
//! other language's word at the borrowing rate, and may be followed by a
//! numeral shared by both languages. Borrowed words are the only tokens the
//! two languages share, so they are what aligns the joint embedding space.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson, WeightedAliasIndex};
use serde::{Deserialize, Serialize};

use crate::corpus::{mix_corpora, Corpus, Document, TranslationPairList};
use crate::error::{Error, Result};
use crate::langid::SeedSet;
use crate::lexicon::GoldDictionary;

const LETTERS: [&str; 2] = ["abcdefghijklm", "nopqrstuvwxyz"];
const WORD_LEN: std::ops::RangeInclusive<usize> = 4..=8;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticSpec {
    pub languages: [String; 2],
    /// Words per language; concepts below the smaller size exist in both.
    pub alphabet_sizes: [usize; 2],
    pub n_topics: usize,
    pub docs_per_language: usize,
    /// Poisson mean of the concept slots per document (clipped to >= 2).
    pub mean_doc_len: f64,
    pub zipf_exponent: f64,
    pub collocates: usize,
    pub collocation_rate: f64,
    pub n_planted: usize,
    pub borrowing_rate: f64,
    pub numeral_rate: f64,
    pub seeds_per_language: usize,
    /// Documents rendered in both languages for retrieval tests.
    pub n_parallel: usize,
    /// Word forms, planted concepts and numerals.
    pub lexicon_seed: u64,
    /// Topic structure and documents.
    pub rng_seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            languages: ["l1".into(), "l2".into()],
            alphabet_sizes: [2000, 2000],
            n_topics: 20,
            docs_per_language: 10_000,
            mean_doc_len: 12.0,
            zipf_exponent: 1.0,
            collocates: 4,
            collocation_rate: 0.7,
            n_planted: 150,
            borrowing_rate: 0.15,
            numeral_rate: 0.02,
            seeds_per_language: 20,
            n_parallel: 200,
            lexicon_seed: 0,
            rng_seed: 0,
        }
    }
}

impl SyntheticSpec {
    /// Same spec with both seeds set to `seed`.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.lexicon_seed = seed;
        self.rng_seed = seed;
        self
    }

    fn shared(&self) -> usize {
        self.alphabet_sizes[0].min(self.alphabet_sizes[1])
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InfeasibleSpec(m));
        if self.languages[0] == self.languages[1] || self.languages.iter().any(|l| l.is_empty()) {
            return bad("language names must be distinct and non-empty".into());
        }
        let concepts = self.alphabet_sizes[0].max(self.alphabet_sizes[1]);
        if self.n_planted > self.shared() {
            return bad(format!(
                "{} planted pairs but the smaller alphabet has {} words",
                self.n_planted,
                self.shared()
            ));
        }
        if self.n_planted + self.seeds_per_language > self.shared() {
            return bad("not enough unplanted shared concepts for the seeds".into());
        }
        if self.seeds_per_language == 0 {
            return bad("at least one seed per language is needed".into());
        }
        if self.n_topics == 0 || self.n_topics > concepts {
            return bad(format!("{} topics for {concepts} concepts", self.n_topics));
        }
        if self.docs_per_language == 0 {
            return bad("no documents requested".into());
        }
        for (name, r) in [
            ("borrowing rate", self.borrowing_rate),
            ("numeral rate", self.numeral_rate),
            ("collocation rate", self.collocation_rate),
        ] {
            if !(0.0..=1.0).contains(&r) {
                return bad(format!("{name} {r} outside [0, 1]"));
            }
        }
        if !(self.mean_doc_len.is_finite() && self.mean_doc_len > 0.0) {
            return bad("mean document length must be positive".into());
        }
        if !(self.zipf_exponent.is_finite() && self.zipf_exponent >= 0.0) {
            return bad("Zipf exponent must be non-negative".into());
        }
        if self.n_planted > 9000 {
            return bad("at most 9000 planted pairs have distinct 4-digit numerals".into());
        }
        // distinct word forms available per letter pool
        let forms: f64 = WORD_LEN.map(|l| 13f64.powi(l as i32)).sum();
        if self.alphabet_sizes.iter().any(|&s| s as f64 > forms / 2.0) {
            return bad("alphabet too large for the letter pool".into());
        }
        Ok(())
    }
}

/// Generator output. Word lists, gold and seeds run from the first language
/// to the second.
#[derive(Clone, Debug)]
pub struct SyntheticCorpus {
    pub spec: SyntheticSpec,
    /// Both languages' documents, shuffled together.
    pub corpus: Corpus,
    pub by_language: [Corpus; 2],
    /// Every concept present in both languages.
    pub gold: TranslationPairList,
    /// The borrowed pairs, most frequent first.
    pub planted: TranslationPairList,
    pub seeds: SeedSet,
    /// Generating language of every word.
    pub truth: BTreeMap<String, String>,
    /// Numeral shared by each planted pair, keyed by the first-language word.
    pub numerals: BTreeMap<String, String>,
    /// Parallel documents; `parallel[1]` is shuffled and `id_map` sends each
    /// first-language line to its counterpart's line.
    pub parallel: [Vec<Document>; 2],
    pub id_map: BTreeMap<usize, usize>,
}

struct Structure {
    /// Per language and topic: concepts present in that language, and an
    /// alias table over their Zipf weights.
    topics: Vec<[(Vec<usize>, WeightedAliasIndex<f64>); 2]>,
    topic_of: Vec<usize>,
    collocates: Vec<Vec<usize>>,
    /// Concepts ordered by decreasing stationary weight.
    by_weight: Vec<usize>,
}

fn random_word(rng: &mut ChaCha8Rng, letters: &[u8]) -> String {
    let len = rng.gen_range(WORD_LEN);
    (0..len)
        .map(|_| *letters.choose(rng).expect("non-empty") as char)
        .collect()
}

fn make_words(rng: &mut ChaCha8Rng, n: usize, letters: &str) -> Vec<String> {
    let mut seen = HashSet::with_capacity(n);
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let w = random_word(rng, letters.as_bytes());
        if seen.insert(w.clone()) {
            out.push(w);
        }
    }
    out
}

fn build_structure(spec: &SyntheticSpec, planted: &[usize], rng: &mut ChaCha8Rng) -> Result<Structure> {
    let concepts = spec.alphabet_sizes[0].max(spec.alphabet_sizes[1]);
    let planted_set: HashSet<usize> = planted.iter().copied().collect();
    let mut planted_order = planted.to_vec();
    planted_order.shuffle(rng);
    let mut rest: Vec<usize> = (0..concepts).filter(|c| !planted_set.contains(c)).collect();
    rest.shuffle(rng);

    // planted concepts dealt round-robin to the head of each topic, the rest
    // round-robin after them
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); spec.n_topics];
    for (i, c) in planted_order.into_iter().chain(rest).enumerate() {
        members[i % spec.n_topics].push(c);
    }

    let mut topic_of = vec![0; concepts];
    let mut weight = vec![0.0; concepts];
    let mut topics = Vec::with_capacity(spec.n_topics);
    for (t, ms) in members.iter().enumerate() {
        let zipf: Vec<f64> = (0..ms.len())
            .map(|r| 1.0 / ((r + 1) as f64).powf(spec.zipf_exponent))
            .collect();
        let total: f64 = zipf.iter().sum();
        for (&c, z) in ms.iter().zip(&zipf) {
            topic_of[c] = t;
            weight[c] = z / total;
        }
        let per_lang = |lang: usize| -> Result<(Vec<usize>, WeightedAliasIndex<f64>)> {
            let (cs, ws): (Vec<usize>, Vec<f64>) = ms
                .iter()
                .zip(&zipf)
                .filter(|(&c, _)| c < spec.alphabet_sizes[lang])
                .map(|(&c, &z)| (c, z))
                .unzip();
            let table = WeightedAliasIndex::new(ws)
                .map_err(|e| Error::InfeasibleSpec(format!("topic {t} has no concepts in language {lang}: {e}")))?;
            Ok((cs, table))
        };
        topics.push([per_lang(0)?, per_lang(1)?]);
    }

    let collocates = (0..concepts)
        .map(|c| {
            let pool: Vec<usize> = members[topic_of[c]].iter().copied().filter(|&d| d != c).collect();
            let k = spec.collocates.min(pool.len());
            pool.choose_multiple(rng, k).copied().collect()
        })
        .collect();

    let mut by_weight: Vec<usize> = (0..concepts).collect();
    by_weight.sort_by(|a, b| weight[*b].total_cmp(&weight[*a]).then(a.cmp(b)));
    Ok(Structure {
        topics,
        topic_of,
        collocates,
        by_weight,
    })
}

/// Latent concept sequence of one document in `lang`.
fn latent_doc(spec: &SyntheticSpec, s: &Structure, lang: usize, len: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let topic = rng.gen_range(0..spec.n_topics);
    let (cs, table) = &s.topics[topic][lang];
    let mut out = Vec::with_capacity(len);
    let mut cur = cs[table.sample(rng)];
    out.push(cur);
    while out.len() < len {
        let colls: Vec<usize> = s.collocates[cur]
            .iter()
            .copied()
            .filter(|&c| c < spec.alphabet_sizes[lang])
            .collect();
        cur = if !colls.is_empty() && rng.gen_bool(spec.collocation_rate) {
            *colls.choose(rng).expect("non-empty")
        } else {
            cs[table.sample(rng)]
        };
        out.push(cur);
    }
    debug_assert!(out.iter().all(|&c| s.topic_of[c] == topic));
    out
}

struct Lexicon {
    words: [Vec<String>; 2],
    planted: Vec<bool>,
    numeral: Vec<Option<String>>,
}

fn render(spec: &SyntheticSpec, lex: &Lexicon, lang: usize, latent: &[usize], rng: &mut ChaCha8Rng) -> Document {
    let mut tokens = Vec::with_capacity(latent.len() + 2);
    for &c in latent {
        let other = 1 - lang;
        let borrowed = lex.planted[c] && rng.gen_bool(spec.borrowing_rate);
        tokens.push(lex.words[if borrowed { other } else { lang }][c].clone());
        if let Some(n) = &lex.numeral[c] {
            if rng.gen_bool(spec.numeral_rate) {
                tokens.push(n.clone());
            }
        }
    }
    Document { tokens }
}

fn doc_len(poisson: &Poisson<f64>, rng: &mut ChaCha8Rng) -> usize {
    (poisson.sample(rng) as usize).max(2)
}

pub fn gen_synthetic(spec: &SyntheticSpec) -> Result<SyntheticCorpus> {
    spec.validate()?;
    let concepts = spec.alphabet_sizes[0].max(spec.alphabet_sizes[1]);
    let shared = spec.shared();

    let mut lrng = ChaCha8Rng::seed_from_u64(spec.lexicon_seed);
    let words = [
        make_words(&mut lrng, spec.alphabet_sizes[0], LETTERS[0]),
        make_words(&mut lrng, spec.alphabet_sizes[1], LETTERS[1]),
    ];
    let planted_ids: Vec<usize> = rand::seq::index::sample(&mut lrng, shared, spec.n_planted).into_vec();
    let numerals = rand::seq::index::sample(&mut lrng, 9000, spec.n_planted);
    let mut planted = vec![false; concepts];
    let mut numeral = vec![None; concepts];
    for (&c, n) in planted_ids.iter().zip(numerals.iter()) {
        planted[c] = true;
        numeral[c] = Some((1000 + n).to_string());
    }
    let lex = Lexicon {
        words,
        planted,
        numeral,
    };

    let mut rng = ChaCha8Rng::seed_from_u64(spec.rng_seed);
    let structure = build_structure(spec, &planted_ids, &mut rng)?;
    let poisson = Poisson::new(spec.mean_doc_len).map_err(|e| Error::InfeasibleSpec(e.to_string()))?;

    let by_language = [0, 1].map(|lang| {
        let docs = (0..spec.docs_per_language)
            .map(|_| {
                let len = doc_len(&poisson, &mut rng);
                let latent = latent_doc(spec, &structure, lang, len, &mut rng);
                render(spec, &lex, lang, &latent, &mut rng)
            })
            .collect();
        Corpus::new(docs, format!("synthetic:{}", spec.languages[lang]))
    });
    let corpus = mix_corpora(&by_language[0], &by_language[1], rng.gen())?;

    // parallel documents use concepts present in both languages
    let mut parallel: [Vec<Document>; 2] = [Vec::new(), Vec::new()];
    for _ in 0..spec.n_parallel {
        let len = doc_len(&poisson, &mut rng);
        let latent: Vec<usize> = latent_doc(spec, &structure, 0, len, &mut rng)
            .into_iter()
            .filter(|&c| c < shared)
            .collect();
        let latent = if latent.is_empty() {
            vec![*structure
                .by_weight
                .iter()
                .find(|&&c| c < shared)
                .expect("shared concepts exist")]
        } else {
            latent
        };
        for (lang, side) in parallel.iter_mut().enumerate() {
            side.push(render(spec, &lex, lang, &latent, &mut rng));
        }
    }
    let mut perm: Vec<usize> = (0..spec.n_parallel).collect();
    perm.shuffle(&mut rng);
    let mut shuffled = vec![Document::default(); spec.n_parallel];
    for (i, &j) in perm.iter().enumerate() {
        shuffled[j] = parallel[1][i].clone();
    }
    parallel[1] = shuffled;
    let id_map = perm.iter().copied().enumerate().collect();

    let pair = |c: usize| (lex.words[0][c].clone(), lex.words[1][c].clone());
    let gold = TranslationPairList::new((0..shared).map(pair))?;
    let by_weight: Vec<usize> = structure
        .by_weight
        .iter()
        .copied()
        .filter(|&c| lex.planted[c])
        .collect();
    let planted_pairs = TranslationPairList::new(by_weight.iter().map(|&c| pair(c)))?;

    let seed_concepts: Vec<usize> = structure
        .by_weight
        .iter()
        .copied()
        .filter(|&c| c < shared && !lex.planted[c])
        .take(spec.seeds_per_language)
        .collect();
    let seeds = SeedSet::new(
        (0..2)
            .map(|l| {
                (
                    spec.languages[l].clone(),
                    seed_concepts.iter().map(|&c| lex.words[l][c].clone()).collect(),
                )
            })
            .collect(),
    )?;

    let truth = (0..2)
        .flat_map(|l| lex.words[l].iter().map(move |w| (w.clone(), spec.languages[l].clone())))
        .collect();
    let numerals = by_weight
        .iter()
        .map(|&c| (lex.words[0][c].clone(), lex.numeral[c].clone().expect("planted")))
        .collect();

    Ok(SyntheticCorpus {
        spec: spec.clone(),
        corpus,
        by_language,
        gold,
        planted: planted_pairs,
        seeds,
        truth,
        numerals,
        parallel,
        id_map,
    })
}

impl SyntheticCorpus {
    pub fn gold_dictionary(&self) -> GoldDictionary {
        GoldDictionary::from_pairs(self.gold.pairs().iter().cloned())
    }

    /// Words generated in language `lang` (0 or 1).
    pub fn words_of(&self, lang: usize) -> BTreeSet<&str> {
        self.truth
            .iter()
            .filter(|(_, l)| **l == self.spec.languages[lang])
            .map(|(w, _)| w.as_str())
            .collect()
    }

    /// Writes every artifact into `dir` under fixed names: `corpus.txt`,
    /// `<lang>.txt`, `gold.txt`, `planted.tsv`, `seeds.tsv`, `truth.tsv`,
    /// `parallel.<lang>.txt`, `parallel.map.tsv` and `spec.json`.
    pub fn write(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let write = |name: &str, body: String| {
            let p = dir.join(name);
            fs::write(&p, body).map_err(|e| Error::io(&p, e))
        };
        self.corpus.write(dir.join("corpus.txt"))?;
        for (lang, c) in self.by_language.iter().enumerate() {
            c.write(dir.join(format!("{}.txt", self.spec.languages[lang])))?;
            Corpus::new(self.parallel[lang].clone(), "parallel")
                .write(dir.join(format!("parallel.{}.txt", self.spec.languages[lang])))?;
        }
        self.gold_dictionary().write(dir.join("gold.txt"))?;
        self.planted.write(dir.join("planted.tsv"))?;
        self.seeds.write(dir.join("seeds.tsv"))?;
        write(
            "truth.tsv",
            self.truth.iter().map(|(w, l)| format!("{w}\t{l}\n")).collect(),
        )?;
        write(
            "parallel.map.tsv",
            self.id_map.iter().map(|(a, b)| format!("{a}\t{b}\n")).collect(),
        )?;
        write(
            "spec.json",
            serde_json::to_string_pretty(&self.spec).expect("spec serializes") + "\n",
        )
    }
}
