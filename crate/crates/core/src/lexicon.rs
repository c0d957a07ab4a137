//! Constrained nearest-neighbor translation and p@K evaluation.
//!
//! A source word is translated by searching its neighbors only among the
//! estimated target-language vocabulary, optionally restricted to targets
//! seen at least `target_min_freq` times.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{decode_lines, TranslationPairList};
use crate::embedding::{AllowSet, EmbeddingModel, Neighbor};
use crate::error::{Error, Result};
use crate::langid::{Band, LangId, LanguagePartition};
use crate::scalar::Scalar;

pub const DEFAULT_SAMPLE_SIZE: usize = 500;
pub const DEFAULT_N: usize = 10;
pub const DEFAULT_TARGET_MIN_FREQ: u64 = 100;
pub const DEFAULT_K: [usize; 3] = [1, 5, 10];

/// Translation direction `source:target`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Direction {
    pub source: String,
    pub target: String,
}

impl Direction {
    pub fn new(source: impl Into<String>, target: impl Into<String>) -> Result<Self> {
        let (source, target) = (source.into(), target.into());
        if source == target || source.is_empty() || target.is_empty() {
            return Err(Error::Precondition(format!(
                "direction needs two distinct languages, got {source:?} and {target:?}"
            )));
        }
        Ok(Direction { source, target })
    }

    pub fn reversed(&self) -> Self {
        Direction {
            source: self.target.clone(),
            target: self.source.clone(),
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.source, self.target)
    }
}

impl TryFrom<String> for Direction {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Direction> for String {
    fn from(d: Direction) -> String {
        d.to_string()
    }
}

impl FromStr for Direction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (a, b) = s
            .split_once(':')
            .ok_or_else(|| Error::Precondition(format!("direction {s:?} is not source:target")))?;
        Direction::new(a, b)
    }
}

/// Whether source words must belong to the estimated source vocabulary.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum SourceMode {
    #[default]
    Strict,
    /// Any embeddable string is accepted as a source.
    Lenient,
}

/// Constrained translator for one direction over an immutable model and
/// partition.
#[derive(Clone, Debug)]
pub struct Translator<'a, F> {
    model: &'a EmbeddingModel<F>,
    partition: &'a LanguagePartition,
    direction: Direction,
    source: LangId,
    target: LangId,
    target_min_freq: u64,
    mode: SourceMode,
    targets: AllowSet,
    sources: AllowSet,
}

fn floor_set<F: Scalar>(
    m: &EmbeddingModel<F>,
    part: &LanguagePartition,
    lang: LangId,
    min_freq: u64,
) -> Result<AllowSet> {
    AllowSet::from_words(
        m,
        part.vocabulary(lang)
            .iter()
            .filter(|w| part.count(w) >= min_freq)
            .map(String::as_str),
    )
}

impl<'a, F: Scalar> Translator<'a, F> {
    pub fn new(
        model: &'a EmbeddingModel<F>,
        partition: &'a LanguagePartition,
        direction: Direction,
        target_min_freq: u64,
    ) -> Result<Self> {
        let source = partition.lang_id(&direction.source)?;
        let target = partition.lang_id(&direction.target)?;
        Ok(Translator {
            targets: floor_set(model, partition, target, target_min_freq)?,
            sources: floor_set(model, partition, source, target_min_freq)?,
            model,
            partition,
            direction,
            source,
            target,
            target_min_freq,
            mode: SourceMode::Strict,
        })
    }

    pub fn with_mode(mut self, mode: SourceMode) -> Self {
        self.mode = mode;
        self
    }

    /// The opposite direction, sharing the same frequency floor.
    pub fn reversed(&self) -> Self {
        Translator {
            model: self.model,
            partition: self.partition,
            direction: self.direction.reversed(),
            source: self.target,
            target: self.source,
            target_min_freq: self.target_min_freq,
            mode: self.mode,
            targets: self.sources.clone(),
            sources: self.targets.clone(),
        }
    }

    pub fn model(&self) -> &'a EmbeddingModel<F> {
        self.model
    }

    pub fn partition(&self) -> &'a LanguagePartition {
        self.partition
    }

    pub fn direction(&self) -> &Direction {
        &self.direction
    }

    pub fn source_lang(&self) -> LangId {
        self.source
    }

    pub fn target_lang(&self) -> LangId {
        self.target
    }

    pub fn target_min_freq(&self) -> u64 {
        self.target_min_freq
    }

    fn query(&self, w: &str) -> Result<Vec<F>> {
        if self.partition.is_in(w, self.source) || self.mode == SourceMode::Lenient {
            return self.model.embed_unit(w);
        }
        Err(Error::NotInSourceVocabulary {
            word: w.to_string(),
            language: self.direction.source.clone(),
        })
    }

    /// The `n` nearest estimated target-language words of `w` meeting the
    /// frequency floor, never including `w` itself.
    pub fn top_translations(&self, w: &str, n: usize) -> Result<Vec<Neighbor<F>>> {
        let q = self.query(w)?;
        let vocab_size = self.model.vocab().len();
        let own = self.model.vocab().id(w).filter(|&id| self.targets.contains(id));
        let allow;
        let allow = match own {
            Some(id) => {
                allow = self.targets.without(id, vocab_size);
                &allow
            }
            None => &self.targets,
        };
        if allow.len(vocab_size) == 0 {
            return Err(Error::EmptyCandidates(format!(
                "no {} words with count >= {}",
                self.direction.target, self.target_min_freq
            )));
        }
        self.model.nearest_neighbors(&q, n, allow)
    }

    /// Single best translation.
    pub fn translate_word(&self, w: &str) -> Result<Neighbor<F>> {
        Ok(self
            .top_translations(w, 1)?
            .into_iter()
            .next()
            .expect("non-empty candidate set yields a neighbor"))
    }
}

/// A retrieved translation candidate.
#[derive(Clone, Debug, PartialEq)]
pub struct Candidate<F> {
    pub word: String,
    pub distance: F,
}

impl<F: Clone> From<&Neighbor<F>> for Candidate<F> {
    fn from(n: &Neighbor<F>) -> Self {
        Candidate {
            word: n.word.clone(),
            distance: n.distance.clone(),
        }
    }
}

/// Retrieval constraints recorded with lexicons and reports.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Constraints {
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub source_band: Option<Band>,
    pub target_min_freq: u64,
    pub n: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub policy: Option<String>,
}

/// Ranked translations per source word.
#[derive(Clone, Debug, PartialEq)]
pub struct Lexicon<F> {
    pub direction: Direction,
    pub constraints: Constraints,
    pub entries: BTreeMap<String, Vec<Candidate<F>>>,
    /// Sources whose retrieval failed, with the reason. They also appear in
    /// `entries` with an empty list.
    pub diagnostics: BTreeMap<String, String>,
}

/// Samples up to `sample_size` words of the source band without replacement
/// and retrieves `n` constrained translations for each.
pub fn mine_lexicon<F: Scalar>(
    tr: &Translator<'_, F>,
    source_band: Band,
    sample_size: usize,
    n: usize,
    rng_seed: u64,
) -> Result<Lexicon<F>> {
    let band = tr.partition().band(tr.source_lang(), source_band);
    if band.is_empty() {
        return Err(Error::Precondition(format!(
            "band {source_band} of {} is empty",
            tr.direction().source
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let picked: Vec<&str> = rand::seq::index::sample(&mut rng, band.len(), sample_size.min(band.len()))
        .into_iter()
        .map(|i| band[i].as_str())
        .collect();
    Ok(translate_words(tr, &picked, n, Some(source_band)))
}

/// Builds a lexicon for an explicit list of source words.
pub fn translate_words<F: Scalar>(
    tr: &Translator<'_, F>,
    words: &[&str],
    n: usize,
    source_band: Option<Band>,
) -> Lexicon<F> {
    let results: Vec<(String, Result<Vec<Neighbor<F>>>)> = words
        .par_iter()
        .map(|w| (w.to_string(), tr.top_translations(w, n)))
        .collect();
    let mut entries = BTreeMap::new();
    let mut diagnostics = BTreeMap::new();
    for (w, r) in results {
        match r {
            Ok(list) => {
                entries.insert(w, list.iter().map(Candidate::from).collect());
            }
            Err(e) => {
                diagnostics.insert(w.clone(), e.to_string());
                entries.insert(w, Vec::new());
            }
        }
    }
    Lexicon {
        direction: tr.direction().clone(),
        constraints: Constraints {
            source_band,
            target_min_freq: tr.target_min_freq(),
            n,
            policy: None,
        },
        entries,
        diagnostics,
    }
}

impl<F: Scalar> Lexicon<F> {
    /// TSV `source<TAB>rank<TAB>target<TAB>distance` with 1-based ranks.
    /// `#` lines carry the direction, constraints and failed sources.
    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut out = Vec::new();
        self.write_to(&mut out).map_err(|e| Error::io(path, e))?;
        fs::write(path, out).map_err(|e| Error::io(path, e))
    }

    pub fn write_to(&self, w: &mut impl Write) -> std::io::Result<()> {
        writeln!(w, "# direction\t{}", self.direction)?;
        writeln!(
            w,
            "# constraints\t{}",
            serde_json::to_string(&self.constraints).expect("constraints serialize")
        )?;
        for (src, why) in &self.diagnostics {
            writeln!(w, "# failed\t{src}\t{}", why.replace(['\t', '\n'], " "))?;
        }
        for (src, cands) in &self.entries {
            for (rank, c) in cands.iter().enumerate() {
                writeln!(w, "{src}\t{}\t{}\t{}", rank + 1, c.word, c.distance)?;
            }
        }
        Ok(())
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        let what = path.display().to_string();
        let mut direction = None;
        let mut constraints = Constraints::default();
        let mut entries: BTreeMap<String, Vec<Candidate<F>>> = BTreeMap::new();
        let mut diagnostics = BTreeMap::new();
        for (i, line) in decode_lines(&bytes)?.into_iter().enumerate() {
            let bad = |m: &str| Error::parse(&what, i + 1, m);
            if let Some(meta) = line.strip_prefix("# ") {
                let (key, value) = meta.split_once('\t').unwrap_or((meta, ""));
                match key {
                    "direction" => direction = Some(value.parse::<Direction>()?),
                    "constraints" => constraints = serde_json::from_str(value).map_err(|e| bad(&e.to_string()))?,
                    "failed" => {
                        let (w, why) = value.split_once('\t').unwrap_or((value, ""));
                        diagnostics.insert(w.to_string(), why.to_string());
                        entries.entry(w.to_string()).or_default();
                    }
                    _ => {}
                }
                continue;
            }
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let f: Vec<&str> = line.split('\t').collect();
            if f.len() != 4 {
                return Err(bad("expected source<TAB>rank<TAB>target<TAB>distance"));
            }
            let rank: usize = f[1].parse().map_err(|_| bad("bad rank"))?;
            let distance: F = f[3].parse().map_err(|_| bad("bad distance"))?;
            let list = entries.entry(f[0].to_string()).or_default();
            if rank != list.len() + 1 {
                return Err(bad("ranks must be consecutive from 1"));
            }
            if list.last().is_some_and(|c| c.distance > distance) {
                return Err(bad("distances must be non-decreasing"));
            }
            list.push(Candidate {
                word: f[2].to_string(),
                distance,
            });
        }
        // headerless files (produced elsewhere) get a placeholder direction
        let direction = match direction {
            Some(d) => d,
            None => Direction::new("source", "target")?,
        };
        if constraints.n == 0 {
            constraints.n = entries.values().map(Vec::len).max().unwrap_or(0);
        }
        Ok(Lexicon {
            direction,
            constraints,
            entries,
            diagnostics,
        })
    }
}

/// Accepted translations per source word.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct GoldDictionary {
    entries: BTreeMap<String, BTreeSet<String>>,
}

impl GoldDictionary {
    pub fn from_pairs<S: Into<String>>(pairs: impl IntoIterator<Item = (S, S)>) -> Self {
        let mut entries: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
        for (s, t) in pairs {
            entries.entry(s.into()).or_default().insert(t.into());
        }
        GoldDictionary { entries }
    }

    pub fn get(&self, source: &str) -> Option<&BTreeSet<String>> {
        self.entries.get(source)
    }

    pub fn accepts(&self, source: &str, target: &str) -> bool {
        self.get(source).is_some_and(|s| s.contains(target))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &BTreeSet<String>)> {
        self.entries.iter()
    }

    /// Whitespace-separated `source target` lines; repeated sources
    /// accumulate.
    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        let what = path.display().to_string();
        let mut pairs = Vec::new();
        for (i, line) in decode_lines(&bytes)?.into_iter().enumerate() {
            let f: Vec<&str> = line.split_whitespace().collect();
            match f.as_slice() {
                [] => {}
                [s, t] => pairs.push((s.to_string(), t.to_string())),
                _ => return Err(Error::parse(&what, i + 1, "expected `source target`")),
            }
        }
        Ok(GoldDictionary::from_pairs(pairs))
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut out = String::new();
        for (s, ts) in &self.entries {
            for t in ts {
                out.push_str(&format!("{s} {t}\n"));
            }
        }
        fs::write(path, out).map_err(|e| Error::io(path, e))
    }
}

/// Precision at K for one lexicon or retrieval run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub direction: String,
    pub dataset: String,
    pub constraints: Constraints,
    pub n_evaluated: usize,
    pub n_skipped: usize,
    pub p_at: BTreeMap<usize, f64>,
}

impl EvalReport {
    pub fn p(&self, k: usize) -> Option<f64> {
        self.p_at.get(&k).copied()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

pub(crate) fn check_ks(ks: &[usize], max: usize) -> Result<()> {
    if ks.is_empty() {
        return Err(Error::Precondition("no K values given".into()));
    }
    if let Some(k) = ks.iter().find(|&&k| k == 0 || k > max) {
        return Err(Error::Precondition(format!("K={k} outside 1..={max}")));
    }
    Ok(())
}

/// Fraction of gold-covered sources whose top-K list contains an accepted
/// translation. Sources missing from the gold dictionary are skipped and
/// counted.
pub fn evaluate_pk<F: Scalar>(
    lex: &Lexicon<F>,
    gold: &GoldDictionary,
    ks: &[usize],
    dataset: &str,
) -> Result<EvalReport> {
    check_ks(ks, lex.constraints.n)?;
    let mut hits = vec![0usize; ks.len()];
    let mut evaluated = 0;
    let mut skipped = 0;
    for (src, cands) in &lex.entries {
        let Some(accepted) = gold.get(src) else {
            skipped += 1;
            continue;
        };
        evaluated += 1;
        let first_hit = cands.iter().position(|c| accepted.contains(&c.word));
        for (h, &k) in hits.iter_mut().zip(ks) {
            if first_hit.is_some_and(|r| r < k) {
                *h += 1;
            }
        }
    }
    if evaluated == 0 {
        return Err(Error::NoGoldCoverage);
    }
    Ok(EvalReport {
        direction: lex.direction.to_string(),
        dataset: dataset.to_string(),
        constraints: lex.constraints.clone(),
        n_evaluated: evaluated,
        n_skipped: skipped,
        p_at: ks
            .iter()
            .zip(hits)
            .map(|(&k, h)| (k, h as f64 / evaluated as f64))
            .collect(),
    })
}

/// Sources whose first candidate is an accepted translation, paired with
/// that candidate.
pub fn successful_at_1<F>(lex: &Lexicon<F>, gold: &GoldDictionary) -> TranslationPairList {
    let pairs: Vec<(String, String)> = lex
        .entries
        .iter()
        .filter_map(|(s, c)| {
            let top = c.first()?;
            gold.accepts(s, &top.word).then(|| (s.clone(), top.word.clone()))
        })
        .collect();
    TranslationPairList::new(pairs).expect("lexicon sources are unique")
}
