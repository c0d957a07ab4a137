//! Token-level language labels estimated from the embedding geometry with a
//! handful of seed words, plus frequency bands within each language.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::decode_lines;
use crate::embedding::EmbeddingModel;
use crate::error::{Error, Result};
use crate::scalar::{dot, normalize, Scalar};

pub const DEFAULT_ABSTAIN_THRESHOLD: f64 = 0.025;
pub const ABSTAIN: &str = "ABSTAIN";

/// Index of a language within a partition.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LangId(pub usize);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Label {
    Lang(LangId),
    Abstain,
}

/// Frequency-rank slices of a language's vocabulary.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Band {
    /// Top 5% by frequency.
    #[serde(rename = "0-5")]
    Top5,
    #[serde(rename = "5-10")]
    Top5To10,
    #[serde(rename = "10-100")]
    Rest,
}

impl Band {
    pub const ALL: [Band; 3] = [Band::Top5, Band::Top5To10, Band::Rest];
}

impl fmt::Display for Band {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Band::Top5 => "0-5",
            Band::Top5To10 => "5-10",
            Band::Rest => "10-100",
        })
    }
}

impl FromStr for Band {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "0-5" => Ok(Band::Top5),
            "5-10" => Ok(Band::Top5To10),
            "10-100" => Ok(Band::Rest),
            _ => Err(Error::Precondition(format!(
                "unknown band {s:?}, expected 0-5, 5-10 or 10-100"
            ))),
        }
    }
}

/// Seed words per language.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SeedSet {
    languages: Vec<(String, Vec<String>)>,
}

impl SeedSet {
    /// Validates: at least two languages, each with a seed, no word under two
    /// languages. Duplicate words within a language are collapsed.
    pub fn new(languages: Vec<(String, Vec<String>)>) -> Result<Self> {
        if languages.len() < 2 {
            return Err(Error::Precondition("seed set needs at least two languages".into()));
        }
        let mut owner: HashMap<&str, &str> = HashMap::new();
        let mut names = HashSet::new();
        for (lang, words) in &languages {
            if !names.insert(lang.as_str()) {
                return Err(Error::Precondition(format!("language {lang:?} listed twice")));
            }
            if lang == ABSTAIN {
                return Err(Error::Precondition(format!("{ABSTAIN} is not a language label")));
            }
            if words.is_empty() {
                return Err(Error::Precondition(format!("language {lang:?} has no seed words")));
            }
            for w in words {
                if let Some(prev) = owner.insert(w, lang) {
                    if prev != lang {
                        return Err(Error::Precondition(format!(
                            "seed {w:?} listed under both {prev:?} and {lang:?}"
                        )));
                    }
                }
            }
        }
        let languages = languages
            .into_iter()
            .map(|(l, ws)| {
                let mut seen = HashSet::new();
                let ws = ws.into_iter().filter(|w| seen.insert(w.clone())).collect();
                (l, ws)
            })
            .collect();
        Ok(SeedSet { languages })
    }

    pub fn languages(&self) -> &[(String, Vec<String>)] {
        &self.languages
    }

    /// TSV `word<TAB>language`; languages keep first-appearance order.
    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        let what = path.display().to_string();
        let mut languages: Vec<(String, Vec<String>)> = Vec::new();
        for (i, line) in decode_lines(&bytes)?.into_iter().enumerate() {
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let (w, l) = line
                .split_once('\t')
                .ok_or_else(|| Error::parse(&what, i + 1, "expected word<TAB>language"))?;
            let (w, l) = (w.trim(), l.trim());
            if w.is_empty() || l.is_empty() {
                return Err(Error::parse(&what, i + 1, "empty field"));
            }
            match languages.iter_mut().find(|(name, _)| name == l) {
                Some((_, ws)) => ws.push(w.to_string()),
                None => languages.push((l.to_string(), vec![w.to_string()])),
            }
        }
        SeedSet::new(languages)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut out = String::new();
        for (lang, words) in &self.languages {
            for w in words {
                out.push_str(&format!("{w}\t{lang}\n"));
            }
        }
        fs::write(path, out).map_err(|e| Error::io(path, e))
    }
}

/// Estimated labels, per-language vocabularies, and frequency bands.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct LanguagePartition {
    languages: Vec<String>,
    labels: HashMap<String, Label>,
    counts: HashMap<String, u64>,
    /// Per language, members in rank order (descending count, then word).
    ranked: Vec<Vec<String>>,
    /// Per language, the exclusive end rank of bands 0-5 and 5-10.
    cuts: Vec<[usize; 2]>,
    rank_of: HashMap<String, usize>,
}

/// Band cut points for `n` ranked members: `[ceil(0.05 n), ceil(0.10 n)]`.
fn band_cuts(n: usize) -> [usize; 2] {
    // integer ceilings avoid float surprises at exact multiples of 20
    [n.div_ceil(20), n.div_ceil(10)]
}

fn rank_members<'a>(counts: &HashMap<String, u64>, members: impl IntoIterator<Item = &'a String>) -> Vec<String> {
    let mut ranked: Vec<&String> = members.into_iter().collect();
    ranked.sort_by(|a, b| {
        let (ca, cb) = (
            counts.get(*a).copied().unwrap_or(0),
            counts.get(*b).copied().unwrap_or(0),
        );
        cb.cmp(&ca).then_with(|| a.cmp(b))
    });
    ranked.into_iter().cloned().collect()
}

/// Splits `members` into the 0-5, 5-10 and 10-100 percent bands by
/// descending count (ties by word). Missing counts rank as zero.
pub fn frequency_bands(counts: &HashMap<String, u64>, members: &BTreeSet<String>) -> [Vec<String>; 3] {
    let ranked = rank_members(counts, members);
    let [a, b] = band_cuts(ranked.len());
    [ranked[..a].to_vec(), ranked[a..b].to_vec(), ranked[b..].to_vec()]
}

impl LanguagePartition {
    /// Builds a partition from explicit `(word, language)` labels. Language
    /// order is first appearance; words absent from `labels` are ABSTAIN.
    pub fn from_labels<'a>(
        labels: impl IntoIterator<Item = (&'a str, &'a str)>,
        counts: &HashMap<String, u64>,
    ) -> Self {
        let mut languages: Vec<String> = Vec::new();
        let mut map = HashMap::new();
        for (w, l) in labels {
            let id = match languages.iter().position(|x| x == l) {
                Some(i) => i,
                None => {
                    languages.push(l.to_string());
                    languages.len() - 1
                }
            };
            map.insert(w.to_string(), Label::Lang(LangId(id)));
        }
        let mut all_counts = counts.clone();
        for w in map.keys() {
            all_counts.entry(w.clone()).or_insert(0);
        }
        Self::assemble(languages, map, all_counts)
    }

    fn assemble(languages: Vec<String>, labels: HashMap<String, Label>, counts: HashMap<String, u64>) -> Self {
        let mut members: Vec<Vec<&String>> = vec![Vec::new(); languages.len()];
        for (w, l) in &labels {
            if let Label::Lang(LangId(i)) = l {
                members[*i].push(w);
            }
        }
        let ranked: Vec<Vec<String>> = members.into_iter().map(|m| rank_members(&counts, m)).collect();
        let cuts = ranked.iter().map(|r| band_cuts(r.len())).collect();
        let rank_of = ranked
            .iter()
            .flat_map(|r| r.iter().enumerate().map(|(i, w)| (w.clone(), i)))
            .collect();
        LanguagePartition {
            languages,
            labels,
            counts,
            ranked,
            cuts,
            rank_of,
        }
    }

    pub fn languages(&self) -> &[String] {
        &self.languages
    }

    pub fn lang_id(&self, name: &str) -> Result<LangId> {
        self.languages
            .iter()
            .position(|l| l == name)
            .map(LangId)
            .ok_or_else(|| Error::UnknownLanguage(name.to_string()))
    }

    pub fn lang_name(&self, id: LangId) -> &str {
        &self.languages[id.0]
    }

    /// Label of `word`; unknown words are ABSTAIN.
    pub fn label(&self, word: &str) -> Label {
        self.labels.get(word).copied().unwrap_or(Label::Abstain)
    }

    pub fn label_name(&self, word: &str) -> &str {
        match self.label(word) {
            Label::Lang(id) => self.lang_name(id),
            Label::Abstain => ABSTAIN,
        }
    }

    pub fn is_in(&self, word: &str, lang: LangId) -> bool {
        self.label(word) == Label::Lang(lang)
    }

    pub fn count(&self, word: &str) -> u64 {
        self.counts.get(word).copied().unwrap_or(0)
    }

    /// Estimated vocabulary of `lang` in rank order.
    pub fn vocabulary(&self, lang: LangId) -> &[String] {
        &self.ranked[lang.0]
    }

    pub fn band(&self, lang: LangId, band: Band) -> &[String] {
        let r = &self.ranked[lang.0];
        let [a, b] = self.cuts[lang.0];
        match band {
            Band::Top5 => &r[..a],
            Band::Top5To10 => &r[a..b],
            Band::Rest => &r[b..],
        }
    }

    pub fn band_of(&self, word: &str) -> Option<Band> {
        let Label::Lang(lang) = self.label(word) else {
            return None;
        };
        let rank = *self.rank_of.get(word)?;
        let [a, b] = self.cuts[lang.0];
        Some(if rank < a {
            Band::Top5
        } else if rank < b {
            Band::Top5To10
        } else {
            Band::Rest
        })
    }

    /// Every labeled or abstained word.
    pub fn words(&self) -> impl Iterator<Item = &str> {
        self.labels.keys().map(String::as_str)
    }

    /// TSV `word<TAB>label<TAB>count<TAB>band`: languages in order, words by
    /// rank, then ABSTAIN rows sorted by word with band `-`.
    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut out = String::new();
        for (i, lang) in self.languages.iter().enumerate() {
            for band in Band::ALL {
                for w in self.band(LangId(i), band) {
                    out.push_str(&format!("{w}\t{lang}\t{}\t{band}\n", self.count(w)));
                }
            }
        }
        let mut abstained: Vec<&String> = self
            .labels
            .iter()
            .filter(|(_, l)| **l == Label::Abstain)
            .map(|(w, _)| w)
            .collect();
        abstained.sort();
        for w in abstained {
            out.push_str(&format!("{w}\t{ABSTAIN}\t{}\t-\n", self.count(w)));
        }
        fs::write(path, out).map_err(|e| Error::io(path, e))
    }

    /// Reads a partition file. Bands are recomputed from the counts and
    /// must agree with the file.
    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        let what = path.display().to_string();
        let mut languages: Vec<String> = Vec::new();
        let mut labels = HashMap::new();
        let mut counts = HashMap::new();
        let mut declared = Vec::new();
        for (i, line) in decode_lines(&bytes)?.into_iter().enumerate() {
            if line.is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split('\t').collect();
            if f.len() != 4 {
                return Err(Error::parse(&what, i + 1, "expected word<TAB>label<TAB>count<TAB>band"));
            }
            let count: u64 = f[2].parse().map_err(|_| Error::parse(&what, i + 1, "bad count"))?;
            let label = if f[1] == ABSTAIN {
                Label::Abstain
            } else {
                let id = match languages.iter().position(|l| l == f[1]) {
                    Some(id) => id,
                    None => {
                        languages.push(f[1].to_string());
                        languages.len() - 1
                    }
                };
                let band: Band = f[3].parse().map_err(|_| Error::parse(&what, i + 1, "bad band"))?;
                declared.push((f[0].to_string(), band, i + 1));
                Label::Lang(LangId(id))
            };
            if labels.insert(f[0].to_string(), label).is_some() {
                return Err(Error::parse(&what, i + 1, format!("duplicate word {:?}", f[0])));
            }
            counts.insert(f[0].to_string(), count);
        }
        let part = Self::assemble(languages, labels, counts);
        for (w, band, line) in declared {
            if part.band_of(&w) != Some(band) {
                return Err(Error::parse(
                    &what,
                    line,
                    format!("band of {w:?} disagrees with counts"),
                ));
            }
        }
        Ok(part)
    }
}

/// Labels every vocabulary word with its nearest seed-language centroid
/// (cosine), abstaining when the best and runner-up similarities differ by
/// less than `abstain_threshold`. Seeds keep their own label.
pub fn estimate_partition<F: Scalar>(
    m: &EmbeddingModel<F>,
    seeds: &SeedSet,
    abstain_threshold: f64,
) -> Result<LanguagePartition> {
    let vocab = m.vocab();
    let missing: Vec<String> = seeds
        .languages()
        .iter()
        .flat_map(|(_, ws)| ws.iter())
        .filter(|w| !vocab.contains(w))
        .cloned()
        .collect();
    if !missing.is_empty() {
        return Err(Error::OutOfVocabulary(missing));
    }

    let dim = m.dim();
    let mut centroids = Vec::new();
    for (lang, words) in seeds.languages() {
        let mut c = vec![F::zero(); dim];
        for w in words {
            let id = vocab.id(w).expect("checked above");
            crate::scalar::axpy(F::one(), m.unit_vector(id), &mut c);
        }
        if !normalize(&mut c) {
            return Err(Error::Precondition(format!(
                "seed centroid of {lang:?} is the zero vector"
            )));
        }
        centroids.push(c);
    }

    let threshold = F::of(abstain_threshold);
    let assigned: Vec<Label> = (0..vocab.len())
        .into_par_iter()
        .map(|id| {
            let u = m.unit_vector(id);
            let mut best = (F::neg_infinity(), 0usize);
            let mut second = F::neg_infinity();
            for (l, c) in centroids.iter().enumerate() {
                let s = dot(u, c);
                if s > best.0 {
                    second = best.0;
                    best = (s, l);
                } else if s > second {
                    second = s;
                }
            }
            if best.0 - second < threshold {
                Label::Abstain
            } else {
                Label::Lang(LangId(best.1))
            }
        })
        .collect();

    let mut labels: HashMap<String, Label> = vocab.words().iter().cloned().zip(assigned).collect();
    for (i, (_, words)) in seeds.languages().iter().enumerate() {
        for w in words {
            labels.insert(w.clone(), Label::Lang(LangId(i)));
        }
    }
    let counts = vocab
        .words()
        .iter()
        .cloned()
        .zip(vocab.counts().iter().copied())
        .collect();
    let languages = seeds.languages().iter().map(|(l, _)| l.clone()).collect();
    Ok(LanguagePartition::assemble(languages, labels, counts))
}
