//! Loan Word Index: the fraction of a word's contextual adjacencies that
//! cross into the other language.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::io::Write;
use std::path::Path;

use rayon::prelude::*;

use crate::corpus::{is_borrowed_at, Corpus, Document, TranslationPairList};
use crate::error::{Error, Result};
use crate::langid::{Label, LanguagePartition};

/// How occurrences are turned into borrowed / not-borrowed counts.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum LwiMode {
    /// Each (occurrence, existing neighbor) adjacency counts once. ABSTAIN
    /// neighbors count in neither column.
    #[default]
    PerAdjacency,
    /// Each occurrence counts once: borrowed when every existing neighbor
    /// carries the other language, not borrowed when some neighbor shares the
    /// word's label, otherwise neither.
    BothNeighbors,
}

impl std::fmt::Display for LwiMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            LwiMode::PerAdjacency => "per-adjacency",
            LwiMode::BothNeighbors => "both-neighbors",
        })
    }
}

impl std::str::FromStr for LwiMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "per-adjacency" => Ok(LwiMode::PerAdjacency),
            "both-neighbors" => Ok(LwiMode::BothNeighbors),
            _ => Err(Error::Precondition(format!(
                "unknown LWI mode {s:?}, expected per-adjacency or both-neighbors"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LwiRecord {
    pub word: String,
    pub label: String,
    pub n_borrowed: u64,
    pub n_not_borrowed: u64,
    /// `None` when no adjacency was countable.
    pub lwi: Option<f64>,
}

impl LwiRecord {
    fn new(word: &str, label: &str, (b, nb): (u64, u64)) -> Self {
        LwiRecord {
            word: word.to_string(),
            label: label.to_string(),
            n_borrowed: b,
            n_not_borrowed: nb,
            lwi: (b + nb > 0).then(|| b as f64 / (b + nb) as f64),
        }
    }
}

fn count_doc<'a>(
    doc: &'a Document,
    part: &LanguagePartition,
    mode: LwiMode,
    only: Option<&str>,
    acc: &mut HashMap<&'a str, (u64, u64)>,
) {
    let labels: Vec<Label> = doc.tokens.iter().map(|t| part.label(t)).collect();
    for (p, tok) in doc.tokens.iter().enumerate() {
        if only.is_some_and(|w| w != tok) {
            continue;
        }
        let Label::Lang(own) = labels[p] else { continue };
        let neighbors = [p.checked_sub(1), (p + 1 < labels.len()).then_some(p + 1)];
        let e = acc.entry(tok.as_str()).or_default();
        match mode {
            LwiMode::PerAdjacency => {
                for n in neighbors.into_iter().flatten() {
                    match labels[n] {
                        Label::Lang(l) if l == own => e.1 += 1,
                        Label::Lang(_) => e.0 += 1,
                        Label::Abstain => {}
                    }
                }
            }
            LwiMode::BothNeighbors => {
                if is_borrowed_at(doc, p, part) {
                    e.0 += 1;
                } else if neighbors.into_iter().flatten().any(|n| labels[n] == Label::Lang(own)) {
                    e.1 += 1;
                }
            }
        }
    }
}

fn count<'a>(
    c: &'a Corpus,
    part: &LanguagePartition,
    mode: LwiMode,
    only: Option<&str>,
) -> HashMap<&'a str, (u64, u64)> {
    c.documents
        .par_iter()
        .fold(HashMap::new, |mut acc, doc| {
            count_doc(doc, part, mode, only, &mut acc);
            acc
        })
        .reduce(HashMap::new, |mut a, b| {
            for (w, (x, y)) in b {
                let e = a.entry(w).or_default();
                e.0 += x;
                e.1 += y;
            }
            a
        })
}

/// LWI of one word. The word must occur in the corpus and carry a language
/// label.
pub fn lwi(word: &str, c: &Corpus, part: &LanguagePartition, mode: LwiMode) -> Result<LwiRecord> {
    if part.label(word) == Label::Abstain {
        return Err(Error::Precondition(format!("{word:?} carries no language label")));
    }
    let counts = count(c, part, mode, Some(word));
    let n = counts
        .get(word)
        .copied()
        .ok_or_else(|| Error::Precondition(format!("{word:?} does not occur in the corpus")))?;
    Ok(LwiRecord::new(word, part.label_name(word), n))
}

/// LWI of every labeled word occurring in the corpus, keyed by word.
pub fn lwi_table(c: &Corpus, part: &LanguagePartition, mode: LwiMode) -> BTreeMap<String, LwiRecord> {
    count(c, part, mode, None)
        .into_iter()
        .map(|(w, n)| (w.to_string(), LwiRecord::new(w, part.label_name(w), n)))
        .collect()
}

/// Larger of the two LWIs; `None` when either is undefined.
pub fn pair_lwi(u: &LwiRecord, v: &LwiRecord) -> Option<f64> {
    Some(u.lwi?.max(v.lwi?))
}

/// Mean pair LWI over the pairs whose LWI is defined, with the number of
/// pairs that contributed.
pub fn mean_pair_lwi(table: &BTreeMap<String, LwiRecord>, pairs: &TranslationPairList) -> Option<(f64, usize)> {
    let values: Vec<f64> = pairs
        .pairs()
        .iter()
        .filter_map(|(u, v)| pair_lwi(table.get(u)?, table.get(v)?))
        .collect();
    (!values.is_empty()).then(|| (values.iter().sum::<f64>() / values.len() as f64, values.len()))
}

/// `word<TAB>label<TAB>n_borrowed<TAB>n_not_borrowed<TAB>lwi`, one record per
/// line in word order; an undefined LWI is written as `-`.
pub fn write_lwi<'a>(records: impl IntoIterator<Item = &'a LwiRecord>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut out = Vec::new();
    for r in records {
        let lwi = r.lwi.map_or_else(|| "-".to_string(), |x| x.to_string());
        writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}",
            r.word, r.label, r.n_borrowed, r.n_not_borrowed, lwi
        )
        .map_err(|e| Error::io(path, e))?;
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}
