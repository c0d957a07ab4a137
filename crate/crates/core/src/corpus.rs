//! Corpus ingestion, cleaning, and the corpus-to-corpus transforms used for
//! synthesis and ablation.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use unicode_general_category::{get_general_category, GeneralCategory};

use crate::error::{Error, Result};
use crate::langid::{Label, LanguagePartition};

/// Mask used by `mask-numbers` when none is given on the command line.
pub const DEFAULT_NUMBER_MASK: &str = "qzxnumk";

/// A single document: the whitespace tokens of one input line.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Document {
    pub tokens: Vec<String>,
}

impl Document {
    pub fn new<S: Into<String>>(tokens: impl IntoIterator<Item = S>) -> Self {
        Document {
            tokens: tokens.into_iter().map(Into::into).collect(),
        }
    }

    /// Splits an already clean line on whitespace.
    pub fn from_line(line: &str) -> Self {
        Document::new(line.split_whitespace())
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn to_line(&self) -> String {
        self.tokens.join(" ")
    }
}

/// Ordered documents plus a free-form provenance tag.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Corpus {
    pub documents: Vec<Document>,
    pub source_tag: String,
}

impl Corpus {
    pub fn new(documents: Vec<Document>, source_tag: impl Into<String>) -> Self {
        Corpus {
            documents,
            source_tag: source_tag.into(),
        }
    }

    /// Builds a corpus from raw lines, applying [`preprocess`] to each.
    pub fn from_raw_lines<'a>(lines: impl IntoIterator<Item = &'a str>, tag: &str) -> Self {
        Corpus::new(lines.into_iter().map(preprocess).collect(), tag)
    }

    pub fn len(&self) -> usize {
        self.documents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
    }

    pub fn token_count(&self) -> usize {
        self.documents.iter().map(Document::len).sum()
    }

    pub fn tokens(&self) -> impl Iterator<Item = &str> {
        self.documents.iter().flat_map(|d| d.tokens.iter().map(String::as_str))
    }

    pub fn frequencies(&self) -> HashMap<&str, u64> {
        let mut counts = HashMap::new();
        for t in self.tokens() {
            *counts.entry(t).or_insert(0) += 1;
        }
        counts
    }

    /// Reads a clean corpus file (one document per line, whitespace tokens).
    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        Self::read_with(path, Document::from_line)
    }

    /// Reads a raw text file and cleans every line with [`preprocess`].
    pub fn read_raw(path: impl AsRef<Path>) -> Result<Self> {
        Self::read_with(path, preprocess)
    }

    fn read_with(path: impl AsRef<Path>, f: impl Fn(&str) -> Document) -> Result<Self> {
        let path = path.as_ref();
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        let documents = decode_lines(&bytes)?.into_iter().map(f).collect();
        Ok(Corpus::new(documents, path.display().to_string()))
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        self.write_to(&mut w).map_err(|e| Error::io(path, e))?;
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn write_to(&self, w: &mut impl Write) -> std::io::Result<()> {
        for doc in &self.documents {
            writeln!(w, "{}", doc.to_line())?;
        }
        Ok(())
    }
}

/// Splits file bytes into lines, rejecting invalid UTF-8 with a 1-based line
/// number. A trailing newline does not produce an extra empty line.
pub fn decode_lines(bytes: &[u8]) -> Result<Vec<&str>> {
    let mut lines = Vec::new();
    let mut rest = bytes;
    let mut line_no = 0;
    while !rest.is_empty() {
        line_no += 1;
        let (line, tail) = match rest.iter().position(|&b| b == b'\n') {
            Some(i) => (&rest[..i], &rest[i + 1..]),
            None => (rest, &rest[rest.len()..]),
        };
        let line = line.strip_suffix(b"\r").unwrap_or(line);
        let s = std::str::from_utf8(line).map_err(|_| Error::InvalidUtf8 { line: line_no })?;
        lines.push(s);
        rest = tail;
    }
    Ok(lines)
}

fn is_emoji(c: char) -> bool {
    matches!(c as u32,
        0x1F000..=0x1F02F   // mahjong tiles
        | 0x1F0A0..=0x1F0FF // playing cards
        | 0x1F100..=0x1F1FF // enclosed alphanumerics, regional indicators
        | 0x1F200..=0x1F2FF
        | 0x1F300..=0x1F5FF // pictographs, skin tone modifiers
        | 0x1F600..=0x1F64F // emoticons
        | 0x1F680..=0x1F6FF // transport and map
        | 0x1F700..=0x1F77F
        | 0x1F780..=0x1F7FF
        | 0x1F800..=0x1F8FF
        | 0x1F900..=0x1F9FF // supplemental symbols and pictographs
        | 0x1FA00..=0x1FA6F
        | 0x1FA70..=0x1FAFF
        | 0x2600..=0x26FF   // miscellaneous symbols
        | 0x2700..=0x27BF   // dingbats
        | 0x2B00..=0x2BFF
        | 0xFE00..=0xFE0F   // variation selectors
        | 0xE0020..=0xE007F // tag characters used by flag sequences
        | 0x200D            // zero width joiner
        | 0x20E3            // combining keycap
    )
}

fn is_punctuation(c: char) -> bool {
    use GeneralCategory::*;
    matches!(
        get_general_category(c),
        ConnectorPunctuation
            | DashPunctuation
            | OpenPunctuation
            | ClosePunctuation
            | InitialPunctuation
            | FinalPunctuation
            | OtherPunctuation
    )
}

/// Cleans one raw line: drops emoji and punctuation, lowercases ASCII
/// letters, leaves every other script alone, and splits on whitespace.
pub fn preprocess(raw_line: &str) -> Document {
    let cleaned: String = raw_line
        .chars()
        .filter(|&c| !is_emoji(c) && !is_punctuation(c))
        .map(|c| c.to_ascii_lowercase())
        .collect();
    Document::from_line(&cleaned)
}

/// Concatenates two corpora and shuffles the documents with a seeded RNG.
pub fn mix_corpora(a: &Corpus, b: &Corpus, rng_seed: u64) -> Result<Corpus> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Precondition("mix_corpora needs two non-empty corpora".into()));
    }
    let mut documents: Vec<Document> = a.documents.iter().chain(&b.documents).cloned().collect();
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    documents.shuffle(&mut rng);
    Ok(Corpus::new(
        documents,
        format!("mix({},{};seed={})", a.source_tag, b.source_tag, rng_seed),
    ))
}

pub fn is_number(token: &str) -> bool {
    !token.is_empty() && token.bytes().all(|b| b.is_ascii_digit())
}

/// Replaces every all-digit token with `mask_token`.
pub fn mask_numbers(c: &Corpus, mask_token: &str) -> Result<Corpus> {
    if mask_token.is_empty() || mask_token.chars().any(char::is_whitespace) {
        return Err(Error::Precondition(format!(
            "mask token {mask_token:?} must be a single non-empty token"
        )));
    }
    if c.tokens().any(|t| t == mask_token) {
        return Err(Error::Precondition(format!(
            "mask token {mask_token:?} already occurs in the corpus"
        )));
    }
    let documents = c
        .documents
        .iter()
        .map(|d| {
            Document::new(d.tokens.iter().map(|t| {
                if is_number(t) {
                    mask_token.to_string()
                } else {
                    t.clone()
                }
            }))
        })
        .collect();
    Ok(Corpus::new(documents, format!("mask_numbers({})", c.source_tag)))
}

/// Word pairs, typically successful translations, with unique sources.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TranslationPairList {
    pairs: Vec<(String, String)>,
}

impl TranslationPairList {
    pub fn new<S: Into<String>>(pairs: impl IntoIterator<Item = (S, S)>) -> Result<Self> {
        let mut list = TranslationPairList::default();
        let mut seen = HashSet::new();
        for (s, t) in pairs {
            let (s, t) = (s.into(), t.into());
            if s.is_empty() || t.is_empty() {
                return Err(Error::Precondition("empty word in translation pair".into()));
            }
            if !seen.insert(s.clone()) {
                return Err(Error::Precondition(format!("duplicate source word {s:?}")));
            }
            list.pairs.push((s, t));
        }
        Ok(list)
    }

    pub fn pairs(&self) -> &[(String, String)] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        let what = path.display().to_string();
        let mut pairs = Vec::new();
        let mut seen = HashSet::new();
        for (i, line) in decode_lines(&bytes)?.into_iter().enumerate() {
            if line.starts_with('#') || line.trim().is_empty() {
                continue;
            }
            let mut fields = line.split('\t');
            let (Some(s), Some(t), None) = (fields.next(), fields.next(), fields.next()) else {
                return Err(Error::parse(&what, i + 1, "expected source<TAB>target"));
            };
            let (s, t) = (s.trim(), t.trim());
            if s.is_empty() || t.is_empty() {
                return Err(Error::parse(&what, i + 1, "empty pair member"));
            }
            if !seen.insert(s.to_string()) {
                return Err(Error::parse(&what, i + 1, format!("duplicate source {s:?}")));
            }
            pairs.push((s.to_string(), t.to_string()));
        }
        Ok(TranslationPairList { pairs })
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut out = String::new();
        for (s, t) in &self.pairs {
            out.push_str(s);
            out.push('\t');
            out.push_str(t);
            out.push('\n');
        }
        fs::write(path, out).map_err(|e| Error::io(path, e))
    }
}

/// Per-pair bookkeeping of a loanword exchange.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExchangeRecord {
    pub source: String,
    pub target: String,
    pub borrowed_source: usize,
    pub borrowed_target: usize,
    pub exchanged: usize,
}

#[derive(Clone, Debug)]
pub struct ExchangeOutcome {
    pub corpus: Corpus,
    pub records: Vec<ExchangeRecord>,
    pub warnings: Vec<String>,
}

/// Whether the token at `pos` is surrounded by the other language: every
/// existing immediate neighbor carries a language label different from the
/// token's own. Documents shorter than two tokens never qualify.
pub fn is_borrowed_at(doc: &Document, pos: usize, part: &LanguagePartition) -> bool {
    if doc.len() < 2 {
        return false;
    }
    let Label::Lang(own) = part.label(&doc.tokens[pos]) else {
        return false;
    };
    let left = pos.checked_sub(1);
    let right = (pos + 1 < doc.len()).then_some(pos + 1);
    [left, right]
        .into_iter()
        .flatten()
        .all(|n| matches!(part.label(&doc.tokens[n]), Label::Lang(other) if other != own))
}

/// Frequency-preserving loanword exchange.
///
/// For each pair `(u, v)` with `m = min(borrowed(u), borrowed(v))`, `m`
/// borrowed occurrences of `u` become `v` and `m` borrowed occurrences of `v`
/// become `u`, chosen uniformly with the seeded RNG. Pairs are applied in list
/// order, each against the corpus as left by the previous pairs.
pub fn loanword_exchange(
    c: &Corpus,
    pairs: &TranslationPairList,
    part: &LanguagePartition,
    rng_seed: u64,
) -> ExchangeOutcome {
    let mut documents = c.documents.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut records = Vec::new();
    let mut warnings = Vec::new();
    let present: HashSet<&str> = c.tokens().collect();

    for (u, v) in pairs.pairs() {
        let missing: Vec<&str> = [u.as_str(), v.as_str()]
            .into_iter()
            .filter(|w| !present.contains(w))
            .collect();
        if !missing.is_empty() {
            warnings.push(format!("pair ({u}, {v}) skipped: {missing:?} absent from corpus"));
            continue;
        }
        let unlabeled: Vec<&str> = [u.as_str(), v.as_str()]
            .into_iter()
            .filter(|w| part.label(w) == Label::Abstain)
            .collect();
        if !unlabeled.is_empty() {
            warnings.push(format!(
                "pair ({u}, {v}) skipped: {unlabeled:?} carry no language label"
            ));
            continue;
        }

        let mut at_u = Vec::new();
        let mut at_v = Vec::new();
        for (d, doc) in documents.iter().enumerate() {
            for (p, tok) in doc.tokens.iter().enumerate() {
                let slot = if tok == u {
                    &mut at_u
                } else if tok == v {
                    &mut at_v
                } else {
                    continue;
                };
                if is_borrowed_at(doc, p, part) {
                    slot.push((d, p));
                }
            }
        }
        let m = at_u.len().min(at_v.len());
        let chosen_u: Vec<(usize, usize)> = at_u.choose_multiple(&mut rng, m).copied().collect();
        let chosen_v: Vec<(usize, usize)> = at_v.choose_multiple(&mut rng, m).copied().collect();
        for (d, p) in chosen_u {
            documents[d].tokens[p] = v.clone();
        }
        for (d, p) in chosen_v {
            documents[d].tokens[p] = u.clone();
        }
        records.push(ExchangeRecord {
            source: u.clone(),
            target: v.clone(),
            borrowed_source: at_u.len(),
            borrowed_target: at_v.len(),
            exchanged: m,
        });
    }

    ExchangeOutcome {
        corpus: Corpus::new(documents, format!("loanword_exchange({})", c.source_tag)),
        records,
        warnings,
    }
}

/// Sorted token frequency table; handy for audits.
pub fn frequency_table(c: &Corpus) -> BTreeMap<String, u64> {
    c.frequencies().into_iter().map(|(k, v)| (k.to_string(), v)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::langid::LanguagePartition;
    use proptest::prelude::*;

    fn toks(d: &Document) -> Vec<&str> {
        d.tokens.iter().map(String::as_str).collect()
    }

    fn corpus(lines: &[&str]) -> Corpus {
        Corpus::new(lines.iter().map(|l| Document::from_line(l)).collect(), "test")
    }

    #[test]
    fn preprocess_examples() {
        assert_eq!(
            toks(&preprocess("Pak PM, God bless!! 🙏")),
            ["pak", "pm", "god", "bless"]
        );
        assert!(preprocess("").is_empty());
        assert_eq!(toks(&preprocess("1971 Jung")), ["1971", "jung"]);
    }

    #[test]
    fn preprocess_keeps_devanagari_and_drops_variation_selectors() {
        let d = preprocess("शांति ❤️ Peace");
        assert_eq!(toks(&d), ["शांति", "peace"]);
        // combining marks inside Devanagari words are not punctuation
        assert_eq!(d.tokens[0].chars().count(), 5);
    }

    #[test]
    fn preprocess_only_lowercases_basic_latin() {
        assert_eq!(toks(&preprocess("ÉCOLE Über")), ["École", "Über"]);
    }

    #[test]
    fn invalid_utf8_reports_line() {
        let bytes = b"ok line\nbad \xff line\n";
        match decode_lines(bytes) {
            Err(Error::InvalidUtf8 { line }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn decode_lines_handles_crlf_and_trailing_newline() {
        assert_eq!(decode_lines(b"a b\r\nc\n").unwrap(), ["a b", "c"]);
        assert_eq!(decode_lines(b"a\n\nb").unwrap(), ["a", "", "b"]);
    }

    #[test]
    fn mix_preserves_documents_and_is_seeded() {
        let a = corpus(&["a b", "c"]);
        let b = corpus(&["d"]);
        let m1 = mix_corpora(&a, &b, 7).unwrap();
        let m2 = mix_corpora(&a, &b, 7).unwrap();
        assert_eq!(m1.documents, m2.documents);
        assert_eq!(m1.len(), 3);
        let mut got = m1.documents.clone();
        got.sort();
        let mut want: Vec<Document> = a.documents.iter().chain(&b.documents).cloned().collect();
        want.sort();
        assert_eq!(got, want);
        assert!(mix_corpora(&a, &Corpus::default(), 1).is_err());
    }

    #[test]
    fn mask_numbers_examples() {
        let c = corpus(&["1971 jung", "abc123"]);
        let m = mask_numbers(&c, "qzx9k").unwrap();
        assert_eq!(toks(&m.documents[0]), ["qzx9k", "jung"]);
        assert_eq!(toks(&m.documents[1]), ["abc123"]);
        let clash = corpus(&["qzx9k 12"]);
        assert!(matches!(mask_numbers(&clash, "qzx9k"), Err(Error::Precondition(_))));
    }

    fn hi_en_partition() -> LanguagePartition {
        let mut labels = vec![];
        for w in ["humein", "chahiye", "madad", "hai", "yeh"] {
            labels.push((w, "hi"));
        }
        for w in ["we", "need", "help", "please", "us"] {
            labels.push((w, "en"));
        }
        LanguagePartition::from_labels(labels, &HashMap::new())
    }

    #[test]
    fn exchange_with_unborrowed_partner_is_a_no_op() {
        let c = corpus(&["humein help chahiye", "we need help"]);
        let pairs = TranslationPairList::new([("help", "madad")]).unwrap();
        let part = hi_en_partition();
        let out = loanword_exchange(&c, &pairs, &part, 3);
        // madad is absent from the corpus entirely
        assert_eq!(out.corpus.documents, c.documents);
        assert_eq!(out.warnings.len(), 1);

        let c = corpus(&["humein help chahiye", "we need help", "yeh madad hai"]);
        let out = loanword_exchange(&c, &pairs, &part, 3);
        assert_eq!(out.corpus.documents, c.documents);
        assert_eq!(out.records[0].exchanged, 0);
        assert_eq!(out.records[0].borrowed_source, 1);
    }

    #[test]
    fn exchange_swaps_min_borrowed_count() {
        let mut lines = vec!["humein help chahiye"; 15];
        lines.extend(["we madad us"; 10]);
        for _ in 0..4 {
            lines.push("please help us");
            lines.push("yeh madad hai");
        }
        let c = corpus(&lines);
        let pairs = TranslationPairList::new([("help", "madad")]).unwrap();
        let part = hi_en_partition();
        let out = loanword_exchange(&c, &pairs, &part, 11);
        let rec = &out.records[0];
        assert_eq!((rec.borrowed_source, rec.borrowed_target, rec.exchanged), (15, 10, 10));
        let before = frequency_table(&c);
        let after = frequency_table(&out.corpus);
        assert_eq!(before, after);
        let hi_madad = out
            .corpus
            .documents
            .iter()
            .filter(|d| toks(d) == ["humein", "madad", "chahiye"])
            .count();
        let en_help = out
            .corpus
            .documents
            .iter()
            .filter(|d| toks(d) == ["we", "help", "us"])
            .count();
        assert_eq!((hi_madad, en_help), (10, 10));
    }

    #[test]
    fn exchange_edge_tokens_use_single_neighbor() {
        let part = hi_en_partition();
        let doc = Document::from_line("help chahiye");
        assert!(is_borrowed_at(&doc, 0, &part));
        let short = Document::from_line("help");
        assert!(!is_borrowed_at(&short, 0, &part));
        let mixed = Document::from_line("humein help us");
        assert!(!is_borrowed_at(&mixed, 1, &part));
    }

    #[test]
    fn pair_list_rejects_duplicate_sources() {
        assert!(TranslationPairList::new([("a", "x"), ("a", "y")]).is_err());
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("pairs.tsv");
        fs::write(&p, "# comment\nhelp\tmadad\npeace\taman\n").unwrap();
        let list = TranslationPairList::read(&p).unwrap();
        assert_eq!(list.pairs()[1], ("peace".to_string(), "aman".to_string()));
        fs::write(&p, "help\tmadad\nhelp\tsahayata\n").unwrap();
        assert!(TranslationPairList::read(&p).is_err());
    }

    proptest! {
        #[test]
        fn preprocess_is_idempotent(s in "\\PC{0,40}") {
            let once = preprocess(&s);
            let twice = preprocess(&once.to_line());
            prop_assert_eq!(once, twice);
        }

        #[test]
        fn preprocess_tokens_are_clean(s in "\\PC{0,40}") {
            for t in preprocess(&s).tokens {
                prop_assert!(!t.is_empty());
                prop_assert!(!t.chars().any(char::is_whitespace));
            }
        }

        #[test]
        fn mask_count_matches_digit_tokens(
            docs in prop::collection::vec(prop::collection::vec("[a-c]{1,3}|[0-9]{1,4}", 0..6), 1..6)
        ) {
            let c = Corpus::new(docs.into_iter().map(Document::new).collect(), "p");
            let digits = c.tokens().filter(|t| is_number(t)).count() as u64;
            let m = mask_numbers(&c, "maskk").unwrap();
            prop_assert_eq!(m.frequencies().get("maskk").copied().unwrap_or(0), digits);
            prop_assert_eq!(
                m.documents.iter().map(Document::len).collect::<Vec<_>>(),
                c.documents.iter().map(Document::len).collect::<Vec<_>>()
            );
        }

        #[test]
        fn exchange_preserves_all_frequencies(
            docs in prop::collection::vec(
                prop::collection::vec(prop::sample::select(vec![
                    "humein", "chahiye", "madad", "hai", "we", "need", "help", "us"]), 0..8),
                1..12),
            seed in 0u64..100,
        ) {
            let c = Corpus::new(docs.into_iter().map(Document::new).collect(), "p");
            let pairs = TranslationPairList::new([("help", "madad"), ("need", "chahiye")]).unwrap();
            let out = loanword_exchange(&c, &pairs, &hi_en_partition(), seed);
            prop_assert_eq!(frequency_table(&c), frequency_table(&out.corpus));
        }
    }
}
