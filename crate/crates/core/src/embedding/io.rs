//! Model persistence.
//!
//! * text file: `<vocab_size> <dim>` header, then `word v1 .. v_dim` per word.
//!   The vectors are the composed (word + n-gram mean) representations, so
//!   the file is usable on its own.
//! * subword sidecar: `PLXS`, version byte 1, little-endian `u32` bucket
//!   count, dim, min_n, max_n, then `bucket_count * dim` `f32` values.
//! * counts file: `word<TAB>count` in id order, preceded by a
//!   `#total_tokens<TAB>n` line.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::{EmbeddingModel, Hyperparams, SubwordTable, Vocab};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const SIDECAR_MAGIC: &[u8; 4] = b"PLXS";
pub const SIDECAR_VERSION: u8 = 1;

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).map_err(|e| Error::io(path, e))?))
}

fn open(path: &Path) -> Result<BufReader<File>> {
    Ok(BufReader::new(File::open(path).map_err(|e| Error::io(path, e))?))
}

impl<F: Scalar> EmbeddingModel<F> {
    pub fn write_text(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut w = create(path)?;
        let io = |e| Error::io(path, e);
        writeln!(w, "{} {}", self.vocab().len(), self.dim()).map_err(io)?;
        for id in 0..self.vocab().len() {
            write!(w, "{}", self.vocab().word(id)).map_err(io)?;
            for x in self.vector(id) {
                // Display prints the shortest string that parses back exactly.
                write!(w, " {x}").map_err(io)?;
            }
            writeln!(w).map_err(io)?;
        }
        w.flush().map_err(io)
    }

    pub fn write_sidecar(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let table = self
            .subwords()
            .ok_or_else(|| Error::Format("model has no subword table".into()))?;
        let mut w = create(path)?;
        let io = |e| Error::io(path, e);
        w.write_all(SIDECAR_MAGIC).map_err(io)?;
        w.write_all(&[SIDECAR_VERSION]).map_err(io)?;
        for v in [table.bucket_count, table.dim, table.min_n, table.max_n] {
            let v = u32::try_from(v).map_err(|_| Error::Format("sidecar field exceeds u32".into()))?;
            w.write_all(&v.to_le_bytes()).map_err(io)?;
        }
        for x in &table.data {
            w.write_all(&(x.as_f64() as f32).to_le_bytes()).map_err(io)?;
        }
        w.flush().map_err(io)
    }

    pub fn write_counts(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut w = create(path)?;
        let io = |e| Error::io(path, e);
        writeln!(w, "#total_tokens\t{}", self.vocab().total_tokens()).map_err(io)?;
        for (word, count) in self.vocab().words().iter().zip(self.vocab().counts()) {
            writeln!(w, "{word}\t{count}").map_err(io)?;
        }
        w.flush().map_err(io)
    }

    /// Loads a text model, optionally with its subword sidecar and counts.
    ///
    /// With a sidecar the raw word rows are recovered from the composed
    /// vectors; without one every word is its stored vector and
    /// out-of-vocabulary lookups fail. Missing counts are recorded as zero.
    pub fn load(text: impl AsRef<Path>, sidecar: Option<&Path>, counts: Option<&Path>) -> Result<Self> {
        let text = text.as_ref();
        let (words, composed, dim) = read_text::<F>(text)?;
        let subwords = sidecar.map(read_sidecar::<F>).transpose()?;
        if let Some(t) = &subwords {
            if t.dim != dim {
                return Err(Error::Dimension {
                    expected: dim,
                    got: t.dim,
                });
            }
        }
        let vocab = match counts {
            Some(p) => {
                let (entries, total) = read_counts(p)?;
                if entries.len() != words.len() || entries.iter().zip(&words).any(|((a, _), b)| a != b) {
                    return Err(Error::Format(format!(
                        "{} does not match the vocabulary of {}",
                        p.display(),
                        text.display()
                    )));
                }
                Vocab::from_ordered(entries, total)?
            }
            None => Vocab::from_ordered(words.into_iter().map(|w| (w, 0)).collect(), 0)?,
        };

        let mut hp = Hyperparams {
            dim,
            ..Hyperparams::default()
        };
        let word_rows = match &subwords {
            Some(t) => {
                hp.min_n = t.min_n;
                hp.max_n = t.max_n;
                hp.bucket_count = t.bucket_count;
                let mut rows = Vec::with_capacity(composed.len());
                for (id, v) in composed.chunks_exact(dim).enumerate() {
                    let buckets = t.buckets(vocab.word(id));
                    let scale = (buckets.len() + 1) as f64;
                    let mut raw: Vec<f64> = v.iter().map(|x| x.as_f64() * scale).collect();
                    for b in &buckets {
                        for (r, s) in raw.iter_mut().zip(t.row(*b)) {
                            *r -= s.as_f64();
                        }
                    }
                    rows.extend(raw.into_iter().map(F::of));
                }
                rows
            }
            None => composed.clone(),
        };
        EmbeddingModel::with_composed(vocab, word_rows, subwords, hp, composed)
    }
}

fn read_text<F: Scalar>(path: &Path) -> Result<(Vec<String>, Vec<F>, usize)> {
    let what = path.display().to_string();
    let mut lines = open(path)?.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::parse(&what, 1, "missing header"))?
        .map_err(|e| Error::io(path, e))?;
    let mut it = header.split_whitespace();
    let parse_usize = |s: Option<&str>| s.and_then(|s| s.parse::<usize>().ok());
    let (Some(n), Some(dim)) = (parse_usize(it.next()), parse_usize(it.next())) else {
        return Err(Error::parse(&what, 1, "header must be `<vocab_size> <dim>`"));
    };
    if dim == 0 {
        return Err(Error::parse(&what, 1, "dim must be positive"));
    }
    let mut words = Vec::with_capacity(n);
    let mut data = Vec::with_capacity(n * dim);
    for (i, line) in lines.enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.is_empty() {
            continue;
        }
        let mut fields = line.split(' ');
        let word = fields.next().unwrap_or_default();
        let before = data.len();
        for f in fields.filter(|f| !f.is_empty()) {
            let x: F = f
                .parse()
                .map_err(|_| Error::parse(&what, i + 2, format!("bad number {f:?}")))?;
            data.push(x);
        }
        if data.len() - before != dim {
            return Err(Error::parse(
                &what,
                i + 2,
                format!("expected {dim} values, got {}", data.len() - before),
            ));
        }
        words.push(word.to_string());
    }
    if words.len() != n {
        return Err(Error::parse(
            &what,
            words.len() + 1,
            format!("header announces {n} words, file has {}", words.len()),
        ));
    }
    Ok((words, data, dim))
}

fn read_sidecar<F: Scalar>(path: &Path) -> Result<SubwordTable<F>> {
    let mut r = open(path)?;
    let io = |e| Error::io(path, e);
    let mut head = [0u8; 5];
    r.read_exact(&mut head).map_err(io)?;
    if &head[..4] != SIDECAR_MAGIC {
        return Err(Error::Format(format!("{}: bad magic", path.display())));
    }
    if head[4] != SIDECAR_VERSION {
        return Err(Error::Format(format!(
            "{}: unsupported version {}",
            path.display(),
            head[4]
        )));
    }
    let mut fields = [0usize; 4];
    for f in fields.iter_mut() {
        let mut b = [0u8; 4];
        r.read_exact(&mut b).map_err(io)?;
        *f = u32::from_le_bytes(b) as usize;
    }
    let [bucket_count, dim, min_n, max_n] = fields;
    if bucket_count == 0 || dim == 0 || min_n == 0 || min_n > max_n {
        return Err(Error::Format(format!("{}: bad header", path.display())));
    }
    let mut bytes = Vec::with_capacity(bucket_count * dim * 4);
    r.read_to_end(&mut bytes).map_err(io)?;
    if bytes.len() != bucket_count * dim * 4 {
        return Err(Error::Format(format!(
            "{}: expected {} data bytes, found {}",
            path.display(),
            bucket_count * dim * 4,
            bytes.len()
        )));
    }
    let data = bytes
        .chunks_exact(4)
        .map(|c| F::of(f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64))
        .collect();
    Ok(SubwordTable {
        bucket_count,
        min_n,
        max_n,
        dim,
        data,
    })
}

fn read_counts(path: &Path) -> Result<(Vec<(String, u64)>, u64)> {
    let what = path.display().to_string();
    let mut total = None;
    let mut entries = Vec::new();
    for (i, line) in open(path)?.lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let bad = || Error::parse(&what, i + 1, "expected word<TAB>count");
        let (k, v) = line.split_once('\t').ok_or_else(bad)?;
        let v: u64 = v.trim().parse().map_err(|_| bad())?;
        if k == "#total_tokens" {
            total = Some(v);
        } else {
            entries.push((k.to_string(), v));
        }
    }
    let total = total.unwrap_or_else(|| entries.iter().map(|e| e.1).sum());
    Ok((entries, total))
}
