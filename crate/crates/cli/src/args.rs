//! Command-line surface. Every argument struct is also serialized verbatim
//! into the run manifest, so defaults are recorded as resolved values.

use std::fmt::Display;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use polylex::analysis::LwiMode;
use polylex::xlingual::SelectionPolicy;
use polylex::{Band, Direction};
use serde::{Serialize, Serializer};

fn display<T: Display, S: Serializer>(v: &T, s: S) -> Result<S::Ok, S::Error> {
    s.collect_str(v)
}

/// Comma-separated K values for p@K.
#[derive(Clone, Debug, Serialize)]
#[serde(transparent)]
pub struct Ks(pub Vec<usize>);

fn parse_ks(s: &str) -> Result<Ks, String> {
    let ks = s
        .split(',')
        .map(|k| k.trim().parse::<usize>().map_err(|e| format!("bad K {k:?}: {e}")))
        .collect::<Result<Vec<_>, _>>()?;
    if ks.is_empty() || ks.contains(&0) {
        return Err("K values must be positive".into());
    }
    Ok(Ks(ks))
}

#[derive(Debug, Parser)]
#[command(
    name = "polylex",
    version,
    about = "Bilingual lexicon induction from one polyglot embedding space"
)]
pub struct Cli {
    /// Worker threads; 1 selects the deterministic single-worker modes.
    #[arg(long, global = true, env = "POLYLEX_THREADS", default_value_t = 1)]
    pub threads: usize,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(untagged)]
pub enum Command {
    /// Clean a raw text file into a one-document-per-line corpus.
    Preprocess(PreprocessArgs),
    /// Concatenate two corpora and shuffle their documents.
    Mix(MixArgs),
    /// Replace every all-digit token with a mask token.
    MaskNumbers(MaskNumbersArgs),
    /// Frequency-preserving exchange of borrowed occurrences of word pairs.
    Exchange(ExchangeArgs),
    /// Train a subword Skip-gram model.
    Train(TrainArgs),
    /// Split the model vocabulary by language from seed words.
    Langid(LangidArgs),
    /// Mine a lexicon from one frequency band of the source language.
    Mine(MineArgs),
    /// Score a lexicon against a gold dictionary.
    Eval(EvalArgs),
    /// Embed documents translated word by word into the target language.
    TranslateDocs(TranslateDocsArgs),
    /// Nearest-neighbor expansion of seed documents inside a pool.
    NnSample(NnSampleArgs),
    /// Sentence translation retrieval against a pool.
    RetrievalEval(RetrievalEvalArgs),
    /// Loan Word Index of every labeled word, or of selected words.
    Lwi(LwiArgs),
    /// Retention of successful translations under a corpus transform.
    #[command(subcommand)]
    Ablate(AblateCommand),
    /// Generate a synthetic bilingual corpus with a planted lexicon.
    Synth(SynthArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Preprocess(_) => "preprocess",
            Command::Mix(_) => "mix",
            Command::MaskNumbers(_) => "mask-numbers",
            Command::Exchange(_) => "exchange",
            Command::Train(_) => "train",
            Command::Langid(_) => "langid",
            Command::Mine(_) => "mine",
            Command::Eval(_) => "eval",
            Command::TranslateDocs(_) => "translate-docs",
            Command::NnSample(_) => "nn-sample",
            Command::RetrievalEval(_) => "retrieval-eval",
            Command::Lwi(_) => "lwi",
            Command::Ablate(AblateCommand::Numbers(_)) => "ablate numbers",
            Command::Ablate(AblateCommand::Loanwords(_)) => "ablate loanwords",
            Command::Ablate(AblateCommand::Cohesion(_)) => "ablate cohesion",
            Command::Synth(_) => "synth",
        }
    }
}

#[derive(Debug, Args, Serialize)]
pub struct PreprocessArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct MixArgs {
    #[arg(long)]
    pub a: PathBuf,
    #[arg(long)]
    pub b: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct MaskNumbersArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long, default_value = polylex::corpus::DEFAULT_NUMBER_MASK)]
    pub mask: String,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct ExchangeArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    /// Word pairs, `source<TAB>target` per line.
    #[arg(long)]
    pub pairs: PathBuf,
    #[arg(long)]
    pub partition: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct TrainArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    /// Text model path; the subword sidecar and counts file are written next
    /// to it with the extensions `.plxs` and `.counts`.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 100)]
    pub dim: usize,
    #[arg(long, default_value_t = 2)]
    pub min_n: usize,
    #[arg(long, default_value_t = 4)]
    pub max_n: usize,
    #[arg(long, default_value_t = 5)]
    pub epochs: usize,
    #[arg(long, default_value_t = 5)]
    pub window: usize,
    #[arg(long, default_value_t = 5)]
    pub negatives: usize,
    #[arg(long, default_value_t = 5)]
    pub min_count: u64,
    #[arg(long, default_value_t = 0.05)]
    pub lr: f64,
    #[arg(long, default_value_t = 2_000_000)]
    pub buckets: usize,
    #[arg(long, default_value_t = 1e-4)]
    pub subsample: f64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
}

/// A model on disk. Without explicit paths the sidecar and counts file are
/// picked up next to the text file when present.
#[derive(Debug, Args, Serialize)]
pub struct ModelArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub subwords: Option<PathBuf>,
    #[arg(long)]
    pub counts: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct LangidArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub model: ModelArgs,
    /// Seed words, `word<TAB>language` per line.
    #[arg(long)]
    pub seeds: PathBuf,
    #[arg(long, default_value_t = polylex::langid::DEFAULT_ABSTAIN_THRESHOLD)]
    pub abstain: f64,
    #[arg(long)]
    pub out: PathBuf,
}

/// Source/target restriction shared by every translating subcommand.
#[derive(Debug, Args, Serialize)]
pub struct TranslateArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub model: ModelArgs,
    #[arg(long)]
    pub partition: PathBuf,
    /// `source:target` language names.
    #[arg(long = "dir")]
    #[serde(rename = "dir", serialize_with = "display")]
    pub direction: Direction,
    #[arg(long, default_value_t = polylex::lexicon::DEFAULT_TARGET_MIN_FREQ)]
    pub min_target_freq: u64,
    #[arg(long, default_value_t = polylex::lexicon::DEFAULT_N)]
    pub n: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct MineArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub tr: TranslateArgs,
    #[arg(long, default_value = "0-5")]
    #[serde(serialize_with = "display")]
    pub band: Band,
    #[arg(long, default_value_t = polylex::lexicon::DEFAULT_SAMPLE_SIZE)]
    pub sample: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct EvalArgs {
    #[arg(long)]
    pub lexicon: PathBuf,
    #[arg(long)]
    pub gold: PathBuf,
    #[arg(long = "k", value_parser = parse_ks, default_value = "1,5,10")]
    pub ks: Ks,
    #[arg(long, default_value = "lexicon")]
    pub dataset: String,
    /// Also write the report here (it always goes to standard output).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Write the sources whose top candidate is gold, with that candidate.
    #[arg(long)]
    pub successful_out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct TranslateDocsArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub tr: TranslateArgs,
    #[arg(long)]
    pub docs: PathBuf,
    #[arg(long, default_value = "random")]
    #[serde(serialize_with = "display")]
    pub policy: SelectionPolicy,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Embedding matrix: `<rows> <dim>` header, then `line v1 .. v_dim`.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct NnSampleArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub model: ModelArgs,
    /// Seed documents, one per line. A seed identical to a pool line is that
    /// pool document.
    #[arg(long)]
    pub seed_docs: PathBuf,
    #[arg(long)]
    pub pool: PathBuf,
    /// Precomputed pool embeddings from a previous run.
    #[arg(long)]
    pub pool_embeddings: Option<PathBuf>,
    #[arg(long, default_value_t = polylex::xlingual::DEFAULT_SAMPLE_SIZE)]
    pub size: usize,
    /// Sampled documents, `pool_line<TAB>document` in order of addition.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct RetrievalEvalArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub tr: TranslateArgs,
    #[arg(long)]
    pub sources: PathBuf,
    #[arg(long)]
    pub pool: PathBuf,
    #[arg(long)]
    pub pool_embeddings: Option<PathBuf>,
    /// `source_line<TAB>pool_line` per line, 0-based.
    #[arg(long)]
    pub map: PathBuf,
    #[arg(long, default_value = "top")]
    #[serde(serialize_with = "display")]
    pub policy: SelectionPolicy,
    #[arg(long = "k", value_parser = parse_ks, default_value = "1,5,10")]
    pub ks: Ks,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "retrieval")]
    pub dataset: String,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct LwiArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long)]
    pub partition: PathBuf,
    #[arg(long, default_value = "per-adjacency")]
    #[serde(serialize_with = "display")]
    pub mode: LwiMode,
    /// Restrict the table to these words, one per line.
    #[arg(long)]
    pub words: Option<PathBuf>,
    /// Also report the mean pair LWI over these pairs.
    #[arg(long)]
    pub pairs: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

/// Inputs and settings of a full train, langid, mine and evaluate run.
#[derive(Debug, Args, Serialize)]
pub struct PipelineArgs {
    /// Seed words, `word<TAB>language` per line.
    #[arg(long)]
    pub seeds: PathBuf,
    #[arg(long)]
    pub gold: PathBuf,
    /// Pipeline configuration JSON; absent fields take their defaults.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Overrides the training and mining seeds of the configuration.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(untagged)]
pub enum AblateCommand {
    /// Mask numerals and re-evaluate the baseline's successful pairs.
    Numbers(AblateNumbersArgs),
    /// Exchange borrowed occurrences and re-evaluate.
    Loanwords(AblateLoanwordsArgs),
    /// Same-source against cross-source language halves.
    Cohesion(AblateCohesionArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct AblateNumbersArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    #[command(flatten)]
    #[serde(flatten)]
    pub pipeline: PipelineArgs,
    #[arg(long, default_value = polylex::corpus::DEFAULT_NUMBER_MASK)]
    pub mask: String,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct AblateLoanwordsArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    #[command(flatten)]
    #[serde(flatten)]
    pub pipeline: PipelineArgs,
    /// Pairs to exchange; defaults to the baseline's successful pairs.
    #[arg(long)]
    pub pairs: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub exchange_seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct AblateCohesionArgs {
    /// First-language half of source A.
    #[arg(long)]
    pub a1: PathBuf,
    /// Second-language half of source A.
    #[arg(long)]
    pub a2: PathBuf,
    /// First-language half of source B.
    #[arg(long)]
    pub b1: PathBuf,
    /// Second-language half of source B.
    #[arg(long)]
    pub b2: PathBuf,
    #[command(flatten)]
    #[serde(flatten)]
    pub pipeline: PipelineArgs,
    #[arg(long, default_value_t = 0)]
    pub mix_seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct SynthArgs {
    /// Generator specification JSON; absent fields take their defaults.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    /// Overrides both generator seeds of the specification.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory; created when missing.
    #[arg(long)]
    pub out: PathBuf,
}
