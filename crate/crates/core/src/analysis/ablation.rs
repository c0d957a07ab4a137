//! End-to-end pipeline (train, language partition, lexicon mining,
//! evaluation) and the corpus-transform ablations built on it.
//!
//! A run with `threads == 1` is fully determined by its inputs and seeds, so
//! repeated ablations produce identical report bytes.

use serde::{Deserialize, Serialize};

use crate::corpus::{loanword_exchange, mask_numbers, mix_corpora, Corpus, TranslationPairList};
use crate::embedding::{train_with_threads, EmbeddingModel, Hyperparams};
use crate::error::{Error, Result};
use crate::langid::{estimate_partition, Band, LanguagePartition, SeedSet, DEFAULT_ABSTAIN_THRESHOLD};
use crate::lexicon::{
    evaluate_pk, mine_lexicon, successful_at_1, translate_words, Direction, EvalReport, GoldDictionary, Lexicon,
    Translator, DEFAULT_K, DEFAULT_N, DEFAULT_SAMPLE_SIZE, DEFAULT_TARGET_MIN_FREQ,
};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub hyperparams: Hyperparams,
    pub threads: usize,
    pub abstain_threshold: f64,
    pub direction: Direction,
    pub band: Band,
    pub sample_size: usize,
    pub n: usize,
    pub target_min_freq: u64,
    pub ks: Vec<usize>,
    pub mining_seed: u64,
    pub dataset: String,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            hyperparams: Hyperparams::default(),
            threads: 1,
            abstain_threshold: DEFAULT_ABSTAIN_THRESHOLD,
            direction: Direction::new("l1", "l2").expect("distinct"),
            band: Band::Top5,
            sample_size: DEFAULT_SAMPLE_SIZE,
            n: DEFAULT_N,
            target_min_freq: DEFAULT_TARGET_MIN_FREQ,
            ks: DEFAULT_K.to_vec(),
            mining_seed: 0,
            dataset: "corpus".into(),
        }
    }
}

/// Everything a pipeline run produced.
#[derive(Clone, Debug)]
pub struct PipelineRun {
    pub model: EmbeddingModel<f32>,
    pub partition: LanguagePartition,
    pub lexicon: Lexicon<f32>,
    pub report: EvalReport,
    /// Mined sources whose top-1 candidate is gold.
    pub successful: TranslationPairList,
}

/// Seeds absent from the model's vocabulary are dropped; a language left
/// without seeds is an error.
fn seeds_in_vocabulary(seeds: &SeedSet, m: &EmbeddingModel<f32>) -> Result<SeedSet> {
    let kept: Vec<(String, Vec<String>)> = seeds
        .languages()
        .iter()
        .map(|(l, ws)| {
            (
                l.clone(),
                ws.iter().filter(|w| m.vocab().contains(w)).cloned().collect(),
            )
        })
        .collect();
    if let Some((l, _)) = kept.iter().find(|(_, ws)| ws.is_empty()) {
        return Err(Error::Precondition(format!("no seed of {l:?} survives min_count")));
    }
    SeedSet::new(kept)
}

fn train_and_partition(
    c: &Corpus,
    seeds: &SeedSet,
    cfg: &PipelineConfig,
) -> Result<(EmbeddingModel<f32>, LanguagePartition)> {
    let model = train_with_threads(c, &cfg.hyperparams, cfg.threads)?;
    let seeds = seeds_in_vocabulary(seeds, &model)?;
    let partition = estimate_partition(&model, &seeds, cfg.abstain_threshold)?;
    Ok((model, partition))
}

pub fn run_pipeline(c: &Corpus, seeds: &SeedSet, gold: &GoldDictionary, cfg: &PipelineConfig) -> Result<PipelineRun> {
    let (model, partition) = train_and_partition(c, seeds, cfg)?;
    let tr = Translator::new(&model, &partition, cfg.direction.clone(), cfg.target_min_freq)?;
    let lexicon = mine_lexicon(&tr, cfg.band, cfg.sample_size, cfg.n, cfg.mining_seed)?;
    let report = evaluate_pk(&lexicon, gold, &cfg.ks, &cfg.dataset)?;
    let successful = successful_at_1(&lexicon, gold);
    Ok(PipelineRun {
        model,
        partition,
        lexicon,
        report,
        successful,
    })
}

/// The artifacts of a baseline run that the ablations compare against.
#[derive(Clone, Debug)]
pub struct Baseline {
    pub report: EvalReport,
    pub successful: TranslationPairList,
    pub partition: LanguagePartition,
}

impl From<PipelineRun> for Baseline {
    fn from(r: PipelineRun) -> Self {
        Baseline {
            report: r.report,
            successful: r.successful,
            partition: r.partition,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Transform {
    MaskNumbers {
        mask: String,
    },
    LoanwordExchange {
        pairs: usize,
        exchanged: usize,
        rng_seed: u64,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AblationReport {
    pub baseline: EvalReport,
    /// Re-evaluation of exactly the baseline's successful pairs.
    pub transformed: EvalReport,
    /// Fraction of the baseline's successful pairs still correct at top 1.
    pub retention: f64,
    pub transform: Transform,
}

impl AblationReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Retrains on `transformed`, then translates each baseline-successful source
/// and checks its top 1 against the baseline pair. Sources that can no longer
/// be translated count as lost.
fn retention_run(
    transformed: &Corpus,
    seeds: &SeedSet,
    baseline: &Baseline,
    cfg: &PipelineConfig,
    transform: Transform,
) -> Result<AblationReport> {
    if baseline.successful.is_empty() {
        return Err(Error::MissingBaseline(
            "the baseline has no successful top-1 pairs".into(),
        ));
    }
    let (model, partition) = train_and_partition(transformed, seeds, cfg)?;
    let tr = Translator::new(&model, &partition, cfg.direction.clone(), cfg.target_min_freq)?;
    let sources: Vec<&str> = baseline.successful.pairs().iter().map(|p| p.0.as_str()).collect();
    let lex = translate_words(&tr, &sources, cfg.n, None);
    let pairs_gold = GoldDictionary::from_pairs(baseline.successful.pairs().iter().cloned());
    let report = evaluate_pk(
        &lex,
        &pairs_gold,
        &cfg.ks,
        &format!("{} (baseline successes)", cfg.dataset),
    )?;
    Ok(AblationReport {
        baseline: baseline.report.clone(),
        retention: successful_at_1(&lex, &pairs_gold).len() as f64 / pairs_gold.len() as f64,
        transformed: report,
        transform,
    })
}

/// Number ablation: every all-digit token becomes `mask`.
pub fn ablate_numbers(
    c: &Corpus,
    seeds: &SeedSet,
    baseline: &Baseline,
    cfg: &PipelineConfig,
    mask: &str,
) -> Result<AblationReport> {
    let masked = mask_numbers(c, mask)?;
    retention_run(
        &masked,
        seeds,
        baseline,
        cfg,
        Transform::MaskNumbers { mask: mask.to_string() },
    )
}

/// Loanword ablation: frequency-preserving exchange over `pairs`, by default
/// the baseline's successful pairs, with borrowed occurrences judged by the
/// baseline's partition.
pub fn ablate_loanwords(
    c: &Corpus,
    seeds: &SeedSet,
    baseline: &Baseline,
    cfg: &PipelineConfig,
    pairs: Option<&TranslationPairList>,
    rng_seed: u64,
) -> Result<(AblationReport, Vec<String>)> {
    let pairs = pairs.unwrap_or(&baseline.successful);
    let out = loanword_exchange(c, pairs, &baseline.partition, rng_seed);
    let transform = Transform::LoanwordExchange {
        pairs: pairs.len(),
        exchanged: out.records.iter().map(|r| r.exchanged).sum(),
        rng_seed,
    };
    Ok((
        retention_run(&out.corpus, seeds, baseline, cfg, transform)?,
        out.warnings,
    ))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CohesionReport {
    /// Both languages drawn from source A.
    pub cohesive: EvalReport,
    /// First language from source A, second from source B.
    pub mixed: EvalReport,
}

impl CohesionReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Topical cohesion: the same pipeline on a same-source mix and on a
/// cross-source mix. Each source is given as its two single-language halves.
pub fn ablate_cohesion(
    source_a: [&Corpus; 2],
    source_b: [&Corpus; 2],
    seeds: &SeedSet,
    gold: &GoldDictionary,
    cfg: &PipelineConfig,
    mix_seed: u64,
) -> Result<CohesionReport> {
    let cohesive = mix_corpora(source_a[0], source_a[1], mix_seed)?;
    let mixed = mix_corpora(source_a[0], source_b[1], mix_seed)?;
    let arm = |c: &Corpus, tag: &str| -> Result<EvalReport> {
        let cfg = PipelineConfig {
            dataset: format!("{} ({tag})", cfg.dataset),
            ..cfg.clone()
        };
        Ok(run_pipeline(c, seeds, gold, &cfg)?.report)
    };
    Ok(CohesionReport {
        cohesive: arm(&cohesive, "cohesive")?,
        mixed: arm(&mixed, "mixed")?,
    })
}
