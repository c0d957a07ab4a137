//! Loan Word Index, corpus-transform ablations, and the synthetic benchmark
//! corpus.

pub mod ablation;
pub mod lwi;
pub mod synth;

pub use ablation::{
    ablate_cohesion, ablate_loanwords, ablate_numbers, run_pipeline, AblationReport, Baseline, CohesionReport,
    PipelineConfig, PipelineRun, Transform,
};
pub use lwi::{lwi, lwi_table, mean_pair_lwi, pair_lwi, write_lwi, LwiMode, LwiRecord};
pub use synth::{gen_synthetic, SyntheticCorpus, SyntheticSpec};
