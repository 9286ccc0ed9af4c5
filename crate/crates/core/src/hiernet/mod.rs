//! Hierarchical networks: per-cluster sub-models feeding a head, trained
//! stage by stage, with latents handed to symbolic regression.

mod model;
mod pipeline;
mod plan;
mod stage;

use thiserror::Error;

pub use model::StageModel;
pub use pipeline::{
    assemble_system, fit_level, level_config, level_inputs, run_pipeline, LevelFit, NoSink,
    PipelineConfig, PipelineOutcome, PipelineSink, DEFAULT_INDEX_ROWS,
};
pub use plan::{ClusterSpec, StageSpec, UhisrPlan, DEFAULT_HIDDEN};
pub use stage::{
    extract_latents, orientation_sign, probe_contrasts, probe_latent, probe_one_hot, stage_inputs,
    stage_target, train_stage, LatentSource, LatentTable, StageResult, ROW_COLUMN,
};

use crate::dataset::DatasetError;
use crate::eqsystem::SystemError;
use crate::neural::NeuralError;
use crate::symreg::SrError;

#[derive(Debug, Error)]
pub enum HierError {
    #[error("invalid plan: {0}")]
    Plan(String),
    #[error("missing column `{0}`")]
    MissingColumn(String),
    #[error("missing upstream latent `{0}`")]
    MissingLatent(String),
    #[error("unknown latent `{0}`")]
    UnknownLatent(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("non-finite value: {0}")]
    NonFinite(String),
    #[error("no equation found for level `{0}`")]
    EmptyFront(String),
    #[error("{0}: {1}")]
    Io(String, #[source] std::io::Error),
    #[error(transparent)]
    Neural(#[from] NeuralError),
    #[error(transparent)]
    Sr(#[from] SrError),
    #[error(transparent)]
    System(#[from] SystemError),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
}

/// Independent seed for a named sub-task of a run.
pub fn derive_seed(master: u64, tag: &str) -> u64 {
    // FNV-1a over the tag, then a splitmix64 finaliser with the master seed.
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in tag.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    let mut z = master ^ h.rotate_left(17);
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
