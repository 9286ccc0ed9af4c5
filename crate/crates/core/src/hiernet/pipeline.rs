use std::collections::BTreeMap;

use super::plan::UhisrPlan;
use super::stage::{train_stage, LatentTable, StageResult};
use super::{derive_seed, HierError};
use crate::dataset::{split, DataTable, SplitIndices};
use crate::eqsystem::{fit_report, EquationSystem, FitReport};
use crate::neural::{Activation, TrainConfig};
use crate::symreg::{fit, select_equation, Candidate, Link, ParetoFront, SRConfig};

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub seed: u64,
    /// Shared by every stage; the seed field is replaced by `seed`.
    pub train: TrainConfig,
    /// Levels that reproduce a sigmoid-headed stage target (`Rf`).
    pub sr_rf: SRConfig,
    /// Every other level.
    pub sr_index: SRConfig,
    /// Per-stage replacements for `train`, keyed by 1-based stage number.
    pub stage_train: BTreeMap<usize, TrainConfig>,
    /// Per-level replacements for `sr_rf` / `sr_index`.
    pub sr_levels: BTreeMap<String, SRConfig>,
}

impl PipelineConfig {
    /// Training settings for stage `n`, carrying the master seed.
    pub fn train_for(&self, n: usize) -> TrainConfig {
        TrainConfig {
            seed: self.seed,
            ..self.stage_train.get(&n).unwrap_or(&self.train).clone()
        }
    }
}

/// Row cap for index-level searches: the 500-cycle budget over a few
/// thousand rows costs hours on one core.
pub const DEFAULT_INDEX_ROWS: usize = 1000;

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            seed: 0,
            train: TrainConfig::default(),
            sr_rf: SRConfig::rf_level(),
            sr_index: SRConfig {
                max_rows: Some(DEFAULT_INDEX_ROWS),
                ..SRConfig::index_level()
            },
            stage_train: BTreeMap::new(),
            sr_levels: BTreeMap::new(),
        }
    }
}

/// One distilled level: `level ~ f(inputs)`.
#[derive(Debug, Clone)]
pub struct LevelFit {
    pub level: String,
    pub inputs: Vec<String>,
    pub front: ParetoFront,
    pub selected: Candidate,
    pub link: Link,
}

impl LevelFit {
    pub fn input_refs(&self) -> Vec<&str> {
        self.inputs.iter().map(String::as_str).collect()
    }
}

/// Receives results as soon as they exist, so a failure later in the run
/// still leaves earlier artifacts behind.
pub trait PipelineSink {
    fn stage_done(
        &mut self,
        _result: &StageResult,
        _latents: &LatentTable,
    ) -> Result<(), HierError> {
        Ok(())
    }
    fn level_done(&mut self, _fit: &LevelFit) -> Result<(), HierError> {
        Ok(())
    }
}

pub struct NoSink;
impl PipelineSink for NoSink {}

#[derive(Debug, Clone)]
pub struct PipelineOutcome {
    pub split: SplitIndices,
    pub stages: Vec<StageResult>,
    /// Every latent for every row.
    pub latents: LatentTable,
    /// In fitting order.
    pub levels: Vec<LevelFit>,
    pub system: EquationSystem,
    /// Scored on the test rows.
    pub report: FitReport,
}

/// Inputs of a level: the latents of the stage that produced `level` as a
/// target, or the columns of the cluster that produced it as a latent.
pub fn level_inputs(plan: &UhisrPlan, level: &str) -> Option<(Vec<String>, bool)> {
    if let Some(s) = plan.stages.iter().find(|s| s.target == level) {
        let sigmoid = s.head_output == Activation::Sigmoid;
        return Some((s.latents().into_iter().map(String::from).collect(), sigmoid));
    }
    plan.stages
        .iter()
        .find_map(|s| s.cluster(level).map(|(_, c)| (c.columns.clone(), false)))
}

/// SR settings for `level`, seeded from the master seed and level name.
pub fn level_config(
    plan: &UhisrPlan,
    cfg: &PipelineConfig,
    level: &str,
) -> Result<SRConfig, HierError> {
    let (_, sigmoid) =
        level_inputs(plan, level).ok_or_else(|| HierError::UnknownLatent(level.to_string()))?;
    let mut sr = match cfg.sr_levels.get(level) {
        Some(c) => c.clone(),
        None if sigmoid => cfg.sr_rf.clone(),
        None => cfg.sr_index.clone(),
    };
    sr.link = if sigmoid {
        Link::Sigmoid
    } else {
        Link::Identity
    };
    sr.seed = derive_seed(cfg.seed, &format!("sr/{level}"));
    Ok(sr)
}

/// Fits `level` on `rows`, reading inputs from `latents` first and `table`
/// second. The target is the latent of that name, or the table column.
pub fn fit_level(
    plan: &UhisrPlan,
    level: &str,
    table: &DataTable,
    latents: &LatentTable,
    rows: &[usize],
    sr: &SRConfig,
) -> Result<LevelFit, HierError> {
    let (inputs, _) =
        level_inputs(plan, level).ok_or_else(|| HierError::UnknownLatent(level.to_string()))?;
    let lookup = |name: &str| -> Result<&[f64], HierError> {
        latents
            .column(name)
            .or_else(|| table.column(name))
            .ok_or_else(|| {
                if plan.stage_of(name).is_some() {
                    HierError::MissingLatent(name.to_string())
                } else {
                    HierError::MissingColumn(name.to_string())
                }
            })
    };
    let pick = |c: &[f64]| rows.iter().map(|&r| c[r]).collect::<Vec<f64>>();
    let cols: Vec<Vec<f64>> = inputs
        .iter()
        .map(|n| lookup(n).map(pick))
        .collect::<Result<_, _>>()?;
    let y = pick(lookup(level)?);
    let refs: Vec<&[f64]> = cols.iter().map(Vec::as_slice).collect();
    log::info!(
        "distilling {level} from {} on {} rows",
        inputs.join(", "),
        rows.len()
    );
    let front = fit(&refs, &y, sr)?;
    let selected =
        select_equation(&front).ok_or_else(|| HierError::EmptyFront(level.to_string()))?;
    Ok(LevelFit {
        level: level.to_string(),
        inputs,
        front,
        selected,
        link: sr.link,
    })
}

/// Equations bottom-up: deepest stage first, leaf latents before the stage
/// target that combines them.
pub fn assemble_system(plan: &UhisrPlan, fits: &[LevelFit]) -> Result<EquationSystem, HierError> {
    let mut sys = EquationSystem::new();
    for s in plan.stages.iter().rev() {
        let leaves = s.latents().into_iter().filter(|l| !plan.is_refined(l));
        for name in leaves.chain(std::iter::once(s.target.as_str())) {
            let f = fits
                .iter()
                .find(|f| f.level == name)
                .ok_or_else(|| HierError::EmptyFront(name.to_string()))?;
            sys.push(&f.level, &f.selected.expr, &f.input_refs(), f.link)?;
        }
    }
    Ok(sys)
}

/// Trains every stage in order, distils each level on the training rows,
/// assembles the equation system and scores it on the test rows.
pub fn run_pipeline(
    table: &DataTable,
    plan: &UhisrPlan,
    cfg: &PipelineConfig,
    sink: &mut dyn PipelineSink,
) -> Result<PipelineOutcome, HierError> {
    plan.validate()?;
    plan.check_columns(|c| table.column(c).is_some())?;
    let split = split(table.n_rows(), cfg.seed)?;

    let mut latents = LatentTable::new(table.n_rows());
    let mut stages = Vec::new();
    let mut levels = Vec::new();
    for n in 1..=plan.stages.len() {
        let result = train_stage(plan, n, table, &latents, &split, &cfg.train_for(n))?;
        latents.merge(&result.latents)?;
        sink.stage_done(&result, &latents)?;
        stages.push(result);

        let stage = plan.stage(n)?;
        let leaves = stage.latents().into_iter().filter(|l| !plan.is_refined(l));
        for level in std::iter::once(stage.target.as_str()).chain(leaves) {
            let sr = level_config(plan, cfg, level)?;
            let f = fit_level(plan, level, table, &latents, &split.train, &sr)?;
            sink.level_done(&f)?;
            levels.push(f);
        }
    }

    let system = assemble_system(plan, &levels)?;
    let test_table = table.select_rows(&split.test);
    let test_latents = latents.select_rows(&split.test);
    let report = fit_report(&system, &test_table, Some(test_latents.table()))?;
    Ok(PipelineOutcome {
        split,
        stages,
        latents,
        levels,
        system,
        report,
    })
}
