use std::io::{Read, Write};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::model::StageModel;
use super::plan::{StageSpec, UhisrPlan};
use super::{derive_seed, HierError};
use crate::dataset::{r_squared, rmse, DataTable, SplitIndices};
use crate::neural::{train, EpochRecord, Samples, TrainConfig};

/// Name of the row-index column in latent CSV files.
pub const ROW_COLUMN: &str = "row";

/// Where a latent column came from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LatentSource {
    pub latent: String,
    pub stage: usize,
    /// Epoch of the checkpoint that produced the values.
    pub epoch: usize,
}

/// Extracted latent values, one column per latent, one row per dataset row.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LatentTable {
    data: DataTable,
    sources: Vec<LatentSource>,
}

impl LatentTable {
    pub fn new(n_rows: usize) -> Self {
        LatentTable {
            data: DataTable::new(n_rows),
            sources: Vec::new(),
        }
    }

    pub fn n_rows(&self) -> usize {
        self.data.n_rows()
    }

    pub fn names(&self) -> &[String] {
        self.data.names()
    }

    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.data.column(name)
    }

    pub fn table(&self) -> &DataTable {
        &self.data
    }

    pub fn sources(&self) -> &[LatentSource] {
        &self.sources
    }

    /// Adds or replaces a latent column; values must be finite.
    pub fn insert(&mut self, source: LatentSource, values: Vec<f64>) -> Result<(), HierError> {
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(HierError::NonFinite(format!(
                "latent `{}` at row {i}",
                source.latent
            )));
        }
        self.data.set_column(source.latent.clone(), values)?;
        self.sources.retain(|s| s.latent != source.latent);
        self.sources.push(source);
        Ok(())
    }

    /// Copies every column of `other` into `self`.
    pub fn merge(&mut self, other: &LatentTable) -> Result<(), HierError> {
        for s in &other.sources {
            let col = other
                .column(&s.latent)
                .expect("source has a column")
                .to_vec();
            self.insert(s.clone(), col)?;
        }
        Ok(())
    }

    pub fn select_rows(&self, rows: &[usize]) -> LatentTable {
        LatentTable {
            data: self.data.select_rows(rows),
            sources: self.sources.clone(),
        }
    }

    /// CSV with a leading `row` index column.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), HierError> {
        let mut t = DataTable::new(self.n_rows());
        t.add_column(ROW_COLUMN, (0..self.n_rows()).map(|i| i as f64).collect())?;
        for name in self.names() {
            t.add_column(name.clone(), self.column(name).expect("listed").to_vec())?;
        }
        t.write_csv(out)?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("utf-8")
    }

    /// Reads a file written by [`LatentTable::write_csv`]. Provenance is not
    /// stored in the CSV and comes back as stage 0, epoch 0.
    pub fn read_csv<R: Read>(input: R) -> Result<Self, HierError> {
        let mut t = DataTable::read_csv(input)?;
        let rows = t
            .remove_column(ROW_COLUMN)
            .ok_or_else(|| HierError::MissingColumn(ROW_COLUMN.into()))?;
        if rows.iter().enumerate().any(|(i, &r)| r != i as f64) {
            return Err(HierError::Shape(
                "row column must count 0, 1, 2, ...".into(),
            ));
        }
        let mut out = LatentTable::new(t.n_rows());
        for name in t.names().to_vec() {
            let col = t.column(&name).expect("listed").to_vec();
            out.insert(
                LatentSource {
                    latent: name,
                    stage: 0,
                    epoch: 0,
                },
                col,
            )?;
        }
        Ok(out)
    }

    pub fn read_csv_path(path: impl AsRef<std::path::Path>) -> Result<Self, HierError> {
        let path = path.as_ref();
        let f =
            std::fs::File::open(path).map_err(|e| HierError::Io(path.display().to_string(), e))?;
        Self::read_csv(f)
    }
}

/// Row-major stage inputs for every table row.
pub fn stage_inputs(stage: &StageSpec, table: &DataTable) -> Result<Vec<f64>, HierError> {
    let cols: Vec<&[f64]> = stage
        .input_columns()
        .into_iter()
        .map(|c| {
            table
                .column(c)
                .ok_or_else(|| HierError::MissingColumn(c.to_string()))
        })
        .collect::<Result<_, _>>()?;
    let mut x = Vec::with_capacity(cols.len() * table.n_rows());
    for r in 0..table.n_rows() {
        x.extend(cols.iter().map(|c| c[r]));
    }
    Ok(x)
}

/// Target column: an observed column for stage 1, an upstream latent after.
pub fn stage_target<'a>(
    stage: &StageSpec,
    table: &'a DataTable,
    latents: &'a LatentTable,
    first: bool,
) -> Result<&'a [f64], HierError> {
    let found = if first {
        table.column(&stage.target)
    } else {
        latents.column(&stage.target)
    };
    found.ok_or_else(|| {
        if first {
            HierError::MissingColumn(stage.target.clone())
        } else {
            HierError::MissingLatent(stage.target.clone())
        }
    })
}

/// Latents of every table row from a trained stage.
pub fn extract_latents(
    model: &StageModel,
    stage: &StageSpec,
    stage_no: usize,
    epoch: usize,
    table: &DataTable,
) -> Result<LatentTable, HierError> {
    let width = stage.n_inputs();
    let x = stage_inputs(stage, table)?;
    let n = table.n_rows();
    let mut cols = vec![Vec::with_capacity(n); stage.clusters.len()];
    for r in 0..n {
        for (k, z) in model
            .latents(&x[r * width..(r + 1) * width])
            .into_iter()
            .enumerate()
        {
            cols[k].push(z);
        }
    }
    let mut out = LatentTable::new(n);
    for (c, values) in stage.clusters.iter().zip(cols) {
        out.insert(
            LatentSource {
                latent: c.latent.clone(),
                stage: stage_no,
                epoch,
            },
            values,
        )?;
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct StageResult {
    pub stage: usize,
    pub model: StageModel,
    pub best_epoch: usize,
    pub best_valid_rmse: f64,
    pub test_r2: f64,
    pub test_rmse: f64,
    pub history: Vec<EpochRecord>,
    /// This stage's latents for every row.
    pub latents: LatentTable,
}

/// Trains stage `stage_no` (1-based) on its target and extracts its latents.
/// `upstream` must hold the target latent for stages after the first.
pub fn train_stage(
    plan: &UhisrPlan,
    stage_no: usize,
    table: &DataTable,
    upstream: &LatentTable,
    split: &SplitIndices,
    cfg: &TrainConfig,
) -> Result<StageResult, HierError> {
    let stage = plan.stage(stage_no)?;
    let x = stage_inputs(stage, table)?;
    let y = stage_target(stage, table, upstream, stage_no == 1)?.to_vec();
    let data = Samples::new(&x, &y, stage.n_inputs(), 1)?;

    let mut init_rng =
        ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, &format!("init/stage{stage_no}")));
    let model = StageModel::init(stage, &plan.hidden, &mut init_rng)?;
    let train_cfg = TrainConfig {
        seed: derive_seed(cfg.seed, &format!("shuffle/stage{stage_no}")),
        ..cfg.clone()
    };
    log::info!(
        "stage {stage_no}: training on {} rows for {} epochs",
        split.train.len(),
        cfg.epochs
    );
    let outcome = train(model, &data, &split.train, &split.valid, &train_cfg)?;

    let model = outcome.best;
    let pred: Vec<f64> = split
        .test
        .iter()
        .map(|&r| model.head_output(&model.latents(data.x_row(r))))
        .collect();
    let truth: Vec<f64> = split.test.iter().map(|&r| y[r]).collect();
    let test_r2 = r_squared(&truth, &pred).unwrap_or(f64::NAN);
    let test_rmse = rmse(&truth, &pred).unwrap_or(f64::NAN);
    log::info!(
        "stage {stage_no}: best epoch {}, valid rmse {:.4}, test r2 {test_r2:.4}",
        outcome.best_epoch,
        outcome.best_valid_rmse
    );
    let latents = extract_latents(&model, stage, stage_no, outcome.best_epoch, table)?;
    Ok(StageResult {
        stage: stage_no,
        model,
        best_epoch: outcome.best_epoch,
        best_valid_rmse: outcome.best_valid_rmse,
        test_r2,
        test_rmse,
        history: outcome.history,
        latents,
    })
}

/// Sub-model output for `latent` at a cluster-width input.
pub fn probe_latent(
    model: &StageModel,
    stage: &StageSpec,
    latent: &str,
    input: &[f64],
) -> Result<f64, HierError> {
    let (k, cluster) = stage
        .cluster(latent)
        .ok_or_else(|| HierError::UnknownLatent(latent.to_string()))?;
    if input.len() != cluster.columns.len() {
        return Err(HierError::Shape(format!(
            "`{latent}` takes {} inputs, got {}",
            cluster.columns.len(),
            input.len()
        )));
    }
    model.latent(k, input)
}

/// Probe at each one-hot input: `(column, value)` in cluster order.
pub fn probe_one_hot(
    model: &StageModel,
    stage: &StageSpec,
    latent: &str,
) -> Result<Vec<(String, f64)>, HierError> {
    let (_, cluster) = stage
        .cluster(latent)
        .ok_or_else(|| HierError::UnknownLatent(latent.to_string()))?;
    let w = cluster.columns.len();
    (0..w)
        .map(|i| {
            let mut x = vec![0.0; w];
            x[i] = 1.0;
            Ok((
                cluster.columns[i].clone(),
                probe_latent(model, stage, latent, &x)?,
            ))
        })
        .collect()
}

/// One-hot probes minus the all-zero probe.
pub fn probe_contrasts(
    model: &StageModel,
    stage: &StageSpec,
    latent: &str,
) -> Result<Vec<(String, f64)>, HierError> {
    let (_, cluster) = stage
        .cluster(latent)
        .ok_or_else(|| HierError::UnknownLatent(latent.to_string()))?;
    let base = probe_latent(model, stage, latent, &vec![0.0; cluster.columns.len()])?;
    Ok(probe_one_hot(model, stage, latent)?
        .into_iter()
        .map(|(c, v)| (c, v - base))
        .collect())
}

/// `+1` or `-1` so that `sign * latent` rises with `target` when
/// `increasing`, and falls with it otherwise. Latents are only defined up to
/// a monotone map; this fixes the direction for reporting.
pub fn orientation_sign(latent: &[f64], target: &[f64], increasing: bool) -> f64 {
    let rho = crate::dataset::spearman(latent, target).unwrap_or(0.0);
    if (rho >= 0.0) == increasing {
        1.0
    } else {
        -1.0
    }
}
