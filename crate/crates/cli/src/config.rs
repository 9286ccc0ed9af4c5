//! Flat `key = value` run configuration.
//!
//! ```text
//! data = tlc.csv
//! out = run
//! seed = 0
//! plan = builtin            # or a plan file
//! train.epochs = 1000       # train.batch_size, train.lr
//! stage2.epochs = 500       # per-stage override of any train.* key
//! sr.rf.niterations = 200   # sr.rf.*, sr.index.*, sr.<level>.*
//! ```
//!
//! SR keys: populations, population_size, ncycles, niterations, maxsize,
//! maxdepth, tournament_size, max_rows, early_stop_loss (`none` clears the
//! last two).

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use uhisr_core::hiernet::{level_inputs, PipelineConfig, UhisrPlan};
use uhisr_core::neural::TrainConfig;
use uhisr_core::symreg::SRConfig;

use crate::CliError;

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub data: Option<PathBuf>,
    pub out: PathBuf,
    pub seed: u64,
    /// `None` selects the built-in plan.
    pub plan: Option<PathBuf>,
    pub train: TrainConfig,
    pub stage_train: BTreeMap<usize, Vec<(String, String)>>,
    pub sr_rf: SRConfig,
    pub sr_index: SRConfig,
    /// Level overrides, applied on top of the level's default group.
    pub sr_levels: BTreeMap<String, Vec<(String, String)>>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let p = PipelineConfig::default();
        RunConfig {
            data: None,
            out: PathBuf::from("run"),
            seed: 0,
            plan: None,
            train: p.train,
            stage_train: BTreeMap::new(),
            sr_rf: p.sr_rf,
            sr_index: p.sr_index,
            sr_levels: BTreeMap::new(),
        }
    }
}

fn bad(key: &str, value: &str) -> CliError {
    CliError::Input(format!("config: bad value `{value}` for `{key}`"))
}

fn num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, CliError> {
    value.parse().map_err(|_| bad(key, value))
}

fn opt<T: std::str::FromStr>(key: &str, value: &str) -> Result<Option<T>, CliError> {
    if value == "none" {
        Ok(None)
    } else {
        num(key, value).map(Some)
    }
}

fn set_train(t: &mut TrainConfig, key: &str, field: &str, value: &str) -> Result<(), CliError> {
    match field {
        "epochs" => t.epochs = num(key, value)?,
        "batch_size" => t.batch_size = num(key, value)?,
        "lr" => t.adam.lr = num(key, value)?,
        _ => return Err(CliError::Input(format!("config: unknown key `{key}`"))),
    }
    Ok(())
}

fn set_sr(c: &mut SRConfig, key: &str, field: &str, value: &str) -> Result<(), CliError> {
    match field {
        "populations" => c.populations = num(key, value)?,
        "population_size" => c.population_size = num(key, value)?,
        "ncycles" => c.ncycles_per_iteration = num(key, value)?,
        "niterations" => c.niterations = num(key, value)?,
        "maxsize" => c.maxsize = num(key, value)?,
        "maxdepth" => c.maxdepth = num(key, value)?,
        "tournament_size" => c.tournament_size = num(key, value)?,
        "max_rows" => c.max_rows = opt(key, value)?,
        "early_stop_loss" => c.early_stop_loss = opt(key, value)?,
        _ => return Err(CliError::Input(format!("config: unknown key `{key}`"))),
    }
    Ok(())
}

impl RunConfig {
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        match key {
            "data" => self.data = Some(PathBuf::from(value)),
            "out" => self.out = PathBuf::from(value),
            "seed" => self.seed = num(key, value)?,
            "plan" => self.plan = (value != "builtin").then(|| PathBuf::from(value)),
            _ => {
                if let Some(field) = key.strip_prefix("train.") {
                    return set_train(&mut self.train, key, field, value);
                }
                if let Some(rest) = key.strip_prefix("stage") {
                    if let Some((n, field)) = rest.split_once('.') {
                        let n: usize = num(key, n)?;
                        // Checked now so typos fail early.
                        set_train(&mut TrainConfig::default(), key, field, value)?;
                        self.stage_train
                            .entry(n)
                            .or_default()
                            .push((field.into(), value.into()));
                        return Ok(());
                    }
                }
                if let Some(rest) = key.strip_prefix("sr.") {
                    let (group, field) = rest
                        .split_once('.')
                        .ok_or_else(|| CliError::Input(format!("config: unknown key `{key}`")))?;
                    return match group {
                        "rf" => set_sr(&mut self.sr_rf, key, field, value),
                        "index" => set_sr(&mut self.sr_index, key, field, value),
                        level => {
                            set_sr(&mut SRConfig::default(), key, field, value)?;
                            self.sr_levels
                                .entry(level.into())
                                .or_default()
                                .push((field.into(), value.into()));
                            Ok(())
                        }
                    };
                }
                return Err(CliError::Input(format!("config: unknown key `{key}`")));
            }
        }
        Ok(())
    }

    pub fn parse_text(&mut self, text: &str) -> Result<(), CliError> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                CliError::Input(format!("config line {}: expected `key = value`", i + 1))
            })?;
            self.set(k.trim(), v.trim())?;
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Input(format!("config {}: {e}", path.display())))?;
        let mut c = RunConfig::default();
        c.parse_text(&text)?;
        Ok(c)
    }

    pub fn data_path(&self) -> Result<&Path, CliError> {
        self.data
            .as_deref()
            .ok_or_else(|| CliError::Input("no dataset given (use --data or `data =`)".into()))
    }

    pub fn plan(&self) -> Result<UhisrPlan, CliError> {
        match &self.plan {
            None => Ok(UhisrPlan::builtin()),
            Some(p) => UhisrPlan::load(p).map_err(|e| CliError::Input(e.to_string())),
        }
    }

    /// Resolves per-stage and per-level overrides against `plan`.
    pub fn pipeline(&self, plan: &UhisrPlan) -> Result<PipelineConfig, CliError> {
        let mut stage_train = BTreeMap::new();
        for (&n, kvs) in &self.stage_train {
            if n == 0 || n > plan.stages.len() {
                return Err(CliError::Input(format!("config: plan has no stage {n}")));
            }
            let mut t = self.train.clone();
            for (f, v) in kvs {
                set_train(&mut t, &format!("stage{n}.{f}"), f, v)?;
            }
            stage_train.insert(n, t);
        }
        let mut sr_levels = BTreeMap::new();
        for (level, kvs) in &self.sr_levels {
            let (_, sigmoid) = level_inputs(plan, level)
                .ok_or_else(|| CliError::Input(format!("config: unknown level `{level}`")))?;
            let mut c = if sigmoid {
                self.sr_rf.clone()
            } else {
                self.sr_index.clone()
            };
            for (f, v) in kvs {
                set_sr(&mut c, &format!("sr.{level}.{f}"), f, v)?;
            }
            sr_levels.insert(level.clone(), c);
        }
        Ok(PipelineConfig {
            seed: self.seed,
            train: self.train.clone(),
            sr_rf: self.sr_rf.clone(),
            sr_index: self.sr_index.clone(),
            stage_train,
            sr_levels,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn keys_and_overrides() {
        let mut c = RunConfig::default();
        c.parse_text("seed = 4\ntrain.epochs = 7 # short\nstage2.lr = 0.5\nsr.index.max_rows = none\nsr.gamma4.niterations = 3\n")
            .unwrap();
        let plan = UhisrPlan::builtin();
        let p = c.pipeline(&plan).unwrap();
        assert_eq!(p.seed, 4);
        assert_eq!(p.train_for(1).epochs, 7);
        assert_eq!(p.train_for(2).adam.lr, 0.5);
        assert_eq!(p.train_for(2).epochs, 7);
        assert_eq!(p.sr_index.max_rows, None);
        assert_eq!(p.sr_levels["gamma4"].niterations, 3);
        assert_eq!(p.sr_levels["gamma4"].ncycles_per_iteration, 500);
    }

    #[test]
    fn errors_are_input_errors() {
        let mut c = RunConfig::default();
        assert!(matches!(c.set("train.nope", "1"), Err(CliError::Input(_))));
        assert!(matches!(c.set("seed", "x"), Err(CliError::Input(_))));
        assert!(matches!(c.parse_text("seed"), Err(CliError::Input(_))));
        c.set("sr.omega.maxsize", "9").unwrap();
        assert!(c.pipeline(&UhisrPlan::builtin()).is_err());
    }
}
