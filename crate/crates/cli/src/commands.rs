use std::fmt::Write as _;
use std::path::Path;

use anyhow::Context;
use uhisr_core::dataset::schema::{canonical_name, SOLVENT_COLUMNS, TARGET_COLUMN};
use uhisr_core::dataset::{load_csv, split, DataTable, DatasetError, SplitIndices};
use uhisr_core::eqsystem::{fit_report, EquationSystem, FitReport};
use uhisr_core::hiernet::{
    fit_level, level_config, orientation_sign, probe_contrasts, probe_latent, run_pipeline,
    train_stage, HierError, LatentTable, LevelFit, PipelineOutcome, PipelineSink, StageModel,
    StageResult, UhisrPlan,
};
use uhisr_core::neural::persist::{manifest_text, networks_to_bytes};
use uhisr_core::neural::read_networks;
use uhisr_core::symreg::Link;
use uhisr_core::synth::{synthetic_tlc, SynthConfig};
use uhisr_core::VarTable;

use crate::artifacts::{self as art, read_required, write_atomic, RunLock};
use crate::{CliError, RunConfig};

/// Stage-1 network test R² floor checked by `reproduce`.
pub const STAGE1_MIN_R2: f64 = 0.90;
/// Selected `Rf ~ (Psi, xi)` equation floors checked by `reproduce`.
pub const RF_MIN_R2: f64 = 0.85;
pub const RF_MAX_RMSE: f64 = 0.13;

fn input_err(e: DatasetError) -> CliError {
    CliError::Input(e.to_string())
}

/// The built-in plan reads validated TLC tables; custom plans read any CSV.
fn load_table(cfg: &RunConfig) -> Result<DataTable, CliError> {
    let path = cfg.data_path()?;
    if cfg.plan.is_none() {
        Ok(load_csv(path).map_err(input_err)?.0)
    } else {
        read_any(path)
    }
}

/// Generic CSV with aliases mapped to canonical column names.
fn read_any(path: &Path) -> Result<DataTable, CliError> {
    let raw = DataTable::read_csv_path(path).map_err(input_err)?;
    let mut t = DataTable::new(raw.n_rows());
    for name in raw.names() {
        t.add_column(
            canonical_name(name),
            raw.column(name).expect("listed").to_vec(),
        )
        .map_err(input_err)?;
    }
    if let Some(ids) = raw.ids() {
        t.set_ids(ids.to_vec()).map_err(input_err)?;
    }
    Ok(t)
}

fn out_path(cfg: &RunConfig, name: &str) -> std::path::PathBuf {
    cfg.out.join(name)
}

fn read_latents(cfg: &RunConfig, rows: usize, hint: &str) -> Result<LatentTable, CliError> {
    let bytes = read_required(&out_path(cfg, art::LATENTS), hint)?;
    let t = LatentTable::read_csv(bytes.as_slice()).map_err(CliError::from)?;
    if t.n_rows() != rows {
        return Err(CliError::Input(format!(
            "latents.csv has {} rows, dataset has {rows}",
            t.n_rows()
        )));
    }
    Ok(t)
}

fn format_level(fit: &LevelFit) -> anyhow::Result<String> {
    let vars = VarTable::new(fit.inputs.iter().map(String::as_str))?;
    let body = fit.selected.expr.display(&vars).to_string();
    Ok(match fit.link {
        Link::Identity => format!("{} = {body}", fit.level),
        Link::Sigmoid => format!("{} = sigmoid({body})", fit.level),
    })
}

fn write_level(out: &Path, fit: &LevelFit) -> anyhow::Result<()> {
    let vars = VarTable::new(fit.inputs.iter().map(String::as_str))?;
    write_atomic(
        &out.join(art::frontier(&fit.level)),
        fit.front.to_table(&vars).as_bytes(),
    )?;
    write_atomic(
        &out.join(art::level_equation(&fit.level)),
        format!("{}\n", format_level(fit)?).as_bytes(),
    )?;
    Ok(())
}

fn write_stage(
    out: &Path,
    plan: &UhisrPlan,
    seed: u64,
    r: &StageResult,
    latents: &LatentTable,
) -> anyhow::Result<()> {
    let stage = plan.stage(r.stage)?;
    let nets = r.model.to_networks();
    let refs: Vec<_> = nets.iter().collect();
    let mut names = stage.latents();
    names.push("head");
    let extra = [
        ("stage", r.stage.to_string()),
        ("target", stage.target.clone()),
        ("seed", seed.to_string()),
        ("best_epoch", r.best_epoch.to_string()),
        ("best_valid_rmse", r.best_valid_rmse.to_string()),
        ("test_r2", r.test_r2.to_string()),
        ("test_rmse", r.test_rmse.to_string()),
    ]
    .map(|(k, v)| (k.to_string(), v));
    write_atomic(
        &out.join(art::stage_params(r.stage)),
        &networks_to_bytes(&refs),
    )?;
    write_atomic(
        &out.join(art::stage_manifest(r.stage)),
        manifest_text(&names, &refs, &extra).as_bytes(),
    )?;
    let mut hist = String::from("epoch,train_mse,valid_rmse\n");
    for h in &r.history {
        let _ = writeln!(hist, "{},{},{}", h.epoch, h.train_mse, h.valid_rmse);
    }
    write_atomic(&out.join(art::stage_history(r.stage)), hist.as_bytes())?;
    write_atomic(&out.join(art::LATENTS), latents.to_csv_string().as_bytes())?;
    Ok(())
}

fn stages_csv(results: &[StageResult]) -> String {
    let mut s = String::from("stage,best_epoch,valid_rmse,test_r2,test_rmse\n");
    for r in results {
        let _ = writeln!(
            s,
            "{},{},{},{},{}",
            r.stage, r.best_epoch, r.best_valid_rmse, r.test_r2, r.test_rmse
        );
    }
    s
}

struct ArtifactSink<'a> {
    out: &'a Path,
    plan: &'a UhisrPlan,
    seed: u64,
    stages: Vec<StageResult>,
}

impl PipelineSink for ArtifactSink<'_> {
    fn stage_done(&mut self, r: &StageResult, latents: &LatentTable) -> Result<(), HierError> {
        self.stages.push(r.clone());
        write_stage(self.out, self.plan, self.seed, r, latents)
            .and_then(|_| {
                write_atomic(
                    &self.out.join(art::STAGES),
                    stages_csv(&self.stages).as_bytes(),
                )
            })
            .map_err(|e| {
                HierError::Io(
                    format!("{e:#}"),
                    std::io::Error::other("artifact write failed"),
                )
            })
    }

    fn level_done(&mut self, fit: &LevelFit) -> Result<(), HierError> {
        write_level(self.out, fit).map_err(|e| {
            HierError::Io(
                format!("{e:#}"),
                std::io::Error::other("artifact write failed"),
            )
        })
    }
}

pub fn validate(cfg: &RunConfig) -> Result<(), CliError> {
    let path = cfg.data_path()?;
    let (table, report) = load_csv(path).map_err(input_err)?;
    println!(
        "{}: {} rows, {} columns",
        path.display(),
        report.rows,
        table.n_cols()
    );
    if let Some(c) = report.distinct_compounds {
        println!("distinct compounds: {c}");
    }
    if !report.solvent_sum_warnings.is_empty() {
        println!(
            "rows with solvent fractions not summing to 1: {}",
            report.solvent_sum_warnings.len()
        );
    }
    println!("ok");
    Ok(())
}

fn run_split(cfg: &RunConfig, table: &DataTable) -> Result<SplitIndices, CliError> {
    split(table.n_rows(), cfg.seed).map_err(input_err)
}

pub fn train(cfg: &RunConfig, n: usize) -> Result<(), CliError> {
    let plan = cfg.plan()?;
    let stage = plan.stage(n)?;
    let pcfg = cfg.pipeline(&plan)?;
    let table = load_table(cfg)?;
    let sp = run_split(cfg, &table)?;
    let _lock = RunLock::acquire(&cfg.out)?;

    let mut latents = if n == 1 {
        LatentTable::new(table.n_rows())
    } else {
        let hint = format!(
            "missing upstream latent `{}`; run `train --stage {}` first",
            stage.target,
            n - 1
        );
        read_latents(cfg, table.n_rows(), &hint)?
    };
    let result = train_stage(&plan, n, &table, &latents, &sp, &pcfg.train_for(n))?;

    // Keep latents of earlier stages only: later ones came from the old
    // version of this stage.
    let mut kept = LatentTable::new(table.n_rows());
    for s in latents.sources().to_vec() {
        if plan.stage_of(&s.latent).is_some_and(|k| k < n) {
            let col = latents.column(&s.latent).expect("listed").to_vec();
            kept.insert(s, col)?;
        }
    }
    kept.merge(&result.latents)?;
    latents = kept;
    write_stage(&cfg.out, &plan, cfg.seed, &result, &latents)?;
    println!(
        "stage {n}: best epoch {}, valid RMSE {:.4}, test R2 {:.4}, test RMSE {:.4}",
        result.best_epoch, result.best_valid_rmse, result.test_r2, result.test_rmse
    );
    println!("latents: {}", latents.names().join(", "));
    Ok(())
}

pub fn distill(cfg: &RunConfig, level: &str) -> Result<(), CliError> {
    let plan = cfg.plan()?;
    let pcfg = cfg.pipeline(&plan)?;
    let level = canonical_name(level);
    let sr = level_config(&plan, &pcfg, level)
        .map_err(|_| CliError::Input(format!("unknown level `{level}`")))?;
    let table = load_table(cfg)?;
    let sp = run_split(cfg, &table)?;
    let _lock = RunLock::acquire(&cfg.out)?;
    let latents = read_latents(
        cfg,
        table.n_rows(),
        "missing upstream latent; run `train` first",
    )?;
    let fit = fit_level(&plan, level, &table, &latents, &sp.train, &sr)?;
    write_level(&cfg.out, &fit)?;
    println!("{}", format_level(&fit)?);
    Ok(())
}

pub fn pipeline(cfg: &RunConfig) -> Result<PipelineOutcome, CliError> {
    let plan = cfg.plan()?;
    let pcfg = cfg.pipeline(&plan)?;
    let table = load_table(cfg)?;
    let _lock = RunLock::acquire(&cfg.out)?;
    let mut sink = ArtifactSink {
        out: &cfg.out,
        plan: &plan,
        seed: cfg.seed,
        stages: Vec::new(),
    };
    let outcome = run_pipeline(&table, &plan, &pcfg, &mut sink)?;
    write_atomic(
        &out_path(cfg, art::EQUATIONS),
        outcome.system.to_string().as_bytes(),
    )?;
    write_atomic(
        &out_path(cfg, art::REPORT),
        outcome.report.to_csv_string().as_bytes(),
    )?;
    print!("{}", outcome.system);
    print_report(&outcome.report);
    Ok(outcome)
}

fn print_report(r: &FitReport) {
    let f = |v: Option<f64>| v.map_or("-".to_string(), |x| format!("{x:.4}"));
    println!("{:<10} {:>8} {:>8} {:>5}", "level", "R2", "RMSE", "n");
    for row in &r.rows {
        println!(
            "{:<10} {:>8} {:>8} {:>5}",
            row.level,
            f(row.r2),
            f(row.rmse),
            row.n
        );
    }
}

fn predictions_csv(table: &DataTable, pred: &[f64]) -> String {
    let rf = table.column(TARGET_COLUMN);
    let mut s = String::new();
    if table.ids().is_some() {
        s.push_str("compound,");
    }
    s.push_str("row,Rf_pred");
    if rf.is_some() {
        s.push_str(",Rf");
    }
    s.push('\n');
    for (i, p) in pred.iter().enumerate() {
        if let Some(ids) = table.ids() {
            let _ = write!(s, "{},", ids[i]);
        }
        let _ = write!(s, "{i},{p}");
        if let Some(rf) = rf {
            let _ = write!(s, ",{}", rf[i]);
        }
        s.push('\n');
    }
    s
}

pub fn predict(cfg: &RunConfig, system: &Path) -> Result<(), CliError> {
    let sys = EquationSystem::load(system).map_err(|e| CliError::Input(e.to_string()))?;
    let table = read_any(cfg.data_path()?)?;
    let _lock = RunLock::acquire(&cfg.out)?;
    let pred = sys
        .predict(&table)
        .map_err(|e| CliError::Input(e.to_string()))?;
    write_atomic(
        &out_path(cfg, art::PREDICTIONS),
        predictions_csv(&table, &pred).as_bytes(),
    )?;
    let report = fit_report(&sys, &table, None).map_err(|e| CliError::Input(e.to_string()))?;
    let c = report.composed();
    match (c.r2, c.rmse) {
        (Some(r2), Some(e)) => println!("{} rows scored: R2 {r2:.4}, RMSE {e:.4}", c.n),
        _ => println!("{} predictions written (no observed Rf)", pred.len()),
    }
    if c.nonfinite > 0 {
        println!("warning: {} non-finite predictions", c.nonfinite);
    }
    Ok(())
}

/// One probed input of one latent.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeRow {
    pub latent: String,
    pub column: String,
    pub probe: f64,
    pub contrast: f64,
    /// `contrast` with the latent's sign fixed (see [`probe_stage`]).
    pub oriented: f64,
}

/// Probes every latent of stage `n` at each one-hot input. When `rf` and
/// `latents` are given, a latent whose cluster holds eluent columns is
/// oriented to rise with Rf, any other to fall with it, so both read as
/// polarity.
pub fn probe_stage(
    plan: &UhisrPlan,
    n: usize,
    model: &StageModel,
    oriented_by: Option<(&LatentTable, &[f64])>,
) -> Result<Vec<ProbeRow>, CliError> {
    let stage = plan.stage(n)?;
    let mut rows = Vec::new();
    for c in &stage.clusters {
        let sign = match oriented_by.and_then(|(l, rf)| l.column(&c.latent).map(|z| (z, rf))) {
            Some((z, rf)) => {
                let solvent = c
                    .columns
                    .iter()
                    .any(|col| SOLVENT_COLUMNS.contains(&col.as_str()));
                orientation_sign(z, rf, solvent)
            }
            None => 1.0,
        };
        let base = probe_latent(model, stage, &c.latent, &vec![0.0; c.columns.len()])?;
        for (column, contrast) in probe_contrasts(model, stage, &c.latent)? {
            rows.push(ProbeRow {
                latent: c.latent.clone(),
                column,
                probe: contrast + base,
                contrast,
                oriented: sign * contrast,
            });
        }
    }
    Ok(rows)
}

pub fn load_stage_model(
    cfg: &RunConfig,
    plan: &UhisrPlan,
    n: usize,
) -> Result<StageModel, CliError> {
    let stage = plan.stage(n)?;
    let bytes = read_required(
        &out_path(cfg, &art::stage_params(n)),
        &format!("run `train --stage {n}` first"),
    )?;
    let nets = read_networks(bytes.as_slice())
        .map_err(|e| CliError::Input(format!("stage{n}.params: {e}")))?;
    Ok(StageModel::from_networks(stage, &plan.hidden, &nets)?)
}

pub fn probe(cfg: &RunConfig, n: usize) -> Result<(), CliError> {
    let plan = cfg.plan()?;
    let model = load_stage_model(cfg, &plan, n)?;
    let orient = match &cfg.data {
        Some(_) => {
            let table = load_table(cfg)?;
            let rf = table.column(TARGET_COLUMN).map(<[f64]>::to_vec);
            let latents = read_latents(cfg, table.n_rows(), "run `train` first").ok();
            latents.zip(rf)
        }
        None => None,
    };
    let _lock = RunLock::acquire(&cfg.out)?;
    let mut rows = probe_stage(
        &plan,
        n,
        &model,
        orient.as_ref().map(|(l, rf)| (l, rf.as_slice())),
    )?;
    rows.sort_by(|a, b| {
        a.latent
            .cmp(&b.latent)
            .then(b.oriented.total_cmp(&a.oriented))
    });
    let mut csv = String::from("latent,column,probe,contrast,oriented\n");
    for r in &rows {
        let _ = writeln!(
            csv,
            "{},{},{},{},{}",
            r.latent, r.column, r.probe, r.contrast, r.oriented
        );
    }
    write_atomic(&out_path(cfg, &art::probe_table(n)), csv.as_bytes())?;
    if orient.is_none() {
        println!("(unoriented: pass --data with latents.csv present to fix latent signs)");
    }
    let mut last = "";
    for r in &rows {
        if r.latent != last {
            println!("{}:", r.latent);
            last = &r.latent;
        }
        println!("  {:<12} {:>9.4}", r.column, r.oriented);
    }
    Ok(())
}

/// Threshold checks of one `reproduce` run.
#[derive(Debug, Clone, PartialEq)]
pub struct ReproduceSummary {
    pub stage1_test_r2: f64,
    pub rf_test_r2: Option<f64>,
    pub rf_test_rmse: Option<f64>,
    pub checks: Vec<(String, bool)>,
}

impl ReproduceSummary {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|(_, ok)| *ok)
    }

    pub fn text(&self) -> String {
        let mut s = String::new();
        for (name, ok) in &self.checks {
            let _ = writeln!(s, "{} {name}", if *ok { "PASS" } else { "FAIL" });
        }
        s
    }
}

pub fn summarize(outcome: &PipelineOutcome) -> ReproduceSummary {
    let s1 = outcome.stages.first().map_or(f64::NAN, |s| s.test_r2);
    let rf = outcome.report.row(TARGET_COLUMN);
    let (r2, rmse) = (rf.and_then(|r| r.r2), rf.and_then(|r| r.rmse));
    let checks = vec![
        (
            format!("stage-1 network test R2 {s1:.4} >= {STAGE1_MIN_R2}"),
            s1 >= STAGE1_MIN_R2,
        ),
        (
            format!(
                "Rf equation test R2 {:.4} >= {RF_MIN_R2}",
                r2.unwrap_or(f64::NAN)
            ),
            r2.is_some_and(|v| v >= RF_MIN_R2),
        ),
        (
            format!(
                "Rf equation test RMSE {:.4} <= {RF_MAX_RMSE}",
                rmse.unwrap_or(f64::NAN)
            ),
            rmse.is_some_and(|v| v <= RF_MAX_RMSE),
        ),
    ];
    ReproduceSummary {
        stage1_test_r2: s1,
        rf_test_r2: r2,
        rf_test_rmse: rmse,
        checks,
    }
}

pub fn reproduce(cfg: &RunConfig) -> Result<ReproduceSummary, CliError> {
    validate(cfg)?;
    let outcome = pipeline(cfg)?;
    {
        let table = load_table(cfg)?;
        let _lock = RunLock::acquire(&cfg.out)?;
        let pred = outcome
            .system
            .predict(&table)
            .map_err(|e| CliError::Input(e.to_string()))?;
        write_atomic(
            &out_path(cfg, art::PREDICTIONS),
            predictions_csv(&table, &pred).as_bytes(),
        )?;
    }
    let summary = summarize(&outcome);
    write_atomic(&out_path(cfg, art::SUMMARY), summary.text().as_bytes())?;
    print!("{}", summary.text());
    if summary.passed() {
        Ok(summary)
    } else {
        Err(CliError::Acceptance(
            "reproduction missed at least one threshold".into(),
        ))
    }
}

pub fn synth(
    cfg: &RunConfig,
    to: &Path,
    compounds: usize,
    eluents: usize,
    noise: f64,
) -> Result<(), CliError> {
    if compounds == 0 || eluents == 0 || noise.is_nan() || noise < 0.0 {
        return Err(CliError::Input(
            "compounds and eluents must be positive, noise nonnegative".into(),
        ));
    }
    let sc = SynthConfig {
        compounds,
        eluents_per_compound: eluents,
        noise_sd: noise,
        seed: cfg.seed,
    };
    let table = synthetic_tlc(&sc);
    if let Some(dir) = to.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    write_atomic(to, table.to_csv_string().as_bytes())?;
    println!("{}: {} rows", to.display(), table.n_rows());
    Ok(())
}
