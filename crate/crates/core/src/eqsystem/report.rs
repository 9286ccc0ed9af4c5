use std::io::Write;

use super::{apply_link, Equation, EquationSystem, SystemError};
use crate::dataset::schema::TARGET_COLUMN;
use crate::dataset::{r_squared, rmse, DataTable, DatasetError};

/// Label of the row that scores the fully composed chain.
pub const COMPOSED_LEVEL: &str = "composed";

#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub level: String,
    pub equation: String,
    pub complexity: usize,
    /// `None` when no target or inputs were available for this level.
    pub r2: Option<f64>,
    pub rmse: Option<f64>,
    /// Rows scored (finite prediction and target).
    pub n: usize,
    pub nonfinite: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitReport {
    /// One row per equation, then the composed row.
    pub rows: Vec<ReportRow>,
    /// Row indices where the composed prediction is not finite.
    pub nonfinite_rows: Vec<usize>,
}

impl FitReport {
    pub fn composed(&self) -> &ReportRow {
        self.rows.last().expect("composed row always present")
    }

    pub fn row(&self, level: &str) -> Option<&ReportRow> {
        self.rows.iter().find(|r| r.level == level)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), DatasetError> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "level",
            "equation",
            "complexity",
            "r2",
            "rmse",
            "n",
            "nonfinite",
        ])?;
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        for r in &self.rows {
            w.write_record([
                r.level.clone(),
                r.equation.clone(),
                r.complexity.to_string(),
                opt(r.r2),
                opt(r.rmse),
                r.n.to_string(),
                r.nonfinite.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("csv is utf-8")
    }
}

fn score(
    level: &str,
    equation: String,
    complexity: usize,
    target: Option<&[f64]>,
    pred: Option<&[f64]>,
) -> ReportRow {
    let nonfinite = pred.map_or(0, |p| p.iter().filter(|v| !v.is_finite()).count());
    let (mut r2, mut err, mut n) = (None, None, 0);
    if let (Some(t), Some(p)) = (target, pred) {
        let (ty, py): (Vec<f64>, Vec<f64>) = t
            .iter()
            .zip(p)
            .filter(|(a, b)| a.is_finite() && b.is_finite())
            .map(|(a, b)| (*a, *b))
            .unzip();
        n = ty.len();
        r2 = r_squared(&ty, &py).ok();
        err = rmse(&ty, &py).ok();
    }
    ReportRow {
        level: level.to_string(),
        equation,
        complexity,
        r2,
        rmse: err,
        n,
        nonfinite,
    }
}

fn eval_single(
    sys: &EquationSystem,
    eq: &Equation,
    lookup: &dyn Fn(&str) -> Option<Vec<f64>>,
    n: usize,
) -> Option<Vec<f64>> {
    let mut cols: Vec<Vec<f64>> = vec![Vec::new(); sys.vars().len()];
    for i in eq.expr.var_indices() {
        cols[i] = lookup(sys.vars().name(i))?;
    }
    let refs: Vec<&[f64]> = cols.iter().map(Vec::as_slice).collect();
    let mut v = eq.expr.eval_columns(&refs, n);
    apply_link(eq.link, &mut v);
    Some(v)
}

/// Scores each equation against its target and the composed chain against
/// the observed `Rf`.
///
/// With `latents`, every equation is fed the latent columns it reads (falling
/// back to `table` for raw inputs) and compared with the latent of the same
/// name, or the observed column for `Rf`. Without latents only the composed
/// row carries metrics.
pub fn fit_report(
    sys: &EquationSystem,
    table: &DataTable,
    latents: Option<&DataTable>,
) -> Result<FitReport, SystemError> {
    let n = table.n_rows();
    let mut rows = Vec::with_capacity(sys.len() + 1);
    let lookup = |name: &str| -> Option<Vec<f64>> {
        latents
            .and_then(|l| l.column(name))
            .or_else(|| table.column(name))
            .map(|c| c[..n].to_vec())
    };
    for eq in sys.equations() {
        let (target, pred) = match latents {
            Some(_) => (lookup(&eq.name), eval_single(sys, eq, &lookup, n)),
            None => (None, None),
        };
        rows.push(score(
            &eq.name,
            sys.format_equation(eq),
            eq.complexity(),
            target.as_deref(),
            pred.as_deref(),
        ));
    }
    let pred = sys.predict(table)?;
    let nonfinite_rows = pred
        .iter()
        .enumerate()
        .filter(|(_, v)| !v.is_finite())
        .map(|(i, _)| i)
        .collect();
    let out = sys.output().ok_or(SystemError::MissingOutput)?;
    rows.push(score(
        COMPOSED_LEVEL,
        sys.format_equation(out),
        sys.equations().iter().map(Equation::complexity).sum(),
        table.column(TARGET_COLUMN),
        Some(&pred),
    ));
    Ok(FitReport {
        rows,
        nonfinite_rows,
    })
}
