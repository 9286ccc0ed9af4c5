//! Named equation systems: parsing, printing, evaluation and fit reports.
//!
//! Text format, one equation per line:
//!
//! ```text
//! # comment
//! gamma1 = -3.09*CtAmides - 3.91*CtCO2H + 1.87
//! Rf = sigmoid(3.48*Psi + 3.08*xi + 1.86)
//! ```
//!
//! Every name must be defined before it is used. Names that are never
//! defined are raw inputs (dataset columns). Column aliases such as
//! `CtAmides` are mapped to their canonical spelling.

mod report;

use std::collections::HashSet;
use std::fmt;
use std::path::Path;

use thiserror::Error;

use crate::dataset::schema::{canonical_name, TARGET_COLUMN};
use crate::dataset::DataTable;
use crate::expr::{parse, Expr, ParseError, UnaryOp, VarTable};
use crate::symreg::Link;

pub use report::{fit_report, FitReport, ReportRow, COMPOSED_LEVEL};

/// Equation files shipped with the crate.
pub mod fixtures {
    /// The reference ten-equation system.
    pub const REFERENCE: &str = include_str!("../../fixtures/reference.eqs");
    /// An alternative system with the same output equation.
    pub const ALTERNATIVE: &str = include_str!("../../fixtures/alternative.eqs");
    /// Five candidates per level; names repeat.
    pub const CANDIDATES: &str = include_str!("../../fixtures/candidates.eqs");
}

#[derive(Debug, Error)]
pub enum SystemError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: {source}")]
    Parse { line: usize, source: ParseError },
    #[error("line {line}: `{name}` is defined twice")]
    Duplicate { line: usize, name: String },
    #[error("line {line}: `{name}` is used before it is defined")]
    Order { line: usize, name: String },
    #[error("system has no `{TARGET_COLUMN}` equation")]
    MissingOutput,
    #[error("missing input column `{0}`")]
    MissingColumn(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Equation {
    pub name: String,
    /// Variable indices refer to the owning system's [`EquationSystem::vars`].
    pub expr: Expr,
    pub link: Link,
}

impl Equation {
    pub fn complexity(&self) -> usize {
        self.expr.complexity()
    }
}

/// Ordered equations over one shared variable table.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EquationSystem {
    vars: VarTable,
    inputs: Vec<String>,
    equations: Vec<Equation>,
}

/// One parsed line before names are resolved.
struct RawLine {
    line: usize,
    name: String,
    rhs: String,
    link: Link,
}

impl EquationSystem {
    pub fn new() -> Self {
        Self::default()
    }

    /// Parses a complete system; requires an `Rf` equation.
    pub fn parse(text: &str) -> Result<Self, SystemError> {
        let raw = split_lines(text)?;
        let defined_anywhere: HashSet<&str> = raw.iter().map(|r| r.name.as_str()).collect();
        let mut sys = EquationSystem::new();
        for r in &raw {
            if sys.get(&r.name).is_some() {
                return Err(SystemError::Duplicate {
                    line: r.line,
                    name: r.name.clone(),
                });
            }
            for id in identifiers(&r.rhs) {
                let known = sys.get(&id).is_some();
                if !known && defined_anywhere.contains(id.as_str()) {
                    return Err(SystemError::Order {
                        line: r.line,
                        name: id,
                    });
                }
                if !known && sys.vars.get(&id).is_none() {
                    sys.add_input(&id);
                }
            }
            let expr = parse(&r.rhs, &sys.vars).map_err(|source| SystemError::Parse {
                line: r.line,
                source,
            })?;
            sys.define(r.line, &r.name, expr, r.link)?;
        }
        sys.output().ok_or(SystemError::MissingOutput)?;
        Ok(sys)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, SystemError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| SystemError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text)
    }

    /// Appends an equation whose variable `i` is `local_names[i]`. Local
    /// names that are already defined are references, the rest become
    /// inputs.
    pub fn push(
        &mut self,
        name: &str,
        expr: &Expr,
        local_names: &[&str],
        link: Link,
    ) -> Result<(), SystemError> {
        let line = self.equations.len() + 1;
        let name = canonical_name(name).to_string();
        if self.get(&name).is_some() {
            return Err(SystemError::Duplicate { line, name });
        }
        if self.inputs.contains(&name) {
            return Err(SystemError::Order { line, name });
        }
        let mut map = Vec::with_capacity(local_names.len());
        for &local in local_names {
            let local = canonical_name(local);
            if local == name {
                return Err(SystemError::Order { line, name });
            }
            let idx = match self.vars.get(local) {
                Some(i) => i,
                None => self.add_input(local),
            };
            map.push(idx);
        }
        if let Some(m) = expr.max_var() {
            if m >= map.len() {
                return Err(SystemError::Syntax {
                    line,
                    message: format!("variable index {m} has no name"),
                });
            }
        }
        let expr = expr.remap_vars(&|i| map[i]);
        self.define(line, &name, expr, link)
    }

    fn add_input(&mut self, name: &str) -> usize {
        self.inputs.push(name.to_string());
        self.vars.push(name).expect("identifier checked by caller")
    }

    fn define(
        &mut self,
        line: usize,
        name: &str,
        expr: Expr,
        link: Link,
    ) -> Result<(), SystemError> {
        self.vars.push(name).map_err(|e| SystemError::Syntax {
            line,
            message: e.to_string(),
        })?;
        self.equations.push(Equation {
            name: name.to_string(),
            expr,
            link,
        });
        Ok(())
    }

    pub fn vars(&self) -> &VarTable {
        &self.vars
    }

    /// Raw input names in order of first use.
    pub fn inputs(&self) -> &[String] {
        &self.inputs
    }

    pub fn equations(&self) -> &[Equation] {
        &self.equations
    }

    pub fn len(&self) -> usize {
        self.equations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.equations.is_empty()
    }

    pub fn get(&self, name: &str) -> Option<&Equation> {
        let name = canonical_name(name);
        self.equations.iter().find(|e| e.name == name)
    }

    /// The `Rf` equation.
    pub fn output(&self) -> Option<&Equation> {
        self.get(TARGET_COLUMN)
    }

    /// Variable names one equation reads.
    pub fn references(&self, eq: &Equation) -> Vec<&str> {
        eq.expr
            .var_indices()
            .into_iter()
            .map(|i| self.vars.name(i))
            .collect()
    }

    pub fn format_equation(&self, eq: &Equation) -> String {
        match eq.link {
            Link::Identity => format!("{} = {}", eq.name, eq.expr.display(&self.vars)),
            Link::Sigmoid => format!("{} = sigmoid({})", eq.name, eq.expr.display(&self.vars)),
        }
    }

    /// Evaluates every equation in order. `lookup` supplies input columns
    /// and may also override defined names; overridden equations are not
    /// evaluated. Returns one column per equation.
    pub fn evaluate_with<'a>(
        &self,
        n_rows: usize,
        lookup: impl Fn(&str) -> Option<&'a [f64]>,
        override_defined: bool,
    ) -> Result<Vec<Vec<f64>>, SystemError> {
        let mut owned: Vec<Option<Vec<f64>>> = vec![None; self.vars.len()];
        let mut borrowed: Vec<Option<&[f64]>> = vec![None; self.vars.len()];
        for name in &self.inputs {
            let col = lookup(name).ok_or_else(|| SystemError::MissingColumn(name.clone()))?;
            if col.len() < n_rows {
                return Err(SystemError::MissingColumn(name.clone()));
            }
            borrowed[self.vars.get(name).expect("input registered")] = Some(col);
        }
        let mut out = Vec::with_capacity(self.equations.len());
        for eq in &self.equations {
            let slot = self.vars.get(&eq.name).expect("equation registered");
            let values = match lookup(&eq.name).filter(|c| override_defined && c.len() >= n_rows) {
                Some(col) => col[..n_rows].to_vec(),
                None => {
                    let cols: Vec<&[f64]> = (0..self.vars.len())
                        .map(|i| borrowed[i].or(owned[i].as_deref()).unwrap_or(&[]))
                        .collect();
                    let mut v = eq.expr.eval_columns(&cols, n_rows);
                    apply_link(eq.link, &mut v);
                    v
                }
            };
            owned[slot] = Some(values.clone());
            out.push(values);
        }
        Ok(out)
    }

    /// Evaluates the chain on a table, inputs only; returns `(name, column)`
    /// pairs in equation order.
    pub fn evaluate_table(
        &self,
        table: &DataTable,
    ) -> Result<Vec<(String, Vec<f64>)>, SystemError> {
        let cols = self.evaluate_with(table.n_rows(), |n| table.column(n), false)?;
        Ok(self
            .equations
            .iter()
            .map(|e| e.name.clone())
            .zip(cols)
            .collect())
    }

    /// Evaluates one row given input values in [`Self::inputs`] order.
    pub fn evaluate_row(&self, inputs: &[f64]) -> Result<Vec<(String, f64)>, SystemError> {
        if inputs.len() != self.inputs.len() {
            return Err(SystemError::MissingColumn(format!(
                "expected {} inputs, got {}",
                self.inputs.len(),
                inputs.len()
            )));
        }
        let cols = self.evaluate_with(
            1,
            |n| {
                self.inputs
                    .iter()
                    .position(|i| i == n)
                    .map(|k| std::slice::from_ref(&inputs[k]))
            },
            false,
        )?;
        Ok(self
            .equations
            .iter()
            .map(|e| e.name.clone())
            .zip(cols.into_iter().map(|c| c[0]))
            .collect())
    }

    /// Composed `Rf` predictions for every table row.
    pub fn predict(&self, table: &DataTable) -> Result<Vec<f64>, SystemError> {
        let k = self
            .equations
            .iter()
            .position(|e| e.name == TARGET_COLUMN)
            .ok_or(SystemError::MissingOutput)?;
        let mut cols = self.evaluate_with(table.n_rows(), |n| table.column(n), false)?;
        Ok(cols.swap_remove(k))
    }
}

/// Applies the output link to finite values only, so a non-finite
/// pre-activation stays visible instead of saturating to 0 or 1.
pub(crate) fn apply_link(link: Link, values: &mut [f64]) {
    if link == Link::Sigmoid {
        values
            .iter_mut()
            .filter(|x| x.is_finite())
            .for_each(|x| *x = link.apply(*x));
    }
}

impl fmt::Display for EquationSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for eq in &self.equations {
            writeln!(f, "{}", self.format_equation(eq))?;
        }
        Ok(())
    }
}

/// A standalone equation from a candidate list, with its own variables.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub line: usize,
    pub name: String,
    pub expr: Expr,
    pub link: Link,
    pub vars: VarTable,
}

impl Candidate {
    pub fn complexity(&self) -> usize {
        self.expr.complexity()
    }
}

impl fmt::Display for Candidate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.link {
            Link::Identity => write!(f, "{} = {}", self.name, self.expr.display(&self.vars)),
            Link::Sigmoid => write!(
                f,
                "{} = sigmoid({})",
                self.name,
                self.expr.display(&self.vars)
            ),
        }
    }
}

/// Parses a list of independent equations; names may repeat and every
/// identifier is a free variable.
pub fn parse_candidates(text: &str) -> Result<Vec<Candidate>, SystemError> {
    split_lines(text)?
        .into_iter()
        .map(|r| {
            let ids = identifiers(&r.rhs);
            let vars = VarTable::new(ids).map_err(|e| SystemError::Syntax {
                line: r.line,
                message: e.to_string(),
            })?;
            let expr = parse(&r.rhs, &vars).map_err(|source| SystemError::Parse {
                line: r.line,
                source,
            })?;
            Ok(Candidate {
                line: r.line,
                name: r.name,
                expr,
                link: r.link,
                vars,
            })
        })
        .collect()
}

fn split_lines(text: &str) -> Result<Vec<RawLine>, SystemError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let (lhs, rhs) = body.split_once('=').ok_or_else(|| SystemError::Syntax {
            line,
            message: "expected `name = expression`".into(),
        })?;
        let name = canonical_name(lhs.trim()).to_string();
        if !is_name(&name) {
            return Err(SystemError::Syntax {
                line,
                message: format!("invalid equation name `{}`", lhs.trim()),
            });
        }
        let (rhs, link) = strip_sigmoid(rhs.trim());
        if rhs.trim().is_empty() {
            return Err(SystemError::Syntax {
                line,
                message: "empty right-hand side".into(),
            });
        }
        out.push(RawLine {
            line,
            name,
            rhs: canonicalize(rhs),
            link,
        });
    }
    Ok(out)
}

fn is_name(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
        && UnaryOp::from_name(s).is_none()
        && s != "sigmoid"
}

/// Splits off an outer `sigmoid( ... )` spanning the whole right-hand side.
fn strip_sigmoid(rhs: &str) -> (&str, Link) {
    let Some(rest) = rhs.strip_prefix("sigmoid") else {
        return (rhs, Link::Identity);
    };
    let rest = rest.trim_start();
    if !rest.starts_with('(') || !rest.ends_with(')') {
        return (rhs, Link::Identity);
    }
    let mut depth = 0i32;
    for (i, c) in rest.char_indices() {
        match c {
            '(' => depth += 1,
            ')' => {
                depth -= 1;
                if depth == 0 && i + 1 != rest.len() {
                    return (rhs, Link::Identity);
                }
            }
            _ => {}
        }
    }
    (&rest[1..rest.len() - 1], Link::Sigmoid)
}

enum Token<'a> {
    Ident(&'a str),
    Other(&'a str),
}

/// Splits expression text into identifiers and everything else, keeping
/// numeric literals (including exponents like `1e-3`) intact.
fn tokens(text: &str) -> Vec<Token<'_>> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let start = i;
        if c.is_ascii_alphabetic() || c == b'_' {
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push(Token::Ident(&text[start..i]));
        } else if c.is_ascii_digit() || c == b'.' {
            while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                i += 1;
            }
            if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                let mut j = i + 1;
                if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                    j += 1;
                }
                if j < bytes.len() && bytes[j].is_ascii_digit() {
                    i = j;
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            out.push(Token::Other(&text[start..i]));
        } else {
            // Keep multi-byte characters whole.
            let len = text[i..].chars().next().map_or(1, char::len_utf8);
            i += len;
            out.push(Token::Other(&text[start..i]));
        }
    }
    out
}

fn canonicalize(text: &str) -> String {
    tokens(text)
        .into_iter()
        .map(|t| match t {
            Token::Ident(s) => canonical_name(s),
            Token::Other(s) => s,
        })
        .collect()
}

/// Variable identifiers in order of first appearance, function names excluded.
fn identifiers(text: &str) -> Vec<String> {
    let mut seen = Vec::<String>::new();
    for t in tokens(text) {
        if let Token::Ident(s) = t {
            if UnaryOp::from_name(s).is_none() && !seen.iter().any(|x| x == s) {
                seen.push(s.to_string());
            }
        }
    }
    seen
}
