use std::fmt::Write as _;

use crate::expr::{Expr, VarTable};

#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub expr: Expr,
    /// Mean squared error after the link.
    pub loss: f64,
    pub complexity: usize,
    /// Filled in by [`ParetoFront::compute_scores`].
    pub score: f64,
}

impl Candidate {
    pub fn new(expr: Expr, loss: f64, constant_complexity: usize) -> Self {
        let complexity = expr.weighted_complexity(constant_complexity);
        Candidate {
            expr,
            loss,
            complexity,
            score: 0.0,
        }
    }

    /// `self` is no worse than `other` in both objectives.
    pub fn covers(&self, complexity: usize, loss: f64) -> bool {
        self.complexity <= complexity && self.loss <= loss
    }
}

/// Candidates sorted by increasing complexity with strictly decreasing loss.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParetoFront {
    members: Vec<Candidate>,
}

impl ParetoFront {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn members(&self) -> &[Candidate] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Whether a candidate with these objectives would be inserted.
    pub fn accepts(&self, complexity: usize, loss: f64) -> bool {
        loss.is_finite() && !self.members.iter().any(|m| m.covers(complexity, loss))
    }

    /// Inserts `c` unless it is dominated (or tied) by a member; removes the
    /// members `c` dominates. Non-finite losses are rejected.
    pub fn insert(&mut self, c: Candidate) -> bool {
        if !self.accepts(c.complexity, c.loss) {
            return false;
        }
        self.members.retain(|m| !c.covers(m.complexity, m.loss));
        let at = self
            .members
            .partition_point(|m| m.complexity < c.complexity);
        self.members.insert(at, c);
        true
    }

    pub fn best_loss(&self) -> Option<f64> {
        self.members.last().map(|m| m.loss)
    }

    /// Sets `score_i = (ln L_{i-1} - ln L_i) / (C_i - C_{i-1})`; the first
    /// member scores 0.
    pub fn compute_scores(&mut self) {
        for i in 0..self.members.len() {
            self.members[i].score = if i == 0 {
                0.0
            } else {
                let prev = &self.members[i - 1];
                let cur = &self.members[i];
                (prev.loss.ln() - cur.loss.ln()) / (cur.complexity - prev.complexity) as f64
            };
        }
    }

    /// Among members whose loss is within [`SELECT_LOSS_FACTOR`] of the
    /// lowest, the one with the highest score; ties go to the simpler one.
    pub fn select(&self) -> Option<&Candidate> {
        let mut scored = self.clone();
        scored.compute_scores();
        let cutoff = self.best_loss()? * SELECT_LOSS_FACTOR;
        let mut best: Option<usize> = None;
        for (i, m) in scored.members.iter().enumerate() {
            if m.loss > cutoff {
                continue;
            }
            match best {
                Some(b)
                    if m.score.partial_cmp(&scored.members[b].score)
                        != Some(std::cmp::Ordering::Greater) => {}
                _ => best = Some(i),
            }
        }
        best.map(|i| &self.members[i])
    }

    /// Text table: complexity, loss, score and expression per member.
    pub fn to_table(&self, vars: &VarTable) -> String {
        let mut scored = self.clone();
        scored.compute_scores();
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:>10}  {:>14}  {:>12}  equation",
            "complexity", "loss", "score"
        );
        for m in &scored.members {
            let _ = writeln!(
                out,
                "{:>10}  {:>14.6e}  {:>12.6}  {}",
                m.complexity,
                m.loss,
                m.score,
                m.expr.display(vars)
            );
        }
        out
    }
}

/// Loss tolerance of [`ParetoFront::select`] relative to the best loss.
pub const SELECT_LOSS_FACTOR: f64 = 1.5;

/// Picks the equation to report from a front.
pub fn select_equation(front: &ParetoFront) -> Option<Candidate> {
    let mut scored = front.clone();
    scored.compute_scores();
    let chosen = front.select()?;
    scored
        .members
        .into_iter()
        .find(|m| m.complexity == chosen.complexity)
}
