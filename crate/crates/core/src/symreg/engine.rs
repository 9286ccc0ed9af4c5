//! Island-model search loop.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::dataset::logit;
use crate::expr::Expr;

use super::constopt::{link_mse, optimize_constants};
use super::mutate::{crossover, mutate, random_tree, within_bounds};
use super::{Candidate, Link, ParetoFront, SRConfig, SrError};

/// Depth limit for trees in the initial populations.
const INIT_DEPTH: usize = 3;

/// Progress record passed to the observer after each iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationStats {
    pub iteration: usize,
    pub best_loss: f64,
    pub front_size: usize,
}

#[derive(Debug, Clone)]
struct Member {
    cand: Candidate,
    birth: u64,
}

struct Island {
    members: Vec<Member>,
    rng: ChaCha8Rng,
    births: u64,
}

struct Problem<'a> {
    columns: Vec<&'a [f64]>,
    y: &'a [f64],
    cfg: &'a SRConfig,
}

impl Problem<'_> {
    fn n_vars(&self) -> usize {
        self.columns.len()
    }

    fn loss(&self, e: &Expr) -> f64 {
        link_mse(e, &self.columns, self.y, self.cfg.link)
    }

    fn candidate(&self, e: Expr) -> Candidate {
        let loss = self.loss(&e);
        Candidate::new(e, loss, self.cfg.constant_complexity)
    }

    fn polish(&self, e: &Expr, rng: &mut ChaCha8Rng) -> Candidate {
        if e.constant_count() == 0 {
            return self.candidate(e.clone());
        }
        self.candidate(optimize_constants(
            e,
            &self.columns,
            self.y,
            self.cfg.link,
            rng,
        ))
    }
}

/// The constant model used to seed every front: `mean(y)`, or its logit
/// under the sigmoid link.
pub fn constant_fallback(y: &[f64], link: Link) -> Expr {
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    match link {
        Link::Identity => Expr::Const(mean),
        Link::Sigmoid => Expr::Const(logit(mean, 1e-9)),
    }
}

fn rank_key(c: &Candidate) -> (f64, usize) {
    let l = if c.loss.is_finite() {
        c.loss
    } else {
        f64::INFINITY
    };
    (l, c.complexity)
}

fn better(a: &Candidate, b: &Candidate) -> bool {
    let (la, ca) = rank_key(a);
    let (lb, cb) = rank_key(b);
    la < lb || (la == lb && ca < cb)
}

fn tournament<'m>(members: &'m [Member], size: usize, rng: &mut ChaCha8Rng) -> &'m Candidate {
    let k = size.min(members.len());
    let mut best: Option<&Candidate> = None;
    for i in sample(rng, members.len(), k) {
        let c = &members[i].cand;
        if best.is_none_or(|b| better(c, b)) {
            best = Some(c);
        }
    }
    best.expect("non-empty island")
}

fn evolve_island(island: &mut Island, problem: &Problem, global: &ParetoFront) -> ParetoFront {
    let cfg = problem.cfg;
    let mut local = global.clone();
    for _ in 0..cfg.ncycles_per_iteration {
        let rng = &mut island.rng;
        let parent = tournament(&island.members, cfg.tournament_size, rng)
            .expr
            .clone();
        let child = if rng.random_bool(cfg.crossover_probability) {
            let other = tournament(&island.members, cfg.tournament_size, rng)
                .expr
                .clone();
            crossover(&parent, &other, cfg, rng)
        } else {
            mutate(&parent, cfg, problem.n_vars(), rng)
        };
        let mut cand = problem.candidate(child);
        if local.accepts(cand.complexity, cand.loss) {
            let polished = problem.polish(&cand.expr, rng);
            if polished.loss <= cand.loss {
                cand = polished;
            }
            local.insert(cand.clone());
        }
        let oldest = island
            .members
            .iter()
            .enumerate()
            .min_by_key(|(_, m)| m.birth)
            .map(|(i, _)| i)
            .expect("non-empty island");
        island.births += 1;
        island.members[oldest] = Member {
            cand,
            birth: island.births,
        };
    }
    local
}

fn migrate(islands: &mut [Island], fraction: f64) {
    let n = islands.len();
    if n < 2 {
        return;
    }
    let emigrants: Vec<Vec<Candidate>> = islands
        .iter()
        .map(|isl| {
            let k = ((isl.members.len() as f64 * fraction).round() as usize).min(isl.members.len());
            let mut sorted: Vec<&Member> = isl.members.iter().collect();
            sorted.sort_by(|a, b| {
                rank_key(&a.cand)
                    .partial_cmp(&rank_key(&b.cand))
                    .expect("no NaN keys")
            });
            sorted.into_iter().take(k).map(|m| m.cand.clone()).collect()
        })
        .collect();
    for (i, isl) in islands.iter_mut().enumerate() {
        let incoming = &emigrants[(i + n - 1) % n];
        let mut order: Vec<usize> = (0..isl.members.len()).collect();
        order.sort_by(|&a, &b| {
            rank_key(&isl.members[b].cand)
                .partial_cmp(&rank_key(&isl.members[a].cand))
                .expect("no NaN keys")
        });
        for (slot, c) in order.into_iter().zip(incoming) {
            isl.births += 1;
            isl.members[slot] = Member {
                cand: c.clone(),
                birth: isl.births,
            };
        }
    }
}

fn check_input(columns: &[&[f64]], y: &[f64]) -> Result<(), SrError> {
    if y.is_empty() || columns.is_empty() {
        return Err(SrError::EmptyData);
    }
    for (i, c) in columns.iter().enumerate() {
        if c.len() != y.len() {
            return Err(SrError::LengthMismatch {
                column: i,
                expected: y.len(),
                found: c.len(),
            });
        }
    }
    if let Some(i) = y.iter().position(|v| !v.is_finite()) {
        return Err(SrError::NonFiniteTarget(i));
    }
    Ok(())
}

/// Fits `y ~ f(columns)` and returns the non-dominated front found.
pub fn fit(columns: &[&[f64]], y: &[f64], cfg: &SRConfig) -> Result<ParetoFront, SrError> {
    fit_observed(columns, y, cfg, |_, _| {})
}

/// Like [`fit`], calling `observe` with the merged front after every
/// iteration.
pub fn fit_observed(
    columns: &[&[f64]],
    y: &[f64],
    cfg: &SRConfig,
    mut observe: impl FnMut(&IterationStats, &ParetoFront),
) -> Result<ParetoFront, SrError> {
    cfg.validate()?;
    check_input(columns, y)?;

    let mut master = ChaCha8Rng::seed_from_u64(cfg.seed);
    let (sub_cols, sub_y): (Vec<Vec<f64>>, Vec<f64>) = match cfg.max_rows {
        Some(m) if m < y.len() => {
            let mut rows = sample(&mut master, y.len(), m).into_vec();
            rows.sort_unstable();
            let cols = columns
                .iter()
                .map(|c| rows.iter().map(|&r| c[r]).collect())
                .collect();
            (cols, rows.iter().map(|&r| y[r]).collect())
        }
        _ => (Vec::new(), Vec::new()),
    };
    let problem = if sub_cols.is_empty() {
        Problem {
            columns: columns.to_vec(),
            y,
            cfg,
        }
    } else {
        Problem {
            columns: sub_cols.iter().map(|c| c.as_slice()).collect(),
            y: &sub_y,
            cfg,
        }
    };

    let mut front = ParetoFront::new();
    let fallback = problem.polish(&constant_fallback(problem.y, cfg.link), &mut master);
    front.insert(fallback);

    let mut islands: Vec<Island> = (0..cfg.populations)
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(i as u64 + 1);
            let members = (0..cfg.population_size)
                .map(|b| {
                    let mut e = random_tree(
                        &mut rng,
                        cfg,
                        problem.n_vars(),
                        INIT_DEPTH.min(cfg.maxdepth),
                    );
                    if !within_bounds(&e, cfg) {
                        e = Expr::Var(rng.random_range(0..problem.n_vars()));
                    }
                    Member {
                        cand: problem.candidate(e),
                        birth: b as u64,
                    }
                })
                .collect();
            Island {
                members,
                rng,
                births: cfg.population_size as u64,
            }
        })
        .collect();
    for isl in &islands {
        for m in &isl.members {
            front.insert(m.cand.clone());
        }
    }

    for iteration in 0..cfg.niterations {
        let locals: Vec<ParetoFront> = islands
            .par_iter_mut()
            .map(|isl| evolve_island(isl, &problem, &front))
            .collect();
        for local in locals {
            for c in local.members() {
                front.insert(c.clone());
            }
        }
        migrate(&mut islands, cfg.migration_fraction);

        let best_loss = front.best_loss().unwrap_or(f64::INFINITY);
        observe(
            &IterationStats {
                iteration,
                best_loss,
                front_size: front.len(),
            },
            &front,
        );
        log::debug!(
            "iteration {iteration}: best loss {best_loss:e}, front size {}",
            front.len()
        );
        if cfg.early_stop_loss.is_some_and(|t| best_loss <= t) {
            break;
        }
    }
    front.compute_scores();
    Ok(front)
}
