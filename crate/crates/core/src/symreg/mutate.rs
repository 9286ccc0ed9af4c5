//! Random tree generation, mutation and crossover.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::expr::Expr;

use super::SRConfig;

/// Attempts per mutation or crossover before the parent is returned as is.
pub const MAX_RETRIES: usize = 10;

/// Standard deviation of the log-factor used by constant jitter.
pub const JITTER_SIGMA: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MutationKind {
    Point,
    Subtree,
    Jitter,
    Insert,
    Delete,
    Fold,
}

impl MutationKind {
    pub const ALL: [MutationKind; 6] = [
        MutationKind::Point,
        MutationKind::Subtree,
        MutationKind::Jitter,
        MutationKind::Insert,
        MutationKind::Delete,
        MutationKind::Fold,
    ];
}

pub fn within_bounds(e: &Expr, cfg: &SRConfig) -> bool {
    e.weighted_complexity(cfg.constant_complexity) <= cfg.maxsize && e.depth() <= cfg.maxdepth
}

fn random_constant<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

pub fn random_leaf<R: Rng + ?Sized>(rng: &mut R, n_vars: usize) -> Expr {
    if n_vars > 0 && rng.random_bool(0.7) {
        Expr::Var(rng.random_range(0..n_vars))
    } else {
        Expr::Const(random_constant(rng))
    }
}

/// Grows a random tree of depth at most `max_depth`.
pub fn random_tree<R: Rng + ?Sized>(
    rng: &mut R,
    cfg: &SRConfig,
    n_vars: usize,
    max_depth: usize,
) -> Expr {
    if max_depth <= 1 || rng.random_bool(0.3) {
        return random_leaf(rng, n_vars);
    }
    let n_unary = cfg.unary_ops.len();
    let n_binary = cfg.binary_ops.len();
    let pick = rng.random_range(0..(n_unary + 2 * n_binary));
    if pick < n_unary {
        Expr::unary(
            cfg.unary_ops[pick],
            random_tree(rng, cfg, n_vars, max_depth - 1),
        )
    } else {
        let op = cfg.binary_ops[(pick - n_unary) % n_binary];
        Expr::binary(
            op,
            random_tree(rng, cfg, n_vars, max_depth - 1),
            random_tree(rng, cfg, n_vars, max_depth - 1),
        )
    }
}

fn choose_node<R: Rng + ?Sized>(
    rng: &mut R,
    e: &Expr,
    pred: impl Fn(&Expr) -> bool,
) -> Option<usize> {
    let candidates: Vec<usize> = (0..e.node_count())
        .filter(|&i| pred(e.node(i).expect("in range")))
        .collect();
    if candidates.is_empty() {
        None
    } else {
        Some(candidates[rng.random_range(0..candidates.len())])
    }
}

fn try_mutate<R: Rng + ?Sized>(
    kind: MutationKind,
    e: &Expr,
    cfg: &SRConfig,
    n_vars: usize,
    rng: &mut R,
) -> Option<Expr> {
    match kind {
        MutationKind::Point => {
            let i = rng.random_range(0..e.node_count());
            let node = match e.node(i)? {
                Expr::Const(_) => Expr::Const(random_constant(rng)),
                Expr::Var(v) => {
                    if n_vars < 2 {
                        return None;
                    }
                    let mut w = rng.random_range(0..n_vars - 1);
                    if w >= *v {
                        w += 1;
                    }
                    Expr::Var(w)
                }
                Expr::Unary(op, a) => {
                    let others: Vec<_> = cfg.unary_ops.iter().filter(|o| *o != op).collect();
                    if others.is_empty() {
                        return None;
                    }
                    Expr::Unary(*others[rng.random_range(0..others.len())], a.clone())
                }
                Expr::Binary(op, a, b) => {
                    let others: Vec<_> = cfg.binary_ops.iter().filter(|o| *o != op).collect();
                    if others.is_empty() {
                        return None;
                    }
                    Expr::Binary(
                        *others[rng.random_range(0..others.len())],
                        a.clone(),
                        b.clone(),
                    )
                }
            };
            Some(e.replace_node(i, node))
        }
        MutationKind::Subtree => {
            let i = rng.random_range(0..e.node_count());
            let depth = rng.random_range(1..=3);
            Some(e.replace_node(i, random_tree(rng, cfg, n_vars, depth)))
        }
        MutationKind::Jitter => {
            let i = choose_node(rng, e, |n| matches!(n, Expr::Const(_)))?;
            let Some(Expr::Const(c)) = e.node(i) else {
                unreachable!()
            };
            let factor = (JITTER_SIGMA * rng.sample::<f64, _>(StandardNormal)).exp();
            let v = if *c == 0.0 {
                random_constant(rng)
            } else {
                c * factor
            };
            Some(e.replace_node(i, Expr::Const(v)))
        }
        MutationKind::Insert => {
            let i = rng.random_range(0..e.node_count());
            let sub = e.node(i)?.clone();
            let n_unary = cfg.unary_ops.len();
            let pick = rng.random_range(0..(n_unary + 2 * cfg.binary_ops.len()));
            let wrapped = if pick < n_unary {
                Expr::unary(cfg.unary_ops[pick], sub)
            } else {
                let k = pick - n_unary;
                let op = cfg.binary_ops[k / 2];
                let leaf = random_leaf(rng, n_vars);
                if k.is_multiple_of(2) {
                    Expr::binary(op, sub, leaf)
                } else {
                    Expr::binary(op, leaf, sub)
                }
            };
            Some(e.replace_node(i, wrapped))
        }
        MutationKind::Delete => {
            let i = choose_node(rng, e, |n| matches!(n, Expr::Unary(..) | Expr::Binary(..)))?;
            let child = match e.node(i)? {
                Expr::Unary(_, a) => a.as_ref().clone(),
                Expr::Binary(_, a, b) => {
                    if rng.random_bool(0.5) {
                        a.as_ref().clone()
                    } else {
                        b.as_ref().clone()
                    }
                }
                _ => unreachable!(),
            };
            Some(e.replace_node(i, child))
        }
        MutationKind::Fold => Some(e.fold_constants()),
    }
}

/// Applies one random mutation, reporting which kind was applied. Returns
/// the input unchanged (with the last kind tried) when every attempt is
/// inapplicable or breaks the size/depth bounds.
pub fn mutate_with_kind<R: Rng + ?Sized>(
    e: &Expr,
    cfg: &SRConfig,
    n_vars: usize,
    rng: &mut R,
) -> (Expr, MutationKind) {
    let dist = WeightedIndex::new(cfg.mutation.as_array()).expect("validated weights");
    let mut kind = MutationKind::Point;
    for _ in 0..MAX_RETRIES {
        kind = MutationKind::ALL[dist.sample(rng)];
        if let Some(out) = try_mutate(kind, e, cfg, n_vars, rng) {
            if within_bounds(&out, cfg) {
                return (out, kind);
            }
        }
    }
    (e.clone(), kind)
}

pub fn mutate<R: Rng + ?Sized>(e: &Expr, cfg: &SRConfig, n_vars: usize, rng: &mut R) -> Expr {
    mutate_with_kind(e, cfg, n_vars, rng).0
}

/// Replaces a random subtree of `a` with a random subtree of `b`.
pub fn crossover<R: Rng + ?Sized>(a: &Expr, b: &Expr, cfg: &SRConfig, rng: &mut R) -> Expr {
    for _ in 0..MAX_RETRIES {
        let i = rng.random_range(0..a.node_count());
        let j = rng.random_range(0..b.node_count());
        let donor = b.node(j).expect("in range").clone();
        let child = a.replace_node(i, donor);
        if within_bounds(&child, cfg) {
            return child;
        }
    }
    a.clone()
}
