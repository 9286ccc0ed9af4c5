//! Constant fitting by Nelder–Mead on the post-link MSE.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::expr::Expr;

use super::Link;

/// Simplex iterations per restart.
pub const MAX_SIMPLEX_STEPS: usize = 200;

/// Result of a Nelder–Mead minimisation.
#[derive(Debug, Clone, PartialEq)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
}

fn initial_step(x: f64) -> f64 {
    if x != 0.0 {
        0.05 * x
    } else {
        0.00025
    }
}

/// Minimises `f` from `x0` with the standard reflection (1), expansion (2),
/// contraction (1/2) and shrink (1/2) coefficients. Non-finite values of
/// `f` are treated as `+inf`, so such trial points are never accepted.
pub fn nelder_mead(mut f: impl FnMut(&[f64]) -> f64, x0: &[f64], max_iter: usize) -> Minimum {
    let n = x0.len();
    let mut eval = |x: &[f64]| {
        let v = f(x);
        if v.is_finite() {
            v
        } else {
            f64::INFINITY
        }
    };
    if n == 0 {
        return Minimum {
            x: vec![],
            value: eval(x0),
            iterations: 0,
        };
    }
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    simplex.push((x0.to_vec(), eval(x0)));
    for i in 0..n {
        let mut x = x0.to_vec();
        x[i] += initial_step(x0[i]);
        let v = eval(&x);
        simplex.push((x, v));
    }

    let mut iterations = 0;
    while iterations < max_iter {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let best = simplex[0].1;
        let worst = simplex[n].1;
        if best.is_finite() && worst.is_finite() {
            let spread = worst - best;
            let diameter = simplex[1..]
                .iter()
                .flat_map(|(x, _)| x.iter().zip(&simplex[0].0).map(|(a, b)| (a - b).abs()))
                .fold(0.0, f64::max);
            let scale = 1.0 + simplex[0].0.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            if spread <= 1e-15 * best.abs() + 1e-300 && diameter <= 1e-12 * scale {
                break;
            }
        }
        iterations += 1;

        let mut centroid = vec![0.0; n];
        for (x, _) in &simplex[..n] {
            for (c, v) in centroid.iter_mut().zip(x) {
                *c += v / n as f64;
            }
        }
        let along = |t: f64, from: &[f64]| -> Vec<f64> {
            centroid
                .iter()
                .zip(from)
                .map(|(c, w)| c + t * (w - c))
                .collect()
        };

        let xr = along(-1.0, &simplex[n].0);
        let fr = eval(&xr);
        if fr < best {
            let xe = along(-2.0, &simplex[n].0);
            let fe = eval(&xe);
            simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
            continue;
        }
        if fr < simplex[n - 1].1 {
            simplex[n] = (xr, fr);
            continue;
        }
        let (xc, fc, accept) = if fr < worst {
            let xc = along(-0.5, &simplex[n].0);
            let fc = eval(&xc);
            let ok = fc <= fr;
            (xc, fc, ok)
        } else {
            let xc = along(0.5, &simplex[n].0);
            let fc = eval(&xc);
            let ok = fc < worst;
            (xc, fc, ok)
        };
        if accept {
            simplex[n] = (xc, fc);
            continue;
        }
        let x_best = simplex[0].0.clone();
        for (x, v) in simplex.iter_mut().skip(1) {
            for (xi, bi) in x.iter_mut().zip(&x_best) {
                *xi = bi + 0.5 * (*xi - bi);
            }
            *v = eval(x);
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (x, value) = simplex.swap_remove(0);
    Minimum {
        x,
        value,
        iterations,
    }
}

/// Mean squared error of `link(expr)` against `y`; `+inf` when any
/// prediction is non-finite.
pub fn link_mse(expr: &Expr, columns: &[&[f64]], y: &[f64], link: Link) -> f64 {
    let pred = expr.eval_columns(columns, y.len());
    let mut sum = 0.0;
    for (p, t) in pred.iter().zip(y) {
        let p = link.apply(*p);
        if !p.is_finite() {
            return f64::INFINITY;
        }
        sum += (p - t) * (p - t);
    }
    sum / y.len() as f64
}

/// Refits the constants of `expr`: one Nelder–Mead run from the current
/// values and one from values perturbed by `(1 + 0.5 z)`, `z ~ N(0, 1)`.
/// The best result is returned only if it does not increase the loss.
pub fn optimize_constants<R: Rng + ?Sized>(
    expr: &Expr,
    columns: &[&[f64]],
    y: &[f64],
    link: Link,
    rng: &mut R,
) -> Expr {
    let c0 = expr.constants();
    if c0.is_empty() {
        return expr.clone();
    }
    let mut work = expr.clone();
    let mut objective = |c: &[f64]| {
        work.set_constants(c);
        link_mse(&work, columns, y, link)
    };
    let start_loss = objective(&c0);
    let mut best = (c0.clone(), start_loss);

    let perturbed: Vec<f64> = c0
        .iter()
        .map(|c| c * (1.0 + 0.5 * rng.sample::<f64, _>(StandardNormal)))
        .collect();
    for start in [c0, perturbed] {
        let m = nelder_mead(&mut objective, &start, MAX_SIMPLEX_STEPS);
        if m.value < best.1 {
            best = (m.x, m.value);
        }
    }
    expr.with_constants(&best.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{parse, VarTable};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn rosenbrock_converges() {
        let f = |x: &[f64]| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2);
        let m = nelder_mead(f, &[-1.2, 1.0], 2000);
        assert!(
            (m.x[0] - 1.0).abs() < 1e-6 && (m.x[1] - 1.0).abs() < 1e-6,
            "{m:?}"
        );
    }

    #[test]
    fn non_finite_points_are_rejected() {
        let f = |x: &[f64]| {
            if x[0] < 0.5 {
                f64::NAN
            } else {
                (x[0] - 1.0).powi(2)
            }
        };
        let m = nelder_mead(f, &[2.0], 200);
        assert!((m.x[0] - 1.0).abs() < 1e-6);
    }

    #[test]
    fn linear_scale_matches_least_squares() {
        let v = VarTable::numbered(1);
        let x: Vec<f64> = (0..40).map(|i| i as f64 / 10.0 - 2.0).collect();
        let y: Vec<f64> = x.iter().map(|t| 2.5 * t).collect();
        // closed-form least squares for y = c x
        let sxy: f64 = x.iter().zip(&y).map(|(a, b)| a * b).sum();
        let sxx: f64 = x.iter().map(|a| a * a).sum();
        let c_ls = sxy / sxx;
        let e = parse("1 * x0", &v).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let fit = optimize_constants(&e, &[&x], &y, Link::Identity, &mut rng);
        let c = fit.constants()[0];
        assert!((c - c_ls).abs() < 1e-6 && (c - 2.5).abs() < 1e-6, "{c}");
    }

    #[test]
    fn sigmoid_link_offset() {
        let v = VarTable::numbered(1);
        let x: Vec<f64> = (0..50).map(|i| i as f64 / 10.0 - 2.5).collect();
        let y: Vec<f64> = x.iter().map(|t| Link::Sigmoid.apply(1.86 + t)).collect();
        let e = parse("0 + x0", &v).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let fit = optimize_constants(&e, &[&x], &y, Link::Sigmoid, &mut rng);
        assert!(
            (fit.constants()[0] - 1.86).abs() < 1e-3,
            "{:?}",
            fit.constants()
        );
    }

    #[test]
    fn no_constants_is_identity() {
        let v = VarTable::numbered(1);
        let e = parse("square(x0)", &v).unwrap();
        let x = [1.0, 2.0];
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(
            optimize_constants(&e, &[&x], &[0.0, 0.0], Link::Identity, &mut rng),
            e
        );
    }

    #[test]
    fn never_worse_than_input() {
        let v = VarTable::numbered(1);
        let x: Vec<f64> = (0..30).map(|i| i as f64 / 7.0).collect();
        let y: Vec<f64> = x.iter().map(|t: &f64| t.sin()).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for src in ["0.3 * x0 + 0.1", "exp(0.2 * x0) - 1", "x0 / (x0 + 0.5)"] {
            let e = parse(src, &v).unwrap();
            let before = link_mse(&e, &[&x], &y, Link::Identity);
            let after = link_mse(
                &optimize_constants(&e, &[&x], &y, Link::Identity, &mut rng),
                &[&x],
                &y,
                Link::Identity,
            );
            assert!(after <= before, "{src}: {after} > {before}");
        }
    }
}
