//! Box-constrained limited-memory quasi-Newton minimization.
//!
//! Projected L-BFGS: variables pinned at a bound with the gradient pointing
//! outward are frozen for the iteration, the two-loop recursion runs on the
//! free subspace, and the backtracking line search follows the projected
//! path `P(x + α d)`.

use std::collections::VecDeque;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub(crate) struct Options {
    pub grad_tol: f64,
    pub max_iters: usize,
    pub memory: usize,
}

#[derive(Debug, Clone)]
pub(crate) struct Outcome {
    pub x: Vec<f64>,
    pub value: f64,
    pub grad_norm: f64,
    pub iterations: usize,
    pub converged: bool,
}

const ARMIJO: f64 = 1e-4;
const MAX_BACKTRACKS: usize = 60;

pub(crate) fn minimize<F>(
    mut func: F,
    x0: &[f64],
    lower: &[f64],
    upper: &[f64],
    opts: Options,
) -> Result<Outcome>
where
    F: FnMut(&[f64]) -> Result<(f64, Vec<f64>)>,
{
    let n = x0.len();
    let mut x: Vec<f64> = (0..n).map(|i| x0[i].clamp(lower[i], upper[i])).collect();
    let (mut fx, mut g) = func(&x)?;
    if !fx.is_finite() || g.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("objective at the starting point".into()));
    }
    let mut history: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::with_capacity(opts.memory);
    let mut pg_norm = projected_norm(&x, &g, lower, upper);
    let mut iterations = 0;

    while iterations < opts.max_iters {
        if pg_norm <= opts.grad_tol {
            return Ok(Outcome { x, value: fx, grad_norm: pg_norm, iterations, converged: true });
        }
        iterations += 1;

        let free: Vec<bool> = (0..n)
            .map(|i| !((x[i] <= lower[i] && g[i] > 0.0) || (x[i] >= upper[i] && g[i] < 0.0)))
            .collect();

        let mut accepted = None;
        for attempt in 0..2 {
            if attempt == 1 {
                if history.is_empty() {
                    break;
                }
                history.clear();
            }
            let mut dir = two_loop(&g, &free, &history);
            let mut slope = dot(&g, &dir);
            if !(slope < 0.0) {
                history.clear();
                dir = g.iter().zip(&free).map(|(gi, &f)| if f { -gi } else { 0.0 }).collect();
                slope = dot(&g, &dir);
            }
            if !(slope < 0.0) {
                break;
            }
            // Without curvature information the raw gradient may be badly scaled.
            let mut alpha = if history.is_empty() {
                (0.1 / inf_norm(&dir)).min(1.0)
            } else {
                1.0
            };
            let mut saw_finite = false;
            for _ in 0..MAX_BACKTRACKS {
                let trial: Vec<f64> =
                    (0..n).map(|i| (x[i] + alpha * dir[i]).clamp(lower[i], upper[i])).collect();
                if let Ok((ft, gt)) = func(&trial) {
                    if ft.is_finite() && gt.iter().all(|v| v.is_finite()) {
                        saw_finite = true;
                        let step_slope: f64 = (0..n).map(|i| g[i] * (trial[i] - x[i])).sum();
                        let sufficient = ft <= fx + ARMIJO * step_slope;
                        // Near the optimum the objective stops resolving decreases;
                        // fall back to the (analytic, hence accurate) gradient.
                        let noise = 64.0 * f64::EPSILON * fx.abs().max(1.0);
                        let flat_but_better = (ft - fx).abs() <= noise
                            && projected_norm(&trial, &gt, lower, upper) < pg_norm;
                        if sufficient || flat_but_better {
                            accepted = Some((trial, ft, gt));
                            break;
                        }
                    }
                }
                alpha *= 0.5;
            }
            if accepted.is_some() {
                break;
            }
            if !saw_finite && attempt == 1 {
                return Err(Error::NonFinite("objective along the line search".into()));
            }
        }

        let Some((x_new, f_new, g_new)) = accepted else {
            break;
        };
        let s: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 * dot(&s, &s).sqrt() * dot(&y, &y).sqrt() && sy > 0.0 {
            if history.len() == opts.memory {
                history.pop_front();
            }
            history.push_back((s, y, 1.0 / sy));
        }
        x = x_new;
        fx = f_new;
        g = g_new;
        pg_norm = projected_norm(&x, &g, lower, upper);
    }

    let converged = pg_norm <= opts.grad_tol;
    Ok(Outcome { x, value: fx, grad_norm: pg_norm, iterations, converged })
}

/// Euclidean norm of `x - P(x - g)`.
pub(crate) fn projected_norm(x: &[f64], g: &[f64], lower: &[f64], upper: &[f64]) -> f64 {
    x.iter()
        .zip(g)
        .enumerate()
        .map(|(i, (&xi, &gi))| {
            let r = xi - (xi - gi).clamp(lower[i], upper[i]);
            r * r
        })
        .sum::<f64>()
        .sqrt()
}

fn two_loop(g: &[f64], free: &[bool], history: &VecDeque<(Vec<f64>, Vec<f64>, f64)>) -> Vec<f64> {
    let masked = |v: &[f64]| -> Vec<f64> {
        v.iter().zip(free).map(|(x, &f)| if f { *x } else { 0.0 }).collect()
    };
    let mut q = masked(g);
    let mut alphas = Vec::with_capacity(history.len());
    for (s, y, rho) in history.iter().rev() {
        let a = rho * dot_masked(s, &q, free);
        for i in 0..q.len() {
            if free[i] {
                q[i] -= a * y[i];
            }
        }
        alphas.push(a);
    }
    if let Some((s, y, _)) = history.back() {
        let yy = dot_masked(y, y, free);
        let sy = dot_masked(s, y, free);
        if yy > 0.0 && sy > 0.0 {
            let gamma = sy / yy;
            q.iter_mut().for_each(|v| *v *= gamma);
        }
    }
    for ((s, y, rho), a) in history.iter().zip(alphas.into_iter().rev()) {
        let b = rho * dot_masked(y, &q, free);
        for i in 0..q.len() {
            if free[i] {
                q[i] += (a - b) * s[i];
            }
        }
    }
    q.iter().zip(free).map(|(v, &f)| if f { -v } else { 0.0 }).collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn dot_masked(a: &[f64], b: &[f64], free: &[bool]) -> f64 {
    a.iter().zip(b).zip(free).filter(|(_, &f)| f).map(|((x, y), _)| x * y).sum()
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn opts() -> Options {
        Options { grad_tol: 1e-10, max_iters: 500, memory: 10 }
    }

    #[test]
    fn rosenbrock_unconstrained() {
        let f = |x: &[f64]| {
            let (a, b) = (x[0], x[1]);
            let v = (1.0 - a).powi(2) + 100.0 * (b - a * a).powi(2);
            let g = vec![-2.0 * (1.0 - a) - 400.0 * a * (b - a * a), 200.0 * (b - a * a)];
            Ok((v, g))
        };
        let out = minimize(f, &[-1.2, 1.0], &[-5.0, -5.0], &[5.0, 5.0], opts()).unwrap();
        assert!(out.converged);
        assert!((out.x[0] - 1.0).abs() < 1e-6 && (out.x[1] - 1.0).abs() < 1e-6);
    }

    #[test]
    fn active_bound() {
        // Minimum of (x-2)^2 + (y+0.3)^2 on [-1,1]^2 is (1, -0.3).
        let f = |x: &[f64]| {
            Ok(((x[0] - 2.0).powi(2) + (x[1] + 0.3).powi(2), vec![2.0 * (x[0] - 2.0), 2.0 * (x[1] + 0.3)]))
        };
        let out = minimize(f, &[0.0, 0.0], &[-1.0, -1.0], &[1.0, 1.0], opts()).unwrap();
        assert!(out.converged);
        assert_eq!(out.x[0], 1.0);
        assert!((out.x[1] + 0.3).abs() < 1e-9);
    }

    #[test]
    fn iteration_cap_reports_not_converged() {
        let f = |x: &[f64]| {
            let (a, b) = (x[0], x[1]);
            Ok(((1.0 - a).powi(2) + 100.0 * (b - a * a).powi(2),
                vec![-2.0 * (1.0 - a) - 400.0 * a * (b - a * a), 200.0 * (b - a * a)]))
        };
        let out = minimize(f, &[-1.2, 1.0], &[-5.0, -5.0], &[5.0, 5.0], Options { max_iters: 3, ..opts() }).unwrap();
        assert!(!out.converged);
        assert_eq!(out.iterations, 3);
    }
}
