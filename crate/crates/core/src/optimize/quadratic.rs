//! DR^SD and mean-variance portfolios by accelerated projected gradient.

use super::simplex::{project_simplex, project_weighted_simplex};
use super::{column_means, covariance, to_weights, OptResult};
use crate::error::{Error, Result};
use crate::indices::dr;
use crate::matrix::SampleMatrix;
use crate::risk::Phi;

const MAX_ITER: usize = 200_000;
const STEP_TOL: f64 = 1e-12;

fn quad(c: &[Vec<f64>], v: &[f64]) -> f64 {
    c.iter()
        .zip(v)
        .map(|(row, vi)| vi * row.iter().zip(v).map(|(a, b)| a * b).sum::<f64>())
        .sum()
}

fn mat_vec(c: &[Vec<f64>], v: &[f64]) -> Vec<f64> {
    c.iter()
        .map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum())
        .collect()
}

/// Upper estimate of the largest eigenvalue of a PSD matrix.
fn spectral_bound(c: &[Vec<f64>]) -> f64 {
    let n = c.len();
    let mut v = vec![1.0 / (n as f64).sqrt(); n];
    let mut lambda = 0.0;
    for _ in 0..100 {
        let u = mat_vec(c, &v);
        let norm = u.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            break;
        }
        lambda = norm;
        v = u.iter().map(|x| x / norm).collect();
    }
    // power iteration underestimates; the Frobenius norm never does
    let frob = c.iter().flatten().map(|x| x * x).sum::<f64>().sqrt();
    (1.05 * lambda).min(frob).max(lambda)
}

/// FISTA with adaptive restart for `min vᵀCv` over a convex set given by
/// its projection. Returns the final iterate, iterations and convergence.
fn fista(c: &[Vec<f64>], start: Vec<f64>, project: impl Fn(&[f64]) -> Vec<f64>) -> (Vec<f64>, usize, bool) {
    let lip = 2.0 * spectral_bound(c);
    if lip == 0.0 {
        return (start, 0, true);
    }
    let step = 1.0 / lip;
    let mut x = start.clone();
    let mut y = start;
    let mut t = 1.0f64;
    let mut fx = quad(c, &x);
    for k in 1..=MAX_ITER {
        let g = mat_vec(c, &y);
        let trial: Vec<f64> = y.iter().zip(&g).map(|(yi, gi)| yi - 2.0 * step * gi).collect();
        let next = project(&trial);
        let f_next = quad(c, &next);
        let moved = next
            .iter()
            .zip(&x)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        let scale = 1.0 + x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if f_next > fx {
            // a plain projected step cannot increase f beyond rounding, so
            // failing right after a restart means x is optimal to precision
            if t == 1.0 || moved <= STEP_TOL * scale {
                return (x, k, true);
            }
            t = 1.0;
            y = x.clone();
            continue;
        }
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        let beta = (t - 1.0) / t_next;
        y = next
            .iter()
            .zip(&x)
            .map(|(a, b)| a + beta * (a - b))
            .collect();
        x = next;
        fx = f_next;
        t = t_next;
        if moved <= STEP_TOL * scale {
            return (x, k, true);
        }
    }
    (x, MAX_ITER, false)
}

/// Minimizes DR^SD over `Δ_n`: with `v = w/(wᵀσ)` the ratio becomes
/// `√(vᵀΣv)` on `{v ≥ 0, σᵀv = 1}`. Starts from the minimum-norm point of that
/// set, so flat directions resolve towards it.
pub fn min_dr_sd(x: &SampleMatrix) -> Result<OptResult> {
    let cov = covariance(x);
    let sigma: Vec<f64> = (0..x.cols()).map(|i| cov[i][i].max(0.0).sqrt()).collect();
    if let Some(i) = sigma.iter().position(|s| *s == 0.0) {
        return Err(Error::Degenerate(format!("asset {i} has zero standard deviation")));
    }
    let ss: f64 = sigma.iter().map(|s| s * s).sum();
    let start: Vec<f64> = sigma.iter().map(|s| s / ss).collect();
    let (v, iterations, converged) = fista(&cov, start, |y| project_weighted_simplex(y, &sigma, 1.0));
    let w = to_weights(&v)?;
    let objective = dr(Phi::Sd, x, Some(&w))?;
    Ok(OptResult {
        w,
        objective,
        exceedance_count: None,
        iterations,
        converged,
        degenerate_assets: Vec::new(),
    })
}

/// Projection onto `{w ∈ Δ_n, μᵀw = target}`: `P_Δ(y − νμ)` with `ν` found by
/// bisection, `μᵀP_Δ(y − νμ)` being non-increasing in `ν`.
fn project_budget_return(y: &[f64], mu: &[f64], target: f64) -> Vec<f64> {
    let at = |nu: f64| {
        let s: Vec<f64> = y.iter().zip(mu).map(|(a, m)| a - nu * m).collect();
        project_simplex(&s)
    };
    let excess = |w: &[f64]| w.iter().zip(mu).map(|(a, m)| a * m).sum::<f64>() - target;
    let (mut lo, mut hi) = (-1.0, 1.0);
    while excess(&at(lo)) < 0.0 && lo > -1e300 {
        lo *= 2.0;
    }
    while excess(&at(hi)) > 0.0 && hi < 1e300 {
        hi *= 2.0;
    }
    let support = |w: &[f64]| w.iter().map(|x| *x > 0.0).collect::<Vec<_>>();
    // P_Δ(y − νμ) is affine in ν while its support is fixed
    for _ in 0..2000 {
        if support(&at(lo)) == support(&at(hi)) {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if excess(&at(mid)) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let (wl, wh) = (at(lo), at(hi));
    let (el, eh) = (excess(&wl), excess(&wh));
    if el > 0.0 && eh < 0.0 {
        let theta = el / (el - eh);
        wl.iter().zip(&wh).map(|(a, b)| a + theta * (b - a)).collect()
    } else if el.abs() <= eh.abs() {
        wl
    } else {
        wh
    }
}

/// Minimum-variance portfolio of returns `−X` on `Δ_n` with expected return
/// `target` (same periodicity as the rows).
pub fn markowitz(x: &SampleMatrix, target_return: f64) -> Result<OptResult> {
    let losses_mean = column_means(x);
    let mu: Vec<f64> = losses_mean.iter().map(|m| -m).collect();
    let cov = covariance(x);
    let n = mu.len();
    let (lo, hi) = mu
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), m| (a.min(*m), b.max(*m)));
    let tol = 1e-12 * lo.abs().max(hi.abs()).max(1e-300);
    if !target_return.is_finite() || target_return < lo - tol || target_return > hi + tol {
        return Err(Error::Infeasible(format!(
            "target return {target_return} outside achievable range [{lo}, {hi}]"
        )));
    }

    // at an end of the range only the extreme assets can be held
    let face: Option<Vec<usize>> = if hi - lo <= tol {
        Some((0..n).collect())
    } else if target_return >= hi - tol {
        Some((0..n).filter(|&i| mu[i] >= hi - tol).collect())
    } else if target_return <= lo + tol {
        Some((0..n).filter(|&i| mu[i] <= lo + tol).collect())
    } else {
        None
    };

    let (w, iterations, converged) = match face {
        Some(idx) => {
            let sub: Vec<Vec<f64>> = idx
                .iter()
                .map(|&i| idx.iter().map(|&k| cov[i][k]).collect())
                .collect();
            let m = idx.len();
            let (ws, it, conv) = fista(&sub, vec![1.0 / m as f64; m], project_simplex);
            let mut w = vec![0.0; n];
            for (k, &i) in idx.iter().enumerate() {
                w[i] = ws[k];
            }
            (w, it, conv)
        }
        None => {
            let start = project_budget_return(&vec![1.0 / n as f64; n], &mu, target_return);
            fista(&cov, start, |y| project_budget_return(y, &mu, target_return))
        }
    };
    let w = to_weights(&w)?;
    let objective = quad(&cov, w.as_slice());
    Ok(OptResult {
        w,
        objective,
        exceedance_count: None,
        iterations,
        converged,
        degenerate_assets: Vec::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uncorrelated_equal_sd_pair_splits_evenly() {
        // exactly uncorrelated, equal variance, zero mean
        let x = SampleMatrix::from_rows(&[[1.0, 1.0], [1.0, -1.0], [-1.0, 1.0], [-1.0, -1.0]]).unwrap();
        let r = min_dr_sd(&x).unwrap();
        assert!((r.w.as_slice()[0] - 0.5).abs() < 1e-9);
        assert!((r.objective - 0.5f64.sqrt()).abs() < 1e-9);
    }

    #[test]
    fn perfectly_correlated_columns_give_ratio_one() {
        let a = [0.3, -1.0, 2.0, 0.5, -0.7];
        let x = SampleMatrix::from_columns(&[a, a]).unwrap();
        let r = min_dr_sd(&x).unwrap();
        assert!((r.objective - 1.0).abs() < 1e-12);
        assert!((r.w.as_slice()[0] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn zero_sd_column_is_degenerate() {
        let x = SampleMatrix::from_columns(&[[1.0, 1.0, 1.0], [0.0, 1.0, 2.0]]).unwrap();
        assert!(matches!(min_dr_sd(&x), Err(Error::Degenerate(_))));
    }

    #[test]
    fn markowitz_symmetric_pair() {
        // returns −X: means 0.1, unit variances, zero correlation
        let x = SampleMatrix::from_rows(&[[-1.1, -1.1], [-1.1, 0.9], [0.9, -1.1], [0.9, 0.9]]).unwrap();
        let r = markowitz(&x, 0.1).unwrap();
        assert!((r.w.as_slice()[0] - 0.5).abs() < 1e-9, "{:?}", r.w);
    }

    #[test]
    fn markowitz_rejects_unreachable_target() {
        let x = SampleMatrix::from_rows(&[[-0.1, 0.2], [0.1, -0.4]]).unwrap();
        assert!(matches!(markowitz(&x, 0.5), Err(Error::Infeasible(_))));
    }

    #[test]
    fn markowitz_at_range_end_holds_best_asset() {
        let x = SampleMatrix::from_rows(&[[-0.1, 0.2], [0.1, -0.4], [-0.3, 0.0]]).unwrap();
        // return means: 0.1 and 0.0667
        let r = markowitz(&x, 0.1).unwrap();
        assert!((r.w.as_slice()[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn budget_return_projection_is_feasible() {
        let mu = [0.01, 0.03, -0.02, 0.05];
        let w = project_budget_return(&[0.9, -0.3, 0.4, 0.2], &mu, 0.02);
        let s: f64 = w.iter().sum();
        let r: f64 = w.iter().zip(&mu).map(|(a, b)| a * b).sum();
        assert!((s - 1.0).abs() < 1e-12 && (r - 0.02).abs() < 1e-12, "{w:?}");
        assert!(w.iter().all(|x| *x >= 0.0));
    }
}
