//! Minimization of DQ^ES over the simplex.
//!
//! With `z⁽ʲ⁾ = X⁽ʲ⁾ − x̂^ES_α`, `α·DQ^ES(w) = min_{r>0} mean((r wᵀz⁽ʲ⁾ + 1)₊)`,
//! so minimizing over `w` is the convex program
//! `min_{v ≥ 0} f(v) = mean((vᵀz⁽ʲ⁾ + 1)₊)` with `w = v/‖v‖₁`. The iteration
//! runs on the directions `w` and scales each one exactly, which avoids the
//! zig-zag along the ray that plain subgradient steps on `v` suffer from.

use super::simplex::project_simplex;
use super::{to_weights, OptProblem, OptResult};
use crate::error::{Error, Result};
use crate::indices::{dq_es, min_scaled_hinge};
use crate::matrix::Weights;
use crate::risk::empirical_es;

/// Number of step-size restarts sharing the iteration budget.
const EPOCHS: usize = 4;

struct Hinge {
    rows: Vec<Vec<f64>>,
}

/// `φ(w) = min_{r>0} mean((r wᵀz + 1)₊)` and a subgradient of `f` at the
/// minimizing `v = r*w` with no component along `w`.
enum Probe {
    /// No scenario exceeds along `w`: `φ(w) = 0`, the global minimum.
    Zero,
    At { phi: f64, g: Vec<f64> },
}

impl Hinge {
    fn probe(&self, w: &[f64]) -> Probe {
        let d: Vec<f64> = self.rows.iter().map(|z| dot(z, w)).collect();
        let Some((phi, r)) = min_scaled_hinge(&d) else {
            return Probe::Zero;
        };
        let n = w.len();
        let mut active = vec![0.0; n];
        let mut kink = vec![0.0; n];
        for (z, dj) in self.rows.iter().zip(&d) {
            let h = r * dj + 1.0;
            let target = if h.abs() <= 1e-12 {
                &mut kink
            } else if h > 0.0 {
                &mut active
            } else {
                continue;
            };
            for (t, zi) in target.iter_mut().zip(z) {
                *t += zi;
            }
        }
        // at the optimal scale, 0 lies between the one-sided slopes along w:
        // blend in the kink rows to cancel the radial component
        let (a, b) = (dot(&active, w), dot(&kink, w));
        let theta = if b != 0.0 { (-a / b).clamp(0.0, 1.0) } else { 0.0 };
        let m = self.rows.len() as f64;
        let g = active
            .iter()
            .zip(&kink)
            .map(|(x, y)| (x + theta * y) / m)
            .collect();
        Probe::At { phi, g }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Minimizes DQ^ES_α over `Δ_n` by projected subgradient steps on the
/// simplex.
///
/// Each iterate `w` is scaled optimally, `v = r*w`, and the step follows a
/// subgradient of the hinge objective at `v` with no radial component, which
/// separates `w` from every better direction. Steps are normalized with
/// length `c/√t`, `c = 1/2`, restarted `EPOCHS` times from the best iterate
/// with `c` shrunk tenfold; the best iterate is returned and its objective is
/// DQ^ES re-evaluated at the returned weights. Side constraints are not
/// supported by this objective.
pub fn min_dq_es(p: &OptProblem) -> Result<OptResult> {
    p.validate()?;
    if !p.constraints.is_empty() {
        return Err(Error::InvalidInput(
            "side constraints are only supported for the DQ^VaR objective".into(),
        ));
    }
    let x = &p.samples;
    let n = x.cols();
    let es: Vec<f64> = x
        .columns()
        .iter()
        .map(|c| empirical_es(c, p.alpha))
        .collect::<Result<_>>()?;
    let degenerate_assets: Vec<usize> = (0..n)
        .filter(|&i| !x.row_iter().any(|r| r[i] > es[i]))
        .collect();
    if !degenerate_assets.is_empty() {
        log::debug!("assets {degenerate_assets:?} never exceed their ES");
    }
    let finish = |w: Weights, iterations: usize, converged: bool| -> Result<OptResult> {
        let objective = dq_es(x, p.alpha, Some(&w))?;
        Ok(OptResult {
            w,
            objective,
            exceedance_count: None,
            iterations,
            converged,
            degenerate_assets: degenerate_assets.clone(),
        })
    };

    let h = Hinge {
        rows: x
            .row_iter()
            .map(|r| r.iter().zip(&es).map(|(a, b)| a - b).collect())
            .collect(),
    };

    let mut starts = vec![p.w0.clone()];
    for i in 0..n {
        let mut e = vec![0.0; n];
        e[i] = 1.0;
        starts.push(Weights::new(e)?);
    }
    let mut best: Option<(f64, Vec<f64>, Vec<f64>)> = None;
    for w in starts {
        match h.probe(w.as_slice()) {
            Probe::Zero => return finish(w, 0, true),
            Probe::At { phi, g } => {
                if best.as_ref().is_none_or(|(b, _, _)| phi < *b) {
                    best = Some((phi, w.into_vec(), g));
                }
            }
        }
    }
    let (mut best_phi, mut best_w, mut best_g) = best.expect("at least one start");

    let per_epoch = (p.max_iter / EPOCHS).max(1);
    let mut c = 0.5;
    let mut iterations = 0;
    let mut last_gain = f64::INFINITY;
    'epochs: for _ in 0..EPOCHS {
        let start_phi = best_phi;
        let (mut w, mut g) = (best_w.clone(), best_g.clone());
        for t in 1..=per_epoch {
            // tangential part; the simplex projection discards the rest
            let mean = g.iter().sum::<f64>() / n as f64;
            let norm = g.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>().sqrt();
            if norm == 0.0 {
                last_gain = 0.0;
                break 'epochs;
            }
            let step = c / (t as f64).sqrt() / norm;
            let trial: Vec<f64> = w.iter().zip(&g).map(|(a, b)| a - step * b).collect();
            w = project_simplex(&trial);
            iterations += 1;
            match h.probe(&w) {
                Probe::Zero => return finish(to_weights(&w)?, iterations, true),
                Probe::At { phi, g: next } => {
                    if phi < best_phi {
                        best_phi = phi;
                        best_w.copy_from_slice(&w);
                        best_g.copy_from_slice(&next);
                    }
                    g = next;
                }
            }
        }
        last_gain = start_phi - best_phi;
        c *= 0.1;
    }

    let converged = last_gain <= 1e-9 * best_phi.max(1e-12);
    finish(to_weights(&best_w)?, iterations, converged)
}
