//! Diversification quotients (DQ), ratios (DR) and benefits (DB) of a joint
//! loss sample.
//!
//! For a family `ρ = (ρ_β)` non-increasing in `β`, the quotient at level `α` is
//! `α*/α` with
//!
//! ```text
//! α* = inf { β ∈ I : ρ_β(X₁ + … + Xₙ) ≤ ρ_α(X₁) + … + ρ_α(Xₙ) }
//! ```
//!
//! and `inf ∅` taken as the upper end of `I`. [`dq_general`] evaluates this by
//! monotone bisection for any [`RiskFamily`]; [`dq_var`] and [`dq_es`] use the
//! closed forms available for VaR and ES.

use serde::{Deserialize, Serialize};

use crate::error::{unit_level, Error, Result};
use crate::matrix::{SampleMatrix, Weights};
use crate::risk::{self, Phi, RiskFamily};

/// Applies optional weights, borrowing when there are none.
fn weighted<'a>(
    x: &'a SampleMatrix,
    w: Option<&Weights>,
) -> Result<std::borrow::Cow<'a, SampleMatrix>> {
    Ok(match w {
        Some(w) => std::borrow::Cow::Owned(x.weighted(w)?),
        None => std::borrow::Cow::Borrowed(x),
    })
}

/// Fraction of `sums` strictly above `threshold`.
pub fn exceedance_fraction(sums: &[f64], threshold: f64) -> f64 {
    let count = sums.iter().filter(|&&s| s > threshold).count();
    count as f64 / sums.len() as f64
}

/// DQ based on VaR: `P(Σ wᵢXᵢ > Σ VaR_α(wᵢXᵢ)) / α` on the empirical law.
///
/// The result lies on the grid `k/(Nα)`.
pub fn dq_var(x: &SampleMatrix, alpha: f64, w: Option<&Weights>) -> Result<f64> {
    unit_level(alpha)?;
    let x = weighted(x, w)?;
    let threshold = x
        .columns()
        .iter()
        .map(|c| risk::empirical_var(c, alpha))
        .sum::<Result<f64>>()?;
    Ok(exceedance_fraction(&x.row_sums(), threshold) / alpha)
}

/// `inf_{r>0} mean((r·dⱼ + 1)₊)` and a minimizing `r`.
///
/// The objective is convex and piecewise linear in `r` with kinks at
/// `r = −1/dⱼ` for the negative `dⱼ`, so the minimum is found exactly by
/// sweeping those kinks in increasing order. Returns `None` when no `dⱼ` is
/// positive (the infimum is then `0`, approached as `r → ∞`). If the
/// infimum is the limit `r → 0` the reported `r` is `0`.
pub fn min_scaled_hinge(d: &[f64]) -> Option<(f64, f64)> {
    if !d.iter().any(|&v| v > 0.0) {
        return None;
    }
    let n = d.len() as f64;
    let mut neg: Vec<f64> = d.iter().copied().filter(|&v| v < 0.0).collect();
    // kinks in increasing r = 1/|d|, i.e. decreasing |d|
    neg.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    let mut active = n;
    let mut slope: f64 = d.iter().sum();
    let mut best_val = 1.0;
    let mut best_r = 0.0;
    for &dk in &neg {
        let r = -1.0 / dk;
        let val = (active + r * slope) / n;
        if val < best_val {
            best_val = val;
            best_r = r;
        }
        active -= 1.0;
        slope -= dk;
        if slope >= 0.0 {
            break;
        }
    }
    if best_r > 0.0 {
        // re-evaluate directly; the running slope accumulates rounding error
        best_val = d.iter().map(|&v| (best_r * v + 1.0).max(0.0)).sum::<f64>() / n;
    }
    Some((best_val, best_r))
}

/// DQ based on ES via the buffered-exceedance form:
/// `min_{r>0} E[(r(S − Σ ES_α(wᵢXᵢ)) + 1)₊] / α`, and `0` when no scenario sum
/// exceeds the pooled ES. Subadditivity of ES bounds the value by 1; only
/// rounding can push the computed minimum above it, so it is capped there.
pub fn dq_es(x: &SampleMatrix, alpha: f64, w: Option<&Weights>) -> Result<f64> {
    unit_level(alpha)?;
    let x = weighted(x, w)?;
    let pooled = x
        .columns()
        .iter()
        .map(|c| risk::empirical_es(c, alpha))
        .sum::<Result<f64>>()?;
    let d: Vec<f64> = x.row_sums().iter().map(|s| s - pooled).collect();
    Ok(match min_scaled_hinge(&d) {
        Some((v, _)) => (v / alpha).min(1.0),
        None => 0.0,
    })
}

/// Result of the general inversion: the quotient and the level `α*`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DqOutcome {
    pub value: f64,
    pub alpha_star: f64,
}

const LOWEST_LEVEL: f64 = 1e-300;
const UNBOUNDED_CAP: f64 = 1e15;

/// DQ for an arbitrary non-increasing family by bisection on the level.
pub fn dq_general(family: &RiskFamily, x: &SampleMatrix, alpha: f64) -> Result<DqOutcome> {
    let domain = family.domain();
    if !domain.contains(alpha) {
        // delegate the error message to the family
        family.eval(alpha, &[0.0])?;
    }
    let target = x
        .columns()
        .iter()
        .map(|c| family.eval(alpha, c))
        .sum::<Result<f64>>()?;
    let sums = x.row_sums();
    let f = |beta: f64| -> Result<f64> {
        let v = family.eval(beta, &sums)?;
        if v.is_nan() {
            return Err(Error::InvalidInput(format!("family value NaN at level {beta}")));
        }
        Ok(v)
    };
    let outcome = |alpha_star: f64| DqOutcome {
        value: alpha_star / alpha,
        alpha_star,
    };

    let lo = LOWEST_LEVEL.min(alpha);
    let f_lo = f(lo)?;
    let mut hi = if domain.upper.is_finite() {
        if domain.closed {
            domain.upper
        } else {
            next_below(domain.upper)
        }
    } else {
        alpha
    };
    let mut f_hi = f(hi)?;
    check_order(lo, hi, f_lo, f_hi)?;
    if f_lo <= target {
        return Ok(outcome(0.0));
    }
    if !domain.upper.is_finite() {
        while f_hi > target && hi < UNBOUNDED_CAP {
            hi = (hi * 2.0).min(UNBOUNDED_CAP);
            f_hi = f(hi)?;
            check_order(lo, hi, f_lo, f_hi)?;
        }
    }
    if f_hi > target {
        return Ok(outcome(domain.upper));
    }

    let (mut lo, mut f_lo) = (lo, f_lo);
    for _ in 0..5000 {
        let mid = if hi / lo > 4.0 {
            (lo.ln() + 0.5 * (hi.ln() - lo.ln())).exp()
        } else {
            lo + 0.5 * (hi - lo)
        };
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = f(mid)?;
        check_order(lo, mid, f_lo, fm)?;
        check_order(mid, hi, fm, f_hi)?;
        if fm <= target {
            hi = mid;
            f_hi = fm;
        } else {
            lo = mid;
            f_lo = fm;
        }
    }
    Ok(outcome(hi))
}

fn next_below(x: f64) -> f64 {
    f64::from_bits(x.to_bits() - 1)
}

/// Errors if a family increases from `lo` to `hi` beyond rounding noise.
fn check_order(lo: f64, hi: f64, f_lo: f64, f_hi: f64) -> Result<()> {
    let tol = 1e-12 * f_lo.abs().max(f_hi.abs()).max(1e-300);
    if f_hi > f_lo + tol {
        return Err(Error::NonMonotone {
            lo,
            hi,
            upper: f_hi,
            lower: f_lo,
        });
    }
    Ok(())
}

/// `a / b` with `0/0 = 0` and `x/0 = ±∞`.
fn ratio(a: f64, b: f64) -> f64 {
    if b == 0.0 {
        if a == 0.0 {
            0.0
        } else {
            a.signum() * f64::INFINITY
        }
    } else {
        a / b
    }
}

/// DR: `φ(Σ wᵢXᵢ) / Σ φ(wᵢXᵢ)`. May be negative for VaR and ES.
pub fn dr(phi: Phi, x: &SampleMatrix, w: Option<&Weights>) -> Result<f64> {
    let x = weighted(x, w)?;
    let num = phi.eval(&x.row_sums())?;
    let den = x
        .columns()
        .iter()
        .map(|c| phi.eval(c))
        .sum::<Result<f64>>()?;
    Ok(ratio(num, den))
}

/// DB: `Σ φ(wᵢXᵢ) − φ(Σ wᵢXᵢ)`.
pub fn db(phi: Phi, x: &SampleMatrix, w: Option<&Weights>) -> Result<f64> {
    let x = weighted(x, w)?;
    let pooled = phi.eval(&x.row_sums())?;
    let standalone = x
        .columns()
        .iter()
        .map(|c| phi.eval(c))
        .sum::<Result<f64>>()?;
    Ok(standalone - pooled)
}

/// Closed-form quotient at level 1 for `ρ_β = (1−β)·max + β·φ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EssSupMixDq {
    pub value: f64,
    /// Set when the denominator `max S − φ(S)` vanished with a positive
    /// numerator, so `value` is `+∞`.
    pub degenerate: bool,
}

pub fn dq_esssup_mix(phi: Phi, x: &SampleMatrix) -> Result<EssSupMixDq> {
    let sums = x.row_sums();
    let max = sums.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let standalone = x
        .columns()
        .iter()
        .map(|c| phi.eval(c))
        .sum::<Result<f64>>()?;
    let num = max - standalone;
    if num <= 0.0 {
        return Ok(EssSupMixDq {
            value: 0.0,
            degenerate: false,
        });
    }
    let den = max - phi.eval(&sums)?;
    if den <= 0.0 {
        return Ok(EssSupMixDq {
            value: f64::INFINITY,
            degenerate: true,
        });
    }
    Ok(EssSupMixDq {
        value: num / den,
        degenerate: false,
    })
}

/// A named diversification index, as used by rolling computations and the CLI.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "index", content = "alpha", rename_all = "kebab-case")]
pub enum IndexSpec {
    DqVar(f64),
    DqEs(f64),
    DrVar(f64),
    DrEs(f64),
    DrSd,
    DrVariance,
}

impl IndexSpec {
    pub fn eval(&self, x: &SampleMatrix) -> Result<f64> {
        match *self {
            IndexSpec::DqVar(a) => dq_var(x, a, None),
            IndexSpec::DqEs(a) => dq_es(x, a, None),
            IndexSpec::DrVar(a) => dr(Phi::Var(a), x, None),
            IndexSpec::DrEs(a) => dr(Phi::Es(a), x, None),
            IndexSpec::DrSd => dr(Phi::Sd, x, None),
            IndexSpec::DrVariance => dr(Phi::Variance, x, None),
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            IndexSpec::DqVar(_) => "dq_var",
            IndexSpec::DqEs(_) => "dq_es",
            IndexSpec::DrVar(_) => "dr_var",
            IndexSpec::DrEs(_) => "dr_es",
            IndexSpec::DrSd => "dr_sd",
            IndexSpec::DrVariance => "dr_variance",
        }
    }
}
