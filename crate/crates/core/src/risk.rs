//! Empirical and analytic risk measures, and monotone parametric families of them.
//!
//! Levels follow the small-α convention: `VaR_α(X)` is the left `(1−α)`-quantile
//! of the loss `X`, and `ES_α(X)` averages `VaR_β(X)` over `β ∈ (0, α)`.
//! Both are evaluated on the empirical law of the sample, so a sample of
//! length `N` is treated as a discrete distribution with mass `1/N` per value.

use std::cmp::Ordering;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use statrs::function::erf;

use crate::error::{unit_level, Error, Result};

fn check_sample(values: &[f64]) -> Result<()> {
    if values.is_empty() {
        return Err(Error::InvalidInput("empty sample".into()));
    }
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "non-finite value {} at position {i}",
            values[i]
        )));
    }
    Ok(())
}

/// `⌊x⌋`, snapping values within rounding noise of an integer onto it.
///
/// `N·α` is rarely an exact float even when it is an integer in exact
/// arithmetic (e.g. `500 × 0.05`), and the order statistic it selects must not
/// jump by one because of that.
pub(crate) fn snapped_floor(x: f64) -> f64 {
    let r = x.round();
    if (x - r).abs() <= 1e-9 * x.abs().max(1.0) {
        r
    } else {
        x.floor()
    }
}

/// Number of largest observations that determine both `VaR_α` and `ES_α` of a
/// sample of length `n`: `⌊nα⌋ + 1`, capped at `n`.
pub fn tail_len(n: usize, alpha: f64) -> usize {
    let k = snapped_floor(n as f64 * alpha) as usize + 1;
    k.min(n)
}

fn desc(a: &f64, b: &f64) -> Ordering {
    b.partial_cmp(a).unwrap_or(Ordering::Equal)
}

/// The `m` largest values of `values`, sorted in descending order.
pub fn top_desc(values: &[f64], m: usize) -> Vec<f64> {
    let m = m.min(values.len());
    let mut buf = values.to_vec();
    if m == 0 {
        return Vec::new();
    }
    if m < buf.len() {
        buf.select_nth_unstable_by(m - 1, desc);
        buf.truncate(m);
    }
    buf.sort_unstable_by(desc);
    buf
}

/// `VaR_α` from the descending tail of a sample of total length `n`.
///
/// `tail` must hold at least [`tail_len`]`(n, alpha)` of the largest values.
pub fn var_from_tail(tail: &[f64], n: usize, alpha: f64) -> f64 {
    let k = tail_len(n, alpha);
    tail[k - 1]
}

/// `ES_α` from the descending tail of a sample of total length `n`.
///
/// This is the α-tail mean with the boundary observation weighted by the
/// fractional part of `nα`, which coincides with the minimum of the
/// Rockafellar–Uryasev objective on the empirical law.
pub fn es_from_tail(tail: &[f64], n: usize, alpha: f64) -> f64 {
    let x = n as f64 * alpha;
    let whole = snapped_floor(x);
    let k = whole as usize;
    // boundary value plus mean excess; exact when the tail is flat
    let edge = if k < tail.len() { tail[k] } else { tail[k - 1] };
    let excess: f64 = tail[..k].iter().map(|t| t - edge).sum();
    edge + excess / x
}

/// Left-quantile empirical Value-at-Risk: the order statistic `x_(k)` of the
/// ascending sample with `k = ⌈N(1−α)⌉`.
pub fn empirical_var(values: &[f64], alpha: f64) -> Result<f64> {
    unit_level(alpha)?;
    check_sample(values)?;
    let tail = top_desc(values, tail_len(values.len(), alpha));
    Ok(var_from_tail(&tail, values.len(), alpha))
}

/// Empirical Expected Shortfall, equal to `min_t { t + E[(X−t)_+]/α }` on the
/// empirical law.
pub fn empirical_es(values: &[f64], alpha: f64) -> Result<f64> {
    unit_level(alpha)?;
    check_sample(values)?;
    let tail = top_desc(values, tail_len(values.len(), alpha));
    Ok(es_from_tail(&tail, values.len(), alpha))
}

/// How empirical VaR is read off the sample.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VarEstimator {
    /// The definitional infimum: a single order statistic.
    #[default]
    LeftQuantile,
    /// Linear interpolation between the order statistics bracketing
    /// position `(N−1)(1−α)` of the ascending sample. Smooths the step
    /// structure of rolling DQ^VaR series.
    Interpolated,
}

pub fn var_with(values: &[f64], alpha: f64, estimator: VarEstimator) -> Result<f64> {
    match estimator {
        VarEstimator::LeftQuantile => empirical_var(values, alpha),
        VarEstimator::Interpolated => {
            unit_level(alpha)?;
            check_sample(values)?;
            let mut sorted = values.to_vec();
            sorted.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal));
            let pos = (sorted.len() - 1) as f64 * (1.0 - alpha);
            let lo = pos.floor() as usize;
            let hi = (lo + 1).min(sorted.len() - 1);
            let t = pos - lo as f64;
            Ok(sorted[lo] + t * (sorted[hi] - sorted[lo]))
        }
    }
}

/// Population (divide-by-N) standard deviation and variance.
pub fn sd_and_var(values: &[f64]) -> Result<(f64, f64)> {
    check_sample(values)?;
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    Ok((var.sqrt(), var))
}

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

pub fn normal_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * PI).sqrt()
}

/// `P(Z > z)` for standard normal `Z`, accurate deep into the upper tail.
pub fn normal_upper_tail(z: f64) -> f64 {
    0.5 * erf::erfc(z / std::f64::consts::SQRT_2)
}

/// `z` with `P(Z > z) = p`, i.e. the `(1−p)`-quantile of the standard normal.
pub fn normal_upper_quantile(p: f64) -> f64 {
    let mut z = std::f64::consts::SQRT_2 * erf::erfc_inv(2.0 * p);
    // erfc_inv is only good to ~1e-11; polish against erfc
    for _ in 0..2 {
        let d = normal_pdf(z);
        if !(z.is_finite() && d > 0.0) {
            break;
        }
        z += (normal_upper_tail(z) - p) / d;
    }
    z
}

/// A scalar risk measure evaluated on the empirical law of a sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "measure", content = "level", rename_all = "kebab-case")]
pub enum Phi {
    Var(f64),
    Es(f64),
    Sd,
    Variance,
}

impl Phi {
    pub fn eval(&self, values: &[f64]) -> Result<f64> {
        match *self {
            Phi::Var(a) => empirical_var(values, a),
            Phi::Es(a) => empirical_es(values, a),
            Phi::Sd => sd_and_var(values).map(|(sd, _)| sd),
            Phi::Variance => sd_and_var(values).map(|(_, v)| v),
        }
    }

    /// Monotone, constant-additive and positively homogeneous.
    pub fn is_mcp(&self) -> bool {
        matches!(self, Phi::Var(_) | Phi::Es(_))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GaussianBase {
    Var,
    Es,
}

/// A family `(ρ_β)_{β ∈ I}` of risk measures, non-increasing in `β`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum RiskFamily {
    /// `β ↦ VaR_β` on `(0, 1)`.
    Var,
    /// `β ↦ ES_β` on `(0, 1)`.
    Es,
    /// `β ↦ b·E[X] + c·φ(X)/β` on `(0, ∞)`, with `φ` replaced by its positive
    /// part when `positive_part` is set. The default form is `φ₊/β`.
    ScaledPhi {
        phi: Phi,
        positive_part: bool,
        mean_coef: f64,
        scale: f64,
    },
    /// `β ↦ (1−β)·max(X) + β·φ(X)` on `(0, 1]`; decreasing whenever `φ ≤ max`.
    EssSupMix { phi: Phi },
    /// Closed-form VaR or ES of `N(mean, sd²)`; ignores the sample.
    GaussianAnalytic {
        mean: f64,
        sd: f64,
        base: GaussianBase,
    },
}

/// The level domain `(0, upper)` of a family, closed at `upper` when `closed`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevelDomain {
    pub upper: f64,
    pub closed: bool,
}

impl LevelDomain {
    pub fn contains(&self, beta: f64) -> bool {
        beta > 0.0 && (beta < self.upper || (self.closed && beta == self.upper))
    }
}

impl RiskFamily {
    pub fn scaled(phi: Phi) -> Self {
        RiskFamily::ScaledPhi {
            phi,
            positive_part: true,
            mean_coef: 0.0,
            scale: 1.0,
        }
    }

    pub fn domain(&self) -> LevelDomain {
        match self {
            RiskFamily::Var | RiskFamily::Es | RiskFamily::GaussianAnalytic { .. } => LevelDomain {
                upper: 1.0,
                closed: false,
            },
            RiskFamily::ScaledPhi { .. } => LevelDomain {
                upper: f64::INFINITY,
                closed: false,
            },
            RiskFamily::EssSupMix { .. } => LevelDomain {
                upper: 1.0,
                closed: true,
            },
        }
    }

    pub fn eval(&self, beta: f64, values: &[f64]) -> Result<f64> {
        let domain = self.domain();
        if !domain.contains(beta) {
            return Err(Error::Domain {
                value: beta,
                domain: format!(
                    "(0, {}{}",
                    domain.upper,
                    if domain.closed { "]" } else { ")" }
                ),
            });
        }
        match *self {
            RiskFamily::Var => empirical_var(values, beta),
            RiskFamily::Es => empirical_es(values, beta),
            RiskFamily::ScaledPhi {
                phi,
                positive_part,
                mean_coef,
                scale,
            } => {
                let mut p = phi.eval(values)?;
                if positive_part {
                    p = p.max(0.0);
                }
                let base = if mean_coef != 0.0 {
                    mean_coef * mean(values)
                } else {
                    0.0
                };
                Ok(base + scale * p / beta)
            }
            RiskFamily::EssSupMix { phi } => {
                check_sample(values)?;
                let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                Ok((1.0 - beta) * max + beta * phi.eval(values)?)
            }
            RiskFamily::GaussianAnalytic { mean, sd, base } => {
                let z = normal_upper_quantile(beta);
                Ok(match base {
                    GaussianBase::Var => mean + sd * z,
                    GaussianBase::Es => mean + sd * normal_pdf(z) / beta,
                })
            }
        }
    }
}
