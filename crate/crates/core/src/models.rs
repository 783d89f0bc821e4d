//! Samplers for the benchmark joint loss models and streamed Monte Carlo
//! evaluation of DQ/DR on them.
//!
//! Three models share the identity correlation matrix:
//!
//! * `Gaussian`: `X = μ + L·Z` with `L Lᵀ = Σ`;
//! * `IidT`: `Yᵢ = ξᵢ·Zᵢ` with independent `ξᵢ`;
//! * `CommonShockT`: `Y′ᵢ = ξ·Zᵢ` with a single `ξ` per scenario;
//!
//! where `ξ = √(ν/χ²_ν)`, so `ξ²` is inverse-gamma and each margin is `t(ν)`.
//!
//! Rows are generated in fixed-size blocks. Block `b` draws from ChaCha8 stream
//! `b` under the model's seed, so any schedule of blocks over threads yields
//! the same numbers.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{unit_level, Error, Result};
use crate::indices::{exceedance_fraction, min_scaled_hinge};
use crate::matrix::SampleMatrix;
use crate::risk::{
    es_from_tail, normal_pdf, normal_upper_quantile, normal_upper_tail, tail_len, top_desc,
    var_from_tail, GaussianBase,
};

pub const BLOCK_ROWS: usize = 100_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "kebab-case")]
pub enum ModelKind {
    Gaussian { mean: Vec<f64>, cov: Vec<Vec<f64>> },
    IidT { nu: f64, n: usize },
    CommonShockT { nu: f64, n: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub kind: ModelKind,
    pub seed: u64,
}

impl ModelSpec {
    pub fn standard_normal(n: usize, seed: u64) -> Self {
        let cov = (0..n)
            .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect();
        Self {
            kind: ModelKind::Gaussian {
                mean: vec![0.0; n],
                cov,
            },
            seed,
        }
    }

    pub fn iid_t(nu: f64, n: usize, seed: u64) -> Self {
        Self {
            kind: ModelKind::IidT { nu, n },
            seed,
        }
    }

    pub fn common_shock_t(nu: f64, n: usize, seed: u64) -> Self {
        Self {
            kind: ModelKind::CommonShockT { nu, n },
            seed,
        }
    }

    pub fn dim(&self) -> usize {
        match &self.kind {
            ModelKind::Gaussian { mean, .. } => mean.len(),
            ModelKind::IidT { n, .. } | ModelKind::CommonShockT { n, .. } => *n,
        }
    }

    fn sampler(&self) -> Result<Sampler> {
        match &self.kind {
            ModelKind::Gaussian { mean, cov } => {
                if mean.is_empty() {
                    return Err(Error::InvalidInput("model dimension must be ≥ 1".into()));
                }
                let factor = cholesky_psd(cov)?;
                if factor.len() != mean.len() {
                    return Err(Error::InvalidInput(format!(
                        "mean has {} entries, covariance is {}x{}",
                        mean.len(),
                        factor.len(),
                        factor.len()
                    )));
                }
                Ok(Sampler::Gaussian {
                    mean: mean.clone(),
                    factor,
                })
            }
            ModelKind::IidT { nu, n } | ModelKind::CommonShockT { nu, n } => {
                if *n == 0 {
                    return Err(Error::InvalidInput("model dimension must be ≥ 1".into()));
                }
                let chi2 = ChiSquared::new(*nu).map_err(|_| {
                    Error::InvalidInput(format!("degrees of freedom must be > 0, got {nu}"))
                })?;
                let common = matches!(self.kind, ModelKind::CommonShockT { .. });
                Ok(Sampler::T {
                    nu: *nu,
                    n: *n,
                    chi2,
                    common,
                })
            }
        }
    }
}

/// Lower-triangular `L` with `L Lᵀ = cov`, tolerating a singular (positive
/// semidefinite) covariance by zeroing the dependent columns.
pub fn cholesky_psd(cov: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    let n = cov.len();
    if cov.iter().any(|r| r.len() != n) {
        return Err(Error::Decomposition("covariance is not square".into()));
    }
    let scale = (0..n).map(|i| cov[i][i].abs()).fold(0.0, f64::max).max(1e-300);
    let tol = 1e-12 * scale;
    for i in 0..n {
        for j in 0..i {
            if (cov[i][j] - cov[j][i]).abs() > tol {
                return Err(Error::Decomposition(format!(
                    "covariance is not symmetric at ({i}, {j})"
                )));
            }
        }
    }
    let mut l = vec![vec![0.0; n]; n];
    for j in 0..n {
        let d = cov[j][j] - (0..j).map(|k| l[j][k] * l[j][k]).sum::<f64>();
        if d < -tol {
            return Err(Error::Decomposition(format!(
                "covariance is not positive semidefinite (pivot {d} at {j})"
            )));
        }
        if d <= tol {
            for i in j + 1..n {
                let r = cov[i][j] - (0..j).map(|k| l[i][k] * l[j][k]).sum::<f64>();
                if r.abs() > 1e-9 * scale.sqrt() * scale.sqrt() {
                    return Err(Error::Decomposition(format!(
                        "covariance is not positive semidefinite (column {j})"
                    )));
                }
            }
            continue;
        }
        let pivot = d.sqrt();
        l[j][j] = pivot;
        for i in j + 1..n {
            let r = cov[i][j] - (0..j).map(|k| l[i][k] * l[j][k]).sum::<f64>();
            l[i][j] = r / pivot;
        }
    }
    Ok(l)
}

enum Sampler {
    Gaussian {
        mean: Vec<f64>,
        factor: Vec<Vec<f64>>,
    },
    T {
        nu: f64,
        n: usize,
        chi2: ChiSquared<f64>,
        common: bool,
    },
}

impl Sampler {
    fn dim(&self) -> usize {
        match self {
            Sampler::Gaussian { mean, .. } => mean.len(),
            Sampler::T { n, .. } => *n,
        }
    }

    /// Fills `out` (row-major, `out.len() / dim` rows) from block `block`.
    fn fill_block(&self, seed: u64, block: u64, out: &mut [f64]) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(block);
        let n = self.dim();
        match self {
            Sampler::Gaussian { mean, factor } => {
                let mut z = vec![0.0; n];
                for row in out.chunks_exact_mut(n) {
                    for zi in z.iter_mut() {
                        *zi = rng.sample(StandardNormal);
                    }
                    for (i, x) in row.iter_mut().enumerate() {
                        let li = &factor[i];
                        *x = mean[i] + (0..=i).map(|k| li[k] * z[k]).sum::<f64>();
                    }
                }
            }
            Sampler::T {
                nu, chi2, common, ..
            } => {
                for row in out.chunks_exact_mut(n) {
                    if *common {
                        let xi = (nu / chi2.sample(&mut rng)).sqrt();
                        for x in row.iter_mut() {
                            let z: f64 = rng.sample(StandardNormal);
                            *x = xi * z;
                        }
                    } else {
                        for x in row.iter_mut() {
                            let z: f64 = rng.sample(StandardNormal);
                            let xi = (nu / chi2.sample(&mut rng)).sqrt();
                            *x = xi * z;
                        }
                    }
                }
            }
        }
    }
}

/// Draws `rows` scenarios from the model. Deterministic given the seed.
pub fn sample_model(spec: &ModelSpec, rows: usize) -> Result<SampleMatrix> {
    if rows == 0 {
        return Err(Error::InvalidInput("sample size must be ≥ 1".into()));
    }
    let sampler = spec.sampler()?;
    let n = sampler.dim();
    let mut data = vec![0.0; rows * n];
    data.par_chunks_mut(BLOCK_ROWS * n)
        .enumerate()
        .for_each(|(b, chunk)| sampler.fill_block(spec.seed, b as u64, chunk));
    SampleMatrix::from_row_major(rows, n, data)
}

/// Count, mean and centred sum of squares, mergeable across blocks.
#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    count: f64,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn of(values: impl Iterator<Item = f64> + Clone) -> Self {
        let (count, sum) = values.clone().fold((0.0, 0.0), |(c, s), v| (c + 1.0, s + v));
        if count == 0.0 {
            return Self::default();
        }
        let mean = sum / count;
        let m2 = values.map(|v| (v - mean) * (v - mean)).sum();
        Self { count, mean, m2 }
    }

    fn merge(&mut self, other: &Moments) {
        if other.count == 0.0 {
            return;
        }
        if self.count == 0.0 {
            *self = *other;
            return;
        }
        let count = self.count + other.count;
        let delta = other.mean - self.mean;
        self.mean += delta * other.count / count;
        self.m2 += other.m2 + delta * delta * self.count * other.count / count;
        self.count = count;
    }

    /// Population variance.
    fn variance(&self) -> f64 {
        self.m2 / self.count
    }
}

/// DQ and DR values at one level from a Monte Carlo run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McIndices {
    pub alpha: f64,
    pub dq_var: f64,
    pub dq_es: f64,
    pub dr_var: f64,
    pub dr_es: f64,
    pub dr_sd: f64,
    pub dr_variance: f64,
}

struct BlockSummary {
    tails: Vec<Vec<f64>>,
    moments: Vec<Moments>,
    sums: Vec<f64>,
}

/// Streams `rows` scenarios of the model and evaluates DQ^VaR, DQ^ES and the
/// DRs at each level in `alphas`, exactly as the empirical estimators would on
/// the full sample, while holding only the scenario sums and the upper tail
/// of each column in memory.
pub fn monte_carlo_indices(spec: &ModelSpec, rows: usize, alphas: &[f64]) -> Result<Vec<McIndices>> {
    if rows == 0 {
        return Err(Error::InvalidInput("sample size must be ≥ 1".into()));
    }
    for &a in alphas {
        unit_level(a)?;
    }
    let sampler = spec.sampler()?;
    let n = sampler.dim();
    let keep = alphas
        .iter()
        .map(|&a| tail_len(rows, a))
        .max()
        .unwrap_or(1);

    let n_blocks = rows.div_ceil(BLOCK_ROWS);
    let wave = (rayon::current_num_threads() * 2).max(1);
    let mut tails: Vec<Vec<f64>> = vec![Vec::new(); n];
    let mut cutoffs = vec![f64::NEG_INFINITY; n];
    let mut moments = vec![Moments::default(); n];
    let mut sums: Vec<f64> = Vec::with_capacity(rows);

    for first in (0..n_blocks).step_by(wave) {
        let last = (first + wave).min(n_blocks);
        let summaries: Vec<BlockSummary> = (first..last)
            .into_par_iter()
            .map(|b| {
                let start = b * BLOCK_ROWS;
                let len = BLOCK_ROWS.min(rows - start);
                let mut buf = vec![0.0; len * n];
                sampler.fill_block(spec.seed, b as u64, &mut buf);
                let tails = (0..n)
                    .map(|j| {
                        buf.iter()
                            .skip(j)
                            .step_by(n)
                            .copied()
                            .filter(|&v| v > cutoffs[j])
                            .collect()
                    })
                    .collect();
                let moments = (0..n)
                    .map(|j| Moments::of(buf.iter().skip(j).step_by(n).copied()))
                    .collect();
                let sums = buf.chunks_exact(n).map(|r| r.iter().sum()).collect();
                BlockSummary {
                    tails,
                    moments,
                    sums,
                }
            })
            .collect();
        for s in summaries {
            sums.extend_from_slice(&s.sums);
            for j in 0..n {
                moments[j].merge(&s.moments[j]);
                tails[j].extend_from_slice(&s.tails[j]);
                if tails[j].len() > 2 * keep {
                    let t = top_desc(&tails[j], keep);
                    cutoffs[j] = t[keep - 1];
                    tails[j] = t;
                }
            }
        }
    }

    let tails: Vec<Vec<f64>> = tails.iter().map(|t| top_desc(t, keep)).collect();
    let sum_tail = top_desc(&sums, keep);
    let sum_moments = Moments::of(sums.iter().copied());
    let var_sum: f64 = moments.iter().map(Moments::variance).sum();
    let sd_sum: f64 = moments.iter().map(|m| m.variance().sqrt()).sum();

    let mut out = Vec::with_capacity(alphas.len());
    for &alpha in alphas {
        let var_total: f64 = tails.iter().map(|t| var_from_tail(t, rows, alpha)).sum();
        let es_total: f64 = tails.iter().map(|t| es_from_tail(t, rows, alpha)).sum();
        let d: Vec<f64> = sums.iter().map(|s| s - es_total).collect();
        let dq_es = match min_scaled_hinge(&d) {
            Some((v, _)) => v / alpha,
            None => 0.0,
        };
        out.push(McIndices {
            alpha,
            dq_var: exceedance_fraction(&sums, var_total) / alpha,
            dq_es,
            dr_var: var_from_tail(&sum_tail, rows, alpha) / var_total,
            dr_es: es_from_tail(&sum_tail, rows, alpha) / es_total,
            dr_sd: sum_moments.variance().sqrt() / sd_sum,
            dr_variance: sum_moments.variance() / var_sum,
        });
    }
    Ok(out)
}

/// DQ of the iid standard normal model `N(0, Iₙ)`, evaluated analytically.
///
/// For VaR, `α* = P(√n·Z > n·z_α)`; for ES, `α*` solves
/// `√n·φ(z_β)/β = n·φ(z_α)/α`, found by bisection on `ln β`.
pub fn gaussian_dq_oracle(n: usize, alpha: f64, base: GaussianBase) -> Result<f64> {
    unit_level(alpha)?;
    if n == 0 {
        return Err(Error::InvalidInput("dimension must be ≥ 1".into()));
    }
    let root_n = (n as f64).sqrt();
    let z_alpha = normal_upper_quantile(alpha);
    match base {
        GaussianBase::Var => Ok(normal_upper_tail(root_n * z_alpha) / alpha),
        GaussianBase::Es => {
            let log_target = (n as f64).ln() + normal_pdf(z_alpha).ln() - alpha.ln();
            // ln(√n·φ(z_β)/β), decreasing in β
            let g = |log_beta: f64| {
                let z = normal_upper_quantile(log_beta.exp());
                root_n.ln() - 0.5 * z * z - 0.5 * (2.0 * std::f64::consts::PI).ln() - log_beta
            };
            let (mut lo, mut hi) = ((1e-300f64).ln(), alpha.ln());
            if g(hi) > log_target {
                return Ok(1.0);
            }
            for _ in 0..400 {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                if g(mid) > log_target {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            Ok(hi.exp() / alpha)
        }
    }
}

/// One row of the model comparison table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub model: String,
    pub dq_var: f64,
    pub dq_es: f64,
    pub dr_var: f64,
    pub dr_es: f64,
    pub dr_sd: f64,
    pub dr_variance: f64,
}

impl TableRow {
    fn from_mc(model: String, mc: &McIndices) -> Self {
        Self {
            model,
            dq_var: mc.dq_var,
            dq_es: mc.dq_es,
            dr_var: mc.dr_var,
            dr_es: mc.dr_es,
            dr_sd: mc.dr_sd,
            dr_variance: mc.dr_variance,
        }
    }
}

/// The normal / iid-t / common-shock-t comparison at one `(α, n, ν)`.
///
/// The normal row takes its DQs from [`gaussian_dq_oracle`], since its
/// exceedance probabilities are far too small to estimate by simulation; all
/// other entries are Monte Carlo estimates from `rows` scenarios. The three
/// models use seeds `seed`, `seed + 1`, `seed + 2`.
pub fn reproduce_table(alpha: f64, n: usize, nu: f64, rows: usize, seed: u64) -> Result<Vec<TableRow>> {
    unit_level(alpha)?;
    let normal = monte_carlo_indices(&ModelSpec::standard_normal(n, seed), rows, &[alpha])?[0];
    let mut normal_row = TableRow::from_mc(format!("N(0,I_{n})"), &normal);
    normal_row.dq_var = gaussian_dq_oracle(n, alpha, GaussianBase::Var)?;
    normal_row.dq_es = gaussian_dq_oracle(n, alpha, GaussianBase::Es)?;

    let iid = monte_carlo_indices(&ModelSpec::iid_t(nu, n, seed.wrapping_add(1)), rows, &[alpha])?[0];
    let shock = monte_carlo_indices(
        &ModelSpec::common_shock_t(nu, n, seed.wrapping_add(2)),
        rows,
        &[alpha],
    )?[0];
    Ok(vec![
        normal_row,
        TableRow::from_mc(format!("it_{n}({nu})"), &iid),
        TableRow::from_mc(format!("t({nu},0,I_{n})"), &shock),
    ])
}

/// Indices of the iid-t and common-shock-t models across levels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatioPoint {
    pub alpha: f64,
    pub iid: McIndices,
    pub common_shock: McIndices,
}

impl RatioPoint {
    /// `DQ^VaR(Y) / DQ^VaR(Y′)`: below one when the common shock is judged
    /// less diversified.
    pub fn dq_var_ratio(&self) -> f64 {
        self.iid.dq_var / self.common_shock.dq_var
    }

    pub fn dq_es_ratio(&self) -> f64 {
        self.iid.dq_es / self.common_shock.dq_es
    }

    pub fn dr_var_ratio(&self) -> f64 {
        self.iid.dr_var / self.common_shock.dr_var
    }
}

/// DQ/DR of `it_n(ν)` against `t(ν, 0, Iₙ)` over a grid of levels, each model
/// simulated once.
pub fn ratio_curve(alphas: &[f64], n: usize, nu: f64, rows: usize, seed: u64) -> Result<Vec<RatioPoint>> {
    let iid = monte_carlo_indices(&ModelSpec::iid_t(nu, n, seed), rows, alphas)?;
    let shock = monte_carlo_indices(&ModelSpec::common_shock_t(nu, n, seed.wrapping_add(1)), rows, alphas)?;
    Ok(iid
        .into_iter()
        .zip(shock)
        .map(|(iid, common_shock)| RatioPoint {
            alpha: iid.alpha,
            iid,
            common_shock,
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::indices::{dq_es, dq_var, dr};
    use crate::risk::Phi;

    #[test]
    fn sampling_is_deterministic_per_seed() {
        let spec = ModelSpec::standard_normal(2, 11);
        let a = sample_model(&spec, 5).unwrap();
        let b = sample_model(&spec, 5).unwrap();
        assert_eq!(a, b);
        assert_eq!((a.rows(), a.cols()), (5, 2));
        let c = sample_model(&ModelSpec::standard_normal(2, 12), 5).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn thread_count_does_not_change_samples() {
        let spec = ModelSpec::common_shock_t(3.0, 3, 5);
        let rows = 3 * BLOCK_ROWS + 17;
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let four = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
        let a = one.install(|| sample_model(&spec, rows).unwrap());
        let b = four.install(|| sample_model(&spec, rows).unwrap());
        assert_eq!(a, b);
        let ma = one.install(|| monte_carlo_indices(&spec, rows, &[0.05]).unwrap());
        let mb = four.install(|| monte_carlo_indices(&spec, rows, &[0.05]).unwrap());
        assert_eq!(ma, mb);
    }

    #[test]
    fn streamed_indices_match_in_memory_estimators() {
        let spec = ModelSpec::iid_t(4.0, 3, 9);
        let rows = 2 * BLOCK_ROWS + 1234;
        let x = sample_model(&spec, rows).unwrap();
        let alphas = [0.05, 0.1];
        let mc = monte_carlo_indices(&spec, rows, &alphas).unwrap();
        for (a, got) in alphas.iter().zip(&mc) {
            assert_eq!(got.dq_var, dq_var(&x, *a, None).unwrap());
            let es = dq_es(&x, *a, None).unwrap();
            assert!((got.dq_es - es).abs() < 1e-12, "{} vs {es}", got.dq_es);
            let dv = dr(Phi::Var(*a), &x, None).unwrap();
            assert!((got.dr_var - dv).abs() < 1e-12);
            let de = dr(Phi::Es(*a), &x, None).unwrap();
            assert!((got.dr_es - de).abs() < 1e-12);
            let ds = dr(Phi::Sd, &x, None).unwrap();
            assert!((got.dr_sd - ds).abs() < 1e-10);
        }
    }

    #[test]
    fn iid_t_margin_has_t_variance() {
        let x = sample_model(&ModelSpec::iid_t(3.0, 1, 2024), 1_000_000).unwrap();
        let (sd, _) = crate::risk::sd_and_var(&x.column(0)).unwrap();
        assert!((sd / 3f64.sqrt() - 1.0).abs() < 0.03, "sd {sd}");
    }

    #[test]
    fn common_shock_components_are_uncorrelated() {
        let x = sample_model(&ModelSpec::common_shock_t(3.0, 2, 77), 1_000_000).unwrap();
        let (a, b) = (x.column(0), x.column(1));
        let (sa, _) = crate::risk::sd_and_var(&a).unwrap();
        let (sb, _) = crate::risk::sd_and_var(&b).unwrap();
        let ma = crate::risk::mean(&a);
        let mb = crate::risk::mean(&b);
        let cov = a.iter().zip(&b).map(|(u, v)| (u - ma) * (v - mb)).sum::<f64>() / a.len() as f64;
        let corr = cov / (sa * sb);
        assert!(corr.abs() < 0.01, "corr {corr}");
    }

    #[test]
    fn gaussian_sampler_reproduces_covariance() {
        let cov = vec![vec![4.0, 1.2], vec![1.2, 1.0]];
        let spec = ModelSpec {
            kind: ModelKind::Gaussian {
                mean: vec![1.0, -2.0],
                cov,
            },
            seed: 3,
        };
        let x = sample_model(&spec, 400_000).unwrap();
        let (a, b) = (x.column(0), x.column(1));
        let (ma, mb) = (crate::risk::mean(&a), crate::risk::mean(&b));
        let c01 = a.iter().zip(&b).map(|(u, v)| (u - ma) * (v - mb)).sum::<f64>() / a.len() as f64;
        assert!((ma - 1.0).abs() < 0.02 && (mb + 2.0).abs() < 0.01);
        assert!((c01 - 1.2).abs() < 0.03, "cov {c01}");
    }

    #[test]
    fn singular_covariance_is_accepted_and_indefinite_rejected() {
        let psd = vec![vec![1.0, 1.0], vec![1.0, 1.0]];
        let l = cholesky_psd(&psd).unwrap();
        assert_eq!(l[1][1], 0.0);
        let bad = vec![vec![1.0, 2.0], vec![2.0, 1.0]];
        assert!(matches!(cholesky_psd(&bad), Err(Error::Decomposition(_))));
        let asym = vec![vec![1.0, 0.5], vec![0.1, 1.0]];
        assert!(cholesky_psd(&asym).is_err());
        let spec = ModelSpec {
            kind: ModelKind::Gaussian {
                mean: vec![0.0, 0.0],
                cov: bad,
            },
            seed: 1,
        };
        assert!(sample_model(&spec, 3).is_err());
    }

    #[test]
    fn invalid_degrees_of_freedom() {
        assert!(sample_model(&ModelSpec::iid_t(0.0, 2, 1), 3).is_err());
        assert!(sample_model(&ModelSpec::iid_t(3.0, 0, 1), 3).is_err());
    }

    #[test]
    fn gaussian_oracle_values() {
        let v = gaussian_dq_oracle(10, 0.05, GaussianBase::Var).unwrap();
        assert!((v - 2.0e-6).abs() < 0.1e-6, "{v}");
        let e = gaussian_dq_oracle(10, 0.05, GaussianBase::Es).unwrap();
        assert!((e - 1.9e-9).abs() < 0.2e-9, "{e}");
        for a in [0.01, 0.3, 0.7] {
            let one = gaussian_dq_oracle(1, a, GaussianBase::Var).unwrap();
            assert!((one - 1.0).abs() < 1e-12, "{a} {one}");
            let one = gaussian_dq_oracle(1, a, GaussianBase::Es).unwrap();
            assert!((one - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn gaussian_oracle_es_solves_its_defining_equation() {
        // independent check: plug the root back in with the analytic ES
        let (n, a) = (4usize, 0.1);
        let dq = gaussian_dq_oracle(n, a, GaussianBase::Es).unwrap();
        let beta = dq * a;
        let es = |b: f64| normal_pdf(normal_upper_quantile(b)) / b;
        let lhs = (n as f64).sqrt() * es(beta);
        let rhs = n as f64 * es(a);
        assert!(((lhs - rhs) / rhs).abs() < 1e-12);
    }

    #[test]
    fn gaussian_oracle_agrees_with_simulation_at_half() {
        // at α = 0.5 the normal VaR is 0, so α* = P(S > 0) = 1/2 and DQ = 1
        let (n, a, rows) = (5usize, 0.5, 400_000usize);
        let oracle = gaussian_dq_oracle(n, a, GaussianBase::Var).unwrap();
        let mc = monte_carlo_indices(&ModelSpec::standard_normal(n, 8), rows, &[a]).unwrap()[0];
        let p = oracle * a;
        let se = (p * (1.0 - p) / rows as f64).sqrt() / a;
        assert!((mc.dq_var - oracle).abs() < 3.0 * se, "mc {} oracle {oracle} se {se}", mc.dq_var);
    }
}
