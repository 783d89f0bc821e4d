//! Brute-force oracles shared by the integration tests, written without
//! using the library's solvers.
#![allow(dead_code)]

use divquot::SampleMatrix;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> SampleMatrix {
    // mildly heavy-tailed, correlated columns with different scales
    let scales: Vec<f64> = (0..cols).map(|_| rng.random_range(0.5..2.0)).collect();
    let data: Vec<f64> = (0..rows)
        .flat_map(|_| {
            let common: f64 = rng.sample(StandardNormal);
            let shock = 1.0 / rng.random_range(0.3f64..1.0);
            (0..cols)
                .map(|i| {
                    let z: f64 = rng.sample(StandardNormal);
                    scales[i] * shock * (0.4 * common + z)
                })
                .collect::<Vec<_>>()
        })
        .collect();
    SampleMatrix::from_row_major(rows, cols, data).unwrap()
}

/// Left-quantile VaR: the (⌊Nα⌋+1)-th largest.
pub fn oracle_var(col: &[f64], alpha: f64) -> f64 {
    let mut s = col.to_vec();
    s.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let k = (col.len() as f64 * alpha + 1e-9).floor() as usize;
    s[k.min(col.len() - 1)]
}

pub fn oracle_es(col: &[f64], alpha: f64) -> f64 {
    // Rockafellar–Uryasev: min_t t + mean((x − t)₊)/α over sample points
    col.iter()
        .map(|&t| t + col.iter().map(|x| (x - t).max(0.0)).sum::<f64>() / (col.len() as f64 * alpha))
        .fold(f64::INFINITY, f64::min)
}

pub fn grid(n: usize, m: usize) -> Vec<Vec<f64>> {
    fn rec(n: usize, left: usize, m: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<f64>>) {
        if cur.len() == n - 1 {
            cur.push(left);
            out.push(cur.iter().map(|&p| p as f64 / m as f64).collect());
            cur.pop();
            return;
        }
        for p in 0..=left {
            cur.push(p);
            rec(n, left - p, m, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(n, m, m, &mut Vec::new(), &mut out);
    out
}

pub fn count(x: &SampleMatrix, var: &[f64], w: &[f64]) -> usize {
    let t: f64 = w.iter().zip(var).map(|(a, b)| a * b).sum();
    x.row_iter()
        .filter(|r| w.iter().zip(*r).map(|(a, b)| a * b).sum::<f64>() > t)
        .count()
}

pub fn l1(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
}

pub fn hinge_mean(z: &[Vec<f64>], v: &[f64]) -> f64 {
    z.iter()
        .map(|r| (r[0] * v[0] + r[1] * v[1] + 1.0).max(0.0))
        .sum::<f64>()
        / z.len() as f64
}

/// `min_{r ≥ 0} mean((r·d + 1)₊)` by evaluating every kink.
pub fn radial_min(d: &[f64]) -> f64 {
    if d.iter().all(|&x| x <= 0.0) {
        return 0.0;
    }
    let f = |r: f64| d.iter().map(|x| (r * x + 1.0).max(0.0)).sum::<f64>() / d.len() as f64;
    d.iter()
        .filter(|&&x| x < 0.0)
        .map(|&x| f(-1.0 / x))
        .fold(1.0, f64::min)
}

/// `min_{v ≥ 0} mean((vᵀz + 1)₊)`: a log-spaced 400×400 grid over `v` (plus
/// the axes), then a zoomed scan over directions with each direction scaled
/// optimally.
pub fn es_grid_oracle(x: &SampleMatrix, alpha: f64) -> f64 {
    let es: Vec<f64> = x.columns().iter().map(|c| oracle_es(c, alpha)).collect();
    let z: Vec<Vec<f64>> = x
        .row_iter()
        .map(|r| vec![r[0] - es[0], r[1] - es[1]])
        .collect();
    let s = z.iter().map(|r| r[0].hypot(r[1])).fold(0.0, f64::max);
    let (lo, hi) = ((1e-3 / s).ln(), (1e4 / s).ln());
    let axis: Vec<f64> = std::iter::once(0.0)
        .chain((0..400).map(|k| (lo + (hi - lo) * k as f64 / 399.0).exp()))
        .collect();
    let mut f_best = f64::INFINITY;
    for &a in &axis {
        for &b in &axis {
            if a == 0.0 && b == 0.0 {
                continue;
            }
            f_best = f_best.min(hinge_mean(&z, &[a, b]));
        }
    }
    let along = |theta: f64| {
        let (c, s) = (theta.cos(), theta.sin());
        let d: Vec<f64> = z.iter().map(|r| r[0] * c + r[1] * s).collect();
        radial_min(&d)
    };
    let (mut a, mut b) = (0.0, std::f64::consts::FRAC_PI_2);
    for _ in 0..6 {
        let pts: Vec<f64> = (0..=400).map(|k| a + (b - a) * k as f64 / 400.0).collect();
        let (k_best, f) = pts
            .iter()
            .map(|&t| along(t))
            .enumerate()
            .fold((0, f64::INFINITY), |m, (k, f)| if f < m.1 { (k, f) } else { m });
        f_best = f_best.min(f);
        let step = (b - a) / 400.0;
        (a, b) = ((pts[k_best] - 2.0 * step).max(0.0), (pts[k_best] + 2.0 * step).min(std::f64::consts::FRAC_PI_2));
    }
    f_best / alpha
}
