//! Optimizers against brute-force oracles written independently of the
//! library's solvers.

mod common;

use common::*;
use divquot::optimize::{markowitz, min_dq_es, min_dq_var, min_dr_sd, OptProblem, VarMethod};
use divquot::{SampleMatrix, Weights};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn branch_and_bound_matches_grid_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(20240901);
    let points = grid(3, 200);
    for case in 0..20 {
        let x = random_matrix(&mut rng, 50, 3);
        let alpha = 0.1;
        let var: Vec<f64> = x.columns().iter().map(|c| oracle_var(c, alpha)).collect();
        let w0 = Weights::normalized(&[
            rng.random_range(0.0..1.0),
            rng.random_range(0.0..1.0),
            rng.random_range(0.0..1.0),
        ])
        .unwrap();
        let (mut best_count, mut best_dist) = (usize::MAX, f64::INFINITY);
        for w in &points {
            let c = count(&x, &var, w);
            let d = l1(w, w0.as_slice());
            if c < best_count || (c == best_count && d < best_dist) {
                best_count = c;
                best_dist = d;
            }
        }
        let p = OptProblem::new(x.clone(), alpha).unwrap().with_w0(w0.clone()).unwrap();
        let r = min_dq_var(&p).unwrap();
        assert!(r.converged, "case {case}");
        let got = r.exceedance_count.unwrap();
        assert_eq!(got, best_count, "case {case}");
        assert_eq!(got, count(&x, &var, r.w.as_slice()));
        // the continuous tie-break is at least as close as any count-optimal grid point
        assert!(
            l1(r.w.as_slice(), w0.as_slice()) <= best_dist + 1e-7,
            "case {case}: {} vs grid {best_dist}",
            l1(r.w.as_slice(), w0.as_slice())
        );

        let g = min_dq_var(&p.clone().with_method(VarMethod::ExactEnum { resolution: 200 })).unwrap();
        assert_eq!(g.exceedance_count, Some(best_count));
        assert!((l1(g.w.as_slice(), w0.as_slice()) - best_dist).abs() < 1e-12);

        let ls = min_dq_var(&p.clone().with_method(VarMethod::LocalSearch)).unwrap();
        assert!(ls.exceedance_count.unwrap() >= best_count);
    }
}

#[test]
fn optimal_count_is_invariant_under_positive_scaling() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..5 {
        let x = random_matrix(&mut rng, 40, 3);
        let c = rng.random_range(0.01..100.0);
        let scaled = x.map(|_, v| c * v).unwrap();
        let a = min_dq_var(&OptProblem::new(x, 0.1).unwrap()).unwrap();
        let b = min_dq_var(&OptProblem::new(scaled, 0.1).unwrap()).unwrap();
        assert_eq!(a.exceedance_count, b.exceedance_count);
    }
}

#[test]
fn subgradient_matches_log_grid_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut worst = 0.0f64;
    for case in 0..10 {
        let x = random_matrix(&mut rng, 200, 2);
        let alpha = [0.05, 0.1, 0.2][case % 3];
        let oracle = es_grid_oracle(&x, alpha);
        let r = min_dq_es(&OptProblem::new(x.clone(), alpha).unwrap()).unwrap();
        let gap = r.objective - oracle;
        worst = worst.max(gap.abs());
        assert!(gap.abs() <= 1e-4, "case {case}: solver {} oracle {oracle}", r.objective);
    }
    eprintln!("worst DQ^ES gap {worst:e}");
}

fn sd(x: &SampleMatrix, w: &[f64]) -> f64 {
    let s: Vec<f64> = x
        .row_iter()
        .map(|r| r.iter().zip(w).map(|(a, b)| a * b).sum())
        .collect();
    let m = s.iter().sum::<f64>() / s.len() as f64;
    (s.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / s.len() as f64).sqrt()
}

#[test]
fn dr_sd_matches_simplex_grid() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for case in 0..5 {
        let x = random_matrix(&mut rng, 300, 3);
        let sds: Vec<f64> = (0..3)
            .map(|i| {
                let mut e = [0.0; 3];
                e[i] = 1.0;
                sd(&x, &e)
            })
            .collect();
        let ratio = |w: &[f64]| sd(&x, w) / w.iter().zip(&sds).map(|(a, b)| a * b).sum::<f64>();
        let oracle = grid(3, 300).iter().map(|w| ratio(w)).fold(f64::INFINITY, f64::min);
        let r = min_dr_sd(&x).unwrap();
        assert!(r.objective <= oracle + 1e-12, "case {case}");
        assert!(oracle - r.objective <= 1e-4, "case {case}: {} vs {oracle}", r.objective);
        assert!((r.objective - ratio(r.w.as_slice())).abs() < 1e-8);
    }
}

#[test]
fn markowitz_matches_segment_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for case in 0..5 {
        let x = random_matrix(&mut rng, 300, 3);
        let mu: Vec<f64> = x.columns().iter().map(|c| -c.iter().sum::<f64>() / c.len() as f64).collect();
        let (lo, hi) = (mu.iter().cloned().fold(f64::INFINITY, f64::min), mu.iter().cloned().fold(f64::NEG_INFINITY, f64::max));
        let target = lo + rng.random_range(0.2..0.8) * (hi - lo);
        // feasible set: w₀ = t, then w₁, w₂ solve the two equalities
        let var_at = |t: f64| -> Option<f64> {
            let (r1, r2) = (1.0 - t, target - t * mu[0]);
            let det = mu[2] - mu[1];
            let w1 = (r1 * mu[2] - r2) / det;
            let w2 = r1 - w1;
            (w1 >= -1e-15 && w2 >= -1e-15).then(|| sd(&x, &[t, w1.max(0.0), w2.max(0.0)]).powi(2))
        };
        let mut oracle = f64::INFINITY;
        let mut arg = 0.0;
        for k in 0..=200_000 {
            let t = k as f64 / 200_000.0;
            if let Some(v) = var_at(t) {
                if v < oracle {
                    (oracle, arg) = (v, t);
                }
            }
        }
        // golden-section polish around the scan minimum
        let (mut a, mut b) = ((arg - 1e-5).max(0.0), (arg + 1e-5).min(1.0));
        for _ in 0..100 {
            let m1 = a + 0.382 * (b - a);
            let m2 = a + 0.618 * (b - a);
            let (f1, f2) = (var_at(m1).unwrap_or(f64::INFINITY), var_at(m2).unwrap_or(f64::INFINITY));
            if f1 < f2 {
                b = m2;
            } else {
                a = m1;
            }
            oracle = oracle.min(f1).min(f2);
        }
        let r = markowitz(&x, target).unwrap();
        let ret: f64 = r.w.as_slice().iter().zip(&mu).map(|(a, b)| a * b).sum();
        assert!((ret - target).abs() < 1e-10, "case {case}");
        assert!((r.objective - oracle).abs() <= 1e-6, "case {case}: {} vs {oracle}", r.objective);
        assert!(r.objective <= oracle + 1e-12, "case {case}: {} vs {oracle}", r.objective);
    }
}
