//! Euclidean projections and lattice enumeration on the simplex.

/// Projection of `y` onto `{v ≥ 0, aᵀv = b}` for `a > 0`, `b > 0`.
///
/// The solution is `vᵢ = (yᵢ − λaᵢ)₊`; `λ` is located by sweeping the
/// breakpoints `yᵢ/aᵢ` in decreasing order.
pub fn project_weighted_simplex(y: &[f64], a: &[f64], b: f64) -> Vec<f64> {
    let mut order: Vec<usize> = (0..y.len()).collect();
    order.sort_unstable_by(|&i, &k| (y[k] / a[k]).total_cmp(&(y[i] / a[i])));
    // with the first k breakpoints active: Σ aᵢyᵢ − λ Σ aᵢ² = b
    let (mut ay, mut aa) = (0.0, 0.0);
    let mut lambda = 0.0;
    for (k, &i) in order.iter().enumerate() {
        ay += a[i] * y[i];
        aa += a[i] * a[i];
        let cand = (ay - b) / aa;
        let next = order.get(k + 1).map(|&j| y[j] / a[j]);
        if next.is_none_or(|t| t <= cand) {
            lambda = cand;
            break;
        }
    }
    y.iter()
        .zip(a)
        .map(|(yi, ai)| (yi - lambda * ai).max(0.0))
        .collect()
}

/// Projection onto the probability simplex.
pub fn project_simplex(y: &[f64]) -> Vec<f64> {
    project_weighted_simplex(y, &vec![1.0; y.len()], 1.0)
}

/// All `w ∈ Δ_n` with coordinates in `{0, 1/m, …, 1}`, in lexicographic order
/// of the integer compositions of `m`.
pub struct SimplexGrid {
    m: usize,
    parts: Vec<usize>,
    done: bool,
}

impl SimplexGrid {
    pub fn new(n: usize, m: usize) -> Self {
        let mut parts = vec![0; n];
        if n > 0 {
            parts[n - 1] = m;
        }
        Self {
            m,
            parts,
            done: n == 0 || m == 0,
        }
    }

    /// Number of grid points, `C(m + n − 1, n − 1)`, saturating.
    pub fn size(n: usize, m: usize) -> u128 {
        if n == 0 {
            return 0;
        }
        let mut c: u128 = 1;
        for i in 1..n {
            c = c.saturating_mul((m + i) as u128) / i as u128;
        }
        c
    }
}

impl Iterator for SimplexGrid {
    type Item = Vec<f64>;

    fn next(&mut self) -> Option<Vec<f64>> {
        if self.done {
            return None;
        }
        let m = self.m as f64;
        let out = self.parts.iter().map(|&p| p as f64 / m).collect();
        // advance: increment the rightmost incrementable position before the
        // last, give the remainder to the last position
        let n = self.parts.len();
        let mut k = n.wrapping_sub(2);
        loop {
            if k >= n {
                self.done = true;
                break;
            }
            let used: usize = self.parts[..=k].iter().sum();
            if used < self.m {
                self.parts[k] += 1;
                for p in &mut self.parts[k + 1..n - 1] {
                    *p = 0;
                }
                self.parts[n - 1] = self.m - used - 1;
                break;
            }
            k = k.wrapping_sub(1);
        }
        Some(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute_projection(y: &[f64]) -> Vec<f64> {
        // 2-D: minimize over a fine parametrization of the segment
        let mut best = (f64::INFINITY, 0.0);
        for k in 0..=200_000 {
            let t = k as f64 / 200_000.0;
            let d = (y[0] - t).powi(2) + (y[1] - (1.0 - t)).powi(2);
            if d < best.0 {
                best = (d, t);
            }
        }
        vec![best.1, 1.0 - best.1]
    }

    #[test]
    fn projection_matches_brute_force_in_two_dimensions() {
        for y in [[0.3, 0.9], [2.0, -1.0], [-0.5, -0.7], [0.5, 0.5]] {
            let p = project_simplex(&y);
            let b = brute_projection(&y);
            assert!((p[0] - b[0]).abs() < 1e-5 && (p[1] - b[1]).abs() < 1e-5, "{y:?}");
        }
    }

    #[test]
    fn weighted_projection_lands_on_constraint() {
        let a = [0.5, 2.0, 1.0];
        let v = project_weighted_simplex(&[3.0, -1.0, 0.2], &a, 1.0);
        let s: f64 = v.iter().zip(&a).map(|(x, y)| x * y).sum();
        assert!((s - 1.0).abs() < 1e-14);
        assert!(v.iter().all(|x| *x >= 0.0));
        // a point already feasible is fixed
        let f = [1.0, 0.0, 0.5];
        let p = project_weighted_simplex(&f, &a, 1.0);
        for (x, y) in p.iter().zip(&f) {
            assert!((x - y).abs() < 1e-15);
        }
    }

    #[test]
    fn grid_enumerates_all_compositions() {
        let pts: Vec<_> = SimplexGrid::new(3, 4).collect();
        assert_eq!(pts.len() as u128, SimplexGrid::size(3, 4));
        assert_eq!(pts.len(), 15);
        assert_eq!(pts[0], vec![0.0, 0.0, 1.0]);
        assert_eq!(pts.last().unwrap(), &vec![1.0, 0.0, 0.0]);
        for p in &pts {
            assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        }
        let mut uniq = pts.clone();
        uniq.dedup();
        assert_eq!(uniq.len(), pts.len());
        assert_eq!(SimplexGrid::new(1, 5).count(), 1);
        assert_eq!(SimplexGrid::size(3, 200), 20301);
    }
}
