//! Minimization of DQ^VaR over the simplex.
//!
//! With `y⁽ʲ⁾ = X⁽ʲ⁾ − x̂^VaR_α`, DQ^VaR at `w` is `#{j : wᵀy⁽ʲ⁾ > 0}/(Nα)`.
//! Minimizing the count is a maximum feasible subsystem problem: at most one
//! binary per scenario decides whether it is kept at or below zero.

use super::lp::{Lp, LpOutcome};
use super::simplex::SimplexGrid;
use super::{to_weights, OptProblem, OptResult, VarMethod};
use crate::error::{Error, Result};
use crate::matrix::{SampleMatrix, Weights};
use crate::risk::empirical_var;

/// Kept scenarios are held at `ŷᵀw ≤ −MARGIN` (rows scaled to unit max-norm),
/// well above the LP feasibility tolerance, so the strict count at returned
/// points does not depend on round-off.
const MARGIN: f64 = 1e-9;

const GRID_LIMIT: u128 = 50_000_000;

/// Exceedance count `#{j : Σᵢ wᵢXᵢ⁽ʲ⁾ > Σᵢ wᵢ VaR_α(Xᵢ)}`, evaluated exactly as
/// [`crate::indices::dq_var`] does.
pub fn exceedance_count(x: &SampleMatrix, alpha: f64, w: &Weights) -> Result<usize> {
    x.check_weights(w)?;
    Ok(Counter::new(x, alpha)?.count(w.as_slice()))
}

struct Counter<'a> {
    x: &'a SampleMatrix,
    var: Vec<f64>,
}

impl<'a> Counter<'a> {
    fn new(x: &'a SampleMatrix, alpha: f64) -> Result<Self> {
        let var = x
            .columns()
            .iter()
            .map(|c| empirical_var(c, alpha))
            .collect::<Result<_>>()?;
        Ok(Self { x, var })
    }

    fn count(&self, w: &[f64]) -> usize {
        let t: f64 = w.iter().zip(&self.var).map(|(a, b)| a * b).sum();
        self.x
            .row_iter()
            .filter(|r| w.iter().zip(*r).map(|(a, b)| a * b).sum::<f64>() > t)
            .count()
    }
}

/// Scenarios that can exceed for some `w`, rows scaled to unit max-norm.
struct Scenarios {
    rows: Vec<Vec<f64>>,
    /// `maxᵢ ŷᵢ`: the largest value `ŷᵀw` reaches on the simplex.
    cap: Vec<f64>,
}

impl Scenarios {
    fn new(x: &SampleMatrix, var: &[f64]) -> Self {
        let mut rows = Vec::new();
        let mut cap = Vec::new();
        for r in x.row_iter() {
            let y: Vec<f64> = r.iter().zip(var).map(|(a, b)| a - b).collect();
            let top = y.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            if top > 0.0 {
                let s = y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
                rows.push(y.iter().map(|v| v / s).collect());
                cap.push(top / s);
            }
        }
        Self { rows, cap }
    }

    fn dot(&self, j: usize, w: &[f64]) -> f64 {
        self.rows[j].iter().zip(w).map(|(a, b)| a * b).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Fix {
    Free,
    Kept,
    Counted,
}

enum Goal<'a> {
    /// `min Σ tⱼ/capⱼ`, a lower bound on the free exceedances.
    Count,
    /// `min ‖w − w₀‖₁` with the relaxed count of free exceedances `≤ budget`.
    Distance { w0: &'a [f64], budget: f64 },
}

struct NodeLp {
    objective: f64,
    w: Vec<f64>,
    /// `tⱼ/capⱼ` per scenario (zero unless free).
    excess: Vec<f64>,
}

fn node_lp(sc: &Scenarios, n: usize, fix: &[Fix], p: &OptProblem, goal: &Goal) -> Result<Option<NodeLp>> {
    let mut lp = Lp::minimize();
    let w: Vec<_> = (0..n).map(|_| lp.var(0.0, 0.0, 1.0)).collect();
    lp.simplex_with(&w, &p.constraints);
    if let Goal::Distance { w0, .. } = goal {
        for i in 0..n {
            let d = lp.var(1.0, 0.0, 2.0);
            lp.ge(&[(d, 1.0), (w[i], -1.0)], -w0[i]);
            lp.ge(&[(d, 1.0), (w[i], 1.0)], w0[i]);
        }
    }
    let mut t_vars = Vec::new();
    let mut budget_terms = Vec::new();
    for (j, f) in fix.iter().enumerate() {
        let mut terms: Vec<_> = w.iter().copied().zip(sc.rows[j].iter().copied()).collect();
        match f {
            Fix::Counted => {}
            Fix::Kept => lp.le(&terms, -MARGIN),
            Fix::Free => {
                let cost = match goal {
                    Goal::Count => 1.0 / sc.cap[j],
                    Goal::Distance { .. } => 0.0,
                };
                let t = lp.var(cost, 0.0, f64::INFINITY);
                terms.iter_mut().for_each(|(_, c)| *c = -*c);
                terms.push((t, 1.0));
                lp.ge(&terms, 0.0);
                budget_terms.push((t, 1.0 / sc.cap[j]));
                t_vars.push((j, t));
            }
        }
    }
    if let Goal::Distance { budget, .. } = goal {
        if !budget_terms.is_empty() {
            lp.le(&budget_terms, *budget);
        }
    }
    let mut read = w.clone();
    read.extend(t_vars.iter().map(|(_, t)| *t));
    match lp.solve(&read)? {
        LpOutcome::Infeasible => Ok(None),
        LpOutcome::Optimal { objective, values } => {
            let mut excess = vec![0.0; fix.len()];
            for (k, (j, _)) in t_vars.iter().enumerate() {
                excess[*j] = values[n + k] / sc.cap[*j];
            }
            Ok(Some(NodeLp {
                objective,
                w: values[..n].to_vec(),
                excess,
            }))
        }
    }
}

/// Free scenario to branch on: largest relaxed excess, else the largest
/// `ŷᵀw`.
fn branch_row(sc: &Scenarios, fix: &[Fix], lp: &NodeLp) -> Option<usize> {
    let free = || (0..fix.len()).filter(|&j| fix[j] == Fix::Free);
    let by_excess = free().max_by(|&a, &b| lp.excess[a].total_cmp(&lp.excess[b]));
    match by_excess {
        Some(j) if lp.excess[j] > 1e-9 => Some(j),
        _ => free().max_by(|&a, &b| sc.dot(a, &lp.w).total_cmp(&sc.dot(b, &lp.w))),
    }
}

struct Incumbent {
    count: usize,
    dist: f64,
    w: Weights,
}

impl Incumbent {
    fn beats(&self, other: Option<&Incumbent>) -> bool {
        other.is_none_or(|b| self.count < b.count || (self.count == b.count && self.dist < b.dist))
    }
}

struct Search<'a> {
    p: &'a OptProblem,
    counter: Counter<'a>,
    w0: Vec<f64>,
}

impl Search<'_> {
    /// Scores the weights exactly as they would be returned.
    fn score_weights(&self, w: Weights) -> Option<Incumbent> {
        if !self.p.feasible(w.as_slice()) {
            return None;
        }
        Some(Incumbent {
            count: self.counter.count(w.as_slice()),
            dist: l1(w.as_slice(), &self.w0),
            w,
        })
    }

    /// Scores a solver iterate after renormalizing it onto the simplex.
    fn score(&self, raw: &[f64]) -> Option<Incumbent> {
        self.score_weights(to_weights(raw).ok()?)
    }

    /// `w₀`, the vertices and the barycentre.
    fn seed(&self) -> Option<Incumbent> {
        let n = self.w0.len();
        let mut best = self.score_weights(self.p.w0.clone());
        let mut cands = vec![Weights::uniform(n)];
        for i in 0..n {
            let mut e = vec![0.0; n];
            e[i] = 1.0;
            cands.extend(Weights::new(e).ok());
        }
        for w in cands {
            if let Some(c) = self.score_weights(w) {
                if c.beats(best.as_ref()) {
                    best = Some(c);
                }
            }
        }
        best
    }

    fn offer(&self, best: &mut Option<Incumbent>, raw: &[f64]) {
        if let Some(c) = self.score(raw) {
            if c.beats(best.as_ref()) {
                *best = Some(c);
            }
        }
    }

    fn grid(&self, resolution: usize) -> Result<(Incumbent, usize)> {
        let n = self.w0.len();
        if resolution == 0 {
            return Err(Error::InvalidInput("grid resolution must be ≥ 1".into()));
        }
        let size = SimplexGrid::size(n, resolution);
        if size > GRID_LIMIT {
            return Err(Error::InvalidInput(format!(
                "grid of {size} points is too large; lower the resolution or use another method"
            )));
        }
        let mut best: Option<Incumbent> = None;
        for w in SimplexGrid::new(n, resolution) {
            // grid points are used as generated, not renormalized
            if let Some(c) = Weights::new(w).ok().and_then(|w| self.score_weights(w)) {
                if c.beats(best.as_ref()) {
                    best = Some(c);
                }
            }
        }
        let best = best.ok_or_else(|| {
            Error::Infeasible("no grid point satisfies the side constraints".into())
        })?;
        Ok((best, size as usize))
    }

    fn branch_and_bound(&self, node_limit: usize) -> Result<(Incumbent, usize, bool)> {
        let n = self.w0.len();
        let sc = Scenarios::new(&self.p.samples, &self.counter.var);
        let m = sc.rows.len();
        let mut best = self.seed();
        let mut nodes = 0usize;
        let mut complete = true;

        // phase 1: optimal count
        let mut stack = vec![vec![Fix::Free; m]];
        while let Some(fix) = stack.pop() {
            if nodes >= node_limit {
                complete = false;
                break;
            }
            nodes += 1;
            let counted = fix.iter().filter(|f| **f == Fix::Counted).count();
            if best.as_ref().is_some_and(|b| counted >= b.count) {
                continue;
            }
            let Some(lp) = node_lp(&sc, n, &fix, self.p, &Goal::Count)? else {
                if nodes == 1 {
                    return Err(Error::Infeasible(
                        "side constraints exclude the whole simplex".into(),
                    ));
                }
                continue;
            };
            self.offer(&mut best, &lp.w);
            let bound = counted + (lp.objective - 1e-7).ceil().max(0.0) as usize;
            if best.as_ref().is_some_and(|b| bound >= b.count) {
                continue;
            }
            if let Some(j) = branch_row(&sc, &fix, &lp) {
                let mut counted_child = fix.clone();
                counted_child[j] = Fix::Counted;
                let mut kept_child = fix;
                kept_child[j] = Fix::Kept;
                stack.push(counted_child);
                stack.push(kept_child);
            }
        }
        let mut best = best.ok_or_else(|| Error::Infeasible("no feasible weights found".into()))?;

        // phase 2: closest count-optimal point to w₀
        if complete && best.dist > 0.0 {
            let target = best.count;
            let mut stack = vec![vec![Fix::Free; m]];
            while let Some(fix) = stack.pop() {
                if nodes >= node_limit {
                    complete = false;
                    break;
                }
                nodes += 1;
                let counted = fix.iter().filter(|f| **f == Fix::Counted).count();
                if counted > target {
                    continue;
                }
                let goal = Goal::Distance {
                    w0: &self.w0,
                    budget: (target - counted) as f64,
                };
                let Some(lp) = node_lp(&sc, n, &fix, self.p, &goal)? else {
                    continue;
                };
                if lp.objective >= best.dist - 1e-12 {
                    continue;
                }
                if let Some(c) = self.score(&lp.w) {
                    if c.count <= target {
                        if c.dist < best.dist {
                            best = c;
                        }
                        continue;
                    }
                }
                let j = (0..m)
                    .filter(|&j| fix[j] == Fix::Free)
                    .max_by(|&a, &b| sc.dot(a, &lp.w).total_cmp(&sc.dot(b, &lp.w)));
                if let Some(j) = j {
                    if counted < target {
                        let mut c = fix.clone();
                        c[j] = Fix::Counted;
                        stack.push(c);
                    }
                    let mut k = fix;
                    k[j] = Fix::Kept;
                    stack.push(k);
                }
            }
        }
        Ok((best, nodes, complete))
    }

    fn local_search(&self, max_iter: usize) -> Result<(Incumbent, usize, bool)> {
        let n = self.w0.len();
        let mut best = match self.seed() {
            Some(b) => b,
            None => {
                // find any feasible point via the root relaxation
                let sc = Scenarios::new(&self.p.samples, &self.counter.var);
                let fix = vec![Fix::Free; sc.rows.len()];
                let lp = node_lp(&sc, n, &fix, self.p, &Goal::Count)?.ok_or_else(|| {
                    Error::Infeasible("side constraints exclude the whole simplex".into())
                })?;
                let mut b = None;
                self.offer(&mut b, &lp.w);
                b.ok_or_else(|| Error::Infeasible("no feasible weights found".into()))?
            }
        };
        let mut h = 0.25f64;
        let mut iters = 0;
        while h >= 1e-4 {
            if iters >= max_iter {
                return Ok((best, iters, false));
            }
            iters += 1;
            let mut improved = false;
            for i in 0..n {
                for k in 0..n {
                    let step = h.min(best.w.as_slice()[i]);
                    if i == k || step <= 0.0 {
                        continue;
                    }
                    let mut cand = best.w.as_slice().to_vec();
                    cand[i] -= step;
                    cand[k] += step;
                    if let Some(c) = self.score(&cand) {
                        if c.beats(Some(&best)) {
                            best = c;
                            improved = true;
                        }
                    }
                }
            }
            if !improved {
                h *= 0.5;
            }
        }
        Ok((best, iters, true))
    }
}

fn l1(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
}

/// Minimizes DQ^VaR_α over `Δ_n` (and the side constraints); among
/// count-optimal points returns one closest to `w₀` in `L1`.
///
/// A scenario with `wᵀy⁽ʲ⁾ = 0` does not count as an exceedance. The
/// branch-and-bound holds kept scenarios strictly below zero by a small
/// margin, so optima that need some `wᵀy⁽ʲ⁾ = 0` exactly are only found
/// through the seeds (`w₀`, vertices, barycentre).
pub fn min_dq_var(p: &OptProblem) -> Result<OptResult> {
    p.validate()?;
    let search = Search {
        p,
        counter: Counter::new(&p.samples, p.alpha)?,
        w0: p.w0.as_slice().to_vec(),
    };
    let (best, iterations, converged) = match p.method {
        VarMethod::ExactEnum { resolution } => {
            let (b, size) = search.grid(resolution)?;
            (b, size, true)
        }
        VarMethod::BranchAndBound { node_limit } => search.branch_and_bound(node_limit)?,
        VarMethod::LocalSearch => search.local_search(p.max_iter)?,
    };
    let w = best.w;
    let count = best.count;
    Ok(OptResult {
        w,
        objective: count as f64 / (p.samples.rows() as f64 * p.alpha),
        exceedance_count: Some(count),
        iterations,
        converged,
        degenerate_assets: Vec::new(),
    })
}
