//! Portfolio weight optimization over the simplex `Δ_n`.
//!
//! * [`min_dq_var`]: minimizes the number of scenarios with
//!   `wᵀ(X⁽ʲ⁾ − x̂^VaR) > 0`, then breaks ties towards the benchmark `w₀` in
//!   `L1`;
//! * [`min_dq_es`]: minimizes `mean((vᵀ(X⁽ʲ⁾ − x̂^ES) + 1)₊)` over `v ≥ 0` and
//!   returns `w = v/‖v‖₁`;
//! * [`min_dr_sd`] and [`markowitz`]: quadratic programs solved by projected
//!   gradient.

mod es;
mod lp;
mod quadratic;
pub mod simplex;
mod var;

use serde::{Deserialize, Serialize};

use crate::error::{unit_level, Error, Result};
use crate::matrix::{SampleMatrix, Weights};

pub use es::min_dq_es;
pub use quadratic::{markowitz, min_dr_sd};
pub use var::{exceedance_count, min_dq_var};

/// Solver used by [`min_dq_var`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "kebab-case")]
pub enum VarMethod {
    /// Every point of the grid `{k/resolution}` on the simplex.
    ExactEnum { resolution: usize },
    /// Branch-and-bound over the exceedance indicators with LP bounds.
    BranchAndBound { node_limit: usize },
    /// Pairwise mass-transfer descent; for larger `n`.
    LocalSearch,
}

impl Default for VarMethod {
    fn default() -> Self {
        VarMethod::BranchAndBound {
            node_limit: 200_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

/// `coeffsᵀw (relation) bound`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearConstraint {
    pub coeffs: Vec<f64>,
    pub relation: Relation,
    pub bound: f64,
}

pub(crate) const CONSTRAINT_TOL: f64 = 1e-9;

impl LinearConstraint {
    pub fn new(coeffs: Vec<f64>, relation: Relation, bound: f64) -> Self {
        Self {
            coeffs,
            relation,
            bound,
        }
    }

    pub fn holds(&self, w: &[f64]) -> bool {
        let lhs: f64 = self.coeffs.iter().zip(w).map(|(a, b)| a * b).sum();
        let tol = CONSTRAINT_TOL * (1.0 + self.bound.abs());
        match self.relation {
            Relation::Le => lhs <= self.bound + tol,
            Relation::Ge => lhs >= self.bound - tol,
            Relation::Eq => (lhs - self.bound).abs() <= tol,
        }
    }
}

/// Inputs shared by the DQ optimizers.
#[derive(Debug, Clone)]
pub struct OptProblem {
    pub samples: SampleMatrix,
    pub alpha: f64,
    pub w0: Weights,
    pub method: VarMethod,
    pub constraints: Vec<LinearConstraint>,
    /// Iteration budget of the iterative solvers.
    pub max_iter: usize,
}

impl OptProblem {
    pub fn new(samples: SampleMatrix, alpha: f64) -> Result<Self> {
        unit_level(alpha)?;
        let n = samples.cols();
        Ok(Self {
            samples,
            alpha,
            w0: Weights::uniform(n),
            method: VarMethod::default(),
            constraints: Vec::new(),
            max_iter: 10_000,
        })
    }

    pub fn with_w0(mut self, w0: Weights) -> Result<Self> {
        self.samples.check_weights(&w0)?;
        self.w0 = w0;
        Ok(self)
    }

    pub fn with_method(mut self, method: VarMethod) -> Self {
        self.method = method;
        self
    }

    pub fn with_constraint(mut self, c: LinearConstraint) -> Result<Self> {
        if c.coeffs.len() != self.samples.cols() {
            return Err(Error::InvalidInput(format!(
                "constraint has {} coefficients for {} assets",
                c.coeffs.len(),
                self.samples.cols()
            )));
        }
        if !(c.bound.is_finite() && c.coeffs.iter().all(|a| a.is_finite())) {
            return Err(Error::InvalidInput("constraint must be finite".into()));
        }
        self.constraints.push(c);
        Ok(self)
    }

    pub fn with_max_iter(mut self, max_iter: usize) -> Self {
        self.max_iter = max_iter.max(1);
        self
    }

    fn validate(&self) -> Result<()> {
        unit_level(self.alpha)?;
        self.samples.check_weights(&self.w0)?;
        for c in &self.constraints {
            if c.coeffs.len() != self.samples.cols() {
                return Err(Error::InvalidInput(
                    "constraint length differs from asset count".into(),
                ));
            }
        }
        Ok(())
    }

    pub(crate) fn feasible(&self, w: &[f64]) -> bool {
        self.constraints.iter().all(|c| c.holds(w))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptResult {
    pub w: Weights,
    pub objective: f64,
    pub exceedance_count: Option<usize>,
    pub iterations: usize,
    pub converged: bool,
    /// Assets whose direction cannot produce an exceedance of their own ES.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub degenerate_assets: Vec<usize>,
}

/// Clamps round-off negatives and renormalizes a solver iterate.
pub(crate) fn to_weights(v: &[f64]) -> Result<Weights> {
    let clean: Vec<f64> = v.iter().map(|x| x.max(0.0)).collect();
    Weights::normalized(&clean)
}

pub(crate) fn column_means(x: &SampleMatrix) -> Vec<f64> {
    let mut m = vec![0.0; x.cols()];
    for r in x.row_iter() {
        for (a, v) in m.iter_mut().zip(r) {
            *a += v;
        }
    }
    let n = x.rows() as f64;
    m.iter_mut().for_each(|a| *a /= n);
    m
}

/// Population covariance matrix of the columns.
pub(crate) fn covariance(x: &SampleMatrix) -> Vec<Vec<f64>> {
    let mu = column_means(x);
    let n = x.cols();
    let mut c = vec![vec![0.0; n]; n];
    for r in x.row_iter() {
        for i in 0..n {
            let di = r[i] - mu[i];
            for k in i..n {
                c[i][k] += di * (r[k] - mu[k]);
            }
        }
    }
    let rows = x.rows() as f64;
    for i in 0..n {
        for k in i..n {
            c[i][k] /= rows;
            c[k][i] = c[i][k];
        }
    }
    c
}
