//! Thin layer over `microlp` for the node relaxations.

use microlp::{ComparisonOp, OptimizationDirection, Problem, Variable};

use super::{LinearConstraint, Relation};
use crate::error::{Error, Result};

pub(crate) struct Lp {
    problem: Problem,
}

pub(crate) enum LpOutcome {
    Optimal { objective: f64, values: Vec<f64> },
    Infeasible,
}

impl Lp {
    pub fn minimize() -> Self {
        Self {
            problem: Problem::new(OptimizationDirection::Minimize),
        }
    }

    pub fn var(&mut self, cost: f64, lo: f64, hi: f64) -> Variable {
        self.problem.add_var(cost, (lo, hi))
    }

    pub fn le(&mut self, terms: &[(Variable, f64)], rhs: f64) {
        self.problem.add_constraint(terms, ComparisonOp::Le, rhs);
    }

    pub fn ge(&mut self, terms: &[(Variable, f64)], rhs: f64) {
        self.problem.add_constraint(terms, ComparisonOp::Ge, rhs);
    }

    pub fn eq(&mut self, terms: &[(Variable, f64)], rhs: f64) {
        self.problem.add_constraint(terms, ComparisonOp::Eq, rhs);
    }

    /// `w ∈ Δ_n` plus the user's linear side constraints.
    pub fn simplex_with(&mut self, w: &[Variable], extra: &[LinearConstraint]) {
        let ones: Vec<_> = w.iter().map(|&v| (v, 1.0)).collect();
        self.eq(&ones, 1.0);
        for c in extra {
            let terms: Vec<_> = w.iter().copied().zip(c.coeffs.iter().copied()).collect();
            let op = match c.relation {
                Relation::Le => ComparisonOp::Le,
                Relation::Ge => ComparisonOp::Ge,
                Relation::Eq => ComparisonOp::Eq,
            };
            self.problem.add_constraint(&terms[..], op, c.bound);
        }
    }

    pub fn solve(&self, read: &[Variable]) -> Result<LpOutcome> {
        match self.problem.solve() {
            Ok(outcome) => {
                let sol = outcome
                    .into_solution()
                    .map_err(|_| Error::Solver("LP relaxation interrupted".into()))?;
                Ok(LpOutcome::Optimal {
                    objective: sol.objective(),
                    values: read.iter().map(|&v| sol.var_value(v)).collect(),
                })
            }
            Err(microlp::Error::Infeasible) => Ok(LpOutcome::Infeasible),
            Err(e) => Err(Error::Solver(e.to_string())),
        }
    }
}
