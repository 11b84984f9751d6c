//! Linear programs in bounded row form and the solvers that consume them.
//!
//! A problem is
//!
//! ```text
//! min  cᵀx + offset
//! s.t. row_lower ≤ A x ≤ row_upper
//!      var_lower ≤ x   ≤ var_upper
//! ```
//!
//! with `A` held as row-major triplets. Either side of any bound pair may be
//! infinite. Duals follow the convention `d = c − Aᵀy`, so a binding `≤` row
//! of a minimisation carries `y ≤ 0`.

mod check;
mod lu;
pub mod mps;
mod scaling;
mod simplex;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use check::{check_solution, ResidualReport};
pub use simplex::RevisedSimplex;

/// Errors raised by the LP layer. These signal caller bugs, never model
/// outcomes: infeasibility and unboundedness are reported in [`LpStatus`].
#[derive(Debug, Error, PartialEq)]
pub enum LpError {
    #[error("malformed problem: {0}")]
    MalformedProblem(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
}

/// A closed interval, possibly unbounded on either side.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub lower: f64,
    pub upper: f64,
}

impl Bounds {
    pub const FREE: Bounds = Bounds { lower: f64::NEG_INFINITY, upper: f64::INFINITY };
    pub const NON_NEGATIVE: Bounds = Bounds { lower: 0.0, upper: f64::INFINITY };

    pub fn new(lower: f64, upper: f64) -> Self {
        Bounds { lower, upper }
    }

    pub fn fixed(value: f64) -> Self {
        Bounds { lower: value, upper: value }
    }

    pub fn at_most(upper: f64) -> Self {
        Bounds { lower: f64::NEG_INFINITY, upper }
    }

    pub fn at_least(lower: f64) -> Self {
        Bounds { lower, upper: f64::INFINITY }
    }

    /// Distance by which `value` lies outside the interval (0 if inside).
    pub fn violation(&self, value: f64) -> f64 {
        if value < self.lower {
            self.lower - value
        } else if value > self.upper {
            value - self.upper
        } else {
            0.0
        }
    }
}

/// One nonzero of the constraint matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Triplet {
    pub row: usize,
    pub col: usize,
    pub value: f64,
}

/// A linear program. Immutable once handed to a solver; safe to share
/// across threads.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LpProblem {
    pub objective: Vec<f64>,
    /// Constant added to the objective value (not seen by the optimiser).
    pub objective_offset: f64,
    /// Row-major triplets. Duplicate `(row, col)` entries are summed.
    pub matrix: Vec<Triplet>,
    pub row_bounds: Vec<Bounds>,
    pub var_bounds: Vec<Bounds>,
    pub var_names: Vec<String>,
    pub row_names: Vec<String>,
}

/// Handle to a column created through [`LpProblem::add_var`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VarId(pub usize);

/// Handle to a row created through [`LpProblem::add_row`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RowId(pub usize);

impl LpProblem {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn num_rows(&self) -> usize {
        self.row_bounds.len()
    }

    pub fn add_var(&mut self, name: impl Into<String>, bounds: Bounds, cost: f64) -> VarId {
        self.objective.push(cost);
        self.var_bounds.push(bounds);
        self.var_names.push(name.into());
        VarId(self.objective.len() - 1)
    }

    pub fn add_row(
        &mut self,
        name: impl Into<String>,
        bounds: Bounds,
        terms: &[(VarId, f64)],
    ) -> RowId {
        let row = self.row_bounds.len();
        self.row_bounds.push(bounds);
        self.row_names.push(name.into());
        for &(var, value) in terms {
            if value != 0.0 {
                self.matrix.push(Triplet { row, col: var.0, value });
            }
        }
        RowId(row)
    }

    /// Checks structural invariants: index ranges, ordered bounds, no NaN.
    pub fn validate(&self) -> Result<(), LpError> {
        let n = self.num_vars();
        let m = self.num_rows();
        if self.var_bounds.len() != n {
            return Err(LpError::MalformedProblem(format!(
                "{} variable bounds for {n} variables",
                self.var_bounds.len()
            )));
        }
        if !self.var_names.is_empty() && self.var_names.len() != n {
            return Err(LpError::MalformedProblem("variable name count mismatch".into()));
        }
        if !self.row_names.is_empty() && self.row_names.len() != m {
            return Err(LpError::MalformedProblem("row name count mismatch".into()));
        }
        if self.objective_offset.is_nan() {
            return Err(LpError::MalformedProblem("objective offset is NaN".into()));
        }
        for (j, c) in self.objective.iter().enumerate() {
            if !c.is_finite() {
                return Err(LpError::MalformedProblem(format!(
                    "objective coefficient of {} is {c}",
                    self.var_label(j)
                )));
            }
        }
        for t in &self.matrix {
            if t.row >= m || t.col >= n {
                return Err(LpError::MalformedProblem(format!(
                    "triplet ({}, {}) outside {m}x{n}",
                    t.row, t.col
                )));
            }
            if !t.value.is_finite() {
                return Err(LpError::MalformedProblem(format!(
                    "coefficient at ({}, {}) is {}",
                    self.row_label(t.row),
                    self.var_label(t.col),
                    t.value
                )));
            }
        }
        let check = |b: &Bounds, what: String| -> Result<(), LpError> {
            if b.lower.is_nan()
                || b.upper.is_nan()
                || b.lower > b.upper
                || b.lower == f64::INFINITY
                || b.upper == f64::NEG_INFINITY
            {
                return Err(LpError::MalformedProblem(format!(
                    "invalid bounds [{}, {}] on {what}",
                    b.lower, b.upper
                )));
            }
            Ok(())
        };
        for (j, b) in self.var_bounds.iter().enumerate() {
            check(b, self.var_label(j))?;
        }
        for (i, b) in self.row_bounds.iter().enumerate() {
            check(b, self.row_label(i))?;
        }
        Ok(())
    }

    pub fn var_label(&self, j: usize) -> String {
        self.var_names.get(j).cloned().unwrap_or_else(|| format!("x{j}"))
    }

    pub fn row_label(&self, i: usize) -> String {
        self.row_names.get(i).cloned().unwrap_or_else(|| format!("r{i}"))
    }

    /// Row activities `A x`.
    pub fn row_activity(&self, x: &[f64]) -> Vec<f64> {
        let mut activity = vec![0.0; self.num_rows()];
        for t in &self.matrix {
            activity[t.row] += t.value * x[t.col];
        }
        activity
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective.iter().zip(x).map(|(c, v)| c * v).sum::<f64>() + self.objective_offset
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LpSolution {
    pub status: LpStatus,
    pub primal: Vec<f64>,
    /// Row multipliers with `d = c − Aᵀy`.
    pub duals: Vec<f64>,
    /// Includes the problem's objective offset.
    pub objective_value: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    /// Primal feasibility tolerance on bounds and row activities.
    pub tol_feas: f64,
    /// Reduced-cost optimality tolerance.
    pub tol_opt: f64,
    /// Relative duality-gap tolerance used by [`check_solution`] callers.
    pub tol_gap: f64,
    pub max_iterations: usize,
    /// Non-improving iterations tolerated before switching to Bland's rule.
    pub stall_threshold: usize,
    /// Basis updates between refactorisations.
    pub refactor_interval: usize,
    /// Equilibrate rows and columns before solving.
    pub scaling: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tol_feas: 1e-7,
            tol_opt: 1e-9,
            tol_gap: 1e-6,
            max_iterations: 200_000,
            stall_threshold: 400,
            refactor_interval: 80,
            scaling: true,
        }
    }
}

/// Anything that can minimise an [`LpProblem`]. External solvers may be
/// adapted behind this trait.
pub trait LpSolver {
    fn solve(&self, problem: &LpProblem, options: &SolverOptions) -> Result<LpSolution, LpError>;
}

/// Solves with the built-in [`RevisedSimplex`].
pub fn solve(problem: &LpProblem, options: &SolverOptions) -> Result<LpSolution, LpError> {
    RevisedSimplex.solve(problem, options)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validate_rejects_bad_index_and_bounds() {
        let mut lp = LpProblem::new();
        let x = lp.add_var("x", Bounds::NON_NEGATIVE, 1.0);
        lp.add_row("r", Bounds::at_least(1.0), &[(x, 1.0)]);
        assert!(lp.validate().is_ok());

        let mut bad = lp.clone();
        bad.matrix.push(Triplet { row: 0, col: 3, value: 1.0 });
        assert!(matches!(bad.validate(), Err(LpError::MalformedProblem(_))));

        let mut bad = lp.clone();
        bad.var_bounds[0] = Bounds::new(2.0, 1.0);
        assert!(matches!(bad.validate(), Err(LpError::MalformedProblem(_))));

        let mut bad = lp.clone();
        bad.objective[0] = f64::NAN;
        assert!(bad.validate().is_err());

        let mut bad = lp;
        bad.row_bounds[0] = Bounds::new(f64::NAN, 1.0);
        assert!(bad.validate().is_err());
    }

    #[test]
    fn add_row_drops_explicit_zeros() {
        let mut lp = LpProblem::new();
        let x = lp.add_var("x", Bounds::FREE, 0.0);
        let y = lp.add_var("y", Bounds::FREE, 0.0);
        lp.add_row("r", Bounds::fixed(0.0), &[(x, 0.0), (y, 2.0)]);
        assert_eq!(lp.matrix.len(), 1);
        assert_eq!(lp.row_activity(&[5.0, 1.5]), vec![3.0]);
    }
}
