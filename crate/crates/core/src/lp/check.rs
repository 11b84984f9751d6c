use serde::{Deserialize, Serialize};

use super::{Bounds, LpError, LpProblem, LpSolution};

/// Residuals of a candidate solution, evaluated directly on the unscaled
/// problem data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    /// Largest amount by which a row activity leaves its bounds.
    pub max_primal_residual: f64,
    /// Largest amount by which a variable leaves its bounds.
    pub max_bound_violation: f64,
    /// `|cᵀx − dual objective|`, offsets included on both sides.
    pub duality_gap: f64,
    /// `duality_gap / (1 + |cᵀx|)`.
    pub relative_gap: f64,
    /// Largest multiplier whose sign asks for a bound that does not exist.
    pub max_dual_infeasibility: f64,
    /// Whether every residual is within the tolerance passed in.
    pub within_tolerance: bool,
}

/// Contribution of one multiplier to the dual objective. The bound paired
/// with the multiplier's sign is used; when that bound is infinite the
/// primal value stands in and the multiplier is counted as dual infeasible.
fn dual_term(multiplier: f64, bounds: &Bounds, primal: f64) -> (f64, f64) {
    if multiplier > 0.0 {
        if bounds.lower.is_finite() {
            (multiplier * bounds.lower, 0.0)
        } else {
            (multiplier * primal, multiplier)
        }
    } else if multiplier < 0.0 {
        if bounds.upper.is_finite() {
            (multiplier * bounds.upper, 0.0)
        } else {
            (multiplier * primal, -multiplier)
        }
    } else {
        (0.0, 0.0)
    }
}

/// Evaluates primal feasibility and the duality gap of `solution`.
///
/// `tol` bounds the primal residuals and the relative gap for the
/// `within_tolerance` flag. The duals are taken as given; reduced costs are
/// recomputed from them.
pub fn check_solution(
    problem: &LpProblem,
    solution: &LpSolution,
    tol: f64,
) -> Result<ResidualReport, LpError> {
    let n = problem.num_vars();
    let m = problem.num_rows();
    if solution.primal.len() != n {
        return Err(LpError::DimensionMismatch(format!(
            "primal has {} entries, problem has {n} variables",
            solution.primal.len()
        )));
    }
    if solution.duals.len() != m {
        return Err(LpError::DimensionMismatch(format!(
            "duals have {} entries, problem has {m} rows",
            solution.duals.len()
        )));
    }
    let x = &solution.primal;
    let activity = problem.row_activity(x);

    let max_primal_residual = activity
        .iter()
        .zip(&problem.row_bounds)
        .map(|(a, b)| b.violation(*a))
        .fold(0.0, f64::max);
    let max_bound_violation =
        x.iter().zip(&problem.var_bounds).map(|(v, b)| b.violation(*v)).fold(0.0, f64::max);

    let mut reduced = problem.objective.clone();
    for t in &problem.matrix {
        reduced[t.col] -= t.value * solution.duals[t.row];
    }

    let mut dual_objective = problem.objective_offset;
    let mut max_dual_infeasibility: f64 = 0.0;
    for i in 0..m {
        let (term, infeas) = dual_term(solution.duals[i], &problem.row_bounds[i], activity[i]);
        dual_objective += term;
        max_dual_infeasibility = max_dual_infeasibility.max(infeas);
    }
    for j in 0..n {
        let (term, infeas) = dual_term(reduced[j], &problem.var_bounds[j], x[j]);
        dual_objective += term;
        max_dual_infeasibility = max_dual_infeasibility.max(infeas);
    }

    let primal_objective = problem.objective_value(x);
    let duality_gap = (primal_objective - dual_objective).abs();
    let relative_gap = duality_gap / (1.0 + primal_objective.abs());
    Ok(ResidualReport {
        max_primal_residual,
        max_bound_violation,
        duality_gap,
        relative_gap,
        max_dual_infeasibility,
        within_tolerance: max_primal_residual <= tol
            && max_bound_violation <= tol
            && relative_gap <= tol,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lp::{LpStatus, Triplet};

    fn min_x_at_least_one() -> LpProblem {
        LpProblem {
            objective: vec![1.0],
            objective_offset: 0.0,
            matrix: vec![],
            row_bounds: vec![],
            var_bounds: vec![Bounds::at_least(1.0)],
            var_names: vec!["x".into()],
            row_names: vec![],
        }
    }

    fn solution(primal: Vec<f64>, duals: Vec<f64>) -> LpSolution {
        LpSolution { status: LpStatus::Optimal, primal, duals, objective_value: 0.0, iterations: 0 }
    }

    #[test]
    fn feasible_optimum_has_zero_residuals() {
        let lp = min_x_at_least_one();
        let report = check_solution(&lp, &solution(vec![1.0], vec![]), 1e-9).unwrap();
        assert_eq!(report.max_primal_residual, 0.0);
        assert_eq!(report.max_bound_violation, 0.0);
        assert_eq!(report.duality_gap, 0.0);
        assert!(report.within_tolerance);
    }

    #[test]
    fn half_is_half_a_unit_below_the_bound() {
        let lp = min_x_at_least_one();
        let report = check_solution(&lp, &solution(vec![0.5], vec![]), 1e-9).unwrap();
        assert_eq!(report.max_bound_violation, 0.5);
        assert!(!report.within_tolerance);
    }

    #[test]
    fn row_form_gap_uses_row_dual() {
        // min x s.t. x >= 1 as a row, x free. Dual y = 1, reduced cost 0.
        let lp = LpProblem {
            objective: vec![1.0],
            objective_offset: 0.0,
            matrix: vec![Triplet { row: 0, col: 0, value: 1.0 }],
            row_bounds: vec![Bounds::at_least(1.0)],
            var_bounds: vec![Bounds::FREE],
            var_names: vec![],
            row_names: vec![],
        };
        let report = check_solution(&lp, &solution(vec![1.0], vec![1.0]), 1e-9).unwrap();
        assert_eq!(report.duality_gap, 0.0);
        assert_eq!(report.max_dual_infeasibility, 0.0);
        let wrong_sign = check_solution(&lp, &solution(vec![1.0], vec![-1.0]), 1e-9).unwrap();
        assert!(wrong_sign.max_dual_infeasibility > 0.0);
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let lp = min_x_at_least_one();
        assert!(matches!(
            check_solution(&lp, &solution(vec![1.0, 2.0], vec![]), 1e-9),
            Err(LpError::DimensionMismatch(_))
        ));
        assert!(matches!(
            check_solution(&lp, &solution(vec![1.0], vec![0.0]), 1e-9),
            Err(LpError::DimensionMismatch(_))
        ));
    }
}
