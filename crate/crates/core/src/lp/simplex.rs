//! Bounded-variable primal revised simplex.
//!
//! Every row gets a logical variable `s_i = a_iᵀx` carrying the row bounds,
//! so the working system is `[A | −I] (x, s) = 0` with bounds on all columns
//! and the all-logical basis as the starting point. Phase 1 minimises the sum
//! of bound violations of the basic variables (the cost vector is rebuilt
//! every iteration); phase 2 minimises the scaled objective. Pricing is
//! Dantzig's rule with a Harris two-pass ratio test, falling back to Bland's
//! rule with an exact ratio test after `stall_threshold` consecutive
//! degenerate pivots.

use log::debug;

use super::lu::LuFactors;
use super::scaling::Scaling;
use super::{LpError, LpProblem, LpSolution, LpSolver, LpStatus, SolverOptions};

/// Smallest |alpha| accepted as a pivot.
const PIVOT_TOL: f64 = 1e-9;
/// Harris bound relaxation in scaled units.
const HARRIS_TOL: f64 = 1e-9;
/// Objective decrease below which a pivot counts as degenerate.
const PROGRESS_TOL: f64 = 1e-12;
/// Refactorisations allowed when checking a terminal state.
const MAX_VERIFY: usize = 8;

/// The built-in reference solver.
#[derive(Debug, Clone, Copy, Default)]
pub struct RevisedSimplex;

impl LpSolver for RevisedSimplex {
    fn solve(&self, problem: &LpProblem, options: &SolverOptions) -> Result<LpSolution, LpError> {
        problem.validate()?;
        let mut engine = Engine::new(problem, options);
        let status = engine.run();
        Ok(engine.into_solution(problem, status))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum VarStatus {
    Basic(usize),
    AtLower,
    AtUpper,
    /// Nonbasic free variable held at zero.
    Zero,
}

enum Step {
    Flip,
    Pivot { pos: usize, to_upper: bool, theta: f64 },
    Unbounded,
}

struct Engine {
    n: usize,
    m: usize,
    scaling: Scaling,
    obj_scale: f64,
    col_start: Vec<usize>,
    entries: Vec<(usize, f64)>,
    cost: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    x: Vec<f64>,
    status: Vec<VarStatus>,
    basis: Vec<usize>,
    lu: LuFactors,
    feas_tol: f64,
    opt_tol: f64,
    options: SolverOptions,
    iterations: usize,
    // scratch
    row_work: Vec<f64>,
    pos_work: Vec<f64>,
    alpha: Vec<f64>,
    y: Vec<f64>,
}

fn pow2(x: f64) -> f64 {
    2f64.powi(x.log2().round() as i32)
}

impl Engine {
    fn new(problem: &LpProblem, options: &SolverOptions) -> Self {
        let n = problem.num_vars();
        let m = problem.num_rows();

        let mut columns: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for t in &problem.matrix {
            columns[t.col].push((t.row, t.value));
        }
        for col in &mut columns {
            col.sort_by_key(|e| e.0);
            col.dedup_by(|later, first| {
                if later.0 == first.0 {
                    first.1 += later.1;
                    true
                } else {
                    false
                }
            });
            col.retain(|e| e.1 != 0.0);
        }

        let scaling = if options.scaling {
            Scaling::geometric(m, &columns)
        } else {
            Scaling::identity(m, n)
        };

        let total = n + m;
        let mut col_start = Vec::with_capacity(total + 1);
        let mut entries = Vec::with_capacity(problem.matrix.len() + m);
        col_start.push(0);
        for (j, col) in columns.iter().enumerate() {
            for &(i, v) in col {
                entries.push((i, v * scaling.row[i] * scaling.col[j]));
            }
            col_start.push(entries.len());
        }
        for i in 0..m {
            entries.push((i, -1.0));
            col_start.push(entries.len());
        }

        let mut cost = vec![0.0; total];
        let mut max_cost: f64 = 0.0;
        for j in 0..n {
            cost[j] = problem.objective[j] * scaling.col[j];
            max_cost = max_cost.max(cost[j].abs());
        }
        let obj_scale = if max_cost > 0.0 { pow2(1.0 / max_cost) } else { 1.0 };
        for c in cost.iter_mut().take(n) {
            *c *= obj_scale;
        }

        let mut lower = vec![0.0; total];
        let mut upper = vec![0.0; total];
        for j in 0..n {
            lower[j] = problem.var_bounds[j].lower / scaling.col[j];
            upper[j] = problem.var_bounds[j].upper / scaling.col[j];
        }
        for i in 0..m {
            lower[n + i] = problem.row_bounds[i].lower * scaling.row[i];
            upper[n + i] = problem.row_bounds[i].upper * scaling.row[i];
        }

        let mut x = vec![0.0; total];
        let mut status = vec![VarStatus::Zero; total];
        for j in 0..n {
            let (l, u) = (lower[j], upper[j]);
            let (value, st) = match (l.is_finite(), u.is_finite()) {
                (true, true) if u.abs() < l.abs() => (u, VarStatus::AtUpper),
                (true, _) => (l, VarStatus::AtLower),
                (false, true) => (u, VarStatus::AtUpper),
                (false, false) => (0.0, VarStatus::Zero),
            };
            x[j] = value;
            status[j] = st;
        }
        let basis: Vec<usize> = (n..total).collect();
        for (p, &v) in basis.iter().enumerate() {
            status[v] = VarStatus::Basic(p);
        }

        let identity_cols: Vec<&[(usize, f64)]> =
            (0..m).map(|i| &entries[col_start[n + i]..col_start[n + i + 1]]).collect();
        let lu = LuFactors::factorize(m, &identity_cols).expect("logical basis is nonsingular");

        let mut engine = Engine {
            n,
            m,
            scaling,
            obj_scale,
            col_start,
            entries,
            cost,
            lower,
            upper,
            x,
            status,
            basis,
            lu,
            feas_tol: options.tol_feas * 0.1,
            opt_tol: options.tol_opt,
            options: *options,
            iterations: 0,
            row_work: vec![0.0; m],
            pos_work: vec![0.0; m],
            alpha: vec![0.0; m],
            y: vec![0.0; m],
        };
        engine.recompute_basics();
        engine
    }

    fn column(&self, j: usize) -> &[(usize, f64)] {
        &self.entries[self.col_start[j]..self.col_start[j + 1]]
    }

    fn is_fixed(&self, j: usize) -> bool {
        self.lower[j] == self.upper[j]
    }

    /// Solves `B x_B = −N x_N` from scratch with the current factors.
    fn recompute_basics(&mut self) {
        let total = self.n + self.m;
        self.row_work.iter_mut().for_each(|v| *v = 0.0);
        for j in 0..total {
            if matches!(self.status[j], VarStatus::Basic(_)) {
                continue;
            }
            let xj = self.x[j];
            if xj != 0.0 {
                for e in self.col_start[j]..self.col_start[j + 1] {
                    let (i, a) = self.entries[e];
                    self.row_work[i] -= a * xj;
                }
            }
        }
        let mut out = std::mem::take(&mut self.pos_work);
        self.lu.ftran(&mut self.row_work, &mut out);
        for (p, &v) in self.basis.iter().enumerate() {
            self.x[v] = out[p];
        }
        self.pos_work = out;
    }

    fn refactor(&mut self) {
        loop {
            let cols: Vec<&[(usize, f64)]> = self
                .basis
                .iter()
                .map(|&v| &self.entries[self.col_start[v]..self.col_start[v + 1]])
                .collect();
            match LuFactors::factorize(self.m, &cols) {
                Ok(lu) => {
                    self.lu = lu;
                    break;
                }
                Err(singular) => {
                    debug!("singular basis: replacing {} columns", singular.positions.len());
                    for (&pos, &row) in singular.positions.iter().zip(&singular.free_rows) {
                        let old = self.basis[pos];
                        let logical = self.n + row;
                        self.make_nonbasic_at_nearest_bound(old);
                        self.basis[pos] = logical;
                        self.status[logical] = VarStatus::Basic(pos);
                    }
                }
            }
        }
        self.recompute_basics();
    }

    fn make_nonbasic_at_nearest_bound(&mut self, j: usize) {
        let (l, u, v) = (self.lower[j], self.upper[j], self.x[j]);
        let (value, st) = match (l.is_finite(), u.is_finite()) {
            (true, true) if (u - v).abs() < (v - l).abs() => (u, VarStatus::AtUpper),
            (true, _) => (l, VarStatus::AtLower),
            (false, true) => (u, VarStatus::AtUpper),
            (false, false) => (0.0, VarStatus::Zero),
        };
        self.x[j] = value;
        self.status[j] = st;
    }

    fn infeasibility(&self, v: usize) -> f64 {
        let xv = self.x[v];
        if xv < self.lower[v] - self.feas_tol {
            self.lower[v] - xv
        } else if xv > self.upper[v] + self.feas_tol {
            xv - self.upper[v]
        } else {
            0.0
        }
    }

    /// Fills `self.y` with simplex multipliers for the given phase and
    /// reports whether any basic variable is infeasible.
    fn compute_duals(&mut self) -> bool {
        let mut c = std::mem::take(&mut self.pos_work);
        let mut infeasible = false;
        for (p, &v) in self.basis.iter().enumerate() {
            let xv = self.x[v];
            c[p] = if xv < self.lower[v] - self.feas_tol {
                infeasible = true;
                -1.0
            } else if xv > self.upper[v] + self.feas_tol {
                infeasible = true;
                1.0
            } else {
                0.0
            };
        }
        if !infeasible {
            for (p, &v) in self.basis.iter().enumerate() {
                c[p] = self.cost[v];
            }
        }
        let mut y = std::mem::take(&mut self.y);
        self.lu.btran(&mut c, &mut y);
        self.y = y;
        self.pos_work = c;
        infeasible
    }

    fn reduced_cost(&self, j: usize, phase_one: bool) -> f64 {
        let mut d = if phase_one { 0.0 } else { self.cost[j] };
        for &(i, a) in self.column(j) {
            d -= a * self.y[i];
        }
        d
    }

    /// Picks an entering variable and its direction of motion, skipping
    /// the columns in `exclude`.
    fn price(&self, phase_one: bool, bland: bool, exclude: &[usize]) -> Option<(usize, f64, f64)> {
        let total = self.n + self.m;
        let mut best: Option<(usize, f64, f64)> = None;
        for j in 0..total {
            let st = self.status[j];
            if matches!(st, VarStatus::Basic(_)) || self.is_fixed(j) || exclude.contains(&j) {
                continue;
            }
            let d = self.reduced_cost(j, phase_one);
            let dir = match st {
                VarStatus::AtLower if d < -self.opt_tol => 1.0,
                VarStatus::AtUpper if d > self.opt_tol => -1.0,
                VarStatus::Zero if d.abs() > self.opt_tol => -d.signum(),
                _ => continue,
            };
            if bland {
                return Some((j, dir, d));
            }
            if best.map_or(true, |(_, _, bd)| d.abs() > bd.abs()) {
                best = Some((j, dir, d));
            }
        }
        best
    }

    /// Step length at which basic position `p` reaches a bound when it moves
    /// at `rate` per unit step, with bounds relaxed by `slack`.
    fn limit(&self, p: usize, rate: f64, slack: f64) -> Option<(f64, bool)> {
        let v = self.basis[p];
        let (xv, l, u) = (self.x[v], self.lower[v], self.upper[v]);
        if rate < 0.0 {
            if xv > u + self.feas_tol {
                Some(((xv - u + slack) / -rate, true))
            } else if xv >= l - self.feas_tol && l.is_finite() {
                Some(((xv - l + slack) / -rate, false))
            } else {
                None
            }
        } else if xv < l - self.feas_tol {
            Some(((l - xv + slack) / rate, false))
        } else if xv <= u + self.feas_tol && u.is_finite() {
            Some(((u - xv + slack) / rate, true))
        } else {
            None
        }
    }

    fn ratio_test(&self, q: usize, dir: f64, bland: bool) -> Step {
        let flip = self.upper[q] - self.lower[q];
        let mut chosen: Option<(usize, bool, f64)> = None;
        if bland {
            let mut best_theta = f64::INFINITY;
            for p in 0..self.m {
                let a = self.alpha[p];
                if a.abs() <= PIVOT_TOL {
                    continue;
                }
                if let Some((theta, to_upper)) = self.limit(p, -dir * a, 0.0) {
                    let theta = theta.max(0.0);
                    let better = match chosen {
                        None => true,
                        Some((cp, _, _)) => {
                            theta < best_theta - 1e-12
                                || (theta <= best_theta + 1e-12 && self.basis[p] < self.basis[cp])
                        }
                    };
                    if better {
                        best_theta = best_theta.min(theta);
                        chosen = Some((p, to_upper, theta));
                    }
                }
            }
        } else {
            let mut theta_max = f64::INFINITY;
            for p in 0..self.m {
                let a = self.alpha[p];
                if a.abs() <= PIVOT_TOL {
                    continue;
                }
                if let Some((theta, _)) = self.limit(p, -dir * a, HARRIS_TOL) {
                    theta_max = theta_max.min(theta);
                }
            }
            if theta_max.is_finite() {
                let mut best_alpha = 0.0;
                for p in 0..self.m {
                    let a = self.alpha[p];
                    if a.abs() <= PIVOT_TOL {
                        continue;
                    }
                    if let Some((theta, to_upper)) = self.limit(p, -dir * a, 0.0) {
                        if theta <= theta_max && a.abs() > best_alpha {
                            best_alpha = a.abs();
                            chosen = Some((p, to_upper, theta.max(0.0)));
                        }
                    }
                }
            }
        }
        match chosen {
            Some((_, _, theta)) if flip <= theta => Step::Flip,
            Some((pos, to_upper, theta)) => Step::Pivot { pos, to_upper, theta },
            None if flip.is_finite() => Step::Flip,
            None => Step::Unbounded,
        }
    }

    fn load_alpha(&mut self, q: usize) {
        self.row_work.iter_mut().for_each(|v| *v = 0.0);
        for e in self.col_start[q]..self.col_start[q + 1] {
            let (i, a) = self.entries[e];
            self.row_work[i] += a;
        }
        let mut alpha = std::mem::take(&mut self.alpha);
        self.lu.ftran(&mut self.row_work, &mut alpha);
        self.alpha = alpha;
    }

    fn move_basics(&mut self, dir: f64, theta: f64) {
        if theta == 0.0 {
            return;
        }
        for p in 0..self.m {
            let a = self.alpha[p];
            if a != 0.0 {
                let v = self.basis[p];
                self.x[v] -= dir * a * theta;
            }
        }
    }

    fn run(&mut self) -> LpStatus {
        let mut degenerate_run = 0usize;
        let mut bland = false;
        let mut verifications = 0usize;
        let mut rejected: Vec<usize> = Vec::new();
        let mut feasible_at: Option<usize> = None;

        loop {
            if self.iterations >= self.options.max_iterations {
                return LpStatus::IterationLimit;
            }
            if self.lu.num_updates() >= self.options.refactor_interval {
                self.refactor();
            }
            let phase_one = self.compute_duals();
            if !phase_one && feasible_at.is_none() {
                feasible_at = Some(self.iterations);
                debug!("primal feasible after {} iterations", self.iterations);
            }
            let Some((q, dir, d)) = self.price(phase_one, bland, &rejected) else {
                if self.lu.num_updates() > 0 && verifications < MAX_VERIFY {
                    verifications += 1;
                    rejected.clear();
                    self.refactor();
                    continue;
                }
                return if phase_one { LpStatus::Infeasible } else { LpStatus::Optimal };
            };

            self.load_alpha(q);
            match self.ratio_test(q, dir, bland) {
                Step::Unbounded => {
                    if phase_one {
                        // Numerically empty direction; try the next candidate.
                        rejected.push(q);
                        continue;
                    }
                    if self.lu.num_updates() > 0 && verifications < MAX_VERIFY {
                        verifications += 1;
                        self.refactor();
                        continue;
                    }
                    return LpStatus::Unbounded;
                }
                Step::Flip => {
                    let theta = self.upper[q] - self.lower[q];
                    self.move_basics(dir, theta);
                    if dir > 0.0 {
                        self.x[q] = self.upper[q];
                        self.status[q] = VarStatus::AtUpper;
                    } else {
                        self.x[q] = self.lower[q];
                        self.status[q] = VarStatus::AtLower;
                    }
                    degenerate_run = 0;
                    bland = false;
                }
                Step::Pivot { pos, to_upper, theta } => {
                    if (theta * d).abs() > PROGRESS_TOL {
                        degenerate_run = 0;
                        bland = false;
                    } else {
                        degenerate_run += 1;
                        if degenerate_run >= self.options.stall_threshold && !bland {
                            debug!("stall after {} degenerate pivots; using Bland's rule", degenerate_run);
                            bland = true;
                        }
                    }
                    self.move_basics(dir, theta);
                    self.x[q] += dir * theta;
                    let leaving = self.basis[pos];
                    if to_upper {
                        self.x[leaving] = self.upper[leaving];
                        self.status[leaving] = VarStatus::AtUpper;
                    } else {
                        self.x[leaving] = self.lower[leaving];
                        self.status[leaving] = VarStatus::AtLower;
                    }
                    self.basis[pos] = q;
                    self.status[q] = VarStatus::Basic(pos);
                    let alpha = std::mem::take(&mut self.alpha);
                    self.lu.update(pos, &alpha);
                    self.alpha = alpha;
                    rejected.clear();
                }
            }
            self.iterations += 1;
        }
    }

    fn into_solution(mut self, problem: &LpProblem, status: LpStatus) -> LpSolution {
        let n = self.n;
        let primal: Vec<f64> = (0..n).map(|j| self.x[j] * self.scaling.col[j]).collect();
        let duals = if status == LpStatus::Optimal {
            let phase_one = self.compute_duals();
            debug_assert!(!phase_one);
            (0..self.m).map(|i| self.y[i] * self.scaling.row[i] / self.obj_scale).collect()
        } else {
            vec![0.0; self.m]
        };
        let worst = (0..self.n + self.m).map(|v| self.infeasibility(v)).fold(0.0, f64::max);
        debug!(
            "simplex finished: {:?} after {} iterations, max scaled infeasibility {:e}",
            status, self.iterations, worst
        );
        LpSolution {
            status,
            objective_value: problem.objective_value(&primal),
            primal,
            duals,
            iterations: self.iterations,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lp::{check_solution, Bounds};

    fn solve(lp: &LpProblem) -> LpSolution {
        RevisedSimplex.solve(lp, &SolverOptions::default()).unwrap()
    }

    #[test]
    fn single_active_bound() {
        let mut lp = LpProblem::new();
        lp.add_var("x", Bounds::at_least(1.0), 1.0);
        let sol = solve(&lp);
        assert_eq!(sol.status, LpStatus::Optimal);
        assert_eq!(sol.primal, vec![1.0]);
        assert_eq!(sol.objective_value, 1.0);
    }

    #[test]
    fn symmetric_facet_objective() {
        let mut lp = LpProblem::new();
        let x = lp.add_var("x", Bounds::NON_NEGATIVE, -1.0);
        let y = lp.add_var("y", Bounds::NON_NEGATIVE, -1.0);
        lp.add_row("cap", Bounds::at_most(1.0), &[(x, 1.0), (y, 1.0)]);
        let sol = solve(&lp);
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!((sol.objective_value + 1.0).abs() < 1e-12);
        let report = check_solution(&lp, &sol, 1e-9).unwrap();
        assert!(report.within_tolerance, "{report:?}");
    }

    #[test]
    fn contradictory_bounds_via_row_are_infeasible() {
        let mut lp = LpProblem::new();
        let x = lp.add_var("x", Bounds::at_most(0.0), 0.0);
        lp.add_row("lb", Bounds::at_least(1.0), &[(x, 1.0)]);
        assert_eq!(solve(&lp).status, LpStatus::Infeasible);
    }

    #[test]
    fn unbounded_ray() {
        let mut lp = LpProblem::new();
        lp.add_var("x", Bounds::NON_NEGATIVE, -1.0);
        assert_eq!(solve(&lp).status, LpStatus::Unbounded);

        let mut lp = LpProblem::new();
        let x = lp.add_var("x", Bounds::NON_NEGATIVE, -1.0);
        let y = lp.add_var("y", Bounds::NON_NEGATIVE, 0.0);
        lp.add_row("r", Bounds::at_most(1.0), &[(x, 1.0), (y, -1.0)]);
        assert_eq!(solve(&lp).status, LpStatus::Unbounded);
    }

    #[test]
    fn free_variables_and_equalities() {
        // min x + 2y  s.t. x + y = 3, x - y >= -1, x free, y in [0, 10]
        let mut lp = LpProblem::new();
        let x = lp.add_var("x", Bounds::FREE, 1.0);
        let y = lp.add_var("y", Bounds::new(0.0, 10.0), 2.0);
        lp.add_row("sum", Bounds::fixed(3.0), &[(x, 1.0), (y, 1.0)]);
        lp.add_row("diff", Bounds::at_least(-1.0), &[(x, 1.0), (y, -1.0)]);
        let sol = solve(&lp);
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!((sol.primal[0] - 3.0).abs() < 1e-12);
        assert!(sol.primal[1].abs() < 1e-12);
        let report = check_solution(&lp, &sol, 1e-9).unwrap();
        assert!(report.within_tolerance, "{report:?}");
        assert!(report.max_dual_infeasibility < 1e-12);
    }

    #[test]
    fn ranged_row_and_bound_flip() {
        // max x + y with 1 <= x - y <= 2, x in [0, 4], y in [0, 5]
        let mut lp = LpProblem::new();
        let x = lp.add_var("x", Bounds::new(0.0, 4.0), -1.0);
        let y = lp.add_var("y", Bounds::new(0.0, 5.0), -1.0);
        lp.add_row("range", Bounds::new(1.0, 2.0), &[(x, 1.0), (y, -1.0)]);
        let sol = solve(&lp);
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!((sol.objective_value + 7.0).abs() < 1e-12, "{}", sol.objective_value);
    }

    #[test]
    fn empty_problem_is_optimal() {
        let sol = solve(&LpProblem::new());
        assert_eq!(sol.status, LpStatus::Optimal);
        assert_eq!(sol.objective_value, 0.0);
    }

    #[test]
    fn malformed_problem_is_rejected() {
        let mut lp = LpProblem::new();
        lp.add_var("x", Bounds::new(1.0, 0.0), 1.0);
        assert!(RevisedSimplex.solve(&lp, &SolverOptions::default()).is_err());
    }

    #[test]
    fn iteration_limit_is_a_status() {
        let mut lp = LpProblem::new();
        let x = lp.add_var("x", Bounds::NON_NEGATIVE, -1.0);
        let y = lp.add_var("y", Bounds::NON_NEGATIVE, -1.0);
        lp.add_row("a", Bounds::at_most(4.0), &[(x, 1.0), (y, 2.0)]);
        lp.add_row("b", Bounds::at_most(5.0), &[(x, 3.0), (y, 1.0)]);
        let options = SolverOptions { max_iterations: 0, ..SolverOptions::default() };
        let sol = RevisedSimplex.solve(&lp, &options).unwrap();
        assert_eq!(sol.status, LpStatus::IterationLimit);
    }
}
