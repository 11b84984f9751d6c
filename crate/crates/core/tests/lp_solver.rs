mod support;

use heatgrid::lp::mps::{write_mps, MpsNames};
use heatgrid::lp::{check_solution, solve, Bounds, LpProblem, LpStatus, SolverOptions};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use support::{mps_reader, vertex_oracle};

fn optimal(lp: &LpProblem) -> heatgrid::lp::LpSolution {
    let sol = solve(lp, &SolverOptions::default()).unwrap();
    assert_eq!(sol.status, LpStatus::Optimal);
    sol
}

#[test]
fn five_by_four_random_lps_match_vertex_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0504);
    for case in 0..100 {
        let lp = vertex_oracle::random_lp(&mut rng, 5, 4);
        let expected = vertex_oracle::vertex_minimum(&lp).expect("constructed feasible");
        let sol = optimal(&lp);
        assert!(
            (sol.objective_value - expected).abs() <= 1e-7,
            "case {case}: simplex {} vs oracle {expected}",
            sol.objective_value
        );
        let report = check_solution(&lp, &sol, 1e-7).unwrap();
        assert!(report.within_tolerance, "case {case}: {report:?}");
    }
}

#[test]
fn bland_fallback_still_reaches_the_optimum() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let options = SolverOptions { stall_threshold: 0, ..SolverOptions::default() };
    for _ in 0..40 {
        let lp = vertex_oracle::random_lp(&mut rng, 6, 5);
        let expected = vertex_oracle::vertex_minimum(&lp).unwrap();
        let sol = solve(&lp, &options).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!((sol.objective_value - expected).abs() <= 1e-7);
    }
}

#[test]
fn unscaled_solve_agrees() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let options = SolverOptions { scaling: false, ..SolverOptions::default() };
    for _ in 0..40 {
        let lp = vertex_oracle::random_lp(&mut rng, 6, 5);
        let scaled = optimal(&lp);
        let plain = solve(&lp, &options).unwrap();
        assert_eq!(plain.status, LpStatus::Optimal);
        assert!((plain.objective_value - scaled.objective_value).abs() <= 1e-7);
    }
}

#[test]
fn infeasible_box_and_row() {
    let mut lp = LpProblem::new();
    let x = lp.add_var("x", Bounds::at_least(1.0), 1.0);
    lp.add_row("cap", Bounds::at_most(0.0), &[(x, 1.0)]);
    assert_eq!(solve(&lp, &SolverOptions::default()).unwrap().status, LpStatus::Infeasible);
}

#[test]
fn unbounded_below() {
    let mut lp = LpProblem::new();
    lp.add_var("x", Bounds::NON_NEGATIVE, -1.0);
    assert_eq!(solve(&lp, &SolverOptions::default()).unwrap().status, LpStatus::Unbounded);
}

#[test]
fn solves_are_deterministic() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let lp = vertex_oracle::random_lp(&mut rng, 8, 6);
    let a = solve(&lp, &SolverOptions::default()).unwrap();
    let b = solve(&lp, &SolverOptions::default()).unwrap();
    assert_eq!(a, b);
}

#[test]
fn mps_export_agrees_with_microlp_on_random_lps() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xa11ce);
    for names in [MpsNames::Generated, MpsNames::Original] {
        for _ in 0..30 {
            let mut lp = vertex_oracle::random_lp(&mut rng, 8, 6);
            lp.objective_offset = 2.5;
            let mut buf = Vec::new();
            write_mps(&lp, "rand", names, &mut buf).unwrap();
            let model = mps_reader::parse(std::str::from_utf8(&buf).unwrap()).unwrap();
            let theirs = model.solve_with_microlp().unwrap();
            let ours = optimal(&lp).objective_value;
            assert!((theirs - ours).abs() <= 1e-5 * (1.0 + ours.abs()), "{theirs} vs {ours}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn objective_scaling_scales_the_optimum(seed in any::<u64>(), lambda in 0.01f64..100.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let lp = vertex_oracle::random_lp(&mut rng, 8, 6);
        let base = optimal(&lp);
        let mut scaled = lp.clone();
        scaled.objective.iter_mut().for_each(|c| *c *= lambda);
        let sol = optimal(&scaled);
        let want = lambda * base.objective_value;
        prop_assert!((sol.objective_value - want).abs() <= 1e-9 * want.abs().max(1.0),
            "{} vs {}", sol.objective_value, want);
        // the original optimum stays optimal for the scaled problem
        let at_base = scaled.objective_value(&base.primal);
        prop_assert!((at_base - want).abs() <= 1e-9 * want.abs().max(1.0));
    }

    #[test]
    fn duplicate_rows_do_not_move_the_optimum(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let lp = vertex_oracle::random_lp(&mut rng, 8, 6);
        let base = optimal(&lp).objective_value;
        let mut dup = lp.clone();
        let row = (seed as usize) % lp.num_rows();
        let terms: Vec<_> = lp.matrix.iter().filter(|t| t.row == row)
            .map(|t| (heatgrid::lp::VarId(t.col), t.value)).collect();
        dup.add_row("dup", lp.row_bounds[row], &terms);
        let again = optimal(&dup).objective_value;
        prop_assert!((again - base).abs() <= 1e-7 * base.abs().max(1.0), "{again} vs {base}");
    }

    #[test]
    fn optimal_solutions_pass_the_residual_check(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let lp = vertex_oracle::random_lp(&mut rng, 8, 6);
        let options = SolverOptions::default();
        let sol = optimal(&lp);
        let report = check_solution(&lp, &sol, options.tol_feas).unwrap();
        prop_assert!(report.max_primal_residual <= options.tol_feas);
        prop_assert!(report.max_bound_violation <= options.tol_feas);
        prop_assert!(report.relative_gap <= options.tol_gap, "{report:?}");
    }
}
