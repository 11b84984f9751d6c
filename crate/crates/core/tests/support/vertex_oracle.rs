//! Brute-force LP oracle: enumerates every basic solution of a box-bounded
//! problem and keeps the best feasible one.

use heatgrid::lp::{Bounds, LpProblem};
use rand::Rng;

/// A random feasible, bounded LP: variables in finite boxes, rows built
/// around an interior point so the feasible set is nonempty.
pub fn random_lp<R: Rng>(rng: &mut R, max_vars: usize, max_rows: usize) -> LpProblem {
    let n = rng.gen_range(1..=max_vars);
    let m = rng.gen_range(1..=max_rows);
    let mut lp = LpProblem::new();
    let mut x0 = Vec::with_capacity(n);
    let vars: Vec<_> = (0..n)
        .map(|j| {
            let lower = if rng.gen_bool(0.7) { 0.0 } else { rng.gen_range(-5.0..0.0) };
            let upper = lower + rng.gen_range(0.5..10.0);
            x0.push(rng.gen_range(lower..upper));
            let cost = if rng.gen_bool(0.1) { 0.0 } else { rng.gen_range(-10.0..10.0) };
            lp.add_var(format!("x{j}"), Bounds::new(lower, upper), cost)
        })
        .collect();
    for i in 0..m {
        let mut terms = Vec::new();
        let mut activity = 0.0;
        for (j, &v) in vars.iter().enumerate() {
            if rng.gen_bool(0.7) {
                let a: f64 = rng.gen_range(-5.0..5.0);
                let a = (a * 4.0).round() / 4.0;
                if a != 0.0 {
                    terms.push((v, a));
                    activity += a * x0[j];
                }
            }
        }
        let slack_lo = rng.gen_range(0.0..3.0);
        let slack_hi = rng.gen_range(0.0..3.0);
        let bounds = match rng.gen_range(0..4) {
            0 => Bounds::at_most(activity + slack_hi),
            1 => Bounds::at_least(activity - slack_lo),
            2 => Bounds::new(activity - slack_lo, activity + slack_hi),
            _ => Bounds::fixed(activity),
        };
        lp.add_row(format!("r{i}"), bounds, &terms);
    }
    lp
}

/// Solves `a z = b` (square) by Gaussian elimination with partial pivoting.
fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let k = b.len();
    for col in 0..k {
        let piv = (col..k).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-10 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for r in col + 1..k {
            let f = a[r][col] / a[col][col];
            if f != 0.0 {
                for c in col..k {
                    a[r][c] -= f * a[col][c];
                }
                b[r] -= f * b[col];
            }
        }
    }
    let mut z = vec![0.0; k];
    for r in (0..k).rev() {
        let mut acc = b[r];
        for c in r + 1..k {
            acc -= a[r][c] * z[c];
        }
        z[r] = acc / a[r][r];
    }
    Some(z)
}

fn combinations(n: usize, k: usize, f: &mut impl FnMut(&[usize])) {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, f: &mut impl FnMut(&[usize])) {
        if cur.len() == k {
            f(cur);
            return;
        }
        for i in start..n {
            if n - i < k - cur.len() {
                break;
            }
            cur.push(i);
            rec(i + 1, n, k, cur, f);
            cur.pop();
        }
    }
    rec(0, n, k, &mut Vec::new(), f)
}

/// Minimum objective over all vertices, or `None` if no vertex is feasible.
///
/// A vertex fixes `n − k` variables at one of their bounds and makes `k`
/// rows active at one of their finite sides, with the remaining `k`
/// variables solved from the active rows.
pub fn vertex_minimum(lp: &LpProblem) -> Option<f64> {
    let n = lp.num_vars();
    let m = lp.num_rows();
    let mut dense = vec![vec![0.0; n]; m];
    for t in &lp.matrix {
        dense[t.row][t.col] += t.value;
    }
    let feasible = |x: &[f64]| -> bool {
        let scale = 1e-7;
        x.iter().zip(&lp.var_bounds).all(|(v, b)| b.violation(*v) <= scale)
            && dense.iter().zip(&lp.row_bounds).all(|(row, b)| {
                let act: f64 = row.iter().zip(x).map(|(a, v)| a * v).sum();
                b.violation(act) <= scale
            })
    };
    let mut best: Option<f64> = None;
    for k in 0..=m.min(n) {
        combinations(m, k, &mut |rows: &[usize]| {
            // each active row picks a side
            let sides: Vec<Vec<f64>> = rows
                .iter()
                .map(|&i| {
                    let b = lp.row_bounds[i];
                    let mut s = vec![];
                    if b.lower.is_finite() {
                        s.push(b.lower);
                    }
                    if b.upper.is_finite() && b.upper != b.lower {
                        s.push(b.upper);
                    }
                    s
                })
                .collect();
            if sides.iter().any(Vec::is_empty) {
                return;
            }
            combinations(n, k, &mut |basic: &[usize]| {
                let bound_vars: Vec<usize> = (0..n).filter(|j| !basic.contains(j)).collect();
                let nb = bound_vars.len();
                for side_mask in 0..(1usize << nb) {
                    let mut x = vec![0.0; n];
                    for (t, &j) in bound_vars.iter().enumerate() {
                        let b = lp.var_bounds[j];
                        x[j] = if side_mask >> t & 1 == 0 { b.lower } else { b.upper };
                    }
                    let mut side_idx = vec![0usize; k];
                    loop {
                        let a: Vec<Vec<f64>> = rows
                            .iter()
                            .map(|&i| basic.iter().map(|&j| dense[i][j]).collect())
                            .collect();
                        let rhs: Vec<f64> = rows
                            .iter()
                            .enumerate()
                            .map(|(r, &i)| {
                                let fixed: f64 =
                                    bound_vars.iter().map(|&j| dense[i][j] * x[j]).sum();
                                sides[r][side_idx[r]] - fixed
                            })
                            .collect();
                        if let Some(z) = solve_dense(a, rhs) {
                            let mut full = x.clone();
                            for (t, &j) in basic.iter().enumerate() {
                                full[j] = z[t];
                            }
                            if feasible(&full) {
                                let obj: f64 =
                                    full.iter().zip(&lp.objective).map(|(v, c)| v * c).sum::<f64>()
                                        + lp.objective_offset;
                                best = Some(best.map_or(obj, |b: f64| b.min(obj)));
                            }
                        }
                        // next side combination
                        let mut r = 0;
                        loop {
                            if r == k {
                                break;
                            }
                            side_idx[r] += 1;
                            if side_idx[r] < sides[r].len() {
                                break;
                            }
                            side_idx[r] = 0;
                            r += 1;
                        }
                        if r == k {
                            break;
                        }
                    }
                }
            });
        });
    }
    best
}
