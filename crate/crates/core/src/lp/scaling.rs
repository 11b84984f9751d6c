//! Geometric-mean equilibration with power-of-two factors.
//!
//! Row `i` is multiplied by `row[i]` and column `j` by `col[j]`, so the
//! scaled variable is `x'_j = x_j / col[j]`. Factors are rounded to powers of
//! two so that scaling and unscaling are exact in floating point.

const PASSES: usize = 8;

#[derive(Debug, Clone)]
pub(crate) struct Scaling {
    pub row: Vec<f64>,
    pub col: Vec<f64>,
}

fn pow2(x: f64) -> f64 {
    if !x.is_finite() || x <= 0.0 {
        1.0
    } else {
        2f64.powi(x.log2().round() as i32)
    }
}

impl Scaling {
    pub(crate) fn identity(m: usize, n: usize) -> Self {
        Scaling { row: vec![1.0; m], col: vec![1.0; n] }
    }

    /// Computes factors for a column-major matrix given as `(row, value)`
    /// lists per column.
    pub(crate) fn geometric(m: usize, columns: &[Vec<(usize, f64)>]) -> Self {
        let n = columns.len();
        let mut scaling = Scaling::identity(m, n);
        for _ in 0..PASSES {
            let mut row_min = vec![f64::INFINITY; m];
            let mut row_max = vec![0.0f64; m];
            for (j, col) in columns.iter().enumerate() {
                for &(i, v) in col {
                    let a = (v * scaling.row[i] * scaling.col[j]).abs();
                    row_min[i] = row_min[i].min(a);
                    row_max[i] = row_max[i].max(a);
                }
            }
            let mut changed = false;
            for i in 0..m {
                if row_max[i] > 0.0 {
                    let f = pow2(1.0 / (row_min[i] * row_max[i]).sqrt());
                    if f != 1.0 {
                        changed = true;
                        scaling.row[i] *= f;
                    }
                }
            }
            for (j, col) in columns.iter().enumerate() {
                let mut lo = f64::INFINITY;
                let mut hi: f64 = 0.0;
                for &(i, v) in col {
                    let a = (v * scaling.row[i] * scaling.col[j]).abs();
                    lo = lo.min(a);
                    hi = hi.max(a);
                }
                if hi > 0.0 {
                    let f = pow2(1.0 / (lo * hi).sqrt());
                    if f != 1.0 {
                        changed = true;
                        scaling.col[j] *= f;
                    }
                }
            }
            if !changed {
                break;
            }
        }
        scaling
    }
}
