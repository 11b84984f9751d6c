//! Sparse LU factorisation of simplex bases with product-form updates.
//!
//! The basis is factorised column by column (left-looking). Each column is
//! solved against the `L` built so far, then a pivot is chosen among the
//! not-yet-pivoted rows by threshold partial pivoting, preferring rows that
//! appear in few basis columns. Later basis changes are appended as eta
//! columns until the next refactorisation.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

/// Pivots smaller than this are treated as structurally singular.
const SINGULAR_TOL: f64 = 1e-11;
/// Candidate pivots must be at least this fraction of the column maximum.
const PIVOT_THRESHOLD: f64 = 0.1;
/// Eta entries below this magnitude are dropped.
const DROP_TOL: f64 = 1e-14;

const NONE: usize = usize::MAX;

/// Basis positions that could not be pivoted, paired with rows left without
/// a pivot. The caller swaps the offending columns for logicals on those rows.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Singular {
    pub positions: Vec<usize>,
    pub free_rows: Vec<usize>,
}

#[derive(Debug, Clone)]
struct Eta {
    pos: usize,
    pivot: f64,
    idx: Vec<usize>,
    val: Vec<f64>,
}

#[derive(Debug, Clone)]
pub(crate) struct LuFactors {
    m: usize,
    pivot_row: Vec<usize>,
    step_pos: Vec<usize>,
    l_start: Vec<usize>,
    l_idx: Vec<usize>,
    l_val: Vec<f64>,
    u_start: Vec<usize>,
    u_idx: Vec<usize>,
    u_val: Vec<f64>,
    u_diag: Vec<f64>,
    etas: Vec<Eta>,
    scratch: std::cell::RefCell<Vec<f64>>,
}

impl LuFactors {
    /// Factorises the `m × m` matrix whose column at basis position `p`
    /// is `columns[p]`, given as `(row, value)` pairs.
    pub(crate) fn factorize(m: usize, columns: &[&[(usize, f64)]]) -> Result<Self, Singular> {
        debug_assert_eq!(columns.len(), m);
        let mut row_count = vec![0usize; m];
        for col in columns {
            for &(r, _) in col.iter() {
                row_count[r] += 1;
            }
        }
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by_key(|&p| columns[p].len());

        let mut lu = LuFactors {
            m,
            pivot_row: Vec::with_capacity(m),
            step_pos: Vec::with_capacity(m),
            l_start: vec![0],
            l_idx: Vec::new(),
            l_val: Vec::new(),
            u_start: vec![0],
            u_idx: Vec::new(),
            u_val: Vec::new(),
            u_diag: Vec::with_capacity(m),
            etas: Vec::new(),
            scratch: std::cell::RefCell::new(vec![0.0; m]),
        };
        let mut row_step = vec![NONE; m];
        let mut x = vec![0.0; m];
        let mut in_pattern = vec![false; m];
        let mut in_heap = vec![false; m];
        let mut pattern: Vec<usize> = Vec::new();
        let mut heap: BinaryHeap<Reverse<usize>> = BinaryHeap::new();
        let mut singular = Vec::new();

        for &pos in &order {
            pattern.clear();
            for &(r, v) in columns[pos].iter() {
                if !in_pattern[r] {
                    in_pattern[r] = true;
                    pattern.push(r);
                }
                x[r] += v;
                let s = row_step[r];
                if s != NONE && !in_heap[s] {
                    in_heap[s] = true;
                    heap.push(Reverse(s));
                }
            }
            while let Some(Reverse(s)) = heap.pop() {
                in_heap[s] = false;
                let w = x[lu.pivot_row[s]];
                if w == 0.0 {
                    continue;
                }
                for e in lu.l_start[s]..lu.l_start[s + 1] {
                    let r = lu.l_idx[e];
                    if !in_pattern[r] {
                        in_pattern[r] = true;
                        pattern.push(r);
                    }
                    x[r] -= lu.l_val[e] * w;
                    let t = row_step[r];
                    if t != NONE && !in_heap[t] {
                        in_heap[t] = true;
                        heap.push(Reverse(t));
                    }
                }
            }

            let mut max_abs: f64 = 0.0;
            for &r in &pattern {
                if row_step[r] == NONE {
                    max_abs = max_abs.max(x[r].abs());
                }
            }
            if max_abs < SINGULAR_TOL {
                singular.push(pos);
                for &r in &pattern {
                    x[r] = 0.0;
                    in_pattern[r] = false;
                }
                continue;
            }
            let mut pivot = NONE;
            for &r in &pattern {
                if row_step[r] != NONE || x[r].abs() < PIVOT_THRESHOLD * max_abs {
                    continue;
                }
                let better = pivot == NONE
                    || row_count[r] < row_count[pivot]
                    || (row_count[r] == row_count[pivot] && x[r].abs() > x[pivot].abs());
                if better {
                    pivot = r;
                }
            }
            let step = lu.pivot_row.len();
            let diag = x[pivot];
            for &r in &pattern {
                let v = x[r];
                if v != 0.0 && r != pivot {
                    let s = row_step[r];
                    if s != NONE {
                        lu.u_idx.push(s);
                        lu.u_val.push(v);
                    } else {
                        lu.l_idx.push(r);
                        lu.l_val.push(v / diag);
                    }
                }
                x[r] = 0.0;
                in_pattern[r] = false;
            }
            lu.u_diag.push(diag);
            lu.u_start.push(lu.u_idx.len());
            lu.l_start.push(lu.l_idx.len());
            lu.pivot_row.push(pivot);
            lu.step_pos.push(pos);
            row_step[pivot] = step;
        }

        if singular.is_empty() {
            Ok(lu)
        } else {
            let free_rows = (0..m).filter(|&r| row_step[r] == NONE).collect();
            Err(Singular { positions: singular, free_rows })
        }
    }

    pub(crate) fn num_updates(&self) -> usize {
        self.etas.len()
    }

    /// Solves `B z = rhs`. `rhs` is indexed by row and consumed; the result
    /// is indexed by basis position.
    pub(crate) fn ftran(&self, rhs: &mut [f64], out: &mut [f64]) {
        let m = self.m;
        for s in 0..m {
            let w = rhs[self.pivot_row[s]];
            if w != 0.0 {
                for e in self.l_start[s]..self.l_start[s + 1] {
                    rhs[self.l_idx[e]] -= self.l_val[e] * w;
                }
            }
        }
        for k in (0..m).rev() {
            let r = self.pivot_row[k];
            let v = rhs[r] / self.u_diag[k];
            rhs[r] = 0.0;
            if v != 0.0 {
                for e in self.u_start[k]..self.u_start[k + 1] {
                    rhs[self.pivot_row[self.u_idx[e]]] -= self.u_val[e] * v;
                }
            }
            out[self.step_pos[k]] = v;
        }
        for eta in &self.etas {
            let zp = out[eta.pos];
            if zp != 0.0 {
                let zp = zp / eta.pivot;
                out[eta.pos] = zp;
                for (&i, &a) in eta.idx.iter().zip(&eta.val) {
                    out[i] -= a * zp;
                }
            }
        }
    }

    /// Solves `Bᵀ y = c`. `c` is indexed by basis position and consumed; the
    /// result is indexed by row.
    pub(crate) fn btran(&self, c: &mut [f64], out: &mut [f64]) {
        let m = self.m;
        for eta in self.etas.iter().rev() {
            let mut acc = c[eta.pos];
            for (&i, &a) in eta.idx.iter().zip(&eta.val) {
                acc -= a * c[i];
            }
            c[eta.pos] = acc / eta.pivot;
        }
        // Uᵀ in step order, then Lᵀ in reverse step order.
        let mut u = self.scratch.borrow_mut();
        for k in 0..m {
            let mut acc = c[self.step_pos[k]];
            for e in self.u_start[k]..self.u_start[k + 1] {
                acc -= self.u_val[e] * u[self.u_idx[e]];
            }
            u[k] = acc / self.u_diag[k];
        }
        for s in (0..m).rev() {
            let mut acc = u[s];
            for e in self.l_start[s]..self.l_start[s + 1] {
                acc -= self.l_val[e] * out[self.l_idx[e]];
            }
            out[self.pivot_row[s]] = acc;
        }
    }

    /// Records that the column at basis position `pos` was replaced by a
    /// column whose FTRAN image is `alpha` (indexed by position).
    pub(crate) fn update(&mut self, pos: usize, alpha: &[f64]) {
        let mut idx = Vec::new();
        let mut val = Vec::new();
        for (i, &a) in alpha.iter().enumerate() {
            if i != pos && a.abs() > DROP_TOL {
                idx.push(i);
                val.push(a);
            }
        }
        self.etas.push(Eta { pos, pivot: alpha[pos], idx, val });
    }

    #[cfg(test)]
    fn fill(&self) -> usize {
        self.l_idx.len() + self.u_idx.len() + self.m
    }
}
