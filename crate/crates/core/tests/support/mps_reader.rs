//! Minimal MPS reader that hands the model to `microlp`, used to cross-check
//! exported problems against a solver that shares no code with this crate.
//! Fields are split on whitespace, which covers both fixed and free MPS when
//! names contain no blanks.

use std::collections::HashMap;

#[derive(Debug, Default)]
pub struct MpsModel {
    pub name: String,
    pub objective_row: String,
    pub rows: Vec<(String, char)>,
    pub columns: Vec<String>,
    pub entries: Vec<(usize, usize, f64)>,
    pub objective: Vec<f64>,
    pub rhs: Vec<f64>,
    pub ranges: Vec<Option<f64>>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub objective_constant: f64,
}

pub fn parse(text: &str) -> Result<MpsModel, String> {
    let mut model = MpsModel::default();
    let mut row_index: HashMap<String, usize> = HashMap::new();
    let mut col_index: HashMap<String, usize> = HashMap::new();
    let mut section = String::new();
    for (lineno, line) in text.lines().enumerate() {
        if line.starts_with('*') || line.trim().is_empty() {
            continue;
        }
        if !line.starts_with(' ') {
            let mut parts = line.split_whitespace();
            section = parts.next().unwrap_or_default().to_string();
            if section == "NAME" {
                model.name = parts.next().unwrap_or_default().to_string();
            }
            continue;
        }
        let f: Vec<&str> = line.split_whitespace().collect();
        let err = || format!("line {}: cannot parse {line:?} in {section}", lineno + 1);
        let num = |s: &str| s.parse::<f64>().map_err(|_| err());
        match section.as_str() {
            "ROWS" => {
                let kind = f[0].chars().next().ok_or_else(err)?;
                if kind == 'N' && model.objective_row.is_empty() {
                    model.objective_row = f[1].to_string();
                    continue;
                }
                row_index.insert(f[1].to_string(), model.rows.len());
                model.rows.push((f[1].to_string(), kind));
                model.rhs.push(0.0);
                model.ranges.push(None);
            }
            "COLUMNS" => {
                let col = *col_index.entry(f[0].to_string()).or_insert_with(|| {
                    model.columns.push(f[0].to_string());
                    model.objective.push(0.0);
                    model.lower.push(0.0);
                    model.upper.push(f64::INFINITY);
                    model.columns.len() - 1
                });
                for pair in f[1..].chunks(2) {
                    let value = num(pair.get(1).ok_or_else(err)?)?;
                    if pair[0] == model.objective_row {
                        model.objective[col] += value;
                    } else if let Some(&row) = row_index.get(pair[0]) {
                        model.entries.push((row, col, value));
                    }
                }
            }
            "RHS" => {
                for pair in f[1..].chunks(2) {
                    let value = num(pair.get(1).ok_or_else(err)?)?;
                    if pair[0] == model.objective_row {
                        model.objective_constant = -value;
                    } else {
                        let row = *row_index.get(pair[0]).ok_or_else(err)?;
                        model.rhs[row] = value;
                    }
                }
            }
            "RANGES" => {
                for pair in f[1..].chunks(2) {
                    let value = num(pair.get(1).ok_or_else(err)?)?;
                    let row = *row_index.get(pair[0]).ok_or_else(err)?;
                    model.ranges[row] = Some(value);
                }
            }
            "BOUNDS" => {
                let col = *col_index.get(f[2]).ok_or_else(err)?;
                match f[0] {
                    "UP" => model.upper[col] = num(f[3])?,
                    "LO" => model.lower[col] = num(f[3])?,
                    "FX" => {
                        let v = num(f[3])?;
                        model.lower[col] = v;
                        model.upper[col] = v;
                    }
                    "FR" => {
                        model.lower[col] = f64::NEG_INFINITY;
                        model.upper[col] = f64::INFINITY;
                    }
                    "MI" => model.lower[col] = f64::NEG_INFINITY,
                    "PL" => model.upper[col] = f64::INFINITY,
                    _ => return Err(err()),
                }
            }
            _ => return Err(err()),
        }
    }
    Ok(model)
}

impl MpsModel {
    /// Row interval implied by type, RHS and RANGES.
    pub fn row_interval(&self, row: usize) -> (f64, f64) {
        let rhs = self.rhs[row];
        let (kind, range) = (self.rows[row].1, self.ranges[row]);
        match (kind, range) {
            ('E', None) => (rhs, rhs),
            ('E', Some(r)) if r >= 0.0 => (rhs, rhs + r),
            ('E', Some(r)) => (rhs + r, rhs),
            ('G', None) => (rhs, f64::INFINITY),
            ('G', Some(r)) => (rhs, rhs + r.abs()),
            ('L', None) => (f64::NEG_INFINITY, rhs),
            ('L', Some(r)) => (rhs - r.abs(), rhs),
            _ => (f64::NEG_INFINITY, f64::INFINITY),
        }
    }

    /// Minimises the model with `microlp` and returns the objective value
    /// including the constant term.
    pub fn solve_with_microlp(&self) -> Result<f64, String> {
        use microlp::{ComparisonOp, LinearExpr, OptimizationDirection, Problem};
        let mut problem = Problem::new(OptimizationDirection::Minimize);
        let vars: Vec<_> = (0..self.columns.len())
            .map(|j| problem.add_var(self.objective[j], (self.lower[j], self.upper[j])))
            .collect();
        let mut exprs: Vec<LinearExpr> = (0..self.rows.len()).map(|_| LinearExpr::empty()).collect();
        for &(row, col, value) in &self.entries {
            exprs[row].add(vars[col], value);
        }
        for (row, expr) in exprs.into_iter().enumerate() {
            let (lo, hi) = self.row_interval(row);
            if lo == hi {
                problem.add_constraint(expr, ComparisonOp::Eq, lo);
            } else {
                if lo.is_finite() {
                    problem.add_constraint(expr.clone(), ComparisonOp::Ge, lo);
                }
                if hi.is_finite() {
                    problem.add_constraint(expr, ComparisonOp::Le, hi);
                }
            }
        }
        let outcome = problem.solve().map_err(|e| format!("microlp: {e:?}"))?;
        let solution = outcome.into_solution().map_err(|_| "microlp interrupted".to_string())?;
        Ok(solution.objective() + self.objective_constant)
    }
}
