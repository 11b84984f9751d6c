//! MPS export for cross-checking against third-party solvers.
//!
//! [`MpsNames::Generated`] writes strict fixed-format MPS: fields start in
//! columns 2, 5, 15, 25, 40 and 50, names are at most 8 characters
//! (`R0000001`, `C0000001`, ...), numbers at most 12. The mapping back to
//! the model's row and column names is available from [`generated_names`].
//!
//! [`MpsNames::Original`] keeps the model's names. Fields stay on the fixed
//! column grid whenever they fit and are otherwise separated by two spaces,
//! which free-format MPS readers accept.
//!
//! The objective is the first `N` row, `COST`. A nonzero objective offset
//! is written as the negated RHS of that row. Rows with two distinct finite
//! bounds are `G` rows with a `RANGES` entry equal to `upper − lower`.

use std::collections::HashSet;
use std::io::{self, Write};

use super::{Bounds, LpProblem};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MpsNames {
    Generated,
    Original,
}

/// Row and column codes used by [`MpsNames::Generated`], in index order.
pub fn generated_names(problem: &LpProblem) -> (Vec<String>, Vec<String>) {
    let rows = (0..problem.num_rows()).map(|i| format!("R{:07}", i + 1)).collect();
    let cols = (0..problem.num_vars()).map(|j| format!("C{:07}", j + 1)).collect();
    (rows, cols)
}

/// Formats a value in at most 12 characters, keeping as many significant
/// digits as fit.
pub fn fixed_number(v: f64) -> String {
    let plain = format!("{v}");
    if plain.len() <= 12 {
        return plain;
    }
    for precision in (0..=15).rev() {
        let s = format!("{v:.precision$e}");
        if s.len() <= 12 {
            return s;
        }
    }
    format!("{v:.0e}")
}

fn free_number(v: f64) -> String {
    let plain = format!("{v}");
    if plain.len() <= 20 {
        plain
    } else {
        format!("{v:e}")
    }
}

struct Card<'a, W: Write> {
    out: &'a mut W,
    fixed: bool,
    line: String,
}

impl<'a, W: Write> Card<'a, W> {
    /// Writes one data card. `fields` are placed starting at columns
    /// 2, 5, 15, 25, 40 and 50 (1-based).
    fn write(&mut self, fields: &[&str]) -> io::Result<()> {
        const STARTS: [usize; 6] = [1, 4, 14, 24, 39, 49];
        self.line.clear();
        for (k, field) in fields.iter().enumerate() {
            if field.is_empty() {
                continue;
            }
            let start = STARTS[k];
            if self.line.len() < start {
                let pad = start - self.line.len();
                self.line.extend(std::iter::repeat(' ').take(pad));
            } else {
                debug_assert!(!self.fixed, "field overflow in fixed MPS: {field}");
                self.line.push_str("  ");
            }
            self.line.push_str(field);
        }
        writeln!(self.out, "{}", self.line)
    }
}

/// Writes `problem` in MPS format.
pub fn write_mps<W: Write>(
    problem: &LpProblem,
    model_name: &str,
    names: MpsNames,
    out: &mut W,
) -> io::Result<()> {
    problem
        .validate()
        .map_err(|e| io::Error::new(io::ErrorKind::InvalidInput, e.to_string()))?;
    let fixed = names == MpsNames::Generated;
    let (row_names, col_names) = match names {
        MpsNames::Generated => generated_names(problem),
        MpsNames::Original => (
            (0..problem.num_rows()).map(|i| problem.row_label(i)).collect(),
            (0..problem.num_vars()).map(|j| problem.var_label(j)).collect(),
        ),
    };
    for name in row_names.iter().chain(&col_names) {
        if name.is_empty() || name.chars().any(char::is_whitespace) {
            return Err(io::Error::new(
                io::ErrorKind::InvalidInput,
                format!("name {name:?} cannot be written to MPS"),
            ));
        }
    }
    let objective_name = {
        let taken: HashSet<&str> = row_names.iter().map(String::as_str).collect();
        let mut name = "COST".to_string();
        while taken.contains(name.as_str()) {
            name.push('_');
        }
        name
    };
    let num = |v: f64| if fixed { fixed_number(v) } else { free_number(v) };

    let model_name: String = model_name
        .chars()
        .map(|c| if c.is_whitespace() { '_' } else { c })
        .take(if fixed { 8 } else { usize::MAX })
        .collect();
    writeln!(out, "NAME          {model_name}")?;
    let mut card = Card { out, fixed, line: String::new() };

    writeln!(card.out, "ROWS")?;
    card.write(&["N", &objective_name])?;
    for (i, b) in problem.row_bounds.iter().enumerate() {
        let kind = row_kind(b);
        card.write(&[kind, &row_names[i]])?;
    }

    writeln!(card.out, "COLUMNS")?;
    let mut by_col: Vec<Vec<(usize, f64)>> = vec![Vec::new(); problem.num_vars()];
    for t in &problem.matrix {
        by_col[t.col].push((t.row, t.value));
    }
    for (j, entries) in by_col.iter_mut().enumerate() {
        entries.sort_by_key(|e| e.0);
        let mut merged: Vec<(usize, f64)> = Vec::with_capacity(entries.len());
        for &(i, v) in entries.iter() {
            match merged.last_mut() {
                Some(last) if last.0 == i => last.1 += v,
                _ => merged.push((i, v)),
            }
        }
        let c = problem.objective[j];
        if c != 0.0 {
            card.write(&["", &col_names[j], &objective_name, &num(c)])?;
        }
        for (i, v) in merged {
            if v != 0.0 {
                card.write(&["", &col_names[j], &row_names[i], &num(v)])?;
            }
        }
        if c == 0.0 && entries.is_empty() {
            // Empty columns still need a card to be declared.
            card.write(&["", &col_names[j], &objective_name, "0"])?;
        }
    }

    writeln!(card.out, "RHS")?;
    if problem.objective_offset != 0.0 {
        card.write(&["", "RHS", &objective_name, &num(-problem.objective_offset)])?;
    }
    for (i, b) in problem.row_bounds.iter().enumerate() {
        let rhs = match row_kind(b) {
            "E" | "G" => b.lower,
            "L" => b.upper,
            _ => 0.0,
        };
        if rhs != 0.0 {
            card.write(&["", "RHS", &row_names[i], &num(rhs)])?;
        }
    }

    let ranged: Vec<usize> = (0..problem.num_rows())
        .filter(|&i| {
            let b = &problem.row_bounds[i];
            b.lower.is_finite() && b.upper.is_finite() && b.lower != b.upper
        })
        .collect();
    if !ranged.is_empty() {
        writeln!(card.out, "RANGES")?;
        for i in ranged {
            let b = &problem.row_bounds[i];
            card.write(&["", "RNG", &row_names[i], &num(b.upper - b.lower)])?;
        }
    }

    writeln!(card.out, "BOUNDS")?;
    for (j, b) in problem.var_bounds.iter().enumerate() {
        let name = &col_names[j];
        match (b.lower.is_finite(), b.upper.is_finite()) {
            (false, false) => card.write(&["FR", "BND", name])?,
            (false, true) => {
                card.write(&["MI", "BND", name])?;
                card.write(&["UP", "BND", name, &num(b.upper)])?;
            }
            (true, false) => {
                if b.lower != 0.0 {
                    card.write(&["LO", "BND", name, &num(b.lower)])?;
                }
            }
            (true, true) if b.lower == b.upper => {
                card.write(&["FX", "BND", name, &num(b.lower)])?;
            }
            (true, true) => {
                if b.lower != 0.0 {
                    card.write(&["LO", "BND", name, &num(b.lower)])?;
                }
                card.write(&["UP", "BND", name, &num(b.upper)])?;
            }
        }
    }
    writeln!(card.out, "ENDATA")?;
    Ok(())
}

fn row_kind(b: &Bounds) -> &'static str {
    match (b.lower.is_finite(), b.upper.is_finite()) {
        (true, true) if b.lower == b.upper => "E",
        (true, _) => "G",
        (false, true) => "L",
        (false, false) => "N",
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> LpProblem {
        let mut lp = LpProblem::new();
        let x = lp.add_var("x", Bounds::new(0.0, 4.0), -1.0);
        let y = lp.add_var("y", Bounds::FREE, 2.5);
        let z = lp.add_var("z", Bounds::fixed(1.5), 0.0);
        lp.add_row("eq", Bounds::fixed(3.0), &[(x, 1.0), (y, 1.0)]);
        lp.add_row("ranged", Bounds::new(-1.0, 2.0), &[(x, 1.0), (z, -1.0)]);
        lp.add_row("le", Bounds::at_most(10.0), &[(y, 10416666.666666666)]);
        lp.objective_offset = 7.0;
        lp
    }

    #[test]
    fn fixed_layout_is_column_exact() {
        let mut buf = Vec::new();
        write_mps(&toy(), "toy", MpsNames::Generated, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "NAME          toy");
        assert_eq!(lines[1], "ROWS");
        assert_eq!(lines[2], " N  COST");
        assert_eq!(lines[3], " E  R0000001");
        assert_eq!(lines[4], " G  R0000002");
        assert_eq!(lines[5], " L  R0000003");
        assert!(text.contains("\n    C0000001  COST      -1\n"));
        assert!(text.contains("\n    C0000002  R0000003  1.04166667e7\n"));
        assert!(text.contains("\n    RHS       COST      -7\n"));
        assert!(text.contains("\n    RNG       R0000002  3\n"));
        assert!(text.contains("\n UP BND       C0000001  4\n"));
        assert!(text.contains("\n FR BND       C0000002\n"));
        assert!(text.contains("\n FX BND       C0000003  1.5\n"));
        assert_eq!(*lines.last().unwrap(), "ENDATA");
        for line in &lines {
            assert!(line.len() <= 61, "line too long: {line:?}");
        }
    }

    #[test]
    fn original_names_fall_back_to_free_spacing() {
        let mut lp = toy();
        lp.row_names[0] = "a_rather_long_row_name".into();
        let mut buf = Vec::new();
        write_mps(&lp, "toy model", MpsNames::Original, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("NAME          toy_model\n"));
        assert!(text.contains(" E  a_rather_long_row_name\n"));
        assert!(text.contains("    x         a_rather_long_row_name  1\n"));
    }

    #[test]
    fn numbers_fit_twelve_characters() {
        for v in [1.0, -0.25, 10416666.666666666, 1e-300, -123456.789012345, 9.746588693957115] {
            let s = fixed_number(v);
            assert!(s.len() <= 12, "{s}");
            let back: f64 = s.parse().unwrap();
            assert!((back - v).abs() <= 1e-6 * v.abs(), "{v} -> {s}");
        }
    }

    #[test]
    fn whitespace_in_names_is_rejected() {
        let mut lp = toy();
        lp.var_names[0] = "bad name".into();
        let mut buf = Vec::new();
        assert!(write_mps(&lp, "toy", MpsNames::Original, &mut buf).is_err());
    }
}
