//! Fixed-column MPS export for cross-checking with external solvers.

use std::fmt::Write;

use super::LinearProgram;

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

/// Renders `lp` as MPS. The objective is written as a minimisation of `−c`
/// (`OBJSENSE` is not part of fixed MPS); values carry 17 significant digits.
pub fn write_mps(lp: &LinearProgram, name: &str) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "NAME          {name}");
    out.push_str("ROWS\n N  COST\n");
    for i in 0..lp.rows.len() {
        let _ = writeln!(out, " L  R{i}");
    }
    out.push_str("COLUMNS\n");
    let mut columns: Vec<Vec<(usize, f64)>> = vec![Vec::new(); lp.num_vars()];
    for (i, row) in lp.rows.iter().enumerate() {
        for &(j, a) in &row.coeffs {
            columns[j].push((i, a));
        }
    }
    for (j, col) in columns.iter().enumerate() {
        let c = lp.objective[j];
        if c != 0.0 {
            let _ = writeln!(out, "    X{j:<8}  COST      {:>24}", num(-c));
        }
        for &(i, a) in col {
            let row = format!("R{i}");
            let _ = writeln!(out, "    X{j:<8}  {row:<8}  {:>24}", num(a));
        }
    }
    out.push_str("RHS\n");
    for (i, row) in lp.rows.iter().enumerate() {
        if row.rhs != 0.0 {
            let r = format!("R{i}");
            let _ = writeln!(out, "    RHS       {r:<8}  {:>24}", num(row.rhs));
        }
    }
    out.push_str("BOUNDS\n");
    for (j, &ub) in lp.upper.iter().enumerate() {
        if ub.is_finite() {
            let _ = writeln!(out, " UP BND       X{j:<8}  {:>24}", num(ub));
        }
    }
    out.push_str("ENDATA\n");
    out
}
