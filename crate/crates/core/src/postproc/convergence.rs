//! Empirical orders of convergence.

use std::fmt::Write as _;

use super::{FieldErrors, PerField, PostError};
use crate::assembly::Field;

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub h: f64,
    pub errors: FieldErrors,
    /// Only from the second row on.
    pub eoc_l2: Option<PerField>,
    pub eoc_h1: Option<PerField>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ConvergenceTable {
    pub rows: Vec<ConvergenceRow>,
}

/// `log(e_prev / e_cur) / log(h_prev / h_cur)`.
pub fn eoc_value(h_prev: f64, e_prev: f64, h_cur: f64, e_cur: f64) -> f64 {
    (e_prev / e_cur).ln() / (h_prev / h_cur).ln()
}

/// Builds the table from `(h, errors)` rows with strictly decreasing `h`.
pub fn eoc(rows: &[(f64, FieldErrors)]) -> Result<ConvergenceTable, PostError> {
    if rows.len() < 2 {
        return Err(PostError::Table(format!("need at least 2 rows, got {}", rows.len())));
    }
    for (i, (h, e)) in rows.iter().enumerate() {
        if !(*h > 0.0) {
            return Err(PostError::Table(format!("row {i}: mesh size {h} not positive")));
        }
        if e.l2.iter().chain(&e.h1).any(|v| !(*v > 0.0)) {
            return Err(PostError::Table(format!("row {i}: nonpositive error")));
        }
        if i > 0 && !(*h < rows[i - 1].0) {
            return Err(PostError::Table(format!("row {i}: mesh sizes must strictly decrease")));
        }
    }
    let mut out = Vec::with_capacity(rows.len());
    for (i, (h, e)) in rows.iter().enumerate() {
        let (eoc_l2, eoc_h1) = if i == 0 {
            (None, None)
        } else {
            let (hp, ep) = &rows[i - 1];
            (
                Some(std::array::from_fn(|k| eoc_value(*hp, ep.l2[k], *h, e.l2[k]))),
                Some(std::array::from_fn(|k| eoc_value(*hp, ep.h1[k], *h, e.h1[k]))),
            )
        };
        out.push(ConvergenceRow { h: *h, errors: *e, eoc_l2, eoc_h1 });
    }
    Ok(ConvergenceTable { rows: out })
}

impl ConvergenceTable {
    pub fn csv_header() -> String {
        let mut cols = vec!["h".to_string()];
        for (kind, _) in [("L2", 0), ("H1", 1)] {
            cols.extend(Field::ALL.iter().map(|f| format!("e_{}_{kind}", f.name())));
            cols.extend(Field::ALL.iter().map(|f| format!("eoc_{}_{kind}", f.name())));
        }
        cols.join(",")
    }

    /// CSV with one line per row; missing orders are left empty.
    pub fn to_csv(&self) -> String {
        let mut s = Self::csv_header();
        s.push('\n');
        for r in &self.rows {
            write!(s, "{:.17e}", r.h).unwrap();
            for (e, o) in [(&r.errors.l2, &r.eoc_l2), (&r.errors.h1, &r.eoc_h1)] {
                for v in e {
                    write!(s, ",{v:.17e}").unwrap();
                }
                for k in 0..5 {
                    match o {
                        Some(o) => write!(s, ",{:.6}", o[k]).unwrap(),
                        None => s.push(','),
                    }
                }
            }
            s.push('\n');
        }
        s
    }

    /// Smallest L² order of `f` over all rows that have one.
    pub fn min_eoc_l2(&self, f: Field) -> Option<f64> {
        self.rows.iter().filter_map(|r| r.eoc_l2.map(|o| o[f.index()])).reduce(f64::min)
    }
}
