//! Deterministic CSV and JSON output.
//!
//! CSV files start with `#` comment lines carrying the crate version and the
//! resolved configuration as compact JSON, followed by a header row. Floats
//! are written in shortest round-trip exponent form, so identical inputs
//! give byte-identical files. JSON objects use sorted keys.

use std::io::{self, Write};

use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::continuation::{BranchPoint, CurveEntry, ProfileEntry};
use crate::grid::RadialGrid;
use crate::solver::SolutionPair;
use crate::stability::{ProofProbe, SingularScanRow};
use crate::VERSION;

/// Shortest round-trip representation; `nan`, `inf`, `-inf` for
/// non-finite values.
pub fn format_float(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:e}")
    }
}

/// A header plus string rows.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Self { columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push_floats(&mut self, row: &[f64]) {
        self.rows.push(row.iter().map(|&x| format_float(x)).collect());
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    /// Writes `# ...` metadata lines, the header and the rows, LF-terminated.
    pub fn write_csv<W: Write>(&self, out: &mut W, config: &Value, notes: &[(&str, String)]) -> io::Result<()> {
        writeln!(out, "# version: {VERSION}")?;
        writeln!(out, "# config: {}", serde_json::to_string(config).map_err(io::Error::other)?)?;
        for (key, value) in notes {
            writeln!(out, "# {key}: {value}")?;
        }
        writeln!(out, "{}", self.columns.join(","))?;
        for row in &self.rows {
            writeln!(out, "{}", row.join(","))?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self, config: &Value, notes: &[(&str, String)]) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf, config, notes).expect("writing to memory");
        String::from_utf8(buf).expect("ascii output")
    }
}

/// Nodal values `r, u, v`.
pub fn snapshot_table(grid: &RadialGrid, sol: &SolutionPair) -> Table {
    let mut t = Table::new(&["r", "u", "v"]);
    for ((r, u), v) in grid.nodes().iter().zip(&sol.u).zip(&sol.v) {
        t.push_floats(&[*r, *u, *v]);
    }
    t
}

/// Metadata notes describing a snapshot.
pub fn snapshot_notes(grid: &RadialGrid, sol: &SolutionPair) -> Vec<(&'static str, String)> {
    vec![
        ("N", format_float(grid.n_dim())),
        ("m", grid.cells().to_string()),
        ("lambda", format_float(sol.lambda)),
        ("gamma", format_float(sol.gamma)),
        ("residual", format_float(sol.residual_norm)),
    ]
}

pub fn branch_table(sigma: f64, points: &[BranchPoint]) -> Table {
    let mut t = Table::new(&["sigma", "lambda", "gamma", "sup_u", "sup_v", "mu1"]);
    for p in points {
        t.push_floats(&[sigma, p.lambda, p.gamma, p.sup_u, p.sup_v, p.mu1]);
    }
    t
}

/// One row per accepted point: `lambda, mu1, eta, comparison_violation`.
pub fn stability_table(rows: &[(f64, f64, f64, f64)]) -> Table {
    let mut t = Table::new(&["lambda", "mu1", "eta", "comparison_violation"]);
    for &(l, m, e, c) in rows {
        t.push_floats(&[l, m, e, c]);
    }
    t
}

/// Curve rows; a `status` column is added when any entry failed.
pub fn curve_table(entries: &[CurveEntry]) -> Table {
    let with_status = entries.iter().any(|e| e.error.is_some());
    let mut cols = vec!["sigma", "lambda_star", "gamma_star", "bracket"];
    if with_status {
        cols.push("status");
    }
    let mut t = Table::new(&cols);
    for e in entries {
        let mut row: Vec<String> =
            [e.sigma, e.lambda_star, e.gamma_star, e.bracket].iter().map(|&x| format_float(x)).collect();
        if with_status {
            row.push(match &e.error {
                None => "ok".into(),
                Some(msg) => csv_text(msg),
            });
        }
        t.push(row);
    }
    t
}

pub fn profile_table(entries: &[ProfileEntry]) -> Table {
    let mut t = Table::new(&["epsilon", "lambda", "sup_u", "sup_v", "status"]);
    for e in entries {
        let mut row: Vec<String> = [e.epsilon, e.lambda, e.sup_u, e.sup_v].iter().map(|&x| format_float(x)).collect();
        row.push(e.error.as_deref().map_or_else(|| "ok".to_string(), csv_text));
        t.push(row);
    }
    t
}

pub fn scan_table(rows: &[SingularScanRow]) -> Table {
    let mut t = Table::new(&["N", "mu1", "residual_norm"]);
    for r in rows {
        t.push_floats(&[r.n_dim, r.mu1, r.residual_norm]);
    }
    t
}

/// Free text made safe for an unquoted CSV cell.
fn csv_text(s: &str) -> String {
    s.chars().map(|c| if matches!(c, ',' | '\n' | '\r' | '"') { ';' } else { c }).collect()
}

/// Probe record `{"alpha", "ineq8": [lhs, rhs], "hoelder": [lhs, rhs], "I", "J"}`.
pub fn probe_json(p: &ProofProbe) -> Value {
    json!({
        "alpha": p.alpha,
        "ineq8": [p.ineq8_lhs, p.ineq8_rhs],
        "hoelder": [p.hoelder_lhs, p.hoelder_rhs],
        "I": p.i,
        "J": p.j,
        "alpha_in_window": p.alpha_in_window,
        "theta": p.theta_values,
    })
}

/// `payload` with `version` and `config` keys added, pretty-printed with a
/// trailing newline.
pub fn json_document<T: Serialize>(payload: &T, config: &Value) -> serde_json::Result<String> {
    let mut map = match serde_json::to_value(payload)? {
        Value::Object(m) => m,
        other => {
            let mut m = Map::new();
            m.insert("result".into(), other);
            m
        }
    };
    map.insert("version".into(), Value::String(VERSION.into()));
    map.insert("config".into(), config.clone());
    let mut s = serde_json::to_string_pretty(&Value::Object(map))?;
    s.push('\n');
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip() {
        for x in [0.0, -0.0, 1.0, 2.5, 1e-300, 6.02e23, std::f64::consts::PI, -1.234_567_890_123_456_7e-8] {
            let s = format_float(x);
            assert_eq!(s.parse::<f64>().unwrap().to_bits(), x.to_bits(), "{s}");
        }
        assert_eq!(format_float(f64::NAN), "nan");
        assert_eq!(format_float(f64::NEG_INFINITY), "-inf");
    }

    #[test]
    fn csv_layout() {
        let mut t = Table::new(&["a", "b"]);
        t.push_floats(&[1.0, 0.5]);
        let s = t.to_csv_string(&json!({"k": 1}), &[("N", "2".into())]);
        let want = format!("# version: {VERSION}\n# config: {{\"k\":1}}\n# N: 2\na,b\n1e0,5e-1\n");
        assert_eq!(s, want);
    }

    #[test]
    fn curve_status_column_only_on_failure() {
        let ok = CurveEntry { sigma: 1.0, lambda_star: 2.0, gamma_star: 2.0, bracket: 1e-9, error: None };
        assert_eq!(curve_table(std::slice::from_ref(&ok)).columns.len(), 4);
        let bad = CurveEntry { error: Some("no, never".into()), ..ok.clone() };
        let t = curve_table(&[ok, bad]);
        assert_eq!(t.columns.len(), 5);
        assert_eq!(t.rows[1][4], "no; never");
    }

    #[test]
    fn json_document_has_metadata_and_sorted_keys() {
        let s = json_document(&json!({"z": 1, "a": 2}), &json!({"dim": 3})).unwrap();
        let v: Value = serde_json::from_str(&s).unwrap();
        assert_eq!(v["version"], VERSION);
        assert_eq!(v["config"]["dim"], 3);
        assert!(s.find("\"a\"").unwrap() < s.find("\"z\"").unwrap());
        assert!(s.ends_with('\n'));
    }
}
