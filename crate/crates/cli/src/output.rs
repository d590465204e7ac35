//! Tables, checks and the files they are written to.

use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Duration;

use fstar_core::grid::fmt_f64;
use fstar_core::GridFn;
use serde_json::{json, Map, Value};

use crate::config::Format;

/// Coordinates first, values last.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Self { name: name.into(), columns: columns.iter().map(|c| c.to_string()).collect(), rows: vec![] }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    /// Node coordinates followed by one column per value grid.
    pub fn from_grids(name: &str, value_names: &[&str], grids: &[&GridFn]) -> Self {
        let first = grids[0];
        let mut columns: Vec<String> = (0..first.ndim()).map(|i| format!("x{i}")).collect();
        if let Some((nx, ny)) = first.split() {
            columns = (0..nx).map(|i| format!("x{i}")).chain((0..ny).map(|i| format!("y{i}"))).collect();
        }
        columns.extend(value_names.iter().map(|s| s.to_string()));
        let rows = (0..first.len())
            .map(|k| {
                let mut r = first.coords(k);
                r.extend(grids.iter().map(|g| g.values()[k]));
                r
            })
            .collect();
        Self { name: name.into(), columns, rows }
    }

    pub fn write(&self, dir: &Path, format: Format) -> io::Result<PathBuf> {
        let path = dir.join(format!("{}.{}", self.name, match format {
            Format::Csv => "csv",
            Format::Json => "json",
        }));
        let mut w = BufWriter::new(fs::File::create(&path)?);
        match format {
            Format::Csv => {
                writeln!(w, "{}", self.columns.join(","))?;
                for r in &self.rows {
                    let cells: Vec<String> = r.iter().map(|v| fmt_f64(*v)).collect();
                    writeln!(w, "{}", cells.join(","))?;
                }
            }
            Format::Json => {
                let rows: Vec<Value> = self.rows.iter().map(|r| Value::Array(r.iter().map(|v| number(*v)).collect())).collect();
                let doc = json!({ "columns": self.columns, "rows": rows });
                serde_json::to_writer_pretty(&mut w, &doc)?;
                writeln!(w)?;
            }
        }
        w.flush()?;
        Ok(path)
    }
}

/// Finite values as JSON numbers; `inf`, `-inf` and `nan` as strings.
pub fn number(v: f64) -> Value {
    if v.is_finite() {
        // Round-trips through the 17-digit text form so output is stable.
        serde_json::from_str(&fmt_f64(v)).unwrap_or(Value::Null)
    } else {
        Value::String(fmt_f64(v))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    /// Signed distance from failing; negative means failed.
    pub margin: f64,
    pub detail: String,
}

impl Check {
    pub fn new(name: &str, pass: bool, margin: f64, detail: impl Into<String>) -> Self {
        Self { name: name.into(), pass, margin, detail: detail.into() }
    }

    /// Passes when `value ≤ bound`; the margin is `bound − value`.
    pub fn at_most(name: &str, value: f64, bound: f64, detail: impl Into<String>) -> Self {
        Self::new(name, value <= bound, bound - value, detail)
    }

    /// Passes when `value ≥ bound`; the margin is `value − bound`.
    pub fn at_least(name: &str, value: f64, bound: f64, detail: impl Into<String>) -> Self {
        Self::new(name, value >= bound, value - bound, detail)
    }

    /// A numerical failure turned into a failing check.
    pub fn error(name: &str, e: impl std::fmt::Display) -> Self {
        Self::new(name, false, f64::NEG_INFINITY, format!("error: {e}"))
    }
}

#[derive(Clone, Debug, Default)]
pub struct RunOutput {
    pub checks: Vec<Check>,
    pub tables: Vec<Table>,
    /// Extra JSON documents, written as `<name>.json`.
    pub reports: Vec<(String, Value)>,
}

impl RunOutput {
    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

/// Writes tables, reports, `summary.json` and `timings.json`. Everything
/// except the timings file is a function of the config and seed.
pub fn write_all(
    dir: &Path,
    format: Format,
    scenario: &str,
    subcommand: &str,
    seed: Option<u64>,
    out: &RunOutput,
    timings: &[(String, Duration)],
) -> io::Result<()> {
    fs::create_dir_all(dir)?;
    let mut files = Vec::new();
    for t in &out.tables {
        let p = t.write(dir, format)?;
        files.push(p.file_name().map(|f| f.to_string_lossy().into_owned()).unwrap_or_default());
    }
    for (name, doc) in &out.reports {
        let file = format!("{name}.json");
        write_json(&dir.join(&file), doc)?;
        files.push(file);
    }
    let checks: Vec<Value> = out
        .checks
        .iter()
        .map(|c| json!({ "name": c.name, "pass": c.pass, "margin": number(c.margin), "detail": c.detail }))
        .collect();
    let summary = json!({
        "scenario": scenario,
        "subcommand": subcommand,
        "seed": seed,
        "pass": out.pass(),
        "checks": checks,
        "tables": files,
    });
    write_json(&dir.join("summary.json"), &summary)?;
    let mut t = Map::new();
    for (k, d) in timings {
        t.insert(k.clone(), json!(d.as_secs_f64()));
    }
    write_json(&dir.join("timings.json"), &json!({ "scenario": scenario, "seconds": t }))
}

fn write_json(path: &Path, doc: &Value) -> io::Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    serde_json::to_writer_pretty(&mut w, doc)?;
    writeln!(w)?;
    w.flush()
}

#[cfg(test)]
mod tests {
    use super::*;
    use fstar_core::Axis;

    #[test]
    fn non_finite_numbers_become_strings() {
        assert_eq!(number(f64::INFINITY), json!("inf"));
        assert_eq!(number(f64::NEG_INFINITY), json!("-inf"));
        assert_eq!(number(0.5), json!(0.5));
    }

    #[test]
    fn grid_table_puts_coordinates_first() {
        let ax = Axis::new(0.0, 1.0, 3).unwrap();
        let g = GridFn::from_fn_split(vec![ax], vec![ax], |x, y| x[0] + y[0]).unwrap();
        let t = Table::from_grids("psi", &["value"], &[&g]);
        assert_eq!(t.columns, ["x0", "y0", "value"]);
        assert_eq!(t.rows[5], vec![0.5, 1.0, 1.5]);
    }
}
