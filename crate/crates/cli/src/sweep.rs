//! Cross-product parameter sweeps over at most two axes.

use std::collections::BTreeSet;

use rayon::prelude::*;
use serde_json::{json, Value};

use crate::commands::{execute, Op, Report};
use crate::config::{check_key, RawConfig};
use crate::error::CliError;
use crate::output::{num, Table};

struct Axis {
    path: String,
    values: Vec<f64>,
    unit: Option<String>,
}

fn axis(cfg: &RawConfig, n: u8) -> Result<Option<Axis>, CliError> {
    let Some(path) = cfg.string(&format!("sweep.axis{n}")) else {
        if cfg.contains(&format!("sweep.grid{n}")) {
            return Err(CliError::Config(format!("sweep.grid{n} given without sweep.axis{n}")));
        }
        return Ok(None);
    };
    if path.starts_with("sweep.") || path.starts_with("run.") {
        return Err(CliError::Config(format!("`{path}` cannot be swept")));
    }
    check_key(path)?;
    let (values, unit) = cfg.raw_grid(&format!("sweep.grid{n}"))?;
    Ok(Some(Axis { path: path.to_string(), values, unit }))
}

fn cell(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::Bool(b) => (*b as u8).to_string(),
        Value::Number(n) => n.as_f64().map(num).unwrap_or_else(|| n.to_string()),
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

/// Runs `op` at every grid point. Rows come out in lexicographic grid
/// order (first axis slowest); failed points keep their row with the
/// message in the `error` column.
pub fn run_sweep(op: Op, cfg: &RawConfig) -> Result<Report, CliError> {
    let a1 = axis(cfg, 1)?.ok_or_else(|| CliError::Config("sweep needs sweep.axis1".into()))?;
    let a2 = axis(cfg, 2)?;
    if a2.as_ref().is_some_and(|a| a.path == a1.path) {
        return Err(CliError::Config("sweep axes must differ".into()));
    }
    let axes: Vec<&Axis> = std::iter::once(&a1).chain(a2.as_ref()).collect();
    let mut points: Vec<Vec<f64>> = a1.values.iter().map(|&v| vec![v]).collect();
    if let Some(a2) = &a2 {
        points = points.into_iter().flat_map(|p| a2.values.iter().map(move |&v| [p.clone(), vec![v]].concat())).collect();
    }

    let results: Vec<Result<Report, CliError>> = points
        .par_iter()
        .map(|pt| {
            let mut c = cfg.clone();
            for (a, &v) in axes.iter().zip(pt) {
                let text = match &a.unit {
                    Some(u) => format!("{v} {u}"),
                    None => format!("{v}"),
                };
                c.set_value(&a.path, &text)?;
            }
            execute(op, &c)
        })
        .collect();

    // Config errors are the same at every point, so they abort the sweep.
    if let Some(Err(e @ CliError::Config(_))) = results.iter().find(|r| matches!(r, Err(CliError::Config(_)))) {
        return Err(CliError::Config(e.to_string()));
    }

    let columns: BTreeSet<&String> = results.iter().flatten().flat_map(|r| r.scalars.keys()).collect();
    let mut header: Vec<&str> = axes.iter().map(|a| a.path.as_str()).collect();
    header.extend(columns.iter().map(|s| s.as_str()));
    header.push("error");
    let mut t = Table::new("sweep.csv", &header);
    let mut failed = 0usize;
    for (pt, res) in points.iter().zip(&results) {
        let mut row: Vec<String> = pt.iter().map(|&v| num(v)).collect();
        match res {
            Ok(r) => {
                row.extend(columns.iter().map(|k| r.scalars.get(*k).map(cell).unwrap_or_default()));
                row.push(String::new());
            }
            Err(e) => {
                failed += 1;
                row.extend(columns.iter().map(|_| String::new()));
                row.push(format!("{}: {}", e.kind(), e.to_string().replace([',', '\n'], ";")));
            }
        }
        t.push(row);
    }

    let mut r = Report::default();
    r.scalars.insert("points".into(), json!(points.len()));
    r.scalars.insert("failed".into(), json!(failed));
    r.details.insert(
        "axes".into(),
        Value::Array(axes.iter().map(|a| json!({ "path": a.path, "unit": a.unit, "values": a.values })).collect()),
    );
    r.tables.push(t);
    Ok(r)
}
