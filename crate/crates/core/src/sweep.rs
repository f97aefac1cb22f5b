//! Parameter sweeps: a base run config, a Cartesian grid of overrides, one
//! simulation and classification per cell, and an aggregated verdict table.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::{parse_toml, SimulationConfig};
use crate::diagnostics::{classify, PulseReport};
use crate::error::{Error, Result};
use crate::output::{fmt_num, write_json, write_report, write_run, write_text, VERDICT_HEADER};
use crate::par;
use crate::solver::simulate;

/// Sweep file schema.
///
/// ```toml
/// base = "reference.toml"   # relative to the sweep file
/// [[axis]]
/// key = "params.alpha_h"
/// values = [0.0, 0.2]
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub base: String,
    pub axis: Vec<Axis>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Axis {
    /// Dotted path into the run config, e.g. `params.beta` or `t_end`.
    pub key: String,
    pub values: Vec<f64>,
}

impl Axis {
    fn leaf(&self) -> &str {
        self.key.rsplit('.').next().unwrap_or(&self.key)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    /// `leaf=value` pairs joined by commas, in axis order.
    pub key: String,
    pub values: Vec<f64>,
    pub config: SimulationConfig,
}

/// Reads a sweep file and the base config it points to.
pub fn load_sweep(path: &Path) -> Result<(SweepConfig, SimulationConfig)> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    let sweep: SweepConfig = parse_toml(&text, &path.display().to_string())?;
    if sweep.axis.is_empty() || sweep.axis.iter().any(|a| a.values.is_empty()) {
        return Err(Error::Config(format!("{}: axis: need at least one axis with values", path.display())));
    }
    let base_path = path.parent().unwrap_or(Path::new(".")).join(&sweep.base);
    let base = SimulationConfig::load(&base_path)?;
    Ok((sweep, base))
}

fn set_path(v: &mut serde_json::Value, key: &str, x: f64) -> Result<()> {
    let mut cur = v;
    let parts: Vec<&str> = key.split('.').collect();
    for (i, p) in parts.iter().enumerate() {
        let obj = cur.as_object_mut().ok_or_else(|| Error::Config(format!("axis key {key}: {p} is not a table")))?;
        if i + 1 == parts.len() {
            if !obj.contains_key(*p) {
                return Err(Error::Config(format!("axis key {key}: unknown field {p}")));
            }
            obj.insert((*p).to_string(), serde_json::json!(x));
            return Ok(());
        }
        cur = obj.get_mut(*p).ok_or_else(|| Error::Config(format!("axis key {key}: unknown field {p}")))?;
    }
    Ok(())
}

/// All cells of the Cartesian grid, sorted by key.
pub fn cells(sweep: &SweepConfig, base: &SimulationConfig) -> Result<Vec<Cell>> {
    let base_v = serde_json::to_value(base)?;
    let mut combos: Vec<Vec<f64>> = vec![vec![]];
    for a in &sweep.axis {
        combos = combos.into_iter().flat_map(|c| a.values.iter().map(move |&x| [c.clone(), vec![x]].concat())).collect();
    }
    let mut out = Vec::with_capacity(combos.len());
    for vals in combos {
        let mut v = base_v.clone();
        for (a, &x) in sweep.axis.iter().zip(&vals) {
            set_path(&mut v, &a.key, x)?;
        }
        let key: Vec<String> = sweep.axis.iter().zip(&vals).map(|(a, &x)| format!("{}={}", a.leaf(), fmt_num(x))).collect();
        let key = key.join(",");
        let config: SimulationConfig =
            serde_json::from_value(v).map_err(|e| Error::Config(format!("cell {key}: {e}")))?;
        config.validate().map_err(|e| Error::Config(format!("cell {key}: {e}")))?;
        out.push(Cell { key, values: vals, config });
    }
    out.sort_by(|a, b| a.key.cmp(&b.key));
    out.dedup_by(|a, b| a.key == b.key);
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellOutcome {
    pub key: String,
    pub values: Vec<f64>,
    pub result: std::result::Result<PulseReport, String>,
}

/// Directory name of a cell: the key with separators made path-safe.
pub fn cell_dir_name(key: &str) -> String {
    key.chars().map(|c| if c.is_ascii_alphanumeric() || c == '.' || c == '-' || c == '=' { c } else { '_' }).collect()
}

fn run_cell(cell: &Cell, dir: &Path) -> Result<PulseReport> {
    let traj = simulate(&cell.config)?;
    write_run(dir, &cell.config, &traj)?;
    let p = &cell.config.params;
    let offset: Vec<f64> = p.u().iter().map(|u| p.ell() * u).collect();
    let rep = classify(&traj, &offset, &cell.config.diagnostics)?;
    write_report(dir, &cell.key, &rep)?;
    Ok(rep)
}

/// Runs every cell in a pool of `jobs` workers and writes `cells/<key>/`,
/// `verdicts.csv`, `sweep_manifest.json` and a phase-diagram script.
pub fn run_sweep(sweep: &SweepConfig, base: &SimulationConfig, out: &Path, jobs: usize) -> Result<Vec<CellOutcome>> {
    let cells = cells(sweep, base)?;
    let outcomes: Vec<CellOutcome> = par::with_threads(jobs, || {
        par::map_indexed(cells.len(), |i| {
            let c = &cells[i];
            let dir = out.join("cells").join(cell_dir_name(&c.key));
            CellOutcome { key: c.key.clone(), values: c.values.clone(), result: run_cell(c, &dir).map_err(|e| e.to_string()) }
        })
    });
    write_text(&out.join("verdicts.csv"), &verdicts_csv(sweep, &outcomes))?;
    let manifest = serde_json::json!({
        "sweep": sweep,
        "base": base.resolved()?,
        "cells": cells.iter().map(|c| serde_json::json!({
            "key": c.key,
            "dir": format!("cells/{}", cell_dir_name(&c.key)),
        })).collect::<Vec<_>>(),
    });
    write_json(&out.join("sweep_manifest.json"), &manifest)?;
    write_text(&out.join("plot_phase_diagram.py"), PLOT_PHASE)?;
    Ok(outcomes)
}

/// Aggregated table, one row per cell in key order; failed cells keep
/// their error text in the last column.
pub fn verdicts_csv(sweep: &SweepConfig, outcomes: &[CellOutcome]) -> String {
    let axes: Vec<&str> = sweep.axis.iter().map(|a| a.leaf()).collect();
    let fields = VERDICT_HEADER.split(',').count() - 1;
    let mut s = format!("cell,{},status,{},error\n", axes.join(","), &VERDICT_HEADER["run,".len()..]);
    let mut sorted: Vec<&CellOutcome> = outcomes.iter().collect();
    sorted.sort_by(|a, b| a.key.cmp(&b.key));
    for o in sorted {
        let vals: Vec<String> = o.values.iter().map(|&x| fmt_num(x)).collect();
        let quoted = format!("\"{}\"", o.key);
        match &o.result {
            Ok(r) => {
                let row = crate::output::verdict_row("", r);
                s.push_str(&format!("{quoted},{},ok,{},\n", vals.join(","), &row[1..]));
            }
            Err(e) => {
                let empty = vec![""; fields].join(",");
                s.push_str(&format!("{quoted},{},failed,{empty},\"{}\"\n", vals.join(","), e.replace('"', "'")));
            }
        }
    }
    s
}

const PLOT_PHASE: &str = r#"#!/usr/bin/env python3
# Phase diagram of a sweep: one marker per cell, colored by regime.
# Usage: python3 plot_phase_diagram.py [sweep_dir]
import csv, os, sys
import matplotlib.pyplot as plt

run = sys.argv[1] if len(sys.argv) > 1 else os.path.dirname(os.path.abspath(__file__))
with open(os.path.join(run, "verdicts.csv")) as f:
    reader = csv.DictReader(f)
    rows = list(reader)
    cols = reader.fieldnames
# Axis columns sit between "cell" and "status".
axes = cols[1:cols.index("status")]
xk = axes[0]
yk = axes[1] if len(axes) > 1 else None
fig, ax = plt.subplots(figsize=(6, 5))
labels = sorted({r["regime"] or "failed" for r in rows})
for lab in labels:
    sel = [r for r in rows if (r["regime"] or "failed") == lab]
    xs = [float(r[xk]) for r in sel]
    ys = [float(r[yk]) if yk else 0.0 for r in sel]
    ax.scatter(xs, ys, s=120, label=lab)
ax.set_xlabel(xk)
ax.set_ylabel(yk or "")
ax.legend()
fig.tight_layout()
fig.savefig(os.path.join(run, "phase_diagram.png"), dpi=120)
"#;
