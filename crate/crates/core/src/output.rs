//! Run artifacts: CSV tables, JSON manifests and generated plot scripts.
//!
//! Every number goes through [`fmt_num`], which prints the shortest string
//! that parses back to the same `f64`, so reruns are byte-identical.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::config::SimulationConfig;
use crate::diagnostics::PulseReport;
use crate::error::{Error, Result};
use crate::grid::{Field, Grid};
use crate::solver::{Sample, SimState, Trajectory};

pub const MANIFEST: &str = "manifest.json";
pub const TRAJECTORY: &str = "trajectory.csv";
pub const REPORT: &str = "pulse_report.json";
pub const VERDICT: &str = "verdict.csv";
pub const FORMAT_VERSION: u32 = 1;

/// Shortest round-trip decimal; scientific outside [1e-4, 1e15).
pub fn fmt_num(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 || (1e-4..1e15).contains(&a) || !x.is_finite() {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

fn push_row(out: &mut String, vals: impl IntoIterator<Item = f64>) {
    let mut first = true;
    for v in vals {
        if !first {
            out.push(',');
        }
        first = false;
        out.push_str(&fmt_num(v));
    }
    out.push('\n');
}

fn axis_names(prefix: &str, n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("{prefix}{i}")).collect()
}

/// Header `z1[,z2],h,p`, one row per node in flat row-major order.
pub fn snapshot_csv(s: &SimState) -> String {
    let g = s.grid();
    let mut out = axis_names("z", g.n()).join(",");
    out.push_str(",h,p\n");
    for idx in 0..g.len() {
        let mut row = g.point(idx);
        row.push(s.h().values()[idx]);
        row.push(s.p().values()[idx]);
        push_row(&mut out, row);
    }
    out
}

/// Header `t,H,P,xbar1[,xbar2],ybar1[,ybar2]`.
pub fn trajectory_csv(traj: &Trajectory) -> String {
    let mut head = vec!["t".to_string(), "H".into(), "P".into()];
    head.extend(axis_names("xbar", traj.n));
    head.extend(axis_names("ybar", traj.n));
    let mut out = head.join(",");
    out.push('\n');
    for s in &traj.samples {
        let mut row = vec![s.t, s.h_mass, s.p_mass];
        row.extend(&s.xbar);
        row.extend(&s.ybar);
        push_row(&mut out, row);
    }
    out
}

fn parse_rows(text: &str, origin: &Path, width: usize) -> Result<Vec<Vec<f64>>> {
    let bad = |line: usize, msg: &str| Error::Config(format!("{}:{line}: {msg}", origin.display()));
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate().skip(1) {
        if line.is_empty() {
            continue;
        }
        let row: Vec<f64> = line
            .split(',')
            .map(|c| c.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| bad(i + 1, &e.to_string()))?;
        if row.len() != width {
            return Err(bad(i + 1, &format!("expected {width} columns, found {}", row.len())));
        }
        rows.push(row);
    }
    Ok(rows)
}

pub fn parse_trajectory_csv(text: &str, n: usize, origin: &Path) -> Result<Vec<Sample>> {
    parse_rows(text, origin, 3 + 2 * n)?
        .into_iter()
        .map(|r| {
            Ok(Sample { t: r[0], h_mass: r[1], p_mass: r[2], xbar: r[3..3 + n].to_vec(), ybar: r[3 + n..].to_vec() })
        })
        .collect()
}

pub fn parse_snapshot_csv(text: &str, t: f64, grid: Grid, origin: &Path) -> Result<SimState> {
    let n = grid.n();
    let rows = parse_rows(text, origin, n + 2)?;
    if rows.len() != grid.len() {
        return Err(Error::Config(format!(
            "{}: {} rows for a grid of {} nodes",
            origin.display(),
            rows.len(),
            grid.len()
        )));
    }
    let h = rows.iter().map(|r| r[n]).collect();
    let p = rows.iter().map(|r| r[n + 1]).collect();
    SimState::new(t, Field::new(grid.clone(), h)?, Field::new(grid, p)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileEntry {
    pub path: String,
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t: Option<f64>,
    /// Grid of a snapshot; in the comoving frame each snapshot has its own.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<Grid>,
}

/// Self-describing record of a simulation run. The `config` entry is the
/// fully resolved config, so `simulate --config manifest.json` reruns it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub format: u32,
    pub program: String,
    pub version: String,
    pub config: SimulationConfig,
    pub grid: Grid,
    pub dt: f64,
    pub t_final: f64,
    pub frame_shift: Vec<i64>,
    pub files: Vec<FileEntry>,
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    fs::write(path, text)?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    write_text(path, &s)
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}:{}: {e}", path.display(), e.line())))
}

/// Writes trajectory, snapshots, plot script and manifest under `dir`.
pub fn write_run(dir: &Path, cfg: &SimulationConfig, traj: &Trajectory) -> Result<RunManifest> {
    let resolved = cfg.resolved()?;
    let grid = cfg.build_grid()?;
    let mut files = vec![FileEntry { path: TRAJECTORY.into(), kind: "trajectory".into(), t: None, grid: None }];
    write_text(&dir.join(TRAJECTORY), &trajectory_csv(traj))?;
    for (i, s) in traj.snapshots.iter().enumerate() {
        let rel = format!("snapshots/snap_{i:04}.csv");
        write_text(&dir.join(&rel), &snapshot_csv(s))?;
        files.push(FileEntry { path: rel, kind: "snapshot".into(), t: Some(s.t()), grid: Some(s.grid().clone()) });
    }
    write_text(&dir.join("plot_trajectory.py"), PLOT_TRAJECTORY)?;
    files.push(FileEntry { path: "plot_trajectory.py".into(), kind: "plot-script".into(), t: None, grid: None });
    if !traj.snapshots.is_empty() {
        write_text(&dir.join("plot_snapshot.py"), PLOT_SNAPSHOT)?;
        files.push(FileEntry { path: "plot_snapshot.py".into(), kind: "plot-script".into(), t: None, grid: None });
    }
    let manifest = RunManifest {
        format: FORMAT_VERSION,
        program: "redqueen".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        config: resolved,
        grid,
        dt: traj.dt,
        t_final: traj.t_end(),
        frame_shift: traj.frame_shift.clone(),
        files,
    };
    write_json(&dir.join(MANIFEST), &manifest)?;
    Ok(manifest)
}

/// Reloads a run written by [`write_run`].
pub fn load_run(dir: &Path) -> Result<(RunManifest, Trajectory)> {
    let mpath = dir.join(MANIFEST);
    if !mpath.is_file() {
        return Err(Error::Config(format!("{}: missing run manifest", mpath.display())));
    }
    let manifest: RunManifest = read_json(&mpath)?;
    let n = manifest.config.params.n();
    let read = |rel: &str| -> Result<(PathBuf, String)> {
        let p = dir.join(rel);
        let text = fs::read_to_string(&p).map_err(|e| Error::Config(format!("{}: {e}", p.display())))?;
        Ok((p, text))
    };
    let (tp, text) = read(TRAJECTORY)?;
    let samples = parse_trajectory_csv(&text, n, &tp)?;
    let mut traj = Trajectory::from_samples(n, samples).map_err(|e| Error::Config(format!("{}: {e}", tp.display())))?;
    traj.dt = manifest.dt;
    traj.frame_shift = manifest.frame_shift.clone();
    for f in manifest.files.iter().filter(|f| f.kind == "snapshot") {
        let (sp, text) = read(&f.path)?;
        let (t, grid) = match (f.t, &f.grid) {
            (Some(t), Some(g)) => (t, g.clone()),
            _ => return Err(Error::Config(format!("{}: snapshot entry lacks t or grid", mpath.display()))),
        };
        traj.snapshots.push(parse_snapshot_csv(&text, t, grid, &sp)?);
    }
    Ok((manifest, traj))
}

pub const VERDICT_HEADER: &str =
    "run,regime,c_fit,delay_fit,radius_fit,omega_fit,r2,line_r2,circle_r2,radius_drift,omega_drift,profile_residual,ring_score";

fn opt(x: Option<f64>) -> String {
    x.map(fmt_num).unwrap_or_default()
}

/// One verdict row; empty cells for quantities that were not fitted.
pub fn verdict_row(run: &str, r: &PulseReport) -> String {
    [
        run.to_string(),
        r.regime.label().to_string(),
        fmt_num(r.c_fit),
        opt(r.delay_fit),
        opt(r.radius_fit),
        opt(r.omega_fit),
        fmt_num(r.r2),
        fmt_num(r.line_r2),
        opt(r.circle_r2),
        opt(r.radius_drift),
        opt(r.omega_drift),
        opt(r.profile_residual),
        opt(r.ring_score),
    ]
    .join(",")
}

/// Writes `pulse_report.json` and a one-row `verdict.csv`.
pub fn write_report(dir: &Path, run: &str, r: &PulseReport) -> Result<()> {
    write_json(&dir.join(REPORT), r)?;
    let mut s = String::from(VERDICT_HEADER);
    let _ = write!(s, "\n{}\n", verdict_row(run, r));
    write_text(&dir.join(VERDICT), &s)
}

pub const PLOT_TRAJECTORY: &str = r#"#!/usr/bin/env python3
# Plots the trajectory summary written next to this script.
# Usage: python3 plot_trajectory.py [run_dir]
import csv, sys, os
import matplotlib.pyplot as plt

run = sys.argv[1] if len(sys.argv) > 1 else os.path.dirname(os.path.abspath(__file__))
with open(os.path.join(run, "trajectory.csv")) as f:
    rows = list(csv.DictReader(f))
col = lambda k: [float(r[k]) for r in rows]
t = col("t")

fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(11, 4.5))
# Left: total masses over time.
ax1.plot(t, col("H"), label="H (host)")
ax1.plot(t, col("P"), label="P (pathogen)")
ax1.set_xlabel("t"); ax1.set_ylabel("mass"); ax1.legend()
# Right: mean traits in trait space (first two axes, or time for n = 1).
if "xbar2" in rows[0]:
    ax2.plot(col("xbar1"), col("xbar2"), label="host mean")
    ax2.plot(col("ybar1"), col("ybar2"), label="pathogen mean")
    ax2.set_xlabel("trait 1"); ax2.set_ylabel("trait 2"); ax2.set_aspect("equal", "datalim")
else:
    ax2.plot(t, col("xbar1"), label="host mean")
    ax2.plot(t, col("ybar1"), label="pathogen mean")
    ax2.set_xlabel("t"); ax2.set_ylabel("trait")
ax2.legend()
fig.tight_layout()
fig.savefig(os.path.join(run, "trajectory.png"), dpi=120)
"#;

pub const PLOT_SNAPSHOT: &str = r#"#!/usr/bin/env python3
# Plots host and pathogen densities of one snapshot CSV.
# Usage: python3 plot_snapshot.py snapshots/snap_0000.csv
import csv, sys
import numpy as np
import matplotlib.pyplot as plt

path = sys.argv[1]
with open(path) as f:
    reader = csv.reader(f)
    head = next(reader)
    data = np.array([[float(x) for x in r] for r in reader])
n = len(head) - 2
fig, axes = plt.subplots(1, 2, figsize=(11, 4.5))
for ax, k, name in zip(axes, (n, n + 1), ("host h", "pathogen p")):
    if n == 1:
        ax.plot(data[:, 0], data[:, k])
        ax.set_xlabel("z1")
    else:
        # Rows are row-major with z2 varying fastest.
        z1 = np.unique(data[:, 0]); z2 = np.unique(data[:, 1])
        img = data[:, k].reshape(len(z1), len(z2)).T
        ax.imshow(img, origin="lower", extent=(z1[0], z1[-1], z2[0], z2[-1]), aspect="equal")
        ax.set_xlabel("z1"); ax.set_ylabel("z2")
    ax.set_title(name)
fig.tight_layout()
fig.savefig(path[:-4] + ".png", dpi=120)
"#;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::FrameMode;
    use crate::solver::simulate;

    fn tmp(name: &str) -> PathBuf {
        let d = std::env::temp_dir().join(format!("redqueen-output-{name}-{}", std::process::id()));
        let _ = fs::remove_dir_all(&d);
        d
    }

    fn small_cfg() -> SimulationConfig {
        let mut c = SimulationConfig::reference();
        c.grid.m = 24;
        c.t_end = 0.2;
        c.snapshot_times = vec![0.0, 0.2];
        c
    }

    #[test]
    fn number_format_round_trips() {
        for x in [0.0, 1.0, -0.1, 1e-7, 3.0e20, 1.0 / 3.0, 1234.5678, -2.5e-300] {
            let s = fmt_num(x);
            assert_eq!(s.parse::<f64>().unwrap(), x, "{s}");
        }
        assert_eq!(fmt_num(0.25), "0.25");
        assert_eq!(fmt_num(1e-7), "1e-7");
    }

    #[test]
    fn headers() {
        let traj = Trajectory::from_samples(
            2,
            vec![Sample { t: 0.0, h_mass: 1.0, p_mass: 2.0, xbar: vec![0.5, 0.0], ybar: vec![0.0, 0.1] }],
        )
        .unwrap();
        assert_eq!(trajectory_csv(&traj), "t,H,P,xbar1,xbar2,ybar1,ybar2\n0,1,2,0.5,0,0,0.1\n");
        let g = Grid::cube(1, 1.0, 16).unwrap();
        let s = SimState::new(0.0, Field::zeros(g.clone()), Field::zeros(g)).unwrap();
        assert!(snapshot_csv(&s).starts_with("z1,h,p\n"));
    }

    #[test]
    fn run_round_trip() {
        for frame in [FrameMode::Fixed, FrameMode::Comoving] {
            let mut cfg = small_cfg();
            cfg.frame = frame;
            let traj = simulate(&cfg).unwrap();
            let dir = tmp(&format!("{frame:?}"));
            let m = write_run(&dir, &cfg, &traj).unwrap();
            assert_eq!(m.files.iter().filter(|f| f.kind == "snapshot").count(), 2);
            let (m2, back) = load_run(&dir).unwrap();
            assert_eq!(m, m2);
            assert_eq!(back.samples, traj.samples);
            assert_eq!(back.snapshots.len(), 2);
            assert_eq!(back.snapshots[1].h().values(), traj.snapshots[1].h().values());
            assert_eq!(back.snapshots[1].grid(), traj.snapshots[1].grid());
            let before = fs::read(dir.join(MANIFEST)).unwrap();
            write_run(&dir, &cfg, &traj).unwrap();
            assert_eq!(fs::read(dir.join(MANIFEST)).unwrap(), before);
            let _ = fs::remove_dir_all(&dir);
        }
    }

    #[test]
    fn manifest_config_reruns() {
        let cfg = small_cfg();
        let traj = simulate(&cfg).unwrap();
        let dir = tmp("rerun");
        write_run(&dir, &cfg, &traj).unwrap();
        let again = SimulationConfig::load(&dir.join(MANIFEST)).unwrap();
        let traj2 = simulate(&again).unwrap();
        assert_eq!(trajectory_csv(&traj2), trajectory_csv(&traj));
        let _ = fs::remove_dir_all(&dir);
    }

    #[test]
    fn missing_manifest_is_config_error() {
        let dir = tmp("missing");
        assert!(matches!(load_run(&dir), Err(Error::Config(_))));
    }
}
