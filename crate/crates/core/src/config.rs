//! Run configuration files (TOML) and their resolution to concrete grids.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::diagnostics::ClassifyConfig;
use crate::error::{Error, Result};
use crate::grid::{Field, Grid};
use crate::model::ModelParams;
use crate::solver::SimState;
use crate::tolerances::{BOX_STDS_ANALYTIC, BOX_STDS_INITIAL, DEFAULT_BLOB_STD};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum FrameMode {
    #[default]
    Fixed,
    Comoving,
}

/// Isotropic Gaussian initial density.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Blob {
    pub mass: f64,
    pub center: Vec<f64>,
    #[serde(default = "default_std")]
    pub std: f64,
}

fn default_std() -> f64 {
    DEFAULT_BLOB_STD
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    /// Nodes per axis.
    pub m: usize,
    /// Box half-width; derived from the model when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub half_width: Option<f64>,
    /// Box center; the origin (fixed frame) or the host center (comoving).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub center: Option<Vec<f64>>,
}

/// Everything needed to reproduce one simulation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationConfig {
    pub params: ModelParams,
    pub grid: GridSpec,
    /// Time step; the stability limit when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    pub t_end: f64,
    #[serde(default)]
    pub snapshot_times: Vec<f64>,
    pub host: Blob,
    pub pathogen: Blob,
    #[serde(default)]
    pub frame: FrameMode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<String>,
    #[serde(default)]
    pub diagnostics: ClassifyConfig,
}

/// 1-based line of the first `key = …` assignment in `text`.
pub fn locate_key(text: &str, key: &str) -> Option<usize> {
    text.lines().position(|l| {
        let t = l.trim_start();
        t.strip_prefix(key).is_some_and(|rest| rest.trim_start().starts_with('='))
    })
    .map(|i| i + 1)
}

fn line_of_offset(text: &str, off: usize) -> usize {
    text[..off.min(text.len())].matches('\n').count() + 1
}

/// Parses TOML into `T`, mapping errors to messages with line numbers.
pub fn parse_toml<T: serde::de::DeserializeOwned>(text: &str, origin: &str) -> Result<T> {
    toml::from_str(text).map_err(|e| {
        let line = e.span().map(|s| line_of_offset(text, s.start));
        match line {
            Some(l) => {
                // Name the assigned key when the error sits on a `key = value` line.
                let key = text.lines().nth(l - 1).and_then(|t| t.split_once('=')).map(|(k, _)| k.trim());
                match key {
                    Some(k) if !k.is_empty() && !k.starts_with('#') => {
                        Error::Config(format!("{origin}:{l}: field {k}: {}", e.message()))
                    }
                    _ => Error::Config(format!("{origin}:{l}: {}", e.message())),
                }
            }
            None => Error::Config(format!("{origin}: {}", e.message())),
        }
    })
}

impl SimulationConfig {
    /// Reads a TOML config, or the `config` entry of a JSON run manifest.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let origin = path.display().to_string();
        if path.extension().is_some_and(|e| e == "json") {
            let v: serde_json::Value =
                serde_json::from_str(&text).map_err(|e| Error::Config(format!("{origin}:{}: {e}", e.line())))?;
            let cfg = v.get("config").cloned().unwrap_or(v);
            let cfg: SimulationConfig =
                serde_json::from_value(cfg).map_err(|e| Error::Config(format!("{origin}: {e}")))?;
            cfg.validate().map_err(|e| Error::Config(format!("{origin}: {e}")))?;
            return Ok(cfg);
        }
        Self::from_toml_str(&text, &origin)
    }

    pub fn from_toml_str(text: &str, origin: &str) -> Result<Self> {
        let cfg: SimulationConfig = parse_toml(text, origin)?;
        cfg.validate().map_err(|e| match e {
            Error::Config(msg) => {
                let key = msg.split(':').next().unwrap_or("");
                let leaf = key.rsplit('.').next().unwrap_or(key);
                match locate_key(text, leaf) {
                    Some(l) => Error::Config(format!("{origin}:{l}: {msg}")),
                    None => Error::Config(format!("{origin}: {msg}")),
                }
            }
            other => other,
        })?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Semantic checks beyond the schema. Messages start with the field path.
    pub fn validate(&self) -> Result<()> {
        let n = self.params.n();
        let bad = |field: &str, msg: String| Err(Error::Config(format!("{field}: {msg}")));
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return bad("t_end", format!("must be finite and >= 0, got {}", self.t_end));
        }
        if let Some(dt) = self.dt {
            if !(dt > 0.0 && dt.is_finite()) {
                return bad("dt", format!("must be > 0, got {dt}"));
            }
        }
        if self.grid.m < 16 {
            return bad("grid.m", format!("must be >= 16, got {}", self.grid.m));
        }
        if let Some(w) = self.grid.half_width {
            if !(w > 0.0 && w.is_finite()) {
                return bad("grid.half_width", format!("must be > 0, got {w}"));
            }
        }
        if let Some(c) = &self.grid.center {
            if c.len() != n {
                return bad("grid.center", format!("needs {n} components"));
            }
        }
        for (name, b) in [("host", &self.host), ("pathogen", &self.pathogen)] {
            if b.center.len() != n {
                return bad(&format!("{name}.center"), format!("needs {n} components, got {}", b.center.len()));
            }
            if !(b.mass > 0.0 && b.mass.is_finite()) {
                return bad(&format!("{name}.mass"), format!("must be > 0, got {}", b.mass));
            }
            if !(b.std > 0.0 && b.std.is_finite()) {
                return bad(&format!("{name}.std"), format!("must be > 0, got {}", b.std));
            }
        }
        if self.snapshot_times.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
            return bad("snapshot_times", "entries must be finite and >= 0".into());
        }
        self.diagnostics.validate()?;
        Ok(())
    }

    /// Std of the widest closed-form Gaussian the run can approach.
    pub fn widest_analytic_std(&self) -> f64 {
        let p = &self.params;
        let mut s: f64 = 0.0;
        if p.alpha_p() > 0.0 {
            s = s.max((p.mu_p() / p.alpha_p()).sqrt());
        }
        if p.beta() > 0.0 {
            s = s.max((p.mu_h() / p.beta()).sqrt());
        } else if p.alpha_h() > 0.0 {
            s = s.max((p.mu_h() / p.alpha_h()).sqrt());
        }
        s
    }

    pub fn box_center(&self) -> Vec<f64> {
        match (&self.grid.center, self.frame) {
            (Some(c), _) => c.clone(),
            (None, FrameMode::Fixed) => vec![0.0; self.params.n()],
            (None, FrameMode::Comoving) => self.host.center.clone(),
        }
    }

    pub fn box_half_width(&self) -> f64 {
        if let Some(w) = self.grid.half_width {
            return w;
        }
        let c = self.box_center();
        let reach = |b: &Blob| {
            let d: f64 = b.center.iter().zip(&c).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
            d + BOX_STDS_INITIAL * b.std
        };
        (BOX_STDS_ANALYTIC * self.widest_analytic_std()).max(reach(&self.host)).max(reach(&self.pathogen))
    }

    pub fn build_grid(&self) -> Result<Grid> {
        Grid::centered(&self.box_center(), self.box_half_width(), self.grid.m)
    }

    /// Copy with every derived setting written out explicitly.
    pub fn resolved(&self) -> Result<SimulationConfig> {
        let mut c = self.clone();
        let grid = self.build_grid()?;
        c.grid.half_width = Some(self.box_half_width());
        c.grid.center = Some(self.box_center());
        if c.dt.is_none() {
            c.dt = Some(crate::solver::cfl_limit(&grid, &self.params));
        }
        Ok(c)
    }

    pub fn initial_state(&self) -> Result<SimState> {
        self.validate()?;
        let g = self.build_grid()?;
        let h = Field::gaussian(g.clone(), self.host.mass, &self.host.center, self.host.std);
        let p = Field::gaussian(g, self.pathogen.mass, &self.pathogen.center, self.pathogen.std);
        SimState::new(0.0, h, p)
    }

    /// Reference experiment: default constants, masses 10 at (0.5, 0.5) and
    /// (0.7, 0), run to t = 20.
    pub fn reference() -> Self {
        SimulationConfig {
            params: ModelParams::reference(),
            grid: GridSpec { m: 128, half_width: None, center: None },
            dt: None,
            t_end: 20.0,
            snapshot_times: vec![1.0, 10.0, 20.0],
            host: Blob { mass: 10.0, center: vec![0.5, 0.5], std: DEFAULT_BLOB_STD },
            pathogen: Blob { mass: 10.0, center: vec![0.7, 0.0], std: DEFAULT_BLOB_STD },
            frame: FrameMode::Fixed,
            output_dir: None,
            diagnostics: ClassifyConfig::default(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"
t_end = 5.0
snapshot_times = [1.0, 5.0]

[params]
n = 2
mu_h2 = 0.1
mu_p2 = 0.1
r_h = 4.0
r_p = 1.0
gamma_h = 1.0
gamma_p = 0.01
rho_max = 0.1
theta = 1.0
alpha_h = 0.0
alpha_p = 1.0
beta = 1.0
ell = 0.0
u = [1.0, 0.0]

[grid]
m = 64

[host]
mass = 10.0
center = [0.5, 0.5]

[pathogen]
mass = 10.0
center = [0.7, 0.0]
"#;

    #[test]
    fn parses_and_fills_defaults() {
        let c = SimulationConfig::from_toml_str(SAMPLE, "sample").unwrap();
        assert_eq!(c.host.std, DEFAULT_BLOB_STD);
        assert_eq!(c.frame, FrameMode::Fixed);
        let r = c.resolved().unwrap();
        assert!(r.dt.is_some() && r.grid.half_width.is_some());
        let back = SimulationConfig::from_toml_str(&r.to_toml_string(), "echo").unwrap();
        assert_eq!(back, r);
    }

    #[test]
    fn unknown_key_reports_line() {
        let bad = SAMPLE.replace("[grid]\nm = 64", "[grid]\nm = 64\nbogus = 1");
        let e = SimulationConfig::from_toml_str(&bad, "x").unwrap_err().to_string();
        assert!(e.contains("bogus"), "{e}");
        assert!(e.contains("x:"), "{e}");
    }

    #[test]
    fn invalid_param_names_field() {
        let bad = SAMPLE.replace("mu_h2 = 0.1", "mu_h2 = -0.1");
        let e = SimulationConfig::from_toml_str(&bad, "x").unwrap_err().to_string();
        assert!(e.contains("mu_h2"), "{e}");
    }

    #[test]
    fn semantic_error_has_line() {
        let bad = SAMPLE.replace("m = 64", "m = 4");
        let e = SimulationConfig::from_toml_str(&bad, "x").unwrap_err().to_string();
        let line = SAMPLE.lines().position(|l| l.starts_with("m = 64")).unwrap() + 1;
        assert!(e.contains(&format!("x:{line}:")), "{e}");
    }

    #[test]
    fn box_rule() {
        let c = SimulationConfig::from_toml_str(SAMPLE, "sample").unwrap();
        let s = (0.1f64.sqrt()).sqrt();
        assert!((c.box_half_width() - 8.0 * s).abs() < 1e-12);
    }
}
