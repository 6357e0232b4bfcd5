//! Run configuration: a TOML document describing the scenario, the fit, and
//! the detection sweep.
//!
//! ```toml
//! seed = 7
//! output_dir = "out"
//!
//! [scenario]
//! kind = "model-matched"        # or "transmitter"
//! n_sensors = 50
//! knn_k = 5
//! extent = 100.0
//! xi_true = [[-20.0, 5.0, 0.0], [10.0, 0.0, -5.0]]
//! sampling = { kind = "grid", t = 9 }   # or { kind = "iid-uniform", m = 3000 }
//!
//! [fit]
//! grid = [[1, 1], [2, 3]]      # or fixed = [2, 3]; default grid when absent
//!
//! [detect]
//! methods = ["mht-ggsp", "oracle", "bh"]
//! alphas = [0.05, 0.1, 0.2]
//! reps = 20
//! ```

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::basis::default_bound;
use crate::error::{Error, Result};
use crate::monte_carlo::{FitConfig, Method, MonteCarloConfig, ScenarioConfig};
use crate::scenario::Sampling;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    pub scenario: ScenarioConfig,
    #[serde(default)]
    pub fit: FitConfig,
    pub detect: DetectConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectConfig {
    pub methods: Vec<Method>,
    pub alphas: Vec<f64>,
    #[serde(default = "default_reps")]
    pub reps: usize,
}

fn default_reps() -> usize {
    1
}

impl RunConfig {
    pub fn monte_carlo(&self) -> MonteCarloConfig {
        MonteCarloConfig {
            scenario: self.scenario.clone(),
            fit: self.fit.clone(),
            methods: self.detect.methods.clone(),
            alphas: self.detect.alphas.clone(),
            reps: self.detect.reps,
            seed: self.seed,
        }
    }
}

/// A schema or invariant violation at a dotted field path.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub path: String,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

/// Parses a configuration document. On failure the returned violation names
/// the offending field.
pub fn parse(text: &str) -> std::result::Result<RunConfig, Violation> {
    let de = toml::Deserializer::parse(text).map_err(|e| Violation {
        path: "<document>".into(),
        message: e.message().to_string(),
    })?;
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        Violation {
            path: if path == "." {
                "<document>".into()
            } else {
                path
            },
            message: e.into_inner().message().to_string(),
        }
    })
}

/// Every invariant violation of a parsed config.
pub fn check(cfg: &RunConfig) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut bad = |path: String, message: String| out.push(Violation { path, message });

    let d = &cfg.detect;
    if d.methods.is_empty() {
        bad(
            "detect.methods".into(),
            "at least one method is required".into(),
        );
    }
    if d.alphas.is_empty() {
        bad(
            "detect.alphas".into(),
            "at least one level is required".into(),
        );
    }
    for (i, a) in d.alphas.iter().enumerate() {
        if !(*a > 0.0 && *a < 1.0) {
            bad(
                format!("detect.alphas[{i}]"),
                format!("{a} is outside (0, 1)"),
            );
        }
    }
    if d.reps == 0 {
        bad("detect.reps".into(), "must be at least 1".into());
    }

    let n = cfg.scenario.n_vertices();
    let f = &cfg.fit;
    if f.grid.is_some() && f.fixed.is_some() {
        bad("fit".into(), "set either grid or fixed, not both".into());
    }
    if let Some(g) = &f.grid {
        if g.is_empty() && d.methods.contains(&Method::MhtGgsp) {
            bad("fit.grid".into(), "empty candidate grid".into());
        }
        for (i, &[k1, k2]) in g.iter().enumerate() {
            if let Some(m) = order_problem(k1, k2, n) {
                bad(format!("fit.grid[{i}]"), m);
            }
        }
    } else if f.fixed.is_none() && d.methods.contains(&Method::MhtGgsp) {
        for (k1, k2) in f.candidates() {
            if let Some(m) = order_problem(k1, k2, n) {
                bad("fit.grid".into(), format!("default grid entry: {m}"));
                break;
            }
        }
    }
    if let Some([k1, k2]) = f.fixed {
        if let Some(m) = order_problem(k1, k2, n) {
            bad("fit.fixed".into(), m);
        }
    }
    if let Some(b) = f.bound {
        if !(b > 0.0 && b.is_finite()) {
            bad("fit.bound".into(), format!("{b} must be positive"));
        }
    }
    if !(f.tol > 0.0) {
        bad("fit.tol".into(), "must be positive".into());
    }
    if !(f.rel_tol >= 0.0) {
        bad("fit.rel_tol".into(), "must be non-negative".into());
    }
    if f.max_iters == 0 {
        bad("fit.max_iters".into(), "must be at least 1".into());
    }

    match &cfg.scenario {
        ScenarioConfig::ModelMatched(s) => {
            if s.n_sensors < 2 {
                bad(
                    "scenario.n_sensors".into(),
                    "need at least 2 sensors".into(),
                );
            }
            if s.knn_k == 0 {
                bad("scenario.knn_k".into(), "must be at least 1".into());
            }
            if !(s.extent > 0.0 && s.extent.is_finite()) {
                bad("scenario.extent".into(), "must be positive".into());
            }
            let k2 = s.k2();
            if s.xi_true.is_empty() || k2 == 0 || s.xi_true.iter().any(|r| r.len() != k2) {
                bad(
                    "scenario.xi_true".into(),
                    "must be a non-empty rectangular matrix".into(),
                );
            } else if s.k1() > s.n_sensors {
                bad(
                    "scenario.xi_true".into(),
                    format!("K1 = {} exceeds n_sensors = {}", s.k1(), s.n_sensors),
                );
            }
            let bound = s.bound.unwrap_or_else(|| default_bound(s.n_sensors));
            if let Some(b) = s.bound {
                if !(b > 0.0) {
                    bad("scenario.bound".into(), format!("{b} must be positive"));
                }
            }
            for (i, row) in s.xi_true.iter().enumerate() {
                for (j, x) in row.iter().enumerate() {
                    if !(x.abs() <= bound) {
                        bad(
                            format!("scenario.xi_true[{i}][{j}]"),
                            format!("{x} outside the box [-{bound}, {bound}]"),
                        );
                    }
                }
            }
            match s.sampling {
                Sampling::IidUniform { m: 0 } => {
                    bad("scenario.sampling.m".into(), "must be at least 1".into())
                }
                Sampling::Grid { t: 0 } => {
                    bad("scenario.sampling.t".into(), "must be at least 1".into())
                }
                _ => {}
            }
        }
        ScenarioConfig::Transmitter(s) => {
            if s.grid_side < 2 {
                bad("scenario.grid_side".into(), "must be at least 2".into());
            }
            if s.n_sensors < 2 || s.n_sensors > s.grid_side * s.grid_side {
                bad(
                    "scenario.n_sensors".into(),
                    "must be in [2, grid_side^2]".into(),
                );
            }
            for (name, v) in [
                ("knn_k", s.knn_k),
                ("n_transmitters", s.n_transmitters),
                ("T", s.t),
            ] {
                if v == 0 {
                    bad(format!("scenario.{name}"), "must be at least 1".into());
                }
            }
            for (name, v) in [
                ("lambda", s.lambda),
                ("gp_variance", s.gp_variance),
                ("gp_length_scale", s.gp_length_scale),
                ("noise_var", s.noise_var),
                ("tau0", s.tau0),
            ] {
                if !(v > 0.0 && v.is_finite()) {
                    bad(format!("scenario.{name}"), format!("{v} must be positive"));
                }
            }
            if !(s.x0 >= 0.0 && s.x0.is_finite()) {
                bad("scenario.x0".into(), "must be non-negative".into());
            }
        }
    }
    out
}

fn order_problem(k1: usize, k2: usize, n: usize) -> Option<String> {
    if k1 == 0 || k2 == 0 {
        Some(format!("[{k1}, {k2}]: K1 and K2 must be positive"))
    } else if k1 > n {
        Some(format!(
            "[{k1}, {k2}]: K1 exceeds the number of sensors {n}"
        ))
    } else {
        None
    }
}

/// Reads and checks a config file. IO failures are errors; everything else
/// is reported as violations, empty when the config is valid.
pub fn validate(path: &Path) -> Result<Vec<Violation>> {
    let text = std::fs::read_to_string(path)?;
    Ok(match parse(&text) {
        Ok(cfg) => check(&cfg),
        Err(v) => vec![v],
    })
}

/// Reads a config file and fails on the first violation.
pub fn load(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path)?;
    let cfg = parse(&text).map_err(|v| Error::Config(v.to_string()))?;
    let problems = check(&cfg);
    if !problems.is_empty() {
        let list: Vec<String> = problems.iter().map(ToString::to_string).collect();
        return Err(Error::Config(list.join("; ")));
    }
    Ok(cfg)
}
