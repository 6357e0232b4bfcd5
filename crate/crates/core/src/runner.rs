//! File-driven batch runs: read a config, run the Monte Carlo experiment and
//! write the result files into an output directory.
//!
//! Output layout:
//!
//! - `results.csv`: aggregate FDR and power per `(method, alpha)`
//! - `results_by_rep.csv`: FDP and TPP per repetition
//! - `fit.json`: per-repetition selected fit and BIC table
//! - `metadata.json`: config echo, seed, measured null proportion, failures
//! - `rejections/rep_<i>.csv`: detection maps, when requested

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::{self, RunConfig};
use crate::error::{Error, Result};
use crate::estimator::BicSelection;
use crate::monte_carlo::{
    monte_carlo, write_detection_map, write_rep_results_csv, write_results_csv, MonteCarloReport,
    RunOptions,
};

pub const DEFAULT_OUTPUT_DIR: &str = "mht-ggsp-out";

/// Command-line values that take precedence over the config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub output_dir: Option<PathBuf>,
    pub jobs: Option<usize>,
    pub emit_rejections: bool,
}

#[derive(Debug)]
pub struct RunSummary {
    pub output_dir: PathBuf,
    pub config: RunConfig,
    pub report: MonteCarloReport,
}

impl RunSummary {
    pub fn partial_failure(&self) -> bool {
        !self.report.failures.is_empty()
    }
}

/// Process exit status for a run: 0 on success, 1 for configuration or IO
/// problems, 2 when every repetition failed, 3 when some did.
pub fn exit_code(result: &Result<RunSummary>) -> i32 {
    match result {
        Ok(s) if s.partial_failure() => 3,
        Ok(_) => 0,
        Err(Error::Repetition { .. }) => 2,
        Err(_) => 1,
    }
}

/// Loads `config_path`, applies `overrides`, runs and writes all outputs.
pub fn run(config_path: &Path, overrides: &Overrides) -> Result<RunSummary> {
    let mut cfg = config::load(config_path)?;
    if let Some(seed) = overrides.seed {
        cfg.seed = seed;
    }
    let output_dir = overrides
        .output_dir
        .clone()
        .or_else(|| cfg.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT_DIR));
    cfg.output_dir = Some(output_dir.clone());
    run_config(cfg, &output_dir, overrides)
}

/// Runs an already parsed config and writes outputs to `output_dir`.
pub fn run_config(cfg: RunConfig, output_dir: &Path, overrides: &Overrides) -> Result<RunSummary> {
    let problems = config::check(&cfg);
    if !problems.is_empty() {
        let list: Vec<String> = problems.iter().map(ToString::to_string).collect();
        return Err(Error::Config(list.join("; ")));
    }
    let report = monte_carlo(
        &cfg.monte_carlo(),
        RunOptions {
            jobs: overrides.jobs,
            keep_maps: overrides.emit_rejections,
        },
    )?;
    write_outputs(&cfg, &report, output_dir)?;
    Ok(RunSummary {
        output_dir: output_dir.to_path_buf(),
        config: cfg,
        report,
    })
}

#[derive(Serialize)]
struct FitEntry<'a> {
    rep: usize,
    #[serde(flatten)]
    selection: &'a BicSelection,
}

#[derive(Serialize)]
struct Failure<'a> {
    rep: usize,
    error: &'a str,
}

#[derive(Serialize)]
struct Metadata<'a> {
    software: &'static str,
    version: &'static str,
    seed: u64,
    config: &'a RunConfig,
    reps_requested: usize,
    reps_completed: usize,
    null_proportion: f64,
    null_proportion_by_rep: Vec<f64>,
    n_samples_by_rep: Vec<usize>,
    failures: Vec<Failure<'a>>,
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

fn write_outputs(cfg: &RunConfig, report: &MonteCarloReport, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;

    let mut out = create(&dir.join("results.csv"))?;
    write_results_csv(&report.rows, &mut out)?;
    out.flush()?;

    let mut out = create(&dir.join("results_by_rep.csv"))?;
    write_rep_results_csv(&report.outcomes, &mut out)?;
    out.flush()?;

    let fits: Vec<FitEntry> = report
        .outcomes
        .iter()
        .filter_map(|o| {
            o.fit.as_ref().map(|selection| FitEntry {
                rep: o.rep,
                selection,
            })
        })
        .collect();
    let mut out = create(&dir.join("fit.json"))?;
    serde_json::to_writer_pretty(&mut out, &fits)?;
    out.flush()?;

    let maps: Vec<_> = report
        .outcomes
        .iter()
        .filter_map(|o| o.map.as_ref().map(|m| (o.rep, m)))
        .collect();
    if !maps.is_empty() {
        let rej = dir.join("rejections");
        fs::create_dir_all(&rej)?;
        for (rep, map) in maps {
            let mut out = create(&rej.join(format!("rep_{rep}.csv")))?;
            write_detection_map(map, &mut out)?;
            out.flush()?;
        }
    }

    let meta = Metadata {
        software: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        seed: cfg.seed,
        config: cfg,
        reps_requested: cfg.detect.reps,
        reps_completed: report.outcomes.len(),
        null_proportion: report.null_proportion(),
        null_proportion_by_rep: report.outcomes.iter().map(|o| o.null_proportion).collect(),
        n_samples_by_rep: report.outcomes.iter().map(|o| o.n_samples).collect(),
        failures: report
            .failures
            .iter()
            .map(|(rep, e)| Failure {
                rep: *rep,
                error: e,
            })
            .collect(),
    };
    let mut out = create(&dir.join("metadata.json"))?;
    serde_json::to_writer_pretty(&mut out, &meta)?;
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const CONFIG: &str = r#"
seed = 1
[scenario]
kind = "model-matched"
n_sensors = 12
knn_k = 3
extent = 10.0
xi_true = [[-6.0, 2.0, 0.0]]
sampling = { kind = "grid", t = 4 }

[fit]
fixed = [1, 3]

[detect]
methods = ["mht-ggsp", "oracle", "bh"]
alphas = [0.1, 0.2]
reps = 3
"#;

    #[test]
    fn writes_every_output() {
        let dir = tempfile::tempdir().unwrap();
        let cfg_path = dir.path().join("run.toml");
        fs::write(&cfg_path, CONFIG).unwrap();
        let out = dir.path().join("out");
        let overrides = Overrides {
            output_dir: Some(out.clone()),
            emit_rejections: true,
            ..Default::default()
        };
        let result = run(&cfg_path, &overrides);
        assert_eq!(exit_code(&result), 0);

        let results = fs::read_to_string(out.join("results.csv")).unwrap();
        assert_eq!(results.lines().count(), 1 + 3 * 2);
        let by_rep = fs::read_to_string(out.join("results_by_rep.csv")).unwrap();
        assert_eq!(by_rep.lines().count(), 1 + 3 * 2 * 3);
        let fits: serde_json::Value =
            serde_json::from_slice(&fs::read(out.join("fit.json")).unwrap()).unwrap();
        assert_eq!(fits.as_array().unwrap().len(), 3);
        assert_eq!(fits[0]["best"]["Xi_hat"]["K2"], 3);
        let meta: serde_json::Value =
            serde_json::from_slice(&fs::read(out.join("metadata.json")).unwrap()).unwrap();
        assert_eq!(meta["seed"], 1);
        assert!(meta["null_proportion"].as_f64().unwrap() > 0.0);
        for rep in 0..3 {
            let map = fs::read_to_string(out.join(format!("rejections/rep_{rep}.csv"))).unwrap();
            assert_eq!(map.lines().count(), 1 + 12 * 5);
        }
    }

    #[test]
    fn bad_config_maps_to_exit_one() {
        let dir = tempfile::tempdir().unwrap();
        let cfg_path = dir.path().join("run.toml");
        fs::write(&cfg_path, CONFIG.replace("reps = 3", "reps = 0")).unwrap();
        let r = run(&cfg_path, &Overrides::default());
        assert!(matches!(r, Err(Error::Config(_))));
        assert_eq!(exit_code(&r), 1);
        let missing = run(&dir.path().join("nope.toml"), &Overrides::default());
        assert_eq!(exit_code(&missing), 1);
    }

    #[test]
    fn exit_codes_for_repetition_failures() {
        let all_failed: Result<RunSummary> = Err(Error::Repetition {
            rep: 0,
            source: Box::new(Error::EmptySample),
        });
        assert_eq!(exit_code(&all_failed), 2);

        let cfg = parse_config();
        let partial = RunSummary {
            output_dir: PathBuf::from("x"),
            config: cfg.clone(),
            report: MonteCarloReport {
                rows: Vec::new(),
                outcomes: Vec::new(),
                failures: vec![(1, "boom".into())],
            },
        };
        assert_eq!(exit_code(&Ok(partial)), 3);
        let clean = RunSummary {
            output_dir: PathBuf::from("x"),
            config: cfg,
            report: MonteCarloReport {
                rows: Vec::new(),
                outcomes: Vec::new(),
                failures: Vec::new(),
            },
        };
        assert_eq!(exit_code(&Ok(clean)), 0);
    }

    fn parse_config() -> RunConfig {
        config::parse(CONFIG).unwrap()
    }
}
