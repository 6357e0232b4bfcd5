//! Repeated experiments: generate, fit, detect, evaluate, aggregate.
//!
//! Every repetition draws from its own RNG stream derived from
//! `(seed, repetition index)`, so results do not depend on how repetitions
//! are scheduled across threads. Aggregates are accumulated in repetition
//! order.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::basis::BandlimitedSignal;
use crate::detector::{bh_procedure, evaluate, lfdr_vector, DetectionResult, EvalRecord};
use crate::error::{Error, Result};
use crate::estimator::{bic_select, default_bic_grid, BicSelection, FitOptions};
use crate::pvalue::{SigmoidBeta, UniformNull};
use crate::scenario::{
    rep_rng, transmitter::draw_transmitter, GeneratedData, ModelMatchedConfig,
    ModelMatchedScenario, TransmitterConfig,
};
use crate::stats::mean_and_se;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ScenarioConfig {
    ModelMatched(ModelMatchedConfig),
    Transmitter(TransmitterConfig),
}

impl ScenarioConfig {
    pub fn n_vertices(&self) -> usize {
        match self {
            ScenarioConfig::ModelMatched(c) => c.n_sensors,
            ScenarioConfig::Transmitter(c) => c.n_sensors,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    /// Plug-in lfdr from the BIC-selected fit.
    MhtGgsp,
    /// lfdr from the data-generating law.
    Oracle,
    /// Benjamini-Hochberg on raw p-values.
    Bh,
}

impl Method {
    pub fn id(self) -> &'static str {
        match self {
            Method::MhtGgsp => "mht-ggsp",
            Method::Oracle => "oracle",
            Method::Bh => "bh",
        }
    }
}

/// Model-order candidates and optimizer settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitConfig {
    /// BIC candidates `[K1, K2]`; the default grid when neither this nor
    /// `fixed` is set.
    pub grid: Option<Vec<[usize; 2]>>,
    /// A single order, skipping selection.
    pub fixed: Option<[usize; 2]>,
    pub bound: Option<f64>,
    pub tol: f64,
    pub rel_tol: f64,
    pub max_iters: usize,
}

impl Default for FitConfig {
    fn default() -> Self {
        let o = FitOptions::default();
        Self {
            grid: None,
            fixed: None,
            bound: o.bound,
            tol: o.tol,
            rel_tol: o.rel_tol,
            max_iters: o.max_iters,
        }
    }
}

impl FitConfig {
    pub fn candidates(&self) -> Vec<(usize, usize)> {
        if let Some([k1, k2]) = self.fixed {
            return vec![(k1, k2)];
        }
        match &self.grid {
            Some(g) => g.iter().map(|&[a, b]| (a, b)).collect(),
            None => default_bic_grid(),
        }
    }

    pub fn options(&self) -> FitOptions {
        FitOptions {
            bound: self.bound,
            tol: self.tol,
            rel_tol: self.rel_tol,
            max_iters: self.max_iters,
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloConfig {
    pub scenario: ScenarioConfig,
    pub fit: FitConfig,
    pub methods: Vec<Method>,
    pub alphas: Vec<f64>,
    pub reps: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RunOptions {
    /// Worker threads for repetitions; `None` uses the global pool, `Some(1)`
    /// runs sequentially.
    pub jobs: Option<usize>,
    /// Keep per-sample detection maps for every repetition.
    pub keep_maps: bool,
}

/// One `(method, alpha)` evaluation within a repetition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepRow {
    pub method: Method,
    pub alpha: f64,
    pub eval: EvalRecord,
    pub eta_hat: Option<f64>,
}

/// Per-sample detection output of the first `(method, alpha)` pair.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectionMap {
    pub method: Method,
    pub alpha: f64,
    pub vertex: Vec<usize>,
    pub time_index: Vec<Option<usize>>,
    pub p: Vec<f64>,
    pub lfdr: Option<Vec<f64>>,
    pub rejected: Vec<bool>,
    pub theta: Vec<bool>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RepOutcome {
    pub rep: usize,
    pub rows: Vec<RepRow>,
    pub fit: Option<BicSelection>,
    pub null_proportion: f64,
    pub n_samples: usize,
    pub map: Option<DetectionMap>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub method: Method,
    pub alpha: f64,
    pub fdr: f64,
    pub power: f64,
    pub se_fdr: f64,
    pub se_power: f64,
    pub n_reps: usize,
}

#[derive(Debug, Clone)]
pub struct MonteCarloReport {
    pub rows: Vec<AggregateRow>,
    pub outcomes: Vec<RepOutcome>,
    /// `(repetition, message)` for repetitions that failed.
    pub failures: Vec<(usize, String)>,
}

impl MonteCarloReport {
    pub fn row(&self, method: Method, alpha: f64) -> Option<&AggregateRow> {
        self.rows
            .iter()
            .find(|r| r.method == method && r.alpha == alpha)
    }

    /// Mean null proportion over successful repetitions.
    pub fn null_proportion(&self) -> f64 {
        let v: Vec<f64> = self.outcomes.iter().map(|o| o.null_proportion).collect();
        mean_and_se(&v).0
    }
}

enum Prepared {
    ModelMatched(ModelMatchedScenario),
    Transmitter(TransmitterConfig),
}

impl Prepared {
    fn new(cfg: &ScenarioConfig) -> Result<Self> {
        Ok(match cfg {
            ScenarioConfig::ModelMatched(c) => {
                Prepared::ModelMatched(ModelMatchedScenario::new(c)?)
            }
            ScenarioConfig::Transmitter(c) => {
                c.validate()?;
                Prepared::Transmitter(c.clone())
            }
        })
    }

    fn draw(&self, seed: u64, rep: usize) -> Result<GeneratedData> {
        let mut rng = rep_rng(seed, rep);
        match self {
            Prepared::ModelMatched(s) => s.draw(&mut rng),
            Prepared::Transmitter(c) => draw_transmitter(c, &mut rng),
        }
    }
}

pub fn validate_config(cfg: &MonteCarloConfig) -> Result<()> {
    if cfg.reps == 0 {
        return Err(Error::Config("reps must be at least 1".into()));
    }
    if cfg.methods.is_empty() {
        return Err(Error::Config("methods must be non-empty".into()));
    }
    if cfg.alphas.is_empty() || cfg.alphas.iter().any(|a| !(*a > 0.0 && *a < 1.0)) {
        return Err(Error::Config(
            "alphas must be a non-empty subset of (0, 1)".into(),
        ));
    }
    if cfg.methods.contains(&Method::MhtGgsp) && cfg.fit.candidates().is_empty() {
        return Err(Error::Config("fit grid is empty".into()));
    }
    Ok(())
}

/// Runs one repetition end to end.
pub fn run_repetition(cfg: &MonteCarloConfig, rep: usize, keep_map: bool) -> Result<RepOutcome> {
    let prepared = Prepared::new(&cfg.scenario)?;
    repetition(&prepared, cfg, rep, keep_map)
}

fn repetition(
    prepared: &Prepared,
    cfg: &MonteCarloConfig,
    rep: usize,
    keep_map: bool,
) -> Result<RepOutcome> {
    let data = prepared.draw(cfg.seed, rep)?;
    let theta = data.theta().to_vec();
    let pvals = data.samples.pvalues();

    let mut fit = None;
    let mut rows = Vec::with_capacity(cfg.methods.len() * cfg.alphas.len());
    let mut map = None;
    for &method in &cfg.methods {
        let lfdrs = match method {
            Method::MhtGgsp => {
                let sel = bic_select(
                    &data.samples,
                    &data.basis,
                    &cfg.fit.candidates(),
                    &cfg.fit.options(),
                    &SigmoidBeta,
                )?;
                let sig = BandlimitedSignal::new(data.basis.clone(), sel.best.xi_hat.clone())?;
                let l = lfdr_vector(&data.samples, &sig, &SigmoidBeta, &UniformNull)?;
                fit = Some(sel);
                Some(l)
            }
            Method::Oracle => Some(data.oracle_lfdr()?),
            Method::Bh => None,
        };
        for &alpha in &cfg.alphas {
            let (reject, eta_hat) = match &lfdrs {
                Some(l) => {
                    let d = DetectionResult::from_lfdr(l.clone(), alpha, method.id())?;
                    (d.reject, d.eta_hat)
                }
                None => (bh_procedure(&pvals, alpha)?, None),
            };
            let eval = evaluate(&reject, &theta)?;
            if keep_map && map.is_none() {
                map = Some(DetectionMap {
                    method,
                    alpha,
                    vertex: data.samples.records().iter().map(|r| r.vertex).collect(),
                    time_index: data
                        .samples
                        .records()
                        .iter()
                        .map(|r| r.time_index)
                        .collect(),
                    p: pvals.clone(),
                    lfdr: lfdrs.clone(),
                    rejected: reject.clone(),
                    theta: theta.clone(),
                });
            }
            rows.push(RepRow {
                method,
                alpha,
                eval,
                eta_hat,
            });
        }
    }
    Ok(RepOutcome {
        rep,
        rows,
        fit,
        null_proportion: data.null_proportion(),
        n_samples: data.samples.len(),
        map,
    })
}

/// Runs `cfg.reps` repetitions and aggregates mean FDP (the FDR estimate)
/// and mean TPP (the power estimate) with standard errors per
/// `(method, alpha)`. Failed repetitions are reported in
/// [`MonteCarloReport::failures`]; an error is returned only when the
/// configuration is invalid or every repetition fails.
pub fn monte_carlo(cfg: &MonteCarloConfig, opts: RunOptions) -> Result<MonteCarloReport> {
    validate_config(cfg)?;
    let prepared = Prepared::new(&cfg.scenario)?;
    let run_one = |rep: usize| {
        repetition(&prepared, cfg, rep, opts.keep_maps).map_err(|e| Error::Repetition {
            rep,
            source: Box::new(e),
        })
    };
    let results: Vec<Result<RepOutcome>> = match opts.jobs {
        Some(1) => (0..cfg.reps).map(run_one).collect(),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?
            .install(|| (0..cfg.reps).into_par_iter().map(run_one).collect()),
        None => (0..cfg.reps).into_par_iter().map(run_one).collect(),
    };

    let mut outcomes = Vec::with_capacity(cfg.reps);
    let mut failures = Vec::new();
    let mut first_err = None;
    for (rep, r) in results.into_iter().enumerate() {
        match r {
            Ok(o) => outcomes.push(o),
            Err(e) => {
                failures.push((rep, e.to_string()));
                first_err.get_or_insert(e);
            }
        }
    }
    if outcomes.is_empty() {
        return Err(first_err.expect("reps >= 1"));
    }
    Ok(MonteCarloReport {
        rows: aggregate(cfg, &outcomes),
        outcomes,
        failures,
    })
}

fn aggregate(cfg: &MonteCarloConfig, outcomes: &[RepOutcome]) -> Vec<AggregateRow> {
    let mut rows = Vec::new();
    for &method in &cfg.methods {
        for &alpha in &cfg.alphas {
            let evals: Vec<&EvalRecord> = outcomes
                .iter()
                .filter_map(|o| {
                    o.rows
                        .iter()
                        .find(|r| r.method == method && r.alpha == alpha)
                })
                .map(|r| &r.eval)
                .collect();
            let fdp: Vec<f64> = evals.iter().map(|e| e.fdp).collect();
            let tpp: Vec<f64> = evals.iter().map(|e| e.tpp).collect();
            let (fdr, se_fdr) = mean_and_se(&fdp);
            let (power, se_power) = mean_and_se(&tpp);
            rows.push(AggregateRow {
                method,
                alpha,
                fdr,
                power,
                se_fdr,
                se_power,
                n_reps: evals.len(),
            });
        }
    }
    rows
}

pub const RESULTS_HEADER: &str = "method,alpha,rep,fdr,power,se_fdr,se_power";

/// Aggregate table; the `rep` column is empty.
pub fn write_results_csv<W: Write>(rows: &[AggregateRow], mut out: W) -> Result<()> {
    writeln!(out, "{RESULTS_HEADER}")?;
    for r in rows {
        writeln!(
            out,
            "{},{},,{},{},{},{}",
            r.method.id(),
            r.alpha,
            r.fdr,
            r.power,
            r.se_fdr,
            r.se_power
        )?;
    }
    Ok(())
}

/// One row per repetition and `(method, alpha)`; standard-error columns are
/// empty.
pub fn write_rep_results_csv<W: Write>(outcomes: &[RepOutcome], mut out: W) -> Result<()> {
    writeln!(out, "{RESULTS_HEADER}")?;
    for o in outcomes {
        for r in &o.rows {
            writeln!(
                out,
                "{},{},{},{},{},,",
                r.method.id(),
                r.alpha,
                o.rep,
                r.eval.fdp,
                r.eval.tpp
            )?;
        }
    }
    Ok(())
}

/// `vertex,time_index,p,lfdr,rejected,theta`; `lfdr` is empty for BH and
/// `time_index` for off-grid samples.
pub fn write_detection_map<W: Write>(map: &DetectionMap, mut out: W) -> Result<()> {
    writeln!(out, "vertex,time_index,p,lfdr,rejected,theta")?;
    for i in 0..map.vertex.len() {
        let ti = map.time_index[i].map(|t| t.to_string()).unwrap_or_default();
        let l = map
            .lfdr
            .as_ref()
            .map(|l| l[i].to_string())
            .unwrap_or_default();
        writeln!(
            out,
            "{},{},{},{},{},{}",
            map.vertex[i], ti, map.p[i], l, map.rejected[i] as u8, map.theta[i] as u8
        )?;
    }
    Ok(())
}
