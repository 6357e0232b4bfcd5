//! Maximum-likelihood fitting of the coefficient matrix `Xi` and BIC model
//! order selection.
//!
//! The objective is `l(Xi) = sum_m ln f_mix(p_m | gamma(v_m, t_m; Xi))`. The
//! sampling density of `(v_m, t_m)` only adds a constant and is dropped. The
//! maximizer is found over the box `[-B, B]^{K1 x K2}` by projected gradient
//! ascent with Barzilai-Borwein step proposals and Armijo backtracking, so
//! every accepted iterate increases the objective.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::basis::{check_time, default_bound, Coefficients, JointBasis};
use crate::error::{Error, Result};
use crate::pvalue::{clamp_p, MixtureFamily};

/// One tested hypothesis: where it sits in the joint domain and its p-value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub vertex: usize,
    pub time: f64,
    pub p: f64,
    /// Position on the time grid, when the design is a grid.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time_index: Option<usize>,
}

impl Sample {
    pub fn new(vertex: usize, time: f64, p: f64) -> Self {
        Self {
            vertex,
            time,
            p,
            time_index: None,
        }
    }
}

/// Samples with optional ground truth (`true` = alternative). P-values are
/// clamped into `[1e-15, 1]` on construction.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    records: Vec<Sample>,
    truth: Option<Vec<bool>>,
    clamp_count: usize,
}

impl SampleSet {
    pub fn new(mut records: Vec<Sample>, truth: Option<Vec<bool>>) -> Result<Self> {
        if records.is_empty() {
            return Err(Error::EmptySample);
        }
        if let Some(t) = &truth {
            if t.len() != records.len() {
                return Err(Error::ShapeError(format!(
                    "{} truth labels for {} samples",
                    t.len(),
                    records.len()
                )));
            }
        }
        let mut clamp_count = 0;
        for (i, r) in records.iter_mut().enumerate() {
            check_time(r.time).map_err(|e| Error::DomainError(format!("sample {i}: {e}")))?;
            let (p, moved) =
                clamp_p(r.p).map_err(|e| Error::DomainError(format!("sample {i}: {e}")))?;
            r.p = p;
            clamp_count += moved as usize;
        }
        Ok(Self {
            records,
            truth,
            clamp_count,
        })
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn records(&self) -> &[Sample] {
        &self.records
    }

    pub fn truth(&self) -> Option<&[bool]> {
        self.truth.as_deref()
    }

    pub fn clamp_count(&self) -> usize {
        self.clamp_count
    }

    pub fn pvalues(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.p).collect()
    }

    /// Keeps the first `m` records.
    pub fn truncated(&self, m: usize) -> Result<Self> {
        let m = m.min(self.len());
        Self::new(
            self.records[..m].to_vec(),
            self.truth.as_ref().map(|t| t[..m].to_vec()),
        )
    }

    /// Concatenation; truth is kept only if both sides carry it.
    pub fn concat(&self, other: &SampleSet) -> Self {
        let mut records = self.records.clone();
        records.extend_from_slice(&other.records);
        let truth = match (&self.truth, &other.truth) {
            (Some(a), Some(b)) => Some([a.as_slice(), b.as_slice()].concat()),
            _ => None,
        };
        Self {
            records,
            truth,
            clamp_count: self.clamp_count + other.clamp_count,
        }
    }

    pub fn check_vertices(&self, n_vertices: usize) -> Result<()> {
        match self.records.iter().position(|r| r.vertex >= n_vertices) {
            Some(i) => Err(Error::DomainError(format!(
                "sample {i}: vertex {} >= {n_vertices}",
                self.records[i].vertex
            ))),
            None => Ok(()),
        }
    }
}

/// Precomputed design rows and `ln p` for one model order.
#[derive(Debug, Clone)]
pub struct LikelihoodProblem<'a, F: MixtureFamily + ?Sized> {
    k1: usize,
    k2: usize,
    design: Vec<f64>,
    ln_p: Vec<f64>,
    family: &'a F,
}

impl<'a, F: MixtureFamily + ?Sized> LikelihoodProblem<'a, F> {
    pub fn new(
        basis: &JointBasis,
        samples: &SampleSet,
        k1: usize,
        k2: usize,
        family: &'a F,
    ) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::EmptySample);
        }
        basis.check_order(k1, k2)?;
        samples.check_vertices(basis.n_vertices())?;
        let k = k1 * k2;
        let mut design = vec![0.0; samples.len() * k];
        for (r, row) in samples.records().iter().zip(design.chunks_exact_mut(k)) {
            basis.fill_row(r.vertex, r.time, k1, k2, row);
        }
        let ln_p = samples.records().iter().map(|r| r.p.ln()).collect();
        Ok(Self {
            k1,
            k2,
            design,
            ln_p,
            family,
        })
    }

    pub fn dim(&self) -> usize {
        self.k1 * self.k2
    }

    pub fn n_samples(&self) -> usize {
        self.ln_p.len()
    }

    fn rows(&self) -> impl Iterator<Item = (usize, &[f64], f64)> + '_ {
        self.design
            .chunks_exact(self.dim())
            .zip(&self.ln_p)
            .enumerate()
            .map(|(i, (row, &lp))| (i, row, lp))
    }

    fn check_dim(&self, xi: &[f64]) -> Result<()> {
        if xi.len() != self.dim() {
            return Err(Error::ShapeError(format!(
                "coefficient vector has length {}, expected {}",
                xi.len(),
                self.dim()
            )));
        }
        Ok(())
    }

    /// `gamma` at every sample.
    pub fn gammas(&self, xi: &[f64]) -> Vec<f64> {
        self.design
            .chunks_exact(self.dim())
            .map(|row| dot(row, xi))
            .collect()
    }

    pub fn log_likelihood(&self, xi: &[f64]) -> Result<f64> {
        self.check_dim(xi)?;
        let mut total = 0.0;
        for (i, row, lp) in self.rows() {
            let term = self.family.ln_density_at_log_p(lp, dot(row, xi));
            if !term.is_finite() {
                return Err(Error::numerical(i, format!("log-density {term}")));
            }
            total += term;
        }
        Ok(total)
    }

    /// Gradient flattened row-major in `(k1, k2)`.
    pub fn gradient(&self, xi: &[f64]) -> Result<Vec<f64>> {
        Ok(self.value_and_gradient(xi)?.1)
    }

    pub fn value_and_gradient(&self, xi: &[f64]) -> Result<(f64, Vec<f64>)> {
        self.check_dim(xi)?;
        let mut total = 0.0;
        let mut grad = vec![0.0; self.dim()];
        for (i, row, lp) in self.rows() {
            let zeta = dot(row, xi);
            let term = self.family.ln_density_at_log_p(lp, zeta);
            let slope = self.family.dlog_dzeta_at_log_p(lp, zeta);
            if !term.is_finite() || !slope.is_finite() {
                return Err(Error::numerical(
                    i,
                    format!("log-density {term}, slope {slope}"),
                ));
            }
            total += term;
            for (g, x) in grad.iter_mut().zip(row) {
                *g += slope * x;
            }
        }
        Ok((total, grad))
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `sum_m ln f_mix(p_m | gamma(v_m, t_m; Xi))`.
pub fn log_likelihood<F: MixtureFamily + ?Sized>(
    xi: &Coefficients,
    samples: &SampleSet,
    basis: &JointBasis,
    family: &F,
) -> Result<f64> {
    xi.validate()?;
    LikelihoodProblem::new(basis, samples, xi.k1, xi.k2, family)?.log_likelihood(&xi.values)
}

/// Gradient of [`log_likelihood`] with respect to `Xi`, as a `K1 x K2` matrix.
pub fn gradient<F: MixtureFamily + ?Sized>(
    xi: &Coefficients,
    samples: &SampleSet,
    basis: &JointBasis,
    family: &F,
) -> Result<DMatrix<f64>> {
    xi.validate()?;
    let g = LikelihoodProblem::new(basis, samples, xi.k1, xi.k2, family)?.gradient(&xi.values)?;
    Ok(DMatrix::from_row_slice(xi.k1, xi.k2, &g))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitOptions {
    /// Box bound `B`. `None` resolves to [`default_bound`] for the graph.
    pub bound: Option<f64>,
    /// Projected-gradient infinity-norm tolerance.
    pub tol: f64,
    /// Relative objective change that stops the ascent.
    pub rel_tol: f64,
    pub max_iters: usize,
    /// Starting point; zero when absent.
    #[serde(skip)]
    pub init: Option<Coefficients>,
    /// Keep the objective value of every iterate in [`FitResult::trace`].
    #[serde(skip)]
    pub record_trace: bool,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            bound: None,
            tol: 1e-6,
            rel_tol: 1e-10,
            max_iters: 5000,
            init: None,
            record_trace: false,
        }
    }
}

impl FitOptions {
    pub fn resolved_bound(&self, n_vertices: usize) -> f64 {
        self.bound.unwrap_or_else(|| default_bound(n_vertices))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    #[serde(rename = "Xi_hat")]
    pub xi_hat: Coefficients,
    pub loglik: f64,
    pub iterations: usize,
    pub converged: bool,
    pub bic: f64,
    pub clamp_count: usize,
    pub n_samples: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub trace: Vec<f64>,
}

impl FitResult {
    pub fn k1(&self) -> usize {
        self.xi_hat.k1
    }

    pub fn k2(&self) -> usize {
        self.xi_hat.k2
    }
}

/// `K1 K2 ln M - 2 l*`.
pub fn bic(k1: usize, k2: usize, n_samples: usize, loglik: f64) -> f64 {
    (k1 * k2) as f64 * (n_samples as f64).ln() - 2.0 * loglik
}

const ARMIJO_SLOPE: f64 = 1e-4;
const SHRINK: f64 = 0.5;
const MIN_STEP: f64 = 1e-20;
const STEP_RANGE: (f64, f64) = (1e-12, 1e12);

/// Box-constrained maximum-likelihood estimate of `Xi` for order `(k1, k2)`.
pub fn fit_mle<F: MixtureFamily + ?Sized>(
    samples: &SampleSet,
    basis: &JointBasis,
    k1: usize,
    k2: usize,
    opts: &FitOptions,
    family: &F,
) -> Result<FitResult> {
    if samples.is_empty() {
        return Err(Error::EmptySample);
    }
    let problem = LikelihoodProblem::new(basis, samples, k1, k2, family)?;
    let bound = opts.resolved_bound(basis.n_vertices());
    if !(bound > 0.0) {
        return Err(Error::DomainError(format!(
            "box bound {bound} must be positive"
        )));
    }
    let project = |x: f64| x.clamp(-bound, bound);

    let mut x: Vec<f64> = match &opts.init {
        Some(c) => {
            if (c.k1, c.k2) != (k1, k2) {
                return Err(Error::ShapeError(format!(
                    "initial Xi is {}x{}, expected {k1}x{k2}",
                    c.k1, c.k2
                )));
            }
            c.values.iter().map(|&v| project(v)).collect()
        }
        None => vec![0.0; k1 * k2],
    };
    let (mut f, mut g) = problem.value_and_gradient(&x)?;
    let mut trace = Vec::new();
    if opts.record_trace {
        trace.push(f);
    }

    let mut step = 1.0;
    let mut converged = false;
    let mut iterations = 0;
    let mut trial = vec![0.0; x.len()];
    while iterations < opts.max_iters {
        let pg_norm = x
            .iter()
            .zip(&g)
            .map(|(&xi, &gi)| (project(xi + gi) - xi).abs())
            .fold(0.0, f64::max);
        if pg_norm <= opts.tol {
            converged = true;
            break;
        }

        let mut s = step;
        let accepted = loop {
            for ((t, &xi), &gi) in trial.iter_mut().zip(&x).zip(&g) {
                *t = project(xi + s * gi);
            }
            let ascent: f64 = trial
                .iter()
                .zip(&x)
                .zip(&g)
                .map(|((t, xi), gi)| (t - xi) * gi)
                .sum();
            match problem.log_likelihood(&trial) {
                Ok(ft) if ft >= f + ARMIJO_SLOPE * ascent => break Some(ft),
                Ok(_) | Err(Error::NumericalError { .. }) => {}
                Err(e) => return Err(e),
            }
            s *= SHRINK;
            if s < MIN_STEP {
                break None;
            }
        };
        let Some(f_new) = accepted else {
            // no ascent left at working precision
            break;
        };
        debug_assert!(f_new >= f);

        let (_, g_new) = problem.value_and_gradient(&trial)?;
        let mut ss = 0.0;
        let mut sy = 0.0;
        for i in 0..x.len() {
            let d = trial[i] - x[i];
            ss += d * d;
            sy += d * (g_new[i] - g[i]);
        }
        // Barzilai-Borwein proposal for a concave objective; grow otherwise
        step = if sy < 0.0 { ss / -sy } else { 2.0 * s };
        step = step.clamp(STEP_RANGE.0, STEP_RANGE.1);

        let rel_change = (f_new - f).abs() / f.abs().max(1.0);
        std::mem::swap(&mut x, &mut trial);
        f = f_new;
        g = g_new;
        iterations += 1;
        if opts.record_trace {
            trace.push(f);
        }
        if rel_change <= opts.rel_tol {
            converged = true;
            break;
        }
    }

    let m = samples.len();
    Ok(FitResult {
        xi_hat: Coefficients {
            k1,
            k2,
            bound,
            values: x,
        },
        loglik: f,
        iterations,
        converged,
        bic: bic(k1, k2, m, f),
        clamp_count: samples.clamp_count(),
        n_samples: m,
        trace,
    })
}

/// One row of the BIC table. Failed candidates keep their error message.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BicCandidate {
    #[serde(rename = "K1")]
    pub k1: usize,
    #[serde(rename = "K2")]
    pub k2: usize,
    pub loglik: Option<f64>,
    pub bic: Option<f64>,
    pub converged: bool,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BicSelection {
    pub best: FitResult,
    pub table: Vec<BicCandidate>,
}

/// `K1 in {1, 2, 3, 4}`, `K2 in {1, 3, 5, 7}`.
pub fn default_bic_grid() -> Vec<(usize, usize)> {
    let mut grid = Vec::with_capacity(16);
    for k1 in 1..=4 {
        for k2 in [1, 3, 5, 7] {
            grid.push((k1, k2));
        }
    }
    grid
}

/// Fits every candidate order and keeps the minimum-BIC fit. Ties go to the
/// smaller `K1 K2`, then the smaller `K1`. Candidates are fitted in parallel
/// and reported in grid order.
pub fn bic_select<F: MixtureFamily + ?Sized>(
    samples: &SampleSet,
    basis: &JointBasis,
    grid: &[(usize, usize)],
    opts: &FitOptions,
    family: &F,
) -> Result<BicSelection> {
    if grid.is_empty() {
        return Err(Error::Config("BIC grid is empty".into()));
    }
    if samples.is_empty() {
        return Err(Error::EmptySample);
    }
    let fits: Vec<Result<FitResult>> = grid
        .par_iter()
        .map(|&(k1, k2)| fit_mle(samples, basis, k1, k2, opts, family))
        .collect();

    let mut table = Vec::with_capacity(grid.len());
    let mut best: Option<FitResult> = None;
    let mut first_err = None;
    for (&(k1, k2), fit) in grid.iter().zip(fits) {
        match fit {
            Ok(fit) => {
                table.push(BicCandidate {
                    k1,
                    k2,
                    loglik: Some(fit.loglik),
                    bic: Some(fit.bic),
                    converged: fit.converged,
                    error: None,
                });
                if best.as_ref().is_none_or(|b| better(&fit, b)) {
                    best = Some(fit);
                }
            }
            Err(e) => {
                table.push(BicCandidate {
                    k1,
                    k2,
                    loglik: None,
                    bic: None,
                    converged: false,
                    error: Some(e.to_string()),
                });
                first_err.get_or_insert(e);
            }
        }
    }
    match best {
        Some(best) => Ok(BicSelection { best, table }),
        None => Err(first_err.unwrap_or(Error::EmptySample)),
    }
}

fn better(a: &FitResult, b: &FitResult) -> bool {
    let key = |f: &FitResult| (f.k1() * f.k2(), f.k1());
    match a.bic.total_cmp(&b.bic) {
        std::cmp::Ordering::Less => true,
        std::cmp::Ordering::Greater => false,
        std::cmp::Ordering::Equal => key(a) < key(b),
    }
}
