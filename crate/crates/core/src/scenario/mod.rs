//! Synthetic data: a sampler that follows the two-group model exactly, and a
//! wireless-transmitter scenario with path loss, lognormal shadowing and
//! additive noise.

mod gp;
mod model_matched;
pub(crate) mod transmitter;

use std::f64::consts::PI;
use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::basis::{BandlimitedSignal, JointBasis};
use crate::detector::lfdr_vector;
use crate::error::{Error, Result};
use crate::estimator::SampleSet;
use crate::graph::Point;
use crate::pvalue::{SigmoidBeta, UniformNull};

pub use gp::{gp_sample, GpField};
pub use model_matched::{gen_model_matched, ModelMatchedConfig, ModelMatchedScenario, Sampling};
pub use transmitter::{
    gen_transmitter_scenario, propagation_lfdr, two_sided_p_value, PropagationModel,
    TransmitterConfig, DEFAULT_X0, DESK_X0,
};

/// Deterministic RNG stream for repetition `rep` of a run seeded with `seed`.
pub fn rep_rng(seed: u64, rep: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(rep as u64);
    rng
}

/// `T + 1` equally spaced instants `-pi + 2 pi j / T`, `j = 0..=T`.
pub fn grid_times(t: usize) -> Result<Vec<f64>> {
    if t == 0 {
        return Err(Error::DegenerateInput("time grid needs T >= 1".into()));
    }
    Ok((0..=t)
        .map(|j| (-PI + 2.0 * PI * j as f64 / t as f64).min(PI))
        .collect())
}

/// What generated the data, kept for oracle detection and diagnostics.
#[derive(Debug, Clone)]
pub enum Truth {
    /// Model-matched data: the true signal and its value at every sample.
    Signal {
        signal: BandlimitedSignal,
        gamma: Vec<f64>,
    },
    /// Transmitter data: per-sample distance to the nearest transmitter,
    /// deterministic received power, and the observation `y`.
    Propagation {
        distance: Vec<f64>,
        path_gain: Vec<f64>,
        observed: Vec<f64>,
        model: PropagationModel,
    },
}

#[derive(Debug, Clone)]
pub struct GeneratedData {
    pub basis: JointBasis,
    pub coords: Vec<Point>,
    /// Samples with ground truth attached.
    pub samples: SampleSet,
    pub truth: Truth,
    /// Transmitter positions per time instant; empty for model-matched data.
    pub transmitter_paths: Vec<Vec<Point>>,
}

impl GeneratedData {
    pub fn theta(&self) -> &[bool] {
        self.samples
            .truth()
            .expect("generated samples always carry truth")
    }

    /// Fraction of true nulls.
    pub fn null_proportion(&self) -> f64 {
        let theta = self.theta();
        theta.iter().filter(|&&t| !t).count() as f64 / theta.len() as f64
    }

    /// lfdr computed from the data-generating law.
    pub fn oracle_lfdr(&self) -> Result<Vec<f64>> {
        match &self.truth {
            Truth::Signal { signal, .. } => {
                lfdr_vector(&self.samples, signal, &SigmoidBeta, &UniformNull)
            }
            Truth::Propagation {
                path_gain,
                observed,
                model,
                ..
            } => Ok(path_gain
                .iter()
                .zip(observed)
                .map(|(&a, &y)| propagation_lfdr(y.abs(), a, model))
                .collect()),
        }
    }

    /// `vertex,time,p,theta` with `theta` as 0/1.
    pub fn write_samples_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "vertex,time,p,theta")?;
        for (r, &t) in self.samples.records().iter().zip(self.theta()) {
            writeln!(out, "{},{},{},{}", r.vertex, r.time, r.p, t as u8)?;
        }
        Ok(())
    }

    /// Metadata document: the generating config, measured null proportion
    /// and transmitter paths.
    pub fn metadata<C: Serialize>(&self, config: &C) -> Result<serde_json::Value> {
        Ok(serde_json::to_value(Metadata {
            config: serde_json::to_value(config)?,
            n_samples: self.samples.len(),
            n_vertices: self.basis.n_vertices(),
            null_proportion: self.null_proportion(),
            clamp_count: self.samples.clamp_count(),
            transmitter_paths: &self.transmitter_paths,
        })?)
    }
}

#[derive(Serialize)]
struct Metadata<'a> {
    config: serde_json::Value,
    n_samples: usize,
    n_vertices: usize,
    null_proportion: f64,
    clamp_count: usize,
    transmitter_paths: &'a [Vec<Point>],
}
