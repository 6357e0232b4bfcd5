//! Moving transmitters observed by a sensor network.
//!
//! At every grid instant each transmitter takes a random-walk step. A sensor
//! at distance `d` from transmitter `j` receives, in dB,
//! `10 log10 x0 + 20 log10(lambda / (4 pi d)) + s + C`, where `s` is a fresh
//! Gaussian-process shadowing field per instant. Received linear powers add
//! over transmitters; the measurement is `y = x + e` with Gaussian noise.
//! The null hypothesis is `|x| <= tau0` and the p-value treats `x` as zero
//! under the null, so `y^2 / sigma_e^2` is chi-squared with one degree of
//! freedom.

use std::f64::consts::PI;
use std::sync::Arc;

use rand::seq::index::sample as sample_indices;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use super::{grid_times, GeneratedData, GpField, Truth};
use crate::basis::JointBasis;
use crate::error::{Error, Result};
use crate::estimator::{Sample, SampleSet};
use crate::graph::{build_knn_graph, Point, SpectralBasis};

/// Distances below this are treated as this (far-field reference distance).
const MIN_DISTANCE: f64 = 1.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TransmitterConfig {
    /// Side length of the square lattice of candidate positions.
    pub grid_side: usize,
    pub n_sensors: usize,
    pub knn_k: usize,
    pub n_transmitters: usize,
    /// Number of grid intervals; the scenario has `T + 1` instants.
    #[serde(rename = "T")]
    pub t: usize,
    /// Transmit power (linear).
    pub x0: f64,
    pub lambda: f64,
    /// Additive constant in dB.
    pub const_c: f64,
    /// Variance of the shadowing field in dB^2.
    pub gp_variance: f64,
    /// Shadowing correlation length in grid units.
    pub gp_length_scale: f64,
    /// Noise variance `sigma_e^2`.
    pub noise_var: f64,
    pub tau0: f64,
    /// Each walk step moves by one of `{-step, 0, +step}` per axis.
    pub walk_step: usize,
    pub seed: u64,
}

impl Default for TransmitterConfig {
    fn default() -> Self {
        Self {
            grid_side: 100,
            n_sensors: 300,
            knn_k: 10,
            n_transmitters: 2,
            t: 9,
            x0: DEFAULT_X0,
            lambda: 0.125,
            const_c: 0.0,
            gp_variance: 4.0,
            gp_length_scale: 10.0,
            noise_var: 1.5,
            tau0: 0.1,
            walk_step: 3,
            seed: 0,
        }
    }
}

/// Transmit power at which the default geometry has roughly 10% nulls.
/// Reproduce with `cargo run --release --example calibrate_transmitter`.
pub const DEFAULT_X0: f64 = 3.2e6;

/// Transmit power at which the [`TransmitterConfig::desk_scale`] geometry
/// has roughly 10% nulls.
pub const DESK_X0: f64 = 1.34e5;

impl TransmitterConfig {
    /// A 20 x 20 lattice with 100 sensors and a proportionally shorter
    /// shadowing correlation length.
    pub fn desk_scale() -> Self {
        Self {
            grid_side: 20,
            n_sensors: 100,
            gp_length_scale: 2.0,
            x0: DESK_X0,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::Config(format!("transmitter: {what}")));
        if self.grid_side < 2 {
            return bad("grid_side must be at least 2");
        }
        if self.n_sensors < 2 || self.n_sensors > self.grid_side * self.grid_side {
            return bad("n_sensors must be in [2, grid_side^2]");
        }
        if self.knn_k == 0 || self.n_transmitters == 0 || self.t == 0 {
            return bad("knn_k, n_transmitters and T must be positive");
        }
        let positive = [
            ("lambda", self.lambda),
            ("gp_variance", self.gp_variance),
            ("gp_length_scale", self.gp_length_scale),
            ("noise_var", self.noise_var),
            ("tau0", self.tau0),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return bad(&format!("{name} must be positive, got {v}"));
            }
        }
        if !(self.x0 >= 0.0 && self.x0.is_finite()) || !self.const_c.is_finite() {
            return bad("x0 must be non-negative and C finite");
        }
        Ok(())
    }

    pub fn propagation_model(&self) -> PropagationModel {
        PropagationModel {
            shadow_sd_db: self.gp_variance.sqrt(),
            tau0: self.tau0,
            noise_sd: self.noise_var.sqrt(),
        }
    }

    /// `x0 10^(C/10) sum_j (lambda / (4 pi d_j))^2`: the received power before shadowing.
    fn path_gain(&self, sensor: Point, transmitters: &[Point]) -> (f64, f64) {
        let mut gain = 0.0;
        let mut nearest = f64::INFINITY;
        for c in transmitters {
            let d = ((sensor[0] - c[0]).powi(2) + (sensor[1] - c[1]).powi(2)).sqrt();
            nearest = nearest.min(d);
            let ratio = self.lambda / (4.0 * PI * d.max(MIN_DISTANCE));
            gain += ratio * ratio;
        }
        (self.x0 * 10f64.powf(self.const_c / 10.0) * gain, nearest)
    }
}

/// Parameters needed to compute the exact null posterior of one sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PropagationModel {
    pub shadow_sd_db: f64,
    pub tau0: f64,
    pub noise_sd: f64,
}

/// `P(chi2_1 >= (y / sigma)^2) = erfc(|y| / (sigma sqrt 2))`.
pub fn two_sided_p_value(y: f64, noise_sd: f64) -> f64 {
    erfc(y.abs() / (noise_sd * std::f64::consts::SQRT_2))
}

const QUAD_HALF_WIDTH: f64 = 8.0;
const QUAD_PANELS: usize = 2000;

/// Posterior probability that `|x| <= tau0` given `|y| = abs_y`, where
/// `x = gain 10^(s / 10)` with `s ~ N(0, shadow_sd^2)` and
/// `y = x + N(0, noise_sd^2)`. This is the lfdr of the p-value, since the
/// p-value is a monotone function of `|y|`.
pub fn propagation_lfdr(abs_y: f64, gain: f64, model: &PropagationModel) -> f64 {
    if gain <= 0.0 {
        return 1.0;
    }
    let sd = model.shadow_sd_db;
    // standardized shadowing at which x crosses tau0
    let z_star = 10.0 * (model.tau0 / gain).log10() / sd;
    if z_star <= -QUAD_HALF_WIDTH {
        return 0.0;
    }
    if z_star >= QUAD_HALF_WIDTH {
        return 1.0;
    }
    let two_var = 2.0 * model.noise_sd * model.noise_sd;
    let log_weight = |z: f64| {
        let x = gain * 10f64.powf(sd * z / 10.0);
        let a = -(abs_y - x).powi(2) / two_var;
        let b = -(abs_y + x).powi(2) / two_var;
        -0.5 * z * z + a.max(b) + (-(a - b).abs()).exp().ln_1p()
    };
    let null = log_simpson(&log_weight, -QUAD_HALF_WIDTH, z_star);
    let alt = log_simpson(&log_weight, z_star, QUAD_HALF_WIDTH);
    let hi = null.max(alt);
    let num = (null - hi).exp();
    (num / (num + (alt - hi).exp())).clamp(0.0, 1.0)
}

/// `ln int_a^b exp(f(z)) dz` by composite Simpson in log space.
fn log_simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    let n = QUAD_PANELS;
    let h = (b - a) / n as f64;
    let terms: Vec<f64> = (0..=n)
        .map(|i| {
            let w = if i == 0 || i == n {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            };
            f(a + i as f64 * h) + (w * h / 3.0f64).ln()
        })
        .collect();
    let hi = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if hi == f64::NEG_INFINITY {
        return hi;
    }
    hi + terms.iter().map(|t| (t - hi).exp()).sum::<f64>().ln()
}

fn step_walk<R: Rng + ?Sized>(pos: &mut Point, step: usize, side: usize, rng: &mut R) {
    let max = (side - 1) as f64;
    for c in pos.iter_mut() {
        let delta = rng.random_range(-1i64..=1) as f64 * step as f64;
        *c = (*c + delta).clamp(0.0, max);
    }
}

/// Draws one transmitter data set from `rng`.
pub(crate) fn draw_transmitter<R: Rng + ?Sized>(
    cfg: &TransmitterConfig,
    rng: &mut R,
) -> Result<GeneratedData> {
    cfg.validate()?;
    let side = cfg.grid_side;
    let coords: Vec<Point> = sample_indices(rng, side * side, cfg.n_sensors)
        .into_iter()
        .map(|i| [(i % side) as f64, (i / side) as f64])
        .collect();
    let graph = build_knn_graph(&coords, cfg.knn_k)?.graph;
    let basis = JointBasis::new(Arc::new(SpectralBasis::of_graph(&graph)?));
    let field = GpField::new(&coords, cfg.gp_variance, cfg.gp_length_scale)?;
    let noise =
        Normal::new(0.0, cfg.noise_var.sqrt()).map_err(|e| Error::Config(format!("noise: {e}")))?;

    let mut positions: Vec<Point> = (0..cfg.n_transmitters)
        .map(|_| {
            [
                rng.random_range(0..side) as f64,
                rng.random_range(0..side) as f64,
            ]
        })
        .collect();

    let times = grid_times(cfg.t)?;
    let m = times.len() * cfg.n_sensors;
    let mut records = Vec::with_capacity(m);
    let mut theta = Vec::with_capacity(m);
    let mut distance = Vec::with_capacity(m);
    let mut path_gain = Vec::with_capacity(m);
    let mut observed = Vec::with_capacity(m);
    let mut paths = Vec::with_capacity(times.len());
    let noise_sd = cfg.noise_var.sqrt();

    for (j, &t) in times.iter().enumerate() {
        if j > 0 {
            for pos in positions.iter_mut() {
                step_walk(pos, cfg.walk_step, side, rng);
            }
        }
        paths.push(positions.clone());
        let shadow = field.sample(rng);
        for (v, &sensor) in coords.iter().enumerate() {
            let (gain, nearest) = cfg.path_gain(sensor, &positions);
            let x = gain * 10f64.powf(shadow[v] / 10.0);
            let y = x + noise.sample(rng);
            records.push(Sample {
                vertex: v,
                time: t,
                p: two_sided_p_value(y, noise_sd),
                time_index: Some(j),
            });
            theta.push(x.abs() > cfg.tau0);
            distance.push(nearest);
            path_gain.push(gain);
            observed.push(y);
        }
    }

    Ok(GeneratedData {
        basis,
        coords,
        samples: SampleSet::new(records, Some(theta))?,
        truth: Truth::Propagation {
            distance,
            path_gain,
            observed,
            model: cfg.propagation_model(),
        },
        transmitter_paths: paths,
    })
}

/// Generates one transmitter data set using `cfg.seed`.
pub fn gen_transmitter_scenario(cfg: &TransmitterConfig) -> Result<GeneratedData> {
    draw_transmitter(cfg, &mut ChaCha8Rng::seed_from_u64(cfg.seed))
}
