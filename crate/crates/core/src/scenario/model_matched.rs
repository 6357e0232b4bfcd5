use std::f64::consts::PI;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{grid_times, GeneratedData, Truth};
use crate::basis::{BandlimitedSignal, Coefficients, JointBasis};
use crate::error::{Error, Result};
use crate::estimator::{Sample, SampleSet};
use crate::graph::{build_knn_graph, Point, SpectralBasis};
use crate::pvalue::sigmoid;

/// Where the hypotheses sit in the joint domain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Sampling {
    /// `m` points drawn uniformly from `V x [-pi, pi]`.
    IidUniform { m: usize },
    /// Every vertex at each of the `t + 1` grid instants.
    Grid { t: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelMatchedConfig {
    pub n_sensors: usize,
    pub knn_k: usize,
    /// Sensors are placed uniformly in `[0, extent]^2`.
    pub extent: f64,
    /// Seeds the sensor placement, which stays fixed across repetitions.
    #[serde(default)]
    pub graph_seed: u64,
    /// True coefficients, `xi_true[k1][k2]`.
    pub xi_true: Vec<Vec<f64>>,
    /// Box bound; defaults to the estimator's default for the graph size.
    #[serde(default)]
    pub bound: Option<f64>,
    pub sampling: Sampling,
    /// Seed for [`gen_model_matched`]; repetitions use their own streams.
    #[serde(default)]
    pub seed: u64,
}

impl ModelMatchedConfig {
    pub fn k1(&self) -> usize {
        self.xi_true.len()
    }

    pub fn k2(&self) -> usize {
        self.xi_true.first().map_or(0, Vec::len)
    }
}

/// A prepared model-matched scenario: the sensor graph, its basis and the
/// true signal are built once; [`ModelMatchedScenario::draw`] then samples
/// independent data sets.
#[derive(Debug, Clone)]
pub struct ModelMatchedScenario {
    config: ModelMatchedConfig,
    coords: Vec<Point>,
    signal: BandlimitedSignal,
}

impl ModelMatchedScenario {
    pub fn new(config: &ModelMatchedConfig) -> Result<Self> {
        if !(config.extent > 0.0) {
            return Err(Error::Config(format!(
                "extent {} must be positive",
                config.extent
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(config.graph_seed);
        let coords: Vec<Point> = (0..config.n_sensors)
            .map(|_| {
                [
                    rng.random_range(0.0..config.extent),
                    rng.random_range(0.0..config.extent),
                ]
            })
            .collect();
        let graph = build_knn_graph(&coords, config.knn_k)?.graph;
        let spectral = Arc::new(SpectralBasis::of_graph(&graph)?);
        let bound = config
            .bound
            .unwrap_or_else(|| crate::basis::default_bound(config.n_sensors));
        let coeffs = Coefficients::from_rows(&config.xi_true, bound)?;
        let signal = BandlimitedSignal::new(JointBasis::new(spectral), coeffs)?;
        Ok(Self {
            config: config.clone(),
            coords,
            signal,
        })
    }

    pub fn signal(&self) -> &BandlimitedSignal {
        &self.signal
    }

    pub fn config(&self) -> &ModelMatchedConfig {
        &self.config
    }

    /// Draws `p ~ f_mix(. | gamma)` by inverse CDF (`p = u^(1/a)`), then
    /// `theta | p ~ Bernoulli(1 - lfdr(p))`. This joint law coincides with
    /// drawing `theta` first and `p | theta` second.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<GeneratedData> {
        let n = self.config.n_sensors;
        let points: Vec<(usize, f64, Option<usize>)> = match self.config.sampling {
            Sampling::IidUniform { m } => {
                if m == 0 {
                    return Err(Error::EmptySample);
                }
                (0..m)
                    .map(|_| (rng.random_range(0..n), rng.random_range(-PI..=PI), None))
                    .collect()
            }
            Sampling::Grid { t } => {
                let times = grid_times(t)?;
                let mut pts = Vec::with_capacity(n * times.len());
                for (j, &tj) in times.iter().enumerate() {
                    for v in 0..n {
                        pts.push((v, tj, Some(j)));
                    }
                }
                pts
            }
        };

        let mut records = Vec::with_capacity(points.len());
        let mut theta = Vec::with_capacity(points.len());
        let mut gamma = Vec::with_capacity(points.len());
        for (v, t, time_index) in points {
            let g = self.signal.value(v, t);
            let a = sigmoid(g);
            let u: f64 = rng.random();
            // 1 - u lies in (0, 1]
            let p = (1.0 - u).powf(1.0 / a);
            let alt = rng.random::<f64>() < 1.0 - p.powf(1.0 - a);
            records.push(Sample {
                vertex: v,
                time: t,
                p,
                time_index,
            });
            theta.push(alt);
            gamma.push(g);
        }
        Ok(GeneratedData {
            basis: self.signal.basis().clone(),
            coords: self.coords.clone(),
            samples: SampleSet::new(records, Some(theta))?,
            truth: Truth::Signal {
                signal: self.signal.clone(),
                gamma,
            },
            transmitter_paths: Vec::new(),
        })
    }
}

/// Generates one model-matched data set using `cfg.seed`.
pub fn gen_model_matched(cfg: &ModelMatchedConfig) -> Result<GeneratedData> {
    let scenario = ModelMatchedScenario::new(cfg)?;
    scenario.draw(&mut ChaCha8Rng::seed_from_u64(cfg.seed))
}
