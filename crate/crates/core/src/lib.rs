//! Multiple hypothesis testing over a joint graph-time domain.
//!
//! Each hypothesis lives at a vertex `v` of a sensor graph and an instant
//! `t` in `[-pi, pi]`. Its p-value follows a two-group model whose marginal
//! density `f_mix(p | gamma(v, t))` is driven by a bandlimited generalized
//! graph signal `gamma`. The signal's coefficients are fitted by maximum
//! likelihood, the model order by BIC, and hypotheses are rejected by
//! thresholding the plug-in local false discovery rate so that the average
//! lfdr of the rejections stays below the target level.
//!
//! Module map:
//!
//! - [`graph`]: k-NN sensor graphs, Laplacian, graph Fourier basis
//! - [`basis`]: time basis, joint basis, bandlimited signals
//! - [`pvalue`]: mixture family, null density, `pi0`, `f1`, lfdr
//! - [`estimator`]: likelihood, gradient, box-constrained MLE, BIC selection
//! - [`detector`]: lfdr step-up rule, Benjamini-Hochberg, FDP/TPP
//! - [`scenario`]: model-matched and transmitter data generators
//! - [`monte_carlo`]: repeated experiments and aggregate FDR/power tables
//! - [`config`] and [`runner`]: file-driven batch runs

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod basis;
pub mod config;
pub mod detector;
pub mod error;
pub mod estimator;
pub mod graph;
pub mod monte_carlo;
pub mod pvalue;
pub mod runner;
pub mod scenario;
pub mod stats;

pub use basis::{BandlimitedSignal, Coefficients, JointBasis, TimeBasis};
pub use detector::{bh_procedure, evaluate, step_up_threshold, DetectionResult, EvalRecord};
pub use error::{Error, Result};
pub use estimator::{bic_select, fit_mle, FitOptions, FitResult, Sample, SampleSet};
pub use graph::{build_knn_graph, eigendecompose, SpatialGraph, SpectralBasis};
pub use pvalue::{MixtureFamily, NullDensity, SigmoidBeta, UniformNull};
