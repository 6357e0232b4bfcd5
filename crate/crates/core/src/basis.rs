//! Joint vertex-time basis and bandlimited generalized graph signals.
//!
//! The time axis is `[-pi, pi]` with the trigonometric orthonormal basis,
//! ordered by frequency with `sin` before `cos` at each frequency:
//!
//! | k      | psi_k(t)           |
//! |--------|--------------------|
//! | 1      | 1 / sqrt(2 pi)     |
//! | 2j     | sin(j t) / sqrt(pi)|
//! | 2j + 1 | cos(j t) / sqrt(pi)|
//!
//! A bandlimited signal is `gamma(v, t) = sum_{k1, k2} xi[k1, k2] phi_k1(v) psi_k2(t)`
//! over the first `K1` graph frequencies and the first `K2` time functions.

use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::SpectralBasis;

/// Default box bound on coefficient magnitude, in units of the constant
/// joint basis function. See [`default_bound`].
pub const DEFAULT_GAMMA_RANGE: f64 = 10.0;

/// Default coefficient bound for an `N`-vertex graph: `10 * sqrt(2 pi N)`,
/// which lets the constant component alone reach `|gamma| = 10`.
pub fn default_bound(n_vertices: usize) -> f64 {
    DEFAULT_GAMMA_RANGE * (2.0 * PI * n_vertices as f64).sqrt()
}

/// Trigonometric orthonormal basis of `L^2[-pi, pi]`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct TimeBasis;

impl TimeBasis {
    /// `psi_k(t)`; `k` is 1-based. Returns `DomainError` outside `[-pi, pi]`.
    pub fn eval(&self, k: usize, t: f64) -> Result<f64> {
        check_time(t)?;
        if k == 0 {
            return Err(Error::DomainError("time basis index is 1-based".into()));
        }
        Ok(self.value(k, t))
    }

    /// Unchecked variant of [`TimeBasis::eval`].
    #[inline]
    pub fn value(&self, k: usize, t: f64) -> f64 {
        if k == 1 {
            return 1.0 / (2.0 * PI).sqrt();
        }
        let freq = (k / 2) as f64;
        if k.is_multiple_of(2) {
            (freq * t).sin() / PI.sqrt()
        } else {
            (freq * t).cos() / PI.sqrt()
        }
    }

    /// Angular frequency of `psi_k`.
    pub fn frequency(k: usize) -> usize {
        k / 2
    }
}

/// `psi_k(t)` for the trigonometric basis.
pub fn time_basis_eval(k: usize, t: f64) -> Result<f64> {
    TimeBasis.eval(k, t)
}

pub(crate) fn check_time(t: f64) -> Result<()> {
    if !(-PI..=PI).contains(&t) {
        return Err(Error::DomainError(format!("time {t} outside [-pi, pi]")));
    }
    Ok(())
}

/// Graph Fourier basis combined with the time basis.
#[derive(Debug, Clone)]
pub struct JointBasis {
    spectral: Arc<SpectralBasis>,
    time: TimeBasis,
}

impl JointBasis {
    pub fn new(spectral: Arc<SpectralBasis>) -> Self {
        Self {
            spectral,
            time: TimeBasis,
        }
    }

    pub fn spectral(&self) -> &Arc<SpectralBasis> {
        &self.spectral
    }

    pub fn n_vertices(&self) -> usize {
        self.spectral.n()
    }

    pub fn check_order(&self, k1: usize, k2: usize) -> Result<()> {
        if k1 == 0 || k2 == 0 {
            return Err(Error::ModelOrderError(format!(
                "K1 and K2 must be positive, got ({k1}, {k2})"
            )));
        }
        if k1 > self.n_vertices() {
            return Err(Error::ModelOrderError(format!(
                "K1 = {k1} exceeds the number of vertices {}",
                self.n_vertices()
            )));
        }
        Ok(())
    }

    /// Products `phi_k1(v) psi_k2(t)` flattened row-major in `(k1, k2)`.
    pub fn design_row(&self, v: usize, t: f64, k1: usize, k2: usize) -> Result<Vec<f64>> {
        self.check_order(k1, k2)?;
        self.check_point(v, t)?;
        let mut row = vec![0.0; k1 * k2];
        self.fill_row(v, t, k1, k2, &mut row);
        Ok(row)
    }

    pub(crate) fn check_point(&self, v: usize, t: f64) -> Result<()> {
        if v >= self.n_vertices() {
            return Err(Error::DomainError(format!(
                "vertex {v} out of range for {} vertices",
                self.n_vertices()
            )));
        }
        check_time(t)
    }

    /// Caller guarantees the order and point are valid.
    pub(crate) fn fill_row(&self, v: usize, t: f64, k1: usize, k2: usize, row: &mut [f64]) {
        let psi: Vec<f64> = (1..=k2).map(|k| self.time.value(k, t)).collect();
        for a in 0..k1 {
            let phi = self.spectral.phi(a + 1, v);
            for (b, p) in psi.iter().enumerate() {
                row[a * k2 + b] = phi * p;
            }
        }
    }
}

/// Coefficient matrix `Xi` with its box bound. Serializes as
/// `{"K1", "K2", "B", "Xi"}` with `Xi` flattened row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Coefficients {
    #[serde(rename = "K1")]
    pub k1: usize,
    #[serde(rename = "K2")]
    pub k2: usize,
    #[serde(rename = "B")]
    pub bound: f64,
    #[serde(rename = "Xi")]
    pub values: Vec<f64>,
}

impl Coefficients {
    pub fn zeros(k1: usize, k2: usize, bound: f64) -> Self {
        Self {
            k1,
            k2,
            bound,
            values: vec![0.0; k1 * k2],
        }
    }

    /// From nested rows, `rows[k1][k2]`.
    pub fn from_rows(rows: &[Vec<f64>], bound: f64) -> Result<Self> {
        let k1 = rows.len();
        let k2 = rows.first().map_or(0, Vec::len);
        if k1 == 0 || k2 == 0 || rows.iter().any(|r| r.len() != k2) {
            return Err(Error::ShapeError(
                "coefficient rows must be non-empty and of equal length".into(),
            ));
        }
        let c = Self {
            k1,
            k2,
            bound,
            values: rows.concat(),
        };
        c.validate()?;
        Ok(c)
    }

    /// Entry `xi_{k1, k2}` with 1-based indices, matching the basis functions.
    pub fn get(&self, k1: usize, k2: usize) -> f64 {
        assert!(
            (1..=self.k1).contains(&k1) && (1..=self.k2).contains(&k2),
            "coefficient ({k1}, {k2}) outside 1..={} x 1..={}",
            self.k1,
            self.k2
        );
        self.values[(k1 - 1) * self.k2 + (k2 - 1)]
    }

    pub fn validate(&self) -> Result<()> {
        if self.k1 == 0 || self.k2 == 0 {
            return Err(Error::ModelOrderError("K1 and K2 must be positive".into()));
        }
        if self.values.len() != self.k1 * self.k2 {
            return Err(Error::ShapeError(format!(
                "Xi has {} entries, expected {}",
                self.values.len(),
                self.k1 * self.k2
            )));
        }
        if !(self.bound > 0.0) {
            return Err(Error::DomainError(format!(
                "box bound {} must be positive",
                self.bound
            )));
        }
        if let Some((i, x)) = self
            .values
            .iter()
            .enumerate()
            .find(|(_, x)| !(x.abs() <= self.bound))
        {
            return Err(Error::DomainError(format!(
                "Xi entry {i} = {x} outside [-{b}, {b}]",
                b = self.bound
            )));
        }
        Ok(())
    }

    pub fn frobenius_distance(&self, other: &Coefficients) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }
}

/// A bandlimited generalized graph signal bound to its basis.
#[derive(Debug, Clone)]
pub struct BandlimitedSignal {
    basis: JointBasis,
    coeffs: Coefficients,
}

impl BandlimitedSignal {
    pub fn new(basis: JointBasis, coeffs: Coefficients) -> Result<Self> {
        coeffs.validate()?;
        basis.check_order(coeffs.k1, coeffs.k2)?;
        Ok(Self { basis, coeffs })
    }

    pub fn basis(&self) -> &JointBasis {
        &self.basis
    }

    pub fn coefficients(&self) -> &Coefficients {
        &self.coeffs
    }

    /// `gamma(v, t; Xi)`.
    pub fn evaluate(&self, v: usize, t: f64) -> Result<f64> {
        self.basis.check_point(v, t)?;
        Ok(self.value(v, t))
    }

    #[inline]
    pub(crate) fn value(&self, v: usize, t: f64) -> f64 {
        let Coefficients { k1, k2, values, .. } = &self.coeffs;
        let mut acc = 0.0;
        for a in 0..*k1 {
            let phi = self.basis.spectral.phi(a + 1, v);
            let mut inner = 0.0;
            for b in 0..*k2 {
                inner += values[a * k2 + b] * self.basis.time.value(b + 1, t);
            }
            acc += phi * inner;
        }
        acc
    }
}

/// `gamma(v, t; Xi)` for a signal.
pub fn evaluate_signal(sig: &BandlimitedSignal, v: usize, t: f64) -> Result<f64> {
    sig.evaluate(v, t)
}
