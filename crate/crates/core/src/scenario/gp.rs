use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::graph::Point;

const JITTER: f64 = 1e-8;

/// Zero-mean Gaussian process on a fixed point set with squared-exponential
/// covariance `variance * exp(-|xi - xj|^2 / (2 l^2))`. The Cholesky factor is
/// computed once and reused for every draw.
#[derive(Debug, Clone)]
pub struct GpField {
    factor: Cholesky<f64, Dyn>,
}

impl GpField {
    pub fn new(coords: &[Point], variance: f64, length_scale: f64) -> Result<Self> {
        if !(variance > 0.0) || !(length_scale > 0.0) {
            return Err(Error::DomainError(format!(
                "GP variance {variance} and length scale {length_scale} must be positive"
            )));
        }
        let n = coords.len();
        if n == 0 {
            return Err(Error::DegenerateInput("GP needs at least one point".into()));
        }
        let denom = 2.0 * length_scale * length_scale;
        let cov = DMatrix::from_fn(n, n, |i, j| {
            let dx = coords[i][0] - coords[j][0];
            let dy = coords[i][1] - coords[j][1];
            let k = variance * (-(dx * dx + dy * dy) / denom).exp();
            if i == j {
                k + JITTER
            } else {
                k
            }
        });
        let factor = Cholesky::new(cov).ok_or_else(|| {
            Error::numerical(0, "GP covariance is not positive definite after jitter")
        })?;
        Ok(Self { factor })
    }

    pub fn len(&self) -> usize {
        self.factor.l_dirty().nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let n = self.len();
        let z = DVector::from_iterator(n, (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)));
        (self.factor.l() * z).iter().copied().collect()
    }
}

/// One draw of the field at `coords`.
pub fn gp_sample(
    coords: &[Point],
    variance: f64,
    length_scale: f64,
    seed: u64,
) -> Result<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(GpField::new(coords, variance, length_scale)?.sample(&mut rng))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::mean_and_se;

    #[test]
    fn single_point_variance() {
        let draws: Vec<f64> = (0..10_000)
            .map(|s| gp_sample(&[[1.0, 2.0]], 4.0, 3.0, s).unwrap()[0])
            .collect();
        let (m, _) = mean_and_se(&draws);
        let var = draws.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (draws.len() - 1) as f64;
        assert!((var - 4.0).abs() / 4.0 < 0.05, "variance {var}");
    }

    #[test]
    fn coincident_points_agree() {
        for seed in 0..20 {
            let v = gp_sample(&[[0.0, 0.0], [0.0, 0.0]], 2.0, 1.0, seed).unwrap();
            assert!((v[0] - v[1]).abs() < 1e-3);
        }
    }

    #[test]
    fn short_length_scale_decorrelates() {
        let field = GpField::new(&[[0.0, 0.0], [1.0, 0.0]], 1.0, 1e-3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let n = 5000;
        let pairs: Vec<(f64, f64)> = (0..n)
            .map(|_| {
                let s = field.sample(&mut rng);
                (s[0], s[1])
            })
            .collect();
        let cross = pairs.iter().map(|(a, b)| a * b).sum::<f64>() / n as f64;
        assert!(cross.abs() < 0.05, "{cross}");
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(GpField::new(&[[0.0, 0.0]], 0.0, 1.0).is_err());
        assert!(GpField::new(&[[0.0, 0.0]], 1.0, -1.0).is_err());
        assert!(GpField::new(&[], 1.0, 1.0).is_err());
    }
}
