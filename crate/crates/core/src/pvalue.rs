//! Two-group p-value model.
//!
//! The marginal density `f_mix(p | zeta)` is parametric in the local signal
//! value `zeta = gamma(v, t)`. With a known null density `f0` the null
//! proportion and alternative density follow from
//!
//! ```text
//! pi0  = f_mix(1 | zeta) / f0(1)
//! f1   = (f_mix(p | zeta) - pi0 f0(p)) / (1 - pi0)
//! lfdr = pi0 f0(p) / f_mix(p | zeta)
//! ```

use crate::error::{Error, Result};

/// Smallest p-value kept after clamping, so that `ln p` stays finite.
pub const P_FLOOR: f64 = 1e-15;

/// Numerically stable logistic function.
#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^x)` without overflow.
#[inline]
pub fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

/// `ln sigmoid(x)`.
#[inline]
pub fn ln_sigmoid(x: f64) -> f64 {
    -softplus(-x)
}

pub fn logit(a: f64) -> f64 {
    (a / (1.0 - a)).ln()
}

/// Parametric family for the marginal p-value density.
pub trait MixtureFamily: Send + Sync {
    fn name(&self) -> &str;

    /// `f_mix(p | zeta)` for `p` in `(0, 1]`.
    fn density(&self, p: f64, zeta: f64) -> f64;

    /// `ln f_mix` expressed through `ln p`; lets callers work with p-values
    /// far below the smallest normal double.
    fn ln_density_at_log_p(&self, ln_p: f64, zeta: f64) -> f64 {
        self.density(ln_p.exp(), zeta).ln()
    }

    /// `d ln f_mix(p | zeta) / d zeta`, expressed through `ln p`.
    fn dlog_dzeta_at_log_p(&self, ln_p: f64, zeta: f64) -> f64;

    fn dlog_dzeta(&self, p: f64, zeta: f64) -> f64 {
        self.dlog_dzeta_at_log_p(p.ln(), zeta)
    }
}

/// `f_mix(p | zeta) = a p^(a - 1)` with `a = sigmoid(zeta)`, i.e. Beta(a, 1).
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SigmoidBeta;

impl MixtureFamily for SigmoidBeta {
    fn name(&self) -> &str {
        "sigmoid-beta"
    }

    fn density(&self, p: f64, zeta: f64) -> f64 {
        self.ln_density_at_log_p(p.ln(), zeta).exp()
    }

    #[inline]
    fn ln_density_at_log_p(&self, ln_p: f64, zeta: f64) -> f64 {
        let a = sigmoid(zeta);
        ln_sigmoid(zeta) + (a - 1.0) * ln_p
    }

    #[inline]
    fn dlog_dzeta_at_log_p(&self, ln_p: f64, zeta: f64) -> f64 {
        let a = sigmoid(zeta);
        (1.0 - a) * (1.0 + a * ln_p)
    }
}

/// Known null density `f0(p; (v, t))`. Must be nondecreasing in `p` and
/// positive for `p > 0`.
pub trait NullDensity: Send + Sync {
    fn density(&self, p: f64, vertex: usize, time: f64) -> f64;
}

/// `Unif[0, 1]`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct UniformNull;

impl NullDensity for UniformNull {
    #[inline]
    fn density(&self, _p: f64, _vertex: usize, _time: f64) -> f64 {
        1.0
    }
}

fn check_p(p: f64) -> Result<()> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::DomainError(format!("p-value {p} outside (0, 1]")));
    }
    Ok(())
}

/// Clamps a raw p-value into `[P_FLOOR, 1]`. The flag reports whether the
/// value moved. NaN is rejected.
pub fn clamp_p(p: f64) -> Result<(f64, bool)> {
    if p.is_nan() {
        return Err(Error::DomainError("p-value is NaN".into()));
    }
    let c = p.clamp(P_FLOOR, 1.0);
    Ok((c, c != p))
}

pub fn mixture_density<F: MixtureFamily + ?Sized>(fam: &F, p: f64, zeta: f64) -> Result<f64> {
    check_p(p)?;
    Ok(fam.density(p, zeta))
}

fn pi0_raw<F, N>(fam: &F, null: &N, zeta: f64, vertex: usize, time: f64) -> f64
where
    F: MixtureFamily + ?Sized,
    N: NullDensity + ?Sized,
{
    fam.density(1.0, zeta) / null.density(1.0, vertex, time)
}

/// Null proportion recovered from `f_mix(1 | zeta) / f0(1)`.
pub fn pi0_of<F, N>(fam: &F, null: &N, zeta: f64, vertex: usize, time: f64) -> Result<f64>
where
    F: MixtureFamily + ?Sized,
    N: NullDensity + ?Sized,
{
    let f0 = null.density(1.0, vertex, time);
    if !(f0 > 0.0) {
        return Err(Error::ModelViolation(format!(
            "f0(1) = {f0} is not positive"
        )));
    }
    let pi0 = fam.density(1.0, zeta) / f0;
    if !(pi0 > 0.0 && pi0 < 1.0) {
        return Err(Error::ModelViolation(format!(
            "pi0 = {pi0} outside (0, 1) at zeta = {zeta}"
        )));
    }
    Ok(pi0)
}

const F1_NEG_TOL: f64 = -1e-12;

/// Alternative density recovered from the mixture.
pub fn f1_of<F, N>(fam: &F, null: &N, p: f64, zeta: f64, vertex: usize, time: f64) -> Result<f64>
where
    F: MixtureFamily + ?Sized,
    N: NullDensity + ?Sized,
{
    check_p(p)?;
    let pi0 = pi0_of(fam, null, zeta, vertex, time)?;
    let f1 = (fam.density(p, zeta) - pi0 * null.density(p, vertex, time)) / (1.0 - pi0);
    if f1 < F1_NEG_TOL || f1.is_nan() {
        return Err(Error::ModelViolation(format!(
            "f1({p}) = {f1} is negative at zeta = {zeta}"
        )));
    }
    Ok(f1.max(0.0))
}

/// Local false discovery rate `pi0 f0(p) / f_mix(p | zeta)`, clipped to `[0, 1]`.
pub fn lfdr<F, N>(fam: &F, null: &N, p: f64, zeta: f64, vertex: usize, time: f64) -> Result<f64>
where
    F: MixtureFamily + ?Sized,
    N: NullDensity + ?Sized,
{
    check_p(p)?;
    let pi0 = pi0_raw(fam, null, zeta, vertex, time);
    let value = pi0 * null.density(p, vertex, time) / fam.density(p, zeta);
    if value.is_nan() {
        return Err(Error::numerical(
            0,
            format!("lfdr is NaN at p = {p}, zeta = {zeta}"),
        ));
    }
    Ok(value.clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    const FAM: SigmoidBeta = SigmoidBeta;
    const NULL: UniformNull = UniformNull;

    fn lfdr0(p: f64, z: f64) -> f64 {
        lfdr(&FAM, &NULL, p, z, 0, 0.0).unwrap()
    }

    /// Midpoint rule for `int_0^1 g(p) dp` after substituting `p = e^{-u}`,
    /// which tames the singularity at zero. `g` receives `ln p`.
    fn integrate_unit(g: impl Fn(f64) -> f64, u_max: f64, n: usize) -> f64 {
        let h = u_max / n as f64;
        (0..n)
            .map(|i| {
                let u = (i as f64 + 0.5) * h;
                (g(-u) - u).exp()
            })
            .sum::<f64>()
            * h
    }

    #[test]
    fn sigmoid_values() {
        assert_eq!(sigmoid(0.0), 0.5);
        assert!((sigmoid(3f64.ln()) - 0.75).abs() < 1e-15);
        assert_eq!(sigmoid(800.0), 1.0);
        assert_eq!(sigmoid(-800.0), 0.0);
        assert!(sigmoid(50.0) <= 1.0 && sigmoid(-50.0) > 0.0);
        assert!((ln_sigmoid(-800.0) + 800.0).abs() < 1e-9);
        assert!((logit(sigmoid(1.7)) - 1.7).abs() < 1e-12);
    }

    #[test]
    fn density_examples() {
        assert!((mixture_density(&FAM, 1.0, 0.0).unwrap() - 0.5).abs() < 1e-15);
        assert!((mixture_density(&FAM, 0.25, 0.0).unwrap() - 1.0).abs() < 1e-15);
        for p in [0.01, 0.3, 0.9] {
            assert!((mixture_density(&FAM, p, 60.0).unwrap() - 1.0).abs() < 1e-12);
        }
        assert!(matches!(
            mixture_density(&FAM, 0.0, 0.0),
            Err(Error::DomainError(_))
        ));
        assert!(mixture_density(&FAM, 1.5, 0.0).is_err());
    }

    #[test]
    fn density_integrates_to_one() {
        for i in 0..=20 {
            let z = -5.0 + 0.5 * i as f64;
            let a = sigmoid(z);
            // tail mass beyond u_max is exp(-a u_max)
            let u_max = 20.0 / a;
            let total = integrate_unit(|lp| FAM.ln_density_at_log_p(lp, z), u_max, 200_000);
            assert!((total - 1.0).abs() < 1e-6, "zeta {z}: {total}");
        }
    }

    #[test]
    fn pi0_examples() {
        assert!((pi0_of(&FAM, &NULL, 0.0, 0, 0.0).unwrap() - 0.5).abs() < 1e-15);
        assert!((pi0_of(&FAM, &NULL, 3f64.ln(), 0, 0.0).unwrap() - 0.75).abs() < 1e-15);
        assert!(pi0_of(&FAM, &NULL, -30.0, 0, 0.0).unwrap() < 1e-12);
        assert!(matches!(
            pi0_of(&FAM, &NULL, 40.0, 0, 0.0),
            Err(Error::ModelViolation(_))
        ));
    }

    #[test]
    fn f1_examples() {
        for z in [-3.0, 0.0, 2.0] {
            assert_eq!(f1_of(&FAM, &NULL, 1.0, z, 0, 0.0).unwrap(), 0.0);
        }
        assert!((f1_of(&FAM, &NULL, 0.25, 0.0, 0, 0.0).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn f1_integrates_to_one() {
        for z in [-2.0, 0.0, 2.0] {
            let a = sigmoid(z);
            let total = integrate_unit(
                |lp| {
                    let p = lp.exp();
                    f1_of(&FAM, &NULL, p, z, 0, 0.0).unwrap().ln()
                },
                30.0 / a,
                400_000,
            );
            assert!((total - 1.0).abs() < 1e-6, "zeta {z}: {total}");
        }
    }

    #[test]
    fn lfdr_examples() {
        assert!((lfdr0(0.25, 0.0) - 0.5).abs() < 1e-15);
        for z in [-4.0, 0.0, 3.0] {
            assert!((lfdr0(1.0, z) - 1.0).abs() < 1e-15);
        }
        assert!(lfdr0(1e-15, 0.0) < 1e-7);
        assert!(lfdr(&FAM, &NULL, 0.0, 0.0, 0, 0.0).is_err());
    }

    #[test]
    fn clamping() {
        assert_eq!(clamp_p(0.0).unwrap(), (P_FLOOR, true));
        assert_eq!(clamp_p(0.5).unwrap(), (0.5, false));
        assert_eq!(clamp_p(1.0 + 1e-9).unwrap(), (1.0, true));
        assert!(clamp_p(f64::NAN).is_err());
    }

    #[test]
    fn lfdr_strictly_increasing_in_p() {
        for z in [-3.0, 0.0, 3.0] {
            let vals: Vec<f64> = (1..=1000).map(|i| lfdr0(i as f64 / 1000.0, z)).collect();
            assert!(vals.windows(2).all(|w| w[0] < w[1]), "zeta {z}");
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn mixture_identity(p in 1e-6f64..1.0, z in -5.0f64..5.0) {
                let pi0 = pi0_of(&FAM, &NULL, z, 0, 0.0).unwrap();
                let f1 = f1_of(&FAM, &NULL, p, z, 0, 0.0).unwrap();
                let mix = FAM.density(p, z);
                prop_assert!((pi0 + (1.0 - pi0) * f1 - mix).abs() <= 1e-10 * mix.max(1.0));
            }

            #[test]
            fn lfdr_in_unit_interval(p in 1e-15f64..=1.0, z in -20.0f64..20.0) {
                let l = lfdr0(p, z);
                prop_assert!((0.0..=1.0).contains(&l));
            }

            #[test]
            fn dlog_matches_finite_difference(p in 1e-4f64..1.0, z in -5.0f64..5.0) {
                let h = 1e-5;
                let fd = (FAM.density(p, z + h).ln() - FAM.density(p, z - h).ln()) / (2.0 * h);
                let an = FAM.dlog_dzeta(p, z);
                prop_assert!((fd - an).abs() <= 1e-6 * an.abs().max(1e-3), "fd {} an {}", fd, an);
            }
        }
    }
}
