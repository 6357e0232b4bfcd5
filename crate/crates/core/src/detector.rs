//! Rejection rules and single-realization evaluation.
//!
//! The lfdr rule rejects every hypothesis with `lfdr <= eta`, where `eta` is
//! the largest threshold whose average lfdr over the rejections stays at or
//! below `alpha`. The Benjamini-Hochberg step-up procedure on raw p-values
//! serves as the baseline.

use serde::{Deserialize, Serialize};

use crate::basis::BandlimitedSignal;
use crate::error::{Error, Result};
use crate::estimator::SampleSet;
use crate::pvalue::{lfdr, MixtureFamily, NullDensity};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionResult {
    pub lfdr_values: Vec<f64>,
    pub eta_hat: Option<f64>,
    pub reject: Vec<bool>,
    pub n_reject: usize,
    pub method: String,
}

impl DetectionResult {
    /// Applies [`step_up_threshold`] to precomputed lfdr values.
    pub fn from_lfdr(lfdr_values: Vec<f64>, alpha: f64, method: impl Into<String>) -> Result<Self> {
        let (eta_hat, reject) = step_up_threshold(&lfdr_values, alpha)?;
        let n_reject = reject.iter().filter(|&&r| r).count();
        Ok(Self {
            lfdr_values,
            eta_hat,
            reject,
            n_reject,
            method: method.into(),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalRecord {
    pub fdp: f64,
    pub tpp: f64,
    pub n_reject: usize,
    pub n_false_reject: usize,
    pub n_alternatives: usize,
}

/// lfdr of every sample under `sig`. With the fitted signal this is the
/// plug-in estimate; with the true signal it is the oracle.
pub fn lfdr_vector<F, N>(
    samples: &SampleSet,
    sig: &BandlimitedSignal,
    family: &F,
    null: &N,
) -> Result<Vec<f64>>
where
    F: MixtureFamily + ?Sized,
    N: NullDensity + ?Sized,
{
    samples
        .records()
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let zeta = sig.evaluate(r.vertex, r.time)?;
            lfdr(family, null, r.p, zeta, r.vertex, r.time).map_err(|e| match e {
                Error::NumericalError { message, .. } => Error::numerical(i, message),
                other => other,
            })
        })
        .collect()
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::DomainError(format!(
            "alpha = {alpha} outside (0, 1)"
        )));
    }
    Ok(())
}

/// Threshold `eta_hat = sup { eta : mean(lfdr | lfdr <= eta) <= alpha }` and
/// the mask `lfdr <= eta_hat`.
///
/// The running mean only changes at observed values, so the supremum is
/// searched over the ends of tie groups in the sorted lfdr list. All values
/// tied at the threshold are rejected. `None` when even the smallest value
/// exceeds `alpha`.
pub fn step_up_threshold(lfdrs: &[f64], alpha: f64) -> Result<(Option<f64>, Vec<bool>)> {
    if lfdrs.is_empty() {
        return Err(Error::EmptySample);
    }
    check_alpha(alpha)?;
    if let Some(i) = lfdrs.iter().position(|l| !(0.0..=1.0).contains(l)) {
        return Err(Error::DomainError(format!(
            "lfdr[{i}] = {} outside [0, 1]",
            lfdrs[i]
        )));
    }
    let mut sorted = lfdrs.to_vec();
    sorted.sort_by(f64::total_cmp);

    let mut eta = None;
    let mut sum = 0.0;
    let mut start = 0;
    while start < sorted.len() {
        let value = sorted[start];
        let end = start + sorted[start..].iter().take_while(|&&l| l == value).count();
        sum += value * (end - start) as f64;
        if sum <= alpha * end as f64 {
            eta = Some(value);
        }
        start = end;
    }
    let reject = match eta {
        Some(t) => lfdrs.iter().map(|&l| l <= t).collect(),
        None => vec![false; lfdrs.len()],
    };
    Ok((eta, reject))
}

/// Benjamini-Hochberg: reject every `p <= max { p_(i) : p_(i) <= i alpha / M }`.
pub fn bh_procedure(pvals: &[f64], alpha: f64) -> Result<Vec<bool>> {
    if pvals.is_empty() {
        return Err(Error::EmptySample);
    }
    check_alpha(alpha)?;
    if let Some(i) = pvals.iter().position(|p| !(*p > 0.0 && *p <= 1.0)) {
        return Err(Error::DomainError(format!(
            "p[{i}] = {} outside (0, 1]",
            pvals[i]
        )));
    }
    let mut sorted = pvals.to_vec();
    sorted.sort_by(f64::total_cmp);
    let m = sorted.len() as f64;
    let cutoff = sorted
        .iter()
        .enumerate()
        .rev()
        .find(|(i, &p)| p <= (*i as f64 + 1.0) / m * alpha)
        .map(|(_, &p)| p);
    Ok(match cutoff {
        Some(c) => pvals.iter().map(|&p| p <= c).collect(),
        None => vec![false; pvals.len()],
    })
}

/// False discovery and true positive proportions of one rejection mask.
/// `truth[m]` is `true` for an alternative.
pub fn evaluate(reject: &[bool], truth: &[bool]) -> Result<EvalRecord> {
    if reject.len() != truth.len() {
        return Err(Error::ShapeError(format!(
            "mask has {} entries, truth has {}",
            reject.len(),
            truth.len()
        )));
    }
    let mut n_reject = 0;
    let mut n_false_reject = 0;
    let mut n_true_reject = 0;
    for (&r, &alt) in reject.iter().zip(truth) {
        if r {
            n_reject += 1;
            if alt {
                n_true_reject += 1;
            } else {
                n_false_reject += 1;
            }
        }
    }
    let n_alternatives = truth.iter().filter(|&&t| t).count();
    Ok(EvalRecord {
        fdp: n_false_reject as f64 / n_reject.max(1) as f64,
        tpp: n_true_reject as f64 / n_alternatives.max(1) as f64,
        n_reject,
        n_false_reject,
        n_alternatives,
    })
}

/// Empirical rate estimates at a threshold `eta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateEstimates {
    /// Mean of `lfdr * 1{lfdr <= eta}`.
    pub d1: f64,
    /// Fraction of samples with `lfdr <= eta`.
    pub d0: f64,
    /// `d1 / d0`, the estimated false discovery proportion.
    pub r: f64,
    /// Mean of `(1 - theta) 1{lfdr <= eta}`; needs ground truth.
    pub d1_true: Option<f64>,
}

pub fn rate_estimates(lfdrs: &[f64], eta: f64, truth: Option<&[bool]>) -> Result<RateEstimates> {
    if lfdrs.is_empty() {
        return Err(Error::EmptySample);
    }
    let m = lfdrs.len() as f64;
    let (sum, count) = lfdrs
        .iter()
        .filter(|&&l| l <= eta)
        .fold((0.0, 0usize), |(s, c), &l| (s + l, c + 1));
    let d1_true = match truth {
        Some(t) if t.len() != lfdrs.len() => {
            return Err(Error::ShapeError(
                "truth length differs from lfdr length".into(),
            ))
        }
        Some(t) => Some(
            lfdrs
                .iter()
                .zip(t)
                .filter(|(&l, &alt)| l <= eta && !alt)
                .count() as f64
                / m,
        ),
        None => None,
    };
    Ok(RateEstimates {
        d1: sum / m,
        d0: count as f64 / m,
        r: if count == 0 { 0.0 } else { sum / count as f64 },
        d1_true,
    })
}
