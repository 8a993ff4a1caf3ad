//! Change detection with unknown (nuisance) parameters in a canonical
//! exponential family, via the estimated CUSUM process: nuisance
//! parameters are replaced by segment-wise maximum likelihood estimates
//! for every candidate change point.

use crate::error::{Error, Result};
use crate::model::{mle_natural_parameter_clamped, ExponentialFamilyModel};

/// Baseline knowledge: a known in-control parameter, or estimate it from
/// the pre-change segment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Baseline {
    Known(f64),
    Unknown,
}

/// Configuration of the estimated-CUSUM detector. `omega` controls the
/// window margin `t^omega` that keeps candidate change points away from
/// the ends of `[0, t]`; short margins admit noisy short-segment MLEs,
/// long ones delay detection. `min_segment` is an absolute floor of 2 so
/// an MLE never fits a single point.
#[derive(Debug, Clone, PartialEq)]
pub struct GlrConfig {
    pub omega: f64,
    pub h: f64,
    pub baseline: Baseline,
    pub min_segment: usize,
}

impl GlrConfig {
    pub fn new(omega: f64, h: f64, baseline: Baseline, min_segment: usize) -> Result<Self> {
        if !(omega > 0.0 && omega < 1.0) {
            return Err(Error::invalid_input("omega must be in (0, 1)"));
        }
        if min_segment < 2 {
            return Err(Error::invalid_input("min_segment must be at least 2"));
        }
        Ok(GlrConfig {
            omega,
            h,
            baseline,
            min_segment,
        })
    }

    /// Default window exponent; 0.6 keeps the early-false-alarm window
    /// of the asymptotic guarantee meaningful without a large detection
    /// delay penalty.
    pub fn with_threshold(h: f64, baseline: Baseline) -> Self {
        GlrConfig {
            omega: 0.6,
            h,
            baseline,
            min_segment: 2,
        }
    }

    /// Margin at time `t`: `max(ceil(t^omega), min_segment)`.
    pub fn margin(&self, t: usize) -> usize {
        let pow = (t as f64).powf(self.omega).ceil() as usize;
        pow.max(self.min_segment)
    }
}

/// A point of the estimated CUSUM: zero during warmup (the window of
/// admissible change points is still empty).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GlrPoint {
    pub value: f64,
    pub warmup: bool,
}

/// Segment log-likelihood at the natural parameter `theta`, up to the
/// carrier term that cancels in likelihood ratios:
/// `theta * sum - len * psi(theta)`.
fn segment_loglik(family: ExponentialFamilyModel, theta: f64, sum: f64, len: usize) -> f64 {
    theta * sum - len as f64 * family.psi(theta)
}

/// The estimated CUSUM at time `t`:
/// `max_k sup_theta [ log f(X_{k+1..t} | theta) - log f(X_{k+1..t} | theta0_k) ]`
/// over candidate change points `k` separated from both ends of `[0, t]`
/// by the margin. `theta0_k` is the known baseline when provided, else
/// the (boundary-clamped) MLE of `X_{1..k}`.
pub fn estimated_cusum_at(
    series: &[f64],
    family: ExponentialFamilyModel,
    config: &GlrConfig,
    t: usize,
) -> Result<GlrPoint> {
    if t == 0 || t > series.len() {
        return Err(Error::invalid_input(format!(
            "t must satisfy 1 <= t <= series length, got t={t} with {} observations",
            series.len()
        )));
    }
    let m = config.margin(t);
    if t < 2 * m {
        return Ok(GlrPoint {
            value: 0.0,
            warmup: true,
        });
    }
    let mut prefix = Vec::with_capacity(t + 1);
    let mut acc = 0.0;
    prefix.push(0.0);
    for &x in &series[..t] {
        acc += x;
        prefix.push(acc);
    }

    let mut best = 0.0f64;
    for k in m..=(t - m) {
        let seg_sum = prefix[t] - prefix[k];
        let seg_len = t - k;
        let theta1 = mle_natural_parameter_clamped(family, &series[k..t])?;
        let theta0 = match config.baseline {
            Baseline::Known(theta0) => theta0,
            Baseline::Unknown => mle_natural_parameter_clamped(family, &series[..k])?,
        };
        let glr = segment_loglik(family, theta1, seg_sum, seg_len)
            - segment_loglik(family, theta0, seg_sum, seg_len);
        best = best.max(glr);
    }
    Ok(GlrPoint {
        value: best.max(0.0),
        warmup: false,
    })
}

/// First `t` past warmup with an estimated CUSUM at or above `config.h`.
pub fn glr_stopping_time(
    series: &[f64],
    family: ExponentialFamilyModel,
    config: &GlrConfig,
) -> Result<Option<usize>> {
    for t in 1..=series.len() {
        let point = estimated_cusum_at(series, family, config, t)?;
        if !point.warmup && point.value >= config.h {
            return Ok(Some(t));
        }
    }
    Ok(None)
}

/// The window-restricted exact CUSUM when both parameters are known:
/// `max_k (S_t - S_k)` of the LLR walk between `theta1` and `theta0`,
/// with `k` confined to the same margin window as the GLR. The estimated
/// CUSUM degenerates to this when the supremum is pinned to `theta1`;
/// unlike the full GLR the restricted maximum can be negative, since
/// the window keeps `k = t` out.
pub fn known_parameter_cusum_at(
    series: &[f64],
    family: ExponentialFamilyModel,
    theta0: f64,
    theta1: f64,
    config: &GlrConfig,
    t: usize,
) -> Result<GlrPoint> {
    if t == 0 || t > series.len() {
        return Err(Error::invalid_input("t out of range"));
    }
    let m = config.margin(t);
    if t < 2 * m {
        return Ok(GlrPoint {
            value: 0.0,
            warmup: true,
        });
    }
    let mut prefix = Vec::with_capacity(t + 1);
    let mut acc = 0.0;
    prefix.push(0.0);
    for &x in &series[..t] {
        acc += x;
        prefix.push(acc);
    }
    let mut best = f64::NEG_INFINITY;
    for k in m..=(t - m) {
        let seg_sum = prefix[t] - prefix[k];
        let seg_len = t - k;
        let glr = segment_loglik(family, theta1, seg_sum, seg_len)
            - segment_loglik(family, theta0, seg_sum, seg_len);
        best = best.max(glr);
    }
    Ok(GlrPoint {
        value: best,
        warmup: false,
    })
}
