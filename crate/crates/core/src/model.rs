//! Distributions, log-likelihood ratios, exponential families, change
//! scenarios, and reproducible sampling.

use crate::error::{Error, Result};
use rand::Rng;
use rand_distr::{Distribution, Exp, Normal, Poisson};
use serde::{Deserialize, Serialize};

/// Absolute tolerance for matching a value to a lattice support point.
const SUPPORT_TOL: f64 = 1e-9;
/// Tolerance on lattice mass normalization.
const MASS_TOL: f64 = 1e-12;

/// A univariate density specification.
///
/// Continuous kinds (`normal`, `exponential`) are evaluated in log-space;
/// discrete kinds (`bernoulli`, `poisson`, `lattice`) carry point masses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum DensitySpec {
    Normal { mean: f64, sd: f64 },
    Bernoulli { p: f64 },
    Poisson { rate: f64 },
    Exponential { rate: f64 },
    Lattice { support: Vec<f64>, masses: Vec<f64> },
}

impl DensitySpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            DensitySpec::Normal { mean, sd } => {
                if !mean.is_finite() || !sd.is_finite() || *sd <= 0.0 {
                    return Err(Error::invalid_input(format!(
                        "normal requires finite mean and sd > 0, got mean={mean}, sd={sd}"
                    )));
                }
            }
            DensitySpec::Bernoulli { p } => {
                if !(*p > 0.0 && *p < 1.0) {
                    return Err(Error::invalid_input(format!(
                        "bernoulli requires 0 < p < 1, got p={p}"
                    )));
                }
            }
            DensitySpec::Poisson { rate } | DensitySpec::Exponential { rate } => {
                if !rate.is_finite() || *rate <= 0.0 {
                    return Err(Error::invalid_input(format!(
                        "rate must be finite and > 0, got {rate}"
                    )));
                }
            }
            DensitySpec::Lattice { support, masses } => {
                if support.is_empty() || support.len() != masses.len() {
                    return Err(Error::invalid_input(
                        "lattice requires equally long, nonempty support and masses",
                    ));
                }
                if support.iter().any(|x| !x.is_finite()) {
                    return Err(Error::invalid_input("lattice support must be finite"));
                }
                if support.windows(2).any(|w| w[0] >= w[1]) {
                    return Err(Error::invalid_input(
                        "lattice support must be strictly increasing",
                    ));
                }
                if masses.iter().any(|m| !m.is_finite() || *m < 0.0) {
                    return Err(Error::invalid_input("lattice masses must be nonnegative"));
                }
                let total: f64 = masses.iter().sum();
                if (total - 1.0).abs() > MASS_TOL {
                    return Err(Error::invalid_input(format!(
                        "lattice masses must sum to 1 within {MASS_TOL:e}, got {total}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Whether the law is supported on a countable set.
    pub fn is_discrete(&self) -> bool {
        matches!(
            self,
            DensitySpec::Bernoulli { .. }
                | DensitySpec::Poisson { .. }
                | DensitySpec::Lattice { .. }
        )
    }

    /// Log density (continuous) or log mass (discrete) at `x`; `-inf`
    /// outside the support.
    pub fn log_density(&self, x: f64) -> f64 {
        match self {
            DensitySpec::Normal { mean, sd } => {
                let z = (x - mean) / sd;
                -0.5 * (2.0 * std::f64::consts::PI).ln() - sd.ln() - 0.5 * z * z
            }
            DensitySpec::Bernoulli { p } => {
                if x == 1.0 {
                    p.ln()
                } else if x == 0.0 {
                    (1.0 - p).ln()
                } else {
                    f64::NEG_INFINITY
                }
            }
            DensitySpec::Poisson { rate } => {
                if x < 0.0 || x.fract().abs() > SUPPORT_TOL {
                    return f64::NEG_INFINITY;
                }
                let k = x.round() as u64;
                (k as f64) * rate.ln() - rate - ln_factorial(k)
            }
            DensitySpec::Exponential { rate } => {
                if x < 0.0 {
                    f64::NEG_INFINITY
                } else {
                    rate.ln() - rate * x
                }
            }
            DensitySpec::Lattice { support, masses } => match lattice_index(support, x) {
                Some(i) if masses[i] > 0.0 => masses[i].ln(),
                _ => f64::NEG_INFINITY,
            },
        }
    }

    /// Draw one observation.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            DensitySpec::Normal { mean, sd } => {
                Normal::new(*mean, *sd).expect("validated").sample(rng)
            }
            DensitySpec::Bernoulli { p } => {
                if rng.random::<f64>() < *p {
                    1.0
                } else {
                    0.0
                }
            }
            DensitySpec::Poisson { rate } => Poisson::new(*rate).expect("validated").sample(rng),
            DensitySpec::Exponential { rate } => Exp::new(*rate).expect("validated").sample(rng),
            DensitySpec::Lattice { support, masses } => {
                let u: f64 = rng.random();
                let mut acc = 0.0;
                for (x, m) in support.iter().zip(masses) {
                    acc += m;
                    if u < acc {
                        return *x;
                    }
                }
                *support.last().expect("nonempty")
            }
        }
    }

    /// Finite support with masses, when the law is a finite lattice
    /// (explicit lattice or bernoulli). `None` otherwise.
    pub fn finite_support(&self) -> Option<(Vec<f64>, Vec<f64>)> {
        match self {
            DensitySpec::Bernoulli { p } => Some((vec![0.0, 1.0], vec![1.0 - p, *p])),
            DensitySpec::Lattice { support, masses } => Some((support.clone(), masses.clone())),
            _ => None,
        }
    }
}

fn lattice_index(support: &[f64], x: f64) -> Option<usize> {
    let i = support.partition_point(|s| *s < x);
    if i < support.len() && (support[i] - x).abs() <= SUPPORT_TOL {
        return Some(i);
    }
    if i > 0 && (support[i - 1] - x).abs() <= SUPPORT_TOL {
        return Some(i - 1);
    }
    None
}

fn ln_factorial(k: u64) -> f64 {
    (1..=k).map(|i| (i as f64).ln()).sum()
}

/// The hypothesis pair: base law `F` and change law `G`.
///
/// `F` and `G` need not be mutually absolutely continuous, so the
/// log-likelihood ratio takes values in the extended reals. They must
/// however be both discrete or both continuous; the reference measure for
/// a mixed pair is not defined here.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributionPair {
    pub base: DensitySpec,
    pub change: DensitySpec,
}

impl DistributionPair {
    pub fn new(base: DensitySpec, change: DensitySpec) -> Result<Self> {
        base.validate()?;
        change.validate()?;
        if base.is_discrete() != change.is_discrete() {
            return Err(Error::invalid_input(
                "base and change must be both discrete or both continuous",
            ));
        }
        Ok(DistributionPair { base, change })
    }

    pub fn validate(&self) -> Result<()> {
        Self::new(self.base.clone(), self.change.clone()).map(|_| ())
    }

    /// Log-likelihood ratio `log g(x) - log f(x)` in the extended reals:
    /// `+inf` when `f(x) = 0 < g(x)`, `-inf` when `g(x) = 0 < f(x)`.
    ///
    /// An `x` outside both supports is a zero-probability observation.
    pub fn llr(&self, x: f64) -> Result<f64> {
        let lf = self.base.log_density(x);
        let lg = self.change.log_density(x);
        if lf == f64::NEG_INFINITY && lg == f64::NEG_INFINITY {
            return Err(Error::ZeroProbabilityObservation(x));
        }
        if lf == f64::NEG_INFINITY {
            return Ok(f64::INFINITY);
        }
        if lg == f64::NEG_INFINITY {
            return Ok(f64::NEG_INFINITY);
        }
        Ok(lg - lf)
    }

    /// The pair with the roles of `F` and `G` exchanged.
    pub fn swapped(&self) -> Self {
        DistributionPair {
            base: self.change.clone(),
            change: self.base.clone(),
        }
    }
}

/// Sample length `n` together with the ordered disjoint change intervals
/// `(a_k, b_k]`; the ground truth for simulation and scoring.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChangeScenario {
    pub n: usize,
    pub intervals: Vec<(usize, usize)>,
}

impl ChangeScenario {
    pub fn new(n: usize, intervals: Vec<(usize, usize)>) -> Result<Self> {
        let s = ChangeScenario { n, intervals };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        let mut prev = 0usize;
        for (i, &(a, b)) in self.intervals.iter().enumerate() {
            if a >= b {
                return Err(Error::invalid_input(format!(
                    "interval {i} has a >= b: ({a}, {b}]"
                )));
            }
            if i > 0 && a <= prev {
                return Err(Error::invalid_input(format!(
                    "interval {i} overlaps or touches its predecessor"
                )));
            }
            if b > self.n {
                return Err(Error::invalid_input(format!(
                    "interval {i} exceeds the sample length {}",
                    self.n
                )));
            }
            prev = b;
        }
        Ok(())
    }

    /// Whether observation index `i` (1-based) falls in a change interval.
    pub fn is_change_index(&self, i: usize) -> bool {
        self.intervals.iter().any(|&(a, b)| i > a && i <= b)
    }
}

/// Draw `X_1..X_n` with `X_i ~ G` inside the change intervals and
/// `X_i ~ F` elsewhere. Deterministic in `seed`.
pub fn sample_scenario(
    scenario: &ChangeScenario,
    pair: &DistributionPair,
    seed: u64,
) -> Result<Vec<f64>> {
    scenario.validate()?;
    let mut rng = crate::rng::seeded_rng(seed);
    let mut out = Vec::with_capacity(scenario.n);
    for i in 1..=scenario.n {
        let spec = if scenario.is_change_index(i) {
            &pair.change
        } else {
            &pair.base
        };
        out.push(spec.sample(&mut rng));
    }
    Ok(out)
}

/// A canonical one-parameter exponential family
/// `f(x | theta) = exp(theta x - psi(theta)) h(x)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExponentialFamilyModel {
    NormalUnitVariance,
    Bernoulli,
    Poisson,
    Exponential,
}

impl ExponentialFamilyModel {
    /// The open natural-parameter domain.
    pub fn natural_domain(self) -> (f64, f64) {
        match self {
            ExponentialFamilyModel::Exponential => (f64::NEG_INFINITY, 0.0),
            _ => (f64::NEG_INFINITY, f64::INFINITY),
        }
    }

    /// The open domain of the mean map `psi'`.
    pub fn mean_domain(self) -> (f64, f64) {
        match self {
            ExponentialFamilyModel::NormalUnitVariance => (f64::NEG_INFINITY, f64::INFINITY),
            ExponentialFamilyModel::Bernoulli => (0.0, 1.0),
            ExponentialFamilyModel::Poisson | ExponentialFamilyModel::Exponential => {
                (0.0, f64::INFINITY)
            }
        }
    }

    /// Log-partition `psi(theta)`.
    pub fn psi(self, theta: f64) -> f64 {
        match self {
            ExponentialFamilyModel::NormalUnitVariance => 0.5 * theta * theta,
            ExponentialFamilyModel::Bernoulli => theta.exp().ln_1p(),
            ExponentialFamilyModel::Poisson => theta.exp(),
            ExponentialFamilyModel::Exponential => -(-theta).ln(),
        }
    }

    /// Mean map `psi'(theta)`; strictly increasing on the natural domain.
    pub fn psi_prime(self, theta: f64) -> f64 {
        match self {
            ExponentialFamilyModel::NormalUnitVariance => theta,
            ExponentialFamilyModel::Bernoulli => 1.0 / (1.0 + (-theta).exp()),
            ExponentialFamilyModel::Poisson => theta.exp(),
            ExponentialFamilyModel::Exponential => -1.0 / theta,
        }
    }

    /// Inverse of the mean map; `mean` must lie in the open mean domain.
    pub fn mean_to_natural(self, mean: f64) -> f64 {
        match self {
            ExponentialFamilyModel::NormalUnitVariance => mean,
            ExponentialFamilyModel::Bernoulli => (mean / (1.0 - mean)).ln(),
            ExponentialFamilyModel::Poisson => mean.ln(),
            ExponentialFamilyModel::Exponential => -1.0 / mean,
        }
    }

    /// The member of the family at natural parameter `theta`.
    pub fn density_spec(self, theta: f64) -> DensitySpec {
        match self {
            ExponentialFamilyModel::NormalUnitVariance => DensitySpec::Normal {
                mean: theta,
                sd: 1.0,
            },
            ExponentialFamilyModel::Bernoulli => DensitySpec::Bernoulli {
                p: self.psi_prime(theta),
            },
            ExponentialFamilyModel::Poisson => DensitySpec::Poisson { rate: theta.exp() },
            ExponentialFamilyModel::Exponential => DensitySpec::Exponential { rate: -theta },
        }
    }

    /// Log-likelihood ratio between parameters `theta1` and `theta0` at `x`:
    /// `(theta1 - theta0) x - (psi(theta1) - psi(theta0))`.
    pub fn llr_between(self, theta1: f64, theta0: f64, x: f64) -> f64 {
        (theta1 - theta0) * x - (self.psi(theta1) - self.psi(theta0))
    }
}

/// Natural-parameter MLE: the `theta` with `psi'(theta)` equal to the
/// sample mean. Errors when the mean sits on the boundary of the mean
/// domain (e.g. an all-zero bernoulli sample).
pub fn mle_natural_parameter(family: ExponentialFamilyModel, sample: &[f64]) -> Result<f64> {
    if sample.is_empty() {
        return Err(Error::invalid_input("empty sample"));
    }
    let mean = sample.iter().sum::<f64>() / sample.len() as f64;
    let (lo, hi) = family.mean_domain();
    if !(mean > lo && mean < hi) {
        return Err(Error::BoundaryMle(mean));
    }
    Ok(family.mean_to_natural(mean))
}

/// Boundary-robust MLE for short windows: a boundary mean is clamped into
/// the domain by `1/(2 m)` where `m` is the sample length, which keeps
/// likelihood-ratio statistics finite.
pub fn mle_natural_parameter_clamped(
    family: ExponentialFamilyModel,
    sample: &[f64],
) -> Result<f64> {
    if sample.is_empty() {
        return Err(Error::invalid_input("empty sample"));
    }
    let mean = sample.iter().sum::<f64>() / sample.len() as f64;
    let eps = 1.0 / (2.0 * sample.len() as f64);
    let (lo, hi) = family.mean_domain();
    let clamped = match family {
        ExponentialFamilyModel::NormalUnitVariance => mean,
        _ => {
            let lo_c = if lo.is_finite() { lo + eps } else { mean };
            let hi_c = if hi.is_finite() {
                hi - eps
            } else {
                mean.max(lo_c)
            };
            mean.clamp(lo_c, hi_c.max(lo_c))
        }
    };
    Ok(family.mean_to_natural(clamped))
}
