//! Exact and asymptotic distributions of the interval-estimation error.
//!
//! Everything here runs on a common integer lattice: the log-likelihood
//! ratio steps of a finite-lattice pair are expressed as integer
//! multiples of a step `delta`, and all probabilities are exact dynamic
//! programs over integer walk values (floating point enters only through
//! the masses). Continuous pairs can be handled after discretization.
//!
//! Conventions on lattices, where ties have positive mass, follow the
//! estimator they describe: exterior excursion factors are non-strict
//! (a tie with the extremum leaves the kernel point in place), interior
//! factors are strict (an interior tie produces an earlier kernel point
//! and disqualifies the pair). The homogeneous tabulations in
//! [`excursion`] use the strict `< x` / unique-argmax conventions
//! throughout; the discrepancy against the estimator's tie-breaking is
//! confined to zero-mass events for continuous pairs.

mod asymptotic;
mod cases;
mod dp;
mod excursion;
mod qtable;

pub use asymptotic::{asymptotic_mle_pmf, lle_bound, spitzer_atom, Bracketed, Side};
pub use cases::{ple_case, ple_joint_probability, PleCase};
pub use dp::StepPmf;
pub use excursion::{excursion_tables, ExcursionTables};
pub use qtable::{q_base, q_step, q_tables, QTable};

use crate::error::{Error, Result};
use crate::model::DistributionPair;

/// A probability mass function on a finite, strictly increasing support.
#[derive(Debug, Clone, PartialEq)]
pub struct GridDensity {
    support: Vec<f64>,
    masses: Vec<f64>,
    origin: Option<usize>,
}

impl GridDensity {
    /// `support` must be strictly increasing and aligned with `masses`.
    pub fn new(support: Vec<f64>, masses: Vec<f64>) -> Self {
        assert_eq!(support.len(), masses.len());
        debug_assert!(support.windows(2).all(|w| w[0] < w[1]));
        let origin = support.iter().position(|x| x.abs() <= 1e-12);
        GridDensity {
            support,
            masses,
            origin,
        }
    }

    pub fn support(&self) -> &[f64] {
        &self.support
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    /// Index of the zero atom, when present.
    pub fn origin(&self) -> Option<usize> {
        self.origin
    }

    pub fn total_mass(&self) -> f64 {
        self.masses.iter().sum()
    }

    /// Expectation of `f` under the density.
    pub fn expect(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.support
            .iter()
            .zip(&self.masses)
            .map(|(x, m)| m * f(*x))
            .sum()
    }
}

/// A finite-lattice pair prepared for exact computation: the common step
/// `delta` and the integer LLR-step distributions under `F` and `G`.
#[derive(Debug, Clone)]
pub struct LatticePair {
    delta: f64,
    f_steps: StepPmf,
    g_steps: StepPmf,
}

impl LatticePair {
    /// Build from a pair of finite-lattice densities. The LLR must be
    /// finite on the union support (mutually absolutely continuous parts
    /// only), and the distinct LLR values must be commensurable or they
    /// are quantized to a grid fine enough that the rounding error per
    /// step stays below 1e-3.
    pub fn from_pair(pair: &DistributionPair) -> Result<Self> {
        let (fx, fm) = pair.base.finite_support().ok_or_else(|| {
            Error::invalid_input("exact distributions require finite-lattice densities")
        })?;
        let (gx, gm) = pair.change.finite_support().ok_or_else(|| {
            Error::invalid_input("exact distributions require finite-lattice densities")
        })?;

        let mut xs: Vec<f64> = fx.iter().chain(gx.iter()).copied().collect();
        xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        xs.dedup_by(|a, b| (*a - *b).abs() <= 1e-12);

        let mut values = Vec::with_capacity(xs.len());
        let mut f_mass = Vec::with_capacity(xs.len());
        let mut g_mass = Vec::with_capacity(xs.len());
        for &x in &xs {
            let mf = mass_at(&fx, &fm, x);
            let mg = mass_at(&gx, &gm, x);
            if mf == 0.0 && mg == 0.0 {
                continue;
            }
            let y = pair.llr(x)?;
            if !y.is_finite() {
                return Err(Error::invalid_input(
                    "exact distributions require a finite log-likelihood ratio on the union support",
                ));
            }
            values.push(y);
            f_mass.push(mf);
            g_mass.push(mg);
        }

        let delta = common_delta(&values).unwrap_or_else(|| {
            let max_abs = values.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-6);
            let k = (max_abs / 2e-3).ceil().max(1.0);
            max_abs / k
        });

        let f_steps = StepPmf::from_values(&values, &f_mass, delta)?;
        let g_steps = StepPmf::from_values(&values, &g_mass, delta)?;
        Ok(LatticePair {
            delta,
            f_steps,
            g_steps,
        })
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// Integer LLR-step distribution under the base law.
    pub fn f_steps(&self) -> &StepPmf {
        &self.f_steps
    }

    /// Integer LLR-step distribution under the change law.
    pub fn g_steps(&self) -> &StepPmf {
        &self.g_steps
    }
}

fn mass_at(xs: &[f64], ms: &[f64], x: f64) -> f64 {
    xs.iter()
        .zip(ms)
        .find(|(s, _)| (**s - x).abs() <= 1e-12)
        .map(|(_, m)| *m)
        .unwrap_or(0.0)
}

/// Largest `delta` such that every value is an integer multiple of it
/// (within relative tolerance 1e-9), via a Euclid pass with symmetric
/// remainders. `None` when the values are not commensurable at a usable
/// scale.
fn common_delta(values: &[f64]) -> Option<f64> {
    const TOL: f64 = 1e-9;
    let mut g: f64 = 0.0;
    for &v in values {
        let a = v.abs();
        if a <= TOL {
            continue;
        }
        if g == 0.0 {
            g = a;
            continue;
        }
        let (mut x, mut y) = (a.max(g), a.min(g));
        loop {
            let r = (x - y * (x / y).round()).abs();
            if r <= TOL * x.max(1.0) {
                break;
            }
            x = y;
            y = r;
        }
        g = y;
    }
    if g <= 1e-8 {
        return None;
    }
    let ok = values.iter().all(|v| {
        let k = (v / g).round();
        (v - k * g).abs() <= 1e-9 * v.abs().max(1.0)
    });
    // Guard against absurd grids from near-incommensurable values.
    let span = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if ok && span / g < 1e6 {
        Some(g)
    } else {
        None
    }
}
