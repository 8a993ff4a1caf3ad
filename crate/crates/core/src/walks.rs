//! Log-likelihood-ratio random walks, CUSUM processes, kernels, and the
//! exact lattice dynamic program over CUSUM values.

use crate::error::{Error, Result};
use crate::exactdist::GridDensity;
use crate::model::DistributionPair;

/// Absolute tolerance for kernel membership and tie detection on
/// floating-point walks. CUSUM values are differences of partial sums of
/// comparable magnitude, so absolute error accumulates roughly linearly
/// in the horizon; 1e-9 dominates that comfortably at desk scale.
pub const EPS_ZERO: f64 = 1e-9;

/// Cap on distinct reachable states in the exact lattice DP.
pub const LATTICE_STATE_CAP: usize = 1_000_000;

/// The random walk `S_0..S_n` built on per-observation log-likelihood
/// ratios. Increments may be infinite when the pair is not mutually
/// absolutely continuous.
#[derive(Debug, Clone, PartialEq)]
pub struct WalkTrace {
    values: Vec<f64>,
    increments: Vec<f64>,
}

impl WalkTrace {
    /// Build from raw increments; `S_0 = 0`.
    pub fn from_increments(increments: Vec<f64>) -> Self {
        let mut values = Vec::with_capacity(increments.len() + 1);
        let mut s = 0.0;
        values.push(s);
        for &y in &increments {
            s += y;
            values.push(s);
        }
        WalkTrace { values, increments }
    }

    /// `S_0..S_n`.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// The per-step increments `Y_1..Y_n`.
    pub fn increments(&self) -> &[f64] {
        &self.increments
    }

    /// Number of observations `n`.
    pub fn len(&self) -> usize {
        self.increments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.increments.is_empty()
    }
}

/// Orientation of a CUSUM process.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// Detects F -> G: `W_{t+1} = max(0, W_t + Y_{t+1})`.
    Forward,
    /// Detects G -> F: `W~_{t+1} = max(0, W~_t - Y_{t+1})`.
    Reverse,
}

/// A nonnegative CUSUM trace.
///
/// `offset` is the data index of `values[0]`. For renewed traces the
/// values are local to the renewal time; for the retrospective reverse
/// CUSUM (see [`reverse_cusum`]) the values sit on the data axis with
/// `offset = 0` and vanish at the right end instead of the left.
#[derive(Debug, Clone, PartialEq)]
pub struct CusumTrace {
    values: Vec<f64>,
    direction: Direction,
    offset: usize,
}

impl CusumTrace {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn direction(&self) -> Direction {
        self.direction
    }

    pub fn offset(&self) -> usize {
        self.offset
    }
}

/// The ordered zero set of a CUSUM trace, on the trace's own index axis.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KernelSet {
    pub indices: Vec<usize>,
}

impl KernelSet {
    pub fn contains(&self, t: usize) -> bool {
        self.indices.binary_search(&t).is_ok()
    }
}

/// The LLR random walk of a series under a pair.
pub fn random_walk(pair: &DistributionPair, series: &[f64]) -> Result<WalkTrace> {
    let increments = series
        .iter()
        .map(|&x| pair.llr(x))
        .collect::<Result<Vec<f64>>>()?;
    Ok(WalkTrace::from_increments(increments))
}

fn cusum_step_forward(w: f64, y: f64) -> f64 {
    if y == f64::NEG_INFINITY {
        // max(0, -inf): a -inf step grounds the process, even from +inf.
        0.0
    } else {
        f64::max(0.0, w + y)
    }
}

/// Forward CUSUM `W_t = S_t - min_{i<=t} S_i`, computed by the exact
/// recursion `W_{t+1} = max(0, W_t + Y_{t+1})`.
pub fn cusum(walk: &WalkTrace) -> CusumTrace {
    let mut values = Vec::with_capacity(walk.len() + 1);
    let mut w = 0.0;
    values.push(w);
    for &y in walk.increments() {
        w = cusum_step_forward(w, y);
        values.push(w);
    }
    CusumTrace {
        values,
        direction: Direction::Forward,
        offset: 0,
    }
}

/// Retrospective reverse CUSUM on the data axis: entry `m` equals
/// `max_{m<=j<=n} S_j - S_m`, zero exactly where `S_m` is a maximum of
/// the remaining tail.
pub fn reverse_cusum(walk: &WalkTrace) -> CusumTrace {
    let s = walk.values();
    let n = walk.len();
    let mut values = vec![0.0; n + 1];
    let mut tail_max = f64::NEG_INFINITY;
    for m in (0..=n).rev() {
        tail_max = tail_max.max(s[m]);
        values[m] = tail_max - s[m];
    }
    CusumTrace {
        values,
        direction: Direction::Reverse,
        offset: 0,
    }
}

/// CUSUM renewed (grounded at zero) at time `t0`, indexed locally so that
/// entry `t` refers to data position `t0 + t`.
///
/// Forward renewals detect the next switch to `G`; reverse renewals run
/// on the negated increments and detect the switch back to `F`.
pub fn renewed_cusum(walk: &WalkTrace, t0: usize, direction: Direction) -> Result<CusumTrace> {
    if t0 > walk.len() {
        return Err(Error::invalid_input(format!(
            "renewal time {t0} exceeds the walk length {}",
            walk.len()
        )));
    }
    let mut values = Vec::with_capacity(walk.len() - t0 + 1);
    let mut w = 0.0;
    values.push(w);
    for &y in &walk.increments()[t0..] {
        let inc = match direction {
            Direction::Forward => y,
            Direction::Reverse => -y,
        };
        w = cusum_step_forward(w, inc);
        values.push(w);
    }
    Ok(CusumTrace {
        values,
        direction,
        offset: t0,
    })
}

/// Indices where the trace is zero up to `tolerance` (use 0 for exact
/// arithmetic, [`EPS_ZERO`] for floating point).
pub fn kernel(trace: &CusumTrace, tolerance: f64) -> KernelSet {
    let indices = trace
        .values
        .iter()
        .enumerate()
        .filter(|(_, w)| **w <= tolerance)
        .map(|(t, _)| t)
        .collect();
    KernelSet { indices }
}

/// Distribution of i.i.d. walk steps on a finite set of values, plus the
/// horizon over which the CUSUM is evolved.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeWalkDistribution {
    pub step_values: Vec<f64>,
    pub step_masses: Vec<f64>,
    pub horizon: usize,
}

/// Which law of the pair the steps are drawn under.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Hypothesis {
    Base,
    Change,
}

impl LatticeWalkDistribution {
    pub fn new(step_values: Vec<f64>, step_masses: Vec<f64>, horizon: usize) -> Result<Self> {
        if step_values.is_empty() || step_values.len() != step_masses.len() {
            return Err(Error::invalid_input(
                "step values and masses must be nonempty and equally long",
            ));
        }
        if step_masses.iter().any(|m| m.is_nan() || *m < 0.0) {
            return Err(Error::invalid_input("step masses must be nonnegative"));
        }
        let total: f64 = step_masses.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::invalid_input(format!(
                "step masses must sum to 1, got {total}"
            )));
        }
        Ok(LatticeWalkDistribution {
            step_values,
            step_masses,
            horizon,
        })
    }

    /// LLR step distribution of a finite-lattice pair under `under`,
    /// optionally negated (the reverse-direction walk).
    pub fn from_pair(
        pair: &DistributionPair,
        under: Hypothesis,
        negate: bool,
        horizon: usize,
    ) -> Result<Self> {
        let spec = match under {
            Hypothesis::Base => &pair.base,
            Hypothesis::Change => &pair.change,
        };
        let (support, masses) = spec.finite_support().ok_or_else(|| {
            Error::invalid_input("exact lattice walks require finite-lattice densities")
        })?;
        let mut values = Vec::new();
        let mut probs = Vec::new();
        for (x, m) in support.iter().zip(&masses) {
            if *m == 0.0 {
                continue;
            }
            let y = pair.llr(*x)?;
            values.push(if negate { -y } else { y });
            probs.push(*m);
        }
        Self::new(values, probs, horizon)
    }
}

/// Exact distribution of `W_n` for i.i.d. lattice steps, by dynamic
/// programming over the recursion `W_{t+1} = max(0, W_t + Y)`.
///
/// States within `1e-9` (relative) of each other are pooled, which keeps
/// path-dependent rounding from splitting a mathematical atom; the masses
/// themselves are exact sums. Refuses with a state-explosion error rather
/// than silently binning when the reachable set exceeds
/// [`LATTICE_STATE_CAP`].
pub fn lattice_cusum_distribution(dist: &LatticeWalkDistribution) -> Result<GridDensity> {
    // Sorted association list of (state value, mass).
    let mut states: Vec<(f64, f64)> = vec![(0.0, 1.0)];
    let mut scratch: Vec<(f64, f64)> = Vec::new();
    for _ in 0..dist.horizon {
        scratch.clear();
        for &(w, mass) in &states {
            for (y, p) in dist.step_values.iter().zip(&dist.step_masses) {
                if *p == 0.0 {
                    continue;
                }
                scratch.push((cusum_step_forward(w, *y), mass * p));
            }
        }
        scratch.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut next: Vec<(f64, f64)> = Vec::with_capacity(states.len() * 2);
        for &(v, mass) in scratch.iter() {
            match next.last_mut() {
                // An infinite state only pools with an exact duplicate;
                // the tolerance is meaningless there (inf - inf is NaN).
                Some((anchor, acc))
                    if *anchor == v
                        || (anchor.is_finite() && (v - *anchor).abs() <= merge_tol(*anchor)) =>
                {
                    *acc += mass;
                }
                _ => next.push((v, mass)),
            }
        }
        if next.len() > LATTICE_STATE_CAP {
            return Err(Error::StateExplosion {
                states: next.len(),
                cap: LATTICE_STATE_CAP,
            });
        }
        states = next;
    }
    let (support, masses): (Vec<f64>, Vec<f64>) = states.into_iter().unzip();
    Ok(GridDensity::new(support, masses))
}

fn merge_tol(v: f64) -> f64 {
    1e-9 * v.abs().max(1.0)
}
