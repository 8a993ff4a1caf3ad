//! Integer-lattice dynamic-programming primitives shared by the exact
//! distribution computations.

use crate::error::{Error, Result};

/// Distribution of one walk step on the integer lattice.
#[derive(Debug, Clone, PartialEq)]
pub struct StepPmf {
    offsets: Vec<i64>,
    masses: Vec<f64>,
}

impl StepPmf {
    pub fn new(offsets: Vec<i64>, masses: Vec<f64>) -> Result<Self> {
        if offsets.is_empty() || offsets.len() != masses.len() {
            return Err(Error::invalid_input(
                "step offsets and masses must be nonempty and equally long",
            ));
        }
        if offsets.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid_input(
                "step offsets must be strictly increasing",
            ));
        }
        if masses.iter().any(|m| m.is_nan() || *m < 0.0) {
            return Err(Error::invalid_input("step masses must be nonnegative"));
        }
        let total: f64 = masses.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::invalid_input(format!(
                "step masses must sum to 1, got {total}"
            )));
        }
        Ok(StepPmf { offsets, masses })
    }

    /// Quantize real step values onto multiples of `delta`, pooling
    /// values that round to the same offset and dropping zero masses.
    pub fn from_values(values: &[f64], masses: &[f64], delta: f64) -> Result<Self> {
        let mut pairs: Vec<(i64, f64)> = Vec::new();
        for (v, m) in values.iter().zip(masses) {
            if *m == 0.0 {
                continue;
            }
            let k = (v / delta).round() as i64;
            match pairs.binary_search_by_key(&k, |(o, _)| *o) {
                Ok(i) => pairs[i].1 += m,
                Err(i) => pairs.insert(i, (k, *m)),
            }
        }
        let (offsets, masses) = pairs.into_iter().unzip();
        StepPmf::new(offsets, masses)
    }

    pub fn offsets(&self) -> &[i64] {
        &self.offsets
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn min_offset(&self) -> i64 {
        self.offsets[0]
    }

    pub fn max_offset(&self) -> i64 {
        *self.offsets.last().unwrap()
    }

    pub fn iter(&self) -> impl Iterator<Item = (i64, f64)> + '_ {
        self.offsets
            .iter()
            .copied()
            .zip(self.masses.iter().copied())
    }

    /// The step distribution of the negated walk.
    pub fn negated(&self) -> StepPmf {
        let offsets: Vec<i64> = self.offsets.iter().rev().map(|o| -o).collect();
        let masses: Vec<f64> = self.masses.iter().rev().copied().collect();
        StepPmf { offsets, masses }
    }

    /// Mean step in lattice units.
    pub fn drift(&self) -> f64 {
        self.iter().map(|(o, m)| o as f64 * m).sum()
    }
}

/// A run list: consecutive homogeneous blocks of a walk.
pub type Runs<'a> = [(&'a StepPmf, usize)];

pub fn flatten<'a>(runs: &'a Runs<'a>) -> impl Iterator<Item = &'a StepPmf> + 'a {
    runs.iter()
        .flat_map(|(pmf, len)| std::iter::repeat_n(*pmf, *len))
}

pub fn total_len(runs: &Runs) -> usize {
    runs.iter().map(|(_, l)| l).sum()
}

/// Dense 1-D table over a signed integer index.
#[derive(Debug, Clone)]
pub struct Tab1 {
    pub lo: i64,
    pub data: Vec<f64>,
}

impl Tab1 {
    pub fn zeros(lo: i64, hi: i64) -> Self {
        assert!(hi >= lo);
        Tab1 {
            lo,
            data: vec![0.0; (hi - lo + 1) as usize],
        }
    }

    pub fn add(&mut self, i: i64, v: f64) {
        let idx = (i - self.lo) as usize;
        self.data[idx] += v;
    }

    pub fn iter_nonzero(&self) -> impl Iterator<Item = (i64, f64)> + '_ {
        self.data
            .iter()
            .enumerate()
            .filter(|(_, v)| **v != 0.0)
            .map(|(i, v)| (self.lo + i as i64, *v))
    }

    pub fn total(&self) -> f64 {
        self.data.iter().sum()
    }
}

/// Dense 2-D table over a pair of signed integer indices.
#[derive(Debug, Clone)]
pub struct Tab2 {
    pub a_lo: i64,
    pub a_hi: i64,
    pub b_lo: i64,
    pub b_hi: i64,
    data: Vec<f64>,
}

impl Tab2 {
    pub fn zeros(a_lo: i64, a_hi: i64, b_lo: i64, b_hi: i64) -> Self {
        assert!(a_hi >= a_lo && b_hi >= b_lo);
        let len = ((a_hi - a_lo + 1) * (b_hi - b_lo + 1)) as usize;
        Tab2 {
            a_lo,
            a_hi,
            b_lo,
            b_hi,
            data: vec![0.0; len],
        }
    }

    fn idx(&self, a: i64, b: i64) -> usize {
        debug_assert!(a >= self.a_lo && a <= self.a_hi && b >= self.b_lo && b <= self.b_hi);
        ((a - self.a_lo) * (self.b_hi - self.b_lo + 1) + (b - self.b_lo)) as usize
    }

    pub fn add(&mut self, a: i64, b: i64, v: f64) {
        let i = self.idx(a, b);
        self.data[i] += v;
    }

    pub fn iter_nonzero(&self) -> impl Iterator<Item = ((i64, i64), f64)> + '_ {
        let b_span = self.b_hi - self.b_lo + 1;
        self.data
            .iter()
            .enumerate()
            .filter(|(_, v)| **v != 0.0)
            .map(move |(i, v)| {
                let a = self.a_lo + i as i64 / b_span;
                let b = self.b_lo + i as i64 % b_span;
                ((a, b), *v)
            })
    }
}

/// `P(S_i <= bound for every prefix i = 1..k)` over an inhomogeneous run
/// list. The start `S_0 = 0` is unconstrained.
pub fn stay_below_runs(runs: &Runs, bound: i64) -> f64 {
    let k = total_len(runs) as i64;
    if k == 0 {
        return 1.0;
    }
    let min_step = flatten(runs).map(StepPmf::min_offset).min().unwrap();
    let lo = (k * min_step).min(0);
    let mut cur = Tab1::zeros(lo, bound.max(0));
    cur.add(0, 1.0);
    for pmf in flatten(runs) {
        let mut next = Tab1::zeros(lo, bound.max(0));
        for (v, mass) in cur.iter_nonzero() {
            for (y, p) in pmf.iter() {
                let v2 = v + y;
                if v2 <= bound {
                    next.add(v2.max(lo), mass * p);
                }
            }
        }
        cur = next;
    }
    cur.total()
}

/// Joint law of `(S_k, max(0, S_1..S_{k-1}))` over an inhomogeneous run
/// list, with paths killed once the walk falls to `floor` or below
/// (`None` = unconstrained). Requires at least one step.
///
/// Output axes: `a` = end value `S_k`, `b` = the 0-inclusive previous
/// maximum (the start `S_0 = 0` counts as a competitor).
pub fn prev_max_end_runs(runs: &Runs, floor: Option<i64>) -> Tab2 {
    let k = total_len(runs) as i64;
    assert!(k >= 1, "prev_max_end_runs requires at least one step");
    let min_step = flatten(runs).map(StepPmf::min_offset).min().unwrap();
    let max_step = flatten(runs).map(StepPmf::max_offset).max().unwrap();
    let v_lo = match floor {
        Some(f) => (f + 1).min(0),
        None => (k * min_step).min(0),
    };
    let v_hi = (k * max_step).max(0);
    let m_hi = v_hi;
    let mut cur = Tab2::zeros(v_lo, v_hi, 0, m_hi);
    cur.add(0, 0, 1.0);
    for pmf in flatten(runs) {
        let mut next = Tab2::zeros(v_lo, v_hi, 0, m_hi);
        for ((v, m), mass) in cur.iter_nonzero() {
            let m2 = m.max(v);
            for (y, p) in pmf.iter() {
                let v2 = v + y;
                if let Some(f) = floor {
                    if v2 <= f {
                        continue;
                    }
                }
                next.add(v2, m2, mass * p);
            }
        }
        cur = next;
    }
    cur
}

/// Interior excursion probability of a block: the walk stays strictly
/// positive and finishes strictly above everything before it (including
/// the start). Empty blocks are vacuous.
pub fn interior_strict(runs: &Runs) -> f64 {
    if total_len(runs) == 0 {
        return 1.0;
    }
    let tab = prev_max_end_runs(runs, Some(0));
    tab.iter_nonzero()
        .filter(|((e, m), _)| e > m)
        .map(|(_, v)| v)
        .sum()
}
