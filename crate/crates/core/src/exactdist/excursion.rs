//! Homogeneous-walk excursion tabulations: the running-maximum cdf
//! `R(x)`, the located-maximum atoms `B(y)`, and the joint
//! `A(x, dy)` of the running maximum with the endpoint.
//!
//! All quantities use the strict conventions: `R_k(x) = P(max(S_1..S_k) < x)`
//! (the degenerate `max` over an empty set is `0`, so `R_0(x) = 1{x > 0}`),
//! and `B_{k,s}(y)` requires a strict, unique argmax at `k` (ties
//! contribute zero). `A_k(x, .)` bounds the 0-inclusive maximum
//! non-strictly, `max(0, S_1..S_k) <= x`.

use super::dp::{prev_max_end_runs, stay_below_runs, StepPmf, Tab1, Tab2};

/// Tabulations for a walk with i.i.d. `H` increments, to `k` steps with
/// `s` extra competitor steps for the argmax events.
#[derive(Debug, Clone)]
pub struct ExcursionTables {
    pub k: usize,
    pub s: usize,
    /// pmf of the true maximum `max(S_1..S_k)`; `None` when `k = 0`.
    max_pmf_fwd: Option<Tab1>,
    /// Same for the negated walk.
    max_pmf_rev: Option<Tab1>,
    /// Atoms of `B+`: strict unique argmax at `k` among `0..=k+s`.
    b_plus: Vec<(i64, f64)>,
    /// Atoms of `B-` (argmax of the negated walk).
    b_minus: Vec<(i64, f64)>,
    /// Joint of (0-inclusive max, endpoint) of the forward walk.
    joint_fwd: Option<Tab2>,
    joint_rev: Option<Tab2>,
}

impl ExcursionTables {
    /// `R+_k(x) = P(max(S_1..S_k) < x)`; the empty maximum at `k = 0`
    /// makes the condition vacuous.
    pub fn r_plus(&self, x: i64) -> f64 {
        match &self.max_pmf_fwd {
            None => 1.0,
            Some(t) => t
                .iter_nonzero()
                .filter(|(m, _)| *m < x)
                .map(|(_, p)| p)
                .sum(),
        }
    }

    /// `R-_k(x)`: same for the negated walk.
    pub fn r_minus(&self, x: i64) -> f64 {
        match &self.max_pmf_rev {
            None => 1.0,
            Some(t) => t
                .iter_nonzero()
                .filter(|(m, _)| *m < x)
                .map(|(_, p)| p)
                .sum(),
        }
    }

    /// Atoms `(y, mass)` of `B+_{k,s}`: the walk attains its strict
    /// maximum over `0..=k+s` exactly at `k`, with `S_k = y`.
    pub fn b_plus_atoms(&self) -> &[(i64, f64)] {
        &self.b_plus
    }

    pub fn b_minus_atoms(&self) -> &[(i64, f64)] {
        &self.b_minus
    }

    /// `A_k(x, y) = P(max(0, S_1..S_k) <= x, -S_k = y)`.
    pub fn a_plus(&self, x: i64, y: i64) -> f64 {
        match &self.joint_fwd {
            None => {
                if x >= 0 && y == 0 {
                    1.0
                } else {
                    0.0
                }
            }
            Some(t) => t
                .iter_nonzero()
                .filter(|((e, m), _)| m.max(e) <= &x && -e == y)
                .map(|(_, p)| p)
                .sum(),
        }
    }

    /// `A-_k(x, y)`: same for the negated walk.
    pub fn a_minus(&self, x: i64, y: i64) -> f64 {
        match &self.joint_rev {
            None => {
                if x >= 0 && y == 0 {
                    1.0
                } else {
                    0.0
                }
            }
            Some(t) => t
                .iter_nonzero()
                .filter(|((e, m), _)| m.max(e) <= &x && -e == y)
                .map(|(_, p)| p)
                .sum(),
        }
    }

    /// Total `A+` mass at `x = +inf` per endpoint; sums to 1.
    pub fn a_plus_endpoint_pmf(&self) -> Vec<(i64, f64)> {
        match &self.joint_fwd {
            None => vec![(0, 1.0)],
            Some(t) => {
                let mut acc = std::collections::BTreeMap::new();
                for ((e, _), p) in t.iter_nonzero() {
                    *acc.entry(-e).or_insert(0.0) += p;
                }
                acc.into_iter().collect()
            }
        }
    }
}

/// True-maximum pmf of `max(S_1..S_k)`, `k >= 1`.
fn max_pmf(steps: &StepPmf, k: usize) -> Tab1 {
    let lo = (k as i64) * steps.min_offset().min(0);
    let hi = (k as i64) * steps.max_offset().max(0);
    // State: (current value, running true max). Initialize after one step.
    let mut cur = Tab2::zeros(lo, hi, lo, hi);
    for (y, p) in steps.iter() {
        cur.add(y, y, p);
    }
    for _ in 1..k {
        let mut next = Tab2::zeros(lo, hi, lo, hi);
        for ((v, m), mass) in cur.iter_nonzero() {
            for (y, p) in steps.iter() {
                let v2 = v + y;
                next.add(v2, m.max(v2), mass * p);
            }
        }
        cur = next;
    }
    let mut out = Tab1::zeros(lo, hi);
    for ((_, m), mass) in cur.iter_nonzero() {
        out.add(m, mass);
    }
    out
}

/// Strict-unique-argmax atoms: `P(S_i < S_k for all i != k, 0 <= i <= k+s,
/// S_k = y)`, as a function of `y >= 1`.
fn b_atoms(steps: &StepPmf, k: usize, s: usize) -> Vec<(i64, f64)> {
    let tail = if s == 0 {
        1.0
    } else {
        stay_below_runs(&[(steps, s)], -1)
    };
    if k == 0 {
        // The maximum sits at the origin with S_0 = 0.
        return vec![(0, tail)];
    }
    let head = prev_max_end_runs(&[(steps, k)], None);
    let mut acc = std::collections::BTreeMap::new();
    for ((e, m), p) in head.iter_nonzero() {
        if e > m {
            *acc.entry(e).or_insert(0.0) += p * tail;
        }
    }
    acc.into_iter().collect()
}

/// Build all tabulations for `H`-increments.
pub fn excursion_tables(h: &StepPmf, k: usize, s: usize) -> ExcursionTables {
    let neg = h.negated();
    let (max_pmf_fwd, joint_fwd, max_pmf_rev, joint_rev) = if k == 0 {
        (None, None, None, None)
    } else {
        (
            Some(max_pmf(h, k)),
            Some(prev_max_end_runs(&[(h, k)], None)),
            Some(max_pmf(&neg, k)),
            Some(prev_max_end_runs(&[(&neg, k)], None)),
        )
    };
    ExcursionTables {
        k,
        s,
        max_pmf_fwd,
        max_pmf_rev,
        b_plus: b_atoms(h, k, s),
        b_minus: b_atoms(&neg, k, s),
        joint_fwd,
        joint_rev,
    }
}
