//! Exact joint probability that `(a + l, b + r)` is a pre-likelihood
//! estimator pair, for data with one true change interval `(a, b]`.
//!
//! The event factorizes over the three independent blocks the candidate
//! pair cuts the data into:
//!
//! * left block `(0, A]`, read backwards: every suffix sum is `<= 0`
//!   (non-strict; a tie leaves the kernel point at `A` in place);
//! * middle block `(A, B]`: the walk stays strictly positive and ends
//!   strictly above everything before it;
//! * right block `(B, n]`: every prefix sum is `<= 0` (non-strict).
//!
//! Thirteen regimes of `(l, r)` give thirteen distinct compositions of
//! `F`- and `G`-runs inside the three blocks; the dispatch below carries
//! one arm per regime, with an exhaustiveness panic as the safety net.

use super::dp::{interior_strict, stay_below_runs, StepPmf};
use super::LatticePair;
use crate::error::{Error, Result};

/// The thirteen regimes of the offset plane.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PleCase {
    Case0,
    Case1,
    Case2,
    Case3,
    Case4,
    Case5,
    Case6,
    Case7,
    Case8,
    Case9,
    Case10,
    Case11,
    Case12,
}

/// Classify `(l, r)` given the true change length `d0 = b - a`.
/// Panics when the offsets fall in no regime, which the sign partition
/// rules out for feasible inputs.
pub fn ple_case(l: i64, r: i64, d0: i64) -> PleCase {
    use PleCase::*;
    if r < -d0 {
        return Case1;
    }
    if r == -d0 {
        return Case2;
    }
    if r < 0 {
        return match l.signum() {
            -1 => Case3,
            0 => Case6,
            1 => Case8,
            _ => unreachable!(),
        };
    }
    if r == 0 {
        return match l.signum() {
            -1 => Case4,
            0 => Case0,
            1 => Case9,
            _ => unreachable!(),
        };
    }
    // r > 0
    if l < 0 {
        Case5
    } else if l == 0 {
        Case7
    } else if l < d0 {
        Case10
    } else if l == d0 {
        Case11
    } else if l > d0 {
        Case12
    } else {
        unreachable!("offset plane not partitioned at l={l}, r={r}, d0={d0}")
    }
}

/// `P(there is a PLE pair exactly at (a + l, b + r))` for the change
/// scenario `(a, b]` in a sample of length `n`, on the exact lattice.
///
/// Preconditions: `0 <= a + l`, `b + r <= n`, `a + l <= b + r`. The
/// degenerate `a + l = b + r` keeps the empty middle factor at 1 and
/// reduces to the excursion product of the two outer blocks.
pub fn ple_joint_probability(
    lp: &LatticePair,
    l: i64,
    r: i64,
    a: usize,
    b: usize,
    n: usize,
) -> Result<f64> {
    if a > b || b > n {
        return Err(Error::invalid_input(
            "change interval must satisfy a <= b <= n",
        ));
    }
    let (a_i, b_i, n_i) = (a as i64, b as i64, n as i64);
    let cap_a = a_i + l;
    let cap_b = b_i + r;
    if cap_a < 0 || cap_b > n_i || cap_a > cap_b {
        return Err(Error::invalid_input(format!(
            "infeasible offsets: need 0 <= a+l <= b+r <= n, got A={cap_a}, B={cap_b}, n={n_i}"
        )));
    }

    let f = lp.f_steps();
    let g = lp.g_steps();
    let d0 = b_i - a_i;
    let d = (cap_b - cap_a) as usize;

    // Run lists per case: left block reversed, middle, right. Lengths in
    // data units; empty runs are dropped by the DP primitives.
    type RunVec<'a> = Vec<(&'a StepPmf, usize)>;
    let (left, mid, right): (RunVec, RunVec, RunVec) = match ple_case(l, r, d0) {
        PleCase::Case0 => (vec![(f, a)], vec![(g, d)], vec![(f, n - b)]),
        PleCase::Case1 => (
            vec![(f, cap_a as usize)],
            vec![(f, d)],
            vec![
                (f, (a_i - cap_b) as usize),
                (g, (b_i - a_i) as usize),
                (f, n - b),
            ],
        ),
        PleCase::Case2 => (
            vec![(f, cap_a as usize)],
            vec![(f, d)],
            vec![(g, (b_i - a_i) as usize), (f, n - b)],
        ),
        PleCase::Case3 => (
            vec![(f, cap_a as usize)],
            vec![(f, (-l) as usize), (g, (cap_b - a_i) as usize)],
            vec![(g, (-r) as usize), (f, n - b)],
        ),
        PleCase::Case4 => (
            vec![(f, cap_a as usize)],
            vec![(f, (-l) as usize), (g, (b_i - a_i) as usize)],
            vec![(f, n - b)],
        ),
        PleCase::Case5 => (
            vec![(f, cap_a as usize)],
            vec![
                (f, (-l) as usize),
                (g, (b_i - a_i) as usize),
                (f, r as usize),
            ],
            vec![(f, (n_i - cap_b) as usize)],
        ),
        PleCase::Case6 => (
            vec![(f, a)],
            vec![(g, d)],
            vec![(g, (-r) as usize), (f, n - b)],
        ),
        PleCase::Case7 => (
            vec![(f, a)],
            vec![(g, (b_i - a_i) as usize), (f, r as usize)],
            vec![(f, (n_i - cap_b) as usize)],
        ),
        PleCase::Case8 => (
            vec![(g, l as usize), (f, a)],
            vec![(g, d)],
            vec![(g, (-r) as usize), (f, n - b)],
        ),
        PleCase::Case9 => (
            vec![(g, l as usize), (f, a)],
            vec![(g, d)],
            vec![(f, n - b)],
        ),
        PleCase::Case10 => (
            vec![(g, l as usize), (f, a)],
            vec![(g, (b_i - cap_a) as usize), (f, r as usize)],
            vec![(f, (n_i - cap_b) as usize)],
        ),
        PleCase::Case11 => (
            vec![(g, (b_i - a_i) as usize), (f, a)],
            vec![(f, r as usize)],
            vec![(f, (n_i - cap_b) as usize)],
        ),
        PleCase::Case12 => (
            vec![
                (f, (cap_a - b_i) as usize),
                (g, (b_i - a_i) as usize),
                (f, a),
            ],
            vec![(f, d)],
            vec![(f, (n_i - cap_b) as usize)],
        ),
    };

    let left_p = stay_below_runs(&left, 0);
    let mid_p = interior_strict(&mid);
    let right_p = stay_below_runs(&right, 0);
    Ok(left_p * mid_p * right_p)
}
