//! Large-sample distribution of the interval-estimation error and the
//! lower bounds available for local estimators.

use super::dp::{prev_max_end_runs, stay_below_runs, StepPmf, Tab1};
use super::LatticePair;
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Which endpoint of the change interval the offset refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    A,
    B,
}

/// A truncated evaluation together with the `M` vs `2M` disagreement,
/// the practical convergence certificate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bracketed {
    pub value: f64,
    pub bracket: f64,
}

/// Per-step tail probabilities of a walk: `P(S_m > 0)`, `P(S_m = 0)`,
/// `P(S_m < 0)` for `m = 1..=horizon`.
fn walk_sign_probs(steps: &StepPmf, horizon: usize) -> Vec<(f64, f64, f64)> {
    let h = horizon as i64;
    let lo = h * steps.min_offset().min(0);
    let hi = h * steps.max_offset().max(0);
    let mut cur = Tab1::zeros(lo, hi);
    cur.add(0, 1.0);
    let mut out = Vec::with_capacity(horizon);
    for _ in 0..horizon {
        let mut next = Tab1::zeros(lo, hi);
        for (v, mass) in cur.iter_nonzero() {
            for (y, p) in steps.iter() {
                next.add(v + y, mass * p);
            }
        }
        cur = next;
        let mut pos = 0.0;
        let mut zero = 0.0;
        let mut neg = 0.0;
        for (v, mass) in cur.iter_nonzero() {
            match v.signum() {
                1 => pos += mass,
                0 => zero += mass,
                _ => neg += mass,
            }
        }
        out.push((pos, zero, neg));
    }
    out
}

/// The atom of the limiting estimation-error law at offset zero,
/// `exp(-sum_m m^{-1} (P_F(S_m > 0) + P_G(S_m <= 0)))`, truncated at
/// `horizon`.
///
/// The `F`-term is strict (`> 0`) and the `G`-term non-strict: on a
/// lattice this matches the interval MLE's tie-breaking (earliest
/// argmax), whose error law the atom describes; for continuous pairs
/// the tie events are null and the distinction vanishes.
pub fn spitzer_atom(lp: &LatticePair, horizon: usize) -> f64 {
    let f_probs = walk_sign_probs(lp.f_steps(), horizon);
    let g_probs = walk_sign_probs(lp.g_steps(), horizon);
    let mut series = 0.0;
    for m in 1..=horizon {
        let (f_pos, _, _) = f_probs[m - 1];
        let (g_pos, _, _) = g_probs[m - 1];
        series += (f_pos + (1.0 - g_pos)) / m as f64;
    }
    (-series).exp()
}

/// Strict-maximum cdf table `R(y) = P(max(0, S_1..S_M) < y)` for
/// `y >= 1`, returned as a closure-friendly vector indexed from `y = 1`.
fn r_strict_table(steps: &StepPmf, horizon: usize, y_hi: i64) -> Vec<f64> {
    let tab = prev_max_end_runs(&[(steps, horizon)], None);
    // pmf of the 0-inclusive maximum.
    let mut max_pmf = std::collections::BTreeMap::new();
    for ((e, m), p) in tab.iter_nonzero() {
        *max_pmf.entry(m.max(e)).or_insert(0.0) += p;
    }
    let mut out = Vec::with_capacity(y_hi as usize);
    let mut acc = 0.0;
    let mut entries = max_pmf.into_iter().peekable();
    for y in 1..=y_hi {
        while let Some(&(m, p)) = entries.peek() {
            if m < y {
                acc += p;
                entries.next();
            } else {
                break;
            }
        }
        out.push(acc);
    }
    out
}

/// Strict-unique-argmax atoms `B_{k,M}(y)` of a walk.
fn b_atoms(steps: &StepPmf, k: usize, horizon: usize) -> Vec<(i64, f64)> {
    let tail = if horizon == 0 {
        1.0
    } else {
        stay_below_runs(&[(steps, horizon)], -1)
    };
    let head = prev_max_end_runs(&[(steps, k)], None);
    let mut acc = std::collections::BTreeMap::new();
    for ((e, m), p) in head.iter_nonzero() {
        if e > m {
            *acc.entry(e).or_insert(0.0) += p * tail;
        }
    }
    acc.into_iter().collect()
}

fn offset_value(lp: &LatticePair, offset: i64, side: Side, horizon: usize) -> f64 {
    debug_assert!(offset != 0);
    let (b_steps, r_steps, k) = match (side, offset > 0) {
        // Overshoot past `b` (or undershoot before `a`): excursion of the
        // F-walk against the reversed-negated G-walk.
        (Side::B, true) => (lp.f_steps().clone(), lp.g_steps().negated(), offset),
        (Side::A, false) => (lp.f_steps().clone(), lp.g_steps().negated(), -offset),
        // Offsets inside the change segment: roles exchanged.
        (Side::B, false) => (lp.g_steps().negated(), lp.f_steps().clone(), -offset),
        (Side::A, true) => (lp.g_steps().negated(), lp.f_steps().clone(), offset),
    };
    let atoms = b_atoms(&b_steps, k as usize, horizon);
    let y_hi = atoms.last().map(|(y, _)| *y).unwrap_or(0);
    if y_hi < 1 {
        return 0.0;
    }
    let r = r_strict_table(&r_steps, horizon, y_hi);
    atoms
        .iter()
        .filter(|(y, _)| *y >= 1)
        .map(|(y, p)| p * r[(*y - 1) as usize])
        .sum()
}

/// Limiting pmf of the estimation error `offset` at the chosen endpoint,
/// evaluated at truncation `horizon` with an `M` vs `2M` bracket.
pub fn asymptotic_mle_pmf(
    lp: &LatticePair,
    offset: i64,
    side: Side,
    horizon: usize,
) -> Result<Bracketed> {
    if horizon == 0 {
        return Err(Error::invalid_input("horizon must be at least 1"));
    }
    let eval = |m: usize| {
        if offset == 0 {
            spitzer_atom(lp, m)
        } else {
            offset_value(lp, offset, side, m)
        }
    };
    let at_m = eval(horizon);
    let at_2m = eval(2 * horizon);
    Ok(Bracketed {
        value: at_m,
        bracket: (at_m - at_2m).abs(),
    })
}

/// Smallest value of the moment generating function of the steps over
/// nonnegative twists; `< 1` exactly when the drift is negative.
fn chernoff_rho(steps: &StepPmf) -> f64 {
    let mgf = |lam: f64| -> f64 { steps.iter().map(|(y, p)| p * (lam * y as f64).exp()).sum() };
    if steps.drift() >= 0.0 {
        return 1.0;
    }
    // Bracket the minimizer, then golden-section.
    let mut hi = 1.0;
    while mgf(hi * 2.0) < mgf(hi) && hi < 1e6 {
        hi *= 2.0;
    }
    let (mut a, mut b) = (0.0, hi * 2.0);
    let phi = 0.5 * (5.0f64.sqrt() - 1.0);
    let mut c = b - phi * (b - a);
    let mut d = a + phi * (b - a);
    for _ in 0..200 {
        if mgf(c) < mgf(d) {
            b = d;
        } else {
            a = c;
        }
        c = b - phi * (b - a);
        d = a + phi * (b - a);
    }
    mgf(0.5 * (a + b)).min(1.0)
}

/// Geometric tail bound `sum_{m > horizon} rho^m = rho^{M+1}/(1-rho)`.
fn geometric_tail(rho: f64, horizon: usize) -> f64 {
    if rho >= 1.0 {
        return f64::INFINITY;
    }
    rho.powi(horizon as i32 + 1) / (1.0 - rho)
}

/// Guaranteed lower bound on the probability that a local likelihood
/// estimate lands within `offsets` of the true endpoint, uniformly over
/// anchor points inside the change interval, discounted by the
/// probability `alpha` that a data-driven anchor misses the interval.
///
/// Truncation at `horizon` is made conservative: the truncated factors
/// overshoot their limits, so each is discounted by a Chernoff bound on
/// the mass the missing tail could remove.
pub fn lle_bound(
    lp: &LatticePair,
    offsets: std::ops::RangeInclusive<i64>,
    side: Side,
    alpha: f64,
    horizon: usize,
) -> Result<f64> {
    if !(0.0..1.0).contains(&alpha) {
        return Err(Error::invalid_input("alpha must be in [0, 1)"));
    }
    if horizon == 0 {
        return Err(Error::invalid_input("horizon must be at least 1"));
    }
    let rho_f = chernoff_rho(lp.f_steps());
    let rho_g_rev = chernoff_rho(&lp.g_steps().negated());
    let mut total = 0.0;
    for offset in offsets {
        if offset == 0 {
            let f_probs = walk_sign_probs(lp.f_steps(), horizon);
            let g_probs = walk_sign_probs(lp.g_steps(), horizon);
            let mut series = 0.0;
            for m in 1..=horizon {
                series += (f_probs[m - 1].0 + (1.0 - g_probs[m - 1].0)) / m as f64;
            }
            let tail = (geometric_tail(rho_f, horizon) + geometric_tail(rho_g_rev, horizon))
                / (horizon as f64 + 1.0);
            total += (-(series + tail)).exp();
        } else {
            let (b_steps, r_steps, k) = match (side, offset > 0) {
                (Side::B, true) => (lp.f_steps().clone(), lp.g_steps().negated(), offset),
                (Side::A, false) => (lp.f_steps().clone(), lp.g_steps().negated(), -offset),
                (Side::B, false) => (lp.g_steps().negated(), lp.f_steps().clone(), -offset),
                (Side::A, true) => (lp.g_steps().negated(), lp.f_steps().clone(), offset),
            };
            let eps_b = geometric_tail(chernoff_rho(&b_steps), horizon);
            let eps_r = geometric_tail(chernoff_rho(&r_steps), horizon);
            let atoms = b_atoms(&b_steps, k as usize, horizon);
            let y_hi = atoms.last().map(|(y, _)| *y).unwrap_or(0);
            if y_hi < 1 {
                continue;
            }
            let r = r_strict_table(&r_steps, horizon, y_hi);
            let val: f64 = atoms
                .iter()
                .filter(|(y, _)| *y >= 1)
                .map(|(y, p)| p * (r[(*y - 1) as usize] - eps_r).max(0.0))
                .sum();
            total += (val - eps_b).max(0.0);
        }
    }
    Ok((total - alpha).clamp(0.0, 1.0))
}
