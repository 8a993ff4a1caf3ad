//! Multiple transient changes: the known-K iterative interval MLE, the
//! unknown-K self-correcting sequential detector with familywise error
//! control, and scoring of detection reports against ground truth.

use crate::error::{Error, Result};
use crate::model::{ChangeScenario, DistributionPair};
use crate::single::{cusum_moment_exact, cusum_moment_monte_carlo, ThresholdMethod};
use crate::walks::{renewed_cusum, Direction, Hypothesis, WalkTrace, EPS_ZERO};
use serde::{Deserialize, Serialize};

/// Ordered disjoint estimated change intervals with their total
/// likelihood gain. `saturated` marks a run that stopped early because
/// no candidate with positive gain remained.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiIntervalEstimate {
    pub intervals: Vec<(usize, usize)>,
    pub total_gain: f64,
    pub saturated: bool,
}

/// Best growth interval of `s` within `[lo, hi]`: earliest maximum of
/// the local CUSUM, then the last local zero before it.
fn best_growth(s: &[f64], lo: usize, hi: usize, sign: f64) -> Option<(usize, usize, f64)> {
    debug_assert!(lo <= hi && hi < s.len());
    if hi == lo {
        return None;
    }
    let mut w = 0.0f64;
    let mut ws = Vec::with_capacity(hi - lo + 1);
    ws.push(0.0);
    for t in lo + 1..=hi {
        let y = sign * (s[t] - s[t - 1]);
        w = f64::max(0.0, w + y);
        ws.push(w);
    }
    let mut b_local = 0usize;
    let mut best = 0.0f64;
    for (t, &v) in ws.iter().enumerate() {
        if v > best + EPS_ZERO {
            b_local = t;
            best = v;
        }
    }
    if best <= EPS_ZERO {
        return None;
    }
    let a_local = (0..=b_local).rev().find(|&t| ws[t] <= EPS_ZERO).unwrap();
    Some((lo + a_local, lo + b_local, best))
}

#[derive(Debug, Clone, Copy)]
enum CandidateKind {
    Gap,
    Split { host: usize },
}

/// Iterative interval MLE for a known number of changes `k`.
///
/// Each round scores the best growth interval in every gap (including
/// the two boundary gaps) and the best drop interval inside every
/// current interval, then applies the globally best candidate: a gap
/// winner is inserted, an interior drop splits its host in two. Ties go
/// to the leftmost candidate, then the shortest.
pub fn mle_k_intervals(walk: &WalkTrace, k: usize) -> Result<MultiIntervalEstimate> {
    if k == 0 {
        return Err(Error::invalid_input("k must be at least 1"));
    }
    let s = walk.values();
    let n = walk.len();
    let mut intervals: Vec<(usize, usize)> = Vec::new();
    let mut saturated = false;

    while intervals.len() < k {
        let mut best: Option<(usize, usize, f64, CandidateKind)> = None;
        let mut consider = |cand: Option<(usize, usize, f64)>, kind: CandidateKind| {
            let Some((a, b, gain)) = cand else { return };
            let better = match &best {
                None => true,
                Some((ba, bb, bg, _)) => {
                    gain > bg + EPS_ZERO
                        || ((gain - bg).abs() <= EPS_ZERO
                            && (a < *ba || (a == *ba && b - a < bb - ba)))
                }
            };
            if better {
                best = Some((a, b, gain, kind));
            }
        };

        let mut prev_end = 0usize;
        for (i, &(ia, ib)) in intervals.iter().enumerate() {
            consider(best_growth(s, prev_end, ia, 1.0), CandidateKind::Gap);
            consider(
                best_growth(s, ia, ib, -1.0),
                CandidateKind::Split { host: i },
            );
            prev_end = ib;
        }
        consider(best_growth(s, prev_end, n, 1.0), CandidateKind::Gap);

        match best {
            None => {
                saturated = true;
                break;
            }
            Some((a, b, _, CandidateKind::Gap)) => {
                let pos = intervals.partition_point(|&(ia, _)| ia < a);
                intervals.insert(pos, (a, b));
            }
            Some((c, d, _, CandidateKind::Split { host })) => {
                let (ia, ib) = intervals[host];
                intervals[host] = (ia, c);
                intervals.insert(host + 1, (d, ib));
            }
        }
    }

    debug_assert!(intervals.iter().all(|&(a, b)| a < b));
    debug_assert!(intervals.windows(2).all(|w| w[0].1 < w[1].0));
    let total_gain = intervals.iter().map(|&(a, b)| s[b] - s[a]).sum();
    Ok(MultiIntervalEstimate {
        intervals,
        total_gain,
        saturated,
    })
}

/// Thresholds for the sequential detector: `h_alpha` from
/// `E_F[e^{W_n}]` (disorder side) and `h_beta_tilde` from
/// `E_G[e^{W~_n}]` of the reversed-LLR CUSUM (readjustment side).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectorConfig {
    pub alpha: f64,
    pub beta: f64,
    pub h_alpha: f64,
    pub h_beta_tilde: f64,
    pub n: usize,
    pub moment_f: f64,
    pub moment_g: f64,
}

#[allow(clippy::too_many_arguments)]
pub fn familywise_thresholds(
    pair: &DistributionPair,
    n: usize,
    alpha: f64,
    beta: f64,
    method: ThresholdMethod,
    seed: u64,
    replicates: usize,
    conservative: bool,
) -> Result<DetectorConfig> {
    if !(alpha > 0.0 && alpha < 1.0) || !(beta > 0.0 && beta < 1.0) {
        return Err(Error::invalid_input("alpha and beta must be in (0, 1)"));
    }
    let (moment_f, moment_g, h_alpha, h_beta_tilde) = match method {
        ThresholdMethod::ExactLattice => {
            let mf = cusum_moment_exact(pair, n, Hypothesis::Base, false)?;
            let mg = cusum_moment_exact(pair, n, Hypothesis::Change, true)?;
            (mf, mg, (mf / alpha).ln(), (mg / beta).ln())
        }
        ThresholdMethod::MonteCarlo => {
            let (mf, se_f) =
                cusum_moment_monte_carlo(pair, n, Hypothesis::Base, false, seed, replicates)?;
            let (mg, se_g) = cusum_moment_monte_carlo(
                pair,
                n,
                Hypothesis::Change,
                true,
                seed.wrapping_add(1),
                replicates,
            )?;
            let (inf_f, inf_g) = if conservative {
                (mf + 2.0 * se_f, mg + 2.0 * se_g)
            } else {
                (mf, mg)
            };
            (mf, mg, (inf_f / alpha).ln(), (inf_g / beta).ln())
        }
    };
    Ok(DetectorConfig {
        alpha,
        beta,
        h_alpha,
        h_beta_tilde,
        n,
        moment_f,
        moment_g,
    })
}

/// One detected disorder: the stopping times and the change-point
/// estimates. `tau_tilde`/`b_hat` stay empty when the readjustment was
/// still pending at the end of the data.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DetectionEvent {
    pub k: usize,
    pub tau: usize,
    pub a_hat: usize,
    pub tau_tilde: Option<usize>,
    pub b_hat: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DetectionReport {
    pub events: Vec<DetectionEvent>,
    pub k_hat: usize,
}

/// The self-correcting sequential scheme: alternate a forward CUSUM
/// (renewed at the last readjustment, threshold `h_alpha`) and a
/// reverse-direction CUSUM (renewed at the last disorder, threshold
/// `h_beta_tilde`); each change-point estimate is the last zero of the
/// renewed process before its stopping time.
pub fn sequential_detect(walk: &WalkTrace, config: &DetectorConfig) -> DetectionReport {
    let mut events = Vec::new();
    let mut origin = 0usize;
    let mut k = 1usize;
    loop {
        let fwd = renewed_cusum(walk, origin, Direction::Forward).expect("origin in range");
        let Some(local_tau) = first_crossing(fwd.values(), config.h_alpha) else {
            break;
        };
        let tau = origin + local_tau;
        let a_hat = origin + last_zero_before(fwd.values(), local_tau);

        let rev = renewed_cusum(walk, tau, Direction::Reverse).expect("tau in range");
        match first_crossing(rev.values(), config.h_beta_tilde) {
            None => {
                events.push(DetectionEvent {
                    k,
                    tau,
                    a_hat,
                    tau_tilde: None,
                    b_hat: None,
                });
                break;
            }
            Some(local_tt) => {
                let tau_tilde = tau + local_tt;
                let b_hat = tau + last_zero_before(rev.values(), local_tt);
                events.push(DetectionEvent {
                    k,
                    tau,
                    a_hat,
                    tau_tilde: Some(tau_tilde),
                    b_hat: Some(b_hat),
                });
                origin = tau_tilde;
                k += 1;
            }
        }
    }
    DetectionReport {
        k_hat: events.len(),
        events,
    }
}

fn first_crossing(values: &[f64], h: f64) -> Option<usize> {
    values
        .iter()
        .enumerate()
        .skip(1)
        .find(|(_, w)| **w >= h)
        .map(|(t, _)| t)
}

fn last_zero_before(values: &[f64], t: usize) -> usize {
    (0..t).rev().find(|&i| values[i] <= EPS_ZERO).unwrap_or(0)
}

fn closed_intersects(a: (usize, usize), b: (usize, usize)) -> bool {
    a.0 <= b.1 && b.0 <= a.1
}

/// True when some estimated change interval (a pending one runs to `n`)
/// intersects no true change interval. Closed-interval semantics:
/// endpoint contact counts as intersection.
pub fn false_alarm_indicator(report: &DetectionReport, truth: &ChangeScenario) -> bool {
    report.events.iter().any(|ev| {
        let est = (ev.a_hat, ev.b_hat.unwrap_or(truth.n));
        !truth
            .intervals
            .iter()
            .any(|&(a, b)| closed_intersects(est, (a, b)))
    })
}

/// True when some estimated in-control gap `[b_hat_k, a_hat_{k+1}]`
/// intersects no true in-control gap. True gaps include the boundary
/// segments `[0, a_1]` and `[b_K, n]`.
pub fn false_readjustment_indicator(report: &DetectionReport, truth: &ChangeScenario) -> bool {
    let mut true_gaps = Vec::with_capacity(truth.intervals.len() + 1);
    let mut prev = 0usize;
    for &(a, b) in &truth.intervals {
        true_gaps.push((prev, a));
        prev = b;
    }
    true_gaps.push((prev, truth.n));

    let mut est_gaps = Vec::new();
    for pair in report.events.windows(2) {
        if let Some(b_hat) = pair[0].b_hat {
            est_gaps.push((b_hat, pair[1].a_hat));
        }
    }
    est_gaps
        .iter()
        .any(|&gap| !true_gaps.iter().any(|&tg| closed_intersects(gap, tg)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{sample_scenario, DensitySpec};
    use crate::walks::random_walk;
    use rand::Rng;

    fn walk(incs: &[f64]) -> WalkTrace {
        WalkTrace::from_increments(incs.to_vec())
    }

    fn bern_pair() -> DistributionPair {
        DistributionPair::new(
            DensitySpec::Bernoulli { p: 0.2 },
            DensitySpec::Bernoulli { p: 0.8 },
        )
        .unwrap()
    }

    /// Brute-force maximum of the total gain over at most `k` ordered
    /// strictly separated intervals.
    fn brute_k_gain(s: &[f64], k: usize) -> f64 {
        let neg = f64::NEG_INFINITY;
        let mut dp_out = vec![neg; k + 1];
        let mut dp_in = vec![neg; k + 1];
        dp_out[0] = 0.0;
        for &v in s {
            // Close first (uses opens strictly before this index), then
            // open from states closed strictly before this index.
            let closed_now: Vec<f64> = (0..=k)
                .map(|j| {
                    if j == 0 {
                        dp_out[0]
                    } else {
                        dp_out[j].max(dp_in[j - 1] + v)
                    }
                })
                .collect();
            for j in 0..=k {
                dp_in[j] = dp_in[j].max(dp_out[j] - v);
            }
            dp_out = closed_now;
        }
        dp_out.iter().cloned().fold(0.0, f64::max)
    }

    #[test]
    fn k_one_equals_single_mle() {
        let w = walk(&[-1.0, 2.0, 1.0, -3.0, 2.0]);
        let est = mle_k_intervals(&w, 1).unwrap();
        assert_eq!(est.intervals, vec![(1, 3)]);
        assert!((est.total_gain - 3.0).abs() < 1e-12);

        let single = crate::single::mle_interval(&w);
        assert_eq!(est.intervals[0], (single.a_hat, single.b_hat));
    }

    #[test]
    fn k_two_example() {
        let w = walk(&[-1.0, 2.0, 1.0, -3.0, 2.0]);
        let est = mle_k_intervals(&w, 2).unwrap();
        assert_eq!(est.intervals, vec![(1, 3), (4, 5)]);
        assert!((est.total_gain - 5.0).abs() < 1e-12);
        assert!(!est.saturated);
    }

    #[test]
    fn splitting_happens_when_the_drop_dominates() {
        // Growth 0..4 of +4, an interior drop of 3, then growth of 4
        // again; with K = 2 the interior drop is the best second move
        // and must split the first interval.
        let w = walk(&[1.0, 1.0, 1.0, 1.0, -3.0, 1.0, 1.0, 1.0, 1.0]);
        let one = mle_k_intervals(&w, 1).unwrap();
        assert_eq!(one.intervals, vec![(0, 9)]);
        let two = mle_k_intervals(&w, 2).unwrap();
        assert_eq!(two.intervals, vec![(0, 4), (5, 9)]);
        assert!((two.total_gain - 8.0).abs() < 1e-12);
    }

    #[test]
    fn saturation_returns_fewer_intervals() {
        let w = walk(&[1.0, 1.0]);
        let est = mle_k_intervals(&w, 3).unwrap();
        assert_eq!(est.intervals, vec![(0, 2)]);
        assert!(est.saturated);

        let none = mle_k_intervals(&walk(&[-1.0, -1.0]), 2).unwrap();
        assert!(none.intervals.is_empty());
        assert!(none.saturated);
        assert_eq!(none.total_gain, 0.0);
    }

    #[test]
    fn iterative_matches_brute_force_exhaustively() {
        // All bernoulli walks to n = 10, K <= 3 (acceptance pushes to 14).
        let pair = bern_pair();
        for n in 1..=10usize {
            for bits in 0u32..(1 << n) {
                let xs: Vec<f64> = (0..n)
                    .map(|i| if bits >> i & 1 == 1 { 1.0 } else { 0.0 })
                    .collect();
                let w = random_walk(&pair, &xs).unwrap();
                for k in 1..=3usize {
                    let est = mle_k_intervals(&w, k).unwrap();
                    let brute = brute_k_gain(w.values(), k);
                    assert!(
                        (est.total_gain - brute).abs() < 1e-9,
                        "n={n} bits={bits:b} k={k}: {} vs {brute}",
                        est.total_gain
                    );
                }
            }
        }
    }

    #[test]
    fn total_gain_nondecreasing_in_k() {
        let mut rng = crate::rng::seeded_rng(41);
        for _ in 0..200 {
            let n = rng.random_range(2..=50);
            let incs: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let w = walk(&incs);
            let mut prev = 0.0;
            for k in 1..=5 {
                let g = mle_k_intervals(&w, k).unwrap().total_gain;
                assert!(g >= prev - 1e-9);
                prev = g;
            }
        }
    }

    #[test]
    fn familywise_thresholds_examples() {
        let pair = bern_pair();
        // Symmetric pair: the two moments and thresholds coincide.
        let cfg = familywise_thresholds(
            &pair,
            7,
            0.05,
            0.05,
            ThresholdMethod::ExactLattice,
            0,
            0,
            false,
        )
        .unwrap();
        assert!((cfg.h_alpha - cfg.h_beta_tilde).abs() < 1e-12);

        // n = 0: h = -log alpha on both sides.
        let cfg0 = familywise_thresholds(
            &pair,
            0,
            0.05,
            0.1,
            ThresholdMethod::ExactLattice,
            0,
            0,
            false,
        )
        .unwrap();
        assert!((cfg0.h_alpha - (1.0f64 / 0.05).ln()).abs() < 1e-12);
        assert!((cfg0.h_beta_tilde - (1.0f64 / 0.1).ln()).abs() < 1e-12);

        // One step: E_G e^{W~_1} = 0.8 + 0.2 * 4 = 1.6.
        let cfg1 = familywise_thresholds(
            &pair,
            1,
            0.05,
            0.05,
            ThresholdMethod::ExactLattice,
            0,
            0,
            false,
        )
        .unwrap();
        assert!((cfg1.moment_g - 1.6).abs() < 1e-12);
        assert!((cfg1.h_beta_tilde - 32.0f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn sequential_detect_hand_example() {
        let w = walk(&[-1.0, 2.0, 1.0, -3.0, 2.0]);
        let config = DetectorConfig {
            alpha: 0.05,
            beta: 0.05,
            h_alpha: 2.5,
            h_beta_tilde: 2.5,
            n: 5,
            moment_f: 1.0,
            moment_g: 1.0,
        };
        let report = sequential_detect(&w, &config);
        assert_eq!(report.k_hat, 1);
        let ev = &report.events[0];
        assert_eq!((ev.k, ev.tau, ev.a_hat), (1, 3, 1));
        assert_eq!(ev.tau_tilde, Some(4));
        assert_eq!(ev.b_hat, Some(3));
    }

    #[test]
    fn no_detection_on_quiet_data() {
        let w = walk(&[-0.2, 0.1, -0.3]);
        let config = DetectorConfig {
            alpha: 0.05,
            beta: 0.05,
            h_alpha: 100.0,
            h_beta_tilde: 100.0,
            n: 3,
            moment_f: 1.0,
            moment_g: 1.0,
        };
        let report = sequential_detect(&w, &config);
        assert_eq!(report.k_hat, 0);
        assert!(report.events.is_empty());
    }

    #[test]
    fn report_ordering_invariants_on_simulated_scenarios() {
        let pair = DistributionPair::new(
            DensitySpec::Normal { mean: 0.0, sd: 1.0 },
            DensitySpec::Normal { mean: 1.0, sd: 1.0 },
        )
        .unwrap();
        let mut rng = crate::rng::seeded_rng(55);
        for rep in 0..300 {
            let n = rng.random_range(20..=160);
            let mut intervals = Vec::new();
            let mut cursor = 0usize;
            while cursor + 4 < n && rng.random::<f64>() < 0.6 {
                let a = cursor + rng.random_range(1..=4);
                let b = (a + rng.random_range(2..=20)).min(n);
                if a >= b || b > n {
                    break;
                }
                intervals.push((a, b));
                cursor = b + 1;
            }
            let scenario = ChangeScenario::new(n, intervals).unwrap();
            let xs = sample_scenario(&scenario, &pair, 9000 + rep).unwrap();
            let w = random_walk(&pair, &xs).unwrap();
            let config = DetectorConfig {
                alpha: 0.05,
                beta: 0.05,
                h_alpha: 3.0,
                h_beta_tilde: 3.0,
                n,
                moment_f: 1.0,
                moment_g: 1.0,
            };
            let report = sequential_detect(&w, &config);
            let mut last_time = 0usize;
            for (i, ev) in report.events.iter().enumerate() {
                assert_eq!(ev.k, i + 1);
                assert!(ev.a_hat < ev.tau);
                assert!(ev.tau > last_time || (i == 0 && ev.tau >= 1));
                if let (Some(tt), Some(bh)) = (ev.tau_tilde, ev.b_hat) {
                    assert!(ev.tau <= bh && bh < tt, "tau <= b_hat < tau_tilde");
                    assert!(tt > ev.tau);
                    last_time = tt;
                } else {
                    assert_eq!(i, report.events.len() - 1);
                }
            }
        }
    }

    #[test]
    fn overwhelming_shift_brackets_the_truth() {
        let pair = DistributionPair::new(
            DensitySpec::Normal { mean: 0.0, sd: 1.0 },
            DensitySpec::Normal { mean: 5.0, sd: 1.0 },
        )
        .unwrap();
        let scenario = ChangeScenario::new(150, vec![(50, 100)]).unwrap();
        let config = familywise_thresholds(
            &pair,
            150,
            0.05,
            0.05,
            ThresholdMethod::MonteCarlo,
            2024,
            2000,
            true,
        )
        .unwrap();
        let reps = 1000usize;
        let mut hits = 0usize;
        for r in 0..reps {
            let xs =
                sample_scenario(&scenario, &pair, crate::rng::subseed(4242, r as u64)).unwrap();
            let w = random_walk(&pair, &xs).unwrap();
            let report = sequential_detect(&w, &config);
            if report.k_hat == 1 {
                let ev = &report.events[0];
                if let Some(bh) = ev.b_hat {
                    if ev.a_hat.abs_diff(50) <= 5 && bh.abs_diff(100) <= 5 {
                        hits += 1;
                    }
                }
            }
        }
        assert!(hits as f64 / reps as f64 >= 0.99, "hits = {hits}");
    }

    #[test]
    fn indicator_semantics() {
        let truth = ChangeScenario::new(40, vec![(10, 20)]).unwrap();
        let report = DetectionReport {
            events: vec![DetectionEvent {
                k: 1,
                tau: 27,
                a_hat: 25,
                tau_tilde: Some(32),
                b_hat: Some(30),
            }],
            k_hat: 1,
        };
        // (25, 30) misses (10, 20] entirely.
        assert!(false_alarm_indicator(&report, &truth));

        let overlapping = DetectionReport {
            events: vec![DetectionEvent {
                k: 1,
                tau: 12,
                a_hat: 9,
                tau_tilde: Some(22),
                b_hat: Some(20),
            }],
            k_hat: 1,
        };
        assert!(!false_alarm_indicator(&overlapping, &truth));

        // No true intervals and a nonempty report: always a false alarm.
        let quiet_truth = ChangeScenario::new(40, vec![]).unwrap();
        assert!(false_alarm_indicator(&report, &quiet_truth));

        // Endpoint contact counts as intersection.
        let touch = DetectionReport {
            events: vec![DetectionEvent {
                k: 1,
                tau: 22,
                a_hat: 20,
                tau_tilde: None,
                b_hat: None,
            }],
            k_hat: 1,
        };
        assert!(!false_alarm_indicator(&touch, &truth));
    }

    #[test]
    fn false_readjustment_semantics() {
        // All in control: every estimated gap intersects the one true gap.
        let quiet = ChangeScenario::new(50, vec![]).unwrap();
        let two_events = DetectionReport {
            events: vec![
                DetectionEvent {
                    k: 1,
                    tau: 11,
                    a_hat: 10,
                    tau_tilde: Some(16),
                    b_hat: Some(15),
                },
                DetectionEvent {
                    k: 2,
                    tau: 31,
                    a_hat: 30,
                    tau_tilde: None,
                    b_hat: None,
                },
            ],
            k_hat: 2,
        };
        assert!(!false_readjustment_indicator(&two_events, &quiet));

        // Gap (15, 30) strictly inside one long change interval (5, 45].
        let long_change = ChangeScenario::new(50, vec![(5, 45)]).unwrap();
        assert!(false_readjustment_indicator(&two_events, &long_change));

        // A single event has no completed gap.
        let single = DetectionReport {
            events: vec![DetectionEvent {
                k: 1,
                tau: 21,
                a_hat: 20,
                tau_tilde: Some(26),
                b_hat: Some(25),
            }],
            k_hat: 1,
        };
        assert!(!false_readjustment_indicator(&single, &long_change));
    }
}
