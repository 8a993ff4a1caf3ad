//! Reproducible Monte Carlo experiments validating the probabilistic
//! guarantees: familywise error rates, estimation-error distributions,
//! and early false alarms of the GLR detector.
//!
//! Replicate `r` draws its data from `subseed(master_seed, r)`, so
//! results do not depend on execution order. Thresholds are computed
//! once per configuration, never per replicate.

use crate::error::{Error, Result};
use crate::exactdist::{spitzer_atom, LatticePair};
use crate::glr::{estimated_cusum_at, Baseline, GlrConfig};
use crate::model::{sample_scenario, ChangeScenario, DistributionPair, ExponentialFamilyModel};
use crate::multi::{
    false_alarm_indicator, false_readjustment_indicator, familywise_thresholds, sequential_detect,
};
use crate::rng::subseed;
use crate::single::{mle_interval, ThresholdMethod};
use crate::walks::random_walk;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::time::Instant;

/// Default replicate count for the moment estimate behind Monte Carlo
/// thresholds.
pub const DEFAULT_MOMENT_REPLICATES: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Far,
    Frr,
    MleError,
    GlrFa,
    AsymptoticPmf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub scenario: ChangeScenario,
    pub pair: DistributionPair,
    pub replicates: usize,
    pub master_seed: u64,
    pub alpha: f64,
    pub beta: f64,
    pub kind: ExperimentKind,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        self.scenario.validate()?;
        self.pair.validate()?;
        if self.replicates < 100 {
            return Err(Error::invalid_input("replicates must be at least 100"));
        }
        Ok(())
    }
}

/// A point estimate with its uncertainty; binomial standard errors for
/// indicator means.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedEstimate {
    pub name: String,
    pub value: f64,
    pub standard_error: Option<f64>,
    pub replicates: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OffsetMass {
    pub offset: i64,
    pub mass: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub estimates: Vec<NamedEstimate>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub offset_pmf_a: Option<Vec<OffsetMass>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub offset_pmf_b: Option<Vec<OffsetMass>>,
    pub wall_time_secs: f64,
    pub config: ExperimentConfig,
}

fn binomial_estimate(name: &str, hits: usize, reps: usize) -> NamedEstimate {
    let p = hits as f64 / reps as f64;
    NamedEstimate {
        name: name.to_string(),
        value: p,
        standard_error: Some((p * (1.0 - p) / reps as f64).sqrt()),
        replicates: reps,
    }
}

fn auto_method(pair: &DistributionPair) -> ThresholdMethod {
    if pair.base.finite_support().is_some() && pair.change.finite_support().is_some() {
        ThresholdMethod::ExactLattice
    } else {
        ThresholdMethod::MonteCarlo
    }
}

/// Familywise false alarm rate of the sequential detector under the
/// configured scenario (typically pure `F`).
pub fn run_far_experiment(config: &ExperimentConfig) -> Result<ExperimentResult> {
    run_indicator_experiment(config, false)
}

/// Familywise false readjustment rate, typically under a long-change
/// scenario.
pub fn run_frr_experiment(config: &ExperimentConfig) -> Result<ExperimentResult> {
    run_indicator_experiment(config, true)
}

fn run_indicator_experiment(
    config: &ExperimentConfig,
    readjustment: bool,
) -> Result<ExperimentResult> {
    config.validate()?;
    let start = Instant::now();
    let detector = familywise_thresholds(
        &config.pair,
        config.scenario.n,
        config.alpha,
        config.beta,
        auto_method(&config.pair),
        subseed(config.master_seed, u64::MAX),
        DEFAULT_MOMENT_REPLICATES,
        true,
    )?;
    let mut hits = 0usize;
    for r in 0..config.replicates {
        let xs = sample_scenario(
            &config.scenario,
            &config.pair,
            subseed(config.master_seed, r as u64),
        )?;
        let walk = random_walk(&config.pair, &xs)?;
        let report = sequential_detect(&walk, &detector);
        let indicator = if readjustment {
            false_readjustment_indicator(&report, &config.scenario)
        } else {
            false_alarm_indicator(&report, &config.scenario)
        };
        if indicator {
            hits += 1;
        }
    }
    let name = if readjustment { "frr" } else { "far" };
    Ok(ExperimentResult {
        estimates: vec![binomial_estimate(name, hits, config.replicates)],
        offset_pmf_a: None,
        offset_pmf_b: None,
        wall_time_secs: start.elapsed().as_secs_f64(),
        config: config.clone(),
    })
}

/// Empirical pmf of the interval-MLE error `(a_hat - a, b_hat - b)` for
/// a single-interval scenario, with the tail mass beyond offset 20.
pub fn run_mle_error_experiment(config: &ExperimentConfig) -> Result<ExperimentResult> {
    config.validate()?;
    if config.scenario.intervals.len() != 1 {
        return Err(Error::invalid_input(
            "the estimation-error experiment needs exactly one change interval",
        ));
    }
    let start = Instant::now();
    let (a, b) = config.scenario.intervals[0];
    let n = config.scenario.n;
    let delta = a.min(b - a).min(n - b);

    let mut pmf_a: BTreeMap<i64, usize> = BTreeMap::new();
    let mut pmf_b: BTreeMap<i64, usize> = BTreeMap::new();
    let mut exact_a = 0usize;
    let mut exact_b = 0usize;
    let mut tail_a = 0usize;
    let mut tail_b = 0usize;
    for r in 0..config.replicates {
        let xs = sample_scenario(
            &config.scenario,
            &config.pair,
            subseed(config.master_seed, r as u64),
        )?;
        let walk = random_walk(&config.pair, &xs)?;
        let est = mle_interval(&walk);
        let off_a = est.a_hat as i64 - a as i64;
        let off_b = est.b_hat as i64 - b as i64;
        *pmf_a.entry(off_a).or_insert(0) += 1;
        *pmf_b.entry(off_b).or_insert(0) += 1;
        if off_a == 0 {
            exact_a += 1;
        }
        if off_b == 0 {
            exact_b += 1;
        }
        if off_a.abs() > 20 {
            tail_a += 1;
        }
        if off_b.abs() > 20 {
            tail_b += 1;
        }
    }
    let reps = config.replicates;
    let to_pmf = |m: BTreeMap<i64, usize>| {
        m.into_iter()
            .map(|(offset, c)| OffsetMass {
                offset,
                mass: c as f64 / reps as f64,
            })
            .collect::<Vec<_>>()
    };
    Ok(ExperimentResult {
        estimates: vec![
            binomial_estimate("p_a_exact", exact_a, reps),
            binomial_estimate("p_b_exact", exact_b, reps),
            binomial_estimate("tail_a_beyond_20", tail_a, reps),
            binomial_estimate("tail_b_beyond_20", tail_b, reps),
            NamedEstimate {
                name: "delta_separation".into(),
                value: delta as f64,
                standard_error: None,
                replicates: reps,
            },
        ],
        offset_pmf_a: Some(to_pmf(pmf_a)),
        offset_pmf_b: Some(to_pmf(pmf_b)),
        wall_time_secs: start.elapsed().as_secs_f64(),
        config: config.clone(),
    })
}

/// Early false alarms of the GLR detector under the configured scenario
/// (typically pure `F`): the fraction of replicates alarming before
/// `floor(n^(omega/2))`, with the threshold calibrated from the
/// known-parameter moment bound.
pub fn run_glr_fa_experiment(config: &ExperimentConfig) -> Result<ExperimentResult> {
    config.validate()?;
    let start = Instant::now();
    let family = match (&config.pair.base, &config.pair.change) {
        (
            crate::model::DensitySpec::Normal { sd: s0, .. },
            crate::model::DensitySpec::Normal { sd: s1, .. },
        ) if (*s0 - 1.0).abs() < 1e-12 && (*s1 - 1.0).abs() < 1e-12 => {
            ExponentialFamilyModel::NormalUnitVariance
        }
        _ => {
            return Err(Error::invalid_input(
                "the GLR experiment expects a unit-variance Gaussian pair",
            ))
        }
    };
    let n = config.scenario.n;
    let omega = 0.6;
    let threshold = crate::single::false_alarm_threshold(
        &config.pair,
        n,
        config.alpha,
        ThresholdMethod::MonteCarlo,
        subseed(config.master_seed, u64::MAX),
        2000,
        true,
    )?;
    let glr_config = GlrConfig::new(omega, threshold.h, Baseline::Unknown, 2)?;
    let horizon = (n as f64).powf(omega / 2.0).floor() as usize;

    let mut alarms = 0usize;
    for r in 0..config.replicates {
        let xs = sample_scenario(
            &config.scenario,
            &config.pair,
            subseed(config.master_seed, r as u64),
        )?;
        for t in 1..horizon.min(n) {
            let p = estimated_cusum_at(&xs, family, &glr_config, t)?;
            if !p.warmup && p.value >= glr_config.h {
                alarms += 1;
                break;
            }
        }
    }
    Ok(ExperimentResult {
        estimates: vec![
            binomial_estimate("glr_early_alarm_rate", alarms, config.replicates),
            NamedEstimate {
                name: "horizon".into(),
                value: horizon as f64,
                standard_error: None,
                replicates: config.replicates,
            },
        ],
        offset_pmf_a: None,
        offset_pmf_b: None,
        wall_time_secs: start.elapsed().as_secs_f64(),
        config: config.clone(),
    })
}

/// Estimation-error pmf plus the exact zero-offset atom for comparison,
/// when the pair admits an exact lattice.
pub fn run_asymptotic_pmf_experiment(config: &ExperimentConfig) -> Result<ExperimentResult> {
    let mut result = run_mle_error_experiment(config)?;
    if let Ok(lp) = LatticePair::from_pair(&config.pair) {
        result.estimates.push(NamedEstimate {
            name: "p0_series_m200".into(),
            value: spitzer_atom(&lp, 200),
            standard_error: None,
            replicates: config.replicates,
        });
    }
    Ok(result)
}

/// Dispatch on the configured experiment kind.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentResult> {
    match config.kind {
        ExperimentKind::Far => run_far_experiment(config),
        ExperimentKind::Frr => run_frr_experiment(config),
        ExperimentKind::MleError => run_mle_error_experiment(config),
        ExperimentKind::GlrFa => run_glr_fa_experiment(config),
        ExperimentKind::AsymptoticPmf => run_asymptotic_pmf_experiment(config),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExportFormat {
    Json,
    Csv,
}

/// Write a result to disk. JSON round-trips losslessly; CSV flattens to
/// `record,name,offset,value,standard_error,replicates` rows.
pub fn export_results(
    result: &ExperimentResult,
    path: &std::path::Path,
    format: ExportFormat,
) -> Result<()> {
    let body = match format {
        ExportFormat::Json => serde_json::to_string_pretty(result)
            .map_err(|e| Error::invalid_input(format!("serialization failed: {e}")))?,
        ExportFormat::Csv => result_to_csv(result),
    };
    std::fs::write(path, body)?;
    Ok(())
}

pub fn result_to_csv(result: &ExperimentResult) -> String {
    let mut out = String::from("record,name,offset,value,standard_error,replicates\n");
    for est in &result.estimates {
        out.push_str(&format!(
            "estimate,{},,{},{},{}\n",
            est.name,
            est.value,
            est.standard_error
                .map(|s| s.to_string())
                .unwrap_or_default(),
            est.replicates
        ));
    }
    for (label, pmf) in [
        ("offset_a", &result.offset_pmf_a),
        ("offset_b", &result.offset_pmf_b),
    ] {
        if let Some(pmf) = pmf {
            for om in pmf {
                out.push_str(&format!("{label},,{},{},,\n", om.offset, om.mass));
            }
        }
    }
    out
}
