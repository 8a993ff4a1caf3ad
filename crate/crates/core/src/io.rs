//! Parsing and export of the artifact's file formats: one-column series
//! CSV, the canonical JSON encodings, and plot-ready trace CSV.

use crate::error::{Error, Result};
use crate::model::{ChangeScenario, DistributionPair};
use crate::walks::{cusum, reverse_cusum, WalkTrace};

/// Parse a series CSV: one observation per line, an optional single
/// header line `x`, dot-decimal numbers only. Rejects empty input and
/// non-finite values.
pub fn parse_series_csv(text: &str) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if lineno == 0 && line == "x" {
            continue;
        }
        let value: f64 = line.parse().map_err(|_| {
            Error::invalid_input(format!("line {}: not a number: {line:?}", lineno + 1))
        })?;
        if !value.is_finite() {
            return Err(Error::invalid_input(format!(
                "line {}: non-finite observation",
                lineno + 1
            )));
        }
        out.push(value);
    }
    if out.is_empty() {
        return Err(Error::invalid_input("empty series"));
    }
    Ok(out)
}

pub fn parse_pair_json(text: &str) -> Result<DistributionPair> {
    let pair: DistributionPair =
        serde_json::from_str(text).map_err(|e| Error::invalid_input(format!("pair JSON: {e}")))?;
    pair.validate()?;
    Ok(pair)
}

pub fn parse_scenario_json(text: &str) -> Result<ChangeScenario> {
    let sc: ChangeScenario = serde_json::from_str(text)
        .map_err(|e| Error::invalid_input(format!("scenario JSON: {e}")))?;
    sc.validate()?;
    Ok(sc)
}

/// Trace CSV with columns `t,s,w,w_rev` for plotting.
pub fn trace_to_csv(walk: &WalkTrace) -> String {
    let fwd = cusum(walk);
    let rev = reverse_cusum(walk);
    let mut out = String::from("t,s,w,w_rev\n");
    for t in 0..=walk.len() {
        out.push_str(&format!(
            "{t},{},{},{}\n",
            walk.values()[t],
            fwd.values()[t],
            rev.values()[t]
        ));
    }
    out
}
