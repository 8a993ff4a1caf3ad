//! Detection and estimation of transient changes in i.i.d. sequences.
//!
//! A transient change is a temporary switch of the data-generating
//! distribution from a base law `F` to a change law `G` on an interval
//! `(a, b]`, followed by a return to `F`. This crate provides:
//!
//! * [`model`] — distributions, log-likelihood ratios, exponential
//!   families, change scenarios, and reproducible sampling;
//! * [`walks`] — the log-likelihood-ratio random walk, forward / reverse /
//!   renewed CUSUM processes, their kernels (zero sets), and an exact
//!   lattice dynamic program over CUSUM values;
//! * [`single`] — maximum-likelihood estimation of one change interval,
//!   the LRT statistic, false-alarm-controlled thresholds, and local /
//!   pre-likelihood estimators;
//! * [`multi`] — the known-K iterative interval MLE, the unknown-K
//!   self-correcting sequential detector with familywise false alarm and
//!   false readjustment control, and scoring against ground truth;
//! * [`glr`] — change detection with unknown (nuisance) parameters in a
//!   canonical exponential family via the estimated CUSUM process;
//! * [`exactdist`] — exact and asymptotic distributions of the interval
//!   estimation error on finite lattices;
//! * [`harness`] — reproducible Monte Carlo experiments validating the
//!   probabilistic guarantees;
//! * [`io`] — CSV/JSON parsing and export used by the CLI.

#![forbid(unsafe_code)]

pub mod error;
pub mod exactdist;
pub mod glr;
pub mod harness;
pub mod io;
pub mod model;
pub mod multi;
pub mod rng;
pub mod single;
pub mod walks;

pub use error::{Error, Result};
pub use model::{ChangeScenario, DensitySpec, DistributionPair, ExponentialFamilyModel};
pub use walks::{CusumTrace, KernelSet, WalkTrace};
