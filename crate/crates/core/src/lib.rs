//! Monte Carlo measurement of how fast Riemann sums `(T/n) Σ h(X_{kT/n})`
//! converge to integral functionals `∫_0^T h(X_t) dt` of Markov paths, with
//! certified transition-kernel constants and theoretical bound overlays.
//!
//! Paths come from Brownian motion, symmetric α-stable processes (exact
//! Chambers–Mallows–Stuck increments) or Euler-discretized diffusions. All
//! coarse sums are exact subsamples of one fine path, so the measured error
//! is discretization error only.

pub mod config;
pub mod error;
pub mod experiment;
pub mod functionals;
pub mod kernels;
pub mod numerics;
pub mod processes;
pub mod rates;
pub mod report;
pub mod stats;

pub use config::{load_config, parse_config, parse_config_in, ExperimentConfig, OutputPaths};
pub use error::{Error, Result, Violation};
pub use experiment::{run_experiment, verify_kernels, KernelSuite, RunOptions};
pub use functionals::{TestFunction, Table};
pub use kernels::{MajorantQ, StableIndex, TransitionDensity, WeightV};
pub use processes::{DiffusionPreset, PathGrid, Process, SamplePath};
pub use rates::{AbscissaMode, McEstimate, RateFit};
pub use report::Report;
