//! Probabilistically shaped PAM-8 over a short-reach IM/DD link with an EML.
//!
//! The crate covers Maxwell–Boltzmann-family distribution design
//! ([`shaping`]), a sample-level transmitter/receiver model ([`channel`]),
//! FFE and Volterra equalization ([`equalization`]), BER and rate accounting
//! ([`metrics`]) and sweep orchestration ([`harness`]).
//!
//! ```
//! use pamshape::{design_for_overhead, Polarity};
//!
//! let dist = design_for_overhead(0.0817, 2.0, 3, Polarity::Cap).unwrap();
//! assert!((dist.entropy() - 3.0 / 1.0817).abs() < 1e-9);
//! ```

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod equalization;
mod error;
pub mod fmt;
pub mod harness;
pub mod metrics;
pub mod shaping;

pub use channel::{simulate_link, EmlCurve, LinkConfig, Unit, Waveform};
pub use equalization::{Equalized, EqualizerConfig, VolterraKernels};
pub use error::{Error, Result};
pub use harness::{
    run_sweep, run_trial, DistributionSpec, ExperimentSpec, Sweep, SweepAxis, SweepResults,
    TrialReport,
};
pub use metrics::{BitErrors, LevelHistograms};
pub use shaping::{
    design_for_entropy, design_for_overhead, PamConstellation, Polarity, ShapedDistribution,
};
