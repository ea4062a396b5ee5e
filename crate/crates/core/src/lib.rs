//! Exact sampling from one-dimensional mixture targets by read-once
//! coupling from the past, using a Metropolis update whose proposal is the
//! layered normal multishift coupler.
//!
//! ```
//! use rocftp::{parse_target, sample, SamplerConfig};
//!
//! let target = parse_target("0.8*N(-2,1)+0.2*N(2,1)").unwrap();
//! let config = SamplerConfig::new(target, -10.0, 10.0, 1.0, 38, 7).unwrap();
//! let run = sample(&config, 100).unwrap();
//! assert_eq!(run.samples.len(), 100);
//! ```

pub mod cftp;
pub mod diagnostics;
pub mod error;
pub mod experiments;
pub mod metro_ms;
pub mod multishift;
pub mod rng;
pub mod rocftp;
pub mod special;
pub mod targets;

pub use error::{Error, Result};
pub use metro_ms::{evolve_paths, metropolis_step, PathEnsemble, StepRandomness};
pub use multishift::{apply_shift, draw_coupler, CouplerDraw};
pub use rng::RngStream;
pub use rocftp::{calibrate_block_length, coalescence_trials, run_block, sample, BlockReport, RunStats, SampleRun, SamplerConfig};
pub use targets::{most_interest_range, parse_target, Component, MirResult, Target};
