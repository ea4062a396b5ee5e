//! Read-once CFTP driven by the Metropolis-multishift coupler.
//!
//! Time is cut into blocks of `T` updates. In every block two auxiliary
//! chains restart from `hat0` and `hat1` while the primary chain carries on
//! from where the previous block left it; all three share the block's
//! randomness. A block in which the three chains meet is coalescent. The
//! first coalescent block makes the primary chain exact; from then on the
//! state entering each coalescent block is emitted as one draw.

use rayon::prelude::*;
use serde::Serialize;

use crate::diagnostics::median;
use crate::error::{Error, Result};
use crate::metro_ms::{coalescence_time, PathEnsemble, StepRandomness};
use crate::rng::{derive_seed, RngStream};
use crate::targets::Target;

/// Hard cap on any unbounded coalescence trial.
pub const COALESCENCE_CAP: u64 = 1_000_000;

const CALIBRATE_SALT: u64 = 0xca11_b7a7e;
const PREALLOCATE_LIMIT: usize = 1 << 20;

#[derive(Clone, Debug, PartialEq)]
pub struct SamplerConfig {
    pub target: Target,
    pub hat0: f64,
    pub hat1: f64,
    pub sigma: f64,
    pub block_length: u64,
    pub seed: u64,
    pub max_blocks: u64,
    /// Initial primary state.
    pub x0: f64,
}

impl SamplerConfig {
    /// Config with `x0` at the midpoint of the range and an effectively
    /// unlimited block budget.
    pub fn new(target: Target, hat0: f64, hat1: f64, sigma: f64, block_length: u64, seed: u64) -> Result<Self> {
        let c = Self {
            target,
            hat0,
            hat1,
            sigma,
            block_length,
            seed,
            max_blocks: u64::MAX,
            x0: 0.5 * (hat0 + hat1),
        };
        c.validate()?;
        Ok(c)
    }

    pub fn with_max_blocks(mut self, max_blocks: u64) -> Result<Self> {
        self.max_blocks = max_blocks;
        self.validate()?;
        Ok(self)
    }

    pub fn with_x0(mut self, x0: f64) -> Result<Self> {
        self.x0 = x0;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.hat0 <= self.hat1) {
            return Err(Error::InvalidArgument(format!(
                "range ({}, {}) not ordered",
                self.hat0, self.hat1
            )));
        }
        if !(self.x0 >= self.hat0 && self.x0 <= self.hat1) {
            return Err(Error::InvalidArgument(format!(
                "x0 = {} outside range ({}, {})",
                self.x0, self.hat0, self.hat1
            )));
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(Error::InvalidArgument(format!("sigma = {} must be positive", self.sigma)));
        }
        if self.block_length < 1 {
            return Err(Error::InvalidArgument("block length must be at least 1".into()));
        }
        if self.max_blocks < 1 {
            return Err(Error::InvalidArgument("max_blocks must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BlockReport {
    pub block_index: u64,
    pub start_state: f64,
    pub coalesced: bool,
    pub coalescence_step: Option<u64>,
    pub end_state: f64,
}

/// Runs one block of `config.block_length` updates from `(hat0, hat1, x_in)`
/// on randomness drawn from `stream`.
pub fn run_block(config: &SamplerConfig, x_in: f64, stream: &mut RngStream, block_index: u64) -> Result<BlockReport> {
    let mut chains = PathEnsemble::new(vec![config.hat0, config.hat1, x_in])?;
    for step in 1..=config.block_length {
        let u = StepRandomness::draw(stream, config.sigma);
        chains.advance(&config.target, &u, step)?;
    }
    Ok(BlockReport {
        block_index,
        start_state: x_in,
        coalesced: chains.coalesced_step.is_some(),
        coalescence_step: chains.coalesced_step,
        end_state: chains.states[2],
    })
}

/// Stream for block `block_index` of a sampler seeded with `seed`.
pub fn block_stream(seed: u64, block_index: u64) -> RngStream {
    RngStream::new(seed, block_index)
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct RunStats {
    pub blocks: u64,
    pub coalescent_blocks: u64,
    /// Total updates of the primary chain, `blocks * T`.
    pub total_steps: u64,
    /// For each emitted sample, the number of blocks since the previous
    /// coalescent block (inclusive of the emitting block).
    pub blocks_per_sample: Vec<u64>,
    pub p_hat: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SampleRun {
    pub samples: Vec<f64>,
    pub stats: RunStats,
}

/// Draws `n` exact samples. If the block budget runs out first the partial
/// run is returned alongside [`Error::BlockBudget`].
pub fn sample(config: &SamplerConfig, n: usize) -> std::result::Result<SampleRun, (SampleRun, Error)> {
    sample_with(config, n, |_| {})
}

/// As [`sample`], handing every block report to `on_block`.
pub fn sample_with(
    config: &SamplerConfig,
    n: usize,
    mut on_block: impl FnMut(&BlockReport),
) -> std::result::Result<SampleRun, (SampleRun, Error)> {
    let mut run = SampleRun {
        samples: Vec::with_capacity(n.min(PREALLOCATE_LIMIT)),
        stats: RunStats::default(),
    };
    if let Err(e) = config.validate() {
        return Err((run, e));
    }
    let mut x = config.x0;
    let mut established = false;
    let mut since_last = 0u64;
    let mut block = 0u64;
    while run.samples.len() < n {
        if block >= config.max_blocks {
            let err = Error::BlockBudget {
                max_blocks: config.max_blocks,
                samples: run.samples.len(),
                requested: n,
            };
            finish_stats(&mut run.stats, config.block_length);
            return Err((run, err));
        }
        let mut stream = block_stream(config.seed, block);
        let report = match run_block(config, x, &mut stream, block) {
            Ok(r) => r,
            Err(e) => {
                finish_stats(&mut run.stats, config.block_length);
                return Err((run, e));
            }
        };
        on_block(&report);
        run.stats.blocks += 1;
        since_last += 1;
        if report.coalesced {
            run.stats.coalescent_blocks += 1;
            if established {
                run.samples.push(report.start_state);
                run.stats.blocks_per_sample.push(since_last);
            }
            established = true;
            since_last = 0;
        }
        x = report.end_state;
        block += 1;
    }
    finish_stats(&mut run.stats, config.block_length);
    Ok(run)
}

fn finish_stats(stats: &mut RunStats, block_length: u64) {
    stats.total_steps = stats.blocks * block_length;
    stats.p_hat = if stats.blocks == 0 {
        0.0
    } else {
        stats.coalescent_blocks as f64 / stats.blocks as f64
    };
}

/// Coalescence times of `reps` independent trials of the three chains
/// started at `hat0`, `hat1` and the midpoint. Trial `r` uses stream `r` of
/// a seed derived from `seed`.
pub fn coalescence_trials(
    target: &Target,
    hat0: f64,
    hat1: f64,
    sigma: f64,
    reps: usize,
    seed: u64,
) -> Result<Vec<u64>> {
    if !(hat0 <= hat1) || !(sigma > 0.0) {
        return Err(Error::InvalidArgument("need hat0 <= hat1 and sigma > 0".into()));
    }
    let mid = 0.5 * (hat0 + hat1);
    let master = derive_seed(seed, CALIBRATE_SALT);
    (0..reps as u64)
        .into_par_iter()
        .map(|r| {
            let mut s = RngStream::new(master, r);
            coalescence_time(target, vec![hat0, hat1, mid], sigma, &mut s, COALESCENCE_CAP)
        })
        .collect()
}

/// Median of [`coalescence_trials`], rounded up and at least 1.
pub fn calibrate_block_length(target: &Target, hat0: f64, hat1: f64, sigma: f64, reps: usize, seed: u64) -> Result<u64> {
    if reps < 100 {
        return Err(Error::InvalidArgument(format!("reps = {reps} below 100")));
    }
    let times: Vec<f64> = coalescence_trials(target, hat0, hat1, sigma, reps, seed)?
        .into_iter()
        .map(|t| t as f64)
        .collect();
    Ok((median(&times)?.ceil() as u64).max(1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::targets::parse_target;

    fn n01_config(t: u64, seed: u64) -> SamplerConfig {
        SamplerConfig::new(parse_target("N(0,1)").unwrap(), -10.0, 10.0, 1.0, t, seed).unwrap()
    }

    #[test]
    fn degenerate_range_coalesces_immediately() {
        let c = SamplerConfig::new(parse_target("N(0,1)").unwrap(), 1.0, 1.0, 1.0, 5, 1).unwrap();
        let r = run_block(&c, 1.0, &mut RngStream::new(1, 0), 0).unwrap();
        assert!(r.coalesced);
        assert_eq!(r.coalescence_step, Some(0));
    }

    #[test]
    fn block_replay_is_deterministic() {
        let c = n01_config(29, 3);
        let a = run_block(&c, 0.5, &mut block_stream(3, 17), 17).unwrap();
        let b = run_block(&c, 0.5, &mut block_stream(3, 17), 17).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.start_state, 0.5);
    }

    #[test]
    fn coalesced_block_ends_on_common_value() {
        let c = n01_config(60, 4);
        let mut found = 0;
        for b in 0..200 {
            let r = run_block(&c, 3.0, &mut block_stream(4, b), b).unwrap();
            if r.coalesced {
                found += 1;
                let step = r.coalescence_step.unwrap();
                assert!(step >= 1 && step <= 60);
                // the auxiliary chains from hat0 end on the same value
                let mut s = block_stream(4, b);
                let mut e = PathEnsemble::new(vec![-10.0]).unwrap();
                for i in 1..=60 {
                    e.advance(&c.target, &StepRandomness::draw(&mut s, 1.0), i).unwrap();
                }
                assert_eq!(e.states[0], r.end_state);
            }
        }
        assert!(found > 100);
    }

    #[test]
    fn zero_samples_consume_no_blocks() {
        let run = sample(&n01_config(29, 1), 0).unwrap();
        assert!(run.samples.is_empty());
        assert_eq!(run.stats.blocks, 0);
    }

    #[test]
    fn samples_count_is_coalescent_blocks_minus_one() {
        let run = sample(&n01_config(29, 2), 200).unwrap();
        assert_eq!(run.samples.len(), 200);
        assert_eq!(run.stats.coalescent_blocks, 201);
        assert_eq!(run.stats.blocks_per_sample.len(), 200);
        assert_eq!(run.stats.total_steps, run.stats.blocks * 29);
    }

    #[test]
    fn budget_exhaustion_returns_partial() {
        let c = n01_config(29, 2).with_max_blocks(10).unwrap();
        let (partial, err) = sample(&c, 1000).unwrap_err();
        assert_eq!(partial.stats.blocks, 10);
        assert!(matches!(err, Error::BlockBudget { max_blocks: 10, .. }));
        assert_eq!(partial.samples.len() as u64 + 1, partial.stats.coalescent_blocks.max(1));
    }

    #[test]
    fn emitted_value_is_block_start_state() {
        let c = n01_config(29, 9);
        let mut reports = Vec::new();
        let run = sample_with(&c, 50, |r| reports.push(*r)).unwrap();
        let coalescent: Vec<_> = reports.iter().filter(|r| r.coalesced).collect();
        let expected: Vec<f64> = coalescent[1..].iter().map(|r| r.start_state).collect();
        assert_eq!(run.samples, expected);
        for w in reports.windows(2) {
            assert_eq!(w[0].end_state, w[1].start_state);
        }
    }

    #[test]
    fn config_validation() {
        let t = parse_target("N(0,1)").unwrap();
        assert!(SamplerConfig::new(t.clone(), 1.0, -1.0, 1.0, 10, 1).is_err());
        assert!(SamplerConfig::new(t.clone(), -1.0, 1.0, 0.0, 10, 1).is_err());
        assert!(SamplerConfig::new(t.clone(), -1.0, 1.0, 1.0, 0, 1).is_err());
        let c = SamplerConfig::new(t, -1.0, 1.0, 1.0, 10, 1).unwrap();
        assert!(c.clone().with_x0(2.0).is_err());
        assert!(c.with_max_blocks(0).is_err());
    }

    #[test]
    fn degenerate_calibration_is_one() {
        let t = parse_target("N(0,1)").unwrap();
        assert_eq!(calibrate_block_length(&t, 0.0, 0.0, 1.0, 100, 1).unwrap(), 1);
        assert!(calibrate_block_length(&t, -1.0, 1.0, 1.0, 99, 1).is_err());
    }
}
