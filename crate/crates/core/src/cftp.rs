//! Classic monotone coupling from the past on the AR(1) multishift chain
//! `X_{t+1} = M(rho * X_t)`, with doubling lookback and replay of logged
//! randomness.
//!
//! Lookback starts at 2. Each doubling from `2^(n-1)` to `2^n` draws fresh
//! randomness only for the new earlier segment `[-2^n, -2^(n-1))`, runs the
//! two bounding chains across it and checks whether they met by time
//! `-2^(n-1)`. On success the common state is carried to time 0 through the
//! logged randomness, which is never regenerated.

use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::multishift::{draw_coupler, CouplerDraw};
use crate::rng::{derive_seed, RngStream};

/// Innovation scale of the demonstration chain.
pub const AR1_SIGMA: f64 = 1.0;

/// Doubling budget used by [`cftp_replications`] callers that have no
/// preference: a lookback of about one million steps.
pub const DEFAULT_MAX_DOUBLINGS: u32 = 20;

const CFTP_SALT: u64 = 0xcf7_9de3;

pub fn ar1_multishift_step(rho: f64, state: f64, draw: &CouplerDraw) -> f64 {
    draw.apply(rho * state)
}

/// Coupler draws keyed by absolute time: `entries[i]` drives the update
/// from time `start + i` to `start + i + 1`, with `start = -entries.len()`.
#[derive(Clone, Debug, Default)]
pub struct RandomnessLog {
    entries: Vec<CouplerDraw>,
}

impl RandomnessLog {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Earliest time covered.
    pub fn start(&self) -> i64 {
        -(self.entries.len() as i64)
    }

    /// The draw used for the update leaving time `t`.
    pub fn at(&self, t: i64) -> Option<&CouplerDraw> {
        let i = t - self.start();
        usize::try_from(i).ok().and_then(|i| self.entries.get(i))
    }

    /// Prepends a segment covering the times just before `start()`.
    fn prepend(&mut self, mut earlier: Vec<CouplerDraw>) {
        earlier.extend_from_slice(&self.entries);
        self.entries = earlier;
    }
}

pub fn draw_digest(d: &CouplerDraw) -> u64 {
    let mut h = DefaultHasher::new();
    d.halfwidth.to_bits().hash(&mut h);
    d.offset.to_bits().hash(&mut h);
    d.scale.to_bits().hash(&mut h);
    h.finish()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CftpOutcome {
    pub sample: f64,
    /// Final lookback `2^n`.
    pub backoff_steps: u64,
}

/// Per-pass record of `(time, digest)` for every draw consumed.
pub type CftpTrace = Vec<Vec<(i64, u64)>>;

pub fn cftp_run(
    rho: f64,
    start_pair: (f64, f64),
    stream: &mut RngStream,
    max_doublings: u32,
) -> Result<CftpOutcome> {
    cftp_run_traced(rho, start_pair, stream, max_doublings, None)
}

/// As [`cftp_run`], additionally recording the digests of every draw each
/// pass used when `trace` is given.
pub fn cftp_run_traced(
    rho: f64,
    start_pair: (f64, f64),
    stream: &mut RngStream,
    max_doublings: u32,
    mut trace: Option<&mut CftpTrace>,
) -> Result<CftpOutcome> {
    let (lo, hi) = start_pair;
    if !(rho.abs() < 1.0) {
        return Err(Error::InvalidArgument(format!("|rho| = {} not below 1", rho.abs())));
    }
    if !(lo < hi) {
        return Err(Error::InvalidArgument(format!("start pair ({lo}, {hi}) not ordered")));
    }
    if max_doublings < 1 {
        return Err(Error::InvalidArgument("max_doublings must be at least 1".into()));
    }

    let mut log = RandomnessLog::default();
    for n in 1..=max_doublings {
        let lookback: i64 = 1 << n;
        let half = lookback / 2;
        // n = 1 has no earlier pass: both steps are fresh
        let fresh = if n == 1 { lookback } else { half } as usize;
        let segment: Vec<CouplerDraw> = (0..fresh).map(|_| draw_coupler(stream, AR1_SIGMA)).collect();
        log.prepend(segment);
        debug_assert_eq!(log.start(), -lookback);

        let mut pass = Vec::new();
        let (mut a, mut b) = (lo, hi);
        let mut t = -lookback;
        while t < -half {
            let d = log.at(t).expect("logged");
            if trace.is_some() {
                pass.push((t, draw_digest(d)));
            }
            a = ar1_multishift_step(rho, a, d);
            b = ar1_multishift_step(rho, b, d);
            t += 1;
        }
        let coalesced = a == b;
        if coalesced {
            while t < 0 {
                let d = log.at(t).expect("logged");
                if trace.is_some() {
                    pass.push((t, draw_digest(d)));
                }
                a = ar1_multishift_step(rho, a, d);
                t += 1;
            }
        }
        if let Some(tr) = trace.as_deref_mut() {
            tr.push(pass);
        }
        if coalesced {
            return Ok(CftpOutcome {
                sample: a,
                backoff_steps: lookback as u64,
            });
        }
    }
    Err(Error::CftpBudget {
        doublings: max_doublings,
        log_len: log.len(),
    })
}

/// Checks that every time index appearing in more than one pass of a trace
/// saw the same draw.
pub fn trace_reuse_consistent(trace: &CftpTrace) -> bool {
    let mut seen = std::collections::HashMap::new();
    trace.iter().flatten().all(|&(t, d)| *seen.entry(t).or_insert(d) == d)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CftpReplication {
    pub outcome: CftpOutcome,
    /// Whether every replayed time index saw the draw logged for it.
    pub reuse_consistent: bool,
}

/// Runs `reps` independent traced CFTP draws; replication `r` uses stream
/// `r` of a seed derived from `seed`.
pub fn cftp_replications(
    rho: f64,
    start_pair: (f64, f64),
    reps: usize,
    seed: u64,
    max_doublings: u32,
) -> Result<Vec<CftpReplication>> {
    let master = derive_seed(seed, CFTP_SALT);
    (0..reps as u64)
        .into_par_iter()
        .map(|r| {
            let mut trace = CftpTrace::new();
            let outcome = cftp_run_traced(rho, start_pair, &mut RngStream::new(master, r), max_doublings, Some(&mut trace))?;
            Ok(CftpReplication {
                outcome,
                reuse_consistent: trace_reuse_consistent(&trace),
            })
        })
        .collect()
}
