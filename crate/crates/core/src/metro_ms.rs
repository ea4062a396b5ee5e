//! Metropolis updates with the multishift coupler as proposal, applied to one
//! state or to many states under shared randomness.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::multishift::{draw_coupler, CouplerDraw};
use crate::rng::RngStream;
use crate::targets::Target;

/// The complete randomness of one update: the coupler packet and a single
/// acceptance uniform shared by every path.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct StepRandomness {
    pub draw: CouplerDraw,
    pub accept_u: f64,
}

impl StepRandomness {
    pub fn draw(stream: &mut RngStream, sigma: f64) -> Self {
        let draw = draw_coupler(stream, sigma);
        let accept_u = stream.next_uniform();
        Self { draw, accept_u }
    }
}

/// One Metropolis-multishift update of `state`.
pub fn metropolis_step(target: &Target, state: f64, u: &StepRandomness) -> Result<f64> {
    let proposal = u.draw.apply(state);
    let lp_state = target.ln_density(state);
    let lp_prop = target.ln_density(proposal);
    accept(state, proposal, lp_state, lp_prop, u.accept_u)
}

#[inline]
fn accept(state: f64, proposal: f64, lp_state: f64, lp_prop: f64, accept_u: f64) -> Result<f64> {
    if lp_prop == f64::NEG_INFINITY {
        if lp_state == f64::NEG_INFINITY {
            return Err(Error::OutsideSupport { state, proposal });
        }
        return Ok(state);
    }
    if lp_prop >= lp_state {
        return Ok(proposal);
    }
    let alpha = (lp_prop - lp_state).exp();
    Ok(if accept_u <= alpha { proposal } else { state })
}

/// Paths evolved together under one randomness sequence.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PathEnsemble {
    pub states: Vec<f64>,
    /// First step index (0 = before any update) at which every state was
    /// identical.
    pub coalesced_step: Option<u64>,
}

impl PathEnsemble {
    pub fn new(initial: Vec<f64>) -> Result<Self> {
        if initial.is_empty() {
            return Err(Error::InvalidArgument("no initial states".into()));
        }
        let mut e = Self {
            states: initial,
            coalesced_step: None,
        };
        if e.all_equal() {
            e.coalesced_step = Some(0);
        }
        Ok(e)
    }

    pub fn all_equal(&self) -> bool {
        let first = self.states[0];
        self.states.iter().all(|&s| s == first)
    }

    /// Applies one shared update to every path. `step_index` is the index
    /// the ensemble reaches after this update.
    pub fn advance(&mut self, target: &Target, u: &StepRandomness, step_index: u64) -> Result<()> {
        if self.coalesced_step.is_some() {
            // all paths carry the same value; one evaluation suffices
            let next = metropolis_step(target, self.states[0], u)?;
            self.states.fill(next);
            return Ok(());
        }
        for s in self.states.iter_mut() {
            *s = metropolis_step(target, *s, u)?;
        }
        if self.all_equal() {
            self.coalesced_step = Some(step_index);
        }
        Ok(())
    }
}

/// Evolves `initial` through `steps`, optionally recording the trajectory
/// (one row per step, including the initial states).
pub fn evolve_paths(
    target: &Target,
    initial: Vec<f64>,
    steps: &[StepRandomness],
    record: bool,
) -> Result<(PathEnsemble, Option<Vec<Vec<f64>>>)> {
    let mut ensemble = PathEnsemble::new(initial)?;
    let mut trajectory = record.then(|| vec![ensemble.states.clone()]);
    for (i, u) in steps.iter().enumerate() {
        ensemble.advance(target, u, i as u64 + 1)?;
        if let Some(t) = trajectory.as_mut() {
            t.push(ensemble.states.clone());
        }
    }
    Ok((ensemble, trajectory))
}

/// Runs fresh randomness from `stream` until every path coincides and
/// returns the number of updates taken.
pub fn coalescence_time(
    target: &Target,
    initial: Vec<f64>,
    sigma: f64,
    stream: &mut RngStream,
    cap: u64,
) -> Result<u64> {
    let mut ensemble = PathEnsemble::new(initial)?;
    let mut t = 0;
    while ensemble.coalesced_step.is_none() {
        if t >= cap {
            return Err(Error::CoalescenceNotReached { cap });
        }
        t += 1;
        let u = StepRandomness::draw(stream, sigma);
        ensemble.advance(target, &u, t)?;
    }
    Ok(t)
}
