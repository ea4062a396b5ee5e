//! Replication harness for block-length sweeps, path-count coalescence
//! studies, survival-curve decay and goodness of fit.
//!
//! Replication `r` of an experiment always draws from stream `r` of a
//! master seed derived from the user seed and the experiment parameters, so
//! results do not depend on how replications are scheduled.

use rayon::prelude::*;
use serde::Serialize;

use crate::diagnostics::{ks_statistic, mode_masses, qq_outliers, summary_stats, KsResult, ModeMass, SixNumberSummary};
use crate::error::{Error, Result};
use crate::metro_ms::{coalescence_time, metropolis_step, StepRandomness};
use crate::rng::{derive_seed, RngStream};
use crate::rocftp::{run_block, sample, SamplerConfig, COALESCENCE_CAP};
use crate::targets::Target;

const SWEEP_SALT: u64 = 0x5eed_b10c;
const STUDY_SALT: u64 = 0xc0a1_e5ce;
const DECAY_SALT: u64 = 0x000d_eca7;

fn check_reps(reps: usize, min: usize) -> Result<()> {
    if reps < min {
        Err(Error::InvalidArgument(format!("reps = {reps} below {min}")))
    } else {
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub block_length: u64,
    pub p_hat: f64,
    pub n_bar: f64,
    pub tau_bar: f64,
    pub reps: usize,
}

/// Index (1-based) of the first coalescent block of one ROCFTP run whose
/// primary chain starts at the middle of the range.
fn first_coalescent_block(config: &SamplerConfig, stream: &mut RngStream) -> Result<u64> {
    let max_blocks = (COALESCENCE_CAP / config.block_length).max(1);
    let mut x = config.x0;
    for block in 1..=max_blocks {
        let r = run_block(config, x, stream, block)?;
        if r.coalesced {
            return Ok(block);
        }
        x = r.end_state;
    }
    Err(Error::CoalescenceNotReached { cap: COALESCENCE_CAP })
}

pub fn block_sweep(
    target: &Target,
    hat0: f64,
    hat1: f64,
    sigma: f64,
    block_lengths: &[u64],
    reps: usize,
    seed: u64,
) -> Result<Vec<SweepRow>> {
    check_reps(reps, 100)?;
    block_lengths
        .iter()
        .map(|&t| {
            let config = SamplerConfig::new(target.clone(), hat0, hat1, sigma, t, seed)?;
            let master = derive_seed(derive_seed(seed, SWEEP_SALT), t);
            let firsts: Vec<u64> = (0..reps as u64)
                .into_par_iter()
                .map(|r| first_coalescent_block(&config, &mut RngStream::new(master, r)))
                .collect::<Result<_>>()?;
            let n_bar = firsts.iter().sum::<u64>() as f64 / reps as f64;
            Ok(SweepRow {
                block_length: t,
                p_hat: firsts.iter().filter(|&&b| b == 1).count() as f64 / reps as f64,
                n_bar,
                tau_bar: n_bar * t as f64,
                reps,
            })
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CoalescenceStudy {
    pub path_counts: Vec<usize>,
    /// `times[r][j]`: coalescence time of path set `j` in replication `r`.
    pub times: Vec<Vec<u64>>,
    pub mean_times: Vec<f64>,
    /// Percentage of replications whose time for set `j` equals the time
    /// for the largest set.
    pub percent_equal: Vec<f64>,
    pub summaries: Vec<SixNumberSummary>,
}

/// Path set for each requested count: `k` equally spaced points over
/// `[hat0, hat1]` (extremes included) together with every point of the
/// smaller sets, so the sets are nested.
pub fn nested_path_sets(hat0: f64, hat1: f64, path_counts: &[usize]) -> (Vec<f64>, Vec<Vec<usize>>) {
    let grid = |k: usize| -> Vec<f64> {
        (0..k)
            .map(|i| {
                if i + 1 == k {
                    hat1
                } else {
                    // reduce i/(k-1) so shared grid points round identically
                    let g = gcd(i, k - 1);
                    hat0 + (hat1 - hat0) * ((i / g) as f64 / ((k - 1) / g) as f64)
                }
            })
            .collect()
    };
    let mut points: Vec<f64> = path_counts.iter().flat_map(|&k| grid(k)).collect();
    points.sort_by(f64::total_cmp);
    points.dedup();
    let index_of = |x: f64| points.binary_search_by(|p| p.total_cmp(&x)).expect("grid point");
    let mut members: Vec<Vec<usize>> = Vec::new();
    let mut acc: Vec<usize> = Vec::new();
    for &k in path_counts {
        acc.extend(grid(k).into_iter().map(index_of));
        acc.sort_unstable();
        acc.dedup();
        members.push(acc.clone());
    }
    (points, members)
}

fn gcd(mut a: usize, mut b: usize) -> usize {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a.max(1)
}

fn all_equal(states: &[f64], members: &[usize]) -> bool {
    let first = states[members[0]];
    members.iter().all(|&i| states[i] == first)
}

/// Coalescence time of each nested set under one shared randomness run.
pub fn nested_coalescence_times(
    target: &Target,
    points: &[f64],
    members: &[Vec<usize>],
    sigma: f64,
    stream: &mut RngStream,
) -> Result<Vec<u64>> {
    let mut states = points.to_vec();
    let mut times: Vec<Option<u64>> = vec![None; members.len()];
    let mut done = 0;
    for (j, m) in members.iter().enumerate() {
        if done == j && all_equal(&states, m) {
            times[j] = Some(0);
            done += 1;
        }
    }
    let mut t = 0;
    while done < members.len() {
        if t >= COALESCENCE_CAP {
            return Err(Error::CoalescenceNotReached { cap: COALESCENCE_CAP });
        }
        t += 1;
        let u = StepRandomness::draw(stream, sigma);
        for s in states.iter_mut() {
            *s = metropolis_step(target, *s, &u)?;
        }
        // a superset cannot coalesce before its subset
        while done < members.len() && all_equal(&states, &members[done]) {
            times[done] = Some(t);
            done += 1;
        }
    }
    Ok(times.into_iter().map(|t| t.expect("set")).collect())
}

pub fn coalescence_study(
    target: &Target,
    hat0: f64,
    hat1: f64,
    sigma: f64,
    path_counts: &[usize],
    reps: usize,
    seed: u64,
) -> Result<CoalescenceStudy> {
    check_reps(reps, 100)?;
    if path_counts.first() != Some(&2) || path_counts.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument(
            "path counts must be strictly ascending and start at 2".into(),
        ));
    }
    if !(hat0 <= hat1) {
        return Err(Error::InvalidArgument("range not ordered".into()));
    }
    let (points, members) = nested_path_sets(hat0, hat1, path_counts);
    let master = derive_seed(seed, STUDY_SALT);
    let times: Vec<Vec<u64>> = (0..reps as u64)
        .into_par_iter()
        .map(|r| nested_coalescence_times(target, &points, &members, sigma, &mut RngStream::new(master, r)))
        .collect::<Result<_>>()?;

    let last = path_counts.len() - 1;
    let mut mean_times = Vec::new();
    let mut percent_equal = Vec::new();
    let mut summaries = Vec::new();
    for j in 0..path_counts.len() {
        let col: Vec<f64> = times.iter().map(|row| row[j] as f64).collect();
        let s = summary_stats(&col)?;
        mean_times.push(s.mean);
        summaries.push(s);
        let equal = times.iter().filter(|row| row[j] == row[last]).count();
        percent_equal.push(100.0 * equal as f64 / reps as f64);
    }
    Ok(CoalescenceStudy {
        path_counts: path_counts.to_vec(),
        times,
        mean_times,
        percent_equal,
        summaries,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DecayRow {
    pub t: u64,
    /// Estimated `P(T* > t)`.
    pub survive_hat: f64,
    /// `4 * survive_hat`, the total-variation bound.
    pub tv_bound: f64,
}

/// Empirical survival function of the full coalescence time of chains
/// started at `start_points`, for `t = 1..=t_max`.
pub fn decay_study(
    target: &Target,
    start_points: &[f64],
    sigma: f64,
    t_max: u64,
    reps: usize,
    seed: u64,
) -> Result<Vec<DecayRow>> {
    check_reps(reps, 1000)?;
    if start_points.is_empty() {
        return Err(Error::InvalidArgument("no start points".into()));
    }
    let master = derive_seed(seed, DECAY_SALT);
    let times: Vec<u64> = (0..reps as u64)
        .into_par_iter()
        .map(|r| {
            coalescence_time(target, start_points.to_vec(), sigma, &mut RngStream::new(master, r), COALESCENCE_CAP)
        })
        .collect::<Result<_>>()?;
    Ok((1..=t_max)
        .map(|t| {
            let survive_hat = times.iter().filter(|&&c| c > t).count() as f64 / reps as f64;
            DecayRow {
                t,
                survive_hat,
                tv_bound: 4.0 * survive_hat,
            }
        })
        .collect())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GofReport {
    pub samples: Vec<f64>,
    pub ks: KsResult,
    pub outlier_count: usize,
    pub outlier_fraction: f64,
    pub delta: f64,
    pub mode_masses: Vec<ModeMass>,
    pub blocks: u64,
    pub p_hat: f64,
}

#[allow(clippy::too_many_arguments)]
pub fn gof_study(
    target: &Target,
    hat0: f64,
    hat1: f64,
    sigma: f64,
    block_length: u64,
    n: usize,
    delta: f64,
    seed: u64,
) -> Result<GofReport> {
    if n < 100 {
        return Err(Error::InvalidArgument(format!("n = {n} below 100")));
    }
    let config = SamplerConfig::new(target.clone(), hat0, hat1, sigma, block_length, seed)?;
    let run = sample(&config, n).map_err(|(_, e)| e)?;
    let ks = ks_statistic(&run.samples, target)?;
    let out = qq_outliers(&run.samples, target, delta)?;
    let mode_masses = mode_masses(&run.samples, target, &target.mode_cuts());
    Ok(GofReport {
        outlier_fraction: out.count as f64 / n as f64,
        outlier_count: out.count,
        delta,
        ks,
        mode_masses,
        blocks: run.stats.blocks,
        p_hat: run.stats.p_hat,
        samples: run.samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::targets::parse_target;

    #[test]
    fn nested_sets_are_nested_and_keep_extremes() {
        let (points, members) = nested_path_sets(-10.0, 10.0, &[2, 10, 100]);
        assert_eq!(members[0].len(), 2);
        // 9 divides 99, so the 10-point grid sits inside the 100-point grid
        assert_eq!(members[1].len(), 10);
        assert_eq!(members[2].len(), 100);
        assert_eq!(points.len(), 100);
        for w in members.windows(2) {
            assert!(w[0].iter().all(|i| w[1].contains(i)));
        }
        assert_eq!(points[members[0][0]], -10.0);
        assert_eq!(points[members[0][1]], 10.0);
    }

    #[test]
    fn non_dividing_grids_are_unioned() {
        let (_, members) = nested_path_sets(0.0, 1.0, &[2, 4, 5]);
        assert_eq!(members[1].len(), 4);
        // {0, .25, .5, .75, 1} ∪ {0, 1/3, 2/3, 1}
        assert_eq!(members[2].len(), 7);
    }

    #[test]
    fn nested_times_nondecreasing() {
        let t = parse_target("0.2*N(-5,1)+0.2*N(5,1)+0.6*N(15,1)").unwrap();
        let s = coalescence_study(&t, -15.0, 25.0, 3.5, &[2, 10, 50], 100, 5).unwrap();
        for row in &s.times {
            assert!(row.windows(2).all(|w| w[0] <= w[1]), "{row:?}");
        }
        assert_eq!(s.percent_equal[2], 100.0);
    }

    #[test]
    fn study_argument_validation() {
        let t = parse_target("N(0,1)").unwrap();
        assert!(coalescence_study(&t, -1.0, 1.0, 1.0, &[3, 10], 100, 1).is_err());
        assert!(coalescence_study(&t, -1.0, 1.0, 1.0, &[2, 2], 100, 1).is_err());
        assert!(coalescence_study(&t, -1.0, 1.0, 1.0, &[2], 99, 1).is_err());
        assert!(decay_study(&t, &[0.0], 1.0, 10, 999, 1).is_err());
        assert!(decay_study(&t, &[], 1.0, 10, 1000, 1).is_err());
        assert!(gof_study(&t, -1.0, 1.0, 1.0, 10, 99, 0.5, 1).is_err());
    }

    #[test]
    fn decay_rows_are_monotone_and_bounded() {
        let t = parse_target("N(0,1)").unwrap();
        let rows = decay_study(&t, &[-10.0, 0.0, 10.0], 1.0, 100, 1000, 3).unwrap();
        assert_eq!(rows.len(), 100);
        for w in rows.windows(2) {
            assert!(w[1].survive_hat <= w[0].survive_hat);
        }
        for r in &rows {
            assert_eq!(r.tv_bound, 4.0 * r.survive_hat);
        }
    }

    #[test]
    fn sweep_rows_consistent() {
        let t = parse_target("N(0,1)").unwrap();
        let rows = block_sweep(&t, -10.0, 10.0, 1.0, &[20, 40], 200, 1).unwrap();
        for r in rows {
            assert!((0.0..=1.0).contains(&r.p_hat));
            assert!(r.n_bar >= 1.0);
            assert_eq!(r.tau_bar, r.n_bar * r.block_length as f64);
        }
    }
}
