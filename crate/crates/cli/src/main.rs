mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rocftp::cftp::{cftp_replications, DEFAULT_MAX_DOUBLINGS};
use rocftp::diagnostics::DEFAULT_QQ_DELTA;
use rocftp::experiments::{block_sweep, coalescence_study, decay_study, gof_study};
use rocftp::targets::{resolve_target, MIN_MIR_RESOLUTION};
use rocftp::{calibrate_block_length, coalescence_trials, most_interest_range, sample, Error, SamplerConfig, Target};

use output::{emit, g17, Csv};

#[derive(Parser, Debug)]
#[command(name = "rocftp", version, about = "Read-once CFTP exact sampler with the Metropolis-multishift coupler")]
struct Cli {
    /// Master seed for every random stream
    #[arg(long, global = true, env = "ROCFTP_SEED", default_value_t = 1)]
    seed: u64,

    /// Worker threads for replications (0 = all available cores)
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,

    /// Output file, written atomically (stdout when omitted)
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Draw exact samples by read-once CFTP
    Sample(SampleArgs),
    /// Estimate the block length as the median coalescence time
    Calibrate(CalibrateArgs),
    /// Most interest range of a target
    Mir(MirArgs),
    /// Coalescence rate per block for a list of block lengths
    SweepBlock(SweepArgs),
    /// Coalescence times of nested path sets
    Coalescence(CoalescenceArgs),
    /// Survival curve of the coupling time
    Decay(DecayArgs),
    /// Goodness of fit of ROCFTP samples
    Gof(GofArgs),
    /// Classic CFTP on the AR(1) multishift chain
    CftpDemo(CftpArgs),
}

#[derive(Args, Debug)]
struct TargetArgs {
    /// Mixture expression such as "0.8*N(-2,1)+0.2*N(2,1)", or case1..case6
    #[arg(long)]
    target: String,

    /// Starting range lo,hi [default: the case range, else the MIR hull]
    #[arg(long, allow_hyphen_values = true, value_parser = parse_pair)]
    range: Option<(f64, f64)>,

    /// Proposal scale [default: the case scale, else 1]
    #[arg(long)]
    sigma: Option<f64>,

    /// MIR tail mass used when a non-case target has no --range
    #[arg(long, default_value_t = 1e-4)]
    epsilon: f64,
}

#[derive(Args, Debug)]
struct BlockArgs {
    /// Block length T
    #[arg(long, conflicts_with = "calibrate")]
    block_length: Option<u64>,

    /// Calibrate T from this many coalescence trials [default: 1000 when no --block-length]
    #[arg(long)]
    calibrate: Option<usize>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Args, Debug)]
struct SampleArgs {
    #[command(flatten)]
    target: TargetArgs,
    #[command(flatten)]
    block: BlockArgs,
    /// Number of samples
    #[arg(long, default_value_t = 1000)]
    n: usize,
    /// Maximum number of blocks (0 = unlimited)
    #[arg(long, default_value_t = 0)]
    max_blocks: u64,
    /// Output format
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Args, Debug)]
struct CalibrateArgs {
    #[command(flatten)]
    target: TargetArgs,
    /// Number of coalescence trials
    #[arg(long, default_value_t = 10_000)]
    reps: usize,
}

#[derive(Args, Debug)]
struct MirArgs {
    /// Mixture expression or case1..case6
    #[arg(long)]
    target: String,
    /// Tail mass left outside the range
    #[arg(long, default_value_t = 4e-4)]
    epsilon: f64,
    /// Grid cells over the working support
    #[arg(long, default_value_t = 100_000)]
    resolution: usize,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[command(flatten)]
    target: TargetArgs,
    /// Block lengths to sweep
    #[arg(long, value_delimiter = ',', default_value = "20,30,40,50,60")]
    block_lengths: Vec<u64>,
    /// Replications per block length
    #[arg(long, default_value_t = 10_000)]
    reps: usize,
}

#[derive(Args, Debug)]
struct CoalescenceArgs {
    #[command(flatten)]
    target: TargetArgs,
    /// Nested path counts, ascending and starting at 2
    #[arg(long, value_delimiter = ',', default_value = "2,10,100")]
    path_counts: Vec<usize>,
    /// Replications
    #[arg(long, default_value_t = 1000)]
    reps: usize,
}

#[derive(Args, Debug)]
struct DecayArgs {
    #[command(flatten)]
    target: TargetArgs,
    /// Chain starting points [default: range lo, midpoint, range hi]
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    starts: Option<Vec<f64>>,
    /// Largest t reported
    #[arg(long, default_value_t = 100)]
    t_max: u64,
    /// Replications
    #[arg(long, default_value_t = 10_000)]
    reps: usize,
}

#[derive(Args, Debug)]
struct GofArgs {
    #[command(flatten)]
    target: TargetArgs,
    #[command(flatten)]
    block: BlockArgs,
    /// Number of samples
    #[arg(long, default_value_t = 10_000)]
    n: usize,
    /// QQ outlier threshold in target units
    #[arg(long, default_value_t = DEFAULT_QQ_DELTA)]
    delta: f64,
    /// Also write the samples to this CSV file
    #[arg(long)]
    samples_out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct CftpArgs {
    /// Autoregression coefficient, |rho| < 1
    #[arg(long, default_value_t = 0.92, allow_hyphen_values = true)]
    rho: f64,
    /// Starting pair lo,hi of the bounding chains
    #[arg(long, allow_hyphen_values = true, value_parser = parse_pair, default_value = "-100,100")]
    start: (f64, f64),
    /// Independent CFTP draws
    #[arg(long, default_value_t = 1000)]
    reps: usize,
    /// Maximum number of lookback doublings
    #[arg(long, default_value_t = DEFAULT_MAX_DOUBLINGS)]
    max_doublings: u32,
}

fn parse_pair(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s.split_once(',').ok_or_else(|| format!("expected lo,hi but got `{s}`"))?;
    let a: f64 = a.trim().parse().map_err(|e| format!("`{a}`: {e}"))?;
    let b: f64 = b.trim().parse().map_err(|e| format!("`{b}`: {e}"))?;
    Ok((a, b))
}

enum Failure {
    Usage(String),
    Runtime(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Runtime(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Runtime(m) => m,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Syntax { .. }
            | Error::WeightSum { .. }
            | Error::InvalidComponent(_)
            | Error::UnknownCase(_)
            | Error::InvalidArgument(_) => Failure::Usage(e.to_string()),
            Error::OutsideSupport { .. }
            | Error::CoalescenceNotReached { .. }
            | Error::CftpBudget { .. }
            | Error::BlockBudget { .. }
            | Error::EmptyInput => Failure::Runtime(e.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Runtime(format!("i/o error: {e}"))
    }
}

struct Resolved {
    target: Target,
    range: (f64, f64),
    sigma: f64,
}

fn resolve(args: &TargetArgs) -> Result<Resolved, Failure> {
    let (target, case) = resolve_target(&args.target)?;
    let range = match (args.range, &case) {
        (Some(r), _) => r,
        (None, Some(c)) => c.range,
        (None, None) => {
            let mir = most_interest_range(&target, args.epsilon, 10 * MIN_MIR_RESOLUTION)?;
            (mir.hull_lo, mir.hull_hi)
        }
    };
    if !(range.0 <= range.1) {
        return Err(Failure::Usage(format!("range {},{} is not ordered", range.0, range.1)));
    }
    let sigma = args.sigma.or(case.as_ref().map(|c| c.sigma)).unwrap_or(1.0);
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Failure::Usage(format!("sigma = {sigma} must be positive")));
    }
    Ok(Resolved { target, range, sigma })
}

const DEFAULT_CALIBRATION_REPS: usize = 1000;

fn block_length(block: &BlockArgs, r: &Resolved, seed: u64) -> Result<u64, Failure> {
    match block.block_length {
        Some(0) => Err(Failure::Usage("block length must be at least 1".into())),
        Some(t) => Ok(t),
        None => {
            let reps = block.calibrate.unwrap_or(DEFAULT_CALIBRATION_REPS);
            Ok(calibrate_block_length(&r.target, r.range.0, r.range.1, r.sigma, reps, seed)?)
        }
    }
}

fn footer(seed: u64, reps: usize) -> String {
    format!("seed={seed} reps={reps}")
}

fn run(cli: &Cli) -> Result<(), Failure> {
    let seed = cli.seed;
    let out = cli.out.as_deref();
    match &cli.command {
        Command::Sample(a) => {
            let r = resolve(&a.target)?;
            let t = block_length(&a.block, &r, seed)?;
            let mut config = SamplerConfig::new(r.target, r.range.0, r.range.1, r.sigma, t, seed)?;
            if a.max_blocks > 0 {
                config = config.with_max_blocks(a.max_blocks)?;
            }
            let (run, err) = match sample(&config, a.n) {
                Ok(run) => (run, None),
                Err((run, e)) => (run, Some(e)),
            };
            let text = match a.format {
                Format::Csv => {
                    let mut csv = Csv::new(&["sample"]);
                    for x in &run.samples {
                        csv.row(&[g17(*x)]);
                    }
                    csv.finish()
                }
                Format::Json => {
                    let doc = serde_json::json!({
                        "samples": run.samples,
                        "stats": {
                            "blocks": run.stats.blocks,
                            "coalescent_blocks": run.stats.coalescent_blocks,
                            "total_steps": run.stats.total_steps,
                            "p_hat": run.stats.p_hat,
                        },
                    });
                    let mut s = serde_json::to_string_pretty(&doc).expect("json");
                    s.push('\n');
                    s
                }
            };
            emit(out, &text)?;
            match err {
                Some(e) => Err(e.into()),
                None => Ok(()),
            }
        }
        Command::Calibrate(a) => {
            let r = resolve(&a.target)?;
            if a.reps < 100 {
                return Err(Failure::Usage(format!("reps = {} below 100", a.reps)));
            }
            let times: Vec<f64> = coalescence_trials(&r.target, r.range.0, r.range.1, r.sigma, a.reps, seed)?
                .into_iter()
                .map(|t| t as f64)
                .collect();
            let s = rocftp::diagnostics::summary_stats(&times)?;
            let mut csv = Csv::new(&["block_length", "min", "q1", "median", "mean", "q3", "max"]);
            csv.row(&[
                format!("{}", (s.median.ceil() as u64).max(1)),
                g17(s.min),
                g17(s.q1),
                g17(s.median),
                g17(s.mean),
                g17(s.q3),
                g17(s.max),
            ]);
            csv.comment(&footer(seed, a.reps));
            emit(out, &csv.finish())?;
            Ok(())
        }
        Command::Mir(a) => {
            let (target, _) = resolve_target(&a.target)?;
            let m = most_interest_range(&target, a.epsilon, a.resolution)?;
            let mut csv = Csv::new(&["lo", "hi"]);
            for (lo, hi) in &m.intervals {
                csv.row(&[g17(*lo), g17(*hi)]);
            }
            csv.comment(&format!(
                "epsilon={} level={} mass={} hull={},{}",
                g17(m.epsilon),
                g17(m.level),
                g17(m.mass),
                g17(m.hull_lo),
                g17(m.hull_hi)
            ));
            emit(out, &csv.finish())?;
            Ok(())
        }
        Command::SweepBlock(a) => {
            let r = resolve(&a.target)?;
            let rows = block_sweep(&r.target, r.range.0, r.range.1, r.sigma, &a.block_lengths, a.reps, seed)?;
            let mut csv = Csv::new(&["T", "p_hat", "n_bar", "tau_bar", "reps"]);
            for row in rows {
                csv.row(&[
                    row.block_length.to_string(),
                    g17(row.p_hat),
                    g17(row.n_bar),
                    g17(row.tau_bar),
                    row.reps.to_string(),
                ]);
            }
            csv.comment(&footer(seed, a.reps));
            emit(out, &csv.finish())?;
            Ok(())
        }
        Command::Coalescence(a) => {
            let r = resolve(&a.target)?;
            let study = coalescence_study(&r.target, r.range.0, r.range.1, r.sigma, &a.path_counts, a.reps, seed)?;
            let mut csv = Csv::new(&["paths", "mean", "percent_equal", "min", "q1", "median", "q3", "max"]);
            for (j, k) in study.path_counts.iter().enumerate() {
                let s = &study.summaries[j];
                csv.row(&[
                    k.to_string(),
                    g17(study.mean_times[j]),
                    g17(study.percent_equal[j]),
                    g17(s.min),
                    g17(s.q1),
                    g17(s.median),
                    g17(s.q3),
                    g17(s.max),
                ]);
            }
            csv.comment(&footer(seed, a.reps));
            emit(out, &csv.finish())?;
            Ok(())
        }
        Command::Decay(a) => {
            let r = resolve(&a.target)?;
            let starts = a
                .starts
                .clone()
                .unwrap_or_else(|| vec![r.range.0, 0.5 * (r.range.0 + r.range.1), r.range.1]);
            let rows = decay_study(&r.target, &starts, r.sigma, a.t_max, a.reps, seed)?;
            let mut csv = Csv::new(&["t", "survive_hat", "tv_bound"]);
            for row in rows {
                csv.row(&[row.t.to_string(), g17(row.survive_hat), g17(row.tv_bound)]);
            }
            csv.comment(&footer(seed, a.reps));
            emit(out, &csv.finish())?;
            Ok(())
        }
        Command::Gof(a) => {
            let r = resolve(&a.target)?;
            let t = block_length(&a.block, &r, seed)?;
            let rep = gof_study(&r.target, r.range.0, r.range.1, r.sigma, t, a.n, a.delta, seed)?;
            let mut csv = Csv::new(&["metric", "value"]);
            let mut put = |k: &str, v: String| csv.row(&[k.to_string(), v]);
            put("block_length", t.to_string());
            put("ks_statistic", g17(rep.ks.statistic));
            put("ks_p_value", g17(rep.ks.p_value));
            put("outlier_count", rep.outlier_count.to_string());
            put("outlier_fraction", g17(rep.outlier_fraction));
            put("delta", g17(rep.delta));
            put("blocks", rep.blocks.to_string());
            put("p_hat", g17(rep.p_hat));
            for (i, m) in rep.mode_masses.iter().enumerate() {
                put(&format!("mode{i}_observed"), g17(m.observed));
                put(&format!("mode{i}_expected"), g17(m.expected));
            }
            csv.comment(&footer(seed, a.n));
            emit(out, &csv.finish())?;
            if let Some(path) = &a.samples_out {
                let mut s = Csv::new(&["sample"]);
                for x in &rep.samples {
                    s.row(&[g17(*x)]);
                }
                emit(Some(path), &s.finish())?;
            }
            Ok(())
        }
        Command::CftpDemo(a) => {
            let reps = cftp_replications(a.rho, a.start, a.reps, seed, a.max_doublings)?;
            let mut csv = Csv::new(&["rep", "sample", "backoff_steps"]);
            for (i, r) in reps.iter().enumerate() {
                csv.row(&[i.to_string(), g17(r.outcome.sample), r.outcome.backoff_steps.to_string()]);
            }
            csv.comment(&footer(seed, a.reps));
            emit(out, &csv.finish())?;
            if let Some(i) = reps.iter().position(|r| !r.reuse_consistent) {
                return Err(Failure::Runtime(format!("replication {i} replayed a different draw")));
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: cannot start worker pool: {e}");
            return ExitCode::from(3);
        }
    };
    match pool.install(|| run(&cli)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
