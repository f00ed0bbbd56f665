use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use bmst_core::analysis::{genie_bound, run_ser_bound, select_memory};
use bmst_core::capacity::{iud_capacity, shannon_limit, CapacityQuery, ChannelKind, DEFAULT_TOL_DB};
use bmst_core::sim::{construct_code, emit_csv, run_sweep, write_csv, ConstructOptions};
use bmst_core::{selftest, Error, LabeledConstellation, Rational, RunSpec, SimConfig};
use clap::{Args, Parser, Subcommand, ValueEnum};

const PAPER_B: usize = 1250;
const PAPER_L: usize = 1000;

#[derive(Parser)]
#[command(name = "bmst", version, about = "BMST-RUN codes: construction, bounds, capacity and simulation")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Build a code for a rate and print the construction report.
    Construct(ConstructArgs),
    /// Run a Monte Carlo sweep described by a TOML config.
    Sweep(SweepArgs),
    /// Print union or genie bound curves, or a construction table, as CSV.
    Bounds(BoundsArgs),
    /// Shannon limit of a rate, or a capacity curve as CSV.
    Capacity(CapacityArgs),
    /// Run the built-in oracle checks.
    Selftest,
}

#[derive(Clone, Copy, ValueEnum)]
enum Channel {
    Awgn,
    Rayleigh,
}

impl From<Channel> for ChannelKind {
    fn from(c: Channel) -> Self {
        match c {
            Channel::Awgn => ChannelKind::Awgn,
            Channel::Rayleigh => ChannelKind::Rayleigh,
        }
    }
}

#[derive(Args)]
struct ConstructArgs {
    /// Built-in name or constellation file.
    #[arg(short, long, default_value = "BPSK")]
    constellation: String,
    /// Rate as P/Q.
    #[arg(short, long)]
    rate: String,
    /// Fold count B; defaults to about 1000 / Q.
    #[arg(short, long)]
    b: Option<usize>,
    #[arg(long, default_value_t = 1e-5)]
    p_target: f64,
    #[arg(long, value_enum, default_value = "awgn")]
    channel: Channel,
    /// Pin the Shannon limit (dB) instead of computing it.
    #[arg(long, allow_negative_numbers = true)]
    gamma_lim: Option<f64>,
    /// Data blocks per frame.
    #[arg(short = 'L', long)]
    blocks: Option<usize>,
    #[arg(long, default_value_t = 0)]
    interleaver_seed: u64,
    /// B = 1250 and L = 1000 unless given explicitly.
    #[arg(long)]
    paper_scale: bool,
}

#[derive(Args)]
struct SweepArgs {
    config: PathBuf,
    /// CSV destination; overrides the config. Standard output if neither is set.
    #[arg(short, long)]
    output: Option<PathBuf>,
    #[arg(short, long, env = "BMST_WORKERS")]
    workers: Option<usize>,
    /// Override the code with B = 1250 and L = 1000.
    #[arg(long)]
    paper_scale: bool,
}

#[derive(Args)]
struct BoundsArgs {
    #[arg(short, long, default_value = "BPSK")]
    constellation: String,
    /// Rate as P/Q for a bound curve.
    #[arg(short, long, required_unless_present = "table")]
    rate: Option<String>,
    /// Encoding memory; with it the genie bound is printed, without it the
    /// union bound of the RUN code.
    #[arg(short, long)]
    memory: Option<usize>,
    #[arg(long, default_value_t = -5.0, allow_negative_numbers = true)]
    start: f64,
    #[arg(long, default_value_t = 10.0, allow_negative_numbers = true)]
    stop: f64,
    #[arg(long, default_value_t = 0.5)]
    step: f64,
    /// Print the construction table for rates k/DEN, k = 1 .. DEN-1.
    #[arg(long, value_name = "DEN")]
    table: Option<u64>,
    #[arg(long, default_value_t = 1e-5)]
    p_target: f64,
}

#[derive(Args)]
struct CapacityArgs {
    #[arg(short, long, default_value = "BPSK")]
    constellation: String,
    #[arg(long, value_enum, default_value = "awgn")]
    channel: Channel,
    /// Rate as P/Q: print its Shannon limit in dB.
    #[arg(short, long, conflicts_with = "curve")]
    rate: Option<String>,
    /// Print a capacity curve START:STOP:STEP (dB) as CSV.
    #[arg(long, allow_hyphen_values = true)]
    curve: Option<String>,
    /// Standard-error target per curve point, in bits.
    #[arg(long, default_value_t = 1e-3)]
    precision: f64,
}

fn parse_rate(s: &str) -> Result<(usize, usize), Error> {
    let bad = || Error::Config(format!("rate must look like P/Q, got {s:?}"));
    let (p, q) = s.split_once('/').ok_or_else(bad)?;
    Ok((p.trim().parse().map_err(|_| bad())?, q.trim().parse().map_err(|_| bad())?))
}

fn parse_grid(s: &str) -> Result<Vec<f64>, Error> {
    let bad = || Error::Config(format!("curve must look like START:STOP:STEP, got {s:?}"));
    let v: Vec<f64> = s.split(':').map(|x| x.trim().parse().map_err(|_| bad())).collect::<Result<_, _>>()?;
    let [start, stop, step] = v[..] else { return Err(bad()) };
    grid(start, stop, step)
}

fn grid(start: f64, stop: f64, step: f64) -> Result<Vec<f64>, Error> {
    if !(step > 0.0) || stop < start {
        return Err(Error::Config(format!("empty grid {start}:{stop}:{step}")));
    }
    let n = ((stop - start) / step + 1e-9).floor() as usize;
    Ok((0..=n).map(|i| start + i as f64 * step).collect())
}

fn constellation(name: &str) -> Result<LabeledConstellation, Error> {
    LabeledConstellation::resolve(name)
}

fn construct(a: ConstructArgs) -> Result<(), Error> {
    let c = constellation(&a.constellation)?;
    let (p, q) = parse_rate(&a.rate)?;
    let b = a.b.unwrap_or(if a.paper_scale { PAPER_B } else { (1000 + q / 2) / q.max(1) }).max(1);
    let blocks = a.blocks.unwrap_or(if a.paper_scale { PAPER_L } else { bmst_core::sim::DEFAULT_BLOCKS });
    let opts = ConstructOptions { gamma_lim_db: a.gamma_lim, blocks, interleaver_seed: a.interleaver_seed };
    let (spec, report) = construct_code(&c, p, q, b, a.p_target, a.channel.into(), opts)?;
    for w in &report.warnings {
        log::warn!("{w}");
    }
    println!("{report}");
    println!("B              {b}");
    println!("L              {}", spec.blocks());
    println!("d              {}", spec.delay());
    println!("effective rate {}", spec.effective_rate());
    Ok(())
}

fn sweep(a: SweepArgs) -> Result<(), Error> {
    let mut cfg = SimConfig::load(&a.config)?;
    if a.paper_scale {
        cfg.code.b = PAPER_B;
        cfg.code.blocks = PAPER_L;
        cfg.validate()?;
    }
    if a.workers == Some(0) {
        return Err(Error::Config("worker count must be at least 1".into()));
    }
    let result = run_sweep(&cfg, a.workers)?;
    match a.output.or(cfg.output) {
        Some(path) => emit_csv(&result, path),
        None => write_csv(&result, std::io::stdout().lock()),
    }
}

fn bounds(a: BoundsArgs) -> Result<(), Error> {
    let c = constellation(&a.constellation)?;
    let mut out = std::io::stdout().lock();
    if let Some(den) = a.table {
        writeln!(out, "rate,N,alpha,gamma_lim_db,m")?;
        for k in 1..den {
            let run = RunSpec::new(k as usize, den as usize, 1)?;
            let query = CapacityQuery { constellation: c.clone(), rate: run.rate(), channel: ChannelKind::Awgn };
            let g = shannon_limit(&query, DEFAULT_TOL_DB)?.gamma_lim_db;
            let m = select_memory(&c, run.rep(), run.alpha(), g, a.p_target)?;
            writeln!(out, "{}/{den},{},{},{g:.2},{m}", k, run.rep(), run.alpha())?;
        }
        return Ok(());
    }
    let (p, q) = parse_rate(a.rate.as_deref().unwrap_or_default())?;
    let run = RunSpec::new(p, q, 1)?;
    writeln!(out, "snr_db,bound_value")?;
    for s in grid(a.start, a.stop, a.step)? {
        let v = match a.memory {
            Some(m) => genie_bound(&c, run.rep(), run.alpha(), m, s),
            None => run_ser_bound(&c, run.rep(), run.alpha(), s),
        };
        writeln!(out, "{s},{v:e}")?;
    }
    Ok(())
}

fn capacity(a: CapacityArgs) -> Result<(), Error> {
    let c = constellation(&a.constellation)?;
    let kind: ChannelKind = a.channel.into();
    let mut out = std::io::stdout().lock();
    if let Some(rate) = a.rate {
        let (p, q) = parse_rate(&rate)?;
        let rate = Rational::new(p as u64, q as u64);
        let lim = shannon_limit(&CapacityQuery { constellation: c, rate, channel: kind }, DEFAULT_TOL_DB)?;
        writeln!(out, "{:.3}", lim.gamma_lim_db)?;
        return Ok(());
    }
    let pts = parse_grid(a.curve.as_deref().unwrap_or("-10:20:1"))?;
    writeln!(out, "snr_db,capacity_bits")?;
    for s in pts {
        writeln!(out, "{s},{:.6}", iud_capacity(&c, s, kind, a.precision).bits)?;
    }
    Ok(())
}

fn selftest() -> Result<bool, Error> {
    let mut ok = true;
    for c in selftest::run_all() {
        println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
        ok &= c.passed;
    }
    Ok(ok)
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_)
        | Error::UnknownConstellation(_)
        | Error::MalformedConstellation { .. }
        | Error::InvalidConstellation(_)
        | Error::InvalidCode(_) => 2,
        _ => 3,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let r = match cli.cmd {
        Cmd::Construct(a) => construct(a),
        Cmd::Sweep(a) => sweep(a),
        Cmd::Bounds(a) => bounds(a),
        Cmd::Capacity(a) => capacity(a),
        Cmd::Selftest => match selftest() {
            Ok(true) => Ok(()),
            Ok(false) => return ExitCode::from(3),
            Err(e) => Err(e),
        },
    };
    match r {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
