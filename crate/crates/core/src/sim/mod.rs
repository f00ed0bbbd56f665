//! Configuration, code construction, Monte Carlo sweeps and their CSV form.

mod config;
mod construct;
mod sweep;

pub use config::{CodeConfig, DecoderConfig, SimConfig, SnrGrid, StopRule, DEFAULT_BLOCKS, SCHEMA_VERSION};
pub use construct::{construct_code, ConstructOptions, ConstructionReport, GammaSource};
pub use sweep::{bits_per_symbol, count_errors, run_sweep, Frame, SimRow, Trial};

use std::io::{BufRead, Write};
use std::path::Path;

use crate::{Error, Result};

/// Column order of the sweep CSV.
pub const CSV_COLUMNS: [&str; 9] =
    ["snr_db", "frames", "symbols", "symbol_errors", "ser", "ser_stderr", "bit_errors", "ber", "wall_seconds"];

const ACCOUNTING: &str = "information symbols of the L data blocks only";

#[derive(Clone, Debug, PartialEq)]
pub struct Metadata {
    pub config_hash: String,
    pub git_revision: String,
    pub seed: u64,
}

impl Metadata {
    pub fn for_config(cfg: &SimConfig) -> Self {
        Self { config_hash: cfg.hash(), git_revision: git_revision(), seed: cfg.seed }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimResult {
    pub rows: Vec<SimRow>,
    pub meta: Metadata,
}

fn git_revision() -> String {
    std::process::Command::new("git")
        .args(["rev-parse", "--short", "HEAD"])
        .output()
        .ok()
        .filter(|o| o.status.success())
        .and_then(|o| String::from_utf8(o.stdout).ok())
        .map(|s| s.trim().to_string())
        .filter(|s| !s.is_empty())
        .unwrap_or_else(|| "unknown".into())
}

/// Writes the result as CSV: a `#` metadata block, the header row, one row
/// per grid point.
pub fn write_csv<W: Write>(result: &SimResult, mut out: W) -> Result<()> {
    writeln!(out, "# config_hash={}", result.meta.config_hash)?;
    writeln!(out, "# git_revision={}", result.meta.git_revision)?;
    writeln!(out, "# seed={}", result.meta.seed)?;
    writeln!(out, "# symbols={ACCOUNTING}")?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_COLUMNS)?;
    for r in &result.rows {
        w.write_record([
            r.snr_db.to_string(),
            r.frames.to_string(),
            r.symbols.to_string(),
            r.symbol_errors.to_string(),
            r.ser.to_string(),
            r.ser_stderr.to_string(),
            r.bit_errors.to_string(),
            r.ber.to_string(),
            r.wall_seconds.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn emit_csv(result: &SimResult, path: impl AsRef<Path>) -> Result<()> {
    let f = std::fs::File::create(path)?;
    write_csv(result, std::io::BufWriter::new(f))
}

/// Inverse of [`write_csv`].
pub fn parse_csv(text: &str) -> Result<SimResult> {
    let mut meta = Metadata { config_hash: String::new(), git_revision: String::new(), seed: 0 };
    for line in text.as_bytes().lines() {
        let line = line?;
        let Some(kv) = line.strip_prefix('#') else { break };
        let Some((k, v)) = kv.trim().split_once('=') else { continue };
        match k {
            "config_hash" => meta.config_hash = v.into(),
            "git_revision" => meta.git_revision = v.into(),
            "seed" => meta.seed = v.parse().map_err(|_| Error::Config(format!("bad seed {v:?}")))?,
            _ => {}
        }
    }
    let mut rd = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
    if rd.headers()?.iter().ne(CSV_COLUMNS) {
        return Err(Error::Config(format!("unexpected CSV header {:?}", rd.headers()?)));
    }
    let mut rows = Vec::new();
    for rec in rd.records() {
        let rec = rec?;
        let f = |i: usize| rec[i].parse::<f64>().map_err(|_| Error::Config(format!("bad number {:?}", &rec[i])));
        let u = |i: usize| rec[i].parse::<u64>().map_err(|_| Error::Config(format!("bad count {:?}", &rec[i])));
        rows.push(SimRow {
            snr_db: f(0)?,
            frames: u(1)?,
            symbols: u(2)?,
            symbol_errors: u(3)?,
            ser: f(4)?,
            ser_stderr: f(5)?,
            bit_errors: u(6)?,
            ber: f(7)?,
            wall_seconds: f(8)?,
        });
    }
    Ok(SimResult { rows, meta })
}
