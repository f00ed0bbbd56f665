use std::fmt;

use crate::analysis::select_memory;
use crate::bmst::BmstSpec;
use crate::capacity::{shannon_limit, CapacityQuery, ChannelKind, DEFAULT_TOL_DB};
use crate::constellation::LabeledConstellation;
use crate::runcode::RunSpec;
use crate::{Error, Rational, Result};

use super::DEFAULT_BLOCKS;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConstructOptions {
    /// Use this Shannon limit instead of computing it.
    pub gamma_lim_db: Option<f64>,
    pub blocks: usize,
    pub interleaver_seed: u64,
}

impl Default for ConstructOptions {
    fn default() -> Self {
        Self { gamma_lim_db: None, blocks: DEFAULT_BLOCKS, interleaver_seed: 0 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GammaSource {
    Pinned,
    Computed,
}

/// Intermediate values of the construction, in table order.
#[derive(Clone, Debug, PartialEq)]
pub struct ConstructionReport {
    pub constellation: String,
    pub rate: Rational,
    pub n: u64,
    pub alpha: Rational,
    pub gamma_lim_db: f64,
    pub gamma_source: GammaSource,
    pub memory: usize,
    pub p_target: f64,
    pub code_len: usize,
    pub warnings: Vec<String>,
}

impl fmt::Display for ConstructionReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let src = match self.gamma_source {
            GammaSource::Pinned => "pinned",
            GammaSource::Computed => "computed",
        };
        writeln!(f, "constellation  {}", self.constellation)?;
        writeln!(f, "rate           {}", self.rate)?;
        writeln!(f, "N              {}", self.n)?;
        writeln!(f, "alpha          {}", self.alpha)?;
        writeln!(f, "gamma_lim_db   {:.2} ({src})", self.gamma_lim_db)?;
        writeln!(f, "m              {}", self.memory)?;
        writeln!(f, "p_target       {:e}", self.p_target)?;
        write!(f, "QB             {}", self.code_len)?;
        for w in &self.warnings {
            write!(f, "\nwarning: {w}")?;
        }
        Ok(())
    }
}

/// Builds a BMST-RUN code for rate `P/Q`: time-sharing parameters, Shannon
/// limit, the smallest memory whose genie bound meets `p_target` at the
/// limit, and the interleavers.
pub fn construct_code(
    c: &LabeledConstellation,
    p: usize,
    q: usize,
    b: usize,
    p_target: f64,
    channel: ChannelKind,
    opts: ConstructOptions,
) -> Result<(BmstSpec, ConstructionReport)> {
    if !(p_target > 0.0 && p_target < 1.0) {
        return Err(Error::InvalidCode(format!("p_target must lie in (0, 1), got {p_target}")));
    }
    let run = RunSpec::new(p, q, b)?;
    let (n, alpha) = (run.rep() as u64, run.alpha());
    let (gamma, source) = match opts.gamma_lim_db {
        Some(g) => (g, GammaSource::Pinned),
        None => {
            let query = CapacityQuery { constellation: c.clone(), rate: run.rate(), channel };
            (shannon_limit(&query, DEFAULT_TOL_DB)?.gamma_lim_db, GammaSource::Computed)
        }
    };
    let memory = select_memory(c, run.rep(), alpha, gamma, p_target)?;
    let mut warnings = Vec::new();
    if run.total_code() < 1000 {
        warnings.push(format!("QB = {} is below 1000; the genie bound may be optimistic", run.total_code()));
    }
    let spec = BmstSpec::new(run.clone(), memory, opts.interleaver_seed, opts.blocks)?;
    let report = ConstructionReport {
        constellation: c.name().to_string(),
        rate: run.rate(),
        n,
        alpha,
        gamma_lim_db: gamma,
        gamma_source: source,
        memory,
        p_target,
        code_len: run.total_code(),
        warnings,
    };
    Ok((spec, report))
}
