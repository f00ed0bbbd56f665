use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::bmst::{BmstSpec, DEFAULT_MAX_ITERS};
use crate::capacity::ChannelKind;
use crate::constellation::LabeledConstellation;
use crate::message::CheckKernel;
use crate::runcode::RunSpec;
use crate::{DecoderOptions, Error, Result, TrailingEdge};

pub const SCHEMA_VERSION: u32 = 1;
/// Data blocks per frame when the config does not say.
pub const DEFAULT_BLOCKS: usize = 20;

/// A Monte Carlo sweep, as read from a TOML file.
///
/// ```toml
/// schema_version = 1
/// constellation = "BPSK"
/// channel = "awgn"
/// seed = 7
///
/// [code]
/// p = 1
/// q = 2
/// b = 500
/// memory = 2     # omit for the bare RUN code
/// blocks = 20
///
/// [snr]
/// start = 1.0
/// stop = 3.0
/// step = 0.5     # or: points = [1.0, 2.0]
///
/// [stop]
/// min_symbol_errors = 100
/// max_frames = 1000
/// ```
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub schema_version: u32,
    /// Built-in name or path of a constellation file.
    pub constellation: String,
    #[serde(default)]
    pub channel: ChannelKind,
    #[serde(default)]
    pub seed: u64,
    /// Random dither on every transmitted symbol.
    #[serde(default = "yes")]
    pub dither: bool,
    /// Forces the noise standard deviation at every grid point.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    pub code: CodeConfig,
    pub snr: SnrGrid,
    #[serde(default)]
    pub stop: StopRule,
    #[serde(default)]
    pub decoder: DecoderConfig,
}

fn yes() -> bool {
    true
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CodeConfig {
    pub p: usize,
    pub q: usize,
    pub b: usize,
    /// Encoding memory; `None` simulates the RUN code alone.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub memory: Option<usize>,
    #[serde(default = "default_blocks")]
    pub blocks: usize,
    /// Decoding delay, `3 m` by default.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delay: Option<usize>,
    #[serde(default = "default_iters")]
    pub max_iters: usize,
    #[serde(default)]
    pub interleaver_seed: u64,
}

fn default_blocks() -> usize {
    DEFAULT_BLOCKS
}

fn default_iters() -> usize {
    DEFAULT_MAX_ITERS
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
pub enum SnrGrid {
    Points { points: Vec<f64> },
    Range { start: f64, stop: f64, step: f64 },
}

impl SnrGrid {
    /// Grid points in dB; a range includes `stop` up to rounding.
    pub fn points(&self) -> Vec<f64> {
        match self {
            SnrGrid::Points { points } => points.clone(),
            SnrGrid::Range { start, stop, step } => {
                if !(*step > 0.0) || stop < start {
                    return Vec::new();
                }
                let n = ((stop - start) / step + 1e-9).floor() as usize;
                (0..=n).map(|i| start + i as f64 * step).collect()
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StopRule {
    #[serde(default = "default_min_errors")]
    pub min_symbol_errors: u64,
    #[serde(default = "default_max_frames")]
    pub max_frames: u64,
}

fn default_min_errors() -> u64 {
    100
}

fn default_max_frames() -> u64 {
    10_000
}

impl Default for StopRule {
    fn default() -> Self {
        Self { min_symbol_errors: default_min_errors(), max_frames: default_max_frames() }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecoderConfig {
    #[serde(default)]
    pub trailing_edge: TrailingEdge,
    #[serde(default)]
    pub kernel: CheckKernel,
}

impl SimConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: SimConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.schema_version != SCHEMA_VERSION {
            return bad(format!("unsupported schema_version {} (expected {SCHEMA_VERSION})", self.schema_version));
        }
        let pts = self.snr.points();
        if pts.is_empty() {
            return bad("snr grid is empty".into());
        }
        if pts.iter().any(|x| !x.is_finite()) || pts.windows(2).any(|w| w[1] <= w[0]) {
            return bad("snr grid must be finite and strictly increasing".into());
        }
        if self.stop.min_symbol_errors < 1 || self.stop.max_frames < 1 {
            return bad("stop.min_symbol_errors and stop.max_frames must be at least 1".into());
        }
        if let Some(s) = self.sigma {
            if !(s > 0.0 && s.is_finite()) {
                return bad(format!("sigma must be positive, got {s}"));
            }
        }
        if self.code.blocks == 0 || self.code.max_iters == 0 {
            return bad("code.blocks and code.max_iters must be at least 1".into());
        }
        let c = self.constellation()?;
        self.run_spec()?;
        if c.q() < 2 {
            return bad("constellation needs at least two points".into());
        }
        Ok(())
    }

    pub fn constellation(&self) -> Result<LabeledConstellation> {
        LabeledConstellation::resolve(&self.constellation).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn run_spec(&self) -> Result<RunSpec> {
        RunSpec::new(self.code.p, self.code.q, self.code.b).map_err(|e| Error::Config(e.to_string()))
    }

    /// The coupled code, or `None` for a bare RUN code.
    pub fn bmst_spec(&self) -> Result<Option<BmstSpec>> {
        let Some(m) = self.code.memory else { return Ok(None) };
        let mut spec = BmstSpec::new(self.run_spec()?, m, self.code.interleaver_seed, self.code.blocks)?
            .with_max_iters(self.code.max_iters);
        if let Some(d) = self.code.delay {
            spec = spec.with_delay(d);
        }
        Ok(Some(spec))
    }

    pub fn decoder_options(&self) -> DecoderOptions {
        DecoderOptions { trailing_edge: self.decoder.trailing_edge, kernel: self.decoder.kernel, ..Default::default() }
    }

    /// SHA-256 of the canonical TOML form, hex encoded.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.to_toml().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}
