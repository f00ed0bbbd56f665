use std::time::Instant;

use rayon::prelude::*;

use super::config::SimConfig;
use super::SimResult;
use crate::bmst::{bmst_encode, BmstSpec, SwdDecoder};
use crate::capacity::ChannelKind;
use crate::channel::{channel_evidence, transmit_awgn, transmit_rayleigh, ChannelRealization};
use crate::constellation::LabeledConstellation;
use crate::rng::{substream, Purpose};
use crate::runcode::{hard_decision, run_encode, siso_decode, GroupVector, RunSpec};
use crate::{DecoderOptions, Error, Result};

/// Everything needed to simulate one frame, fixed for a sweep.
#[derive(Clone, Debug)]
pub struct Trial {
    pub constellation: LabeledConstellation,
    pub run: RunSpec,
    /// `None` for the bare RUN code.
    pub bmst: Option<BmstSpec>,
    pub channel: ChannelKind,
    pub dither: bool,
    /// Data blocks per frame.
    pub blocks: usize,
    pub decoder: DecoderOptions,
}

/// One transmitted frame: data, dither and what the receiver saw.
#[derive(Clone, Debug)]
pub struct Frame {
    pub u: Vec<GroupVector>,
    pub dither: Vec<GroupVector>,
    pub received: Vec<ChannelRealization>,
}

impl Trial {
    pub fn from_config(cfg: &SimConfig) -> Result<Self> {
        let bmst = cfg.bmst_spec()?;
        Ok(Self {
            constellation: cfg.constellation()?,
            run: cfg.run_spec()?,
            blocks: bmst.as_ref().map_or(cfg.code.blocks, BmstSpec::blocks),
            bmst,
            channel: cfg.channel,
            dither: cfg.dither,
            decoder: cfg.decoder_options(),
        })
    }

    /// Information symbols per frame; only data blocks count.
    pub fn symbols_per_frame(&self) -> usize {
        self.blocks * self.run.total_info()
    }

    /// Draws frame `index` of grid point `point`. Data, dither, noise and
    /// fading come from separate substreams keyed on `(point, index)`.
    pub fn draw(&self, sigma: f64, seed: u64, point: usize, index: u64) -> Result<Frame> {
        let c = &self.constellation;
        let q = c.q();
        let (a, b) = (point as u64, index);
        let mut data = substream(seed, Purpose::Data, a, b);
        let mut dith = substream(seed, Purpose::Dither, a, b);
        let mut noise = substream(seed, Purpose::Noise, a, b);
        let mut fading = substream(seed, Purpose::Fading, a, b);
        let u: Vec<GroupVector> =
            (0..self.blocks).map(|_| GroupVector::random(q, self.run.total_info(), &mut data)).collect();
        let coded = match &self.bmst {
            Some(spec) => bmst_encode(spec, &u)?,
            None => u.iter().map(|x| run_encode(&self.run, x)).collect::<Result<_>>()?,
        };
        let n = self.run.total_code();
        let dither: Vec<GroupVector> = coded
            .iter()
            .map(|_| if self.dither { GroupVector::random(q, n, &mut dith) } else { GroupVector::zeros(q, n) })
            .collect();
        let received = coded
            .iter()
            .zip(&dither)
            .map(|(x, w)| {
                let s = x.add(w)?;
                match self.channel {
                    ChannelKind::Awgn => transmit_awgn(c, &s, sigma, &mut noise),
                    ChannelKind::Rayleigh => transmit_rayleigh(c, &s, sigma, &mut noise, &mut fading),
                }
            })
            .collect::<Result<_>>()?;
        Ok(Frame { u, dither, received })
    }

    /// Decoded information blocks.
    pub fn decode(&self, frame: &Frame) -> Result<Vec<GroupVector>> {
        let c = &self.constellation;
        match &self.bmst {
            Some(spec) => {
                Ok(SwdDecoder::new(spec, c, self.decoder.clone()).decode(&frame.received, Some(&frame.dither))?.decisions)
            }
            None => frame
                .received
                .iter()
                .zip(&frame.dither)
                .map(|(y, w)| {
                    let (app, _) = siso_decode(&self.run, &channel_evidence(c, y, w)?)?;
                    GroupVector::new(c.q(), app.iter().map(hard_decision).collect())
                })
                .collect(),
        }
    }
}

/// `(symbol errors, bit errors)` between two block sequences, bits taken
/// from the natural binary expansion of the symbol index.
pub fn count_errors(truth: &[GroupVector], est: &[GroupVector]) -> (u64, u64) {
    let mut se = 0;
    let mut be = 0;
    for (a, b) in truth.iter().zip(est) {
        for (&x, &y) in a.symbols().iter().zip(b.symbols()) {
            if x != y {
                se += 1;
                be += u64::from((x ^ y).count_ones());
            }
        }
    }
    (se, be)
}

/// `ceil(log2 q)`.
pub fn bits_per_symbol(q: usize) -> u32 {
    usize::BITS - (q - 1).leading_zeros()
}

/// One grid point of a sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct SimRow {
    pub snr_db: f64,
    pub frames: u64,
    pub symbols: u64,
    pub symbol_errors: u64,
    pub ser: f64,
    pub ser_stderr: f64,
    pub bit_errors: u64,
    pub ber: f64,
    pub wall_seconds: f64,
}

impl SimRow {
    pub fn from_counts(snr_db: f64, frames: u64, symbols: u64, symbol_errors: u64, bit_errors: u64, bits: u64, wall_seconds: f64) -> Self {
        let ser = symbol_errors as f64 / symbols as f64;
        Self {
            snr_db,
            frames,
            symbols,
            symbol_errors,
            ser,
            ser_stderr: (ser * (1.0 - ser) / symbols as f64).sqrt(),
            bit_errors,
            ber: bit_errors as f64 / bits as f64,
            wall_seconds,
        }
    }
}

/// Runs the sweep on `workers` threads (all cores when `None`).
///
/// Frames are simulated in parallel batches but accumulated strictly in
/// frame order, and the stop rule is checked after every frame, so the
/// counts do not depend on the number of workers.
pub fn run_sweep(cfg: &SimConfig, workers: Option<usize>) -> Result<SimResult> {
    cfg.validate()?;
    let trial = Trial::from_config(cfg)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.unwrap_or(0))
        .build()
        .map_err(|e| Error::Config(e.to_string()))?;
    let batch = (pool.current_num_threads() * 2) as u64;
    let per_frame = trial.symbols_per_frame() as u64;
    let bits = u64::from(bits_per_symbol(trial.constellation.q()));
    let mut rows = Vec::new();
    for (point, &snr_db) in cfg.snr.points().iter().enumerate() {
        let sigma = cfg.sigma.unwrap_or_else(|| trial.constellation.sigma_from_snr(snr_db).sigma());
        let start = Instant::now();
        let (mut frames, mut se, mut be) = (0u64, 0u64, 0u64);
        'frames: while frames < cfg.stop.max_frames {
            let first = frames;
            let last = (first + batch).min(cfg.stop.max_frames);
            let counts: Vec<(u64, u64)> = pool.install(|| {
                (first..last)
                    .into_par_iter()
                    .map(|i| {
                        let f = trial.draw(sigma, cfg.seed, point, i)?;
                        Ok(count_errors(&f.u, &trial.decode(&f)?))
                    })
                    .collect::<Result<_>>()
            })?;
            for (s, b) in counts {
                frames += 1;
                se += s;
                be += b;
                if se >= cfg.stop.min_symbol_errors {
                    break 'frames;
                }
            }
        }
        let row = SimRow::from_counts(snr_db, frames, frames * per_frame, se, be, frames * per_frame * bits, start.elapsed().as_secs_f64());
        log::info!("snr {snr_db} dB: {frames} frames, SER {:.3e}, BER {:.3e}", row.ser, row.ber);
        rows.push(row);
    }
    Ok(SimResult { rows, meta: super::Metadata::for_config(cfg) })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(text: &str) -> SimConfig {
        SimConfig::from_toml(text).unwrap()
    }

    const UNCODED: &str = r#"
schema_version = 1
constellation = "BPSK"
seed = 11
[code]
p = 1
q = 1
b = 1000
blocks = 5
[snr]
points = [6.0206]
[stop]
min_symbol_errors = 400
max_frames = 200
"#;

    #[test]
    fn bits_per_symbol_values() {
        let got: Vec<u32> = [2, 3, 4, 5, 8, 16, 17].iter().map(|&q| bits_per_symbol(q)).collect();
        assert_eq!(got, vec![1, 2, 2, 3, 3, 4, 5]);
    }

    #[test]
    fn uncoded_bpsk_matches_q2() {
        let r = run_sweep(&cfg(UNCODED), None).unwrap();
        let row = &r.rows[0];
        assert!(row.symbol_errors >= 400);
        assert!((row.ser - 0.02275).abs() < 3.0 * row.ser_stderr, "{row:?}");
        assert_eq!(row.ber, row.ser);
    }

    #[test]
    fn noiseless_override() {
        let text = UNCODED.replace("seed = 11", "seed = 11\nsigma = 1e-9").replace("max_frames = 200", "max_frames = 1");
        let r = run_sweep(&cfg(&text), None).unwrap();
        assert_eq!((r.rows[0].frames, r.rows[0].symbol_errors), (1, 0));
    }

    #[test]
    fn worker_count_does_not_matter() {
        let text = r#"
schema_version = 1
constellation = "4-PAM"
channel = "rayleigh"
seed = 5
[code]
p = 1
q = 2
b = 20
memory = 1
blocks = 4
[snr]
points = [4.0, 6.0]
[stop]
min_symbol_errors = 30
max_frames = 40
"#;
        let c = cfg(text);
        let a = run_sweep(&c, Some(1)).unwrap();
        let b = run_sweep(&c, Some(8)).unwrap();
        for (x, y) in a.rows.iter().zip(&b.rows) {
            assert_eq!((x.frames, x.symbol_errors, x.bit_errors), (y.frames, y.symbol_errors, y.bit_errors));
        }
        assert_eq!(a.meta, b.meta);
    }

    #[test]
    fn error_counting() {
        let a = vec![GroupVector::new(8, vec![0, 7, 3]).unwrap()];
        let b = vec![GroupVector::new(8, vec![1, 7, 4]).unwrap()];
        assert_eq!(count_errors(&a, &b), (2, 4));
    }
}
