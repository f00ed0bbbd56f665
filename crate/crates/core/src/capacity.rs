//! Constrained capacity with independent uniformly distributed inputs and
//! the Shannon-limit search.
//!
//! ```text
//! I = log2 q - E[ log2 sum_{s'} exp((||y - h s||^2 - ||y - h s'||^2) / 2 sigma^2) ]
//! ```
//!
//! The expectation is estimated by Monte Carlo. Every sample draws one noise
//! vector (and one fading gain) and averages the integrand over all `q`
//! transmitted points, which stratifies over the input. Samples come in
//! fixed-size batches, each with its own substream, and batches are reduced
//! in index order, so the estimate depends only on the seed.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::channel::rayleigh_gains;
use crate::constellation::LabeledConstellation;
use crate::rng::{substream, Purpose};
use crate::{Error, Rational, Result};

const BATCH: usize = 1024;
const BATCHES_PER_ROUND: usize = 32;
const MIN_BATCHES: usize = 4;
/// Upper limit on Monte Carlo samples per capacity evaluation.
pub const MAX_SAMPLES: usize = 1 << 23;
/// Default bisection tolerance for [`shannon_limit`].
pub const DEFAULT_TOL_DB: f64 = 0.05;
/// Bisection bracket in dB.
pub const BRACKET_DB: (f64, f64) = (-20.0, 30.0);
/// Seed used when none is given.
pub const DEFAULT_SEED: u64 = 0x5eed_cafe;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChannelKind {
    #[default]
    Awgn,
    Rayleigh,
}

/// A capacity estimate with its Monte Carlo standard error.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CapacityEstimate {
    pub bits: f64,
    pub stderr: f64,
    pub samples: usize,
}

#[derive(Clone, Debug)]
pub struct CapacityQuery {
    pub constellation: LabeledConstellation,
    /// Code rate in symbols per channel use, `P/Q`.
    pub rate: Rational,
    pub channel: ChannelKind,
}

impl CapacityQuery {
    /// `rate * log2 q`, bits per channel use.
    pub fn target_bits(&self) -> f64 {
        *self.rate.numer() as f64 / *self.rate.denom() as f64 * (self.constellation.q() as f64).log2()
    }
}

#[derive(Default, Clone, Copy)]
struct Moments {
    n: usize,
    sum: f64,
    sum_sq: f64,
}

impl Moments {
    fn merge(&mut self, o: Moments) {
        self.n += o.n;
        self.sum += o.sum;
        self.sum_sq += o.sum_sq;
    }

    fn mean(&self) -> f64 {
        self.sum / self.n as f64
    }

    fn stderr(&self) -> f64 {
        let n = self.n as f64;
        let var = (self.sum_sq - self.sum * self.sum / n).max(0.0) / (n - 1.0);
        (var / n).sqrt()
    }
}

struct Integrand {
    q: usize,
    dim: usize,
    /// `s_i - s_k`, flat over `(i, k, dim)`.
    diffs: Vec<f64>,
    inv2s2: f64,
    sigma: f64,
    kind: ChannelKind,
}

impl Integrand {
    fn new(c: &LabeledConstellation, snr_db: f64, kind: ChannelKind) -> Self {
        let (q, dim) = (c.q(), c.dim());
        let mut diffs = Vec::with_capacity(q * q * dim);
        for i in 0..q {
            for k in 0..q {
                for d in 0..dim {
                    diffs.push(c.point(i)[d] - c.point(k)[d]);
                }
            }
        }
        let sigma = c.sigma_from_snr(snr_db).sigma();
        Self { q, dim, diffs, inv2s2: 1.0 / (2.0 * sigma * sigma), sigma, kind }
    }

    fn batch(&self, seed: u64, index: usize) -> Moments {
        let mut rng = substream(seed, Purpose::Capacity, index as u64, 0);
        let log2q = (self.q as f64).log2();
        let mut m = Moments::default();
        let mut z = [0.0; 2];
        let mut h = [1.0, 0.0];
        let mut expo = vec![0.0; self.q];
        for _ in 0..BATCH {
            for zd in z.iter_mut().take(self.dim) {
                *zd = self.sigma * rng.sample::<f64, _>(StandardNormal);
            }
            if self.kind == ChannelKind::Rayleigh {
                let g = rayleigh_gains(1, self.dim, &mut rng);
                h[..self.dim].copy_from_slice(&g);
            }
            let z2: f64 = z[..self.dim].iter().map(|x| x * x).sum();
            let mut acc = 0.0;
            for i in 0..self.q {
                // y - h s_k = z + h (s_i - s_k)
                for (k, e) in expo.iter_mut().enumerate() {
                    let d = &self.diffs[(i * self.q + k) * self.dim..(i * self.q + k + 1) * self.dim];
                    let r2 = if self.dim == 1 {
                        let r = z[0] + h[0] * d[0];
                        r * r
                    } else {
                        let r0 = z[0] + h[0] * d[0] - h[1] * d[1];
                        let r1 = z[1] + h[0] * d[1] + h[1] * d[0];
                        r0 * r0 + r1 * r1
                    };
                    *e = (z2 - r2) * self.inv2s2;
                }
                let mx = expo.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let lse = mx + expo.iter().map(|e| (e - mx).exp()).sum::<f64>().ln();
                acc += lse * std::f64::consts::LOG2_E;
            }
            let v = log2q - acc / self.q as f64;
            m.n += 1;
            m.sum += v;
            m.sum_sq += v * v;
        }
        m
    }
}

/// Monte Carlo estimate of the i.u.d.-input capacity in bits per channel
/// use, run until the standard error drops below `precision` (or
/// [`MAX_SAMPLES`] is reached).
pub fn iud_capacity(c: &LabeledConstellation, snr_db: f64, kind: ChannelKind, precision: f64) -> CapacityEstimate {
    iud_capacity_seeded(c, snr_db, kind, precision, DEFAULT_SEED)
}

pub fn iud_capacity_seeded(c: &LabeledConstellation, snr_db: f64, kind: ChannelKind, precision: f64, seed: u64) -> CapacityEstimate {
    let f = Integrand::new(c, snr_db, kind);
    let mut total = Moments::default();
    let mut next = 0;
    'outer: while total.n < MAX_SAMPLES {
        let round: Vec<Moments> =
            (next..next + BATCHES_PER_ROUND).into_par_iter().map(|b| f.batch(seed, b)).collect();
        for m in round {
            total.merge(m);
            next += 1;
            if next >= MIN_BATCHES && (total.stderr() < precision || total.n >= MAX_SAMPLES) {
                break 'outer;
            }
        }
    }
    CapacityEstimate { bits: total.mean(), stderr: total.stderr(), samples: total.n }
}

/// Result of a Shannon-limit search.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ShannonLimit {
    pub gamma_lim_db: f64,
    pub target_bits: f64,
    /// Capacity estimate at the returned SNR.
    pub capacity: CapacityEstimate,
}

/// Standard-error target for a bracket `width_db` wide.
fn precision_for(width_db: f64) -> f64 {
    (0.004 * width_db).clamp(1.5e-4, 0.05)
}

/// Minimum SNR (dB) at which the i.u.d. capacity reaches `rate log2 q`,
/// by bisection on [`BRACKET_DB`].
pub fn shannon_limit(query: &CapacityQuery, tol_db: f64) -> Result<ShannonLimit> {
    let target = query.target_bits();
    let c = &query.constellation;
    let log2q = (c.q() as f64).log2();
    if !(tol_db > 0.0) {
        return Err(Error::InvalidCode(format!("tolerance must be positive, got {tol_db}")));
    }
    let (mut lo, mut hi) = BRACKET_DB;
    if !(target > 0.0 && target < log2q)
        || iud_capacity(c, hi, query.channel, precision_for(hi - lo)).bits < target
        || iud_capacity(c, lo, query.channel, precision_for(hi - lo)).bits > target
    {
        return Err(Error::BracketFailure { target, lo_db: lo, hi_db: hi });
    }
    while hi - lo > tol_db {
        let mid = 0.5 * (lo + hi);
        let est = iud_capacity(c, mid, query.channel, precision_for(hi - lo));
        if est.bits < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let gamma = 0.5 * (lo + hi);
    Ok(ShannonLimit { gamma_lim_db: gamma, target_bits: target, capacity: iud_capacity(c, gamma, query.channel, precision_for(0.0)) })
}
