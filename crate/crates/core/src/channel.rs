//! AWGN and Rayleigh flat-fading channels with receiver-known gains.
//!
//! Fading is i.i.d. per symbol. For 2-D constellations the gain is a
//! complex coefficient `h = (X + iY) / sqrt 2` with `X, Y ~ N(0, 1)`,
//! applied as a rotation plus scaling. For 1-D constellations only the
//! magnitude `|h|` (Rayleigh, `E[|h|^2] = 1`) multiplies the scalar signal.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::constellation::LabeledConstellation;
use crate::message::{self, ProbMessage};
use crate::runcode::{GroupVector, Symbol};
use crate::{Error, Result};

/// Received samples plus everything the receiver knows about the channel.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelRealization {
    dim: usize,
    /// Flat, `dim` reals per symbol.
    y: Vec<f64>,
    /// One magnitude per symbol (`dim == 1`) or one `(re, im)` pair per
    /// symbol (`dim == 2`).
    gains: Option<Vec<f64>>,
    sigma: f64,
}

impl ChannelRealization {
    pub fn new(y: Vec<f64>, gains: Option<Vec<f64>>, sigma: f64, dim: usize) -> Result<Self> {
        if !(sigma > 0.0) {
            return Err(Error::NonPositiveSigma(sigma));
        }
        if y.len() % dim != 0 {
            return Err(Error::LengthMismatch { expected: y.len() / dim * dim, actual: y.len() });
        }
        if let Some(g) = &gains {
            if g.len() != y.len() {
                return Err(Error::LengthMismatch { expected: y.len(), actual: g.len() });
            }
        }
        Ok(Self { dim, y, gains, sigma })
    }

    pub fn len(&self) -> usize {
        self.y.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn gains(&self) -> Option<&[f64]> {
        self.gains.as_deref()
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
}

/// `h * s` for a 1-D magnitude or 2-D complex gain.
#[inline]
fn apply_gain(h: &[f64], s: &[f64], out: &mut [f64; 2]) {
    match s.len() {
        1 => out[0] = h[0] * s[0],
        _ => {
            out[0] = h[0] * s[0] - h[1] * s[1];
            out[1] = h[0] * s[1] + h[1] * s[0];
        }
    }
}

/// `y_j = phi(symbol_j) + z_j`.
pub fn transmit_awgn<R: Rng + ?Sized>(
    c: &LabeledConstellation,
    symbols: &GroupVector,
    sigma: f64,
    rng: &mut R,
) -> Result<ChannelRealization> {
    transmit_with_gains(c, symbols, None, sigma, rng)
}

/// `y_j = h_j phi(symbol_j) + z_j` with explicit gains; `None` means `h = 1`.
///
/// Noise is drawn from `rng` in symbol order, one draw per dimension.
pub fn transmit_with_gains<R: Rng + ?Sized>(
    c: &LabeledConstellation,
    symbols: &GroupVector,
    gains: Option<Vec<f64>>,
    sigma: f64,
    rng: &mut R,
) -> Result<ChannelRealization> {
    if symbols.q() != c.q() {
        return Err(Error::AlphabetMismatch { expected: c.q(), actual: symbols.q() });
    }
    let dim = c.dim();
    let mut y = Vec::with_capacity(symbols.len() * dim);
    let mut hs = [0.0; 2];
    for (j, &u) in symbols.symbols().iter().enumerate() {
        let s = c.signal(u as usize);
        match &gains {
            Some(g) => apply_gain(&g[j * dim..(j + 1) * dim], s, &mut hs),
            None => hs[..dim].copy_from_slice(s),
        }
        for &x in &hs[..dim] {
            let z: f64 = rng.sample(StandardNormal);
            y.push(x + sigma * z);
        }
    }
    ChannelRealization::new(y, gains, sigma, dim)
}

/// Draws `n` i.i.d. Rayleigh gains with `E[|h|^2] = 1` for a `dim`-dimensional
/// constellation.
pub fn rayleigh_gains<R: Rng + ?Sized>(n: usize, dim: usize, rng: &mut R) -> Vec<f64> {
    let mut g = Vec::with_capacity(n * dim);
    for _ in 0..n {
        let x: f64 = rng.sample(StandardNormal);
        let y: f64 = rng.sample(StandardNormal);
        let (re, im) = (x * std::f64::consts::FRAC_1_SQRT_2, y * std::f64::consts::FRAC_1_SQRT_2);
        if dim == 1 {
            g.push(re.hypot(im));
        } else {
            g.push(re);
            g.push(im);
        }
    }
    g
}

/// Rayleigh flat fading with perfect CSI. Gains come from `fading_rng`,
/// noise from `noise_rng`.
pub fn transmit_rayleigh<R: Rng + ?Sized, F: Rng + ?Sized>(
    c: &LabeledConstellation,
    symbols: &GroupVector,
    sigma: f64,
    noise_rng: &mut R,
    fading_rng: &mut F,
) -> Result<ChannelRealization> {
    let gains = rayleigh_gains(symbols.len(), c.dim(), fading_rng);
    transmit_with_gains(c, symbols, Some(gains), sigma, noise_rng)
}

/// Writes `P_j(v) ~ exp(-||y_j - h_j phi(v + w_j)||^2 / 2 sigma^2)` for
/// every symbol into `out` (flat, `q` entries per symbol).
pub fn evidence_into(c: &LabeledConstellation, real: &ChannelRealization, dither: &[Symbol], out: &mut [f64]) {
    let q = c.q();
    let dim = c.dim();
    let inv2s2 = 1.0 / (2.0 * real.sigma * real.sigma);
    let mut hs = [0.0; 2];
    for (j, w) in dither.iter().enumerate() {
        let y = &real.y[j * dim..(j + 1) * dim];
        let o = &mut out[j * q..(j + 1) * q];
        let w = *w as usize;
        for (v, ov) in o.iter_mut().enumerate() {
            let idx = if v + w >= q { v + w - q } else { v + w };
            let s = c.signal(idx);
            let d2 = match &real.gains {
                Some(g) => {
                    apply_gain(&g[j * dim..(j + 1) * dim], s, &mut hs);
                    y.iter().zip(&hs).map(|(a, b)| (a - b) * (a - b)).sum::<f64>()
                }
                None => y.iter().zip(s).map(|(a, b)| (a - b) * (a - b)).sum::<f64>(),
            };
            *ov = -d2 * inv2s2;
        }
        let m = o.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        for x in o.iter_mut() {
            *x = (*x - m).exp();
        }
        message::normalize(o);
    }
}

/// Channel evidence per symbol, compensating the dither `w`.
pub fn channel_evidence(c: &LabeledConstellation, real: &ChannelRealization, dither: &GroupVector) -> Result<Vec<ProbMessage>> {
    if real.dim != c.dim() {
        return Err(Error::InvalidConstellation(format!("realization has dimension {}, constellation {}", real.dim, c.dim())));
    }
    if dither.len() != real.len() {
        return Err(Error::LengthMismatch { expected: real.len(), actual: dither.len() });
    }
    if dither.q() != c.q() {
        return Err(Error::AlphabetMismatch { expected: c.q(), actual: dither.q() });
    }
    let q = c.q();
    let mut out = vec![0.0; real.len() * q];
    evidence_into(c, real, dither.symbols(), &mut out);
    out.chunks(q).map(|p| ProbMessage::new(p.to_vec())).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{substream, Purpose};
    use crate::runcode::channel_priors;

    fn bpsk() -> LabeledConstellation {
        LabeledConstellation::builtin("BPSK").unwrap()
    }

    #[test]
    fn prior_examples() {
        let c = bpsk();
        let w = GroupVector::zeros(2, 1);
        let p = channel_priors(&c, &[0.0], &w, 1.0).unwrap();
        assert!((p[0][0] - 0.5).abs() < 1e-15);

        let p = channel_priors(&c, &[1.0], &w, 1.0).unwrap();
        assert!((p[0][0] / p[0][1] - 2f64.exp()).abs() < 1e-12);
        assert!((p[0][0] - 0.880_797_077_977_882_3).abs() < 1e-12);

        // noiseless limit
        let w = GroupVector::new(2, vec![1]).unwrap();
        let p = channel_priors(&c, &[-1.0], &w, 1e-6).unwrap();
        assert!(p[0][1] < 1e-200);

        assert!(matches!(channel_priors(&c, &[0.0], &w, 0.0), Err(Error::NonPositiveSigma(_))));
    }

    #[test]
    fn evidence_with_gain() {
        let c = bpsk();
        let real = ChannelRealization::new(vec![2.0], Some(vec![2.0]), 1.0, 1).unwrap();
        let p = channel_evidence(&c, &real, &GroupVector::zeros(2, 1)).unwrap();
        assert!((p[0][0] / p[0][1] - 8f64.exp()).abs() / 8f64.exp() < 1e-12);

        // scaled down by a weak gain, still peaks at the sent symbol
        let pam = LabeledConstellation::builtin("4-PAM").unwrap();
        for u in 0..4 {
            let y = 0.5 * pam.signal(u)[0];
            let real = ChannelRealization::new(vec![y], Some(vec![0.5]), 1e-3, 1).unwrap();
            let p = channel_evidence(&pam, &real, &GroupVector::zeros(4, 1)).unwrap();
            assert_eq!(message::argmax(p[0].as_slice()), u);
        }
    }

    #[test]
    fn evidence_compensates_dither_in_2d() {
        let c = LabeledConstellation::builtin("8-PSK").unwrap();
        let mut rng = substream(3, Purpose::Noise, 0, 0);
        let mut frng = substream(3, Purpose::Fading, 0, 0);
        let v = GroupVector::random(8, 64, &mut rng);
        let w = GroupVector::random(8, 64, &mut rng);
        let sent = v.add(&w).unwrap();
        let real = transmit_rayleigh(&c, &sent, 1e-4, &mut rng, &mut frng).unwrap();
        let p = channel_evidence(&c, &real, &w).unwrap();
        for (m, &s) in p.iter().zip(v.symbols()) {
            assert_eq!(message::argmax(m.as_slice()), s as usize);
        }
    }

    #[test]
    fn awgn_reproducible_and_noiseless() {
        let c = LabeledConstellation::builtin("16-QAM").unwrap();
        let mut r = substream(1, Purpose::Data, 0, 0);
        let s = GroupVector::random(16, 100, &mut r);
        let a = transmit_awgn(&c, &s, 0.3, &mut substream(9, Purpose::Noise, 0, 0)).unwrap();
        let b = transmit_awgn(&c, &s, 0.3, &mut substream(9, Purpose::Noise, 0, 0)).unwrap();
        assert_eq!(a, b);
        let z = transmit_awgn(&c, &s, 1e-300, &mut substream(9, Purpose::Noise, 0, 0)).unwrap();
        for (j, &u) in s.symbols().iter().enumerate() {
            assert_eq!(&z.y()[2 * j..2 * j + 2], c.signal(u as usize));
        }
    }

    #[test]
    fn unit_gains_match_awgn() {
        let c = LabeledConstellation::builtin("8-PSK").unwrap();
        let s = GroupVector::random(8, 50, &mut substream(1, Purpose::Data, 0, 0));
        let a = transmit_awgn(&c, &s, 0.7, &mut substream(2, Purpose::Noise, 0, 0)).unwrap();
        let unit: Vec<f64> = (0..50).flat_map(|_| [1.0, 0.0]).collect();
        let b = transmit_with_gains(&c, &s, Some(unit), 0.7, &mut substream(2, Purpose::Noise, 0, 0)).unwrap();
        assert_eq!(a.y(), b.y());
    }

    #[test]
    fn noise_variance() {
        let c = bpsk();
        let n = 1_000_000;
        let s = GroupVector::zeros(2, n);
        let real = transmit_awgn(&c, &s, 0.8, &mut substream(5, Purpose::Noise, 0, 0)).unwrap();
        let var = real.y().iter().map(|y| (y - 1.0) * (y - 1.0)).sum::<f64>() / n as f64;
        assert!((var / 0.64 - 1.0).abs() < 0.01, "{var}");
    }

    #[test]
    fn rayleigh_power() {
        for dim in [1, 2] {
            let g = rayleigh_gains(1_000_000, dim, &mut substream(5, Purpose::Fading, 0, 0));
            let p = g.iter().map(|x| x * x).sum::<f64>() / 1e6;
            assert!((p - 1.0).abs() < 0.01, "{dim}: {p}");
            if dim == 1 {
                assert!(g.iter().all(|&h| h > 0.0));
            }
        }
    }
}
