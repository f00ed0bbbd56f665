//! Block Markov superposition transmission of RUN codes.
//!
//! At time `t` the transmitted block is
//!
//! ```text
//! c(t) = v(t) + w(t,1) + ... + w(t,m)   (mod q),   w(t,i)[j] = v(t-i)[pi_i[j]]
//! ```
//!
//! where `v(t)` is the RUN codeword of the `t`-th data block, `v(t) = 0` for
//! `t < 0` and for the `m` termination blocks `L <= t < L + m`.

mod decoder;
mod dump;
mod encoder;
mod interleave;

pub use decoder::{swd_decode, DecodeOutput, DecoderOptions, SwdDecoder, TraceRecord, TrailingEdge};
pub use dump::{write_frame_dump, write_trace};
pub use encoder::{bmst_encode, bmst_encode_codewords};
pub use interleave::make_interleavers;

use std::sync::Arc;

use crate::runcode::RunSpec;
use crate::{Error, Rational, Result};

/// Default iteration cap per window position.
pub const DEFAULT_MAX_ITERS: usize = 18;

/// Parameters of a terminated BMST-RUN code.
#[derive(Clone, Debug, PartialEq)]
pub struct BmstSpec {
    basic: RunSpec,
    memory: usize,
    interleaver_seed: u64,
    blocks: usize,
    delay: usize,
    max_iters: usize,
    interleavers: Arc<Vec<Vec<u32>>>,
}

impl BmstSpec {
    /// Builds the spec with decoding delay `3 m` and 18 iterations; the `m`
    /// interleavers are generated from `interleaver_seed`.
    pub fn new(basic: RunSpec, memory: usize, interleaver_seed: u64, blocks: usize) -> Result<Self> {
        if blocks == 0 {
            return Err(Error::InvalidCode("L must be at least 1".into()));
        }
        let interleavers = make_interleavers(interleaver_seed, memory, basic.total_code());
        Ok(Self {
            basic,
            memory,
            interleaver_seed,
            blocks,
            delay: 3 * memory,
            max_iters: DEFAULT_MAX_ITERS,
            interleavers: Arc::new(interleavers),
        })
    }

    pub fn with_delay(mut self, delay: usize) -> Self {
        self.delay = delay;
        self
    }

    pub fn with_max_iters(mut self, max_iters: usize) -> Self {
        self.max_iters = max_iters.max(1);
        self
    }

    /// Replaces the generated interleavers, e.g. to pin a regression fixture.
    pub fn with_interleavers(mut self, perms: Vec<Vec<u32>>) -> Result<Self> {
        if perms.len() != self.memory {
            return Err(Error::InvalidCode(format!("expected {} interleavers, got {}", self.memory, perms.len())));
        }
        let n = self.basic.total_code();
        for p in &perms {
            let mut seen = vec![false; n];
            if p.len() != n || p.iter().any(|&x| (x as usize) >= n || std::mem::replace(&mut seen[x as usize], true)) {
                return Err(Error::InvalidCode(format!("interleaver is not a permutation of 0..{n}")));
            }
        }
        self.interleavers = Arc::new(perms);
        Ok(self)
    }

    pub fn basic(&self) -> &RunSpec {
        &self.basic
    }

    /// Encoding memory `m`.
    pub fn memory(&self) -> usize {
        self.memory
    }

    pub fn interleaver_seed(&self) -> u64 {
        self.interleaver_seed
    }

    /// Data blocks per frame, `L`.
    pub fn blocks(&self) -> usize {
        self.blocks
    }

    /// Transmitted blocks per frame, `L + m`.
    pub fn total_blocks(&self) -> usize {
        self.blocks + self.memory
    }

    /// Decoding delay `d`.
    pub fn delay(&self) -> usize {
        self.delay
    }

    pub fn max_iters(&self) -> usize {
        self.max_iters
    }

    /// `pi_1 .. pi_m`.
    pub fn interleavers(&self) -> &[Vec<u32>] {
        &self.interleavers
    }

    /// Block length `Q B`.
    pub fn block_len(&self) -> usize {
        self.basic.total_code()
    }

    /// Rate after termination.
    pub fn effective_rate(&self) -> Rational {
        effective_rate(self)
    }
}

/// `L P / ((L + m) Q)`.
pub fn effective_rate(spec: &BmstSpec) -> Rational {
    Rational::new(
        (spec.blocks * spec.basic.info_len()) as u64,
        (spec.total_blocks() * spec.basic.code_len()) as u64,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn effective_rate_examples() {
        let s = BmstSpec::new(RunSpec::new(3, 8, 2).unwrap(), 0, 1, 10).unwrap();
        assert_eq!(s.effective_rate(), Rational::new(3, 8));

        let s = BmstSpec::new(RunSpec::new(1, 8, 1).unwrap(), 11, 1, 1000).unwrap();
        assert_eq!(s.effective_rate(), Rational::new(1000, 8088));
        assert!((1000.0 / 8088.0 - 0.12364f64).abs() < 1e-5);

        let rates: Vec<f64> = [10usize, 100, 10_000]
            .iter()
            .map(|&l| {
                let r = BmstSpec::new(RunSpec::new(1, 2, 1).unwrap(), 4, 1, l).unwrap().effective_rate();
                *r.numer() as f64 / *r.denom() as f64
            })
            .collect();
        assert!(rates[0] < rates[1] && rates[1] < rates[2] && rates[2] < 0.5 && 0.5 - rates[2] < 1e-3);
    }

    #[test]
    fn defaults_and_validation() {
        let s = BmstSpec::new(RunSpec::new(1, 2, 4).unwrap(), 3, 9, 5).unwrap();
        assert_eq!((s.delay(), s.max_iters(), s.total_blocks(), s.block_len()), (9, 18, 8, 8));
        assert_eq!(s.interleavers().len(), 3);
        assert!(BmstSpec::new(RunSpec::new(1, 2, 4).unwrap(), 3, 9, 0).is_err());
        assert!(s.clone().with_interleavers(vec![vec![0; 8]; 3]).is_err());
        assert!(s.with_interleavers(vec![(0..8).collect(); 2]).is_err());
    }
}
