//! Block Markov superposition transmission (BMST) of RUN codes over the
//! modulo-q group.
//!
//! A RUN code time-shares repetition codes `C[N+1,1]`, `C[N,1]` (and uncoded
//! transmission) to hit any rational rate `P/Q` over an arbitrary labeled
//! signal set. Spatially coupling `B`-fold products of such codes with `m`
//! interleaved copies of past codewords yields the BMST-RUN code, decoded by
//! iterative message passing over a sliding window.
//!
//! Layout:
//!
//! * [`constellation`]: labeled signal sets and the SNR/noise convention.
//! * [`message`]: probability messages and the node kernels shared by the
//!   decoders.
//! * [`runcode`]: RUN encoding, dithering, demapping and SISO decoding.
//! * [`analysis`]: distance enumerators, union and genie-aided bounds, memory
//!   selection.
//! * [`capacity`]: i.u.d.-input capacity and Shannon-limit search.
//! * [`channel`]: AWGN and Rayleigh channels and channel evidence.
//! * [`bmst`]: the coupled encoder and the sliding-window decoder.
//! * [`sim`]: configuration, code construction, Monte Carlo sweeps, CSV.

pub mod analysis;
pub mod bmst;
pub mod capacity;
pub mod channel;
pub mod constellation;
mod error;
pub mod message;
pub mod rng;
pub mod runcode;
pub mod selftest;
pub mod sim;

pub use analysis::{EdefPolynomial, q_function};
pub use bmst::{BmstSpec, DecoderOptions, TrailingEdge};
pub use sim::{SimConfig, SimResult};
pub use capacity::{CapacityQuery, ChannelKind};
pub use channel::ChannelRealization;
pub use constellation::{LabeledConstellation, NoiseScale};
pub use error::{Error, Result};
pub use message::ProbMessage;
pub use runcode::{GroupVector, RunSpec, Symbol};

/// Rational number type used for rates and time-sharing factors.
pub type Rational = num_rational::Ratio<u64>;
