//! RUN codes: time-sharing of repetition codes `C[N+1,1]`, `C[N,1]` and
//! uncoded transmission over `Z_q`.

use rand::Rng;

use crate::channel;
use crate::constellation::LabeledConstellation;
use crate::message::{self, ProbMessage, Scratch};
use crate::{Error, Rational, Result};

/// A group symbol in `{0, ..., q-1}`.
pub type Symbol = u16;

/// Largest supported alphabet.
pub const MAX_Q: usize = Symbol::MAX as usize + 1;

/// A sequence of symbols over `Z_q`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct GroupVector {
    q: usize,
    symbols: Vec<Symbol>,
}

impl GroupVector {
    pub fn new(q: usize, symbols: Vec<Symbol>) -> Result<Self> {
        check_q(q)?;
        if let Some(&s) = symbols.iter().find(|&&s| s as usize >= q) {
            return Err(Error::InvalidCode(format!("symbol {s} out of range for q = {q}")));
        }
        Ok(Self { q, symbols })
    }

    pub fn zeros(q: usize, len: usize) -> Self {
        Self { q, symbols: vec![0; len] }
    }

    /// I.u.d. symbols.
    pub fn random<R: Rng + ?Sized>(q: usize, len: usize, rng: &mut R) -> Self {
        Self { q, symbols: (0..len).map(|_| rng.random_range(0..q) as Symbol).collect() }
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn symbols(&self) -> &[Symbol] {
        &self.symbols
    }

    pub fn symbols_mut(&mut self) -> &mut [Symbol] {
        &mut self.symbols
    }

    pub fn into_symbols(self) -> Vec<Symbol> {
        self.symbols
    }

    /// Element-wise `-self (mod q)`.
    pub fn negate(&self) -> Self {
        let q = self.q;
        Self { q, symbols: self.symbols.iter().map(|&s| ((q - s as usize) % q) as Symbol).collect() }
    }

    /// Element-wise `self + other (mod q)`.
    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        let q = self.q;
        Ok(Self {
            q,
            symbols: self.symbols.iter().zip(&other.symbols).map(|(&a, &b)| add_mod(a, b, q)).collect(),
        })
    }

    /// Element-wise `self - other (mod q)`.
    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.negate())
    }

    fn check_compatible(&self, other: &Self) -> Result<()> {
        if self.q != other.q {
            return Err(Error::AlphabetMismatch { expected: self.q, actual: other.q });
        }
        if self.len() != other.len() {
            return Err(Error::LengthMismatch { expected: self.len(), actual: other.len() });
        }
        Ok(())
    }
}

#[inline]
pub(crate) fn add_mod(a: Symbol, b: Symbol, q: usize) -> Symbol {
    let s = a as usize + b as usize;
    (if s >= q { s - q } else { s }) as Symbol
}

fn check_q(q: usize) -> Result<()> {
    if !(2..=MAX_Q).contains(&q) {
        return Err(Error::InvalidCode(format!("alphabet size q = {q} out of range 2..={MAX_Q}")));
    }
    Ok(())
}

/// Returns the unique `N >= 1` with `1/(N+1) < P/Q <= 1/N` and the
/// time-sharing factor `alpha = Q/P - N`.
pub fn time_sharing_params(p: u64, q: u64) -> Result<(u64, Rational)> {
    if p == 0 || p > q {
        return Err(Error::InvalidCode(format!("need 1 <= P <= Q, got P = {p}, Q = {q}")));
    }
    let n = q / p;
    Ok((n, Rational::new(q - n * p, p)))
}

/// Parameters of the `B`-fold Cartesian product of `C_RUN[Q, P]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RunSpec {
    info_len: usize,
    code_len: usize,
    rep: usize,
    alpha: Rational,
    folds: usize,
}

impl RunSpec {
    /// `C_RUN[code_len, info_len]^folds`.
    pub fn new(info_len: usize, code_len: usize, folds: usize) -> Result<Self> {
        if folds == 0 {
            return Err(Error::InvalidCode("B must be at least 1".into()));
        }
        let (rep, alpha) = time_sharing_params(info_len as u64, code_len as u64)?;
        Ok(Self { info_len, code_len, rep: rep as usize, alpha, folds })
    }

    /// Information symbols per RUN codeword, `P`.
    pub fn info_len(&self) -> usize {
        self.info_len
    }

    /// Coded symbols per RUN codeword, `Q`.
    pub fn code_len(&self) -> usize {
        self.code_len
    }

    /// Base repetition factor `N`.
    pub fn rep(&self) -> usize {
        self.rep
    }

    /// Time-sharing factor `alpha`.
    pub fn alpha(&self) -> Rational {
        self.alpha
    }

    pub fn alpha_f64(&self) -> f64 {
        *self.alpha.numer() as f64 / *self.alpha.denom() as f64
    }

    /// Fold count `B`.
    pub fn folds(&self) -> usize {
        self.folds
    }

    /// Symbols per fold encoded with `C[N+1,1]`, i.e. `alpha P`.
    pub fn long_groups(&self) -> usize {
        self.code_len - self.rep * self.info_len
    }

    /// Information symbols over all folds, `P B`.
    pub fn total_info(&self) -> usize {
        self.info_len * self.folds
    }

    /// Coded symbols over all folds, `Q B`.
    pub fn total_code(&self) -> usize {
        self.code_len * self.folds
    }

    pub fn rate(&self) -> Rational {
        Rational::new(self.info_len as u64, self.code_len as u64)
    }

    /// Calls `f(info_index, coded_start, group_len)` for every repetition
    /// group, folds in order. Within a fold the `alpha P` long groups come
    /// first.
    pub fn for_each_group(&self, mut f: impl FnMut(usize, usize, usize)) {
        let long = self.long_groups();
        let mut info = 0;
        let mut start = 0;
        for _ in 0..self.folds {
            for g in 0..self.info_len {
                let len = if g < long { self.rep + 1 } else { self.rep };
                f(info, start, len);
                info += 1;
                start += len;
            }
        }
    }
}

/// RUN encoding of `P B` information symbols into `Q B` coded symbols.
pub fn run_encode(spec: &RunSpec, u: &GroupVector) -> Result<GroupVector> {
    if u.len() != spec.total_info() {
        return Err(Error::LengthMismatch { expected: spec.total_info(), actual: u.len() });
    }
    let mut out = vec![0; spec.total_code()];
    spec.for_each_group(|i, start, len| out[start..start + len].fill(u.symbols[i]));
    Ok(GroupVector { q: u.q, symbols: out })
}

/// `(v + w) mod q`, element-wise.
pub fn apply_dither(v: &GroupVector, w: &GroupVector) -> Result<GroupVector> {
    v.add(w)
}

/// A priori messages `P_j(v) ~ exp(-||y_j - phi(v + w_j)||^2 / 2 sigma^2)`.
///
/// `y` is flat, one `l`-dimensional sample per symbol.
pub fn channel_priors(c: &LabeledConstellation, y: &[f64], w: &GroupVector, sigma: f64) -> Result<Vec<ProbMessage>> {
    let real = channel::ChannelRealization::new(y.to_vec(), None, sigma, c.dim())?;
    channel::channel_evidence(c, &real, w)
}

/// SISO decoding over flat message arrays.
///
/// `priors` holds `Q B` messages; `app` receives `P B` a posteriori messages
/// and `extrinsic` receives `Q B` extrinsic messages.
pub fn siso_decode_into(spec: &RunSpec, q: usize, priors: &[f64], app: &mut [f64], extrinsic: &mut [f64], s: &mut Scratch) {
    spec.for_each_group(|i, start, len| {
        let ins = &priors[start * q..(start + len) * q];
        let outs = &mut extrinsic[start * q..(start + len) * q];
        message::equal_node(ins, q, outs, Some(&mut app[i * q..(i + 1) * q]), s);
    });
}

/// SISO decoding: a posteriori messages per information symbol and
/// extrinsic messages per coded symbol.
pub fn siso_decode(spec: &RunSpec, priors: &[ProbMessage]) -> Result<(Vec<ProbMessage>, Vec<ProbMessage>)> {
    if priors.len() != spec.total_code() {
        return Err(Error::LengthMismatch { expected: spec.total_code(), actual: priors.len() });
    }
    let q = priors[0].q();
    if let Some(p) = priors.iter().find(|p| p.q() != q) {
        return Err(Error::AlphabetMismatch { expected: q, actual: p.q() });
    }
    let flat: Vec<f64> = priors.iter().flat_map(|p| p.as_slice().iter().copied()).collect();
    let mut app = vec![0.0; spec.total_info() * q];
    let mut ext = vec![0.0; flat.len()];
    siso_decode_into(spec, q, &flat, &mut app, &mut ext, &mut Scratch::default());
    let wrap = |v: Vec<f64>| v.chunks(q).map(|c| ProbMessage::new(c.to_vec())).collect::<Result<Vec<_>>>();
    Ok((wrap(app)?, wrap(ext)?))
}

/// Most likely symbol; ties go to the smallest index.
pub fn hard_decision(app: &ProbMessage) -> Symbol {
    message::argmax(app.as_slice()) as Symbol
}
