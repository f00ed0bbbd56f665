//! Probability messages over `Z_q` and the node kernels that combine them.
//!
//! Hot loops work on flat `&[f64]` slices holding consecutive length-`q`
//! messages; [`ProbMessage`] is the owned, validated form used at API
//! boundaries.
//!
//! Products are formed in the linear domain but every partial product is
//! rescaled so that its largest entry is 1 and then floored at
//! [`PROB_FLOOR`]. Since the largest entry of a rescaled vector is 1 and all
//! entries are at least the floor, a product of two rescaled vectors always
//! has a maximum of at least the floor, so no product ever collapses to the
//! all-zero vector.

use std::f64::consts::PI;

use crate::{Error, Result};

/// Smallest probability kept after normalization.
pub const PROB_FLOOR: f64 = 1e-300;

/// A length-`q` probability vector.
#[derive(Clone, Debug, PartialEq)]
pub struct ProbMessage(Vec<f64>);

impl ProbMessage {
    /// Validates nonnegativity and unit sum (within `1e-9`).
    pub fn new(p: Vec<f64>) -> Result<Self> {
        if p.len() < 2 {
            return Err(Error::InvalidMessage(format!("length {} < 2", p.len())));
        }
        if p.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
            return Err(Error::InvalidMessage(format!("entries must be finite and nonnegative: {p:?}")));
        }
        let s: f64 = p.iter().sum();
        if (s - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidMessage(format!("sum is {s}, expected 1")));
        }
        Ok(Self(p))
    }

    /// Normalizes arbitrary nonnegative weights.
    pub fn from_weights(mut w: Vec<f64>) -> Result<Self> {
        if w.len() < 2 || w.iter().any(|x| !(x.is_finite() && *x >= 0.0)) || w.iter().all(|&x| x == 0.0) {
            return Err(Error::InvalidMessage(format!("cannot normalize {w:?}")));
        }
        normalize(&mut w);
        Ok(Self(w))
    }

    pub fn uniform(q: usize) -> Self {
        Self(vec![1.0 / q as f64; q])
    }

    pub fn indicator(q: usize, k: usize) -> Self {
        let mut p = vec![0.0; q];
        p[k] = 1.0;
        Self(p)
    }

    pub fn q(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    /// Shannon entropy in bits.
    pub fn entropy(&self) -> f64 {
        entropy_bits(&self.0)
    }

    /// Maximum absolute entry-wise difference.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.0.iter().zip(&other.0).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }
}

impl std::ops::Index<usize> for ProbMessage {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// Index of the largest entry; ties go to the smallest index.
#[inline]
pub fn argmax(p: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in p.iter().enumerate().skip(1) {
        if x > p[best] {
            best = i;
        }
    }
    best
}

/// Entropy of a probability vector in bits.
pub fn entropy_bits(p: &[f64]) -> f64 {
    -p.iter().filter(|&&x| x > 0.0).map(|&x| x * x.log2()).sum::<f64>()
}

/// Scales `p` to unit sum and floors entries at [`PROB_FLOOR`].
#[inline]
pub fn normalize(p: &mut [f64]) {
    let s: f64 = p.iter().sum();
    let inv = 1.0 / s;
    for x in p.iter_mut() {
        *x = (*x * inv).max(PROB_FLOOR);
    }
}

/// Scales `p` so its largest entry is 1, flooring at [`PROB_FLOOR`].
#[inline]
fn rescale_max(p: &mut [f64]) {
    let m = p.iter().copied().fold(0.0, f64::max);
    let inv = 1.0 / m;
    for x in p.iter_mut() {
        *x = (*x * inv).max(PROB_FLOOR);
    }
}

/// Writes `softmax(log_w)` into `out` (max-subtracted, then normalized).
#[inline]
pub fn from_log_weights(log_w: &[f64], out: &mut [f64]) {
    let m = log_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    for (o, &l) in out.iter_mut().zip(log_w) {
        *o = (l - m).exp();
    }
    normalize(out);
}

/// Reusable buffers for the node kernels.
#[derive(Default, Debug, Clone)]
pub struct Scratch {
    prefix: Vec<f64>,
    suffix: Vec<f64>,
    tmp: Vec<f64>,
    spectra: Vec<Complex>,
    cprefix: Vec<Complex>,
    csuffix: Vec<Complex>,
}

/// Equality ("=") node.
///
/// `ins` holds `deg` consecutive messages. Output `j` is the normalized
/// product of every input except `j`; for `deg == 1` that is the uniform
/// message. If `total` is given it receives the product of all inputs.
pub fn equal_node(ins: &[f64], q: usize, outs: &mut [f64], total: Option<&mut [f64]>, s: &mut Scratch) {
    let deg = ins.len() / q;
    debug_assert_eq!(outs.len(), ins.len());
    s.prefix.clear();
    s.prefix.resize((deg + 1) * q, 1.0);
    s.suffix.clear();
    s.suffix.resize((deg + 1) * q, 1.0);
    for j in 0..deg {
        let (done, rest) = s.prefix.split_at_mut((j + 1) * q);
        let prev = &done[j * q..];
        let next = &mut rest[..q];
        for k in 0..q {
            next[k] = prev[k] * ins[j * q + k];
        }
        rescale_max(next);
    }
    for j in (0..deg).rev() {
        let (head, tail) = s.suffix.split_at_mut((j + 1) * q);
        let next = &tail[..q];
        let cur = &mut head[j * q..];
        for k in 0..q {
            cur[k] = next[k] * ins[j * q + k];
        }
        rescale_max(cur);
    }
    for j in 0..deg {
        let o = &mut outs[j * q..(j + 1) * q];
        for k in 0..q {
            o[k] = s.prefix[j * q + k] * s.suffix[(j + 1) * q + k];
        }
        normalize(o);
    }
    if let Some(t) = total {
        t.copy_from_slice(&s.prefix[deg * q..]);
        normalize(t);
    }
}

/// `out = a (*) b`, cyclic convolution over `Z_q`.
#[inline]
fn cyclic_convolve(a: &[f64], b: &[f64], out: &mut [f64]) {
    let q = a.len();
    if q == 2 {
        out[0] = a[0] * b[0] + a[1] * b[1];
        out[1] = a[0] * b[1] + a[1] * b[0];
        return;
    }
    out.fill(0.0);
    for (i, &ai) in a.iter().enumerate() {
        for (j, &bj) in b.iter().enumerate() {
            let k = if i + j >= q { i + j - q } else { i + j };
            out[k] += ai * bj;
        }
    }
}

/// `out[a] = sum_y sum_msg[a + y] * others[y]`: the distribution of
/// `c - Y` for `c ~ sum_msg`, `Y ~ others`.
#[inline]
fn cyclic_correlate(sum_msg: &[f64], others: &[f64], out: &mut [f64]) {
    let q = sum_msg.len();
    if q == 2 {
        out[0] = sum_msg[0] * others[0] + sum_msg[1] * others[1];
        out[1] = sum_msg[1] * others[0] + sum_msg[0] * others[1];
        return;
    }
    for (a, o) in out.iter_mut().enumerate() {
        let mut acc = 0.0;
        for (y, &oy) in others.iter().enumerate() {
            let k = if a + y >= q { a + y - q } else { a + y };
            acc += sum_msg[k] * oy;
        }
        *o = acc;
    }
}

/// Modulo-q addition ("+") node, computed by direct cyclic convolutions.
///
/// Edge 0 of `ins` is the sum edge `c`; edges `1..` are addends with the
/// constraint `c = a_1 + ... + a_k (mod q)`. Requires at least one addend.
pub fn add_node_direct(ins: &[f64], q: usize, outs: &mut [f64], s: &mut Scratch) {
    let k = ins.len() / q - 1;
    debug_assert!(k >= 1);
    let sum_in = &ins[..q];
    let addends = &ins[q..];
    // prefix[j] = a_1 * ... * a_j, suffix[j] = a_{j+1} * ... * a_k (0-based over addends)
    s.prefix.clear();
    s.prefix.resize((k + 1) * q, 0.0);
    s.prefix[0] = 1.0;
    s.suffix.clear();
    s.suffix.resize((k + 1) * q, 0.0);
    s.suffix[k * q] = 1.0;
    // convolutions of probability vectors keep unit sum, so partial
    // results need no rescaling
    for j in 0..k {
        let (done, rest) = s.prefix.split_at_mut((j + 1) * q);
        cyclic_convolve(&done[j * q..], &addends[j * q..(j + 1) * q], &mut rest[..q]);
    }
    for j in (0..k).rev() {
        let (head, tail) = s.suffix.split_at_mut((j + 1) * q);
        cyclic_convolve(&tail[..q], &addends[j * q..(j + 1) * q], &mut head[j * q..]);
    }
    outs[..q].copy_from_slice(&s.prefix[k * q..]);
    normalize(&mut outs[..q]);
    s.tmp.resize(q, 0.0);
    for j in 0..k {
        cyclic_convolve(&s.prefix[j * q..(j + 1) * q], &s.suffix[(j + 1) * q..(j + 2) * q], &mut s.tmp);
        let o = &mut outs[(j + 1) * q..(j + 2) * q];
        cyclic_correlate(sum_in, &s.tmp, o);
        normalize(o);
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
struct Complex {
    re: f64,
    im: f64,
}

impl Complex {
    const ONE: Self = Self { re: 1.0, im: 0.0 };

    #[inline]
    fn mul(self, o: Self) -> Self {
        Self { re: self.re * o.re - self.im * o.im, im: self.re * o.im + self.im * o.re }
    }

    #[inline]
    fn conj(self) -> Self {
        Self { re: self.re, im: -self.im }
    }
}

/// `F(k) = sum_n x(n) exp(-2 pi i k n / q)`.
fn dft(x: &[f64], out: &mut [Complex]) {
    let q = x.len();
    for (k, o) in out.iter_mut().enumerate() {
        let mut acc = Complex::default();
        for (n, &xn) in x.iter().enumerate() {
            let theta = -2.0 * PI * ((k * n) % q) as f64 / q as f64;
            acc.re += xn * theta.cos();
            acc.im += xn * theta.sin();
        }
        *o = acc;
    }
}

fn idft_real(f: &[Complex], out: &mut [f64]) {
    let q = f.len();
    for (n, o) in out.iter_mut().enumerate() {
        let mut acc = 0.0;
        for (k, fk) in f.iter().enumerate() {
            let theta = 2.0 * PI * ((k * n) % q) as f64 / q as f64;
            acc += fk.re * theta.cos() - fk.im * theta.sin();
        }
        *o = (acc / q as f64).max(0.0);
    }
}

/// Modulo-q addition node computed in the Fourier domain of `Z_q`.
///
/// Same edge convention and results as [`add_node_direct`]; convolutions
/// become products of transforms and the correlation on addend edges
/// becomes `F_c * conj(F_others)`.
pub fn add_node_transform(ins: &[f64], q: usize, outs: &mut [f64], s: &mut Scratch) {
    let deg = ins.len() / q;
    let k = deg - 1;
    s.spectra.clear();
    s.spectra.resize(deg * q, Complex::default());
    for e in 0..deg {
        dft(&ins[e * q..(e + 1) * q], &mut s.spectra[e * q..(e + 1) * q]);
    }
    s.cprefix.clear();
    s.cprefix.resize((k + 1) * q, Complex::ONE);
    s.csuffix.clear();
    s.csuffix.resize((k + 1) * q, Complex::ONE);
    for j in 0..k {
        for f in 0..q {
            s.cprefix[(j + 1) * q + f] = s.cprefix[j * q + f].mul(s.spectra[(j + 1) * q + f]);
        }
    }
    for j in (0..k).rev() {
        for f in 0..q {
            s.csuffix[j * q + f] = s.csuffix[(j + 1) * q + f].mul(s.spectra[(j + 1) * q + f]);
        }
    }
    let mut spec = vec![Complex::default(); q];
    idft_real(&s.cprefix[k * q..], &mut outs[..q]);
    normalize(&mut outs[..q]);
    for j in 0..k {
        for f in 0..q {
            let others = s.cprefix[j * q + f].mul(s.csuffix[(j + 1) * q + f]);
            spec[f] = s.spectra[f].mul(others.conj());
        }
        let o = &mut outs[(j + 1) * q..(j + 2) * q];
        idft_real(&spec, o);
        normalize(o);
    }
}

fn flatten(incoming: &[ProbMessage]) -> Result<(usize, Vec<f64>)> {
    let q = incoming.first().map(ProbMessage::q).ok_or_else(|| Error::InvalidMessage("no edges".into()))?;
    if let Some(m) = incoming.iter().find(|m| m.q() != q) {
        return Err(Error::AlphabetMismatch { expected: q, actual: m.q() });
    }
    Ok((q, incoming.iter().flat_map(|m| m.as_slice().iter().copied()).collect()))
}

fn unflatten(q: usize, flat: Vec<f64>) -> Vec<ProbMessage> {
    flat.chunks(q).map(|c| ProbMessage(c.to_vec())).collect()
}

/// Variable-node update: each outgoing message is the normalized product of
/// all other incoming messages.
pub fn node_equal(incoming: &[ProbMessage]) -> Result<Vec<ProbMessage>> {
    if incoming.len() < 2 {
        return Err(Error::InvalidMessage("equality node needs at least 2 edges".into()));
    }
    let (q, flat) = flatten(incoming)?;
    let mut outs = vec![0.0; flat.len()];
    equal_node(&flat, q, &mut outs, None, &mut Scratch::default());
    Ok(unflatten(q, outs))
}

/// Which implementation of the modulo-q addition node to run.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CheckKernel {
    #[default]
    Direct,
    Transform,
}

/// Check-node update for `incoming[0] = incoming[1] + ... + incoming[k]`
/// over `Z_q`.
pub fn node_add(incoming: &[ProbMessage], q: usize, kernel: CheckKernel) -> Result<Vec<ProbMessage>> {
    if incoming.len() < 2 {
        return Err(Error::InvalidMessage("addition node needs a sum edge and at least one addend".into()));
    }
    let (mq, flat) = flatten(incoming)?;
    if mq != q {
        return Err(Error::AlphabetMismatch { expected: q, actual: mq });
    }
    let mut outs = vec![0.0; flat.len()];
    let mut s = Scratch::default();
    match kernel {
        CheckKernel::Direct => add_node_direct(&flat, q, &mut outs, &mut s),
        CheckKernel::Transform => add_node_transform(&flat, q, &mut outs, &mut s),
    }
    Ok(unflatten(q, outs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn msg(p: &[f64]) -> ProbMessage {
        ProbMessage::new(p.to_vec()).unwrap()
    }

    fn close(a: &ProbMessage, b: &[f64], tol: f64) -> bool {
        a.as_slice().iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn validation() {
        assert!(ProbMessage::new(vec![0.5, 0.4]).is_err());
        assert!(ProbMessage::new(vec![1.5, -0.5]).is_err());
        assert!(ProbMessage::new(vec![1.0]).is_err());
        assert!(ProbMessage::from_weights(vec![0.0, 0.0]).is_err());
        let m = ProbMessage::from_weights(vec![3.0, 1.0]).unwrap();
        assert!(close(&m, &[0.75, 0.25], 1e-15));
    }

    #[test]
    fn argmax_breaks_ties_low() {
        assert_eq!(argmax(&[0.2, 0.5, 0.3]), 1);
        assert_eq!(argmax(&[0.5, 0.5]), 0);
        assert_eq!(argmax(&[0.0, 0.0, 1.0, 0.0]), 2);
    }

    #[test]
    fn equal_two_edges_swap() {
        let out = node_equal(&[msg(&[0.7, 0.3]), msg(&[0.1, 0.9])]).unwrap();
        assert!(close(&out[0], &[0.1, 0.9], 1e-15));
        assert!(close(&out[1], &[0.7, 0.3], 1e-15));
    }

    #[test]
    fn equal_three_edges() {
        let out = node_equal(&[msg(&[0.8, 0.2]), msg(&[0.6, 0.4]), msg(&[0.5, 0.5])]).unwrap();
        // 0.48 : 0.08
        assert!(close(&out[2], &[0.48 / 0.56, 0.08 / 0.56], 1e-15));
    }

    #[test]
    fn equal_indicator_absorbs() {
        let out = node_equal(&[
            ProbMessage::indicator(3, 2),
            msg(&[0.2, 0.3, 0.5]),
            msg(&[0.6, 0.3, 0.1]),
        ])
        .unwrap();
        assert_eq!(argmax(out[1].as_slice()), 2);
        assert!(out[1][0] + out[1][1] < 1e-200);
        assert!(out[2][0] + out[2][1] < 1e-200);
    }

    #[test]
    fn equal_conflicting_indicators_stay_finite() {
        let a = ProbMessage::indicator(2, 0);
        let b = ProbMessage::indicator(2, 1);
        let out = node_equal(&[a.clone(), a, b.clone(), b]).unwrap();
        for m in &out {
            assert!(m.as_slice().iter().all(|x| x.is_finite() && *x > 0.0));
            assert!((m.as_slice().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn add_uniform_fixed_point() {
        let u = ProbMessage::uniform(5);
        for kernel in [CheckKernel::Direct, CheckKernel::Transform] {
            let out = node_add(&[u.clone(), u.clone(), u.clone(), u.clone()], 5, kernel).unwrap();
            for m in out {
                assert!(close(&m, &[0.2; 5], 1e-14));
            }
        }
    }

    #[test]
    fn add_indicator_solves_constraint() {
        // c = 3, a1 = 1, a2 unknown -> a2 = 2
        let ins = [ProbMessage::indicator(4, 3), ProbMessage::indicator(4, 1), ProbMessage::uniform(4)];
        for kernel in [CheckKernel::Direct, CheckKernel::Transform] {
            let out = node_add(&ins, 4, kernel).unwrap();
            assert!(close(&out[2], &[0.0, 0.0, 1.0, 0.0], 1e-12), "{kernel:?}");
        }
    }

    #[test]
    fn add_three_ary_convolution() {
        let ins = [ProbMessage::uniform(3), msg(&[0.5, 0.3, 0.2]), msg(&[0.6, 0.2, 0.2])];
        // (0.5*0.6 + 0.3*0.2 + 0.2*0.2, 0.5*0.2 + 0.3*0.6 + 0.2*0.2, 0.5*0.2 + 0.3*0.2 + 0.2*0.6)
        let expected = [0.40, 0.32, 0.28];
        let direct = node_add(&ins, 3, CheckKernel::Direct).unwrap();
        let transform = node_add(&ins, 3, CheckKernel::Transform).unwrap();
        assert!(close(&direct[0], &expected, 1e-15));
        assert!(direct[0].max_abs_diff(&transform[0]) < 1e-12);
    }

    fn random_message(q: usize) -> impl Strategy<Value = ProbMessage> {
        prop::collection::vec(0.001f64..1.0, q).prop_map(|w| ProbMessage::from_weights(w).unwrap())
    }

    fn random_node() -> impl Strategy<Value = (usize, Vec<ProbMessage>)> {
        (2usize..=16, 2usize..=5).prop_flat_map(|(q, deg)| (Just(q), prop::collection::vec(random_message(q), deg)))
    }

    proptest! {
        #[test]
        fn add_kernels_agree((q, ins) in random_node()) {
            let d = node_add(&ins, q, CheckKernel::Direct).unwrap();
            let t = node_add(&ins, q, CheckKernel::Transform).unwrap();
            for (a, b) in d.iter().zip(&t) {
                prop_assert!(a.max_abs_diff(b) < 1e-12);
            }
        }

        #[test]
        fn add_matches_enumeration((q, ins) in (2usize..=4, 2usize..=4)
            .prop_flat_map(|(q, deg)| (Just(q), prop::collection::vec(random_message(q), deg)))) {
            let deg = ins.len();
            let out = node_add(&ins, q, CheckKernel::Direct).unwrap();
            // Brute force over all assignments satisfying the constraint.
            let mut marg = vec![vec![0.0; q]; deg];
            let total = q.pow(deg as u32 - 1);
            for idx in 0..total {
                let mut addends = Vec::with_capacity(deg - 1);
                let mut r = idx;
                for _ in 1..deg {
                    addends.push(r % q);
                    r /= q;
                }
                let c = addends.iter().sum::<usize>() % q;
                let mut vals = vec![c];
                vals.extend(&addends);
                for e in 0..deg {
                    let w: f64 = (0..deg).filter(|&f| f != e).map(|f| ins[f][vals[f]]).product();
                    marg[e][vals[e]] += w;
                }
            }
            for e in 0..deg {
                let s: f64 = marg[e].iter().sum();
                for v in 0..q {
                    prop_assert!((out[e][v] - marg[e][v] / s).abs() < 1e-12);
                }
            }
        }

        #[test]
        fn equal_outputs_normalized(ins in (2usize..=8, 2usize..=12)
            .prop_flat_map(|(q, deg)| prop::collection::vec(random_message(q), deg))) {
            for m in node_equal(&ins).unwrap() {
                prop_assert!((m.as_slice().iter().sum::<f64>() - 1.0).abs() < 1e-12);
            }
        }
    }
}
