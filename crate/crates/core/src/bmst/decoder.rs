//! Sliding-window decoding over the normal graph of a BMST-RUN code.
//!
//! Each layer `tau` owns the messages on its `v(tau)` edges:
//! `to_plus[i]` / `from_plus[i]` connect the "=" nodes of `v(tau)` with the
//! "+" nodes of `c(tau + i)`, indexed by position in `v(tau)`. The "+" node
//! at `c(tau)[j]` therefore reads `to_plus[i][pi_i[j]]` of layer `tau - i`.

use std::collections::VecDeque;

use super::BmstSpec;
use crate::channel::{evidence_into, ChannelRealization};
use crate::constellation::LabeledConstellation;
use crate::message::{self, add_node_direct, add_node_transform, argmax, entropy_bits, equal_node, CheckKernel, Scratch};
use crate::runcode::{run_encode, siso_decode_into, GroupVector, Symbol};
use crate::{Error, Result};

/// How the already-decided layer behind the window is treated.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TrailingEdge {
    /// Re-encode the decision and pin its outgoing messages to indicators.
    #[default]
    DecisionFeedback,
    /// Keep the last soft messages unchanged.
    Freeze,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DecoderOptions {
    pub trailing_edge: TrailingEdge,
    pub kernel: CheckKernel,
    /// Iterations stop early once no message moved by more than this.
    pub tolerance: f64,
    pub trace: bool,
}

impl Default for DecoderOptions {
    fn default() -> Self {
        Self { trailing_edge: TrailingEdge::default(), kernel: CheckKernel::default(), tolerance: 1e-6, trace: false }
    }
}

/// Mean entropy of the a posteriori messages of one layer after one
/// iteration.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TraceRecord {
    pub target: usize,
    pub iteration: usize,
    pub layer: usize,
    pub mean_entropy_bits: f64,
}

#[derive(Clone, Debug, Default)]
pub struct DecodeOutput {
    /// Decoded information blocks `u(0) .. u(L-1)`.
    pub decisions: Vec<GroupVector>,
    /// Iterations spent at each window position.
    pub iterations: Vec<usize>,
    pub trace: Vec<TraceRecord>,
}

struct Layer {
    t: usize,
    chan: Vec<f64>,
    to_plus: Vec<f64>,
    from_plus: Vec<f64>,
    run_to_eq: Vec<f64>,
    eq_to_run: Vec<f64>,
    app: Vec<f64>,
}

/// Sliding-window decoder bound to one code and constellation.
pub struct SwdDecoder<'a> {
    spec: &'a BmstSpec,
    c: &'a LabeledConstellation,
    opts: DecoderOptions,
    scratch: Scratch,
    ins: Vec<f64>,
    outs: Vec<f64>,
    free: Vec<Layer>,
}

impl<'a> SwdDecoder<'a> {
    pub fn new(spec: &'a BmstSpec, c: &'a LabeledConstellation, opts: DecoderOptions) -> Self {
        Self { spec, c, opts, scratch: Scratch::default(), ins: Vec::new(), outs: Vec::new(), free: Vec::new() }
    }

    /// Decodes one frame of `L + m` received blocks. `dithers`, if given,
    /// holds the dither of every transmitted block.
    pub fn decode(&mut self, blocks: &[ChannelRealization], dithers: Option<&[GroupVector]>) -> Result<DecodeOutput> {
        self.validate(blocks, dithers)?;
        let spec = self.spec;
        let (q, n, m) = (self.c.q(), spec.block_len(), spec.memory());
        let (big_l, total) = (spec.blocks(), spec.total_blocks());
        let zeros = vec![0 as Symbol; n];
        let mut win: VecDeque<Layer> = VecDeque::with_capacity(spec.delay() + m + 2);
        let mut next = 0;
        let mut out = DecodeOutput::default();
        for t in 0..big_l {
            let end = (t + spec.delay()).min(total - 1);
            while next <= end {
                let dither = dithers.map_or(&zeros[..], |d| d[next].symbols());
                let layer = self.admit(next, &blocks[next], dither);
                win.push_back(layer);
                next += 1;
            }
            while win.front().is_some_and(|l| l.t + m < t) {
                self.free.push(win.pop_front().expect("non-empty"));
            }
            let mut iters = 0;
            for it in 0..spec.max_iters() {
                let mut delta = 0.0f64;
                for tau in (t..=end).chain((t..=end).rev()) {
                    delta = delta.max(self.update(&mut win, tau, t));
                }
                iters = it + 1;
                if self.opts.trace {
                    for tau in t..=end.min(big_l - 1) {
                        let l = &win[tau - win[0].t];
                        let h: f64 = l.app.chunks(q).map(entropy_bits).sum();
                        out.trace.push(TraceRecord {
                            target: t,
                            iteration: iters,
                            layer: tau,
                            mean_entropy_bits: h / (l.app.len() / q) as f64,
                        });
                    }
                }
                if delta < self.opts.tolerance {
                    break;
                }
            }
            out.iterations.push(iters);

            let base = win[0].t;
            let layer = &mut win[t - base];
            let u: Vec<Symbol> = layer.app.chunks(q).map(|p| argmax(p) as Symbol).collect();
            let u = GroupVector::new(q, u)?;
            if self.opts.trailing_edge == TrailingEdge::DecisionFeedback {
                let v = run_encode(spec.basic(), &u)?;
                for i in 0..=m {
                    pin(&mut layer.to_plus[i * n * q..(i + 1) * n * q], v.symbols(), q);
                }
            }
            out.decisions.push(u);
        }
        self.free.extend(win);
        Ok(out)
    }

    fn validate(&self, blocks: &[ChannelRealization], dithers: Option<&[GroupVector]>) -> Result<()> {
        let (n, total) = (self.spec.block_len(), self.spec.total_blocks());
        if blocks.len() != total {
            return Err(Error::LengthMismatch { expected: total, actual: blocks.len() });
        }
        for b in blocks {
            if b.dim() != self.c.dim() {
                return Err(Error::InvalidConstellation(format!(
                    "realization has dimension {}, constellation {}",
                    b.dim(),
                    self.c.dim()
                )));
            }
            if b.len() != n {
                return Err(Error::LengthMismatch { expected: n, actual: b.len() });
            }
        }
        if let Some(d) = dithers {
            if d.len() != total {
                return Err(Error::LengthMismatch { expected: total, actual: d.len() });
            }
            for w in d {
                if w.q() != self.c.q() {
                    return Err(Error::AlphabetMismatch { expected: self.c.q(), actual: w.q() });
                }
                if w.len() != n {
                    return Err(Error::LengthMismatch { expected: n, actual: w.len() });
                }
            }
        }
        Ok(())
    }

    fn admit(&mut self, t: usize, block: &ChannelRealization, dither: &[Symbol]) -> Layer {
        let (q, n, m) = (self.c.q(), self.spec.block_len(), self.spec.memory());
        let info = self.spec.basic().total_info();
        let u = 1.0 / q as f64;
        let mut l = self.free.pop().unwrap_or_else(|| Layer {
            t,
            chan: vec![0.0; n * q],
            to_plus: vec![0.0; (m + 1) * n * q],
            from_plus: vec![0.0; (m + 1) * n * q],
            run_to_eq: vec![0.0; n * q],
            eq_to_run: vec![0.0; n * q],
            app: vec![0.0; info * q],
        });
        l.t = t;
        evidence_into(self.c, block, dither, &mut l.chan);
        l.to_plus.fill(u);
        l.from_plus.fill(u);
        l.eq_to_run.fill(u);
        l.app.fill(u);
        if t < self.spec.blocks() {
            l.run_to_eq.fill(u);
        } else {
            // termination blocks carry v = 0
            pin(&mut l.run_to_eq, &vec![0; n], q);
            for i in 0..=m {
                pin(&mut l.to_plus[i * n * q..(i + 1) * n * q], &vec![0; n], q);
            }
        }
        l
    }

    /// One "+" / "=" / RUN / "=" pass over layer `tau`; returns the largest
    /// change of any message written. Layers before `t` are read only.
    fn update(&mut self, win: &mut VecDeque<Layer>, tau: usize, t: usize) -> f64 {
        let spec = self.spec;
        let (q, n, m) = (self.c.q(), spec.block_len(), spec.memory());
        let total = spec.total_blocks();
        let base = win[0].t;
        let perms = spec.interleavers();
        let mut delta = 0.0f64;

        // "+" nodes of c(tau)
        let k = m.min(tau) + 1;
        let deg = k + 1;
        self.ins.resize(deg * q, 0.0);
        self.outs.resize(deg * q, 0.0);
        for j in 0..n {
            self.ins[..q].copy_from_slice(&win[tau - base].chan[j * q..(j + 1) * q]);
            for i in 0..k {
                let pos = if i == 0 { j } else { perms[i - 1][j] as usize };
                let o = (i * n + pos) * q;
                self.ins[(i + 1) * q..(i + 2) * q].copy_from_slice(&win[tau - i - base].to_plus[o..o + q]);
            }
            match self.opts.kernel {
                CheckKernel::Direct => add_node_direct(&self.ins[..deg * q], q, &mut self.outs[..deg * q], &mut self.scratch),
                CheckKernel::Transform => {
                    add_node_transform(&self.ins[..deg * q], q, &mut self.outs[..deg * q], &mut self.scratch)
                }
            }
            for i in 0..k {
                if tau - i < t {
                    continue;
                }
                let pos = if i == 0 { j } else { perms[i - 1][j] as usize };
                let o = (i * n + pos) * q;
                let dst = &mut win[tau - i - base].from_plus[o..o + q];
                delta = delta.max(store(dst, &self.outs[(i + 1) * q..(i + 2) * q]));
            }
        }

        let layer = &mut win[tau - base];
        let live = (m + 1).min(total - tau);
        self.eq_pass(layer, live, false);
        if tau < spec.blocks() {
            siso_decode_into(spec.basic(), q, &layer.eq_to_run, &mut layer.app, &mut layer.run_to_eq, &mut self.scratch);
        }
        delta.max(self.eq_pass(layer, live, true))
    }

    /// "=" nodes of `v(tau)` with the RUN edge and `live` "+" edges. Writes
    /// `eq_to_run`, and `to_plus` when `emit` is set.
    fn eq_pass(&mut self, layer: &mut Layer, live: usize, emit: bool) -> f64 {
        let (q, n) = (self.c.q(), self.spec.block_len());
        let deg = live + 1;
        self.ins.resize(deg * q, 0.0);
        self.outs.resize(deg * q, 0.0);
        let termination = layer.t >= self.spec.blocks();
        let mut delta = 0.0f64;
        if !emit {
            // only the RUN-bound output: the product of the "+" edges
            for pos in 0..n {
                let o = pos * q;
                let out = &mut layer.eq_to_run[o..o + q];
                out.copy_from_slice(&layer.from_plus[o..o + q]);
                for i in 1..live {
                    let oi = (i * n + pos) * q;
                    for (a, &b) in out.iter_mut().zip(&layer.from_plus[oi..oi + q]) {
                        *a *= b;
                    }
                    message::normalize(out);
                }
            }
            return 0.0;
        }
        for pos in 0..n {
            let o = pos * q;
            self.ins[..q].copy_from_slice(&layer.run_to_eq[o..o + q]);
            for i in 0..live {
                let oi = (i * n + pos) * q;
                self.ins[(i + 1) * q..(i + 2) * q].copy_from_slice(&layer.from_plus[oi..oi + q]);
            }
            equal_node(&self.ins[..deg * q], q, &mut self.outs[..deg * q], None, &mut self.scratch);
            layer.eq_to_run[o..o + q].copy_from_slice(&self.outs[..q]);
            if !termination {
                for i in 0..live {
                    let oi = (i * n + pos) * q;
                    delta = delta.max(store(&mut layer.to_plus[oi..oi + q], &self.outs[(i + 1) * q..(i + 2) * q]));
                }
            }
        }
        delta
    }
}

fn store(dst: &mut [f64], src: &[f64]) -> f64 {
    let mut d = 0.0f64;
    for (a, &b) in dst.iter_mut().zip(src) {
        d = d.max((*a - b).abs());
        *a = b;
    }
    d
}

/// Overwrites `msgs` with indicator messages at `symbols`.
fn pin(msgs: &mut [f64], symbols: &[Symbol], q: usize) {
    for (m, &s) in msgs.chunks_mut(q).zip(symbols) {
        m.fill(0.0);
        m[s as usize] = 1.0;
        message::normalize(m);
    }
}

/// Decodes one frame with a fresh [`SwdDecoder`].
pub fn swd_decode(
    spec: &BmstSpec,
    c: &LabeledConstellation,
    blocks: &[ChannelRealization],
    dithers: Option<&[GroupVector]>,
    opts: &DecoderOptions,
) -> Result<Vec<GroupVector>> {
    Ok(SwdDecoder::new(spec, c, opts.clone()).decode(blocks, dithers)?.decisions)
}
