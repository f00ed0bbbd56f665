//! Brute-force oracles and a quick self-check suite built on them.

use rand::Rng;

use crate::analysis::{q_function, select_memory, union_bound_rep};
use crate::bmst::{bmst_encode, make_interleavers, swd_decode, BmstSpec};
use crate::capacity::{shannon_limit, CapacityQuery, ChannelKind};
use crate::channel::{channel_evidence, ChannelRealization};
use crate::constellation::{db_to_linear, LabeledConstellation};
use crate::message::{self, node_add, CheckKernel, ProbMessage};
use crate::rng::{substream, Purpose};
use crate::runcode::{run_encode, siso_decode, GroupVector, RunSpec, Symbol};
use crate::sim::{Trial, count_errors};
use crate::{DecoderOptions, Rational, Result};

/// Visits every vector in `{0..q}^len` in lexicographic order.
fn for_each_word(q: usize, len: usize, mut f: impl FnMut(&[Symbol])) {
    let mut w = vec![0 as Symbol; len];
    loop {
        f(&w);
        let mut i = len;
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            w[i] += 1;
            if (w[i] as usize) < q {
                break;
            }
            w[i] = 0;
        }
    }
}

/// A posteriori and extrinsic messages of a RUN code by enumerating every
/// information word.
pub fn brute_force_siso(spec: &RunSpec, priors: &[ProbMessage]) -> Result<(Vec<ProbMessage>, Vec<ProbMessage>)> {
    let q = priors[0].q();
    let (k, n) = (spec.total_info(), spec.total_code());
    let mut app = vec![vec![0.0; q]; k];
    let mut ext = vec![vec![0.0; q]; n];
    for_each_word(q, k, |u| {
        let x = run_encode(spec, &GroupVector::new(q, u.to_vec()).expect("valid word")).expect("length matches");
        let x = x.symbols();
        let full: f64 = x.iter().zip(priors).map(|(&s, p)| p[s as usize]).product();
        for (i, &s) in u.iter().enumerate() {
            app[i][s as usize] += full;
        }
        for j in 0..n {
            let others: f64 = x.iter().zip(priors).enumerate().filter(|&(l, _)| l != j).map(|(_, (&s, p))| p[s as usize]).product();
            ext[j][x[j] as usize] += others;
        }
    });
    let wrap = |v: Vec<Vec<f64>>| v.into_iter().map(ProbMessage::from_weights).collect::<Result<Vec<_>>>();
    Ok((wrap(app)?, wrap(ext)?))
}

/// Symbol-wise MAP decisions for a BMST-RUN frame by enumerating all
/// `q^(L P B)` information sequences.
pub fn exhaustive_map(
    spec: &BmstSpec,
    c: &LabeledConstellation,
    blocks: &[ChannelRealization],
    dithers: &[GroupVector],
) -> Result<Vec<GroupVector>> {
    let q = c.q();
    let k = spec.basic().total_info();
    let big_l = spec.blocks();
    let logev: Vec<Vec<Vec<f64>>> = blocks
        .iter()
        .zip(dithers)
        .map(|(y, w)| Ok(channel_evidence(c, y, w)?.iter().map(|p| p.as_slice().iter().map(|x| x.ln()).collect()).collect()))
        .collect::<Result<_>>()?;
    let mut seqs = Vec::new();
    let mut lls = Vec::new();
    for_each_word(q, big_l * k, |u| {
        let ub: Vec<GroupVector> = u.chunks(k).map(|b| GroupVector::new(q, b.to_vec()).expect("valid word")).collect();
        let cw = bmst_encode(spec, &ub).expect("consistent spec");
        let ll: f64 = cw.iter().zip(&logev).map(|(b, e)| b.symbols().iter().zip(e).map(|(&s, ej)| ej[s as usize]).sum::<f64>()).sum();
        seqs.push(u.to_vec());
        lls.push(ll);
    });
    let mx = lls.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut marg = vec![vec![0.0; q]; big_l * k];
    for (u, ll) in seqs.iter().zip(&lls) {
        let w = (ll - mx).exp();
        for (i, &s) in u.iter().enumerate() {
            marg[i][s as usize] += w;
        }
    }
    let dec: Vec<Symbol> = marg.iter().map(|m| message::argmax(m) as Symbol).collect();
    dec.chunks(k).map(|b| GroupVector::new(q, b.to_vec())).collect()
}

/// The two-block toy code used against [`exhaustive_map`].
pub fn toy_spec() -> BmstSpec {
    BmstSpec::new(RunSpec::new(1, 2, 2).expect("valid"), 1, 1, 3).expect("valid").with_delay(3)
}

fn random_message<R: Rng>(q: usize, rng: &mut R) -> ProbMessage {
    ProbMessage::from_weights((0..q).map(|_| rng.random_range(0.01..1.0)).collect()).expect("positive weights")
}

fn rel_close(a: &[ProbMessage], b: &[ProbMessage], tol: f64) -> bool {
    a.iter().zip(b).all(|(x, y)| x.as_slice().iter().zip(y.as_slice()).all(|(u, v)| (u - v).abs() <= tol * u.abs().max(v.abs())))
}

/// Worst relative deviation of `siso_decode` from [`brute_force_siso`]
/// over `sets` random prior sets with `q <= 8`, `N <= 5`.
pub fn siso_oracle_check(sets: usize, seed: u64) -> Result<bool> {
    let mut rng = substream(seed, Purpose::Data, 0, 0);
    for _ in 0..sets {
        let q = rng.random_range(2..=8);
        let n = rng.random_range(1..=5);
        // one RUN group of length N plus, for time sharing, one of length N+1
        let spec = if rng.random_bool(0.5) { RunSpec::new(1, n, 1)? } else { RunSpec::new(2, 2 * n + 1, 1)? };
        if (q as f64).powi(spec.total_info() as i32) > 1e5 {
            continue;
        }
        let priors: Vec<ProbMessage> = (0..spec.total_code()).map(|_| random_message(q, &mut rng)).collect();
        let (a1, e1) = siso_decode(&spec, &priors)?;
        let (a2, e2) = brute_force_siso(&spec, &priors)?;
        if !rel_close(&a1, &a2, 1e-12) || !rel_close(&e1, &e2, 1e-12) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Fraction of toy frames on which the sliding-window decoder agrees with
/// exhaustive MAP, and the MAP symbol error rate.
pub fn swd_map_agreement(snr_db: f64, frames: u64, seed: u64) -> Result<(f64, f64)> {
    let spec = toy_spec();
    let c = LabeledConstellation::builtin("BPSK")?;
    let trial = Trial {
        constellation: c.clone(),
        run: spec.basic().clone(),
        blocks: spec.blocks(),
        bmst: Some(spec.clone()),
        channel: ChannelKind::Awgn,
        dither: true,
        decoder: DecoderOptions::default(),
    };
    let sigma = c.sigma_from_snr(snr_db).sigma();
    let mut agree = 0u64;
    let mut map_errors = 0u64;
    for i in 0..frames {
        let f = trial.draw(sigma, seed, 0, i)?;
        let swd = swd_decode(&spec, &c, &f.received, Some(&f.dither), &DecoderOptions::default())?;
        let map = exhaustive_map(&spec, &c, &f.received, &f.dither)?;
        agree += u64::from(swd == map);
        map_errors += count_errors(&f.u, &map).0;
    }
    let symbols = frames * trial.symbols_per_frame() as u64;
    Ok((agree as f64 / frames as f64, map_errors as f64 / symbols as f64))
}

/// Outcome of one self-check.
#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, r: Result<(bool, String)>) -> Check {
    match r {
        Ok((passed, detail)) => Check { name, passed, detail },
        Err(e) => Check { name, passed: false, detail: format!("error: {e}") },
    }
}

/// Runs the quick oracle suite.
pub fn run_all() -> Vec<Check> {
    vec![
        check("siso-vs-enumeration", siso_oracle_check(200, 1).map(|ok| (ok, "200 prior sets, rel tol 1e-12".into()))),
        check(
            "check-kernels",
            (|| {
                let mut rng = substream(2, Purpose::Data, 0, 0);
                let mut worst = 0.0f64;
                for _ in 0..200 {
                    let q = rng.random_range(2..=16);
                    let deg = rng.random_range(2..=5);
                    let ins: Vec<ProbMessage> = (0..deg).map(|_| random_message(q, &mut rng)).collect();
                    let a = node_add(&ins, q, CheckKernel::Direct)?;
                    let b = node_add(&ins, q, CheckKernel::Transform)?;
                    worst = a.iter().zip(&b).map(|(x, y)| x.max_abs_diff(y)).fold(worst, f64::max);
                }
                Ok((worst < 1e-12, format!("max |direct - transform| = {worst:.2e}")))
            })(),
        ),
        check(
            "bpsk-union-bound-exact",
            (|| {
                let c = LabeledConstellation::builtin("BPSK")?;
                let mut worst = 0.0f64;
                for n in [1usize, 2, 4, 8] {
                    for snr in [-2.0, 0.0, 3.0, 6.0] {
                        let exact = q_function((n as f64 * db_to_linear(snr)).sqrt());
                        worst = worst.max((union_bound_rep(&c, n, snr) - exact).abs() / exact);
                    }
                }
                Ok((worst < 1e-12, format!("max relative deviation {worst:.2e}")))
            })(),
        ),
        check(
            "memory-selection",
            (|| {
                let c = LabeledConstellation::builtin("BPSK")?;
                let m = select_memory(&c, 8, Rational::new(0, 1), -7.2, 1e-5)?;
                Ok((m == 11, format!("rate 1/8 at -7.2 dB -> m = {m}")))
            })(),
        ),
        check(
            "shannon-limit",
            (|| {
                let q = CapacityQuery { constellation: LabeledConstellation::builtin("BPSK")?, rate: Rational::new(1, 2), channel: ChannelKind::Awgn };
                let g = shannon_limit(&q, 0.05)?.gamma_lim_db;
                Ok(((g - 0.19).abs() < 0.1, format!("BPSK rate 1/2 limit {g:.3} dB")))
            })(),
        ),
        check(
            "interleaver-fixture",
            Ok((make_interleavers(2024, 1, 10)[0] == [3, 8, 6, 0, 1, 7, 9, 4, 5, 2], "seed 2024".into())),
        ),
        check(
            "swd-vs-map",
            swd_map_agreement(1.0, 300, 3).map(|(a, ser)| (a >= 0.97, format!("agreement {a:.3}, MAP SER {ser:.2e}"))),
        ),
    ]
}
