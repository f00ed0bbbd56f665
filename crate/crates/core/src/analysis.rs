//! Distance enumerators and the bounds built on them.
//!
//! The average Euclidean distance enumerating function (EDEF) of a symbol
//! error `e` under a labeling `phi` is
//!
//! ```text
//! D_e(X) = (1/q) sum_w X^{||phi(w) - phi(e + w)||^2},
//! ```
//!
//! and the repetition code `C[N,1]` has `B^(N)(X) = sum_e D_e(X)^N`. All
//! SER bounds here are union bounds over `B^(N)`.

use crate::constellation::{db_to_linear, squared_distance, LabeledConstellation};
use crate::{Error, Rational, Result};

/// Exponents closer than this are treated as equal.
pub const EXPONENT_TOLERANCE: f64 = 1e-9;

/// Default cap on the memory search in [`select_memory`].
pub const DEFAULT_MEMORY_CAP: usize = 64;

/// `Q(x) = P(Z > x)` for a standard normal `Z`, via `erfc`.
pub fn q_function(x: f64) -> f64 {
    0.5 * libm::erfc(x * std::f64::consts::FRAC_1_SQRT_2)
}

/// Sparse polynomial in `X` with real exponents (squared distances) and
/// nonnegative coefficients (average multiplicities).
#[derive(Clone, Debug, PartialEq)]
pub struct EdefPolynomial {
    /// `(squared distance, multiplicity)`, sorted by distance, merged.
    terms: Vec<(f64, f64)>,
}

impl EdefPolynomial {
    /// The constant polynomial 1.
    pub fn one() -> Self {
        Self { terms: vec![(0.0, 1.0)] }
    }

    pub fn from_terms(terms: impl IntoIterator<Item = (f64, f64)>) -> Self {
        Self { terms: merge(terms.into_iter().collect()) }
    }

    pub fn terms(&self) -> &[(f64, f64)] {
        &self.terms
    }

    /// Coefficient of `X^{delta2}` (matched within [`EXPONENT_TOLERANCE`]).
    pub fn coefficient(&self, delta2: f64) -> f64 {
        self.terms.iter().filter(|(d, _)| (d - delta2).abs() <= EXPONENT_TOLERANCE).map(|(_, c)| c).sum()
    }

    /// Value at `X = 1`, the total multiplicity.
    pub fn total(&self) -> f64 {
        self.terms.iter().map(|(_, c)| c).sum()
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out = Vec::with_capacity(self.terms.len() * other.terms.len());
        for &(da, ca) in &self.terms {
            for &(db, cb) in &other.terms {
                out.push((da + db, ca * cb));
            }
        }
        Self { terms: merge(out) }
    }

    pub fn add(&self, other: &Self) -> Self {
        Self { terms: merge(self.terms.iter().chain(&other.terms).copied().collect()) }
    }

    pub fn pow(&self, mut n: usize) -> Self {
        let mut acc = Self::one();
        let mut base = self.clone();
        while n > 0 {
            if n & 1 == 1 {
                acc = acc.mul(&base);
            }
            n >>= 1;
            if n > 0 {
                base = base.mul(&base);
            }
        }
        acc
    }

    /// `sum_{delta > 0} B_delta Q(delta / (2 sigma))`.
    pub fn union_bound(&self, sigma: f64) -> f64 {
        self.terms
            .iter()
            .filter(|(d2, _)| *d2 > EXPONENT_TOLERANCE)
            .map(|&(d2, c)| c * q_function(d2.sqrt() / (2.0 * sigma)))
            .sum()
    }
}

fn merge(mut terms: Vec<(f64, f64)>) -> Vec<(f64, f64)> {
    terms.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut out: Vec<(f64, f64)> = Vec::with_capacity(terms.len());
    for (d, c) in terms {
        match out.last_mut() {
            Some(last) if (d - last.0).abs() <= EXPONENT_TOLERANCE => last.1 += c,
            _ => out.push((d, c)),
        }
    }
    out
}

/// `D_e(X)` for the symbol error `e`.
pub fn edef_single(c: &LabeledConstellation, e: usize) -> EdefPolynomial {
    let q = c.q();
    let w_weight = 1.0 / q as f64;
    EdefPolynomial::from_terms((0..q).map(|w| (squared_distance(c.signal(w), c.signal((e + w) % q)), w_weight)))
}

/// `B^(N)(X) = sum_e D_e(X)^N`.
pub fn edef_power(c: &LabeledConstellation, n: usize) -> EdefPolynomial {
    (0..c.q()).map(|e| edef_single(c, e).pow(n)).fold(EdefPolynomial::from_terms([]), |acc, p| acc.add(&p))
}

/// Union bound on the SER of `C[N,1]` under `c` at `snr_db`.
pub fn union_bound_rep(c: &LabeledConstellation, n: usize, snr_db: f64) -> f64 {
    edef_power(c, n).union_bound(c.sigma_from_snr(snr_db).sigma())
}

fn ratio_f64(r: Rational) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

/// Caches `D_e` so repeated bound evaluations only pay for the powers.
#[derive(Clone, Debug)]
pub struct BoundEvaluator<'a> {
    constellation: &'a LabeledConstellation,
    singles: Vec<EdefPolynomial>,
}

impl<'a> BoundEvaluator<'a> {
    pub fn new(constellation: &'a LabeledConstellation) -> Self {
        let singles = (0..constellation.q()).map(|e| edef_single(constellation, e)).collect();
        Self { constellation, singles }
    }

    pub fn edef_power(&self, n: usize) -> EdefPolynomial {
        self.singles.iter().map(|d| d.pow(n)).fold(EdefPolynomial::from_terms([]), |acc, p| acc.add(&p))
    }

    /// Union bound for `C[N,1]`; zero-length repetition is certain failure
    /// and never requested.
    pub fn repetition(&self, n: usize, snr_db: f64) -> f64 {
        self.edef_power(n).union_bound(self.constellation.sigma_from_snr(snr_db).sigma())
    }

    /// `alpha f_{N+1} + (1 - alpha) f_N` with each repetition length
    /// multiplied by `m + 1`.
    pub fn time_shared(&self, n: usize, alpha: Rational, m: usize, snr_db: f64) -> f64 {
        let a = ratio_f64(alpha);
        let long = if a > 0.0 { a * self.repetition((n + 1) * (m + 1), snr_db) } else { 0.0 };
        long + (1.0 - a) * self.repetition(n * (m + 1), snr_db)
    }
}

/// Union bound on the SER of the time-shared RUN code.
pub fn run_ser_bound(c: &LabeledConstellation, n: usize, alpha: Rational, snr_db: f64) -> f64 {
    BoundEvaluator::new(c).time_shared(n, alpha, 0, snr_db)
}

/// Genie-aided lower bound on BMST-RUN SER with memory `m`, evaluated with
/// the union bound.
pub fn genie_bound(c: &LabeledConstellation, n: usize, alpha: Rational, m: usize, snr_db: f64) -> f64 {
    BoundEvaluator::new(c).time_shared(n, alpha, m, snr_db)
}

/// Smallest `m` with `genie_bound(.., m, gamma_lim_db) <= p_target`.
pub fn select_memory(c: &LabeledConstellation, n: usize, alpha: Rational, gamma_lim_db: f64, p_target: f64) -> Result<usize> {
    select_memory_with_cap(c, n, alpha, gamma_lim_db, p_target, DEFAULT_MEMORY_CAP)
}

pub fn select_memory_with_cap(
    c: &LabeledConstellation,
    n: usize,
    alpha: Rational,
    gamma_lim_db: f64,
    p_target: f64,
    cap: usize,
) -> Result<usize> {
    if !(p_target > 0.0 && p_target < 1.0) {
        return Err(Error::InvalidCode(format!("p_target must lie in (0, 1), got {p_target}")));
    }
    let eval = BoundEvaluator::new(c);
    (0..=cap)
        .find(|&m| eval.time_shared(n, alpha, m, gamma_lim_db) <= p_target)
        .ok_or(Error::MemoryCapExceeded { cap, p_target })
}

/// Memory rule for binary BMST: `m = ceil(10^((target - lim)/10) - 1)`,
/// clamped at zero.
pub fn binary_memory_rule(gamma_target_db: f64, gamma_lim_db: f64) -> usize {
    let x = (db_to_linear(gamma_target_db - gamma_lim_db) - 1.0).ceil();
    if x > 0.0 {
        x as usize
    } else {
        0
    }
}

/// SNR (dB) at which a decreasing function of SNR crosses `level`, by
/// bisection on `[lo, hi]`.
pub fn crossing_snr(mut f: impl FnMut(f64) -> f64, level: f64, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if f(mid) > level {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constellation::BUILTIN_NAMES;
    use proptest::prelude::*;
    use std::collections::BTreeMap;

    fn c(name: &str) -> LabeledConstellation {
        LabeledConstellation::builtin(name).unwrap()
    }

    /// Brute-force B^(N): average over u, dither vectors w and errors e,
    /// summing per-position squared distances. Exponents are keyed after
    /// rounding to 1e-9.
    fn brute_force_edef(c: &LabeledConstellation, n: usize) -> BTreeMap<i64, f64> {
        let q = c.q();
        let mut out = BTreeMap::new();
        let nw = q.pow(n as u32);
        for e in 0..q {
            for widx in 0..nw {
                let mut w = Vec::with_capacity(n);
                let mut r = widx;
                for _ in 0..n {
                    w.push(r % q);
                    r /= q;
                }
                for u in 0..q {
                    let d2: f64 = w
                        .iter()
                        .map(|&wj| squared_distance(c.signal((u + wj) % q), c.signal((u + e + wj) % q)))
                        .sum();
                    *out.entry((d2 * 1e9).round() as i64).or_insert(0.0) += 1.0 / (nw * q) as f64;
                }
            }
        }
        out
    }

    #[test]
    fn single_examples() {
        for name in BUILTIN_NAMES {
            let cc = c(name);
            assert_eq!(edef_single(&cc, 0).terms(), &[(0.0, 1.0)]);
            for e in 0..cc.q() {
                assert!((edef_single(&cc, e).total() - 1.0).abs() < 1e-12);
            }
        }
        assert_eq!(edef_single(&c("BPSK"), 1).terms(), &[(4.0, 1.0)]);
        assert_eq!(edef_single(&c("4-PAM"), 2).terms(), &[(16.0, 1.0)]);
    }

    #[test]
    fn power_examples() {
        assert_eq!(edef_power(&c("BPSK"), 1).terms(), &[(0.0, 1.0), (4.0, 1.0)]);
        assert_eq!(edef_power(&c("BPSK"), 3).terms(), &[(0.0, 1.0), (12.0, 1.0)]);
        for name in BUILTIN_NAMES {
            let cc = c(name);
            for n in [1, 2, 5] {
                let b = edef_power(&cc, n);
                assert!((b.total() - cc.q() as f64).abs() < 1e-9, "{name} N={n}");
                assert!((b.coefficient(0.0) - 1.0).abs() < 1e-12, "{name} N={n}");
            }
        }
    }

    #[test]
    fn power_matches_brute_force() {
        let cases = [
            ("BPSK", c("BPSK")),
            ("3-PAM", c("3-PAM")),
            ("3-PAM alt", c("3-PAM").with_labeling(vec![1, 0, 2]).unwrap()),
            ("4-PAM", c("4-PAM")),
            ("4-PAM alt", c("4-PAM").with_labeling(vec![0, 2, 1, 3]).unwrap()),
        ];
        for (name, cc) in cases {
            {
                for n in 1..=3 {
                    let oracle = brute_force_edef(&cc, n);
                    let poly = edef_power(&cc, n);
                    assert_eq!(poly.terms().len(), oracle.len(), "{name} N={n}");
                    for (&(d2, m), (&k, &om)) in poly.terms().iter().zip(&oracle) {
                        assert_eq!((d2 * 1e9).round() as i64, k);
                        assert!((m - om).abs() < 1e-12, "{name} N={n} d2={d2}: {m} vs {om}");
                    }
                }
            }
        }
    }

    #[test]
    fn psk_exponents_coalesce() {
        // 0.586 + 3.414 and 2 + 2 must land on the same exponent
        let b = edef_power(&c("8-PSK"), 2);
        let near_four = b.terms().iter().filter(|(d, _)| (d - 4.0).abs() < 1e-6).count();
        assert_eq!(near_four, 1);
    }

    #[test]
    fn q_function_values() {
        assert!((q_function(0.0) - 0.5).abs() < 1e-16);
        assert!((q_function(2.0) - 0.022_750_131_948_179_2).abs() < 1e-15);
        assert!((q_function(5.0) - 2.866_515_718_791_939e-7).abs() < 1e-20);
    }

    #[test]
    fn union_bound_examples() {
        let b = c("BPSK");
        let snr6 = 10.0 * 4f64.log10();
        assert!((union_bound_rep(&b, 1, snr6) - q_function(2.0)).abs() < 1e-15);
        for s in [-3.0, 0.0, 4.0] {
            let lin = db_to_linear(s);
            assert!((union_bound_rep(&b, 2, s) - q_function((2.0 * lin).sqrt())).abs() < 1e-14);
        }
        for name in BUILTIN_NAMES {
            let cc = c(name);
            let mut prev = f64::INFINITY;
            for s in (0..40).map(|k| k as f64) {
                let v = union_bound_rep(&cc, 2, s);
                assert!(v <= prev);
                prev = v;
            }
            assert!(prev < 1e-12, "{name}: {prev}");
        }
    }

    #[test]
    fn run_bound_examples() {
        let b = c("BPSK");
        for s in [0.0, 3.0] {
            assert_eq!(run_ser_bound(&b, 3, Rational::new(0, 1), s), union_bound_rep(&b, 3, s));
            let lin = db_to_linear(s);
            let half = run_ser_bound(&b, 1, Rational::new(1, 2), s);
            let closed = 0.5 * (q_function((2.0 * lin).sqrt()) + q_function(lin.sqrt()));
            assert!((half - closed).abs() < 1e-15);
            let near_one = run_ser_bound(&b, 1, Rational::new(999, 1000), s);
            assert!(near_one <= run_ser_bound(&b, 1, Rational::new(0, 1), s));
        }
    }

    #[test]
    fn genie_examples() {
        let b = c("BPSK");
        let zero = Rational::new(0, 1);
        for s in [-2.0, 1.0, 5.0] {
            assert_eq!(genie_bound(&b, 2, Rational::new(1, 3), 0, s), run_ser_bound(&b, 2, Rational::new(1, 3), s));
            let lin = db_to_linear(s);
            assert!((genie_bound(&b, 1, zero, 1, s) - q_function((2.0 * lin).sqrt())).abs() < 1e-15);
        }
    }

    #[test]
    fn select_memory_examples() {
        let b = c("BPSK");
        assert_eq!(select_memory(&b, 2, Rational::new(0, 1), 0.2, 1e-5).unwrap(), 8);
        assert_eq!(select_memory(&b, 1, Rational::new(1, 7), 5.3, 1e-5).unwrap(), 5);
        assert_eq!(select_memory(&b, 1, Rational::new(0, 1), 12.0, 1e-3).unwrap(), 0);
        assert!(matches!(
            select_memory_with_cap(&b, 1, Rational::new(0, 1), -30.0, 1e-9, 4),
            Err(Error::MemoryCapExceeded { cap: 4, .. })
        ));
        assert!(select_memory(&b, 1, Rational::new(0, 1), 0.0, 1.5).is_err());
    }

    #[test]
    fn binary_memory_rule_examples() {
        assert_eq!(binary_memory_rule(1.0, 1.0), 0);
        assert_eq!(binary_memory_rule(10.0, 0.0), 9);
        assert_eq!(binary_memory_rule(4.8, 0.0), 3);
        assert_eq!(binary_memory_rule(-1.0, 2.0), 0);
    }

    #[test]
    fn log_spacing_of_repetition_bounds() {
        let b = c("BPSK");
        let base = crossing_snr(|s| union_bound_rep(&b, 1, s), 1e-4, -30.0, 30.0, 1e-9);
        for n in [2usize, 4, 8] {
            let x = crossing_snr(|s| union_bound_rep(&b, n, s), 1e-4, -30.0, 30.0, 1e-9);
            let gap = (base - x) - 10.0 * (n as f64).log10();
            assert!(gap.abs() < 0.5, "N={n}: crossing {x} vs base {base}");
        }
    }

    proptest! {
        #[test]
        fn bpsk_bound_closed_form(n in 1usize..=16, snr in -10.0f64..12.0) {
            let lin = db_to_linear(snr);
            let v = union_bound_rep(&c("BPSK"), n, snr);
            let closed = q_function((n as f64 * lin).sqrt());
            prop_assert!((v - closed).abs() <= 1e-12 * closed.max(1e-300));
        }

        #[test]
        fn genie_nonincreasing_and_below_run_bound(
            name in prop::sample::select(BUILTIN_NAMES.to_vec()),
            n in 1usize..=3,
            num in 0u64..5,
            snr in -5.0f64..15.0,
        ) {
            let cc = c(name);
            let alpha = Rational::new(num, 5);
            let eval = BoundEvaluator::new(&cc);
            let run = eval.time_shared(n, alpha, 0, snr);
            let mut prev = run;
            for m in 1..4 {
                let g = eval.time_shared(n, alpha, m, snr);
                prop_assert!(g <= prev * (1.0 + 1e-12));
                prop_assert!(g <= run * (1.0 + 1e-12));
                prev = g;
            }
        }

        #[test]
        fn select_memory_monotone_in_target(snr in 0.0f64..6.0, k in 2i32..7) {
            let b = c("BPSK");
            let alpha = Rational::new(1, 3);
            let hi = select_memory(&b, 1, alpha, snr, 10f64.powi(-k)).unwrap();
            let lo = select_memory(&b, 1, alpha, snr, 10f64.powi(-k - 1)).unwrap();
            prop_assert!(lo >= hi);
        }
    }
}
