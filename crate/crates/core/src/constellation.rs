//! Labeled signal constellations and the SNR convention.
//!
//! Points are kept at their raw integer or unit-circle values. The SNR is
//! defined relative to the average symbol energy per real dimension,
//!
//! ```text
//! SNR = sum_{s in A} ||s||^2 / (l * q * sigma^2),
//! ```
//!
//! so every quantity downstream is invariant to a uniform scaling of the
//! point set.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::Path;

use crate::{Error, Result};

/// Names accepted by [`LabeledConstellation::builtin`].
pub const BUILTIN_NAMES: &[&str] = &["BPSK", "3-PAM", "4-PAM", "8-PSK", "16-QAM", "16-PAM-uniform"];

/// A size-`q` signal set in `R^l` (`l` in {1, 2}) together with a bijective
/// labeling `phi: {0..q-1} -> points`.
#[derive(Clone, Debug, PartialEq)]
pub struct LabeledConstellation {
    name: String,
    dim: usize,
    /// Flat `q * dim` coordinates.
    points: Vec<f64>,
    /// `phi(u) = points[label[u]]`.
    label: Vec<usize>,
    /// `phi(u)` materialized in label order, flat `q * dim`.
    mapped: Vec<f64>,
}

impl LabeledConstellation {
    /// Builds a constellation from flat coordinates and a labeling, checking
    /// every invariant.
    pub fn new(name: impl Into<String>, dim: usize, points: Vec<f64>, label: Vec<usize>) -> Result<Self> {
        if dim != 1 && dim != 2 {
            return Err(Error::InvalidConstellation(format!("dimension must be 1 or 2, got {dim}")));
        }
        if points.len() % dim != 0 {
            return Err(Error::InvalidConstellation("coordinate count is not a multiple of the dimension".into()));
        }
        let q = points.len() / dim;
        if q < 2 {
            return Err(Error::InvalidConstellation(format!("need at least 2 points, got {q}")));
        }
        if points.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidConstellation("non-finite coordinate".into()));
        }
        check_permutation(&label, q)?;
        for a in 0..q {
            for b in (a + 1)..q {
                let pa = &points[a * dim..(a + 1) * dim];
                let pb = &points[b * dim..(b + 1) * dim];
                if squared_distance(pa, pb) == 0.0 {
                    return Err(Error::InvalidConstellation(format!("points {a} and {b} coincide")));
                }
            }
        }
        let mut mapped = Vec::with_capacity(points.len());
        for &idx in &label {
            mapped.extend_from_slice(&points[idx * dim..(idx + 1) * dim]);
        }
        Ok(Self { name: name.into(), dim, points, label, mapped })
    }

    /// Returns one of the built-in constellations with its natural labeling.
    ///
    /// * BPSK: `0 -> +1`, `1 -> -1`
    /// * M-PAM: `u -> 2u - (M - 1)`, except 3-PAM which uses `{-1, 0, +1}`
    /// * 8-PSK: `u -> (cos 2 pi u / 8, sin 2 pi u / 8)`
    /// * 16-QAM: row-major over `{-3, -1, 1, 3}^2`
    pub fn builtin(name: &str) -> Result<Self> {
        let key = name.trim().to_ascii_uppercase();
        let (canonical, dim, points): (&str, usize, Vec<f64>) = match key.as_str() {
            "BPSK" | "2-PAM" => ("BPSK", 1, vec![1.0, -1.0]),
            "3-PAM" => ("3-PAM", 1, vec![-1.0, 0.0, 1.0]),
            "4-PAM" => ("4-PAM", 1, pam(4)),
            "8-PSK" => {
                let pts = (0..8)
                    .flat_map(|u| {
                        let theta = 2.0 * PI * u as f64 / 8.0;
                        [theta.cos(), theta.sin()]
                    })
                    .collect();
                ("8-PSK", 2, pts)
            }
            "16-QAM" => {
                let levels = [-3.0, -1.0, 1.0, 3.0];
                let pts = levels.iter().flat_map(|&row| levels.iter().flat_map(move |&col| [col, row])).collect();
                ("16-QAM", 2, pts)
            }
            "16-PAM" | "16-PAM-UNIFORM" => ("16-PAM-uniform", 1, pam(16)),
            _ => return Err(Error::UnknownConstellation(name.to_string())),
        };
        let q = points.len() / dim;
        Self::new(canonical, dim, points, (0..q).collect())
    }

    /// Resolves either a built-in name or a path to a constellation file.
    pub fn resolve(name_or_path: &str) -> Result<Self> {
        match Self::builtin(name_or_path) {
            Ok(c) => Ok(c),
            Err(Error::UnknownConstellation(_)) if Path::new(name_or_path).exists() => Self::load(name_or_path),
            Err(e) => Err(e),
        }
    }

    /// Loads a constellation from the text format:
    ///
    /// ```text
    /// # comment
    /// q l
    /// x_0 [y_0]
    /// ...
    /// x_{q-1} [y_{q-1}]
    /// label_0 ... label_{q-1}
    /// ```
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        let name = path.file_stem().and_then(|s| s.to_str()).unwrap_or("file").to_string();
        Self::parse(&name, &text).map_err(|e| match e {
            Error::MalformedConstellation { reason, .. } => {
                Error::MalformedConstellation { path: path.to_path_buf(), reason }
            }
            other => other,
        })
    }

    /// Parses the text format described in [`LabeledConstellation::load`].
    pub fn parse(name: &str, text: &str) -> Result<Self> {
        let malformed = |reason: String| Error::MalformedConstellation { path: name.into(), reason };
        let mut rows = text
            .lines()
            .map(|l| l.split('#').next().unwrap_or("").trim())
            .filter(|l| !l.is_empty());

        let header = rows.next().ok_or_else(|| malformed("empty file".into()))?;
        let header: Vec<usize> = header
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| malformed(format!("bad header token `{t}`"))))
            .collect::<Result<_>>()?;
        let [q, dim] = header[..] else {
            return Err(malformed("header must be `q l`".into()));
        };

        let mut points = Vec::with_capacity(q * dim);
        for i in 0..q {
            let row = rows.next().ok_or_else(|| malformed(format!("missing point row {i}")))?;
            let coords: Vec<f64> = row
                .split_whitespace()
                .map(|t| t.parse().map_err(|_| malformed(format!("bad coordinate `{t}`"))))
                .collect::<Result<_>>()?;
            if coords.len() != dim {
                return Err(malformed(format!("point row {i} has {} coordinates, expected {dim}", coords.len())));
            }
            points.extend(coords);
        }

        let label_row = rows.next().ok_or_else(|| malformed("missing label row".into()))?;
        let label: Vec<usize> = label_row
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| malformed(format!("bad label `{t}`"))))
            .collect::<Result<_>>()?;
        if rows.next().is_some() {
            return Err(malformed("trailing content after label row".into()));
        }
        Self::new(name, dim, points, label)
    }

    /// Serializes to the text format accepted by [`LabeledConstellation::parse`].
    pub fn to_file_string(&self) -> String {
        let mut out = format!("# {}\n{} {}\n", self.name, self.q(), self.dim);
        for p in self.points.chunks(self.dim) {
            let coords: Vec<String> = p.iter().map(|x| format!("{x:?}")).collect();
            let _ = writeln!(out, "{}", coords.join(" "));
        }
        let labels: Vec<String> = self.label.iter().map(|l| l.to_string()).collect();
        let _ = writeln!(out, "{}", labels.join(" "));
        out
    }

    /// Same points under a different labeling.
    pub fn with_labeling(&self, label: Vec<usize>) -> Result<Self> {
        Self::new(self.name.clone(), self.dim, self.points.clone(), label)
    }

    /// Every point multiplied by `k`.
    pub fn scaled(&self, k: f64) -> Result<Self> {
        Self::new(self.name.clone(), self.dim, self.points.iter().map(|x| x * k).collect(), self.label.clone())
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Alphabet size `q`.
    pub fn q(&self) -> usize {
        self.label.len()
    }

    /// Signal dimension `l`.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn label(&self) -> &[usize] {
        &self.label
    }

    /// Raw point `i` (in storage order, not label order).
    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }

    /// `phi(u)`.
    #[inline]
    pub fn signal(&self, u: usize) -> &[f64] {
        &self.mapped[u * self.dim..(u + 1) * self.dim]
    }

    /// All `phi(u)` for `u = 0..q`, flat.
    #[inline]
    pub fn signals(&self) -> &[f64] {
        &self.mapped
    }

    /// `sum_{s in A} ||s||^2`.
    pub fn energy_sum(&self) -> f64 {
        self.points.iter().map(|x| x * x).sum()
    }

    /// Average energy per real dimension, `sum ||s||^2 / (l q)`.
    pub fn energy_per_dim(&self) -> f64 {
        self.energy_sum() / (self.dim * self.q()) as f64
    }

    pub fn min_distance(&self) -> f64 {
        let q = self.q();
        let mut best = f64::INFINITY;
        for a in 0..q {
            for b in (a + 1)..q {
                best = best.min(squared_distance(self.point(a), self.point(b)));
            }
        }
        best.sqrt()
    }

    /// Noise scale for this constellation at `snr_db`.
    pub fn sigma_from_snr(&self, snr_db: f64) -> NoiseScale {
        NoiseScale::from_snr(self, snr_db)
    }
}

fn pam(m: usize) -> Vec<f64> {
    (0..m).map(|u| 2.0 * u as f64 - (m as f64 - 1.0)).collect()
}

fn check_permutation(label: &[usize], q: usize) -> Result<()> {
    if label.len() != q {
        return Err(Error::InvalidConstellation(format!("label has {} entries, expected {q}", label.len())));
    }
    let mut seen = vec![false; q];
    for &l in label {
        if l >= q || std::mem::replace(&mut seen[l], true) {
            return Err(Error::InvalidConstellation(format!("label {label:?} is not a bijection onto 0..{q}")));
        }
    }
    Ok(())
}

#[inline]
pub(crate) fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Converts dB to a linear power ratio.
#[inline]
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Per-dimension noise standard deviation tied to an SNR and a constellation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NoiseScale {
    snr_db: f64,
    sigma: f64,
}

impl NoiseScale {
    /// `sigma = sqrt(sum ||s||^2 / (l q snr))`.
    pub fn from_snr(c: &LabeledConstellation, snr_db: f64) -> Self {
        let sigma = (c.energy_per_dim() / db_to_linear(snr_db)).sqrt();
        Self { snr_db, sigma }
    }

    /// Pins `sigma` directly; the implied SNR is recomputed from the
    /// constellation energy.
    pub fn from_sigma(c: &LabeledConstellation, sigma: f64) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::NonPositiveSigma(sigma));
        }
        let snr_db = 10.0 * (c.energy_per_dim() / (sigma * sigma)).log10();
        Ok(Self { snr_db, sigma })
    }

    pub fn snr_db(&self) -> f64 {
        self.snr_db
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_points() {
        let bpsk = LabeledConstellation::builtin("BPSK").unwrap();
        assert_eq!(bpsk.signal(0), &[1.0]);
        assert_eq!(bpsk.signal(1), &[-1.0]);

        let pam3 = LabeledConstellation::builtin("3-PAM").unwrap();
        assert_eq!(pam3.signals(), &[-1.0, 0.0, 1.0]);

        let pam4 = LabeledConstellation::builtin("4-pam").unwrap();
        assert_eq!(pam4.signals(), &[-3.0, -1.0, 1.0, 3.0]);

        let qam = LabeledConstellation::builtin("16-QAM").unwrap();
        assert_eq!(qam.signal(0), &[-3.0, -3.0]);
        assert_eq!(qam.signal(1), &[-1.0, -3.0]);
        assert_eq!(qam.signal(15), &[3.0, 3.0]);

        assert!(matches!(LabeledConstellation::builtin("7-APSK"), Err(Error::UnknownConstellation(_))));
    }

    #[test]
    fn builtin_labels_are_bijections() {
        for name in BUILTIN_NAMES {
            let c = LabeledConstellation::builtin(name).unwrap();
            let mut l = c.label().to_vec();
            l.sort_unstable();
            assert_eq!(l, (0..c.q()).collect::<Vec<_>>(), "{name}");
            assert!(c.min_distance() > 0.0);
        }
    }

    #[test]
    fn psk_and_qam_norms() {
        let psk = LabeledConstellation::builtin("8-PSK").unwrap();
        for u in 0..8 {
            let n: f64 = psk.signal(u).iter().map(|x| x * x).sum();
            assert!((n - 1.0).abs() < 1e-12);
        }
        let qam = LabeledConstellation::builtin("16-QAM").unwrap();
        let mut norms: Vec<f64> = (0..16).map(|u| qam.signal(u).iter().map(|x| x * x).sum()).collect();
        norms.sort_by(f64::total_cmp);
        norms.dedup();
        assert_eq!(norms, vec![2.0, 10.0, 18.0]);
    }

    #[test]
    fn sigma_examples() {
        let bpsk = LabeledConstellation::builtin("BPSK").unwrap();
        assert!((bpsk.sigma_from_snr(0.0).sigma() - 1.0).abs() < 1e-15);
        // 10 log10(4) = 6.0206 dB
        assert!((bpsk.sigma_from_snr(10.0 * 4f64.log10()).sigma() - 0.5).abs() < 1e-12);
        let pam4 = LabeledConstellation::builtin("4-PAM").unwrap();
        assert!((pam4.sigma_from_snr(0.0).sigma() - 5f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn sigma_scales_with_points() {
        let psk = LabeledConstellation::builtin("8-PSK").unwrap();
        let big = psk.scaled(3.5).unwrap();
        for snr in [-3.0, 0.0, 7.5] {
            let ratio = big.sigma_from_snr(snr).sigma() / psk.sigma_from_snr(snr).sigma();
            assert!((ratio - 3.5).abs() < 1e-12);
        }
    }

    #[test]
    fn sigma_round_trip() {
        let qam = LabeledConstellation::builtin("16-QAM").unwrap();
        let n = qam.sigma_from_snr(12.7);
        let back = NoiseScale::from_sigma(&qam, n.sigma()).unwrap();
        assert!((back.snr_db() - 12.7).abs() < 1e-12);
        assert!(NoiseScale::from_sigma(&qam, 0.0).is_err());
    }

    #[test]
    fn parse_bpsk_file() {
        let c = LabeledConstellation::parse("BPSK", "# antipodal\n2 1\n+1\n-1\n0 1\n").unwrap();
        assert_eq!(c, LabeledConstellation::builtin("BPSK").unwrap());
    }

    #[test]
    fn parse_rejects_bad_files() {
        let non_bijective = LabeledConstellation::parse("x", "2 1\n1\n-1\n0 0\n");
        assert!(matches!(non_bijective, Err(Error::InvalidConstellation(_))));

        let duplicate = LabeledConstellation::parse("x", "2 1\n1\n1\n0 1\n");
        assert!(matches!(duplicate, Err(Error::InvalidConstellation(_))));

        for bad in ["", "2\n1\n-1\n0 1", "2 1\n1\n0 1", "2 1\n1 2\n-1\n0 1", "2 1\n1\n-1\n0 1\n5", "2 3\n1 1 1\n2 2 2\n0 1"] {
            assert!(LabeledConstellation::parse("x", bad).is_err(), "{bad:?}");
        }
    }

    #[test]
    fn parse_nonuniform_pam16() {
        // Any strictly increasing 16-point set is accepted.
        let mut text = String::from("16 1\n");
        let mut x = -10.0;
        for i in 0..16 {
            x += 0.5 + 0.1 * (i as f64 - 7.5).abs();
            text.push_str(&format!("{x}\n"));
        }
        text.push_str(&(0..16).map(|i| i.to_string()).collect::<Vec<_>>().join(" "));
        let c = LabeledConstellation::parse("nu16", &text).unwrap();
        assert_eq!((c.q(), c.dim()), (16, 1));
    }

    #[test]
    fn file_string_round_trip() {
        for name in BUILTIN_NAMES {
            let c = LabeledConstellation::builtin(name).unwrap().with_labeling(
                (0..LabeledConstellation::builtin(name).unwrap().q()).rev().collect(),
            );
            let c = c.unwrap();
            let back = LabeledConstellation::parse(c.name(), &c.to_file_string()).unwrap();
            assert_eq!(back, c);
        }
    }
}
