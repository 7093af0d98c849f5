//! Constellations, labelings, input distributions and channel descriptions.
//!
//! Every constellation stores its points as complex numbers; one-dimensional
//! signal sets keep the imaginary part at zero. Labels are `m`-bit integers
//! where bit level 0 (`b1`) is the most significant bit, which is also the
//! sign/quadrant prefix added by [`augment_1d`] and [`augment_2d`].

use std::fmt;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Distance below which two normalized points count as coincident.
pub const COINCIDENT_TOL: f64 = 1e-9;

/// Real or complex AWGN channel.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Dimension {
    Real,
    Complex,
}

impl Dimension {
    /// Number of real dimensions per channel use.
    pub fn real_dims(self) -> usize {
        match self {
            Dimension::Real => 1,
            Dimension::Complex => 2,
        }
    }
}

/// AWGN channel at a given SNR, `SNR = E|X|^2 / E|Z|^2`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChannelSpec {
    snr_db: f64,
    dimension: Dimension,
}

impl ChannelSpec {
    pub fn new(snr_db: f64, dimension: Dimension) -> Result<Self> {
        if !snr_db.is_finite() {
            return Err(Error::InvalidParameter(format!("snr_db must be finite, got {snr_db}")));
        }
        Ok(ChannelSpec { snr_db, dimension })
    }

    pub fn real(snr_db: f64) -> Result<Self> {
        Self::new(snr_db, Dimension::Real)
    }

    pub fn complex(snr_db: f64) -> Result<Self> {
        Self::new(snr_db, Dimension::Complex)
    }

    pub fn snr_db(&self) -> f64 {
        self.snr_db
    }

    pub fn dimension(&self) -> Dimension {
        self.dimension
    }

    pub fn snr_linear(&self) -> f64 {
        db_to_linear(self.snr_db)
    }

    /// Total noise variance `E|Z|^2` for unit signal power.
    pub fn noise_variance(&self) -> f64 {
        1.0 / self.snr_linear()
    }

    /// Noise variance per real dimension for unit signal power. A complex
    /// channel splits the total variance equally over I and Q.
    pub fn noise_variance_per_dim(&self) -> f64 {
        self.noise_variance() / self.dimension.real_dims() as f64
    }

    pub fn with_snr_db(&self, snr_db: f64) -> Result<Self> {
        Self::new(snr_db, self.dimension)
    }
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(lin: f64) -> f64 {
    10.0 * lin.log10()
}

/// One- or two-dimensional signal set.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Geometry {
    #[serde(rename = "1d")]
    OneD,
    #[serde(rename = "2d")]
    TwoD,
}

/// Probability mass function over constellation points.
#[derive(Clone, Debug, PartialEq)]
pub struct InputDistribution {
    probs: Vec<f64>,
}

impl InputDistribution {
    /// Builds a distribution, renormalizing the mass to exactly one. Inputs
    /// that are off by more than `1e-9` are rejected.
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::Degenerate("empty distribution".into()));
        }
        if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::InvalidParameter("probabilities must be finite and non-negative".into()));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidParameter(format!("probabilities sum to {total}, expected 1")));
        }
        Ok(InputDistribution { probs: probs.into_iter().map(|p| p / total).collect() })
    }

    /// Normalizes arbitrary non-negative weights into a distribution.
    pub fn from_weights(weights: &[f64]) -> Result<Self> {
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) || !total.is_finite() || weights.iter().any(|w| *w < 0.0) {
            return Err(Error::Degenerate("weights must be non-negative with positive finite sum".into()));
        }
        Ok(InputDistribution { probs: weights.iter().map(|w| w / total).collect() })
    }

    pub fn uniform(size: usize) -> Self {
        InputDistribution { probs: vec![1.0 / size as f64; size] }
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn is_uniform(&self) -> bool {
        let u = 1.0 / self.probs.len() as f64;
        self.probs.iter().all(|p| (p - u).abs() < 1e-15)
    }

    /// Entropy in bits.
    pub fn entropy(&self) -> f64 {
        entropy_bits(&self.probs)
    }

    /// Product distribution `P(i, k) = self(i) * other(k)`, `i`-major.
    pub fn product(&self, other: &InputDistribution) -> InputDistribution {
        let probs = self
            .probs
            .iter()
            .flat_map(|a| other.probs.iter().map(move |b| a * b))
            .collect();
        InputDistribution { probs }
    }
}

/// `x log2 x` with the `0 log 0 = 0` convention; masses below `1e-300` count as zero.
pub fn xlog2x(p: f64) -> f64 {
    if p < 1e-300 {
        0.0
    } else {
        p * p.log2()
    }
}

pub fn entropy_bits(probs: &[f64]) -> f64 {
    -probs.iter().map(|&p| xlog2x(p)).sum::<f64>()
}

/// Ordered point set with optional binary labels.
#[derive(Clone, Debug, PartialEq)]
pub struct Constellation {
    points: Vec<Complex64>,
    labels: Option<Vec<u32>>,
    bits: u32,
    geometry: Geometry,
}

impl Constellation {
    /// Builds a constellation. The size must be a power of two; labels, when
    /// given, must be a permutation of `0..M`.
    pub fn new(points: Vec<Complex64>, labels: Option<Vec<u32>>, geometry: Geometry) -> Result<Self> {
        let size = points.len();
        if size == 0 || !size.is_power_of_two() {
            return Err(Error::InvalidParameter(format!("constellation size must be a power of two, got {size}")));
        }
        if points.iter().any(|p| !p.re.is_finite() || !p.im.is_finite()) {
            return Err(Error::InvalidParameter("non-finite constellation point".into()));
        }
        let mut points = points;
        if geometry == Geometry::OneD {
            if points.iter().any(|p| p.im != 0.0) {
                return Err(Error::Shape("one-dimensional constellation with non-zero imaginary part".into()));
            }
            for p in points.iter_mut() {
                p.im = 0.0;
            }
        }
        let bits = size.trailing_zeros();
        if let Some(l) = &labels {
            validate_labels(l, bits)?;
        }
        Ok(Constellation { points, labels, bits, geometry })
    }

    /// Real-valued constellation from its coordinates.
    pub fn real(points: &[f64], labels: Option<Vec<u32>>) -> Result<Self> {
        Self::new(points.iter().map(|&x| Complex64::new(x, 0.0)).collect(), labels, Geometry::OneD)
    }

    /// Equidistant `2^m`-ASK on `{±1, ±3, …, ±(2^m − 1)}` in ascending order,
    /// Gray labeled by mirroring a BRGC-labeled positive half. Not normalized.
    pub fn ask(m: u32) -> Result<Self> {
        if m == 0 || m > 16 {
            return Err(Error::InvalidParameter(format!("ASK bit count must be in 1..=16, got {m}")));
        }
        let half_len = 1usize << (m - 1);
        let half: Vec<f64> = (0..half_len).map(|i| (2 * i + 1) as f64).collect();
        let sublabels = if m == 1 { vec![0] } else { brgc_labels(m - 1)? };
        let pts = mirror_half(&half);
        Constellation::real(&pts, Some(mirror_labels(&sublabels, m)))
    }

    /// Uniform square QAM as the product of two equidistant ASKs, normalized.
    pub fn square_qam(m_per_dim: u32) -> Result<Self> {
        let a = Constellation::ask(m_per_dim)?;
        product_constellation(&a, &a)
    }

    pub fn points(&self) -> &[Complex64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Bits per symbol, `m = log2 M`.
    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn geometry(&self) -> Geometry {
        self.geometry
    }

    pub fn labels(&self) -> Option<&[u32]> {
        self.labels.as_deref()
    }

    /// Labels, or a labeling error when the constellation is unlabeled.
    pub fn require_labels(&self) -> Result<&[u32]> {
        self.labels
            .as_deref()
            .ok_or_else(|| Error::Labeling("constellation carries no bit labels".into()))
    }

    pub fn with_labels(&self, labels: Vec<u32>) -> Result<Self> {
        validate_labels(&labels, self.bits)?;
        Ok(Constellation { labels: Some(labels), ..self.clone() })
    }

    /// Bit `level` (0 = `b1`, most significant) of point `k`'s label.
    pub fn label_bit(&self, k: usize, level: u32) -> Result<u8> {
        let labels = self.require_labels()?;
        Ok(label_bit(labels[k], self.bits, level))
    }

    /// Indices of the points whose `level`-th label bit equals `bit`.
    pub fn subset(&self, level: u32, bit: u8) -> Result<Vec<usize>> {
        let labels = self.require_labels()?;
        Ok((0..self.len()).filter(|&k| label_bit(labels[k], self.bits, level) == bit).collect())
    }

    /// Real coordinates of a one-dimensional constellation.
    pub fn real_points(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.re).collect()
    }

    /// Average energy `Σ p_k |x_k|^2`.
    pub fn average_power(&self, p: &InputDistribution) -> f64 {
        self.points.iter().zip(p.probs()).map(|(x, w)| w * x.norm_sqr()).sum()
    }

    /// Pairs of points closer than `tol`.
    pub fn coincident_pairs(&self, tol: f64) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for i in 0..self.len() {
            for j in i + 1..self.len() {
                if (self.points[i] - self.points[j]).norm() < tol {
                    out.push((i, j));
                }
            }
        }
        out
    }

    pub(crate) fn scaled(&self, factor: f64) -> Constellation {
        Constellation { points: self.points.iter().map(|p| p * factor).collect(), ..self.clone() }
    }

    /// Label strings, most significant bit first.
    pub fn label_strings(&self) -> Option<Vec<String>> {
        self.labels.as_ref().map(|l| l.iter().map(|&v| format_label(v, self.bits)).collect())
    }
}

impl fmt::Display for Constellation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let labels = self.label_strings();
        for (k, p) in self.points.iter().enumerate() {
            if k > 0 {
                write!(f, ", ")?;
            }
            match self.geometry {
                Geometry::OneD => write!(f, "{:.6}", p.re)?,
                Geometry::TwoD => write!(f, "{:.6}{:+.6}j", p.re, p.im)?,
            }
            if let Some(l) = &labels {
                write!(f, " [{}]", l[k])?;
            }
        }
        Ok(())
    }
}

pub(crate) fn label_bit(label: u32, bits: u32, level: u32) -> u8 {
    ((label >> (bits - 1 - level)) & 1) as u8
}

pub fn format_label(label: u32, bits: u32) -> String {
    (0..bits).map(|lvl| if label_bit(label, bits, lvl) == 1 { '1' } else { '0' }).collect()
}

pub fn parse_label(s: &str) -> Result<u32> {
    if s.len() > 31 || s.chars().any(|c| c != '0' && c != '1') {
        return Err(Error::Parse(format!("invalid label string {s:?}")));
    }
    Ok(s.chars().fold(0u32, |acc, c| (acc << 1) | (c == '1') as u32))
}

fn validate_labels(labels: &[u32], bits: u32) -> Result<()> {
    let size = 1usize << bits;
    if labels.len() != size {
        return Err(Error::Labeling(format!("expected {size} labels, got {}", labels.len())));
    }
    let mut seen = vec![false; size];
    for &l in labels {
        let idx = l as usize;
        if idx >= size || seen[idx] {
            return Err(Error::Labeling(format!("labels must be distinct {bits}-bit values")));
        }
        seen[idx] = true;
    }
    Ok(())
}

/// Binary reflected Gray code of length `2^m`.
pub fn brgc_labels(m: u32) -> Result<Vec<u32>> {
    if !(1..=16).contains(&m) {
        return Err(Error::InvalidParameter(format!("BRGC bit count must be in 1..=16, got {m}")));
    }
    Ok((0..1u32 << m).map(|i| i ^ (i >> 1)).collect())
}

/// Positive half-constellation with `(m−1)`-bit sublabels.
#[derive(Clone, Debug, PartialEq)]
pub struct LabeledHalf {
    pub points: Vec<f64>,
    pub sublabels: Vec<u32>,
}

/// First-quadrant constellation with `(m−2)`-bit sublabels.
#[derive(Clone, Debug, PartialEq)]
pub struct LabeledQuadrant {
    pub points: Vec<Complex64>,
    pub sublabels: Vec<u32>,
}

fn mirror_half(half: &[f64]) -> Vec<f64> {
    half.iter().rev().map(|x| -x).chain(half.iter().copied()).collect()
}

fn mirror_labels(sublabels: &[u32], bits: u32) -> Vec<u32> {
    let sign = 1u32 << (bits - 1);
    sublabels.iter().rev().copied().chain(sublabels.iter().map(|l| l | sign)).collect()
}

fn warn_coincident(c: &Constellation) {
    let pairs = c.coincident_pairs(COINCIDENT_TOL);
    if !pairs.is_empty() {
        log::warn!("constellation has {} coincident point pair(s), e.g. {:?}", pairs.len(), pairs[0]);
    }
}

/// Mirrors a positive half around zero. The negated copies come first (in
/// reverse order) followed by the originals, so a sorted half yields an
/// ascending constellation. Mirrored labels get prefix bit 0, originals 1.
/// The result is normalized to unit power under a uniform distribution.
pub fn augment_1d(h: &LabeledHalf) -> Result<Constellation> {
    let half = h.points.len();
    if half == 0 || !half.is_power_of_two() {
        return Err(Error::InvalidParameter(format!("half size must be a power of two, got {half}")));
    }
    if let Some(x) = h.points.iter().find(|x| !(**x >= 0.0)) {
        return Err(Error::Feasibility(format!("half point {x} is negative")));
    }
    if h.sublabels.len() != half {
        return Err(Error::Labeling("one sublabel per half point required".into()));
    }
    let bits = (2 * half).trailing_zeros();
    let c = Constellation::real(&mirror_half(&h.points), Some(mirror_labels(&h.sublabels, bits)))?;
    let c = normalize_power(&c, &InputDistribution::uniform(c.len()))?;
    warn_coincident(&c);
    Ok(c)
}

/// Quadrant prefixes for quadrants I, II, III, IV.
pub const QUADRANT_PREFIXES: [u32; 4] = [0b00, 0b10, 0b11, 0b01];

/// Replicates a first-quadrant set into all four quadrants by sign flips:
/// I `(+,+)` → `00`, II `(−,+)` → `10`, III `(−,−)` → `11`, IV `(+,−)` → `01`.
/// The result is normalized to unit power under a uniform distribution.
pub fn augment_2d(q: &LabeledQuadrant) -> Result<Constellation> {
    let quarter = q.points.len();
    if quarter == 0 || !quarter.is_power_of_two() {
        return Err(Error::InvalidParameter(format!("quadrant size must be a power of two, got {quarter}")));
    }
    if let Some(p) = q.points.iter().find(|p| !(p.re >= 0.0 && p.im >= 0.0)) {
        return Err(Error::Feasibility(format!("quadrant point {p} lies outside the first quadrant")));
    }
    if q.sublabels.len() != quarter {
        return Err(Error::Labeling("one sublabel per quadrant point required".into()));
    }
    let bits = (4 * quarter).trailing_zeros();
    let signs = [(1.0, 1.0), (-1.0, 1.0), (-1.0, -1.0), (1.0, -1.0)];
    let mut points = Vec::with_capacity(4 * quarter);
    let mut labels = Vec::with_capacity(4 * quarter);
    for (quad, (sr, si)) in signs.iter().enumerate() {
        for (p, l) in q.points.iter().zip(&q.sublabels) {
            points.push(Complex64::new(sr * p.re, si * p.im));
            labels.push((QUADRANT_PREFIXES[quad] << (bits - 2)) | l);
        }
    }
    let c = Constellation::new(points, Some(labels), Geometry::TwoD)?;
    let c = normalize_power(&c, &InputDistribution::uniform(c.len()))?;
    warn_coincident(&c);
    Ok(c)
}

/// Scales the points to unit average power under `p`.
pub fn normalize_power(c: &Constellation, p: &InputDistribution) -> Result<Constellation> {
    if p.len() != c.len() {
        return Err(Error::Shape(format!("distribution has {} entries, constellation {}", p.len(), c.len())));
    }
    let power = c.average_power(p);
    if !(power > 0.0) {
        return Err(Error::Degenerate("constellation has zero average power".into()));
    }
    Ok(c.scaled(1.0 / power.sqrt()))
}

/// Cartesian product `x_a + j x_b` of two one-dimensional constellations,
/// `a`-major, labels concatenated, normalized under the uniform distribution.
pub fn product_constellation(a: &Constellation, b: &Constellation) -> Result<Constellation> {
    let (c, _) = product_shaped(a, &InputDistribution::uniform(a.len()), b, &InputDistribution::uniform(b.len()))?;
    Ok(c)
}

/// Cartesian product carrying the product distribution; normalized under it.
pub fn product_shaped(
    a: &Constellation,
    pa: &InputDistribution,
    b: &Constellation,
    pb: &InputDistribution,
) -> Result<(Constellation, InputDistribution)> {
    if a.geometry() != Geometry::OneD || b.geometry() != Geometry::OneD {
        return Err(Error::Shape("product construction needs one-dimensional factors".into()));
    }
    if pa.len() != a.len() || pb.len() != b.len() {
        return Err(Error::Shape("distribution length does not match constellation".into()));
    }
    let mut points = Vec::with_capacity(a.len() * b.len());
    for xa in a.points() {
        for xb in b.points() {
            points.push(Complex64::new(xa.re, xb.re));
        }
    }
    let labels = match (a.labels(), b.labels()) {
        (Some(la), Some(lb)) => Some(
            la.iter()
                .flat_map(|&x| lb.iter().map(move |&y| (x << b.bits()) | y))
                .collect(),
        ),
        _ => None,
    };
    let p = pa.product(pb);
    let c = Constellation::new(points, labels, Geometry::TwoD)?;
    Ok((normalize_power(&c, &p)?, p))
}

#[derive(Serialize, Deserialize)]
struct ConstellationFile {
    geometry: Geometry,
    points: Vec<[f64; 2]>,
    labels: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    probs: Option<Vec<f64>>,
}

/// Parses the JSON exchange format and normalizes the points to unit power
/// under the attached (or uniform) distribution.
pub fn constellation_from_json(text: &str) -> Result<(Constellation, InputDistribution)> {
    let file: ConstellationFile = serde_json::from_str(text)?;
    let points = file.points.iter().map(|[re, im]| Complex64::new(*re, *im)).collect::<Vec<_>>();
    let labels = if file.labels.is_empty() {
        None
    } else {
        let bits = points.len().trailing_zeros() as usize;
        if file.labels.iter().any(|l| l.len() != bits) {
            return Err(Error::Labeling(format!("every label must have {bits} bits")));
        }
        Some(file.labels.iter().map(|s| parse_label(s)).collect::<Result<Vec<_>>>()?)
    };
    let c = Constellation::new(points, labels, file.geometry)?;
    let p = match file.probs {
        Some(probs) => InputDistribution::new(probs)?,
        None => InputDistribution::uniform(c.len()),
    };
    let c = normalize_power(&c, &p)?;
    warn_coincident(&c);
    Ok((c, p))
}

/// Serializes a constellation (normalized under `p`) to the JSON format.
/// Uniform distributions are omitted from the output.
pub fn constellation_to_json(c: &Constellation, p: &InputDistribution) -> Result<String> {
    let c = normalize_power(c, p)?;
    let file = ConstellationFile {
        geometry: c.geometry(),
        points: c.points().iter().map(|z| [z.re, z.im]).collect(),
        labels: c.label_strings().unwrap_or_default(),
        probs: if p.is_uniform() { None } else { Some(p.probs().to_vec()) },
    };
    Ok(serde_json::to_string_pretty(&file)?)
}

pub fn load_constellation(path: impl AsRef<Path>) -> Result<(Constellation, InputDistribution)> {
    constellation_from_json(&std::fs::read_to_string(path)?)
}

pub fn save_constellation(path: impl AsRef<Path>, c: &Constellation, p: &InputDistribution) -> Result<()> {
    std::fs::write(path, constellation_to_json(c, p)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reals(c: &Constellation) -> Vec<f64> {
        c.real_points()
    }

    #[test]
    fn normalize_uniform_4ask() {
        let c = Constellation::real(&[-3.0, -1.0, 1.0, 3.0], None).unwrap();
        let n = normalize_power(&c, &InputDistribution::uniform(4)).unwrap();
        let s = 5f64.sqrt();
        for (x, e) in reals(&n).iter().zip([-3.0 / s, -1.0 / s, 1.0 / s, 3.0 / s]) {
            assert!((x - e).abs() < 1e-15);
        }
    }

    #[test]
    fn normalize_bpsk_is_identity() {
        let c = Constellation::real(&[-1.0, 1.0], None).unwrap();
        let n = normalize_power(&c, &InputDistribution::uniform(2)).unwrap();
        assert_eq!(reals(&n), vec![-1.0, 1.0]);
    }

    #[test]
    fn normalize_shaped_4ask() {
        let c = Constellation::real(&[-3.0, -1.0, 1.0, 3.0], None).unwrap();
        let p = InputDistribution::new(vec![0.4, 0.1, 0.1, 0.4]).unwrap();
        let n = normalize_power(&c, &p).unwrap();
        let scale = 1.0 / (0.8f64 * 9.0 + 0.2).sqrt();
        assert!((n.points()[3].re - 3.0 * scale).abs() < 1e-14);
        assert!((n.average_power(&p) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn normalize_zero_constellation_fails() {
        let c = Constellation::real(&[0.0, 0.0], None).unwrap();
        assert!(matches!(normalize_power(&c, &InputDistribution::uniform(2)), Err(Error::Degenerate(_))));
    }

    #[test]
    fn brgc_small_cases() {
        assert_eq!(brgc_labels(1).unwrap(), vec![0, 1]);
        assert_eq!(brgc_labels(2).unwrap(), vec![0b00, 0b01, 0b11, 0b10]);
        // reflect-and-prefix construction
        let mut reference = vec![String::from("0"), String::from("1")];
        for _ in 1..3 {
            let mut next: Vec<String> = reference.iter().map(|s| format!("0{s}")).collect();
            next.extend(reference.iter().rev().map(|s| format!("1{s}")));
            reference = next;
        }
        let got: Vec<String> = brgc_labels(3).unwrap().iter().map(|&l| format_label(l, 3)).collect();
        assert_eq!(got, reference);
        assert!(brgc_labels(0).is_err());
        assert!(brgc_labels(17).is_err());
    }

    #[test]
    fn augment_bpsk() {
        let c = augment_1d(&LabeledHalf { points: vec![1.0], sublabels: vec![0] }).unwrap();
        assert_eq!(reals(&c), vec![-1.0, 1.0]);
        assert_eq!(c.labels().unwrap(), &[0, 1]);
    }

    #[test]
    fn augment_1d_sign_prefix() {
        let c = augment_1d(&LabeledHalf { points: vec![1.0, 3.0], sublabels: vec![0, 1] }).unwrap();
        let s = 5f64.sqrt();
        let expected = [-3.0 / s, -1.0 / s, 1.0 / s, 3.0 / s];
        for (x, e) in reals(&c).iter().zip(expected) {
            assert!((x - e).abs() < 1e-15);
        }
        // mirrored half carries b1 = 0, originals b1 = 1
        assert_eq!(c.label_strings().unwrap(), vec!["01", "00", "10", "11"]);
    }

    #[test]
    fn augment_1d_normalized_half_is_gray() {
        let c = augment_1d(&LabeledHalf { points: vec![0.4472, 1.3416], sublabels: vec![0, 1] }).unwrap();
        assert!((c.average_power(&InputDistribution::uniform(4)) - 1.0).abs() < 1e-12);
        let l = c.labels().unwrap();
        for w in l.windows(2) {
            assert_eq!((w[0] ^ w[1]).count_ones(), 1);
        }
        let s = 5f64.sqrt();
        assert!((c.points()[3].re - 3.0 / s).abs() < 1e-4);
    }

    #[test]
    fn augment_1d_rejects_negative() {
        let r = augment_1d(&LabeledHalf { points: vec![-0.5, 1.0], sublabels: vec![0, 1] });
        assert!(matches!(r, Err(Error::Feasibility(_))));
    }

    #[test]
    fn augment_2d_qpsk() {
        let q = LabeledQuadrant { points: vec![Complex64::new(1.0, 1.0)], sublabels: vec![0] };
        let c = augment_2d(&q).unwrap();
        let r = 1.0 / 2f64.sqrt();
        let expected = [(r, r), (-r, r), (-r, -r), (r, -r)];
        for (p, (re, im)) in c.points().iter().zip(expected) {
            assert!((p.re - re).abs() < 1e-15 && (p.im - im).abs() < 1e-15);
        }
        assert_eq!(c.label_strings().unwrap(), vec!["00", "10", "11", "01"]);
    }

    #[test]
    fn augment_2d_axis_point_is_degenerate_but_allowed() {
        let q = LabeledQuadrant { points: vec![Complex64::new(1.0, 0.0)], sublabels: vec![0] };
        let c = augment_2d(&q).unwrap();
        assert_eq!(c.coincident_pairs(COINCIDENT_TOL).len(), 2);
    }

    #[test]
    fn augment_2d_rejects_outside_quadrant() {
        let q = LabeledQuadrant { points: vec![Complex64::new(1.0, -0.1)], sublabels: vec![0] };
        assert!(matches!(augment_2d(&q), Err(Error::Feasibility(_))));
    }

    #[test]
    fn augment_2d_recovers_square_64qam() {
        // first quadrant of 64-QAM: 8-ASK positive levels squared
        let levels = [1.0, 3.0, 5.0, 7.0];
        let gray = brgc_labels(2).unwrap();
        let mut points = Vec::new();
        let mut sub = Vec::new();
        for (i, re) in levels.iter().enumerate() {
            for (k, im) in levels.iter().enumerate() {
                points.push(Complex64::new(*re, *im));
                sub.push((gray[i] << 2) | gray[k]);
            }
        }
        let c = augment_2d(&LabeledQuadrant { points, sublabels: sub }).unwrap();
        let reference = Constellation::square_qam(3).unwrap();
        let mut a: Vec<(i64, i64)> =
            c.points().iter().map(|p| ((p.re * 1e9).round() as i64, (p.im * 1e9).round() as i64)).collect();
        let mut b: Vec<(i64, i64)> =
            reference.points().iter().map(|p| ((p.re * 1e9).round() as i64, (p.im * 1e9).round() as i64)).collect();
        a.sort();
        b.sort();
        assert_eq!(a, b);
        assert_eq!(c.labels().unwrap().len(), 64);
    }

    #[test]
    fn product_bpsk_is_qpsk() {
        let b = Constellation::ask(1).unwrap();
        let q = product_constellation(&b, &b).unwrap();
        assert_eq!(q.len(), 4);
        for p in q.points() {
            assert!((p.norm() - 1.0).abs() < 1e-15);
        }
        assert_eq!(q.label_strings().unwrap(), vec!["00", "01", "10", "11"]);
    }

    #[test]
    fn product_4ask_is_16qam() {
        let a = Constellation::ask(2).unwrap();
        let q = product_constellation(&a, &a).unwrap();
        assert_eq!(q.len(), 16);
        assert_eq!(q.bits(), 4);
        assert!((q.average_power(&InputDistribution::uniform(16)) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn product_rejects_2d_inputs() {
        let q = Constellation::square_qam(1).unwrap();
        assert!(matches!(product_constellation(&q, &q), Err(Error::Shape(_))));
    }

    #[test]
    fn product_entropy_adds() {
        let a = Constellation::ask(2).unwrap();
        let pa = InputDistribution::new(vec![0.1, 0.4, 0.3, 0.2]).unwrap();
        let b = Constellation::ask(3).unwrap();
        let pb = InputDistribution::from_weights(&[1.0, 2.0, 3.0, 4.0, 4.0, 3.0, 2.0, 1.0]).unwrap();
        let (_, p) = product_shaped(&a, &pa, &b, &pb).unwrap();
        assert!((p.entropy() - pa.entropy() - pb.entropy()).abs() < 1e-12);
    }

    #[test]
    fn ask_is_gray_and_ascending() {
        let c = Constellation::ask(4).unwrap();
        let x = c.real_points();
        assert!(x.windows(2).all(|w| w[0] < w[1]));
        assert!(c.labels().unwrap().windows(2).all(|w| (w[0] ^ w[1]).count_ones() == 1));
    }

    #[test]
    fn json_roundtrip_keeps_labels_and_probs() {
        let c = Constellation::ask(2).unwrap();
        let p = InputDistribution::new(vec![0.1, 0.4, 0.4, 0.1]).unwrap();
        let text = constellation_to_json(&c, &p).unwrap();
        let (c2, p2) = constellation_from_json(&text).unwrap();
        assert_eq!(c2.labels(), c.labels());
        assert!((c2.average_power(&p2) - 1.0).abs() < 1e-12);
        for (a, b) in p.probs().iter().zip(p2.probs()) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn json_rejects_duplicate_labels() {
        let text = r#"{"geometry":"1d","points":[[-1,0],[1,0]],"labels":["0","0"]}"#;
        assert!(matches!(constellation_from_json(text), Err(Error::Labeling(_))));
    }

    #[test]
    fn json_rejects_non_power_of_two() {
        let text = r#"{"geometry":"1d","points":[[-1,0],[0,0],[1,0]],"labels":[]}"#;
        assert!(constellation_from_json(text).is_err());
    }
}
