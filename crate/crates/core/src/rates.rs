//! Capacity, symbol-metric (SMD) and bit-metric (BMD) achievable rates on the
//! AWGN channel, their inverses in SNR, and the SNR gap to capacity.
//!
//! All rates are in bits per channel use. One-dimensional expectations use
//! Gauss–Hermite quadrature. Two-dimensional constellations that factor into
//! a product of two labeled one-dimensional sets with a product distribution
//! are reduced to two one-dimensional evaluations; other 2D sets use a tensor
//! Gauss–Hermite rule or seeded Monte-Carlo integration.

use std::f64::consts::LN_2;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal, WeightedIndex};
use rayon::prelude::*;

use crate::constellation::{
    label_bit, linear_to_db, ChannelSpec, Constellation, Dimension, Geometry, InputDistribution,
};
use crate::error::{Error, Result};
use crate::quadrature::GaussHermite;

/// Decoding metric.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Metric {
    Smd,
    Bmd,
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Metric::Smd => "smd",
            Metric::Bmd => "bmd",
        })
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "smd" => Ok(Metric::Smd),
            "bmd" => Ok(Metric::Bmd),
            other => Err(Error::InvalidParameter(format!("unknown metric {other:?} (expected smd or bmd)"))),
        }
    }
}

/// Integration scheme for constellations without product structure.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Scheme2d {
    /// Tensor Gauss–Hermite rule with `n` nodes per axis.
    TensorProduct(usize),
    MonteCarlo { samples: usize, seed: u64 },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadratureConfig {
    pub nodes_1d: usize,
    pub scheme_2d: Scheme2d,
    /// Re-evaluate with doubled node counts and attach a warning when the two
    /// results differ by more than `1e-4` bpcu.
    pub verify: bool,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        QuadratureConfig { nodes_1d: 128, scheme_2d: Scheme2d::TensorProduct(64), verify: false }
    }
}

impl QuadratureConfig {
    pub fn with_nodes(nodes_1d: usize) -> Self {
        QuadratureConfig { nodes_1d, ..Default::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.nodes_1d < 16 {
            return Err(Error::InvalidParameter(format!("nodes_1d must be >= 16, got {}", self.nodes_1d)));
        }
        match self.scheme_2d {
            Scheme2d::TensorProduct(n) if n < 2 => {
                Err(Error::InvalidParameter("tensor rule needs at least 2 nodes per axis".into()))
            }
            Scheme2d::MonteCarlo { samples, .. } if samples < 10_000 => {
                Err(Error::InvalidParameter(format!("Monte-Carlo integration needs >= 1e4 samples, got {samples}")))
            }
            _ => Ok(()),
        }
    }

    /// Twice the nodes (or samples) in every dimension.
    pub fn doubled(&self) -> Self {
        let scheme_2d = match self.scheme_2d {
            Scheme2d::TensorProduct(n) => Scheme2d::TensorProduct(2 * n),
            Scheme2d::MonteCarlo { samples, seed } => Scheme2d::MonteCarlo { samples: 2 * samples, seed },
        };
        QuadratureConfig { nodes_1d: 2 * self.nodes_1d, scheme_2d, verify: false }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RateResult {
    /// Achievable rate, clipped at zero for BMD.
    pub rate_bpcu: f64,
    /// `H(B_i | Y)` per bit level (BMD only).
    pub per_bit_entropies: Vec<f64>,
    pub method: Metric,
    /// BMD value before the `[·]⁺` clipping.
    pub unclipped: f64,
    pub clipped: bool,
    pub warnings: Vec<String>,
}

/// Capacity `(d/2) log2(1 + SNR)` for `d` real dimensions.
pub fn capacity(ch: &ChannelSpec) -> f64 {
    ch.dimension().real_dims() as f64 * 0.5 * (1.0 + ch.snr_linear()).log2()
}

/// SNR in dB at which the capacity of the given channel equals `rate`.
pub fn capacity_inverse_db(rate: f64, dimension: Dimension) -> f64 {
    let d = dimension.real_dims() as f64;
    linear_to_db((2.0 * rate / d).exp2() - 1.0)
}

/// Channel dimensionality matching a constellation's geometry.
pub fn natural_dimension(c: &Constellation) -> Dimension {
    match c.geometry() {
        Geometry::OneD => Dimension::Real,
        Geometry::TwoD => Dimension::Complex,
    }
}

/// Mutual information `I(X;Y)`.
pub fn smd_rate(c: &Constellation, p: &InputDistribution, ch: &ChannelSpec, q: &QuadratureConfig) -> Result<RateResult> {
    rate(Metric::Smd, c, p, ch, q)
}

/// Bit-metric rate `[H(B) − Σ_i H(B_i|Y)]⁺`.
pub fn bmd_rate(c: &Constellation, p: &InputDistribution, ch: &ChannelSpec, q: &QuadratureConfig) -> Result<RateResult> {
    rate(Metric::Bmd, c, p, ch, q)
}

pub fn rate(
    metric: Metric,
    c: &Constellation,
    p: &InputDistribution,
    ch: &ChannelSpec,
    q: &QuadratureConfig,
) -> Result<RateResult> {
    q.validate()?;
    let mut result = rate_unchecked(metric, c, p, ch, q)?;
    if q.verify {
        let fine = rate_unchecked(metric, c, p, ch, &q.doubled())?;
        let diff = (fine.rate_bpcu - result.rate_bpcu).abs();
        if diff > 1e-4 {
            let msg = format!("quadrature not converged: doubling nodes changes the rate by {diff:.3e} bpcu");
            log::warn!("{msg}");
            result.warnings.push(msg);
        }
    }
    Ok(result)
}

fn rate_unchecked(
    metric: Metric,
    c: &Constellation,
    p: &InputDistribution,
    ch: &ChannelSpec,
    q: &QuadratureConfig,
) -> Result<RateResult> {
    if p.len() != c.len() {
        return Err(Error::Shape(format!("distribution has {} entries, constellation {}", p.len(), c.len())));
    }
    if metric == Metric::Bmd {
        c.require_labels()?;
    }
    if c.geometry() == Geometry::TwoD && ch.dimension() == Dimension::Real {
        return Err(Error::Shape("two-dimensional constellation on a real channel".into()));
    }
    let power = c.average_power(p);
    if !(power > 0.0) {
        return Err(Error::Degenerate("constellation has zero average power".into()));
    }
    let var = power * ch.noise_variance_per_dim();
    let probs = p.probs();
    let labels = c.labels().filter(|_| metric == Metric::Bmd);

    let (mi, cond) = match c.geometry() {
        Geometry::OneD => {
            let rule = NoiseRule::gauss_hermite_1d(q.nodes_1d, var);
            Kernel { points: c.points(), probs, labels, bits: c.bits(), var, rule: &rule }.evaluate()
        }
        Geometry::TwoD => match factorize(c, p, metric == Metric::Bmd) {
            Some(f) => {
                let rule = NoiseRule::gauss_hermite_1d(q.nodes_1d, var);
                let mut cond = vec![0.0; c.bits() as usize];
                let mut mi = 0.0;
                for factor in [&f.re, &f.im] {
                    let pts: Vec<Complex64> = factor.points.iter().map(|&x| Complex64::new(x, 0.0)).collect();
                    let k = Kernel {
                        points: &pts,
                        probs: &factor.probs,
                        labels: factor.labels.as_deref(),
                        bits: factor.levels.len() as u32,
                        var,
                        rule: &rule,
                    };
                    let (m, h) = k.evaluate();
                    mi += m;
                    for (lvl, v) in factor.levels.iter().zip(h) {
                        cond[*lvl as usize] = v;
                    }
                }
                (mi, cond)
            }
            None => {
                let rule = NoiseRule::two_dimensional(q, var);
                Kernel { points: c.points(), probs, labels, bits: c.bits(), var, rule: &rule }.evaluate()
            }
        },
    };

    Ok(match metric {
        Metric::Smd => RateResult {
            rate_bpcu: mi.max(0.0),
            per_bit_entropies: Vec::new(),
            method: Metric::Smd,
            unclipped: mi,
            clipped: mi < 0.0,
            warnings: Vec::new(),
        },
        Metric::Bmd => {
            let cond: Vec<f64> = cond.into_iter().map(|h| h.clamp(0.0, 1.0)).collect();
            let unclipped = p.entropy() - cond.iter().sum::<f64>();
            RateResult {
                rate_bpcu: unclipped.max(0.0),
                per_bit_entropies: cond,
                method: Metric::Bmd,
                unclipped,
                clipped: unclipped < 0.0,
                warnings: Vec::new(),
            }
        }
    })
}

/// Weighted noise samples with weights summing to one.
struct NoiseRule {
    samples: Vec<(Complex64, f64)>,
}

impl NoiseRule {
    fn gauss_hermite_1d(n: usize, var: f64) -> Self {
        let gh = GaussHermite::cached(n);
        NoiseRule { samples: gh.gaussian_samples(var).map(|(z, w)| (Complex64::new(z, 0.0), w)).collect() }
    }

    fn two_dimensional(q: &QuadratureConfig, var: f64) -> Self {
        match q.scheme_2d {
            Scheme2d::TensorProduct(n) => {
                let gh = GaussHermite::cached(n);
                let axis: Vec<(f64, f64)> = gh.gaussian_samples(var).collect();
                let samples = axis
                    .iter()
                    .flat_map(|&(zr, wr)| axis.iter().map(move |&(zi, wi)| (Complex64::new(zr, zi), wr * wi)))
                    .collect();
                NoiseRule { samples }
            }
            Scheme2d::MonteCarlo { samples, seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let sd = var.sqrt();
                let w = 1.0 / samples as f64;
                let samples = (0..samples)
                    .map(|_| {
                        let zr: f64 = StandardNormal.sample(&mut rng);
                        let zi: f64 = StandardNormal.sample(&mut rng);
                        (Complex64::new(sd * zr, sd * zi), w)
                    })
                    .collect();
                NoiseRule { samples }
            }
        }
    }
}

/// Shared integration kernel: returns `I(X;Y)` and `H(B_i|Y)` per level (the
/// latter only when labels are supplied), both in bits.
struct Kernel<'a> {
    points: &'a [Complex64],
    probs: &'a [f64],
    labels: Option<&'a [u32]>,
    bits: u32,
    var: f64,
    rule: &'a NoiseRule,
}

impl Kernel<'_> {
    fn evaluate(&self) -> (f64, Vec<f64>) {
        let active: Vec<usize> = (0..self.points.len()).filter(|&j| self.probs[j] >= 1e-300).collect();
        let ln_p: Vec<f64> = active.iter().map(|&j| self.probs[j].ln()).collect();
        let levels = if self.labels.is_some() { self.bits as usize } else { 0 };
        let bit_of: Vec<Vec<u8>> = match self.labels {
            Some(l) => active.iter().map(|&j| (0..self.bits).map(|lvl| label_bit(l[j], self.bits, lvl)).collect()).collect(),
            None => Vec::new(),
        };
        let inv2v = 0.5 / self.var;

        let per_point: Vec<(f64, Vec<f64>)> = active
            .par_iter()
            .enumerate()
            .map(|(ka, &k)| {
                let xk = self.points[k];
                let diffs: Vec<Complex64> = active.iter().map(|&j| xk - self.points[j]).collect();
                let mut a = vec![0.0; active.len()];
                let mut sub = vec![0.0; levels];
                let mut mi = 0.0;
                let mut cond = vec![0.0; levels];
                for &(z, w) in &self.rule.samples {
                    let mut amax = f64::NEG_INFINITY;
                    for (aj, (d, lp)) in a.iter_mut().zip(diffs.iter().zip(&ln_p)) {
                        *aj = lp - (d.norm_sqr() + 2.0 * (d.re * z.re + d.im * z.im)) * inv2v;
                        amax = amax.max(*aj);
                    }
                    let mut total = 0.0;
                    sub.iter_mut().for_each(|s| *s = 0.0);
                    for (j, aj) in a.iter().enumerate() {
                        let e = (aj - amax).exp();
                        total += e;
                        if levels > 0 {
                            let bj = &bit_of[j];
                            let bk = &bit_of[ka];
                            for lvl in 0..levels {
                                if bj[lvl] == bk[lvl] {
                                    sub[lvl] += e;
                                }
                            }
                        }
                    }
                    let lse = amax + total.ln();
                    mi -= w * lse;
                    for lvl in 0..levels {
                        cond[lvl] += w * (total.ln() - sub[lvl].ln());
                    }
                }
                (mi, cond)
            })
            .collect();

        let mut mi = 0.0;
        let mut cond = vec![0.0; levels];
        for (ka, (m, h)) in per_point.into_iter().enumerate() {
            let pk = self.probs[active[ka]];
            mi += pk * m;
            for lvl in 0..levels {
                cond[lvl] += pk * h[lvl];
            }
        }
        (mi / LN_2, cond.into_iter().map(|h| h / LN_2).collect())
    }
}

/// One axis of a separable two-dimensional constellation.
#[derive(Debug, Clone)]
pub(crate) struct Factor {
    pub points: Vec<f64>,
    pub probs: Vec<f64>,
    /// Labels restricted to `levels`, concatenated in level order.
    pub labels: Option<Vec<u32>>,
    /// Label bit levels (of the 2D label) carried by this axis.
    pub levels: Vec<u32>,
}

#[derive(Debug, Clone)]
pub(crate) struct Factorization {
    pub re: Factor,
    pub im: Factor,
}

fn distinct_values(values: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut v: Vec<f64> = values.collect();
    v.sort_by(|a, b| a.partial_cmp(b).expect("finite coordinates"));
    let mut out: Vec<f64> = Vec::new();
    for x in v {
        match out.last() {
            Some(&last) if (x - last).abs() <= 1e-12 * (1.0 + x.abs()) => {}
            _ => out.push(x),
        }
    }
    out
}

fn index_of(grid: &[f64], x: f64) -> usize {
    grid.iter()
        .enumerate()
        .min_by(|a, b| (a.1 - x).abs().partial_cmp(&(b.1 - x).abs()).expect("finite"))
        .map(|(i, _)| i)
        .expect("non-empty grid")
}

/// Detects `X = X_re + j X_im` with independent axes (and, when labels are
/// requested, every label bit determined by a single axis).
pub(crate) fn factorize(c: &Constellation, p: &InputDistribution, with_labels: bool) -> Option<Factorization> {
    let re = distinct_values(c.points().iter().map(|z| z.re));
    let im = distinct_values(c.points().iter().map(|z| z.im));
    if re.len() * im.len() != c.len() {
        return None;
    }
    let mut cell = vec![usize::MAX; c.len()];
    let coords: Vec<(usize, usize)> = c.points().iter().map(|z| (index_of(&re, z.re), index_of(&im, z.im))).collect();
    for (k, &(a, b)) in coords.iter().enumerate() {
        let slot = a * im.len() + b;
        if cell[slot] != usize::MAX {
            return None;
        }
        cell[slot] = k;
    }
    let probs = p.probs();
    let mut pre = vec![0.0; re.len()];
    let mut pim = vec![0.0; im.len()];
    for (k, &(a, b)) in coords.iter().enumerate() {
        pre[a] += probs[k];
        pim[b] += probs[k];
    }
    if coords.iter().enumerate().any(|(k, &(a, b))| (probs[k] - pre[a] * pim[b]).abs() > 1e-12) {
        return None;
    }

    let (mut lre, mut lim) = (Vec::new(), Vec::new());
    let (mut labels_re, mut labels_im) = (None, None);
    if with_labels {
        let labels = c.labels()?;
        let bits = c.bits();
        for lvl in 0..bits {
            let bit = |k: usize| label_bit(labels[k], bits, lvl);
            let by_re = (0..re.len()).all(|a| (0..im.len()).all(|b| bit(cell[a * im.len() + b]) == bit(cell[a * im.len()])));
            let by_im = (0..im.len()).all(|b| (0..re.len()).all(|a| bit(cell[a * im.len() + b]) == bit(cell[b])));
            match (by_re, by_im) {
                (true, false) => lre.push(lvl),
                (false, true) => lim.push(lvl),
                _ => return None,
            }
        }
        if (1usize << lre.len()) != re.len() || (1usize << lim.len()) != im.len() {
            return None;
        }
        let sub = |k: usize, lv: &[u32]| lv.iter().fold(0u32, |acc, &l| (acc << 1) | label_bit(labels[k], bits, l) as u32);
        let lr: Vec<u32> = (0..re.len()).map(|a| sub(cell[a * im.len()], &lre)).collect();
        let li: Vec<u32> = (0..im.len()).map(|b| sub(cell[b], &lim)).collect();
        let distinct = |v: &[u32]| {
            let mut s = v.to_vec();
            s.sort_unstable();
            s.dedup();
            s.len() == v.len()
        };
        if !distinct(&lr) || !distinct(&li) {
            return None;
        }
        labels_re = Some(lr);
        labels_im = Some(li);
    }
    Some(Factorization {
        re: Factor { points: re, probs: pre, labels: labels_re, levels: lre },
        im: Factor { points: im, probs: pim, labels: labels_im, levels: lim },
    })
}

/// Per-level bit-channel mutual informations `I(B_i; Y)`, evaluated in the
/// probability domain directly from the conditional mixture densities
/// `p(y | B_i = b)`. Independent of the main rate kernel; used to check that
/// uniform-input BMD rates equal the BICM capacity.
pub fn bit_mutual_informations(
    c: &Constellation,
    p: &InputDistribution,
    ch: &ChannelSpec,
    q: &QuadratureConfig,
) -> Result<Vec<f64>> {
    let labels = c.require_labels()?;
    if c.geometry() != Geometry::OneD {
        return Err(Error::Shape("bit-channel cross-check is implemented for 1D constellations".into()));
    }
    let bits = c.bits();
    let x = c.real_points();
    let probs = p.probs();
    let var = c.average_power(p) * ch.noise_variance_per_dim();
    let gh = GaussHermite::cached(q.nodes_1d);
    let pdf = |y: f64, mean: f64| (-(y - mean) * (y - mean) / (2.0 * var)).exp() / (2.0 * std::f64::consts::PI * var).sqrt();

    let mut out = Vec::with_capacity(bits as usize);
    for lvl in 0..bits {
        let mut info = 0.0;
        for b in 0..2u8 {
            let members: Vec<usize> = (0..x.len()).filter(|&k| label_bit(labels[k], bits, lvl) == b).collect();
            let pb: f64 = members.iter().map(|&k| probs[k]).sum();
            if pb <= 0.0 {
                continue;
            }
            for &k in &members {
                if probs[k] <= 0.0 {
                    continue;
                }
                for (z, w) in gh.gaussian_samples(var) {
                    let y = x[k] + z;
                    let cond: f64 = members.iter().map(|&j| probs[j] * pdf(y, x[j])).sum::<f64>() / pb;
                    let marg: f64 = (0..x.len()).map(|j| probs[j] * pdf(y, x[j])).sum();
                    info += probs[k] * w * (cond / marg).log2();
                }
            }
        }
        out.push(info);
    }
    Ok(out)
}

/// Monte-Carlo estimate of a rate with its standard error, from `samples`
/// draws of `(X, Z)`.
pub fn rate_monte_carlo(
    metric: Metric,
    c: &Constellation,
    p: &InputDistribution,
    ch: &ChannelSpec,
    samples: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    if metric == Metric::Bmd {
        c.require_labels()?;
    }
    let var = c.average_power(p) * ch.noise_variance_per_dim();
    let sd = var.sqrt();
    let two_d = c.geometry() == Geometry::TwoD;
    let pts = c.points();
    let probs = p.probs();
    let bits = c.bits();
    let picker = WeightedIndex::new(probs).map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut s1, mut s2) = (0.0f64, 0.0f64);
    let mut lik = vec![0.0; pts.len()];
    for _ in 0..samples {
        let k = picker.sample(&mut rng);
        let zr: f64 = StandardNormal.sample(&mut rng);
        let zi: f64 = if two_d { StandardNormal.sample(&mut rng) } else { 0.0 };
        let y = pts[k] + Complex64::new(sd * zr, sd * zi);
        for (j, x) in pts.iter().enumerate() {
            lik[j] = probs[j] * (-(y - x).norm_sqr() / (2.0 * var)).exp();
        }
        let total: f64 = lik.iter().sum();
        let v = match metric {
            Metric::Smd => (lik[k] / probs[k] / total).log2(),
            Metric::Bmd => {
                let labels = c.labels().expect("checked above");
                let mut v = -probs[k].log2();
                for lvl in 0..bits {
                    let bk = label_bit(labels[k], bits, lvl);
                    let num: f64 =
                        (0..pts.len()).filter(|&j| label_bit(labels[j], bits, lvl) == bk).map(|j| lik[j]).sum();
                    v += (num / total).log2();
                }
                v
            }
        };
        s1 += v;
        s2 += v * v;
    }
    let n = samples as f64;
    let mean = s1 / n;
    let var_v = (s2 / n - mean * mean).max(0.0);
    Ok((mean, (var_v / n).sqrt()))
}

/// Required SNR (dB) for a rate of `target` bpcu under `metric`, on the
/// channel dimensionality matching the constellation geometry.
pub fn inverse_rate(
    metric: Metric,
    c: &Constellation,
    p: &InputDistribution,
    target: f64,
    q: &QuadratureConfig,
) -> Result<f64> {
    let dim = natural_dimension(c);
    let limit = p.entropy();
    if !(target > 0.0) || target >= limit {
        return Err(Error::UnreachableRate { target, limit });
    }
    let eval = |snr_db: f64| -> Result<f64> {
        let ch = ChannelSpec::new(snr_db, dim)?;
        Ok(rate(metric, c, p, &ch, q)?.rate_bpcu)
    };
    let (mut lo, mut hi) = (-20.0, 40.0);
    while eval(lo)? >= target {
        lo -= 20.0;
        if lo < -200.0 {
            return Err(Error::Convergence("could not bracket the target rate from below".into()));
        }
    }
    while eval(hi)? < target {
        hi += 20.0;
        if hi > 200.0 {
            return Err(Error::UnreachableRate { target, limit });
        }
    }
    let mut mid = 0.5 * (lo + hi);
    while hi - lo > 1e-4 {
        mid = 0.5 * (lo + hi);
        let r = eval(mid)?;
        if (r - target).abs() < 1e-6 {
            break;
        }
        if r < target {
            lo = mid;
        } else {
            hi = mid;
        }
        mid = 0.5 * (lo + hi);
    }
    let r = eval(mid)?;
    if (r - target).abs() > 1e-4 {
        return Err(Error::InverseMismatch { snr_db: mid, rate: r, target });
    }
    Ok(mid)
}

/// `inverse_rate − C⁻¹(rate)` in dB.
pub fn snr_gap(
    metric: Metric,
    c: &Constellation,
    p: &InputDistribution,
    operating_rate: f64,
    q: &QuadratureConfig,
) -> Result<f64> {
    let required = inverse_rate(metric, c, p, operating_rate, q)?;
    Ok(required - capacity_inverse_db(operating_rate, natural_dimension(c)))
}

/// Source of the (constellation, distribution) pair used at each SNR of a sweep.
pub trait ShapingPolicy: Sync {
    fn at(&self, snr_db: f64) -> Result<(Constellation, InputDistribution)>;
}

/// The same constellation and distribution at every SNR.
pub struct FixedInput {
    pub constellation: Constellation,
    pub distribution: InputDistribution,
}

impl ShapingPolicy for FixedInput {
    fn at(&self, _snr_db: f64) -> Result<(Constellation, InputDistribution)> {
        Ok((self.constellation.clone(), self.distribution.clone()))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub snr_db: f64,
    pub rate_bpcu: f64,
    /// `SNR − C⁻¹(rate)` in dB.
    pub gap_db: f64,
}

/// Rate and gap to capacity over an SNR grid; grid points run in parallel.
pub fn rate_sweep(
    metric: Metric,
    policy: &dyn ShapingPolicy,
    snr_grid: &[f64],
    q: &QuadratureConfig,
) -> Result<Vec<SweepRow>> {
    snr_grid
        .par_iter()
        .map(|&snr_db| {
            let (c, p) = policy.at(snr_db)?;
            let dim = natural_dimension(&c);
            let ch = ChannelSpec::new(snr_db, dim)?;
            let r = rate(metric, &c, &p, &ch, q)?.rate_bpcu;
            Ok(SweepRow { snr_db, rate_bpcu: r, gap_db: snr_db - capacity_inverse_db(r, dim) })
        })
        .collect()
}

/// Formats a float with `digits` significant digits, `%g` style.
pub fn fmt_sig(x: f64, digits: usize) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return if x.is_nan() { "nan".into() } else if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let exp = x.abs().log10().floor() as i32;
    if (-5..digits as i32).contains(&exp) {
        let decimals = (digits as i32 - 1 - exp).max(0) as usize;
        let s = format!("{x:.decimals$}");
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        }
    } else {
        let s = format!("{:.*e}", digits - 1, x);
        let (mant, e) = s.split_once('e').expect("exponent");
        let mant = if mant.contains('.') { mant.trim_end_matches('0').trim_end_matches('.') } else { mant };
        format!("{mant}e{e}")
    }
}

pub const SWEEP_CSV_HEADER: &str = "snr_db,rate_bpcu,gap_db,metric,constellation_id";

pub fn sweep_csv(rows: &[SweepRow], metric: Metric, constellation_id: &str) -> String {
    let mut out = String::from(SWEEP_CSV_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            fmt_sig(r.snr_db, 9),
            fmt_sig(r.rate_bpcu, 9),
            fmt_sig(r.gap_db, 9),
            metric,
            constellation_id
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constellation::{normalize_power, product_constellation, product_shaped};

    fn q() -> QuadratureConfig {
        QuadratureConfig::default()
    }

    #[test]
    fn capacity_closed_form() {
        assert!((capacity(&ChannelSpec::real(0.0).unwrap()) - 0.5).abs() < 1e-15);
        assert!((capacity(&ChannelSpec::real(10.0).unwrap()) - 1.729_715_809).abs() < 1e-8);
        assert!((capacity(&ChannelSpec::complex(10.0).unwrap()) - 3.459_431_619).abs() < 1e-8);
        let back = capacity_inverse_db(1.729_715_809_318_648, Dimension::Real);
        assert!((back - 10.0).abs() < 1e-9);
    }

    #[test]
    fn bpsk_saturates_at_high_snr() {
        let c = Constellation::ask(1).unwrap();
        let r = smd_rate(&c, &InputDistribution::uniform(2), &ChannelSpec::real(30.0).unwrap(), &q()).unwrap();
        assert!((r.rate_bpcu - 1.0).abs() < 1e-3);
    }

    #[test]
    fn vanishing_snr_gives_vanishing_rate() {
        let c = Constellation::ask(3).unwrap();
        let ch = ChannelSpec::real(-40.0).unwrap();
        let p = InputDistribution::uniform(8);
        assert!(smd_rate(&c, &p, &ch, &q()).unwrap().rate_bpcu < 0.01);
        assert!(bmd_rate(&c, &p, &ch, &q()).unwrap().rate_bpcu < 0.01);
    }

    #[test]
    fn bpsk_bmd_equals_smd() {
        let c = Constellation::ask(1).unwrap();
        let p = InputDistribution::uniform(2);
        for snr in [-5.0, 0.0, 3.0, 8.0] {
            let ch = ChannelSpec::real(snr).unwrap();
            let a = smd_rate(&c, &p, &ch, &q()).unwrap().rate_bpcu;
            let b = bmd_rate(&c, &p, &ch, &q()).unwrap().rate_bpcu;
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
    }

    #[test]
    fn bmd_equals_bicm_capacity_for_uniform_4ask() {
        let c = Constellation::ask(2).unwrap();
        let p = InputDistribution::uniform(4);
        for snr in [0.0, 5.0, 12.0] {
            let ch = ChannelSpec::real(snr).unwrap();
            let b = bmd_rate(&c, &p, &ch, &q()).unwrap().rate_bpcu;
            let sum: f64 = bit_mutual_informations(&c, &p, &ch, &q()).unwrap().iter().sum();
            assert!((b - sum).abs() < 1e-9, "{b} vs {sum}");
        }
    }

    #[test]
    fn bmd_requires_labels() {
        let c = Constellation::real(&[-1.0, 1.0], None).unwrap();
        let r = bmd_rate(&c, &InputDistribution::uniform(2), &ChannelSpec::real(0.0).unwrap(), &q());
        assert!(matches!(r, Err(Error::Labeling(_))));
    }

    #[test]
    fn ordering_holds_on_uniform_8ask() {
        let c = Constellation::ask(3).unwrap();
        let p = InputDistribution::uniform(8);
        for snr in [0.0, 6.0, 12.0, 18.0] {
            let ch = ChannelSpec::real(snr).unwrap();
            let s = smd_rate(&c, &p, &ch, &q()).unwrap().rate_bpcu;
            let b = bmd_rate(&c, &p, &ch, &q()).unwrap().rate_bpcu;
            assert!(b <= s + 1e-6 && s <= capacity(&ch) + 1e-6);
        }
    }

    #[test]
    fn product_qam_is_twice_the_ask_rate() {
        let a = normalize_power(&Constellation::ask(2).unwrap(), &InputDistribution::uniform(4)).unwrap();
        let qam = product_constellation(&a, &a).unwrap();
        let pu = InputDistribution::uniform(16);
        assert!(factorize(&qam, &pu, true).is_some());
        for snr in [3.0, 10.0] {
            let r1 = bmd_rate(&a, &InputDistribution::uniform(4), &ChannelSpec::real(snr).unwrap(), &q()).unwrap();
            let r2 = bmd_rate(&qam, &pu, &ChannelSpec::complex(snr).unwrap(), &q()).unwrap();
            assert!((2.0 * r1.rate_bpcu - r2.rate_bpcu).abs() < 1e-12);
        }
    }

    #[test]
    fn factorized_path_matches_tensor_rule() {
        let a = Constellation::ask(2).unwrap();
        let pa = InputDistribution::new(vec![0.15, 0.35, 0.35, 0.15]).unwrap();
        let (qam, p) = product_shaped(&a, &pa, &a, &pa).unwrap();
        let ch = ChannelSpec::complex(8.0).unwrap();
        let fast = bmd_rate(&qam, &p, &ch, &q()).unwrap();
        // generic 2D kernel, bypassing product detection
        let rule = NoiseRule::two_dimensional(&QuadratureConfig::default(), qam.average_power(&p) * ch.noise_variance_per_dim());
        let (mi, cond) = Kernel {
            points: qam.points(),
            probs: p.probs(),
            labels: qam.labels(),
            bits: qam.bits(),
            var: qam.average_power(&p) * ch.noise_variance_per_dim(),
            rule: &rule,
        }
        .evaluate();
        let slow = p.entropy() - cond.iter().sum::<f64>();
        assert!((fast.rate_bpcu - slow).abs() < 1e-6, "{} vs {slow}", fast.rate_bpcu);
        let smd = smd_rate(&qam, &p, &ch, &q()).unwrap().rate_bpcu;
        assert!((smd - mi).abs() < 1e-6);
    }

    #[test]
    fn inverse_rate_round_trips() {
        let c = Constellation::ask(2).unwrap();
        let p = InputDistribution::uniform(4);
        let snr = inverse_rate(Metric::Bmd, &c, &p, 1.2, &q()).unwrap();
        let r = bmd_rate(&c, &p, &ChannelSpec::real(snr).unwrap(), &q()).unwrap().rate_bpcu;
        assert!((r - 1.2).abs() < 1e-4);
    }

    #[test]
    fn inverse_rate_saturation_boundary() {
        let c = Constellation::ask(1).unwrap();
        let p = InputDistribution::uniform(2);
        let snr = inverse_rate(Metric::Smd, &c, &p, 0.999, &q()).unwrap();
        assert!(snr.is_finite());
        assert!(matches!(inverse_rate(Metric::Smd, &c, &p, 1.001, &q()), Err(Error::UnreachableRate { .. })));
    }

    #[test]
    fn gap_is_positive_for_uniform_ask() {
        let c = Constellation::ask(2).unwrap();
        let rows = rate_sweep(
            Metric::Smd,
            &FixedInput { constellation: c, distribution: InputDistribution::uniform(4) },
            &[0.0, 5.0, 10.0, 15.0, 20.0],
            &q(),
        )
        .unwrap();
        assert!(rows.iter().all(|r| r.gap_db > 0.0));
        assert!(rows.windows(2).all(|w| w[1].rate_bpcu >= w[0].rate_bpcu));
    }

    #[test]
    fn verify_flag_reports_no_warning_for_smooth_case() {
        let c = Constellation::ask(2).unwrap();
        let cfg = QuadratureConfig { verify: true, ..Default::default() };
        let r = smd_rate(&c, &InputDistribution::uniform(4), &ChannelSpec::real(10.0).unwrap(), &cfg).unwrap();
        assert!(r.warnings.is_empty());
    }

    #[test]
    fn quadrature_config_validation() {
        assert!(QuadratureConfig::with_nodes(8).validate().is_err());
        let mc = QuadratureConfig { scheme_2d: Scheme2d::MonteCarlo { samples: 100, seed: 1 }, ..Default::default() };
        assert!(mc.validate().is_err());
    }

    #[test]
    fn significant_digit_formatting() {
        assert_eq!(fmt_sig(1.0, 9), "1");
        assert_eq!(fmt_sig(0.5, 9), "0.5");
        assert_eq!(fmt_sig(1.729715809318648, 9), "1.72971581");
        assert_eq!(fmt_sig(-12.5, 9), "-12.5");
        assert_eq!(fmt_sig(1.23456789e-7, 9), "1.23456789e-7");
    }

    #[test]
    fn sweep_csv_layout() {
        let rows = vec![SweepRow { snr_db: 1.0, rate_bpcu: 0.5, gap_db: 0.25 }];
        let csv = sweep_csv(&rows, Metric::Bmd, "ask4");
        assert_eq!(csv, "snr_db,rate_bpcu,gap_db,metric,constellation_id\n1,0.5,0.25,bmd,ask4\n");
    }
}
