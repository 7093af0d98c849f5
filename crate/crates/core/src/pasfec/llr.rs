//! Bitwise log-likelihood ratios with input priors.

use num_complex::Complex64;

use crate::constellation::{label_bit, ChannelSpec, Constellation, InputDistribution};
use crate::error::{Error, Result};

/// Magnitude of the LLR assigned to bit levels that are deterministic
/// under the input distribution.
pub const LLR_SATURATION: f64 = 50.0;

/// Jacobian logarithm `ln(e^a + e^b)`.
pub fn max_star(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    a.max(b) + (-(a - b).abs()).exp().ln_1p()
}

/// Channel and prior parts of one bit LLR.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LlrTerms {
    /// `ln p(y|B=0)/p(y|B=1)`.
    pub channel: f64,
    /// `ln P_B(0)/P_B(1)`; zero under uniform inputs.
    pub prior: f64,
    /// Total; `±LLR_SATURATION` for deterministic levels.
    pub total: f64,
    /// The bit is deterministic under the input distribution.
    pub saturated: bool,
}

/// Precomputed demapper for a labeled constellation, input distribution and
/// per-dimension noise variance.
#[derive(Clone, Debug)]
pub struct LlrDemapper {
    points: Vec<Complex64>,
    log_probs: Vec<f64>,
    bits: u32,
    /// Per point, label bits `b1..bm`.
    point_bits: Vec<Vec<u8>>,
    priors: Vec<f64>,
    /// Fixed LLR for levels whose bit is deterministic.
    forced: Vec<Option<f64>>,
    inv_two_var: f64,
}

impl LlrDemapper {
    pub fn new(c: &Constellation, p: &InputDistribution, noise_var_per_dim: f64) -> Result<Self> {
        let labels = c.require_labels()?;
        if p.len() != c.len() {
            return Err(Error::InvalidParameter("distribution and constellation sizes differ".into()));
        }
        if !(noise_var_per_dim > 0.0) {
            return Err(Error::InvalidParameter(format!("noise variance must be positive, got {noise_var_per_dim}")));
        }
        let bits = c.bits();
        let point_bits: Vec<Vec<u8>> =
            labels.iter().map(|&l| (0..bits).map(|lvl| label_bit(l, bits, lvl)).collect()).collect();
        let mut priors = Vec::with_capacity(bits as usize);
        let mut forced = Vec::with_capacity(bits as usize);
        for lvl in 0..bits as usize {
            let p0: f64 = p.probs().iter().zip(&point_bits).filter(|(_, b)| b[lvl] == 0).map(|(w, _)| w).sum();
            let p1: f64 = p.probs().iter().zip(&point_bits).filter(|(_, b)| b[lvl] == 1).map(|(w, _)| w).sum();
            if p0 <= 0.0 || p1 <= 0.0 {
                log::warn!("bit level {} is deterministic under the input distribution; LLR saturated", lvl + 1);
                let v = if p0 > 0.0 { LLR_SATURATION } else { -LLR_SATURATION };
                forced.push(Some(v));
                priors.push(v);
            } else {
                forced.push(None);
                priors.push((p0 / p1).ln());
            }
        }
        Ok(LlrDemapper {
            points: c.points().to_vec(),
            log_probs: p.probs().iter().map(|w| w.ln()).collect(),
            bits,
            point_bits,
            priors,
            forced,
            inv_two_var: 0.5 / noise_var_per_dim,
        })
    }

    /// Noise variance from the channel, scaled by the constellation's power
    /// under `p` (the same convention as the rate functions).
    pub fn from_channel(c: &Constellation, p: &InputDistribution, ch: &ChannelSpec) -> Result<Self> {
        Self::new(c, p, c.average_power(p) * ch.noise_variance_per_dim())
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    /// Prior terms per bit level.
    pub fn priors(&self) -> &[f64] {
        &self.priors
    }

    /// Levels whose LLR is forced to saturation.
    pub fn saturated_levels(&self) -> Vec<usize> {
        self.forced.iter().enumerate().filter(|(_, f)| f.is_some()).map(|(i, _)| i).collect()
    }

    /// Writes the `m` LLRs of sample `y` into `out`.
    pub fn llrs_into(&self, y: Complex64, out: &mut [f64]) {
        let mut acc0 = [f64::NEG_INFINITY; 32];
        let mut acc1 = [f64::NEG_INFINITY; 32];
        let m = self.bits as usize;
        for ((x, lp), b) in self.points.iter().zip(&self.log_probs).zip(&self.point_bits) {
            if *lp == f64::NEG_INFINITY {
                continue;
            }
            let metric = lp - (y - x).norm_sqr() * self.inv_two_var;
            for lvl in 0..m {
                let acc = if b[lvl] == 0 { &mut acc0[lvl] } else { &mut acc1[lvl] };
                *acc = max_star(*acc, metric);
            }
        }
        for lvl in 0..m {
            out[lvl] = match self.forced[lvl] {
                Some(v) => v,
                None => acc0[lvl] - acc1[lvl],
            };
        }
    }

    pub fn llrs(&self, y: Complex64) -> Vec<f64> {
        let mut out = vec![0.0; self.bits as usize];
        self.llrs_into(y, &mut out);
        out
    }

    /// LLRs split into channel and prior parts.
    pub fn llr_terms(&self, y: Complex64) -> Vec<LlrTerms> {
        self.llrs(y)
            .into_iter()
            .zip(&self.priors)
            .zip(&self.forced)
            .map(|((total, &prior), f)| LlrTerms {
                channel: if f.is_some() { 0.0 } else { total - prior },
                prior,
                total,
                saturated: f.is_some(),
            })
            .collect()
    }
}

/// One-shot LLR computation for a single received sample.
pub fn llr_compute(y: Complex64, c: &Constellation, p: &InputDistribution, ch: &ChannelSpec) -> Result<Vec<LlrTerms>> {
    Ok(LlrDemapper::from_channel(c, p, ch)?.llr_terms(y))
}

/// Probability-domain reference: direct subset sums of `P(x)·p(y|x)`.
pub fn llr_probability_domain(y: Complex64, c: &Constellation, p: &InputDistribution, noise_var_per_dim: f64) -> Result<Vec<f64>> {
    let labels = c.require_labels()?;
    let bits = c.bits();
    let mut out = Vec::with_capacity(bits as usize);
    for lvl in 0..bits {
        let (mut s0, mut s1) = (0.0, 0.0);
        for ((x, w), &l) in c.points().iter().zip(p.probs()).zip(labels) {
            let like = w * (-(y - x).norm_sqr() / (2.0 * noise_var_per_dim)).exp();
            if label_bit(l, bits, lvl) == 0 {
                s0 += like;
            } else {
                s1 += like;
            }
        }
        out.push((s0 / s1).ln());
    }
    Ok(out)
}
