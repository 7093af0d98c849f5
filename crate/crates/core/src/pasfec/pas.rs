//! Coded modulation systems: uniform bit-interleaved ASK and probabilistic
//! amplitude shaping by reverse concatenation.
//!
//! Each real dimension carries one `2^m`-ASK symbol labeled as in
//! [`Constellation::ask`]: the first label bit is the sign (1 = positive),
//! the remaining `m − 1` bits are the BRGC label of the amplitude. Pairs of
//! real symbols form complex symbols of unit average energy.

use num_complex::Complex64;

use super::ccdm::{ccdm_decode, ccdm_encode, Composition};
use super::ldpc::{bp_decode, ParityCheck, SystematicEncoder};
use super::llr::LlrDemapper;
use crate::constellation::{brgc_labels, normalize_power, ChannelSpec, Constellation, Geometry, InputDistribution};
use crate::error::{Error, Result};
use crate::probshape::mb_distribution;

/// Splits a symmetric distribution on an ascending `2^m`-ASK into the
/// amplitude distribution (levels `1, 3, …`) and the uniform sign.
pub fn amplitude_sign_split(p: &InputDistribution) -> Result<(Vec<f64>, [f64; 2])> {
    let n = p.len();
    if n < 2 || !n.is_power_of_two() {
        return Err(Error::InvalidParameter(format!("ASK distribution size must be a power of two ≥ 2, got {n}")));
    }
    let half = n / 2;
    let probs = p.probs();
    let mut p_a = Vec::with_capacity(half);
    for i in 0..half {
        let (pos, neg) = (probs[half + i], probs[half - 1 - i]);
        if (pos - neg).abs() > 1e-9 {
            return Err(Error::Symmetry(format!("P({}) = {pos} differs from P(−{}) = {neg}", 2 * i + 1, 2 * i + 1)));
        }
        p_a.push(pos + neg);
    }
    Ok((p_a, [0.5, 0.5]))
}

/// Symmetric ASK distribution from an amplitude distribution.
pub fn symmetric_from_amplitudes(p_a: &[f64]) -> Result<InputDistribution> {
    let half = p_a.len();
    let probs: Vec<f64> = (0..2 * half)
        .map(|j| if j < half { p_a[half - 1 - j] / 2.0 } else { p_a[j - half] / 2.0 })
        .collect();
    InputDistribution::new(probs)
}

/// MB composition on `n_a` amplitudes of `2^m`-ASK with the largest MB
/// parameter whose matcher still carries at least `min_bits` bits.
pub fn mb_composition_for_bits(m: u32, n_a: usize, min_bits: usize) -> Result<Composition> {
    let comp_at = |nu: f64| -> Result<Composition> {
        let (p_a, _) = amplitude_sign_split(&mb_distribution(m, nu)?)?;
        super::ccdm::composition_for(&p_a, n_a)
    };
    let uniform = comp_at(0.0)?;
    if uniform.input_bits() < min_bits {
        return Err(Error::InfeasibleSe(format!(
            "{min_bits} matcher bits exceed the {} available on {n_a} amplitudes",
            uniform.input_bits()
        )));
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    while comp_at(hi)?.input_bits() >= min_bits {
        lo = hi;
        hi *= 2.0;
        if hi > 1e3 {
            return comp_at(lo);
        }
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if comp_at(mid)?.input_bits() >= min_bits {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    comp_at(lo)
}

#[derive(Clone, Debug, PartialEq)]
pub enum Signaling {
    /// Uniform inputs; code bits fill the label bits of consecutive symbols.
    Uniform,
    /// Amplitudes from a constant-composition matcher, signs from parity
    /// (and, where needed, uniform data) bits.
    Pas { composition: Composition },
}

/// One transmitted and received frame.
#[derive(Clone, Debug, PartialEq)]
pub struct Frame {
    /// User data: matcher input followed by uniform sign data (PAS), or the
    /// code's information word (uniform).
    pub data_bits: Vec<u8>,
    /// Systematic part of the codeword.
    pub info_bits: Vec<u8>,
    /// Amplitude level indices per real symbol.
    pub amplitude_sequence: Vec<usize>,
    pub sign_bits: Vec<u8>,
    pub coded_bits: Vec<u8>,
    pub symbols: Vec<Complex64>,
    pub received_samples: Vec<Complex64>,
    /// `m` LLRs per real symbol, in label order.
    pub llrs: Vec<f64>,
    pub decoded_bits: Vec<u8>,
}

impl Frame {
    /// Channel uses per frame.
    pub fn n_c(&self) -> usize {
        self.symbols.len()
    }
}

/// Result of receiving one frame.
#[derive(Clone, Debug, PartialEq)]
pub struct Reception {
    pub info_errors: usize,
    pub data_ok: bool,
    pub iterations: usize,
    pub syndrome_ok: bool,
}

/// Code, modulation and signaling scheme for the coded chain.
#[derive(Clone, Debug)]
pub struct CodedModulation {
    h: ParityCheck,
    encoder: SystematicEncoder,
    m: u32,
    signaling: Signaling,
    /// Points scaled to unit energy per complex channel use: 1D points carry
    /// energy 1/2 and are paired, 2D points are sent directly.
    constellation: Constellation,
    two_d: bool,
    distribution: InputDistribution,
    /// Ascending point index of each label.
    label_to_index: Vec<usize>,
    /// Amplitude index of each amplitude sublabel (equidistant ASK only).
    sublabel_to_amp: Option<Vec<usize>>,
    /// Codeword positions of each real symbol's label bits `b1..bm`.
    slots: Vec<usize>,
    symbols_per_frame: usize,
}

impl CodedModulation {
    /// Uniform `2^m`-ASK per real dimension with the identity bit mapper,
    /// optionally permuted: real symbol `s`, level `l` carries code bit
    /// `permutation[s·m + l]`.
    pub fn uniform(h: ParityCheck, m: u32, permutation: Option<Vec<usize>>) -> Result<Self> {
        let slots = Self::checked_permutation(h.cols(), permutation)?;
        let encoder = SystematicEncoder::new(&h, &[])?;
        let c = Constellation::ask(m)?;
        Self::build(h, encoder, &c, Signaling::Uniform, InputDistribution::uniform(1 << m), slots)
    }

    /// Uniform signaling on an arbitrary labeled constellation (1D symbols
    /// are paired into complex channel uses, 2D symbols used directly).
    pub fn from_constellation(h: ParityCheck, c: &Constellation, permutation: Option<Vec<usize>>) -> Result<Self> {
        c.require_labels()?;
        let n = h.cols();
        let slots = Self::checked_permutation(n, permutation)?;
        let encoder = SystematicEncoder::new(&h, &[])?;
        Self::build(h, encoder, c, Signaling::Uniform, InputDistribution::uniform(c.len()), slots)
    }

    fn checked_permutation(n: usize, permutation: Option<Vec<usize>>) -> Result<Vec<usize>> {
        match permutation {
            None => Ok((0..n).collect()),
            Some(p) => {
                let mut seen = vec![false; n];
                if p.len() != n || p.iter().any(|&i| i >= n || std::mem::replace(&mut seen[i], true)) {
                    return Err(Error::InvalidParameter(format!("bit permutation must be a permutation of 0..{n}")));
                }
                Ok(p)
            }
        }
    }

    /// PAS on `2^m`-ASK: the systematic bits carry the amplitude labels of
    /// all `n/m` real symbols, the parity bits become signs, and any spare
    /// systematic positions carry uniform data that also serves as signs.
    pub fn pas(h: ParityCheck, m: u32, composition: Composition) -> Result<Self> {
        if m < 2 {
            return Err(Error::InvalidParameter("PAS needs at least one amplitude bit (m ≥ 2)".into()));
        }
        let n = h.cols();
        let symbols = Self::symbol_count(n, m)?;
        if composition.len() != symbols || composition.levels() != 1 << (m - 1) {
            return Err(Error::InvalidParameter(format!(
                "composition must cover {symbols} amplitudes on {} levels",
                1 << (m - 1)
            )));
        }
        let encoder = SystematicEncoder::new(&h, &[])?;
        let amp_bits = symbols * (m as usize - 1);
        if encoder.k() < amp_bits {
            return Err(Error::InfeasibleSe(format!(
                "code dimension {} cannot carry {amp_bits} amplitude bits; need (1 − c)·m ≤ 1",
                encoder.k()
            )));
        }
        let info = encoder.info_cols();
        let sign_slots: Vec<usize> = encoder.parity_cols().iter().chain(&info[amp_bits..]).copied().collect();
        let mut slots = Vec::with_capacity(n);
        for s in 0..symbols {
            slots.push(sign_slots[s]);
            slots.extend_from_slice(&info[s * (m as usize - 1)..(s + 1) * (m as usize - 1)]);
        }
        let dist = symmetric_from_amplitudes(&composition.frequencies())?;
        Self::build(h, encoder, &Constellation::ask(m)?, Signaling::Pas { composition }, dist, slots)
    }

    fn symbol_count(n: usize, m: u32) -> Result<usize> {
        if m == 0 || m > 16 || n % m as usize != 0 || (n / m as usize) % 2 != 0 {
            return Err(Error::InvalidParameter(format!(
                "blocklength {n} must split into an even number of {m}-bit real symbols"
            )));
        }
        Ok(n / m as usize)
    }

    fn build(
        h: ParityCheck,
        encoder: SystematicEncoder,
        c: &Constellation,
        signaling: Signaling,
        distribution: InputDistribution,
        slots: Vec<usize>,
    ) -> Result<Self> {
        let m = c.bits();
        let n = h.cols();
        let two_d = c.geometry() == Geometry::TwoD;
        if n % m as usize != 0 || (!two_d && (n / m as usize) % 2 != 0) {
            return Err(Error::InvalidParameter(format!(
                "blocklength {n} must split into {}{m}-bit symbols",
                if two_d { "" } else { "an even number of " }
            )));
        }
        let unit = normalize_power(c, &distribution)?;
        let constellation = if two_d { unit } else { unit.scaled(std::f64::consts::FRAC_1_SQRT_2) };
        let labels = constellation.require_labels()?;
        let mut label_to_index = vec![0; labels.len()];
        for (i, &l) in labels.iter().enumerate() {
            label_to_index[l as usize] = i;
        }
        let sublabel_to_amp = if !two_d && *c == Constellation::ask(m)? {
            let sub = if m == 1 { vec![0] } else { brgc_labels(m - 1)? };
            let mut inv = vec![0; sub.len()];
            for (a, &l) in sub.iter().enumerate() {
                inv[l as usize] = a;
            }
            Some(inv)
        } else {
            None
        };
        Ok(CodedModulation {
            h,
            encoder,
            m,
            signaling,
            constellation,
            two_d,
            distribution,
            label_to_index,
            sublabel_to_amp,
            slots,
            symbols_per_frame: n / m as usize,
        })
    }

    pub fn parity_check(&self) -> &ParityCheck {
        &self.h
    }

    pub fn encoder(&self) -> &SystematicEncoder {
        &self.encoder
    }

    pub fn bits_per_dim(&self) -> u32 {
        self.m
    }

    pub fn signaling(&self) -> &Signaling {
        &self.signaling
    }

    /// Transmitted constellation (scaled as sent) and its input distribution.
    pub fn modulation(&self) -> (&Constellation, &InputDistribution) {
        (&self.constellation, &self.distribution)
    }

    /// Constellation symbols per frame.
    pub fn symbols(&self) -> usize {
        self.symbols_per_frame
    }

    /// Complex channel uses per frame.
    pub fn channel_uses(&self) -> usize {
        if self.two_d {
            self.symbols_per_frame
        } else {
            self.symbols_per_frame / 2
        }
    }

    /// User data bits per frame.
    pub fn data_bits(&self) -> usize {
        match &self.signaling {
            Signaling::Uniform => self.encoder.k(),
            Signaling::Pas { composition } => composition.input_bits() + self.uniform_sign_bits(),
        }
    }

    /// Uniform data bits carried in systematic sign positions (PAS).
    pub fn uniform_sign_bits(&self) -> usize {
        match self.signaling {
            Signaling::Uniform => 0,
            Signaling::Pas { .. } => self.encoder.k() - self.symbols_per_frame * (self.m as usize - 1),
        }
    }

    /// Spectral efficiency in bits per complex channel use.
    pub fn spectral_efficiency(&self) -> f64 {
        self.data_bits() as f64 / self.channel_uses() as f64
    }

    /// Complex-channel SNR (dB) corresponding to `Eb/N0` (dB).
    pub fn ebn0_to_snr_db(&self, ebn0_db: f64) -> f64 {
        ebn0_db + 10.0 * self.spectral_efficiency().log10()
    }

    fn modulate(&self, coded: &[u8]) -> Vec<Complex64> {
        let m = self.m as usize;
        let pts = self.constellation.points();
        let mapped: Vec<Complex64> = (0..self.symbols_per_frame)
            .map(|s| {
                let label = self.slots[s * m..(s + 1) * m].iter().fold(0usize, |acc, &c| (acc << 1) | coded[c] as usize);
                pts[self.label_to_index[label]]
            })
            .collect();
        if self.two_d {
            mapped
        } else {
            mapped.chunks(2).map(|p| Complex64::new(p[0].re, p[1].re)).collect()
        }
    }

    fn finish_frame(&self, data_bits: Vec<u8>, info_bits: Vec<u8>) -> Result<Frame> {
        let coded_bits = self.encoder.encode(&info_bits)?;
        let m = self.m as usize;
        let (amplitude_sequence, sign_bits) = match &self.sublabel_to_amp {
            Some(inv) => (0..self.symbols_per_frame)
                .map(|s| {
                    let slot = &self.slots[s * m..(s + 1) * m];
                    let sub = slot[1..].iter().fold(0usize, |acc, &c| (acc << 1) | coded_bits[c] as usize);
                    (inv[sub], coded_bits[slot[0]])
                })
                .unzip(),
            None => (Vec::new(), Vec::new()),
        };
        let symbols = self.modulate(&coded_bits);
        Ok(Frame {
            data_bits,
            info_bits,
            amplitude_sequence,
            sign_bits,
            coded_bits,
            symbols,
            received_samples: Vec::new(),
            llrs: Vec::new(),
            decoded_bits: Vec::new(),
        })
    }

    /// Reverse concatenation: amplitudes → labels in the systematic part,
    /// uniform bits in the remaining systematic positions, parity → signs.
    pub fn assemble_pas(&self, amplitudes: &[usize], uniform_bits: &[u8], data_bits: Vec<u8>) -> Result<Frame> {
        if !matches!(self.signaling, Signaling::Pas { .. }) {
            return Err(Error::InvalidParameter("system is not configured for PAS".into()));
        }
        let m = self.m as usize;
        if amplitudes.len() != self.symbols_per_frame || uniform_bits.len() != self.uniform_sign_bits() {
            return Err(Error::Encoding(format!(
                "PAS frame needs {} amplitudes and {} uniform bits",
                self.symbols_per_frame,
                self.uniform_sign_bits()
            )));
        }
        let sub = brgc_labels(self.m - 1)?;
        let mut info = Vec::with_capacity(self.encoder.k());
        for &a in amplitudes {
            let l = *sub.get(a).ok_or_else(|| Error::Encoding(format!("amplitude index {a} out of range")))?;
            info.extend((0..m - 1).rev().map(|b| ((l >> b) & 1) as u8));
        }
        info.extend_from_slice(uniform_bits);
        self.finish_frame(data_bits, info)
    }

    /// Builds a frame from `data_bits()` user bits.
    pub fn transmit(&self, data: &[u8]) -> Result<Frame> {
        if data.len() != self.data_bits() {
            return Err(Error::Encoding(format!("frame carries {} data bits, got {}", self.data_bits(), data.len())));
        }
        match &self.signaling {
            Signaling::Uniform => self.finish_frame(data.to_vec(), data.to_vec()),
            Signaling::Pas { composition } => {
                let k = composition.input_bits();
                let amps = ccdm_encode(&data[..k], composition)?;
                self.assemble_pas(&amps, &data[k..], data.to_vec())
            }
        }
    }

    /// Demaps `received` (one complex sample per channel use), decodes, and
    /// fills the receive-side fields of `frame`.
    pub fn receive(&self, frame: &mut Frame, received: Vec<Complex64>, ch: &ChannelSpec, max_iter: usize) -> Result<Reception> {
        let m = self.m as usize;
        let demapper = LlrDemapper::new(&self.constellation, &self.distribution, ch.noise_variance_per_dim())?;
        let mut llrs = vec![0.0; self.symbols_per_frame * m];
        for (s, chunk) in llrs.chunks_mut(m).enumerate() {
            let y = if self.two_d {
                received[s]
            } else {
                let y = received[s / 2];
                Complex64::new(if s % 2 == 0 { y.re } else { y.im }, 0.0)
            };
            demapper.llrs_into(y, chunk);
        }
        let mut code_llrs = vec![0.0; self.h.cols()];
        for (j, &c) in self.slots.iter().enumerate() {
            code_llrs[c] = llrs[j];
        }
        let out = bp_decode(&self.h, &code_llrs, max_iter)?;
        let decoded_info = self.encoder.extract(&out.bits);
        let info_errors = decoded_info.iter().zip(&frame.info_bits).filter(|(a, b)| a != b).count();
        let data_ok = info_errors == 0
            && match &self.signaling {
                Signaling::Uniform => true,
                Signaling::Pas { composition } => {
                    let inv = self.sublabel_to_amp.as_ref().expect("PAS runs on equidistant ASK");
                    let amp_bits = self.symbols_per_frame * (m - 1);
                    let amps: Vec<usize> = decoded_info[..amp_bits]
                        .chunks(m - 1)
                        .map(|b| inv[b.iter().fold(0usize, |a, &x| (a << 1) | x as usize)])
                        .collect();
                    let k = composition.input_bits();
                    ccdm_decode(&amps, composition).is_ok_and(|bits| bits == frame.data_bits[..k])
                }
            };
        frame.received_samples = received;
        frame.llrs = llrs;
        frame.decoded_bits = out.bits;
        Ok(Reception { info_errors, data_ok, iterations: out.iterations, syndrome_ok: out.syndrome_ok })
    }
}

/// Convenience wrapper for [`CodedModulation::assemble_pas`].
pub fn pas_assemble(amplitudes: &[usize], uniform_bits: &[u8], system: &CodedModulation) -> Result<Frame> {
    system.assemble_pas(amplitudes, uniform_bits, Vec::new())
}
