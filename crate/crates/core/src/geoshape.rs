//! Geometric shaping by differential evolution.
//!
//! Candidates are raw coordinate vectors confined to a fundamental region:
//! the non-negative real half-line for one-dimensional constellations, the
//! first quadrant for two-dimensional ones. The full constellation is
//! recovered by mirroring ([`augment_1d`]) or quadrant replication
//! ([`augment_2d`]), which also fixes the label prefixes.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::constellation::{
    augment_1d, augment_2d, brgc_labels, product_constellation, ChannelSpec, Constellation, InputDistribution,
    LabeledHalf, LabeledQuadrant,
};
use crate::error::{Error, Result};
use crate::rates::{self, natural_dimension, Metric, QuadratureConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum GeometryKind {
    /// `M`-ary one-dimensional NUC.
    OneD,
    /// `M`-ary two-dimensional NUC as the square of a `√M`-ary 1D NUC.
    OneDProduct,
    /// `M`-ary two-dimensional NUC optimized over the first quadrant.
    TwoD,
}

impl FromStr for GeometryKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "1d" => Ok(GeometryKind::OneD),
            "1d-product" => Ok(GeometryKind::OneDProduct),
            "2d" => Ok(GeometryKind::TwoD),
            other => Err(Error::InvalidParameter(format!("unknown geometry {other:?} (expected 1d, 1d-product or 2d)"))),
        }
    }
}

impl fmt::Display for GeometryKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GeometryKind::OneD => "1d",
            GeometryKind::OneDProduct => "1d-product",
            GeometryKind::TwoD => "2d",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum LabelingPolicy {
    /// Sort the fundamental-region points and assign BRGC sublabels in order.
    SortedBrgc,
    /// One random sublabel permutation, drawn from the seed and fixed for the run.
    RandomFixed(u64),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GeometrySpec {
    pub kind: GeometryKind,
    /// Size of the final constellation.
    pub size: usize,
    pub labeling: LabelingPolicy,
}

impl GeometrySpec {
    pub fn new(kind: GeometryKind, size: usize, labeling: LabelingPolicy) -> Result<Self> {
        if size < 2 || !size.is_power_of_two() {
            return Err(Error::InvalidParameter(format!("constellation size must be a power of two >= 2, got {size}")));
        }
        match kind {
            GeometryKind::TwoD if size < 4 => {
                return Err(Error::InvalidParameter("2D geometry needs M divisible by 4".into()));
            }
            GeometryKind::OneDProduct if size < 4 || size.trailing_zeros() % 2 != 0 => {
                return Err(Error::InvalidParameter(format!("1d-product geometry needs M = 4^k, got {size}")));
            }
            _ => {}
        }
        Ok(GeometrySpec { kind, size, labeling })
    }

    /// Number of optimized real coordinates.
    pub fn dof(&self) -> usize {
        match self.kind {
            GeometryKind::OneD => self.size / 2,
            GeometryKind::OneDProduct => (1usize << (self.size.trailing_zeros() / 2)) / 2,
            GeometryKind::TwoD => self.size / 4 * 2,
        }
    }

    /// Bits per point of the fundamental region's sublabels.
    fn sublabel_bits(&self) -> u32 {
        match self.kind {
            GeometryKind::OneD => self.size.trailing_zeros() - 1,
            GeometryKind::OneDProduct => self.size.trailing_zeros() / 2 - 1,
            GeometryKind::TwoD => self.size.trailing_zeros() - 2,
        }
    }

    fn region_points(&self) -> usize {
        match self.kind {
            GeometryKind::TwoD => self.size / 4,
            _ => self.dof(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DeConfig {
    pub population: usize,
    pub generations: usize,
    pub crossover: f64,
    pub amplification: f64,
    pub seed: u64,
    /// Early stop once the population's objective spread is at most this.
    pub stop_epsilon: f64,
    /// Always take at least one coordinate from the mutant.
    pub forced_crossover: bool,
}

impl DeConfig {
    /// `P = 5·DOF`, `G = 10000`, `p_c = 0.88`, `F = 0.5`.
    pub fn for_geometry(geom: &GeometrySpec, seed: u64) -> Self {
        DeConfig {
            population: (5 * geom.dof()).max(4),
            generations: 10_000,
            crossover: 0.88,
            amplification: 0.5,
            seed,
            stop_epsilon: 1e-9,
            forced_crossover: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.population < 4 {
            return Err(Error::InvalidParameter(format!("population must be >= 4, got {}", self.population)));
        }
        if !(self.crossover >= 0.0 && self.crossover <= 1.0) {
            return Err(Error::InvalidParameter(format!("crossover probability {} outside [0, 1]", self.crossover)));
        }
        if !(self.amplification >= 0.0) || !self.amplification.is_finite() {
            return Err(Error::InvalidParameter(format!("amplification {} must be finite and >= 0", self.amplification)));
        }
        Ok(())
    }
}

/// Raw DE coordinates: `M/2` reals (1D), or `M/4` real parts followed by
/// `M/4` imaginary parts (2D).
pub type Candidate = Vec<f64>;

/// Folds a raw vector into the fundamental region (absolute values) and
/// rescales it so the augmented constellation has unit average power.
pub fn map_to_feasible(v: &[f64], geom: &GeometrySpec) -> Result<Candidate> {
    if v.len() != geom.dof() {
        return Err(Error::Shape(format!("candidate has {} coordinates, geometry needs {}", v.len(), geom.dof())));
    }
    let folded: Vec<f64> = v.iter().map(|x| x.abs()).collect();
    if folded.iter().any(|x| !x.is_finite()) {
        return Err(Error::Degenerate("non-finite candidate".into()));
    }
    let points = geom.region_points() as f64;
    let power = folded.iter().map(|x| x * x).sum::<f64>() / points;
    if !(power > 0.0) {
        return Err(Error::Degenerate("all-zero candidate".into()));
    }
    let scale = power.sqrt().recip();
    Ok(folded.into_iter().map(|x| x * scale).collect())
}

/// Sublabels for the fundamental region, indexed by the sorted rank of each
/// point.
fn rank_sublabels(geom: &GeometrySpec) -> Result<Vec<u32>> {
    let bits = geom.sublabel_bits();
    let base = if bits == 0 { vec![0] } else { brgc_labels(bits)? };
    Ok(match geom.labeling {
        LabelingPolicy::SortedBrgc => base,
        LabelingPolicy::RandomFixed(seed) => {
            let mut perm = base;
            perm.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
            perm
        }
    })
}

fn sorted_order<T>(items: &[T], cmp: impl Fn(&T, &T) -> std::cmp::Ordering) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..items.len()).collect();
    idx.sort_by(|&a, &b| cmp(&items[a], &items[b]).then(a.cmp(&b)));
    idx
}

fn labeled_half(x: &[f64], rank_labels: &[u32]) -> LabeledHalf {
    let order = sorted_order(x, |a, b| a.partial_cmp(b).expect("finite"));
    let mut sublabels = vec![0; x.len()];
    for (rank, &i) in order.iter().enumerate() {
        sublabels[i] = rank_labels[rank];
    }
    LabeledHalf { points: x.to_vec(), sublabels }
}

/// Labels a feasible candidate per the geometry's policy and builds the
/// normalized full constellation.
pub fn assign_labels(candidate: &[f64], geom: &GeometrySpec) -> Result<Constellation> {
    let rank_labels = rank_sublabels(geom)?;
    match geom.kind {
        GeometryKind::OneD => augment_1d(&labeled_half(candidate, &rank_labels)),
        GeometryKind::OneDProduct => {
            let a = augment_1d(&labeled_half(candidate, &rank_labels))?;
            product_constellation(&a, &a)
        }
        GeometryKind::TwoD => {
            let n = candidate.len() / 2;
            let pts: Vec<Complex64> = (0..n).map(|i| Complex64::new(candidate[i], candidate[n + i])).collect();
            let order = sorted_order(&pts, |a, b| (a.re, a.im).partial_cmp(&(b.re, b.im)).expect("finite"));
            let mut sublabels = vec![0; n];
            for (rank, &i) in order.iter().enumerate() {
                sublabels[i] = rank_labels[rank];
            }
            augment_2d(&LabeledQuadrant { points: pts, sublabels })
        }
    }
}

/// Rate objective of a candidate under `metric`, uniform input.
pub fn objective(candidate: &[f64], geom: &GeometrySpec, ch: &ChannelSpec, metric: Metric, q: &QuadratureConfig) -> Result<f64> {
    let c = assign_labels(candidate, geom)?;
    let ch = ChannelSpec::new(ch.snr_db(), natural_dimension(&c))?;
    Ok(rates::rate(metric, &c, &InputDistribution::uniform(c.len()), &ch, q)?.rate_bpcu)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Population {
    pub members: Vec<Candidate>,
    pub objectives: Vec<f64>,
}

impl Population {
    pub fn best(&self) -> (usize, f64) {
        self.objectives
            .iter()
            .copied()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |acc, (i, v)| if v > acc.1 { (i, v) } else { acc })
    }

    pub fn spread(&self) -> f64 {
        let lo = self.objectives.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = self.objectives.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        hi - lo
    }
}

/// Independent RNG stream per (seed, generation, member), so results do not
/// depend on evaluation order or thread count.
pub fn member_rng(seed: u64, generation: u64, member: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(generation);
    rng.set_word_pos(u128::from(member) << 40);
    rng
}

/// Draws a random feasible initial population.
pub fn initial_population(
    geom: &GeometrySpec,
    cfg: &DeConfig,
    eval: &(dyn Fn(&[f64]) -> Result<f64> + Sync),
) -> Result<Population> {
    let members = (0..cfg.population)
        .map(|p| {
            let mut rng = member_rng(cfg.seed, 0, p as u64);
            loop {
                let raw: Vec<f64> = (0..geom.dof()).map(|_| 2.0 - rng.gen::<f64>() * 2.0).collect();
                if let Ok(c) = map_to_feasible(&raw, geom) {
                    break c;
                }
            }
        })
        .collect::<Vec<_>>();
    let objectives = members.par_iter().map(|m| eval(m)).collect::<Result<Vec<_>>>()?;
    Ok(Population { members, objectives })
}

/// One synchronous generation (DE/rand/1/bin): every member's trial is built
/// from the previous generation, evaluated, and kept only on strict
/// improvement. `generation` selects the RNG streams.
pub fn de_step(
    pop: &Population,
    geom: &GeometrySpec,
    cfg: &DeConfig,
    generation: u64,
    eval: &(dyn Fn(&[f64]) -> Result<f64> + Sync),
) -> Result<Population> {
    let size = pop.members.len();
    if size < 4 {
        return Err(Error::InvalidParameter("population must hold at least 4 members".into()));
    }
    let dof = geom.dof();
    let trials: Vec<Option<Candidate>> = (0..size)
        .map(|p| {
            let mut rng = member_rng(cfg.seed, generation, p as u64);
            let target = &pop.members[p];
            for _ in 0..16 {
                let mut pick = || loop {
                    let r = rng.gen_range(0..size);
                    if r != p {
                        break r;
                    }
                };
                let r1 = pick();
                let r2 = loop {
                    let r = pick();
                    if r != r1 {
                        break r;
                    }
                };
                let r3 = loop {
                    let r = pick();
                    if r != r1 && r != r2 {
                        break r;
                    }
                };
                let raw: Vec<f64> = (0..dof)
                    .map(|j| pop.members[r1][j] + cfg.amplification * (pop.members[r2][j] - pop.members[r3][j]))
                    .collect();
                let Ok(mutant) = map_to_feasible(&raw, geom) else { continue };
                let forced = if cfg.forced_crossover { Some(rng.gen_range(0..dof)) } else { None };
                let crossed: Vec<f64> = (0..dof)
                    .map(|j| if Some(j) == forced || rng.gen::<f64>() < cfg.crossover { mutant[j] } else { target[j] })
                    .collect();
                if crossed == *target {
                    return None;
                }
                if let Ok(t) = map_to_feasible(&crossed, geom) {
                    return Some(t);
                }
            }
            None
        })
        .collect();

    let scored: Vec<Option<(Candidate, f64)>> = trials
        .into_par_iter()
        .map(|t| match t {
            Some(t) => eval(&t).map(|v| Some((t, v))),
            None => Ok(None),
        })
        .collect::<Result<Vec<_>>>()?;

    let mut next = pop.clone();
    for (p, s) in scored.into_iter().enumerate() {
        if let Some((t, v)) = s {
            if v > pop.objectives[p] {
                next.members[p] = t;
                next.objectives[p] = v;
            }
        }
    }
    Ok(next)
}

#[derive(Clone, Debug, PartialEq)]
pub struct DeResult {
    pub constellation: Constellation,
    pub candidate: Candidate,
    pub objective: f64,
    /// Best objective after initialization (index 0) and after each generation.
    pub trace: Vec<f64>,
    pub stopped_early: bool,
}

impl DeResult {
    pub fn trace_csv(&self) -> String {
        let mut out = String::from("generation,best_objective\n");
        for (g, v) in self.trace.iter().enumerate() {
            out.push_str(&format!("{g},{}\n", rates::fmt_sig(*v, 12)));
        }
        out
    }
}

/// Optimizes a constellation for `metric` at the SNR of `ch` with uniform
/// signaling. The channel dimensionality follows the geometry.
pub fn de_optimize(
    geom: &GeometrySpec,
    ch: &ChannelSpec,
    metric: Metric,
    cfg: &DeConfig,
    q: &QuadratureConfig,
) -> Result<DeResult> {
    de_optimize_with_progress(geom, ch, metric, cfg, q, &mut |_, _| {})
}

/// As [`de_optimize`], calling `progress(generation, best)` after each generation.
pub fn de_optimize_with_progress(
    geom: &GeometrySpec,
    ch: &ChannelSpec,
    metric: Metric,
    cfg: &DeConfig,
    q: &QuadratureConfig,
    progress: &mut dyn FnMut(usize, f64),
) -> Result<DeResult> {
    cfg.validate()?;
    q.validate()?;
    let eval = |c: &[f64]| objective(c, geom, ch, metric, q);
    let mut pop = initial_population(geom, cfg, &eval)?;
    let mut trace = vec![pop.best().1];
    let mut stopped_early = false;
    for g in 1..=cfg.generations {
        if pop.spread() <= cfg.stop_epsilon {
            stopped_early = true;
            break;
        }
        pop = de_step(&pop, geom, cfg, g as u64, &eval)?;
        let best = pop.best().1;
        trace.push(best);
        progress(g, best);
    }
    if !stopped_early && pop.spread() <= cfg.stop_epsilon {
        stopped_early = true;
    }
    let (i, best) = pop.best();
    let candidate = pop.members[i].clone();
    Ok(DeResult { constellation: assign_labels(&candidate, geom)?, candidate, objective: best, trace, stopped_early })
}

/// GS design for a target rate: DE is run at an SNR, the required SNR of the
/// result for `target_rate` is computed, and the design SNR is moved there.
#[derive(Clone, Debug, PartialEq)]
pub struct RateTargetedDesign {
    pub result: DeResult,
    /// SNR (dB) the final DE run optimized at.
    pub design_snr_db: f64,
    /// SNR (dB) at which the design achieves `target_rate`.
    pub snr_req_db: f64,
    pub gap_db: f64,
}

/// Fixed-point iteration of DE and the inverse rate, starting 0.5 dB above
/// the capacity limit, for `rounds` rounds (at least one).
pub fn design_for_rate(
    geom: &GeometrySpec,
    target_rate: f64,
    metric: Metric,
    cfg: &DeConfig,
    q: &QuadratureConfig,
    rounds: usize,
) -> Result<RateTargetedDesign> {
    let dim = match geom.kind {
        GeometryKind::OneD => crate::constellation::Dimension::Real,
        _ => crate::constellation::Dimension::Complex,
    };
    let limit = rates::capacity_inverse_db(target_rate, dim);
    let mut snr = limit + 0.5;
    let mut last = None;
    for _ in 0..rounds.max(1) {
        let ch = ChannelSpec::new(snr, dim)?;
        let result = de_optimize(geom, &ch, metric, cfg, q)?;
        let p = InputDistribution::uniform(geom.size);
        let req = rates::inverse_rate(metric, &result.constellation, &p, target_rate, q)?;
        last = Some(RateTargetedDesign { result, design_snr_db: snr, snr_req_db: req, gap_db: req - limit });
        snr = req;
    }
    Ok(last.expect("at least one round"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn geom(kind: GeometryKind, size: usize) -> GeometrySpec {
        GeometrySpec::new(kind, size, LabelingPolicy::SortedBrgc).unwrap()
    }

    #[test]
    fn dof_counts() {
        assert_eq!(geom(GeometryKind::OneD, 8).dof(), 4);
        assert_eq!(geom(GeometryKind::TwoD, 16).dof(), 8);
        assert_eq!(geom(GeometryKind::OneDProduct, 64).dof(), 4);
        assert!(GeometrySpec::new(GeometryKind::OneD, 3, LabelingPolicy::SortedBrgc).is_err());
        assert!(GeometrySpec::new(GeometryKind::OneDProduct, 8, LabelingPolicy::SortedBrgc).is_err());
    }

    #[test]
    fn map_folds_and_rescales() {
        let g = geom(GeometryKind::OneD, 4);
        let v = map_to_feasible(&[-0.3, 0.9], &g).unwrap();
        let s = ((0.09 + 0.81) / 2.0f64).sqrt();
        assert!((v[0] - 0.3 / s).abs() < 1e-15 && (v[1] - 0.9 / s).abs() < 1e-15);
        let again = map_to_feasible(&v, &g).unwrap();
        for (a, b) in v.iter().zip(&again) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn map_rejects_zero() {
        assert!(matches!(map_to_feasible(&[0.0, 0.0], &geom(GeometryKind::OneD, 4)), Err(Error::Degenerate(_))));
    }

    #[test]
    fn sorted_brgc_assignment() {
        let g = geom(GeometryKind::OneD, 8);
        let c = assign_labels(&[1.0, 0.2, 1.4, 0.6], &g).unwrap();
        let labels = c.label_strings().unwrap();
        let mut by_value: Vec<(f64, String)> = c.real_points().into_iter().zip(labels).collect();
        by_value.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        let ordered: Vec<&str> = by_value.iter().map(|(_, l)| l.as_str()).collect();
        // mirrored half carries prefix 0, sorted BRGC sublabels 00,01,11,10 on the positive side
        assert_eq!(ordered, ["010", "011", "001", "000", "100", "101", "111", "110"]);
    }

    #[test]
    fn equidistant_half_gives_gray_ask() {
        let g = geom(GeometryKind::OneD, 8);
        let c = assign_labels(&[1.0, 3.0, 5.0, 7.0], &g).unwrap();
        let ask = Constellation::ask(3).unwrap();
        assert_eq!(c.labels(), ask.labels());
        for (a, b) in c.real_points().iter().zip(ask.real_points()) {
            assert!((a - b / 21f64.sqrt()).abs() < 1e-12);
        }
    }

    #[test]
    fn bpsk_geometry_is_trivial() {
        let g = geom(GeometryKind::OneD, 2);
        let ch = ChannelSpec::real(3.0).unwrap();
        let cfg = DeConfig::for_geometry(&g, 1);
        let r = de_optimize(&g, &ch, Metric::Smd, &cfg, &QuadratureConfig::default()).unwrap();
        assert!((r.constellation.points()[1].re - 1.0).abs() < 1e-15);
        let bpsk = rates::smd_rate(&Constellation::ask(1).unwrap(), &InputDistribution::uniform(2), &ch, &QuadratureConfig::default())
            .unwrap()
            .rate_bpcu;
        assert!((r.objective - bpsk).abs() < 1e-12);
        assert!(r.stopped_early);
    }

    #[test]
    fn frozen_population_does_not_move() {
        let g = geom(GeometryKind::OneD, 4);
        let cfg = DeConfig { amplification: 0.0, crossover: 0.0, forced_crossover: false, ..DeConfig::for_geometry(&g, 3) };
        let eval = |c: &[f64]| objective(c, &g, &ChannelSpec::real(6.0).unwrap(), Metric::Smd, &QuadratureConfig::default());
        let pop = initial_population(&g, &cfg, &eval).unwrap();
        let next = de_step(&pop, &g, &cfg, 1, &eval).unwrap();
        assert_eq!(pop, next);
    }

    #[test]
    fn identical_population_is_stationary() {
        let g = geom(GeometryKind::OneD, 4);
        let cfg = DeConfig::for_geometry(&g, 3);
        let eval = |c: &[f64]| objective(c, &g, &ChannelSpec::real(6.0).unwrap(), Metric::Smd, &QuadratureConfig::default());
        let member = map_to_feasible(&[0.5, 1.2], &g).unwrap();
        let v = eval(&member).unwrap();
        let pop = Population { members: vec![member; 6], objectives: vec![v; 6] };
        assert_eq!(pop.spread(), 0.0);
        let next = de_step(&pop, &g, &cfg, 1, &eval).unwrap();
        assert_eq!(pop, next);
    }

    #[test]
    fn trace_is_monotone_and_deterministic() {
        let g = geom(GeometryKind::OneD, 4);
        let cfg = DeConfig { population: 4, generations: 50, ..DeConfig::for_geometry(&g, 11) };
        let ch = ChannelSpec::real(6.0).unwrap();
        let q = QuadratureConfig::default();
        let a = de_optimize(&g, &ch, Metric::Smd, &cfg, &q).unwrap();
        let b = de_optimize(&g, &ch, Metric::Smd, &cfg, &q).unwrap();
        assert!(a.trace.windows(2).all(|w| w[1] >= w[0]));
        assert_eq!(a.trace, b.trace);
    }

    #[test]
    fn random_fixed_labels_are_a_permutation() {
        let g = GeometrySpec::new(GeometryKind::TwoD, 16, LabelingPolicy::RandomFixed(9)).unwrap();
        let c = assign_labels(&[0.3, 1.0, 0.3, 1.0, 0.3, 0.3, 1.0, 1.0], &g).unwrap();
        let mut l = c.labels().unwrap().to_vec();
        l.sort_unstable();
        assert_eq!(l, (0..16).collect::<Vec<u32>>());
    }
}
