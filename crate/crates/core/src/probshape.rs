//! Probabilistic shaping on equidistant ASK: the Maxwell–Boltzmann family,
//! power-constrained Blahut–Arimoto, the nested spacing search, and PAS
//! rate-adaptation planning.
//!
//! PS constellations are `Δ·{±1, ±3, …, ±(2^m − 1)}` on a real channel with
//! unit noise variance and power budget `SNR`. Two-dimensional PS is always
//! the self-product of the one-dimensional solution.

use rayon::prelude::*;

use crate::constellation::{product_shaped, ChannelSpec, Constellation, Dimension, InputDistribution};
use crate::error::{Error, Result};
use crate::rates::{self, capacity_inverse_db, fmt_sig, Metric, QuadratureConfig};

/// Unnormalized ASK amplitudes `{−(2^m−1), …, −1, 1, …, 2^m−1}`, ascending.
pub fn ask_levels(m: u32) -> Vec<f64> {
    let n = 1i64 << m;
    (0..n).map(|i| (2 * i - n + 1) as f64).collect()
}

/// Maxwell–Boltzmann distribution `P(x) ∝ exp(−ν x²)` on the `2^m`-ASK
/// levels (ascending, matching [`Constellation::ask`]). For very large `ν`
/// the outer levels underflow and the result saturates to the two-point
/// distribution on `±1`.
pub fn mb_distribution(m: u32, nu: f64) -> Result<InputDistribution> {
    if !(nu >= 0.0) || !nu.is_finite() {
        return Err(Error::InvalidParameter(format!("MB parameter must be finite and >= 0, got {nu}")));
    }
    if m == 0 || m > 16 {
        return Err(Error::InvalidParameter(format!("ASK bit count must be in 1..=16, got {m}")));
    }
    // exponent shifted so the ±1 levels have weight one
    let w: Vec<f64> = ask_levels(m).iter().map(|x| (-nu * (x * x - 1.0)).exp()).collect();
    InputDistribution::from_weights(&w)
}

/// MB parameter whose distribution on `2^m`-ASK has entropy `target` bits.
/// Valid targets lie in `(1, m]`: the sign bit is always uniform.
pub fn nu_for_entropy(m: u32, target: f64) -> Result<f64> {
    let mf = m as f64;
    if !(target > 1.0 && target <= mf + 1e-12) {
        return Err(Error::Range(format!("target entropy {target} outside (1, {m}]")));
    }
    if target >= mf - 1e-12 {
        return Ok(0.0);
    }
    let h = |nu: f64| -> Result<f64> { Ok(mb_distribution(m, nu)?.entropy()) };
    let (mut lo, mut hi) = (0.0, 1e-3);
    while h(hi)? > target {
        lo = hi;
        hi *= 2.0;
        if hi > 1e6 {
            return Err(Error::Range(format!("target entropy {target} too close to 1 bit")));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let hm = h(mid)?;
        if (hm - target).abs() < 1e-12 {
            return Ok(mid);
        }
        if hm > target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= f64::EPSILON * hi {
            break;
        }
    }
    let nu = 0.5 * (lo + hi);
    let err = (h(nu)? - target).abs();
    if err >= 1e-9 {
        return Err(Error::Convergence(format!("entropy targeting stalled at error {err:e}")));
    }
    Ok(nu)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BaConfig {
    /// Stop when the upper/lower capacity bound gap falls below this (bits).
    pub tol: f64,
    pub max_iter: usize,
    /// Output grid size.
    pub grid_points: usize,
    /// Output grid half-width beyond the outermost point, in noise std devs.
    pub grid_sigmas: f64,
}

impl Default for BaConfig {
    fn default() -> Self {
        BaConfig { tol: 1e-8, max_iter: 100_000, grid_points: 2001, grid_sigmas: 8.0 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BaOutcome {
    pub distribution: InputDistribution,
    /// Mutual information on the discretized channel, bits.
    pub mutual_information: f64,
    /// Lagrange multiplier of the power constraint (0 when inactive).
    pub multiplier: f64,
    pub average_power: f64,
    pub iterations: usize,
}

/// Discretized real AWGN channel with a fixed input alphabet.
struct DiscreteChannel {
    points: Vec<f64>,
    /// Row-stochastic transition matrix, one row per input.
    w: Vec<Vec<f64>>,
    /// `Σ_y W ln W` per row.
    neg_entropy: Vec<f64>,
}

impl DiscreteChannel {
    fn new(points: &[f64], noise_var: f64, cfg: &BaConfig) -> Self {
        let sd = noise_var.sqrt();
        let span = points.iter().fold(0.0f64, |a, x| a.max(x.abs())) + cfg.grid_sigmas * sd;
        let n = cfg.grid_points;
        let step = 2.0 * span / (n - 1) as f64;
        let grid: Vec<f64> = (0..n).map(|i| -span + i as f64 * step).collect();
        let w: Vec<Vec<f64>> = points
            .iter()
            .map(|x| {
                let row: Vec<f64> = grid.iter().map(|y| (-(y - x) * (y - x) / (2.0 * noise_var)).exp()).collect();
                let s: f64 = row.iter().sum();
                row.into_iter().map(|v| v / s).collect()
            })
            .collect();
        let neg_entropy = w
            .iter()
            .map(|row| row.iter().filter(|&&v| v > 1e-300).map(|v| v * v.ln()).sum())
            .collect();
        DiscreteChannel { points: points.to_vec(), w, neg_entropy }
    }

    /// Relative entropies `D(W_k ‖ q)` in nats.
    fn divergences(&self, p: &[f64]) -> Vec<f64> {
        let ny = self.w[0].len();
        let mut q = vec![0.0; ny];
        for (pk, row) in p.iter().zip(&self.w) {
            if *pk > 0.0 {
                for (qy, wy) in q.iter_mut().zip(row) {
                    *qy += pk * wy;
                }
            }
        }
        let ln_q: Vec<f64> = q.iter().map(|v| if *v > 1e-300 { v.ln() } else { -690.0 }).collect();
        self.w
            .iter()
            .zip(&self.neg_entropy)
            .map(|(row, ne)| ne - row.iter().zip(&ln_q).map(|(w, l)| w * l).sum::<f64>())
            .collect()
    }

    /// Blahut–Arimoto for `max I(X;Y) − s E[X²]`, warm-started from `p`.
    fn solve(&self, s: f64, p: &mut Vec<f64>, cfg: &BaConfig) -> Result<usize> {
        let cost: Vec<f64> = self.points.iter().map(|x| s * x * x).collect();
        for it in 1..=cfg.max_iter {
            let d = self.divergences(p);
            let log_c: Vec<f64> = d.iter().zip(&cost).map(|(d, c)| d - c).collect();
            let cmax = log_c.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let c: Vec<f64> = log_c.iter().map(|l| (l - cmax).exp()).collect();
            let z: f64 = p.iter().zip(&c).map(|(p, c)| p * c).sum();
            // upper bound ln max c, lower bound ln Σ p c (shifted by cmax)
            let gap_bits = -z.ln() / std::f64::consts::LN_2;
            for (pk, ck) in p.iter_mut().zip(&c) {
                *pk *= ck / z;
            }
            if gap_bits < cfg.tol {
                return Ok(it);
            }
        }
        Err(Error::Convergence(format!("Blahut-Arimoto did not reach tolerance {} in {} iterations", cfg.tol, cfg.max_iter)))
    }

    fn mutual_information_bits(&self, p: &[f64]) -> f64 {
        let d = self.divergences(p);
        p.iter().zip(&d).map(|(p, d)| p * d).sum::<f64>() / std::f64::consts::LN_2
    }

    fn power(&self, p: &[f64]) -> f64 {
        p.iter().zip(&self.points).map(|(p, x)| p * x * x).sum()
    }
}

/// Capacity-achieving input distribution for the real constellation `c` (at
/// its given scale) on the channel `ch`, subject to `E|X|² ≤ 1`. The noise
/// variance is `1/SNR`; the power constraint is enforced with a Lagrange
/// multiplier that is bisected until the constraint binds within `1e-6`.
pub fn blahut_arimoto(c: &Constellation, ch: &ChannelSpec, cfg: &BaConfig) -> Result<BaOutcome> {
    let points = c.real_points();
    if c.geometry() != crate::constellation::Geometry::OneD {
        return Err(Error::Shape("Blahut-Arimoto is implemented for one-dimensional alphabets".into()));
    }
    let noise_var = ch.noise_variance_per_dim();
    let budget = 1.0;
    let chan = DiscreteChannel::new(&points, noise_var, cfg);
    let mut p = vec![1.0 / points.len() as f64; points.len()];
    let mut iterations = chan.solve(0.0, &mut p, cfg)?;
    let mut s = 0.0;
    if chan.power(&p) > budget * (1.0 + 1e-6) {
        if points.iter().all(|x| x * x > budget) {
            return Err(Error::Range("every point exceeds the power budget".into()));
        }
        let (mut lo, mut hi) = (0.0, 1.0);
        let mut p_hi = p.clone();
        loop {
            iterations += chan.solve(hi, &mut p_hi, cfg)?;
            if chan.power(&p_hi) <= budget {
                break;
            }
            lo = hi;
            hi *= 2.0;
            if hi > 1e8 {
                return Err(Error::Convergence("power multiplier bracket failed".into()));
            }
        }
        let mut p_mid = p_hi.clone();
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            iterations += chan.solve(mid, &mut p_mid, cfg)?;
            let pw = chan.power(&p_mid);
            s = mid;
            if (pw - budget).abs() <= 1e-6 * budget {
                break;
            }
            if pw > budget {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        p = p_mid;
    }
    let mi = chan.mutual_information_bits(&p);
    let average_power = chan.power(&p);
    Ok(BaOutcome {
        distribution: InputDistribution::from_weights(&p)?,
        mutual_information: mi,
        multiplier: s,
        average_power,
        iterations,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct PsSolution {
    /// Distribution over the ascending `2^m`-ASK levels.
    pub distribution: InputDistribution,
    /// Point spacing for unit noise variance.
    pub delta: f64,
    /// MB parameter (BMD path only).
    pub nu: Option<f64>,
    /// Achievable rate per real dimension, bpcu.
    pub rate: f64,
    /// Power-normalized labeled ASK constellation carrying the distribution.
    pub constellation: Constellation,
}

impl PsSolution {
    /// Two copies of the one-dimensional solution as a square QAM.
    pub fn to_qam(&self) -> Result<(Constellation, InputDistribution)> {
        product_shaped(&self.constellation, &self.distribution, &self.constellation, &self.distribution)
    }
}

/// Golden-section maximization of a unimodal `f` on `[a, b]`.
fn golden_max(f: &dyn Fn(f64) -> Result<f64>, mut a: f64, mut b: f64, tol: f64) -> Result<(f64, f64)> {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = b - inv_phi * (b - a);
    let mut x2 = a + inv_phi * (b - a);
    let mut f1 = f(x1)?;
    let mut f2 = f(x2)?;
    while (b - a) > tol {
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = f(x2)?;
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = f(x1)?;
        }
    }
    Ok(if f1 >= f2 { (x1, f1) } else { (x2, f2) })
}

/// Coarse scan followed by golden-section refinement around the best point.
fn scan_then_golden(f: &(dyn Fn(f64) -> Result<f64> + Sync), lo: f64, hi: f64, points: usize, tol: f64) -> Result<(f64, f64)> {
    let grid: Vec<f64> = (0..points).map(|i| lo + (hi - lo) * i as f64 / (points - 1) as f64).collect();
    let vals = grid.par_iter().map(|&x| f(x)).collect::<Result<Vec<f64>>>()?;
    let best = (0..points).max_by(|&i, &j| vals[i].partial_cmp(&vals[j]).expect("finite objective")).expect("grid");
    let a = grid[best.saturating_sub(1)];
    let b = grid[(best + 1).min(points - 1)];
    let (x, v) = golden_max(f, a, b, tol)?;
    Ok(if v >= vals[best] { (x, v) } else { (grid[best], vals[best]) })
}

/// Jointly optimizes the spacing and the input distribution of `2^m`-ASK
/// at the SNR of `ch` (per real dimension).
///
/// SMD: outer golden-section search over `log Δ`, inner power-constrained
/// Blahut–Arimoto. BMD: search restricted to the MB family; the power
/// constraint fixes `Δ` for every `ν`.
pub fn optimize_ps(m: u32, ch: &ChannelSpec, metric: Metric, q: &QuadratureConfig) -> Result<PsSolution> {
    if m == 0 || m > 10 {
        return Err(Error::InvalidParameter(format!("bits per dimension must be in 1..=10, got {m}")));
    }
    let real = ChannelSpec::new(ch.snr_db(), Dimension::Real)?;
    let snr = real.snr_linear();
    let ask = Constellation::ask(m)?;
    let levels = ask_levels(m);
    let second_moment = |p: &InputDistribution| -> f64 { p.probs().iter().zip(&levels).map(|(p, x)| p * x * x).sum() };

    match metric {
        Metric::Smd => {
            let e_uniform = ((1u64 << (2 * m)) as f64 - 1.0) / 3.0;
            let delta_u = (snr / e_uniform).sqrt();
            // Δ beyond √SNR cannot meet the power budget even on ±Δ
            let lo = (0.5 * delta_u).ln();
            let hi = (snr.sqrt() * 0.999).ln();
            let cfg = BaConfig::default();
            let solve = |log_delta: f64| -> Result<BaOutcome> {
                let delta = log_delta.exp();
                // scale so the power budget is one and the noise variance 1/SNR
                let pts: Vec<f64> = levels.iter().map(|x| x * delta / snr.sqrt()).collect();
                blahut_arimoto(&Constellation::real(&pts, ask.labels().map(|l| l.to_vec()))?, &real, &cfg)
            };
            let objective = |log_delta: f64| -> Result<f64> { Ok(solve(log_delta)?.mutual_information) };
            let (best, _) = if m == 1 {
                (hi, 0.0)
            } else {
                scan_then_golden(&objective, lo, hi, 31, 1e-6)?
            };
            let outcome = solve(best)?;
            let p = outcome.distribution;
            let delta = (snr / second_moment(&p)).sqrt();
            let constellation = crate::constellation::normalize_power(&ask, &p)?;
            let rate = rates::smd_rate(&constellation, &p, &real, q)?.rate_bpcu;
            Ok(PsSolution { distribution: p, delta, nu: None, rate, constellation })
        }
        Metric::Bmd => {
            let eval = |nu: f64| -> Result<f64> {
                let p = mb_distribution(m, nu)?;
                Ok(rates::bmd_rate(&ask, &p, &real, q)?.rate_bpcu)
            };
            // ν scanned on a log scale: H(ν) changes over several decades
            let e_uniform = ((1u64 << (2 * m)) as f64 - 1.0) / 3.0;
            let nu_scale = 1.0 / e_uniform;
            let objective = |t: f64| -> Result<f64> { if t <= -12.0 { eval(0.0) } else { eval(nu_scale * t.exp()) } };
            let (t, _) = if m == 1 { (-12.0, 0.0) } else { scan_then_golden(&objective, -12.0, 4.0, 31, 1e-6)? };
            let uniform_rate = eval(0.0)?;
            let mut nu = if t <= -12.0 { 0.0 } else { nu_scale * t.exp() };
            if uniform_rate >= objective(t)? {
                nu = 0.0;
            }
            let p = mb_distribution(m, nu)?;
            let rate = rates::bmd_rate(&ask, &p, &real, q)?.rate_bpcu;
            let delta = (snr / second_moment(&p)).sqrt();
            let constellation = crate::constellation::normalize_power(&ask, &p)?;
            Ok(PsSolution { distribution: p, delta, nu: Some(nu), rate, constellation })
        }
    }
}

/// MB-shaped `2^m`-ASK with the smallest required SNR for `target_rate`
/// bpcu per real dimension under BMD: `(ν, SNR_req dB, gap dB)`.
pub fn mb_min_snr(m: u32, target_rate: f64, q: &QuadratureConfig) -> Result<(f64, f64, f64)> {
    let ask = Constellation::ask(m)?;
    let limit = capacity_inverse_db(target_rate, Dimension::Real);
    // entropy must stay above the target rate
    let nu_max = nu_for_entropy(m, (target_rate + 1e-3).max(1.0 + 1e-6)).unwrap_or(1.0);
    let neg_snr = |nu: f64| -> Result<f64> {
        let p = mb_distribution(m, nu)?;
        match rates::inverse_rate(Metric::Bmd, &ask, &p, target_rate, q) {
            Ok(s) => Ok(-s),
            Err(Error::UnreachableRate { .. }) => Ok(-1e3),
            Err(e) => Err(e),
        }
    };
    let (nu, v) = scan_then_golden(&neg_snr, 0.0, nu_max, 31, 1e-7)?;
    Ok((nu, -v, -v - limit))
}

/// Spectral efficiency of PAS, `R = H(X) − (1 − c)·m`.
pub fn pas_se(entropy: f64, code_rate: f64, m: u32) -> Result<f64> {
    if !(code_rate > 0.0 && code_rate < 1.0) {
        return Err(Error::InvalidParameter(format!("code rate must lie in (0, 1), got {code_rate}")));
    }
    if entropy > m as f64 + 1e-12 {
        return Err(Error::InvalidParameter(format!("entropy {entropy} exceeds {m} bits")));
    }
    let r = entropy - (1.0 - code_rate) * m as f64;
    if r <= 0.0 {
        return Err(Error::InfeasibleSe(format!("H(X) = {entropy} with code rate {code_rate} leaves no information rate")));
    }
    Ok(r)
}

#[derive(Clone, Debug, PartialEq)]
pub struct PlanRow {
    pub se_bpcu: f64,
    pub nu: f64,
    /// `H(X)` per complex symbol, bits.
    pub entropy_bits: f64,
    pub snr_req_db: f64,
    pub gap_db: f64,
}

/// Operating point of a single PAS modcod (`2^m`-QAM as the square of
/// MB-shaped `2^(m/2)`-ASK, code rate `c`) at spectral efficiency `se`.
pub fn pas_operating_point(m: u32, code_rate: f64, se: f64, q: &QuadratureConfig) -> Result<PlanRow> {
    if m % 2 != 0 || m == 0 {
        return Err(Error::InvalidParameter(format!("PAS planning needs an even bit count per QAM symbol, got {m}")));
    }
    let m_dim = m / 2;
    let entropy = se + (1.0 - code_rate) * m as f64;
    let check = pas_se(entropy.min(m as f64), code_rate, m)?;
    if entropy > m as f64 + 1e-12 || (check - se).abs() > 1e-9 {
        return Err(Error::InfeasibleSe(format!("SE {se} needs H(X) = {entropy} > {m} bits")));
    }
    let nu = nu_for_entropy(m_dim, entropy / 2.0)?;
    let ask = Constellation::ask(m_dim)?;
    let p1 = mb_distribution(m_dim, nu)?;
    let (qam, p) = product_shaped(&ask, &p1, &ask, &p1)?;
    let snr_req_db = rates::inverse_rate(Metric::Bmd, &qam, &p, se, q)?;
    let gap_db = snr_req_db - capacity_inverse_db(se, Dimension::Complex);
    Ok(PlanRow { se_bpcu: se, nu, entropy_bits: p.entropy(), snr_req_db, gap_db })
}

/// PAS rate-adaptation plan over a grid of spectral efficiencies.
pub fn pas_plan(m: u32, code_rate: f64, se_grid: &[f64], q: &QuadratureConfig) -> Result<Vec<PlanRow>> {
    se_grid.par_iter().map(|&se| pas_operating_point(m, code_rate, se, q)).collect()
}

pub const PLAN_CSV_HEADER: &str = "se_bpcu,nu,entropy_bits,snr_req_db,gap_db";

pub fn plan_csv(rows: &[PlanRow]) -> String {
    let mut out = String::from(PLAN_CSV_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            fmt_sig(r.se_bpcu, 9),
            fmt_sig(r.nu, 9),
            fmt_sig(r.entropy_bits, 9),
            fmt_sig(r.snr_req_db, 9),
            fmt_sig(r.gap_db, 9)
        ));
    }
    out
}
