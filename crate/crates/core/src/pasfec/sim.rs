//! Monte-Carlo frame and bit error rates over an SNR grid.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use super::pas::CodedModulation;
use crate::constellation::ChannelSpec;
use crate::error::{Error, Result};
use crate::rates::fmt_sig;

pub const SIM_CSV_HEADER: &str = "snr_db,frames,frame_errors,bit_errors,fer,ber";

/// Frames decoded in parallel between stop-rule checks.
const BATCH: usize = 32;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StopRule {
    pub min_frame_errors: usize,
    pub max_frames: usize,
}

impl Default for StopRule {
    fn default() -> Self {
        StopRule { min_frame_errors: 100, max_frames: 100_000 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SimConfig {
    pub stop: StopRule,
    pub max_iter: usize,
    pub seed: u64,
    /// Transmit without noise (LLRs still use the nominal SNR).
    pub noiseless: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig { stop: StopRule::default(), max_iter: 50, seed: 0, noiseless: false }
    }
}

/// Error counts at one SNR. `ber` counts errors on the code's information
/// word; a frame error is any mismatch of the user data.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SimRow {
    pub snr_db: f64,
    pub frames: usize,
    pub frame_errors: usize,
    pub bit_errors: usize,
    pub fer: f64,
    pub ber: f64,
}

/// RNG of frame `frame` at grid point `point`.
pub fn frame_rng(seed: u64, point: usize, frame: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(point as u64);
    rng.set_word_pos((frame as u128) << 40);
    rng
}

/// `(frame_error, info_bit_errors)` of one random frame.
pub fn simulate_frame(sys: &CodedModulation, ch: &ChannelSpec, rng: &mut ChaCha8Rng, cfg: &SimConfig) -> Result<(bool, usize)> {
    let data: Vec<u8> = (0..sys.data_bits()).map(|_| rng.gen::<bool>() as u8).collect();
    let mut frame = sys.transmit(&data)?;
    let sigma = ch.noise_variance_per_dim().sqrt();
    let noise = Normal::new(0.0, sigma).map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let received = frame
        .symbols
        .iter()
        .map(|x| if cfg.noiseless { *x } else { x + num_complex::Complex64::new(noise.sample(rng), noise.sample(rng)) })
        .collect();
    let rx = sys.receive(&mut frame, received, ch, cfg.max_iter)?;
    Ok((!rx.data_ok, rx.info_errors))
}

/// Simulates each complex-channel SNR of `snr_grid` until the stop rule
/// fires. Results are independent of the thread count.
pub fn monte_carlo(
    sys: &CodedModulation,
    snr_grid: &[f64],
    cfg: &SimConfig,
    progress: &mut dyn FnMut(&SimRow),
) -> Result<Vec<SimRow>> {
    if cfg.stop.max_frames == 0 || cfg.max_iter == 0 {
        return Err(Error::InvalidParameter("max_frames and max_iter must be positive".into()));
    }
    let info_bits = sys.encoder().k();
    let mut rows = Vec::with_capacity(snr_grid.len());
    for (point, &snr_db) in snr_grid.iter().enumerate() {
        let ch = ChannelSpec::complex(snr_db)?;
        let (mut frames, mut frame_errors, mut bit_errors) = (0, 0, 0);
        while frames < cfg.stop.max_frames && frame_errors < cfg.stop.min_frame_errors {
            let batch = BATCH.min(cfg.stop.max_frames - frames);
            let results: Vec<(bool, usize)> = (frames..frames + batch)
                .into_par_iter()
                .map(|f| simulate_frame(sys, &ch, &mut frame_rng(cfg.seed, point, f), cfg))
                .collect::<Result<_>>()?;
            frames += batch;
            frame_errors += results.iter().filter(|r| r.0).count();
            bit_errors += results.iter().map(|r| r.1).sum::<usize>();
        }
        let row = SimRow {
            snr_db,
            frames,
            frame_errors,
            bit_errors,
            fer: frame_errors as f64 / frames as f64,
            ber: bit_errors as f64 / (frames * info_bits) as f64,
        };
        progress(&row);
        rows.push(row);
    }
    Ok(rows)
}

pub fn sim_csv(rows: &[SimRow]) -> String {
    let mut s = String::from(SIM_CSV_HEADER);
    s.push('\n');
    for r in rows {
        s.push_str(&format!(
            "{},{},{},{},{},{}\n",
            fmt_sig(r.snr_db, 10),
            r.frames,
            r.frame_errors,
            r.bit_errors,
            fmt_sig(r.fer, 10),
            fmt_sig(r.ber, 10)
        ));
    }
    s
}

/// SNR (dB) at which FER crosses `target`, by log-linear interpolation
/// between the first pair of grid points that bracket it.
pub fn snr_at_fer(rows: &[SimRow], target: f64) -> Option<f64> {
    rows.windows(2).find_map(|w| {
        let (a, b) = (&w[0], &w[1]);
        if a.fer >= target && b.fer < target {
            if b.fer <= 0.0 {
                return Some(b.snr_db);
            }
            let t = (a.fer.ln() - target.ln()) / (a.fer.ln() - b.fer.ln());
            Some(a.snr_db + t * (b.snr_db - a.snr_db))
        } else {
            None
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pasfec::ldpc::ParityCheck;

    fn toy() -> CodedModulation {
        CodedModulation::uniform(ParityCheck::peg(96, 48, 3, 7).unwrap(), 1, None).unwrap()
    }

    #[test]
    fn high_snr_is_error_free() {
        let cfg = SimConfig { stop: StopRule { min_frame_errors: 1, max_frames: 64 }, ..Default::default() };
        let rows = monte_carlo(&toy(), &[12.0], &cfg, &mut |_| {}).unwrap();
        assert_eq!(rows[0].frame_errors, 0);
        assert_eq!(rows[0].frames, 64);
    }

    #[test]
    fn reproducible_under_seed() {
        let cfg = SimConfig { stop: StopRule { min_frame_errors: 10, max_frames: 200 }, seed: 3, ..Default::default() };
        let a = monte_carlo(&toy(), &[0.0, 2.0], &cfg, &mut |_| {}).unwrap();
        let b = monte_carlo(&toy(), &[0.0, 2.0], &cfg, &mut |_| {}).unwrap();
        assert_eq!(sim_csv(&a), sim_csv(&b));
        assert!(a[0].frame_errors > 0);
    }

    #[test]
    fn interpolates_crossing() {
        let row = |snr_db, fer| SimRow { snr_db, frames: 1, frame_errors: 0, bit_errors: 0, fer, ber: 0.0 };
        let rows = [row(0.0, 0.5), row(1.0, 1e-1), row(2.0, 1e-3)];
        assert!((snr_at_fer(&rows, 1e-2).unwrap() - 1.5).abs() < 1e-12);
    }
}
