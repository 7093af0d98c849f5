//! PAS rate adaptation with one code: 256-QAM built from MB-shaped 16-ASK
//! and a rate-5/6 code, across spectral efficiencies.
//!
//!     cargo run --release --example pas_plan

use shapinglab::probshape::pas_plan;
use shapinglab::rates::QuadratureConfig;

fn main() -> shapinglab::Result<()> {
    let q = QuadratureConfig::default();
    println!("Table I modcods:");
    for r in pas_plan(8, 5.0 / 6.0, &[32.0 / 15.0, 16.0 / 5.0, 16.0 / 3.0], &q)? {
        println!("  SE {:.3}: SNR {:.2} dB, gap {:.3} dB", r.se_bpcu, r.snr_req_db, r.gap_db);
    }

    let grid: Vec<f64> = (0..=8).map(|i| 1.0 + 0.5 * i as f64).collect();
    println!("\n{:>5} {:>9} {:>8} {:>9} {:>7}", "SE", "nu", "H(X)", "SNR_req", "gap");
    for r in pas_plan(8, 5.0 / 6.0, &grid, &q)? {
        println!("{:>5.2} {:>9.5} {:>8.4} {:>9.4} {:>7.4}", r.se_bpcu, r.nu, r.entropy_bits, r.snr_req_db, r.gap_db);
    }
    Ok(())
}
