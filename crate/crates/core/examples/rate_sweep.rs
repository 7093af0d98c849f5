//! Achievable rates of uniform 8-ASK versus capacity, with the SNR gap.
//!
//!     cargo run --release --example rate_sweep

use shapinglab::constellation::{normalize_power, ChannelSpec, Constellation, InputDistribution};
use shapinglab::rates::{bmd_rate, capacity, rate_sweep, smd_rate, FixedInput, Metric, QuadratureConfig};

fn main() -> shapinglab::Result<()> {
    let q = QuadratureConfig::default();
    let p = InputDistribution::uniform(8);
    let ask = normalize_power(&Constellation::ask(3)?, &p)?;

    println!("{:>6} {:>9} {:>9} {:>9}", "snr", "capacity", "smd", "bmd");
    for snr in (0..=20).step_by(4).map(f64::from) {
        let ch = ChannelSpec::real(snr)?;
        let smd = smd_rate(&ask, &p, &ch, &q)?.rate_bpcu;
        let bmd = bmd_rate(&ask, &p, &ch, &q)?.rate_bpcu;
        println!("{snr:>6.1} {:>9.5} {smd:>9.5} {bmd:>9.5}", capacity(&ch));
    }

    let policy = FixedInput { constellation: ask, distribution: p };
    let grid: Vec<f64> = (0..=8).map(|i| 6.0 + i as f64).collect();
    println!("\nBMD gap to capacity:");
    for row in rate_sweep(Metric::Bmd, &policy, &grid, &q)? {
        println!("  {:>5.1} dB: {:.4} bpcu, gap {:.3} dB", row.snr_db, row.rate_bpcu, row.gap_db);
    }
    Ok(())
}
