//! Probabilistic shaping of 8-ASK at 10 dB: jointly optimized spacing and
//! distribution for SMD (Blahut–Arimoto inside a spacing search), and the
//! Maxwell–Boltzmann optimum for BMD.
//!
//!     cargo run --release --example probabilistic_shaping

use shapinglab::constellation::ChannelSpec;
use shapinglab::probshape::optimize_ps;
use shapinglab::rates::{capacity, Metric, QuadratureConfig};

fn main() -> shapinglab::Result<()> {
    let q = QuadratureConfig::default();
    let ch = ChannelSpec::real(10.0)?;
    let c = capacity(&ch);
    for metric in [Metric::Smd, Metric::Bmd] {
        let s = optimize_ps(3, &ch, metric, &q)?;
        println!("{metric}: {:.4} bpcu, {:.4} below capacity {:.4}", s.rate, c - s.rate, c);
        println!("  spacing {:.4}, nu {:?}", s.delta, s.nu);
        let probs: Vec<String> = s.distribution.probs().iter().map(|p| format!("{p:.4}")).collect();
        println!("  P_X = [{}]", probs.join(", "));
    }
    Ok(())
}
