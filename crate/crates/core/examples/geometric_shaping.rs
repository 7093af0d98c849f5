//! Geometric shaping of 8-ASK by differential evolution for BMD at 2 bpcu,
//! compared against uniform and Maxwell–Boltzmann-shaped equidistant 8-ASK.
//!
//!     cargo run --release --example geometric_shaping

use shapinglab::constellation::{Constellation, InputDistribution};
use shapinglab::geoshape::{design_for_rate, DeConfig, GeometryKind, GeometrySpec, LabelingPolicy};
use shapinglab::probshape::mb_min_snr;
use shapinglab::rates::{snr_gap, Metric, QuadratureConfig};

fn main() -> shapinglab::Result<()> {
    let q = QuadratureConfig::default();
    let target = 2.0;
    let geom = GeometrySpec::new(GeometryKind::OneD, 8, LabelingPolicy::SortedBrgc)?;
    let cfg = DeConfig::for_geometry(&geom, 7);

    let gs = design_for_rate(&geom, target, Metric::Bmd, &cfg, &q, 3)?;
    println!("GS 8-ASK: {}", gs.result.constellation);
    println!("  {} generations, gap {:.3} dB", gs.result.trace.len() - 1, gs.gap_db);

    let uniform = snr_gap(Metric::Bmd, &Constellation::ask(3)?, &InputDistribution::uniform(8), target, &q)?;
    println!("uniform 8-ASK: gap {uniform:.3} dB");

    let (nu, _, ps_gap) = mb_min_snr(3, target, &q)?;
    println!("MB 8-ASK (nu = {nu:.4}): gap {ps_gap:.3} dB");
    println!("PS advantage over GS: {:.3} dB", gs.gap_db - ps_gap);
    Ok(())
}
