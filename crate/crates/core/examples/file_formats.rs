//! Constellation JSON and alist round trips.
//!
//!     cargo run --release --example file_formats

use shapinglab::constellation::{constellation_from_json, constellation_to_json, ChannelSpec};
use shapinglab::pasfec::ParityCheck;
use shapinglab::probshape::optimize_ps;
use shapinglab::rates::{Metric, QuadratureConfig};

fn main() -> shapinglab::Result<()> {
    let ps = optimize_ps(2, &ChannelSpec::real(6.0)?, Metric::Bmd, &QuadratureConfig::default())?;
    let (qam, p) = ps.to_qam()?;
    let json = constellation_to_json(&qam, &p)?;
    println!("{}", &json[..json.len().min(300)]);
    let (back, p_back) = constellation_from_json(&json)?;
    assert_eq!(back.len(), 16);
    assert!((p_back.entropy() - p.entropy()).abs() < 1e-9);

    let h = ParityCheck::peg(48, 24, 3, 1)?;
    let alist = h.to_alist();
    println!("{}", alist.lines().take(4).collect::<Vec<_>>().join("\n"));
    assert_eq!(ParityCheck::from_alist(&alist)?, h);
    println!("n = {}, rank = {}, rate = {:.3}", h.cols(), h.rank(), h.rate());
    Ok(())
}
