//! Constant-composition distribution matching: quantize an MB amplitude
//! distribution, map bits to amplitude sequences and back.
//!
//!     cargo run --release --example distribution_matching

use rand::{Rng, SeedableRng};
use shapinglab::pasfec::ccdm::{ccdm_decode, ccdm_encode, composition_divergence, composition_for};
use shapinglab::pasfec::pas::amplitude_sign_split;
use shapinglab::probshape::mb_distribution;

fn main() -> shapinglab::Result<()> {
    let (p_a, _) = amplitude_sign_split(&mb_distribution(3, 0.06)?)?;
    println!("P_A = {p_a:.4?}");
    for n_a in [16, 64, 256, 1024] {
        let comp = composition_for(&p_a, n_a)?;
        println!(
            "n_a = {n_a:>4}: counts {:?}, {} bits ({:.4} per amplitude), D = {:.2e} bits",
            comp.counts(),
            comp.input_bits(),
            comp.rate(),
            composition_divergence(&comp, &p_a)
        );
    }

    let comp = composition_for(&p_a, 64)?;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
    let bits: Vec<u8> = (0..comp.input_bits()).map(|_| rng.gen::<bool>() as u8).collect();
    let seq = ccdm_encode(&bits, &comp)?;
    let amps: String = seq.iter().map(|a| char::from(b'0' + (2 * a + 1) as u8)).collect();
    println!("\namplitudes: {amps}");
    assert_eq!(ccdm_decode(&seq, &comp)?, bits);
    println!("decoded back to the {} input bits", bits.len());
    Ok(())
}
