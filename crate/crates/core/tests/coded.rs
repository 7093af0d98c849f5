use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use shapinglab::pasfec::pas::mb_composition_for_bits;
use shapinglab::pasfec::{monte_carlo, CodedModulation, ParityCheck, SimConfig, StopRule};

fn pas_system() -> CodedModulation {
    let h = ParityCheck::peg(600, 150, 3, 2).unwrap();
    CodedModulation::pas(h, 3, mb_composition_for_bits(3, 200, 250).unwrap()).unwrap()
}

#[test]
fn sign_bits_are_unbiased() {
    let sys = pas_system();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (mut ones, mut total) = (0usize, 0usize);
    for _ in 0..1000 {
        let data: Vec<u8> = (0..sys.data_bits()).map(|_| rng.gen::<bool>() as u8).collect();
        let frame = sys.transmit(&data).unwrap();
        ones += frame.sign_bits.iter().map(|&b| b as usize).sum::<usize>();
        total += frame.sign_bits.len();
    }
    let frac = ones as f64 / total as f64;
    assert!((frac - 0.5).abs() < 0.02, "sign-bit ones fraction {frac}");
}

#[test]
fn amplitudes_follow_the_composition() {
    let sys = pas_system();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let comp = mb_composition_for_bits(3, 200, 250).unwrap();
    for _ in 0..20 {
        let data: Vec<u8> = (0..sys.data_bits()).map(|_| rng.gen::<bool>() as u8).collect();
        let frame = sys.transmit(&data).unwrap();
        let mut counts = vec![0; 4];
        frame.amplitude_sequence.iter().for_each(|&a| counts[a] += 1);
        assert_eq!(counts, comp.counts());
    }
}

#[test]
fn fer_decreases_with_snr() {
    let sys = CodedModulation::uniform(ParityCheck::peg(240, 120, 3, 3).unwrap(), 2, None).unwrap();
    let cfg = SimConfig { stop: StopRule { min_frame_errors: 60, max_frames: 1500 }, seed: 8, ..Default::default() };
    let rows = monte_carlo(&sys, &[2.0, 4.0, 6.0, 8.0, 10.0], &cfg, &mut |_| {}).unwrap();
    assert!(rows[0].fer > 0.5);
    assert!(rows.windows(2).all(|w| w[1].fer <= w[0].fer), "{rows:?}");
    assert!(rows[4].fer < 0.01);
}

#[test]
fn noiseless_pas_is_identity() {
    let sys = pas_system();
    let cfg = SimConfig { stop: StopRule { min_frame_errors: 1, max_frames: 100 }, seed: 3, noiseless: true, ..Default::default() };
    let row = monte_carlo(&sys, &[10.0], &cfg, &mut |_| {}).unwrap()[0];
    assert_eq!((row.frames, row.frame_errors, row.bit_errors), (100, 0, 0));
}
