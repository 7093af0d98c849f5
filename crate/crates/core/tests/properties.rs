use num_complex::Complex64;
use proptest::prelude::*;

use shapinglab::constellation::{augment_1d, augment_2d, ChannelSpec, LabeledHalf, LabeledQuadrant};
use shapinglab::geoshape::{assign_labels, map_to_feasible, GeometryKind, GeometrySpec, LabelingPolicy};
use shapinglab::pasfec::{ccdm_decode, ccdm_encode, composition_for};
use shapinglab::probshape::mb_distribution;
use shapinglab::rates::{bmd_rate, capacity, smd_rate, QuadratureConfig};

fn unit_power(points: &[Complex64]) -> bool {
    let p = points.iter().map(|x| x.norm_sqr()).sum::<f64>() / points.len() as f64;
    (p - 1.0).abs() < 1e-12
}

fn distinct_labels(labels: &[u32]) -> bool {
    let mut l = labels.to_vec();
    l.sort_unstable();
    l.iter().enumerate().all(|(i, &v)| v == i as u32)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn augmented_1d_is_symmetric_unit_power(half in prop::collection::vec(0.01f64..3.0, 4)) {
        let c = augment_1d(&LabeledHalf { points: half, sublabels: vec![0, 1, 3, 2] }).unwrap();
        prop_assert!(unit_power(c.points()));
        prop_assert!(distinct_labels(c.labels().unwrap()));
        let n = c.len();
        for k in 0..n / 2 {
            prop_assert!((c.points()[k] + c.points()[n - 1 - k]).norm() < 1e-12);
            // the sign bit is the leading label bit
            prop_assert_eq!(c.labels().unwrap()[n - 1 - k], c.labels().unwrap()[k] | 0b100);
        }
    }

    #[test]
    fn augmented_2d_is_unit_power(re in prop::collection::vec(0.01f64..3.0, 4), im in prop::collection::vec(0.01f64..3.0, 4)) {
        let points = re.iter().zip(&im).map(|(&a, &b)| Complex64::new(a, b)).collect();
        let c = augment_2d(&LabeledQuadrant { points, sublabels: vec![0, 1, 3, 2] }).unwrap();
        prop_assert!(unit_power(c.points()));
        prop_assert!(distinct_labels(c.labels().unwrap()));
    }

    #[test]
    fn feasibility_map_is_idempotent(v in prop::collection::vec(-3.0f64..3.0, 4)) {
        prop_assume!(v.iter().any(|x| x.abs() > 1e-3));
        let g = GeometrySpec::new(GeometryKind::OneD, 8, LabelingPolicy::SortedBrgc).unwrap();
        let once = map_to_feasible(&v, &g).unwrap();
        let twice = map_to_feasible(&once, &g).unwrap();
        for (a, b) in once.iter().zip(&twice) {
            prop_assert!((a - b).abs() < 1e-12);
        }
        prop_assert!(unit_power(assign_labels(&once, &g).unwrap().points()));
    }

    #[test]
    fn rate_ordering(half in prop::collection::vec(0.05f64..2.0, 2), nu in 0.0f64..1.0, snr in -5.0f64..20.0) {
        let c = augment_1d(&LabeledHalf { points: half, sublabels: vec![0, 1] }).unwrap();
        let p = mb_distribution(2, nu).unwrap();
        let ch = ChannelSpec::real(snr).unwrap();
        let q = QuadratureConfig::with_nodes(64);
        let smd = smd_rate(&c, &p, &ch, &q).unwrap().rate_bpcu;
        let bmd = bmd_rate(&c, &p, &ch, &q).unwrap().rate_bpcu;
        prop_assert!(bmd <= smd + 1e-9);
        prop_assert!(smd <= capacity(&ch) + 1e-9);
        prop_assert!(smd <= p.entropy() + 1e-9);
    }

    #[test]
    fn ccdm_roundtrip(nu in 0.0f64..0.3, n_a in 1usize..200, seed in any::<u64>()) {
        let p = mb_distribution(3, nu).unwrap();
        let p_a: Vec<f64> = (0..4).map(|i| 2.0 * p.probs()[4 + i]).collect();
        let comp = composition_for(&p_a, n_a).unwrap();
        let bits: Vec<u8> = (0..comp.input_bits()).map(|i| ((seed.rotate_left(i as u32 % 64) ^ i as u64) & 1) as u8).collect();
        let seq = ccdm_encode(&bits, &comp).unwrap();
        prop_assert_eq!(seq.len(), n_a);
        prop_assert_eq!(ccdm_decode(&seq, &comp).unwrap(), bits);
    }
}
