use lsm_core::encoding::{
    encode_binary_planes, encode_levels, poisson_indices, poisson_step, BinaryPlane, Range,
    RateVector,
};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const CARTPOLE: [Range; 4] = [
    Range::symmetric(2.5),
    Range::symmetric(0.5),
    Range::symmetric(0.28),
    Range::symmetric(0.88),
];

#[test]
fn silent_inputs_never_spike() {
    let rates = RateVector::new(vec![0.0, 100.0, 0.0], 100.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..5000 {
        let s = poisson_step(&rates, &mut rng);
        assert!(!s[0] && !s[2]);
    }
}

#[test]
fn index_and_boolean_forms_agree() {
    let rates = RateVector::new(vec![100.0, 0.0, 250.0, 1000.0], 1000.0).unwrap();
    let mut a = ChaCha8Rng::seed_from_u64(9);
    let mut b = ChaCha8Rng::seed_from_u64(9);
    let mut idx = Vec::new();
    for _ in 0..1000 {
        let s = poisson_step(&rates, &mut a);
        poisson_indices(&rates, 1.0, &mut b, &mut idx);
        let from_idx: Vec<bool> = (0..4).map(|i| idx.contains(&i)).collect();
        assert_eq!(s, from_idx);
        assert!(s[3]);
    }
}

#[test]
fn long_run_rates_within_three_sigma() {
    let rates = RateVector::new(vec![20.0, 100.0, 400.0], 400.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let steps = 20_000;
    let mut counts = [0usize; 3];
    for _ in 0..steps {
        for (c, s) in counts.iter_mut().zip(poisson_step(&rates, &mut rng)) {
            *c += usize::from(s);
        }
    }
    for (c, r) in counts.iter().zip(rates.rates()) {
        let p = r / 1000.0;
        let sigma = (steps as f64 * p * (1.0 - p)).sqrt();
        assert!(
            (*c as f64 - steps as f64 * p).abs() <= 3.0 * sigma,
            "rate {r}: count {c}"
        );
    }
}

#[test]
fn centred_cart_selects_middle_level() {
    let r = encode_levels(&[0.0, 0.0, 0.0, 0.0], &CARTPOLE, 10, 100.0).unwrap();
    assert_eq!(r.len(), 40);
    for d in 0..4 {
        let active: Vec<usize> = (0..10).filter(|&i| r.rates()[d * 10 + i] > 0.0).collect();
        assert_eq!(active, vec![5]);
    }
}

#[test]
fn plane_neuron_index() {
    let mut planes = vec![BinaryPlane::new(7, 7); 5];
    assert_eq!(encode_binary_planes(&planes, 100.0).unwrap().active(), 0);
    planes[3].set(2, 5, true);
    let r = encode_binary_planes(&planes, 100.0).unwrap();
    assert_eq!(r.len(), 245);
    let active: Vec<usize> = (0..245).filter(|&i| r.rates()[i] > 0.0).collect();
    assert_eq!(active, vec![3 * 49 + 2 * 7 + 5]);
}

proptest! {
    #[test]
    fn one_active_level_per_dimension(values in proptest::array::uniform4(-10.0f64..10.0), levels in 1usize..20) {
        let r = encode_levels(&values, &CARTPOLE, levels, 100.0).unwrap();
        prop_assert_eq!(r.len(), 4 * levels);
        prop_assert_eq!(r.active(), 4);
        for d in 0..4 {
            let block = &r.rates()[d * levels..(d + 1) * levels];
            prop_assert_eq!(block.iter().filter(|&&x| x == 100.0).count(), 1);
            prop_assert_eq!(block.iter().filter(|&&x| x == 0.0).count(), levels - 1);
        }
    }

    #[test]
    fn levels_are_monotone(a in -3.0f64..3.0, b in -3.0f64..3.0) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let level = |v: f64| lsm_core::encoding::level_index(v, CARTPOLE[0], 10);
        prop_assert!(level(lo) <= level(hi));
    }

    #[test]
    fn planes_flatten_row_major(rows in 1usize..8, cols in 1usize..8, cells in proptest::collection::vec(any::<bool>(), 5 * 64)) {
        let mut planes = vec![BinaryPlane::new(rows, cols); 5];
        let mut expected = Vec::new();
        for (p, plane) in planes.iter_mut().enumerate() {
            for r in 0..rows {
                for c in 0..cols {
                    let on = cells[p * 64 + r * 8 + c];
                    plane.set(r, c, on);
                    expected.push(if on { 1.0 } else { 0.0 });
                }
            }
        }
        let encoded = encode_binary_planes(&planes, 1.0).unwrap();
        prop_assert_eq!(encoded.rates(), &expected[..]);
    }
}
