use pamshape::channel::{demap_gray_pam, fiber_smallsignal, label_of, map_gray_pam};
use pamshape::metrics::binary_entropy;
use pamshape::shaping::{entropy, mb_pmf, solve_nu, PamConstellation, Polarity};
use proptest::prelude::*;

proptest! {
    #[test]
    fn pmf_is_normalized_and_symmetric(nu in -2.0f64..2.0, alpha in 0.5f64..6.0, m in 2u32..=6) {
        let d = mb_pmf(nu, alpha, m).unwrap();
        let p = d.probabilities();
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!(p.iter().all(|&q| q > 0.0));
        for i in 0..p.len() / 2 {
            prop_assert_eq!(p[i], p[p.len() - 1 - i]);
        }
    }

    #[test]
    fn entropy_falls_as_nu_grows(a in 0.0f64..1.0, b in 0.0f64..1.0, alpha in 1.0f64..5.0, cup in any::<bool>()) {
        prop_assume!((a - b).abs() > 1e-6);
        let sign = if cup { -1.0 } else { 1.0 };
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        let h_lo = entropy(&mb_pmf(sign * lo * 0.1, alpha, 3).unwrap());
        let h_hi = entropy(&mb_pmf(sign * hi * 0.1, alpha, 3).unwrap());
        prop_assert!(h_hi <= h_lo);
        // strict unless both sit on a saturated floor (one or two levels left)
        if h_hi > 1.0 + 1e-6 {
            prop_assert!(h_hi < h_lo);
        }
    }

    #[test]
    fn solve_nu_round_trips(h in 2.2f64..2.99, alpha in 1.0f64..5.0, cup in any::<bool>()) {
        let pol = if cup { Polarity::Cup } else { Polarity::Cap };
        let nu = solve_nu(h, alpha, 3, pol).unwrap();
        prop_assert_eq!(nu < 0.0, cup);
        prop_assert!((entropy(&mb_pmf(nu, alpha, 3).unwrap()) - h).abs() < 1e-9);
    }

    #[test]
    fn binary_entropy_is_symmetric_and_bounded(p in 0.0f64..=1.0) {
        let h = binary_entropy(p).unwrap();
        prop_assert!((0.0..=1.0).contains(&h));
        prop_assert!((h - binary_entropy(1.0 - p).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn unchirped_response_is_abs_cos(theta in -10.0f64..10.0) {
        prop_assert!((fiber_smallsignal(theta, 0.0) - theta.cos().abs()).abs() < 1e-12);
    }

    #[test]
    fn zero_dispersion_response_is_unity(beta in -5.0f64..5.0) {
        prop_assert!((fiber_smallsignal(0.0, beta) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn gray_round_trip(m in 2u32..=8, words in proptest::collection::vec(any::<u8>(), 1..64)) {
        let bits: Vec<u8> = words
            .iter()
            .flat_map(|w| (0..m).map(move |k| (w >> (k % 8)) & 1))
            .collect();
        let symbols = map_gray_pam(&bits, m).unwrap();
        prop_assert_eq!(demap_gray_pam(&symbols, m).unwrap(), bits);
    }
}

#[test]
fn binary_entropy_endpoints() {
    assert_eq!(binary_entropy(0.0).unwrap(), 0.0);
    assert_eq!(binary_entropy(1.0).unwrap(), 0.0);
    assert_eq!(binary_entropy(0.5).unwrap(), 1.0);
}

#[test]
fn gray_labels_are_a_bijection_with_single_bit_neighbours() {
    for m in 2..=8 {
        let c = PamConstellation::new(m).unwrap();
        let labels: Vec<u32> = c
            .levels()
            .iter()
            .map(|&l| label_of(l, &c).unwrap())
            .collect();
        let mut sorted = labels.clone();
        sorted.sort_unstable();
        assert_eq!(sorted, (0..1u32 << m).collect::<Vec<_>>());
        assert!(labels.windows(2).all(|w| (w[0] ^ w[1]).count_ones() == 1));
    }
}
