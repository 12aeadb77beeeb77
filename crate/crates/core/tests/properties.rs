mod common;

use beamsched::channel::{NoiseModel, C64};
use beamsched::metrics::{cdf_curve, complexity_estimate, grid, jain_index, outage_probability, quantile};
use beamsched::rates::sum_rate;
use nalgebra::DMatrix;
use proptest::prelude::*;

fn matrix_strategy() -> impl Strategy<Value = DMatrix<C64>> {
    (2usize..=6).prop_flat_map(|n| {
        prop::collection::vec((-3.0f64..3.0, -3.0f64..3.0), n * n)
            .prop_map(move |v| DMatrix::from_iterator(n, n, v.into_iter().map(|(re, im)| C64::new(re, im))))
    })
}

proptest! {
    #[test]
    fn jain_is_scale_invariant(rates in prop::collection::vec(0.01f64..10.0, 1..12), k in 0.001f64..1000.0) {
        let a = jain_index(&rates).unwrap();
        let scaled: Vec<f64> = rates.iter().map(|r| r * k).collect();
        let b = jain_index(&scaled).unwrap();
        prop_assert!((a - b).abs() < 1e-12);
        prop_assert!(a >= 1.0 / rates.len() as f64 - 1e-12 && a <= 1.0);
    }

    #[test]
    fn equal_rates_are_perfectly_fair(r in 0.01f64..10.0, n in 1usize..10) {
        prop_assert_eq!(jain_index(&vec![r; n]).unwrap(), 1.0);
    }

    #[test]
    fn cdf_is_monotone_and_bounded(samples in prop::collection::vec(0.0f64..8.0, 1..200)) {
        let curve = cdf_curve(&samples, &grid(0.0, 8.0, 0.05)).unwrap();
        prop_assert!(curve.iter().all(|&(_, p)| (0.0..=1.0).contains(&p)));
        prop_assert!(curve.windows(2).all(|w| w[0].1 <= w[1].1));
        prop_assert_eq!(curve.last().unwrap().1, 1.0);
        for &(r, p) in &curve {
            prop_assert_eq!(p, outage_probability(&samples, r).unwrap());
        }
    }

    #[test]
    fn quantile_inverts_the_cdf(samples in prop::collection::vec(0.0f64..8.0, 1..200), p in 0.001f64..1.0) {
        let q = quantile(&samples, p).unwrap();
        prop_assert!(outage_probability(&samples, q).unwrap() >= p);
        let below = samples.iter().filter(|&&s| s < q).count() as f64 / samples.len() as f64;
        prop_assert!(below < p);
    }

    #[test]
    fn sum_rate_ignores_column_order(h in matrix_strategy(), seed in any::<u64>()) {
        let noise = NoiseModel::default();
        let n = h.ncols();
        let mut r = common::rng(seed);
        let perm = common::random_permutation(&mut r, n);
        let permuted = DMatrix::from_fn(n, n, |i, j| h[(i, perm[j])]);
        let a = sum_rate(&h, noise).unwrap();
        let b = sum_rate(&permuted, noise).unwrap();
        prop_assert!((a - b).abs() <= 1e-9 * a.max(1.0));
    }

    #[test]
    fn zeroing_a_column_never_raises_sum_rate(h in matrix_strategy(), col in any::<prop::sample::Index>()) {
        let noise = NoiseModel::default();
        let mut z = h.clone();
        z.column_mut(col.index(h.ncols())).fill(C64::new(0.0, 0.0));
        prop_assert!(sum_rate(&z, noise).unwrap() <= sum_rate(&h, noise).unwrap() + 1e-12);
    }
}

#[test]
fn fixed_depth_complexity_is_twice_m_cubed() {
    for m in 1..=10usize {
        assert_eq!(complexity_estimate(m, 3), 2.0 * (m as f64).powi(3));
    }
}
