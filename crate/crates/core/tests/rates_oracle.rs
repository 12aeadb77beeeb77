mod common;

use beamsched::channel::{NoiseModel, C64};
use beamsched::rates::{mmse_sic_sinr, optimal_rates, per_user_rates, sum_rate};
use common::{generations, permutations, random_matrix, random_permutation, rng};
use nalgebra::DMatrix;
use rand::Rng;

/// `h_j^H (N0 I + sum_{k decoded after j} h_k h_k^H)^{-1} h_j` via a general
/// LU inverse.
fn oracle_sinr(h: &DMatrix<C64>, order: &[usize], j: usize, n0: f64) -> f64 {
    let n = h.nrows();
    let pos = order.iter().position(|&u| u == j).unwrap();
    let mut cov = DMatrix::<C64>::identity(n, n) * C64::new(n0, 0.0);
    for &k in &order[pos + 1..] {
        let col = h.column(k);
        cov += col * col.adjoint();
    }
    let inv = cov.try_inverse().unwrap();
    let hj = h.column(j);
    (hj.adjoint() * inv * hj)[(0, 0)].re
}

fn oracle_logdet(h: &DMatrix<C64>, n0: f64) -> f64 {
    let n = h.nrows();
    let a = DMatrix::<C64>::identity(n, n) + h * h.adjoint() / C64::new(n0, 0.0);
    a.determinant().re.log2()
}

#[test]
fn sinr_matches_matrix_inverse() {
    let mut r = rng(11);
    for n0 in [0.5, 1.0, 2.0] {
        let noise = NoiseModel::new(n0).unwrap();
        for _ in 0..50 {
            let n = r.gen_range(2..8);
            let h = random_matrix(&mut r, n, 2.0);
            let order = random_permutation(&mut r, n);
            for j in 0..n {
                let got = mmse_sic_sinr(&h, &order, j, noise).unwrap();
                let want = oracle_sinr(&h, &order, j, n0);
                assert!((got - want).abs() <= 1e-10 * want.max(1.0), "{got} vs {want}");
            }
        }
    }
}

#[test]
fn rate_sum_is_order_independent() {
    let mut r = rng(5);
    let noise = NoiseModel::default();
    for _ in 0..200 {
        let n = 2 + r.gen_range(0..6);
        let h = random_matrix(&mut r, n, 3.0);
        let want = oracle_logdet(&h, 1.0);
        assert!((sum_rate(&h, noise).unwrap() - want).abs() <= 1e-9 * want);
        for _ in 0..3 {
            let order = random_permutation(&mut r, n);
            let got = per_user_rates(&h, &order, noise).unwrap().sum();
            assert!((got - want).abs() <= 1e-9 * want, "{got} vs {want}");
        }
    }
}

#[test]
fn greedy_order_is_max_min_on_channel_instances() {
    let noise = NoiseModel::default();
    for b in 2..=5 {
        let perms = permutations(b);
        for h in generations(b, 30, 3) {
            let best = perms
                .iter()
                .map(|p| per_user_rates(&h.entries, p, noise).unwrap().min_rate)
                .fold(f64::NEG_INFINITY, f64::max);
            assert_eq!(optimal_rates(&h.entries, noise).unwrap().min_rate, best);
        }
    }
}

#[test]
fn greedy_order_is_max_min_on_random_matrices() {
    let mut r = rng(9);
    let noise = NoiseModel::default();
    let perms: Vec<_> = (0..=5).map(permutations).collect();
    for _ in 0..100 {
        let b = 2 + r.gen_range(0..4);
        let h = random_matrix(&mut r, b, 2.0);
        let best = perms[b]
            .iter()
            .map(|p| per_user_rates(&h, p, noise).unwrap().min_rate)
            .fold(f64::NEG_INFINITY, f64::max);
        assert_eq!(optimal_rates(&h, noise).unwrap().min_rate, best);
    }
}

#[test]
fn zeroing_an_interferer_never_hurts() {
    let mut r = rng(21);
    let noise = NoiseModel::default();
    for _ in 0..100 {
        let n = 3 + r.gen_range(0..5);
        let h = random_matrix(&mut r, n, 2.0);
        let order = random_permutation(&mut r, n);
        let victim = r.gen_range(0..n);
        let mut zeroed = h.clone();
        zeroed.column_mut(victim).fill(C64::new(0.0, 0.0));
        for j in (0..n).filter(|&j| j != victim) {
            let before = mmse_sic_sinr(&h, &order, j, noise).unwrap();
            let after = mmse_sic_sinr(&zeroed, &order, j, noise).unwrap();
            assert!(after >= before * (1.0 - 1e-12), "user {j}: {after} < {before}");
        }
    }
}
