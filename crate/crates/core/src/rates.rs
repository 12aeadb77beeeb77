//! Per-user achievable rates under MMSE filtering with successive
//! interference cancellation (SIC).
//!
//! A decode order lists column indices, first-decoded first. The user at
//! position `k` sees every user at positions `> k` as interference; users
//! decoded before it are assumed perfectly cancelled:
//!
//! ```text
//! SINR_j = h_j^H (N0 I + sum_{i after j} h_i h_i^H)^{-1} h_j
//! R_j    = log2(1 + SINR_j)
//! ```
//!
//! Interference covariances are always accumulated in ascending column
//! order, so the SINR of a user is a deterministic function of the user and
//! its interferer *set*. Different orders that leave a user with the same
//! interferers yield bit-identical SINRs.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::channel::{NoiseModel, C64};
use crate::error::{Error, Result};

/// Largest tolerated condition-number estimate of the interference-plus-noise
/// covariance.
pub const CONDITION_LIMIT: f64 = 1e12;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SlotRates {
    /// Rate per column of the slot matrix, bits/s/Hz.
    pub rates: Vec<f64>,
    /// Decode order that produced `rates`.
    pub order: Vec<usize>,
    pub min_rate: f64,
}

impl SlotRates {
    fn from_sinrs(sinrs: &[f64], order: Vec<usize>) -> Self {
        let rates: Vec<f64> = sinrs.iter().map(|s| (1.0 + s).log2()).collect();
        let min_rate = rates.iter().copied().fold(f64::INFINITY, f64::min);
        Self { rates, order, min_rate }
    }

    pub fn sum(&self) -> f64 {
        self.rates.iter().sum()
    }
}

/// Lower Cholesky factor of a Hermitian positive-definite matrix stored
/// row-major. Returns `None` if a pivot is not strictly positive.
fn cholesky(a: &[C64], n: usize) -> Option<Vec<C64>> {
    let mut l = vec![C64::new(0.0, 0.0); n * n];
    for j in 0..n {
        let mut d = a[j * n + j].re;
        for k in 0..j {
            d -= l[j * n + k].norm_sqr();
        }
        if !(d > 0.0) {
            return None;
        }
        let d = d.sqrt();
        l[j * n + j] = C64::new(d, 0.0);
        for i in j + 1..n {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k].conj();
            }
            l[i * n + j] = s / d;
        }
    }
    Some(l)
}

fn condition_estimate(l: &[C64], n: usize) -> f64 {
    let (lo, hi) = (0..n)
        .map(|i| l[i * n + i].re)
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), d| (lo.min(d), hi.max(d)));
    (hi / lo).powi(2)
}

/// `||L^{-1} v||^2` by forward substitution.
fn whitened_energy(l: &[C64], n: usize, v: &[C64]) -> f64 {
    let mut y = vec![C64::new(0.0, 0.0); n];
    let mut energy = 0.0;
    for i in 0..n {
        let mut s = v[i];
        for k in 0..i {
            s -= l[i * n + k] * y[k];
        }
        y[i] = s / l[i * n + i].re;
        energy += y[i].norm_sqr();
    }
    energy
}

fn column(h: &DMatrix<C64>, j: usize) -> Vec<C64> {
    h.column(j).iter().copied().collect()
}

/// MMSE SINR of column `j` against the interferers flagged in `interferers`.
fn sinr_against(h: &DMatrix<C64>, j: usize, interferers: &[bool], noise: NoiseModel) -> Result<f64> {
    let n = h.nrows();
    let mut cov = vec![C64::new(0.0, 0.0); n * n];
    for i in 0..n {
        cov[i * n + i] = C64::new(noise.n0, 0.0);
    }
    for (i, _) in interferers.iter().enumerate().filter(|(_, &on)| on) {
        let hi = h.column(i);
        for r in 0..n {
            for c in 0..n {
                cov[r * n + c] += hi[r] * hi[c].conj();
            }
        }
    }
    let l = cholesky(&cov, n)
        .ok_or_else(|| Error::Numeric("interference-plus-noise covariance is not positive definite".into()))?;
    let cond = condition_estimate(&l, n);
    if cond > CONDITION_LIMIT {
        return Err(Error::Numeric(format!(
            "interference-plus-noise covariance condition estimate {cond:e} exceeds {CONDITION_LIMIT:e}"
        )));
    }
    Ok(whitened_energy(&l, n, &column(h, j)))
}

fn validate_order(order: &[usize], k: usize) -> Result<()> {
    let mut seen = vec![false; k];
    if order.len() != k {
        return Err(Error::Config(format!(
            "decode order has {} entries for {k} users",
            order.len()
        )));
    }
    for &u in order {
        if u >= k || std::mem::replace(&mut seen[u], true) {
            return Err(Error::Config(format!("{order:?} is not a permutation of 0..{k}")));
        }
    }
    Ok(())
}

/// SINR (linear) of column `j` of `h_slot` under decode order `order`.
pub fn mmse_sic_sinr(h_slot: &DMatrix<C64>, order: &[usize], j: usize, noise: NoiseModel) -> Result<f64> {
    let k = h_slot.ncols();
    validate_order(order, k)?;
    let pos = order
        .iter()
        .position(|&u| u == j)
        .ok_or_else(|| Error::Config(format!("user {j} outside 0..{k}")))?;
    let mut interferers = vec![false; k];
    for &i in &order[pos + 1..] {
        interferers[i] = true;
    }
    sinr_against(h_slot, j, &interferers, noise)
}

/// Rates of every column of `h_slot` under `order`, indexed by column.
pub fn per_user_rates(h_slot: &DMatrix<C64>, order: &[usize], noise: NoiseModel) -> Result<SlotRates> {
    let k = h_slot.ncols();
    validate_order(order, k)?;
    let mut interferers = vec![true; k];
    let mut sinrs = vec![0.0; k];
    for &j in order {
        interferers[j] = false;
        sinrs[j] = sinr_against(h_slot, j, &interferers, noise)?;
    }
    Ok(SlotRates::from_sinrs(&sinrs, order.to_vec()))
}

/// Greedy max-min decode order together with the resulting rates.
///
/// At every stage the not-yet-placed user with the largest SINR against all
/// other unplaced users is decoded next; ties go to the lowest column.
pub fn optimal_rates(h_slot: &DMatrix<C64>, noise: NoiseModel) -> Result<SlotRates> {
    let k = h_slot.ncols();
    let mut remaining = vec![true; k];
    let mut order = Vec::with_capacity(k);
    let mut sinrs = vec![0.0; k];
    for _ in 0..k {
        let mut best: Option<(usize, f64)> = None;
        for cand in 0..k {
            if !remaining[cand] {
                continue;
            }
            remaining[cand] = false;
            let s = sinr_against(h_slot, cand, &remaining, noise)?;
            remaining[cand] = true;
            if best.is_none_or(|(_, bs)| s > bs) {
                best = Some((cand, s));
            }
        }
        let (pick, s) = best.expect("at least one unplaced user");
        remaining[pick] = false;
        sinrs[pick] = s;
        order.push(pick);
    }
    Ok(SlotRates::from_sinrs(&sinrs, order))
}

pub fn optimal_ordering(h_slot: &DMatrix<C64>, noise: NoiseModel) -> Result<Vec<usize>> {
    Ok(optimal_rates(h_slot, noise)?.order)
}

/// `log2 det(I + H H^H / N0)`, bits/s/Hz.
pub fn sum_rate(h_slot: &DMatrix<C64>, noise: NoiseModel) -> Result<f64> {
    let n = h_slot.nrows();
    let gram = h_slot * h_slot.adjoint();
    let mut a = vec![C64::new(0.0, 0.0); n * n];
    for r in 0..n {
        for c in 0..n {
            a[r * n + c] = gram[(r, c)] / noise.n0;
        }
        a[r * n + r] += C64::new(1.0, 0.0);
    }
    let l = cholesky(&a, n).ok_or_else(|| Error::Numeric("I + H H^H / N0 is not positive definite".into()))?;
    Ok((0..n).map(|i| 2.0 * l[i * n + i].re.log2()).sum())
}

/// Mean per-user rate when the sum rate is shared equally.
pub fn per_user_bound(h_slot: &DMatrix<C64>, noise: NoiseModel) -> Result<f64> {
    let k = h_slot.ncols().max(1);
    Ok(sum_rate(h_slot, noise)? / k as f64)
}
