//! Search-space sizes of the scheduling problem, in arbitrary precision.

use num_bigint::BigUint;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Counts {
    /// Users considered for one allocation, `m * b`.
    pub n_users_sched: BigUint,
    /// Allocations with slot order ignored, `(m!)^(b-1)`.
    pub n_alloc: BigUint,
    /// Paths (one user per beam), `m^b`.
    pub n_paths: BigUint,
    /// Slot evaluations of an exhaustive search over allocations.
    pub n_eval_es: BigUint,
    /// Slot evaluations of the path-level (bipartite graph) search.
    pub n_eval_bg: BigUint,
    /// Allocations of `m` users per beam over `m + 1` slots without an
    /// entirely empty slot.
    pub n_alloc_fsa: BigUint,
}

pub fn factorial(n: u64) -> BigUint {
    (1..=n).fold(BigUint::from(1u32), |acc, k| acc * k)
}

pub fn counting(m: u64, b: u64) -> Counts {
    assert!(m >= 1 && b >= 1, "counting needs m >= 1 and b >= 1");
    let exp = u32::try_from(b - 1).expect("beam count fits in u32");
    let n_alloc = factorial(m).pow(exp);
    let n_paths = BigUint::from(m).pow(exp + 1);
    Counts {
        n_users_sched: BigUint::from(m) * b,
        n_eval_es: &n_alloc * m,
        n_eval_bg: n_paths.clone(),
        n_alloc_fsa: factorial(m + 1).pow(exp) - &n_alloc,
        n_alloc,
        n_paths,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn big(v: u64) -> BigUint {
        BigUint::from(v)
    }

    #[test]
    fn three_by_three() {
        let c = counting(3, 3);
        assert_eq!(c.n_alloc, big(36));
        assert_eq!(c.n_paths, big(27));
        assert_eq!(c.n_eval_es, big(108));
        assert_eq!(c.n_eval_bg, big(27));
        assert_eq!(c.n_users_sched, big(9));
    }

    #[test]
    fn single_user_per_beam() {
        for b in 1..=7 {
            let c = counting(1, b);
            assert_eq!(c.n_alloc, big(1));
            assert_eq!(c.n_paths, big(1));
        }
    }

    #[test]
    fn free_slot_allocations() {
        assert_eq!(counting(2, 2).n_alloc_fsa, big(4));
        assert_eq!(counting(3, 1).n_alloc_fsa, big(0));
    }

    #[test]
    fn exceeds_u64() {
        let c = counting(30, 7);
        assert!(c.n_alloc.bits() > 64);
        assert_eq!(c.n_alloc, factorial(30).pow(6));
    }
}
