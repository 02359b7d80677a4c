//! Quadratic brute-force oracles for the linear-scan detectors.
#![allow(dead_code)]

use ergolab::hyptimes::Inequality;

fn holds(sum: f64, bound: f64, ineq: Inequality) -> bool {
    match ineq {
        Inequality::NonStrict => sum <= bound,
        Inequality::Strict => sum < bound,
    }
}

/// 1-based `n` with `Σ_{j=k+1}^{n} a_j ≥ c1 (n - k)` for all `0 ≤ k < n`.
pub fn pliss_brute(a: &[f64], c1: f64) -> Vec<usize> {
    (1..=a.len())
        .filter(|&n| {
            (0..n).all(|k| {
                let s: f64 = a[k..n].iter().sum();
                s >= c1 * (n - k) as f64
            })
        })
        .collect()
}

/// `n ∈ 1..=len` with `Σ_{j=n-k}^{n-1} phi_j ≤ k s` for all `1 ≤ k ≤ n`.
pub fn trailing_brute(phi: &[f64], s: f64, ineq: Inequality) -> Vec<usize> {
    (1..=phi.len())
        .filter(|&n| {
            (1..=n).all(|k| {
                let sum: f64 = phi[n - k..n].iter().sum();
                holds(sum, k as f64 * s, ineq)
            })
        })
        .collect()
}

/// `n ∈ 0..m` with `Σ_{j=n}^{n+k-1} phi_j ≤ k s` for all `1 ≤ k ≤ m - n`.
pub fn leading_brute(phi: &[f64], m: usize, s: f64, ineq: Inequality) -> Vec<usize> {
    (0..m)
        .filter(|&n| {
            (1..=m - n).all(|k| {
                let sum: f64 = phi[n..n + k].iter().sum();
                holds(sum, k as f64 * s, ineq)
            })
        })
        .collect()
}

/// Smallest `N ≥ 1` with `S_n < -n c/2` for every `N ≤ n ≤ len`; `None` if
/// the condition fails at `len`.
pub fn expansion_brute(phi: &[f64], c: f64) -> Option<usize> {
    let ok = |n: usize| {
        let s: f64 = phi[..n].iter().sum();
        s < -(n as f64) * c / 2.0
    };
    let len = phi.len();
    if len > 0 && !ok(len) {
        return None;
    }
    (1..=len.max(1)).find(|&big_n| (big_n..=len).all(ok))
}

/// Random dyadic values `k/8` with `|k| ≤ 16`: every partial sum is exact,
/// so ties against dyadic thresholds are decided identically by any
/// summation order.
pub fn dyadic(rng: &mut impl rand::Rng, len: usize) -> Vec<f64> {
    (0..len).map(|_| rng.gen_range(-16i32..=16) as f64 / 8.0).collect()
}
