//! Pliss times, hyperbolic times (forward, inverse, reverse) and the
//! expansion time `h`.
//!
//! All detectors are single linear scans. With `phi` the relevant log-norm
//! column and `s = log σ`, the forward detectors keep the largest trailing
//! sum `M_n = max(M_{n-1}, 0) + (phi[n-1] - s)`; `n` is an event exactly
//! when `M_n ≤ 0`, i.e. when every trailing block `phi[n-k..n]` sums to at
//! most `k s`. The reverse detector runs the same recursion right to left.

use serde::{Deserialize, Serialize};

use crate::cocycle::CocycleTrace;
use crate::error::{Error, Result};
use crate::systems::System;

/// How a boundary tie `Σ phi = k log σ` is scored.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Inequality {
    /// `Σ phi ≤ k log σ` (ties count as events).
    #[default]
    NonStrict,
    /// `Σ phi < k log σ`.
    Strict,
}

impl Inequality {
    #[inline]
    fn holds(self, excess: f64) -> bool {
        match self {
            Inequality::NonStrict => excess <= 0.0,
            Inequality::Strict => excess < 0.0,
        }
    }
}

/// Sorted event indices within a horizon.
///
/// Forward detectors report times in `1..=horizon`; reverse hyperbolic
/// times anchored at `m` are in `0..m` and use `horizon = m`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimeSet {
    pub horizon: usize,
    pub times: Vec<usize>,
}

impl TimeSet {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn contains(&self, n: usize) -> bool {
        self.times.binary_search(&n).is_ok()
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.times.iter().copied()
    }
}

/// `|times| / horizon` (0 for an empty horizon).
pub fn frequency(times: &TimeSet) -> f64 {
    if times.horizon == 0 {
        0.0
    } else {
        times.len() as f64 / times.horizon as f64
    }
}

/// Rates along `E^cs`, absent for systems without a centre-stable bundle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StableRates {
    pub c_s: f64,
    pub sigma_s: f64,
    pub phibar_cs: f64,
}

/// Expansion/contraction rates and the derived hyperbolic-time constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateParams {
    pub c_u: f64,
    pub sigma_u: f64,
    pub phibar_cu: f64,
    pub stable: Option<StableRates>,
}

fn check_rate(name: &'static str, c: f64, bound: f64) -> Result<()> {
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::invalid(name, format!("{c} must be positive")));
    }
    if !(bound >= c) {
        return Err(Error::invalid(
            name,
            format!("{c} exceeds the sup bound {bound} of the matching log-norm"),
        ));
    }
    Ok(())
}

impl RateParams {
    pub fn new(c_u: f64, phibar_cu: f64) -> Result<Self> {
        check_rate("c_u", c_u, phibar_cu)?;
        Ok(RateParams {
            c_u,
            sigma_u: (-7.0 * c_u / 8.0).exp(),
            phibar_cu,
            stable: None,
        })
    }

    pub fn with_stable(mut self, c_s: f64, phibar_cs: f64) -> Result<Self> {
        check_rate("c_s", c_s, phibar_cs)?;
        self.stable = Some(StableRates {
            c_s,
            sigma_s: (-7.0 * c_s / 8.0).exp(),
            phibar_cs,
        });
        Ok(self)
    }

    /// Rates with the sup bounds read off `sys`.
    pub fn for_system(sys: &System, c_u: f64, c_s: Option<f64>) -> Result<Self> {
        let r = RateParams::new(c_u, sys.phibar_cu())?;
        match (c_s, sys.phibar_cs()) {
            (Some(c), Some(bound)) => r.with_stable(c, bound),
            (Some(_), None) => Err(Error::invalid(
                "c_s",
                "system has no centre-stable bundle",
            )),
            (None, _) => Ok(r),
        }
    }

    /// Guaranteed frequency of `σ_u`-hyperbolic times, `c_u/(8 φ̄ - 7 c_u)`.
    pub fn theta_u(&self) -> f64 {
        self.c_u / (8.0 * self.phibar_cu - 7.0 * self.c_u)
    }

    pub fn theta_s(&self) -> Option<f64> {
        self.stable
            .map(|s| s.c_s / (8.0 * s.phibar_cs - 7.0 * s.c_s))
    }
}

/// Pliss times of `a` (1-based): `n_i` such that
/// `Σ_{j=n+1}^{n_i} a_j ≥ c1 (n_i - n)` for every `0 ≤ n < n_i`.
///
/// Also returns `θ = (c2 - c1)/(L - c1)`; whenever `Σ a_j ≥ c2 N` there
/// are at least `θ N` such times.
pub fn pliss_times(a: &[f64], c1: f64, c2: f64, l: f64) -> Result<(TimeSet, f64)> {
    if !(c1 > 0.0 && c2 > c1 && l >= c2 && l.is_finite()) {
        return Err(Error::invalid(
            "c1/c2/L",
            format!("need L >= c2 > c1 > 0, got c1={c1}, c2={c2}, L={l}"),
        ));
    }
    if let Some((j, v)) = a.iter().enumerate().find(|(_, v)| !(**v <= l)) {
        return Err(Error::PreconditionViolated(format!(
            "a[{}] = {v} exceeds L = {l}",
            j + 1
        )));
    }
    // smallest trailing sum of (a - c1) ending at n
    let mut trailing_min = f64::INFINITY;
    let mut times = Vec::new();
    for (i, &v) in a.iter().enumerate() {
        trailing_min = trailing_min.min(0.0) + (v - c1);
        if trailing_min >= 0.0 {
            times.push(i + 1);
        }
    }
    Ok((
        TimeSet {
            horizon: a.len(),
            times,
        },
        (c2 - c1) / (l - c1),
    ))
}

/// Times `n ∈ 1..=len` where every trailing block of `phi` ending at `n`
/// satisfies `Σ phi ≤ k log_sigma`.
pub fn trailing_times(phi: &[f64], log_sigma: f64, ineq: Inequality) -> TimeSet {
    let mut trailing_max = f64::NEG_INFINITY;
    let mut times = Vec::new();
    for (i, &v) in phi.iter().enumerate() {
        trailing_max = trailing_max.max(0.0) + (v - log_sigma);
        if ineq.holds(trailing_max) {
            times.push(i + 1);
        }
    }
    TimeSet {
        horizon: phi.len(),
        times,
    }
}

/// Times `n ∈ 0..m` where every leading block `phi[n..n+k]`, `k ≤ m - n`,
/// satisfies `Σ phi ≤ k log_sigma`.
pub fn leading_times(phi: &[f64], m: usize, log_sigma: f64, ineq: Inequality) -> TimeSet {
    let mut leading_max = f64::NEG_INFINITY;
    let mut times = Vec::new();
    for n in (0..m).rev() {
        leading_max = leading_max.max(0.0) + (phi[n] - log_sigma);
        if ineq.holds(leading_max) {
            times.push(n);
        }
    }
    times.reverse();
    TimeSet { horizon: m, times }
}

fn check_sigma(sigma: f64) -> Result<f64> {
    if sigma > 0.0 && sigma < 1.0 {
        Ok(sigma.ln())
    } else {
        Err(Error::invalid("sigma", format!("{sigma} not in (0, 1)")))
    }
}

/// `σ`-hyperbolic times: `Σ_{j=n-k}^{n-1} phi_cu[j] ≤ k log σ` for all
/// `1 ≤ k ≤ n`.
pub fn hyperbolic_times(trace: &CocycleTrace, sigma: f64, ineq: Inequality) -> Result<TimeSet> {
    Ok(trailing_times(&trace.phi_cu, check_sigma(sigma)?, ineq))
}

/// `σ`-inverse hyperbolic times: the same condition on `phi_cs`.
pub fn inverse_hyperbolic_times(
    trace: &CocycleTrace,
    sigma: f64,
    ineq: Inequality,
) -> Result<TimeSet> {
    Ok(trailing_times(&trace.phi_cs, check_sigma(sigma)?, ineq))
}

/// `σ`-reverse hyperbolic times for reference time `m`:
/// `Σ_{j=n}^{n+k-1} phi_cs[j] ≤ k log σ` for all `1 ≤ k ≤ m - n`.
pub fn reverse_hyperbolic_times(
    trace: &CocycleTrace,
    sigma: f64,
    m: usize,
    ineq: Inequality,
) -> Result<TimeSet> {
    let log_sigma = check_sigma(sigma)?;
    if m > trace.len() {
        return Err(Error::invalid(
            "m",
            format!("reference time {m} beyond trace length {}", trace.len()),
        ));
    }
    Ok(leading_times(&trace.phi_cs, m, log_sigma, ineq))
}

/// Value of the expansion time on a finite horizon.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExpansionTime {
    Finite(usize),
    ExceedsHorizon,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExpansionTimeResult {
    pub h: ExpansionTime,
    pub horizon: usize,
}

impl ExpansionTimeResult {
    pub fn finite(&self) -> Option<usize> {
        match self.h {
            ExpansionTime::Finite(h) => Some(h),
            ExpansionTime::ExceedsHorizon => None,
        }
    }
}

/// Streaming form of [`expansion_time`]: feed `phi_cu` one iterate at a
/// time, then call [`ExpansionTracker::finish`].
#[derive(Debug, Clone, Copy)]
pub struct ExpansionTracker {
    half_rate: f64,
    sum: f64,
    n: usize,
    last_failure: usize,
}

impl ExpansionTracker {
    pub fn new(c_u: f64) -> Result<Self> {
        if !(c_u > 0.0 && c_u.is_finite()) {
            return Err(Error::invalid("c_u", format!("{c_u} must be positive")));
        }
        Ok(ExpansionTracker {
            half_rate: 0.5 * c_u,
            sum: 0.0,
            n: 0,
            last_failure: 0,
        })
    }

    #[inline]
    pub fn push(&mut self, phi_cu: f64) {
        self.sum += phi_cu;
        self.n += 1;
        if !(self.sum < -(self.n as f64) * self.half_rate) {
            self.last_failure = self.n;
        }
    }

    /// Iterates seen so far.
    pub fn horizon(&self) -> usize {
        self.n
    }

    pub fn finish(&self) -> ExpansionTimeResult {
        let h = if self.n > 0 && self.last_failure == self.n {
            ExpansionTime::ExceedsHorizon
        } else {
            ExpansionTime::Finite(self.last_failure + 1)
        };
        ExpansionTimeResult {
            h,
            horizon: self.n,
        }
    }
}

/// Smallest `N ≥ 1` with `S_n phi_cu < -n c_u / 2` for every
/// `N ≤ n ≤ horizon` (strict inequality); `ExceedsHorizon` when the
/// condition fails at the horizon itself.
pub fn expansion_time(trace: &CocycleTrace, c_u: f64) -> Result<ExpansionTimeResult> {
    let mut t = ExpansionTracker::new(c_u)?;
    for &v in &trace.phi_cu {
        t.push(v);
    }
    Ok(t.finish())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::systems::CAT_LAMBDA_U;

    #[test]
    fn pliss_example() {
        let (t, theta) = pliss_times(&[2.0, 0.0, 2.0], 0.5, 1.0, 2.0).unwrap();
        assert_eq!(t.times, vec![1, 3]);
        assert!((theta - 1.0 / 3.0).abs() < 1e-15);
        assert!(t.len() as f64 > theta * 3.0);
    }

    #[test]
    fn pliss_constant_and_errors() {
        let (t, _) = pliss_times(&[0.7; 9], 0.5, 0.6, 1.0).unwrap();
        assert_eq!(t.times, (1..=9).collect::<Vec<_>>());
        assert!(matches!(
            pliss_times(&[0.7, 3.0], 0.5, 0.6, 1.0),
            Err(Error::PreconditionViolated(_))
        ));
        assert!(pliss_times(&[0.7], 0.6, 0.5, 1.0).is_err());
    }

    #[test]
    fn cat_every_time_is_hyperbolic() {
        let t = CocycleTrace::constant(50, 0.0, -CAT_LAMBDA_U.ln(), 0.0);
        let h = hyperbolic_times(&t, 0.5, Inequality::NonStrict).unwrap();
        assert_eq!(h.len(), 50);
        assert_eq!(frequency(&h), 1.0);
    }

    #[test]
    fn zero_cocycle_has_no_times() {
        let t = CocycleTrace::constant(20, 0.0, 0.0, 0.0);
        assert!(hyperbolic_times(&t, 0.9, Inequality::NonStrict).unwrap().is_empty());
        assert!(inverse_hyperbolic_times(&t, 0.9, Inequality::NonStrict).unwrap().is_empty());
        assert_eq!(frequency(&TimeSet::default()), 0.0);
    }

    #[test]
    fn solenoid_inverse_times_every_n() {
        let t = CocycleTrace::constant(30, -(10f64.ln()), 0.0, 0.0);
        let h = inverse_hyperbolic_times(&t, 0.2, Inequality::NonStrict).unwrap();
        assert_eq!(h.len(), 30);
    }

    #[test]
    fn reverse_constant() {
        let t = CocycleTrace::constant(30, 0.3f64.ln(), 0.0, 0.0);
        let r = reverse_hyperbolic_times(&t, 0.5, 20, Inequality::NonStrict).unwrap();
        assert_eq!(r.times, (0..20).collect::<Vec<_>>());
        assert!(reverse_hyperbolic_times(&t, 0.5, 31, Inequality::NonStrict).is_err());
    }

    #[test]
    fn ties_follow_the_strictness_flag() {
        // log σ = -1/2 exactly representable; phi = -1/2 ties at every k
        let phi = vec![-0.5; 6];
        assert_eq!(trailing_times(&phi, -0.5, Inequality::NonStrict).len(), 6);
        assert!(trailing_times(&phi, -0.5, Inequality::Strict).is_empty());
    }

    #[test]
    fn expansion_time_examples() {
        let cat = CocycleTrace::constant(500, 0.0, -CAT_LAMBDA_U.ln(), 0.0);
        assert_eq!(
            expansion_time(&cat, 0.96).unwrap().h,
            ExpansionTime::Finite(1)
        );
        let neutral = CocycleTrace::constant(500, 0.0, 0.0, 0.0);
        assert_eq!(
            expansion_time(&neutral, 0.1).unwrap().h,
            ExpansionTime::ExceedsHorizon
        );
        // fails at n = 1, 2 then expands for good
        let mut phi = vec![0.0, 0.0];
        phi.extend(std::iter::repeat(-1.0).take(20));
        let t = CocycleTrace::from_phi_cu(phi);
        assert_eq!(expansion_time(&t, 0.5).unwrap().h, ExpansionTime::Finite(3));
    }

    #[test]
    fn theta_u_formula() {
        let r = RateParams::new(0.5, 1.0).unwrap();
        assert!((r.theta_u() - 0.5 / (8.0 - 3.5)).abs() < 1e-15);
        assert!((r.sigma_u - (-0.4375f64).exp()).abs() < 1e-15);
        assert!(RateParams::new(2.0, 1.0).is_err());
        assert!(RateParams::new(0.0, 1.0).is_err());
    }
}
