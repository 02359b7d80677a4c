//! Coherent schedules, their upper densities, and coherent blocks.
//!
//! A schedule assigns to every point `x` a set `U(x)` of non-negative
//! iterates; here `U(x)` is always the event set of a detector run on the
//! trace of `x`, with the convention `0 ∈ U(x)`.

use serde::{Deserialize, Serialize};

use crate::cocycle::{trace_from, CocycleTrace};
use crate::error::{Error, Result};
use crate::hyptimes::{hyperbolic_times, inverse_hyperbolic_times, Inequality, TimeSet};
use crate::stats::{mean, stderr_of_mean};
use crate::systems::{Point, System};

/// A built-in event detector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum Detector {
    Hyperbolic { sigma: f64, ineq: Inequality },
    InverseHyperbolic { sigma: f64, ineq: Inequality },
}

impl Detector {
    pub fn validate(&self) -> Result<()> {
        let sigma = match *self {
            Detector::Hyperbolic { sigma, .. } | Detector::InverseHyperbolic { sigma, .. } => sigma,
        };
        if sigma > 0.0 && sigma < 1.0 {
            Ok(())
        } else {
            Err(Error::invalid("sigma", format!("{sigma} not in (0, 1)")))
        }
    }

    /// Events of the trace. `sigma` must be valid (see [`Detector::validate`]).
    pub fn detect(&self, trace: &CocycleTrace) -> TimeSet {
        let r = match *self {
            Detector::Hyperbolic { sigma, ineq } => hyperbolic_times(trace, sigma, ineq),
            Detector::InverseHyperbolic { sigma, ineq } => {
                inverse_hyperbolic_times(trace, sigma, ineq)
            }
        };
        r.expect("detector sigma validated")
    }
}

/// Membership indicator of `U(x) ∩ [0, horizon)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScheduleMask {
    pub horizon: usize,
    pub mask: Vec<bool>,
}

impl ScheduleMask {
    /// Mask of `{0} ∪ times` restricted to `[0, times.horizon)`.
    pub fn from_times(times: &TimeSet) -> Self {
        let mut mask = vec![false; times.horizon];
        if let Some(m) = mask.first_mut() {
            *m = true;
        }
        for t in times.iter().filter(|&t| t < times.horizon) {
            mask[t] = true;
        }
        ScheduleMask {
            horizon: times.horizon,
            mask,
        }
    }

    pub fn from_bools(mask: Vec<bool>) -> Self {
        ScheduleMask {
            horizon: mask.len(),
            mask,
        }
    }

    pub fn to_times(&self) -> TimeSet {
        TimeSet {
            horizon: self.horizon,
            times: (0..self.horizon).filter(|&i| self.mask[i]).collect(),
        }
    }
}

/// Prefix lengths at which the upper density is sampled: geometric steps of
/// `2^{1/16}` from `⌈horizon/2⌉` up to `horizon`.
pub fn density_grid(horizon: usize) -> Vec<usize> {
    if horizon == 0 {
        return Vec::new();
    }
    let start = horizon.div_ceil(2);
    let mut grid = vec![start];
    let ratio = 2f64.powf(1.0 / 16.0);
    let mut x = start as f64;
    loop {
        x *= ratio;
        let n = x.ceil() as usize;
        if n >= horizon {
            break;
        }
        if n > *grid.last().unwrap() {
            grid.push(n);
        }
    }
    if *grid.last().unwrap() != horizon {
        grid.push(horizon);
    }
    grid
}

/// Finite-horizon upper density: the largest `#(U ∩ [0, n)) / n` over
/// [`density_grid`].
///
/// Short prefixes are left out because `0 ∈ U` makes the density of `[0, 1)`
/// equal to 1 for every schedule.
pub fn density_plus(mask: &ScheduleMask) -> f64 {
    let mut counts = Vec::with_capacity(mask.horizon + 1);
    let mut c = 0usize;
    counts.push(0);
    for &b in &mask.mask {
        c += b as usize;
        counts.push(c);
    }
    density_grid(mask.horizon)
        .into_iter()
        .map(|n| counts[n] as f64 / n as f64)
        .fold(0.0, f64::max)
}

/// Violations of the two coherence conditions along one orbit.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoherenceReport {
    pub horizon: usize,
    /// `(n, j)` with `n ∈ U(x)`, `j ≤ n` but `n - j ∉ U(f^j x)`.
    pub shift_violations: Vec<(usize, usize)>,
    /// `(n, m)` with `n ∈ U(x)`, `m ∈ U(f^n x)` but `n + m ∉ U(x)`.
    pub concat_violations: Vec<(usize, usize)>,
    pub checked: usize,
}

impl CoherenceReport {
    pub fn is_coherent(&self) -> bool {
        self.shift_violations.is_empty() && self.concat_violations.is_empty()
    }
}

fn member(set: &TimeSet, n: usize) -> bool {
    n == 0 || set.contains(n)
}

/// Check both coherence conditions of the schedule `detector` along the
/// orbit of `x`, recomputing the detector on every shifted trace
/// `f^j x`, `0 ≤ j < horizon`.
pub fn coherence_check<D>(
    sys: &System,
    x: Point,
    detector: D,
    horizon: usize,
) -> Result<CoherenceReport>
where
    D: Fn(&CocycleTrace) -> TimeSet,
{
    let (trace, _) = trace_from(sys, x, horizon)?;
    let sets: Vec<TimeSet> = (0..horizon).map(|j| detector(&trace.shifted(j))).collect();
    let base = &sets[0];
    let mut report = CoherenceReport {
        horizon,
        ..Default::default()
    };
    for n in base.iter() {
        for (j, shifted) in sets.iter().enumerate().take(n.min(horizon - 1) + 1).skip(1) {
            report.checked += 1;
            if !member(shifted, n - j) {
                report.shift_violations.push((n, j));
            }
        }
        if n < horizon {
            for m in sets[n].iter() {
                report.checked += 1;
                if n + m <= horizon && !member(base, n + m) {
                    report.concat_violations.push((n, m));
                }
            }
        }
    }
    Ok(report)
}

/// Block membership from an explicit backward orbit.
///
/// `backward[i]` must be `f^{-(i+1)}(x)`. Returns whether `j ∈ U(f^{-j} x)`
/// for every `0 ≤ j ≤ J` (`j = 0` holds by convention).
pub fn block_membership_from_backward<D>(
    sys: &System,
    backward: &[Point],
    detector: &D,
    j_max: usize,
) -> Result<bool>
where
    D: Fn(&CocycleTrace) -> TimeSet,
{
    if backward.len() < j_max {
        return Err(Error::InsufficientData {
            needed: j_max,
            got: backward.len(),
        });
    }
    let norms: Vec<_> = backward[..j_max].iter().map(|p| sys.log_norms(p)).collect();
    for j in 1..=j_max {
        // trace of f^{-j} x: entries at f^{-j} x, …, f^{-1} x
        let mut t = CocycleTrace::with_capacity(j);
        for l in norms[..j].iter().rev() {
            t.phi_cs.push(l.phi_cs);
            t.phi_cu.push(l.phi_cu);
            t.j_cu.push(l.j_cu);
        }
        if !detector(&t).contains(j) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Whether `x` lies in the block `B_U` truncated at `J`, following the
/// backward orbit with [`System::step_inverse`].
pub fn block_membership<D>(sys: &System, x: Point, detector: &D, j_max: usize) -> Result<bool>
where
    D: Fn(&CocycleTrace) -> TimeSet,
{
    let mut backward = Vec::with_capacity(j_max);
    let mut y = x;
    for _ in 0..j_max {
        y = sys.step_inverse(&y)?;
        backward.push(y);
    }
    block_membership_from_backward(sys, &backward, detector, j_max)
}

/// One row of the block-theorem comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlockEstimate {
    pub j: usize,
    pub mu_block: f64,
    pub mu_stderr: f64,
    pub d_plus: f64,
    pub d_stderr: f64,
    pub samples: usize,
    pub horizon: usize,
}

impl BlockEstimate {
    /// `sqrt(se_mu² + se_d²)`.
    pub fn combined_stderr(&self) -> f64 {
        self.mu_stderr.hypot(self.d_stderr)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlockConfig {
    pub samples: usize,
    pub burn_in: usize,
    pub horizon: usize,
    pub seed: u64,
}

/// Monte-Carlo comparison of `μ(B_U)` with the mean upper density `d⁺`.
///
/// Sample `i` starts from a Lebesgue-random point (stream `(seed, i)`) and
/// is pushed forward `burn_in` times; the endpoint `x` is the SRB sample.
/// The stored burn-in orbit serves as the exact backward orbit of `x`, so no
/// inverse map is needed. `d⁺` is [`density_plus`] of the schedule along the
/// forward orbit of the same `x`. One row per truncation in `js`.
pub fn block_theorem_check<D>(
    sys: &System,
    detector: &D,
    js: &[usize],
    cfg: &BlockConfig,
) -> Result<Vec<BlockEstimate>>
where
    D: Fn(&CocycleTrace) -> TimeSet + Sync,
{
    let j_max = js.iter().copied().max().unwrap_or(0);
    if cfg.burn_in < j_max {
        return Err(Error::invalid(
            "burn_in",
            format!("must be at least the largest truncation {j_max}"),
        ));
    }
    if cfg.samples == 0 || cfg.horizon == 0 {
        return Err(Error::InsufficientData {
            needed: 1,
            got: 0,
        });
    }
    let rows = crate::par::map_indexed(cfg.samples, |i| -> Result<(Vec<bool>, f64)> {
        let mut rng = crate::rng::stream(cfg.seed, i as u64);
        let mut x = sys.sample_uniform(&mut rng);
        let mut history = std::collections::VecDeque::with_capacity(j_max + 1);
        for _ in 0..cfg.burn_in {
            history.push_front(x);
            history.truncate(j_max);
            x = sys.step(&x);
        }
        let backward: Vec<Point> = history.into_iter().collect();
        let members = js
            .iter()
            .map(|&j| block_membership_from_backward(sys, &backward, detector, j))
            .collect::<Result<Vec<bool>>>()?;
        let (t, _) = trace_from(sys, x, cfg.horizon)?;
        let d = density_plus(&ScheduleMask::from_times(&detector(&t)));
        Ok((members, d))
    });
    let rows = rows.into_iter().collect::<Result<Vec<_>>>()?;
    let d: Vec<f64> = rows.iter().map(|r| r.1).collect();
    let (d_plus, d_stderr) = (mean(&d), stderr_of_mean(&d));
    let m = cfg.samples as f64;
    Ok(js
        .iter()
        .enumerate()
        .map(|(k, &j)| {
            let hits = rows.iter().filter(|r| r.0[k]).count() as f64;
            let p = hits / m;
            BlockEstimate {
                j,
                mu_block: p,
                mu_stderr: (p * (1.0 - p) / m).sqrt(),
                d_plus,
                d_stderr,
                samples: cfg.samples,
                horizon: cfg.horizon,
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn density_examples() {
        for h in [1, 7, 100, 1001] {
            assert_eq!(density_plus(&ScheduleMask::from_bools(vec![true; h])), 1.0);
            assert_eq!(density_plus(&ScheduleMask::from_bools(vec![false; h])), 0.0);
            let even: Vec<bool> = (0..h).map(|i| i % 2 == 0).collect();
            let d = density_plus(&ScheduleMask::from_bools(even));
            assert!((d - 0.5).abs() <= 1.0 / h as f64 + 1e-15, "h={h} d={d}");
        }
    }

    #[test]
    fn grid_is_increasing_and_ends_at_horizon() {
        let g = density_grid(10_000);
        assert_eq!(g[0], 5000);
        assert_eq!(*g.last().unwrap(), 10_000);
        assert!(g.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn mask_round_trip() {
        let t = TimeSet {
            horizon: 6,
            times: vec![2, 3, 6],
        };
        let m = ScheduleMask::from_times(&t);
        assert_eq!(m.mask, vec![true, false, true, true, false, false]);
        assert_eq!(m.to_times().times, vec![0, 2, 3]);
    }

    #[test]
    fn cat_blocks_are_everything() {
        let det = Detector::Hyperbolic {
            sigma: 0.5,
            ineq: Inequality::NonStrict,
        };
        let f = |t: &CocycleTrace| det.detect(t);
        for j in [0, 1, 8, 64] {
            assert!(block_membership(&System::CatMap, Point::torus(0.3, 0.1), &f, j).unwrap());
        }
    }
}
