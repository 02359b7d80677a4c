//! SRB sampling, correlation decay, expansion-time tails, decay fits, the
//! tail-to-mixing-class dictionary and the stable holonomy density.

use serde::{Deserialize, Serialize};

use crate::cocycle::iterate;
use crate::error::{Error, Result};
use crate::hyptimes::{ExpansionTime, ExpansionTracker};
use crate::observables::Observable;
use crate::par::{chunks, map_indexed};
use crate::stats::{fit_line, mean, merge_tree, stderr_of_mean, CoMoments, LineFit};
use crate::systems::{circle_distance, Point, System};

// ---------------------------------------------------------------------------
// SRB surrogate

/// `count` points `f^B(x_i)` with `x_i` Lebesgue-uniform, `x_i` drawn from
/// stream `(seed, i)`.
pub fn srb_sampler(sys: &System, burn_in: usize, count: usize, seed: u64) -> Result<Vec<Point>> {
    if burn_in == 0 {
        return Err(Error::invalid("burn_in", "must be at least 1"));
    }
    Ok(map_indexed(count, |i| srb_point(sys, burn_in, seed, i)))
}

#[inline]
fn srb_point(sys: &System, burn_in: usize, seed: u64, i: usize) -> Point {
    let mut rng = crate::rng::stream(seed, i as u64);
    iterate(sys, sys.sample_uniform(&mut rng), burn_in)
}

/// Ensemble mean of `obs` under the SRB surrogate, with its standard error.
/// Comparing burn-ins `B` and `2B` gives the burn-in stability report.
pub fn srb_mean(
    sys: &System,
    obs: &Observable,
    burn_in: usize,
    count: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    let v: Vec<f64> = srb_sampler(sys, burn_in, count, seed)?
        .iter()
        .map(|p| obs.eval(p))
        .collect();
    Ok((mean(&v), stderr_of_mean(&v)))
}

// ---------------------------------------------------------------------------
// Correlations

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrelationConfig {
    pub n_max: usize,
    pub samples: usize,
    pub burn_in: usize,
    pub seed: u64,
    /// Number of contiguous sample batches used for batch-means errors.
    pub batches: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationSeries {
    pub n_grid: Vec<usize>,
    /// Signed covariance `μ(φ·ψ∘f^n) - μ(φ)μ(ψ)`.
    pub cov: Vec<f64>,
    /// `|cov|`.
    pub cor: Vec<f64>,
    pub stderr: Vec<f64>,
    pub phi: String,
    pub psi: String,
    pub samples: usize,
    pub burn_in: usize,
    pub seed: u64,
}

/// Ensemble estimate of `Cor(φ, ψ∘f^n)` for `0 ≤ n ≤ n_max`.
///
/// Samples are split into `batches` contiguous groups; each group is
/// accumulated serially and the groups are merged along a fixed tree, so
/// the result does not depend on the number of threads. The standard error
/// is the spread of the per-batch covariances over `sqrt(batches)`.
pub fn estimate_correlation(
    sys: &System,
    phi: &Observable,
    psi: &Observable,
    cfg: &CorrelationConfig,
) -> Result<CorrelationSeries> {
    if cfg.burn_in == 0 {
        return Err(Error::invalid("burn_in", "must be at least 1"));
    }
    if cfg.batches < 2 || cfg.samples < cfg.batches {
        return Err(Error::invalid(
            "batches",
            format!("need 2 <= batches <= samples, got {}", cfg.batches),
        ));
    }
    let ranges = chunks(cfg.samples, cfg.samples.div_ceil(cfg.batches));
    let per_batch: Vec<Vec<CoMoments>> = map_indexed(ranges.len(), |b| {
        let mut acc = vec![CoMoments::default(); cfg.n_max + 1];
        for i in ranges[b].clone() {
            let x = srb_point(sys, cfg.burn_in, cfg.seed, i);
            let a = phi.eval(&x);
            let mut y = x;
            for (n, slot) in acc.iter_mut().enumerate() {
                if n > 0 {
                    y = sys.step(&y);
                }
                slot.push(a, psi.eval(&y));
            }
        }
        acc
    });
    let mut cov = Vec::with_capacity(cfg.n_max + 1);
    let mut stderr = Vec::with_capacity(cfg.n_max + 1);
    for n in 0..=cfg.n_max {
        let parts: Vec<CoMoments> = per_batch.iter().map(|b| b[n]).collect();
        cov.push(merge_tree(&parts).covariance());
        let batch_cov: Vec<f64> = parts.iter().map(CoMoments::covariance).collect();
        stderr.push(stderr_of_mean(&batch_cov));
    }
    Ok(CorrelationSeries {
        n_grid: (0..=cfg.n_max).collect(),
        cor: cov.iter().map(|c| c.abs()).collect(),
        cov,
        stderr,
        phi: phi.id(),
        psi: psi.id(),
        samples: cfg.samples,
        burn_in: cfg.burn_in,
        seed: cfg.seed,
    })
}

// ---------------------------------------------------------------------------
// Expansion-time tails

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailHistogram {
    /// `1..=horizon`.
    pub n_grid: Vec<usize>,
    /// Fraction of starts with a finite `h ≥ n`.
    pub frac: Vec<f64>,
    /// Binomial standard error of `frac`.
    pub stderr: Vec<f64>,
    /// Fraction of starts with `h` beyond the horizon (not part of `frac`).
    pub censored: f64,
    pub samples: usize,
    pub horizon: usize,
    pub c_u: f64,
}

impl TailHistogram {
    /// `(n, frac[n])` for `n ≥ n_min` with positive mass.
    pub fn positive_points(&self, n_min: usize) -> Vec<(f64, f64)> {
        self.n_grid
            .iter()
            .zip(&self.frac)
            .filter(|(n, f)| **n >= n_min && **f > 0.0)
            .map(|(n, f)| (*n as f64, *f))
            .collect()
    }
}

/// Expansion time of the orbit of `x` on the given horizon.
pub fn expansion_time_of(sys: &System, x: Point, c_u: f64, horizon: usize) -> Result<ExpansionTime> {
    let mut t = ExpansionTracker::new(c_u)?;
    match (sys.base_map(), x.base()) {
        // phi_cu only sees the base coordinate on these systems
        (Some(f), Some(theta)) => {
            let mut th = theta;
            for _ in 0..horizon {
                let (next, phi) = f.step_with_phi(th);
                t.push(phi);
                th = next;
            }
        }
        _ => {
            let mut y = x;
            for _ in 0..horizon {
                t.push(sys.log_norms(&y).phi_cu);
                y = sys.step(&y);
            }
        }
    }
    Ok(t.finish().h)
}

/// Empirical survival function of `h` over `samples` starts drawn
/// uniformly on the cu-disk of `sys` (see [`System::sample_cu_disk`]).
pub fn tail_histogram(
    sys: &System,
    c_u: f64,
    horizon: usize,
    samples: usize,
    seed: u64,
) -> Result<TailHistogram> {
    if let Some(lambda) = sys.analytic_cu_exponent() {
        if c_u >= lambda {
            return Err(Error::invalid(
                "c_u",
                format!("{c_u} is not below the cu exponent {lambda}"),
            ));
        }
    }
    if horizon == 0 || samples == 0 {
        return Err(Error::InsufficientData { needed: 1, got: 0 });
    }
    ExpansionTracker::new(c_u)?;
    // counts[h] for finite h, counts[0] for censored starts
    let ranges = chunks(samples, 4096);
    let parts: Vec<Vec<u64>> = map_indexed(ranges.len(), |b| {
        let mut counts = vec![0u64; horizon + 1];
        for i in ranges[b].clone() {
            let mut rng = crate::rng::stream(seed, i as u64);
            let x = sys.sample_cu_disk(&mut rng);
            match expansion_time_of(sys, x, c_u, horizon).expect("c_u validated") {
                ExpansionTime::Finite(h) => counts[h] += 1,
                ExpansionTime::ExceedsHorizon => counts[0] += 1,
            }
        }
        counts
    });
    let mut counts = vec![0u64; horizon + 1];
    for p in &parts {
        for (c, v) in counts.iter_mut().zip(p) {
            *c += v;
        }
    }
    let m = samples as f64;
    let mut frac = vec![0.0; horizon];
    let mut above = 0u64;
    for n in (1..=horizon).rev() {
        above += counts[n];
        frac[n - 1] = above as f64 / m;
    }
    let stderr = frac.iter().map(|p| (p * (1.0 - p) / m).sqrt()).collect();
    Ok(TailHistogram {
        n_grid: (1..=horizon).collect(),
        frac,
        stderr,
        censored: counts[0] as f64 / m,
        samples,
        horizon,
        c_u,
    })
}

// ---------------------------------------------------------------------------
// Decay fits

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DecayModel {
    Polynomial,
    Exponential,
}

/// `v ≈ C n^{-alpha}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolynomialFit {
    pub alpha: f64,
    pub log_c: f64,
    pub r_squared: f64,
}

/// `v ≈ A e^{-c n^{alpha_stretch}}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StretchedFit {
    pub c: f64,
    pub alpha_stretch: f64,
    pub log_a: f64,
    pub r_squared: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub polynomial: PolynomialFit,
    pub stretched: StretchedFit,
    pub chosen: DecayModel,
    pub points: usize,
}

/// Minimum number of positive points accepted by [`fit_decay`].
pub const MIN_FIT_POINTS: usize = 8;

const STRETCH_GRID_MIN: f64 = 0.25;
const STRETCH_GRID_STEP: f64 = 0.05;

fn stretched_at(ns: &[f64], logv: &[f64], alpha: f64) -> Option<LineFit> {
    let x: Vec<f64> = ns.iter().map(|n| n.powf(alpha)).collect();
    fit_line(&x, logv)
}

/// Fit both decay classes to `(n, value)` pairs and pick the one with the
/// higher `r²` (both measured on `log value`).
///
/// Non-positive values are dropped. The stretch exponent is first scanned
/// over `{0.25, 0.30, …, 1.0}` and then refined by golden-section search in
/// the neighbouring grid cells.
pub fn fit_decay(series: &[(f64, f64)]) -> Result<DecayFit> {
    let pts: Vec<(f64, f64)> = series
        .iter()
        .copied()
        .filter(|(n, v)| *n > 0.0 && *v > 0.0 && v.is_finite())
        .collect();
    if pts.len() < MIN_FIT_POINTS {
        return Err(Error::InsufficientData {
            needed: MIN_FIT_POINTS,
            got: pts.len(),
        });
    }
    let ns: Vec<f64> = pts.iter().map(|p| p.0).collect();
    let logv: Vec<f64> = pts.iter().map(|p| p.1.ln()).collect();
    let logn: Vec<f64> = ns.iter().map(|n| n.ln()).collect();
    let poly = fit_line(&logn, &logv).ok_or(Error::InsufficientData {
        needed: 2,
        got: 1,
    })?;

    let ssr = |a: f64| stretched_at(&ns, &logv, a).map_or(f64::INFINITY, |f| f.ssr);
    let steps = ((1.0 - STRETCH_GRID_MIN) / STRETCH_GRID_STEP).round() as usize;
    let (mut best_a, mut best_ssr) = (1.0, f64::INFINITY);
    for k in 0..=steps {
        let a = STRETCH_GRID_MIN + k as f64 * STRETCH_GRID_STEP;
        let s = ssr(a);
        if s < best_ssr {
            best_a = a;
            best_ssr = s;
        }
    }
    let alpha_s = golden_min(
        &ssr,
        (best_a - STRETCH_GRID_STEP).max(STRETCH_GRID_MIN - STRETCH_GRID_STEP),
        (best_a + STRETCH_GRID_STEP).min(1.0),
    );
    let alpha_s = if ssr(alpha_s) <= best_ssr { alpha_s } else { best_a };
    let sf = stretched_at(&ns, &logv, alpha_s).expect("grid fit succeeded");

    let polynomial = PolynomialFit {
        alpha: -poly.slope,
        log_c: poly.intercept,
        r_squared: poly.r_squared,
    };
    let stretched = StretchedFit {
        c: -sf.slope,
        alpha_stretch: alpha_s,
        log_a: sf.intercept,
        r_squared: sf.r_squared,
    };
    let poly_ok = polynomial.alpha > 0.0;
    let exp_ok = stretched.c > 0.0;
    let chosen = match (poly_ok, exp_ok) {
        (true, true) if stretched.r_squared > polynomial.r_squared => DecayModel::Exponential,
        (true, _) => DecayModel::Polynomial,
        (false, true) => DecayModel::Exponential,
        (false, false) => {
            return Err(Error::PreconditionViolated(
                "series does not decay under either model".into(),
            ))
        }
    };
    Ok(DecayFit {
        polynomial,
        stretched,
        chosen,
        points: pts.len(),
    })
}

fn golden_min<F: Fn(f64) -> f64>(f: &F, mut a: f64, mut b: f64) -> f64 {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..200 {
        if (b - a).abs() < 1e-12 {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// Outcome of fitting an expansion-time tail.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum TailFit {
    /// No mass at `n ≥ 2`: `h ≡ 1`, the uniformly hyperbolic limit.
    Degenerate,
    Fitted(DecayFit),
}

/// Fit the tail over `n ≥ 2` (censored mass is never part of `frac`).
pub fn fit_tail(hist: &TailHistogram) -> Result<TailFit> {
    let pts = hist.positive_points(2);
    if pts.is_empty() {
        return Ok(TailFit::Degenerate);
    }
    Ok(TailFit::Fitted(fit_decay(&pts)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum MixingClass {
    /// `Cor ≲ n^{-exponent}`. A non-positive exponent means the
    /// dictionary predicts no decay.
    Polynomial { exponent: f64 },
    /// `Cor ≲ e^{-c n^stretch}`.
    Exponential { stretch: f64 },
}

/// Tail class to correlation class: `n^{-α}` tails give `n^{-(α-1)}`
/// correlations, (stretched) exponential tails keep their stretch.
pub fn predict_mixing_class(tail: &TailFit) -> MixingClass {
    match tail {
        TailFit::Degenerate => MixingClass::Exponential { stretch: 1.0 },
        TailFit::Fitted(fit) => match fit.chosen {
            DecayModel::Polynomial => MixingClass::Polynomial {
                exponent: fit.polynomial.alpha - 1.0,
            },
            DecayModel::Exponential => MixingClass::Exponential {
                stretch: fit.stretched.alpha_stretch,
            },
        },
    }
}

/// Class of a fitted correlation series, for comparison with the
/// prediction.
pub fn correlation_class(fit: &DecayFit) -> MixingClass {
    match fit.chosen {
        DecayModel::Polynomial => MixingClass::Polynomial {
            exponent: fit.polynomial.alpha,
        },
        DecayModel::Exponential => MixingClass::Exponential {
            stretch: fit.stretched.alpha_stretch,
        },
    }
}

// ---------------------------------------------------------------------------
// Holonomy density

/// Constants of the Hölder bound `|J(y) - J(y')| ≤ C_J d(y, y')^η` and the
/// fiber contraction rate `σ_s`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HolonomyConstants {
    pub c_j: f64,
    pub eta: f64,
    pub sigma_s: f64,
}

impl HolonomyConstants {
    /// Defaults from the system's analytic data: `η = 1`, `C_J` the fiber
    /// Lipschitz constant of `j_cu` (zero without a bump), and
    /// `σ_s = e^{-7 c_s / 8}` with `c_s = log 10` for the plain solenoid and
    /// `log 10 / 2` for the modified one.
    pub fn for_system(sys: &System) -> Result<Self> {
        let ln10 = std::f64::consts::LN_10;
        match sys {
            System::Solenoid(s) => Ok(match &s.bump {
                None => HolonomyConstants {
                    c_j: 0.0,
                    eta: 1.0,
                    sigma_s: (-7.0 * ln10 / 8.0).exp(),
                },
                Some(b) => HolonomyConstants {
                    c_j: b.j_cu_fiber_lipschitz,
                    eta: 1.0,
                    sigma_s: (-7.0 * ln10 / 16.0).exp(),
                },
            }),
            _ => Err(Error::WrongDomain {
                expected: "solid torus",
            }),
        }
    }

    /// `C_J d^η σ_s^{2Nη/3} / (1 - σ_s^{2η/3})`.
    pub fn remainder_bound(&self, d: f64, n: usize) -> f64 {
        if self.c_j == 0.0 || d == 0.0 {
            return 0.0;
        }
        let q = self.sigma_s.powf(2.0 * self.eta / 3.0);
        self.c_j * d.powf(self.eta) * q.powi(n as i32) / (1.0 - q)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HolonomyDensity {
    pub value: f64,
    pub truncation: usize,
    pub remainder_bound: f64,
}

/// Base-coordinate tolerance for two points to count as one stable fiber.
pub const SAME_FIBER_TOL: f64 = 1e-12;

/// `exp Σ_{i<N} (j_cu(f^i Θx) - j_cu(f^i x))` for `x`, `Θx` on one fiber.
pub fn holonomy_density(
    sys: &System,
    x: Point,
    theta_x: Point,
    truncation: usize,
    consts: &HolonomyConstants,
) -> Result<HolonomyDensity> {
    let (Point::Solid(a), Point::Solid(b), System::Solenoid(_)) = (&x, &theta_x, sys) else {
        return Err(Error::WrongDomain {
            expected: "solid torus",
        });
    };
    let gap = circle_distance(a.theta, b.theta);
    if gap > SAME_FIBER_TOL {
        return Err(Error::NotSameFiber { gap });
    }
    let d = (a.z - b.z).norm();
    let (mut p, mut q) = (x, theta_x);
    let mut sum = 0.0;
    for _ in 0..truncation {
        sum += sys.log_norms(&q).j_cu - sys.log_norms(&p).j_cu;
        p = sys.step(&p);
        q = sys.step(&q);
    }
    Ok(HolonomyDensity {
        value: sum.exp(),
        truncation,
        remainder_bound: consts.remainder_bound(d, truncation),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::observables::Axis;
    use crate::systems::{BumpParams, SystemSpec};

    #[test]
    fn sampler_edge_cases() {
        assert!(srb_sampler(&System::CatMap, 1, 0, 1).unwrap().is_empty());
        assert!(srb_sampler(&System::CatMap, 0, 4, 1).is_err());
        let a = srb_sampler(&System::CatMap, 3, 16, 9).unwrap();
        let b = srb_sampler(&System::CatMap, 3, 16, 9).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn constant_observable_has_zero_correlation() {
        let s = SystemSpec::Solenoid { gamma: 0.5 }.build().unwrap();
        let cfg = CorrelationConfig {
            n_max: 5,
            samples: 400,
            burn_in: 10,
            seed: 2,
            batches: 8,
        };
        let c = estimate_correlation(
            &s,
            &Observable::Constant { value: 0.37 },
            &Observable::FiberRe,
            &cfg,
        )
        .unwrap();
        assert!(c.cor.iter().all(|v| *v == 0.0));
        assert!(c.stderr.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn swap_symmetry_at_zero_lag() {
        let f = SystemSpec::IntermittentCircle { gamma: 0.5 }.build().unwrap();
        let cfg = CorrelationConfig {
            n_max: 0,
            samples: 1000,
            burn_in: 5,
            seed: 4,
            batches: 10,
        };
        let a = Observable::cos(Axis::First);
        let b = Observable::sin(Axis::First);
        let ab = estimate_correlation(&f, &a, &b, &cfg).unwrap();
        let ba = estimate_correlation(&f, &b, &a, &cfg).unwrap();
        assert_eq!(ab.cov[0], ba.cov[0]);
    }

    #[test]
    fn fit_recovers_power_law() {
        let pts: Vec<(f64, f64)> = (1..=50).map(|n| (n as f64, (n as f64).powf(-2.0))).collect();
        let f = fit_decay(&pts).unwrap();
        assert_eq!(f.chosen, DecayModel::Polynomial);
        assert!((f.polynomial.alpha - 2.0).abs() < 1e-9);
        assert!((f.polynomial.r_squared - 1.0).abs() < 1e-12);
    }

    #[test]
    fn fit_recovers_exponential() {
        let pts: Vec<(f64, f64)> = (1..=50).map(|n| (n as f64, (-0.3 * n as f64).exp())).collect();
        let f = fit_decay(&pts).unwrap();
        assert_eq!(f.chosen, DecayModel::Exponential);
        assert!((f.stretched.c - 0.3).abs() < 1e-6);
        assert!((f.stretched.alpha_stretch - 1.0).abs() < 1e-6);
        assert!(fit_decay(&pts[..7]).is_err());
    }

    #[test]
    fn dictionary() {
        let poly = DecayFit {
            polynomial: PolynomialFit {
                alpha: 2.0,
                log_c: 0.0,
                r_squared: 1.0,
            },
            stretched: StretchedFit {
                c: 1.0,
                alpha_stretch: 0.5,
                log_a: 0.0,
                r_squared: 0.9,
            },
            chosen: DecayModel::Polynomial,
            points: 10,
        };
        assert_eq!(
            predict_mixing_class(&TailFit::Fitted(poly)),
            MixingClass::Polynomial { exponent: 1.0 }
        );
        let exp = DecayFit {
            chosen: DecayModel::Exponential,
            stretched: StretchedFit {
                alpha_stretch: 1.0,
                ..poly.stretched
            },
            ..poly
        };
        assert_eq!(
            predict_mixing_class(&TailFit::Fitted(exp)),
            MixingClass::Exponential { stretch: 1.0 }
        );
        assert_eq!(
            predict_mixing_class(&TailFit::Degenerate),
            MixingClass::Exponential { stretch: 1.0 }
        );
    }

    #[test]
    fn cat_tail_is_degenerate() {
        let h = tail_histogram(&System::CatMap, 0.96, 50, 200, 1).unwrap();
        assert_eq!(h.frac[0], 1.0);
        assert!(h.frac[1..].iter().all(|f| *f == 0.0));
        assert_eq!(h.censored, 0.0);
        assert_eq!(fit_tail(&h).unwrap(), TailFit::Degenerate);
        assert!(tail_histogram(&System::CatMap, 0.97, 50, 200, 1).is_err());
    }

    #[test]
    fn holonomy_identity_and_errors() {
        let s = SystemSpec::ModifiedSolenoid {
            gamma: 0.5,
            bump: BumpParams::default(),
        }
        .build()
        .unwrap();
        let k = HolonomyConstants::for_system(&s).unwrap();
        let x = Point::solid(0.3, 0.1, 0.2);
        let h = holonomy_density(&s, x, x, 16, &k).unwrap();
        assert_eq!(h.value, 1.0);
        assert_eq!(h.remainder_bound, 0.0);
        let far = Point::solid(0.31, 0.1, 0.2);
        assert!(matches!(
            holonomy_density(&s, x, far, 16, &k),
            Err(Error::NotSameFiber { .. })
        ));
    }
}
