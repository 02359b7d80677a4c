//! Concrete maps with an explicit dominated splitting `E^cs ⊕ E^cu`.
//!
//! Every system exposes its forward map, an inverse where one exists, and
//! the exact split log-norms along its splitting:
//!
//! * `phi_cs = log ‖Df | E^cs‖`
//! * `phi_cu = log ‖(Df | E^cu)^{-1}‖`
//! * `j_cu   = log |det Df | E^cu|`
//!
//! Charts: circle coordinates live in `[0, 1)` and the fiber of the solid
//! torus is the closed unit disk in `ℂ`. Angles enter exponentials as
//! `e^{2πiθ}`.
//!
//! The centre-unstable bundle of the solenoids is measured through its
//! projection onto the base circle. Because the base map does not see the
//! fiber, that projection conjugates `DF | E^cu` to `f'`, so `phi_cu` is
//! `-log f'(θ)` exactly in this adapted norm. For the derived-from-Anosov
//! map the same trick works with the projection along the (invariant)
//! stable eigenline.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Golden-ratio eigenvalues of `[[2,1],[1,1]]`.
pub const CAT_LAMBDA_U: f64 = 2.618_033_988_749_895;
pub const CAT_LAMBDA_S: f64 = 0.381_966_011_250_105_1;

/// Fiber contraction of the unmodified solenoid.
pub const SOLENOID_CONTRACTION: f64 = 0.1;

/// Tolerance for accepting a fiber preimage as lying in the unit disk.
const DISK_SLACK: f64 = 1e-9;

/// Reduce to `[0, 1)`.
#[inline]
pub fn wrap01(x: f64) -> f64 {
    let r = x - x.floor();
    if r >= 1.0 {
        0.0
    } else {
        r
    }
}

/// Signed representative of `x` in `[-1/2, 1/2)`.
#[inline]
pub fn centered(x: f64) -> f64 {
    let r = wrap01(x + 0.5) - 0.5;
    if r < -0.5 {
        r + 1.0
    } else {
        r
    }
}

/// Distance on the unit circle `ℝ/ℤ`.
#[inline]
pub fn circle_distance(a: f64, b: f64) -> f64 {
    centered(a - b).abs()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointS1 {
    pub x: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointT2 {
    pub x1: f64,
    pub x2: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointSolid {
    pub theta: f64,
    pub z: Complex64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Point {
    Circle(PointS1),
    Torus(PointT2),
    Solid(PointSolid),
}

impl Point {
    pub fn circle(x: f64) -> Self {
        Point::Circle(PointS1 { x: wrap01(x) })
    }

    pub fn torus(x1: f64, x2: f64) -> Self {
        Point::Torus(PointT2 {
            x1: wrap01(x1),
            x2: wrap01(x2),
        })
    }

    pub fn solid(theta: f64, re: f64, im: f64) -> Self {
        Point::Solid(PointSolid {
            theta: wrap01(theta),
            z: Complex64::new(re, im),
        })
    }

    /// Base (circle) coordinate for the circle and solid-torus charts.
    pub fn base(&self) -> Option<f64> {
        match self {
            Point::Circle(p) => Some(p.x),
            Point::Solid(p) => Some(p.theta),
            Point::Torus(_) => None,
        }
    }

    /// Chart coordinates, flattened (`x`, `(x1, x2)` or `(θ, Re z, Im z)`).
    pub fn coords(&self) -> Vec<f64> {
        match self {
            Point::Circle(p) => vec![p.x],
            Point::Torus(p) => vec![p.x1, p.x2],
            Point::Solid(p) => vec![p.theta, p.z.re, p.z.im],
        }
    }

    pub fn is_finite(&self) -> bool {
        self.coords().iter().all(|c| c.is_finite())
    }
}

/// Per-point split log-norms, in nats per iterate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitLogNorms {
    pub phi_cs: f64,
    pub phi_cu: f64,
    pub j_cu: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SystemKind {
    CatMap,
    DerivedAnosovT2,
    IntermittentCircle,
    Solenoid,
    ModifiedSolenoid,
}

impl SystemKind {
    pub fn name(self) -> &'static str {
        match self {
            SystemKind::CatMap => "cat-map",
            SystemKind::DerivedAnosovT2 => "derived-anosov-t2",
            SystemKind::IntermittentCircle => "intermittent-circle",
            SystemKind::Solenoid => "solenoid",
            SystemKind::ModifiedSolenoid => "modified-solenoid",
        }
    }
}

/// Parameters of the neutralising bump of the modified solenoid.
///
/// The bump is centred on the period-two orbit `(θ₀, z₀), (θ₁, z₁)` of the
/// unmodified map; the centres are computed, not configured.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BumpParams {
    /// Support radius of the base mollifier around each `θ_i`.
    pub theta_radius: f64,
    /// Fiber length scale of the tanh profile around each `z_i`.
    pub z_scale: f64,
    /// Fraction of the gap `1 - 1/10` that is filled at the centre;
    /// `1.0` makes the period-two fiber derivative exactly neutral.
    pub depth: f64,
}

impl Default for BumpParams {
    fn default() -> Self {
        BumpParams {
            theta_radius: 0.02,
            z_scale: 0.05,
            depth: 1.0,
        }
    }
}

/// Serializable description of a system, validated by [`SystemSpec::build`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SystemSpec {
    CatMap,
    DerivedAnosovT2 { width: f64, center_factor: f64 },
    IntermittentCircle { gamma: f64 },
    Solenoid { gamma: f64 },
    ModifiedSolenoid { gamma: f64, bump: BumpParams },
}

impl SystemSpec {
    pub fn kind(&self) -> SystemKind {
        match self {
            SystemSpec::CatMap => SystemKind::CatMap,
            SystemSpec::DerivedAnosovT2 { .. } => SystemKind::DerivedAnosovT2,
            SystemSpec::IntermittentCircle { .. } => SystemKind::IntermittentCircle,
            SystemSpec::Solenoid { .. } => SystemKind::Solenoid,
            SystemSpec::ModifiedSolenoid { .. } => SystemKind::ModifiedSolenoid,
        }
    }

    pub fn gamma(&self) -> Option<f64> {
        match *self {
            SystemSpec::IntermittentCircle { gamma }
            | SystemSpec::Solenoid { gamma }
            | SystemSpec::ModifiedSolenoid { gamma, .. } => Some(gamma),
            _ => None,
        }
    }

    pub fn invertible(&self) -> bool {
        !matches!(self, SystemSpec::IntermittentCircle { .. })
    }

    pub fn build(&self) -> Result<System> {
        Ok(match *self {
            SystemSpec::CatMap => System::CatMap,
            SystemSpec::DerivedAnosovT2 {
                width,
                center_factor,
            } => System::DerivedAnosov(DerivedAnosov::new(width, center_factor)?),
            SystemSpec::IntermittentCircle { gamma } => {
                System::Intermittent(IntermittentMap::new(gamma)?)
            }
            SystemSpec::Solenoid { gamma } => System::Solenoid(Solenoid {
                base: IntermittentMap::new(gamma)?,
                bump: None,
            }),
            SystemSpec::ModifiedSolenoid { gamma, bump } => {
                let base = IntermittentMap::new(gamma)?;
                let bump = NeutralBump::new(&base, bump)?;
                let s = Solenoid {
                    base,
                    bump: Some(bump),
                };
                s.check_injective()?;
                System::Solenoid(s)
            }
        })
    }
}

// ---------------------------------------------------------------------------
// Intermittent circle map

/// Degree-two circle map with a neutral fixed point at 0:
/// `x (1 + 2^γ x^γ)` on `[0, ½)` and `2x - 1` on `[½, 1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntermittentMap {
    gamma: f64,
    scale: f64,
}

impl IntermittentMap {
    pub fn new(gamma: f64) -> Result<Self> {
        if !(gamma > 0.0 && gamma < 1.0) {
            return Err(Error::invalid("gamma", format!("{gamma} not in (0, 1)")));
        }
        Ok(IntermittentMap {
            gamma,
            scale: 2f64.powf(gamma),
        })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    #[inline]
    fn pow_gamma(&self, x: f64) -> f64 {
        if self.gamma == 0.5 {
            x.sqrt()
        } else {
            x.powf(self.gamma)
        }
    }

    #[inline]
    pub fn apply(&self, x: f64) -> f64 {
        if x < 0.5 {
            wrap01(x * (1.0 + self.scale * self.pow_gamma(x)))
        } else {
            wrap01(2.0 * x - 1.0)
        }
    }

    #[inline]
    pub fn derivative(&self, x: f64) -> f64 {
        if x < 0.5 {
            1.0 + (1.0 + self.gamma) * self.scale * self.pow_gamma(x)
        } else {
            2.0
        }
    }

    /// Map and `-log f'` in one call (the hot loop of the tail estimator).
    #[inline]
    pub fn step_with_phi(&self, x: f64) -> (f64, f64) {
        if x < 0.5 {
            let p = self.pow_gamma(x);
            let next = wrap01(x * (1.0 + self.scale * p));
            (next, -(1.0 + (1.0 + self.gamma) * self.scale * p).ln())
        } else {
            (wrap01(2.0 * x - 1.0), -std::f64::consts::LN_2)
        }
    }

    /// `sup log f'`, attained as `x → ½⁻`.
    pub fn max_log_derivative(&self) -> f64 {
        (2.0 + self.gamma).ln()
    }

    /// Preimage of `y` on the left branch `[0, ½)`.
    pub fn inverse_left(&self, y: f64) -> f64 {
        // f is increasing on [0, 1/2) with f(x) ∈ [x, 2x].
        let (mut lo, mut hi) = (y / 2.0, y.min(0.5));
        let mut x = 0.5 * (lo + hi);
        for _ in 0..200 {
            let fx = x * (1.0 + self.scale * self.pow_gamma(x)) - y;
            if fx == 0.0 {
                break;
            }
            if fx > 0.0 {
                hi = x;
            } else {
                lo = x;
            }
            let d = self.derivative(x);
            let newton = x - fx / d;
            x = if newton > lo && newton < hi {
                newton
            } else {
                0.5 * (lo + hi)
            };
            if hi - lo <= f64::EPSILON * hi.max(1e-300) {
                break;
            }
        }
        x
    }

    pub fn inverse_right(&self, y: f64) -> f64 {
        (y + 1.0) * 0.5
    }

    /// The period-two orbit `θ₀ ∈ (0, ½)`, `θ₁ = f(θ₀) ∈ (½, 1)`.
    pub fn period_two_orbit(&self) -> (f64, f64) {
        let g = |x: f64| x * (1.0 + self.scale * self.pow_gamma(x)) - 0.5 * (x + 1.0);
        let (mut lo, mut hi) = (0.0, 0.5);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if g(mid) > 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        let t0 = 0.5 * (lo + hi);
        (t0, 0.5 * (t0 + 1.0))
    }
}

// ---------------------------------------------------------------------------
// Solenoid with an optional neutralising bump

/// Smooth radial mollifier `exp(1 - 1/(1 - u²))` on `|u| < 1`, normalised to
/// 1 at the origin. Returns the value and its derivative in `u`.
fn mollifier(u: f64) -> (f64, f64) {
    let a = u.abs();
    if a >= 1.0 {
        return (0.0, 0.0);
    }
    let q = 1.0 - u * u;
    let v = (1.0 - 1.0 / q).exp();
    (v, -2.0 * u / (q * q) * v)
}

/// Bump data resolved against a concrete base map.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NeutralBump {
    pub params: BumpParams,
    pub centers: [(f64, Complex64); 2],
    amplitude: f64,
    /// Lipschitz bound of `j_cu` along the fiber.
    pub j_cu_fiber_lipschitz: f64,
}

impl NeutralBump {
    fn new(base: &IntermittentMap, params: BumpParams) -> Result<Self> {
        if !(params.depth > 0.0 && params.depth <= 1.0) {
            return Err(Error::invalid("bump.depth", "must lie in (0, 1]"));
        }
        if !(params.z_scale > 0.0 && params.z_scale <= 0.3) {
            return Err(Error::invalid("bump.z_scale", "must lie in (0, 0.3]"));
        }
        let (t0, t1) = base.period_two_orbit();
        if !(params.theta_radius > 0.0 && params.theta_radius < 0.5 * circle_distance(t0, t1)) {
            return Err(Error::invalid(
                "bump.theta_radius",
                "supports around the period-two orbit must be disjoint",
            ));
        }
        let e = |t: f64| Complex64::from_polar(0.5, TAU * t);
        // z0 = e(θ1) + (e(θ0) + z0/10)/10
        let z0 = (e(t1) + e(t0) * SOLENOID_CONTRACTION) / (1.0 - 0.01);
        let z1 = e(t0) + z0 * SOLENOID_CONTRACTION;
        let amplitude = params.depth * (1.0 - SOLENOID_CONTRACTION);
        // max |dβ/dθ| by scanning the mollifier profile
        let max_dbeta = (1..2000)
            .map(|i| mollifier(i as f64 / 2000.0).1.abs())
            .fold(0.0, f64::max)
            / params.theta_radius;
        // |∂_r j_cu| ≤ |∂θ p| |∂_r ∂θ p| / f'^2 with f' ≥ 1
        let shear = amplitude * params.z_scale * max_dbeta;
        let j_cu_fiber_lipschitz = shear * amplitude * max_dbeta;
        Ok(NeutralBump {
            params,
            centers: [(t0, z0), (t1, z1)],
            amplitude,
            j_cu_fiber_lipschitz,
        })
    }

    /// `(β, dβ/dθ, z_i)` of the bump component active at `theta`.
    #[inline]
    fn profile(&self, theta: f64) -> Option<(f64, f64, Complex64)> {
        let rho = self.params.theta_radius;
        for &(t, z) in &self.centers {
            let signed = centered(theta - t);
            if signed.abs() < rho {
                let (b, db) = mollifier(signed / rho);
                return Some((b, db / rho, z));
            }
        }
        None
    }

    /// Fiber displacement `a β R tanh(|w|/R) w/|w|` with `w = z - z_i`.
    #[inline]
    fn displacement(&self, beta: f64, w: Complex64) -> Complex64 {
        let r = w.norm();
        if r == 0.0 || beta == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        let big_r = self.params.z_scale;
        w * (self.amplitude * beta * big_r * (r / big_r).tanh() / r)
    }
}

#[inline]
fn tanh_over(u: f64) -> f64 {
    if u < 1e-4 {
        1.0 - u * u / 3.0
    } else {
        u.tanh() / u
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Solenoid {
    pub base: IntermittentMap,
    pub bump: Option<NeutralBump>,
}

impl Solenoid {
    #[inline]
    fn fiber_image(&self, theta: f64, z: Complex64) -> Complex64 {
        let mut out = Complex64::from_polar(0.5, TAU * theta) + z * SOLENOID_CONTRACTION;
        if let Some(bump) = &self.bump {
            if let Some((beta, _, zc)) = bump.profile(theta) {
                out += bump.displacement(beta, z - zc);
            }
        }
        out
    }

    /// Fiber preimage of `z_img` over base point `theta`.
    fn fiber_preimage(&self, theta: f64, z_img: Complex64) -> Complex64 {
        let v = z_img - Complex64::from_polar(0.5, TAU * theta);
        let Some(bump) = &self.bump else {
            return v / SOLENOID_CONTRACTION;
        };
        let Some((beta, _, zc)) = bump.profile(theta) else {
            return v / SOLENOID_CONTRACTION;
        };
        // v - z_c/10 = w/10 + aβR tanh(|w|/R) ŵ ; radial part is monotone.
        let v = v - zc * SOLENOID_CONTRACTION;
        let target = v.norm();
        if target == 0.0 {
            return zc;
        }
        let big_r = bump.params.z_scale;
        let k = bump.amplitude * beta;
        let radial = |r: f64| SOLENOID_CONTRACTION * r + k * big_r * (r / big_r).tanh();
        let (mut lo, mut hi) = (target / (SOLENOID_CONTRACTION + k), target / SOLENOID_CONTRACTION);
        let mut r = 0.5 * (lo + hi);
        for _ in 0..200 {
            let g = radial(r) - target;
            if g == 0.0 {
                break;
            }
            if g > 0.0 {
                hi = r;
            } else {
                lo = r;
            }
            let sech = 1.0 / (r / big_r).cosh();
            let d = SOLENOID_CONTRACTION + k * sech * sech;
            let newton = r - g / d;
            r = if newton > lo && newton < hi {
                newton
            } else {
                0.5 * (lo + hi)
            };
            if hi - lo <= 4.0 * f64::EPSILON * hi {
                break;
            }
        }
        zc + v * (r / target)
    }

    fn log_norms(&self, theta: f64, z: Complex64) -> SplitLogNorms {
        let d = self.base.derivative(theta);
        let phi_cu = -d.ln();
        let Some(bump) = &self.bump else {
            return SplitLogNorms {
                phi_cs: SOLENOID_CONTRACTION.ln(),
                phi_cu,
                j_cu: d.ln(),
            };
        };
        match bump.profile(theta) {
            None => SplitLogNorms {
                phi_cs: SOLENOID_CONTRACTION.ln(),
                phi_cu,
                j_cu: d.ln(),
            },
            Some((beta, dbeta, zc)) => {
                let big_r = bump.params.z_scale;
                let r = (z - zc).norm();
                let u = r / big_r;
                // conformal part of the fiber derivative dominates the radial one
                let stretch = SOLENOID_CONTRACTION + bump.amplitude * beta * tanh_over(u);
                let shear = bump.amplitude * dbeta.abs() * big_r * u.tanh();
                SplitLogNorms {
                    phi_cs: stretch.ln(),
                    phi_cu,
                    j_cu: 0.5 * (d * d + shear * shear).ln(),
                }
            }
        }
    }

    fn check_injective(&self) -> Result<()> {
        let mut rng = crate::rng::stream(0x5eed_b0b5, 0);
        let probe = |p: Point| -> Result<()> {
            let q = System::Solenoid(*self).step(&p);
            let back = System::Solenoid(*self).step_inverse(&q).map_err(|_| {
                Error::invalid("bump", "modified fiber map is not injective on the sample")
            })?;
            if System::Solenoid(*self).distance(&back, &p) > 1e-9 {
                return Err(Error::invalid(
                    "bump",
                    "modified fiber map is not injective on the sample",
                ));
            }
            Ok(())
        };
        for _ in 0..2000 {
            let p = System::Solenoid(*self).sample_uniform(&mut rng);
            probe(p)?;
        }
        let bump = self.bump.expect("modified solenoid");
        for &(t, z) in &bump.centers {
            for _ in 0..500 {
                let dt = (rng.gen::<f64>() - 0.5) * 2.0 * bump.params.theta_radius;
                let dz = Complex64::from_polar(
                    rng.gen::<f64>() * 3.0 * bump.params.z_scale,
                    TAU * rng.gen::<f64>(),
                );
                let zz = z + dz;
                if zz.norm() <= 1.0 {
                    probe(Point::Solid(PointSolid {
                        theta: wrap01(t + dt),
                        z: zz,
                    }))?;
                }
            }
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Derived-from-Anosov map on T²

/// Cat map with the contraction along the stable eigenline weakened near
/// the fixed point `0`: in eigen-coordinates `(u, s)` of the minimal-image
/// displacement, `s ↦ s (λ_s + (μ - λ_s) exp(-r²/2w²))` and `u ↦ λ_u u`.
///
/// With `μ > 1` the fixed point becomes a source and Lebesgue-almost every
/// orbit is attracted to the complementary hyperbolic attractor. The
/// Gaussian profile is below `1e-21` at the cut locus for the admissible
/// widths, so the map is continuous on the torus to machine precision.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivedAnosov {
    pub width: f64,
    pub center_factor: f64,
    e_u: [f64; 2],
    e_s: [f64; 2],
    min_stable_jacobian: f64,
}

impl DerivedAnosov {
    pub const MAX_WIDTH: f64 = 0.055;

    pub fn new(width: f64, center_factor: f64) -> Result<Self> {
        if !(width > 0.0 && width <= Self::MAX_WIDTH) {
            return Err(Error::invalid(
                "width",
                format!("{width} not in (0, {}]", Self::MAX_WIDTH),
            ));
        }
        if !(center_factor > 0.0 && center_factor < CAT_LAMBDA_U) {
            return Err(Error::invalid("center_factor", "must lie in (0, λ_u)"));
        }
        let g = CAT_LAMBDA_U - 2.0;
        let n = (1.0 + g * g).sqrt();
        let mut da = DerivedAnosov {
            width,
            center_factor,
            e_u: [1.0 / n, g / n],
            e_s: [-g / n, 1.0 / n],
            min_stable_jacobian: 0.0,
        };
        // stable Jacobian λ_s + (μ-λ_s) β (1 - s²/w²), sampled on a fine grid
        let mut min_j = f64::INFINITY;
        for i in 0..=400 {
            for k in 0..=400 {
                let u = (i as f64 / 400.0) * 6.0 * width;
                let s = (k as f64 / 400.0) * 6.0 * width;
                min_j = min_j.min(da.stable_jacobian(u, s));
            }
        }
        if min_j <= 1e-3 {
            return Err(Error::invalid(
                "center_factor",
                format!("stable Jacobian reaches {min_j:.3e}; map would fold"),
            ));
        }
        da.min_stable_jacobian = min_j;
        Ok(da)
    }

    fn stable_jacobian(&self, u: f64, s: f64) -> f64 {
        let w2 = self.width * self.width;
        let beta = (-(u * u + s * s) / (2.0 * w2)).exp();
        CAT_LAMBDA_S + (self.center_factor - CAT_LAMBDA_S) * beta * (1.0 - s * s / w2)
    }

    fn eigen_coords(&self, p: &PointT2) -> (f64, f64) {
        let d = [centered(p.x1), centered(p.x2)];
        (
            d[0] * self.e_u[0] + d[1] * self.e_u[1],
            d[0] * self.e_s[0] + d[1] * self.e_s[1],
        )
    }

    fn step(&self, p: &PointT2) -> PointT2 {
        let (u, s) = self.eigen_coords(p);
        let beta = (-(u * u + s * s) / (2.0 * self.width * self.width)).exp();
        let push = (self.center_factor - CAT_LAMBDA_S) * beta * s;
        PointT2 {
            x1: wrap01(2.0 * p.x1 + p.x2 + push * self.e_s[0]),
            x2: wrap01(p.x1 + p.x2 + push * self.e_s[1]),
        }
    }

    fn step_inverse(&self, p: &PointT2) -> PointT2 {
        let x0 = PointT2 {
            x1: wrap01(p.x1 - p.x2),
            x2: wrap01(-p.x1 + 2.0 * p.x2),
        };
        let (u0, s0) = self.eigen_coords(&x0);
        let w2 = self.width * self.width;
        if u0 * u0 + s0 * s0 > 200.0 * w2 {
            return x0;
        }
        // solve σ κ(u0, σ) = λ_s s0, monotone in σ
        let target = CAT_LAMBDA_S * s0;
        let image = |sig: f64| {
            let beta = (-(u0 * u0 + sig * sig) / (2.0 * w2)).exp();
            sig * (CAT_LAMBDA_S + (self.center_factor - CAT_LAMBDA_S) * beta)
        };
        let a = target / self.center_factor;
        let (mut lo, mut hi) = if a < s0 { (a, s0) } else { (s0, a) };
        let mut sig = 0.5 * (lo + hi);
        for _ in 0..200 {
            let g = image(sig) - target;
            if g == 0.0 {
                break;
            }
            if g > 0.0 {
                hi = sig;
            } else {
                lo = sig;
            }
            let newton = sig - g / self.stable_jacobian(u0, sig);
            sig = if newton > lo && newton < hi {
                newton
            } else {
                0.5 * (lo + hi)
            };
            if hi - lo <= 4.0 * f64::EPSILON * hi.abs().max(1e-300) {
                break;
            }
        }
        let t = sig - s0;
        PointT2 {
            x1: wrap01(x0.x1 + t * self.e_s[0]),
            x2: wrap01(x0.x2 + t * self.e_s[1]),
        }
    }

    fn log_norms(&self, p: &PointT2) -> SplitLogNorms {
        let (u, s) = self.eigen_coords(p);
        SplitLogNorms {
            phi_cs: self.stable_jacobian(u, s).ln(),
            phi_cu: -CAT_LAMBDA_U.ln(),
            j_cu: CAT_LAMBDA_U.ln(),
        }
    }
}

// ---------------------------------------------------------------------------
// Dispatch

/// A validated system, ready to iterate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum System {
    CatMap,
    DerivedAnosov(DerivedAnosov),
    Intermittent(IntermittentMap),
    Solenoid(Solenoid),
}

fn domain_panic(expected: &'static str) -> ! {
    panic!("point does not belong to the {expected} domain")
}

impl System {
    pub fn kind(&self) -> SystemKind {
        match self {
            System::CatMap => SystemKind::CatMap,
            System::DerivedAnosov(_) => SystemKind::DerivedAnosovT2,
            System::Intermittent(_) => SystemKind::IntermittentCircle,
            System::Solenoid(s) if s.bump.is_some() => SystemKind::ModifiedSolenoid,
            System::Solenoid(_) => SystemKind::Solenoid,
        }
    }

    pub fn is_invertible(&self) -> bool {
        !matches!(self, System::Intermittent(_))
    }

    /// The spec this system was built from.
    pub fn spec(&self) -> SystemSpec {
        match self {
            System::CatMap => SystemSpec::CatMap,
            System::DerivedAnosov(da) => SystemSpec::DerivedAnosovT2 {
                width: da.width,
                center_factor: da.center_factor,
            },
            System::Intermittent(f) => SystemSpec::IntermittentCircle { gamma: f.gamma },
            System::Solenoid(s) => match &s.bump {
                None => SystemSpec::Solenoid {
                    gamma: s.base.gamma,
                },
                Some(b) => SystemSpec::ModifiedSolenoid {
                    gamma: s.base.gamma,
                    bump: b.params,
                },
            },
        }
    }

    pub fn domain_name(&self) -> &'static str {
        match self {
            System::CatMap | System::DerivedAnosov(_) => "torus",
            System::Intermittent(_) => "circle",
            System::Solenoid(_) => "solid torus",
        }
    }

    pub fn contains(&self, p: &Point) -> bool {
        let unit = |x: f64| (0.0..1.0).contains(&x);
        match (self, p) {
            (System::CatMap | System::DerivedAnosov(_), Point::Torus(q)) => unit(q.x1) && unit(q.x2),
            (System::Intermittent(_), Point::Circle(q)) => unit(q.x),
            (System::Solenoid(_), Point::Solid(q)) => unit(q.theta) && q.z.norm() <= 1.0 + DISK_SLACK,
            _ => false,
        }
    }

    /// One forward iterate.
    ///
    /// # Panics
    /// If `p` is not a point of this system's chart.
    pub fn step(&self, p: &Point) -> Point {
        match (self, p) {
            (System::CatMap, Point::Torus(q)) => Point::Torus(PointT2 {
                x1: wrap01(2.0 * q.x1 + q.x2),
                x2: wrap01(q.x1 + q.x2),
            }),
            (System::DerivedAnosov(da), Point::Torus(q)) => Point::Torus(da.step(q)),
            (System::Intermittent(f), Point::Circle(q)) => Point::Circle(PointS1 { x: f.apply(q.x) }),
            (System::Solenoid(s), Point::Solid(q)) => Point::Solid(PointSolid {
                theta: s.base.apply(q.theta),
                z: s.fiber_image(q.theta, q.z),
            }),
            _ => domain_panic(self.domain_name()),
        }
    }

    /// One backward iterate, for points in the image of the map.
    pub fn step_inverse(&self, p: &Point) -> Result<Point> {
        match (self, p) {
            (System::CatMap, Point::Torus(q)) => Ok(Point::Torus(PointT2 {
                x1: wrap01(q.x1 - q.x2),
                x2: wrap01(-q.x1 + 2.0 * q.x2),
            })),
            (System::DerivedAnosov(da), Point::Torus(q)) => Ok(Point::Torus(da.step_inverse(q))),
            (System::Intermittent(_), Point::Circle(_)) => Err(Error::NotInvertible(
                "degree-two circle map has two preimages and no branch hint".into(),
            )),
            (System::Solenoid(s), Point::Solid(q)) => {
                let candidates = [s.base.inverse_left(q.theta), s.base.inverse_right(q.theta)];
                let mut found = None;
                let mut count = 0;
                for theta in candidates {
                    let theta = wrap01(theta);
                    let z = s.fiber_preimage(theta, q.z);
                    if z.norm() <= 1.0 + DISK_SLACK {
                        count += 1;
                        found = Some(Point::Solid(PointSolid { theta, z }));
                    }
                }
                match (count, found) {
                    (1, Some(p)) => Ok(p),
                    _ => Err(Error::BranchAmbiguous { candidates: count }),
                }
            }
            _ => Err(Error::WrongDomain {
                expected: self.domain_name(),
            }),
        }
    }

    /// Split log-norms at `p`.
    ///
    /// The circle map has no centre-stable bundle; its `phi_cs` is reported
    /// as `0` (the log-norm of the identity on the zero space).
    pub fn log_norms(&self, p: &Point) -> SplitLogNorms {
        match (self, p) {
            (System::CatMap, Point::Torus(_)) => SplitLogNorms {
                phi_cs: CAT_LAMBDA_S.ln(),
                phi_cu: -CAT_LAMBDA_U.ln(),
                j_cu: CAT_LAMBDA_U.ln(),
            },
            (System::DerivedAnosov(da), Point::Torus(q)) => da.log_norms(q),
            (System::Intermittent(f), Point::Circle(q)) => {
                let d = f.derivative(q.x).ln();
                SplitLogNorms {
                    phi_cs: 0.0,
                    phi_cu: -d,
                    j_cu: d,
                }
            }
            (System::Solenoid(s), Point::Solid(q)) => s.log_norms(q.theta, q.z),
            _ => domain_panic(self.domain_name()),
        }
    }

    /// `S_n phi_cs(p) + S_n phi_cu(p)`: the log of the domination product
    /// `‖Df^n|E^cs‖ · ‖(Df^n|E^cu)^{-1}‖` along the orbit of `p`.
    pub fn domination_margin(&self, p: &Point, n: usize) -> f64 {
        let mut x = *p;
        let mut terms = Vec::with_capacity(n);
        for _ in 0..n {
            let l = self.log_norms(&x);
            terms.push(l.phi_cs + l.phi_cu);
            x = self.step(&x);
        }
        crate::stats::pairwise_sum(&terms)
    }

    /// Lebesgue-uniform point of the full domain.
    pub fn sample_uniform<R: Rng + ?Sized>(&self, rng: &mut R) -> Point {
        match self {
            System::CatMap | System::DerivedAnosov(_) => Point::Torus(PointT2 {
                x1: rng.gen(),
                x2: rng.gen(),
            }),
            System::Intermittent(_) => Point::Circle(PointS1 { x: rng.gen() }),
            System::Solenoid(_) => {
                let theta: f64 = rng.gen();
                let r = rng.gen::<f64>().sqrt();
                let a: f64 = rng.gen();
                Point::Solid(PointSolid {
                    theta,
                    z: Complex64::from_polar(r, TAU * a),
                })
            }
        }
    }

    /// Lebesgue-uniform point of the centre-unstable disk used for
    /// expansion-time statistics: the base circle (fiber coordinate 0) for
    /// the solenoids, the whole space otherwise.
    pub fn sample_cu_disk<R: Rng + ?Sized>(&self, rng: &mut R) -> Point {
        match self {
            System::Solenoid(_) => Point::Solid(PointSolid {
                theta: rng.gen(),
                z: Complex64::new(0.0, 0.0),
            }),
            _ => self.sample_uniform(rng),
        }
    }

    /// Chart distance (flat metric, periodic in circle coordinates).
    pub fn distance(&self, a: &Point, b: &Point) -> f64 {
        match (a, b) {
            (Point::Circle(p), Point::Circle(q)) => circle_distance(p.x, q.x),
            (Point::Torus(p), Point::Torus(q)) => {
                circle_distance(p.x1, q.x1).hypot(circle_distance(p.x2, q.x2))
            }
            (Point::Solid(p), Point::Solid(q)) => {
                circle_distance(p.theta, q.theta).hypot((p.z - q.z).norm())
            }
            _ => f64::INFINITY,
        }
    }

    /// Closed-form centre-unstable exponent, when one exists.
    pub fn analytic_cu_exponent(&self) -> Option<f64> {
        match self {
            System::CatMap | System::DerivedAnosov(_) => Some(CAT_LAMBDA_U.ln()),
            _ => None,
        }
    }

    /// `sup(-phi_cu)` over the domain.
    pub fn phibar_cu(&self) -> f64 {
        match self {
            System::CatMap | System::DerivedAnosov(_) => CAT_LAMBDA_U.ln(),
            System::Intermittent(f) => f.max_log_derivative(),
            System::Solenoid(s) => s.base.max_log_derivative(),
        }
    }

    /// `sup(-phi_cs)` over the domain (`None` without a cs bundle).
    pub fn phibar_cs(&self) -> Option<f64> {
        match self {
            System::CatMap => Some(-CAT_LAMBDA_S.ln()),
            System::DerivedAnosov(da) => Some(-da.min_stable_jacobian.ln()),
            System::Intermittent(_) => None,
            System::Solenoid(_) => Some(-SOLENOID_CONTRACTION.ln()),
        }
    }

    /// Base map of the circle-based systems.
    pub fn base_map(&self) -> Option<&IntermittentMap> {
        match self {
            System::Intermittent(f) => Some(f),
            System::Solenoid(s) => Some(&s.base),
            _ => None,
        }
    }

    pub fn bump(&self) -> Option<&NeutralBump> {
        match self {
            System::Solenoid(s) => s.bump.as_ref(),
            _ => None,
        }
    }
}

/// `e^{2πiθ}/2`: the fiber translation of the solenoid.
pub fn fiber_center(theta: f64) -> Complex64 {
    Complex64::from_polar(0.5, 2.0 * PI * theta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn solenoid() -> System {
        SystemSpec::Solenoid { gamma: 0.5 }.build().unwrap()
    }

    fn modified() -> System {
        SystemSpec::ModifiedSolenoid {
            gamma: 0.5,
            bump: BumpParams::default(),
        }
        .build()
        .unwrap()
    }

    fn da() -> System {
        SystemSpec::DerivedAnosovT2 {
            width: 0.05,
            center_factor: 1.1,
        }
        .build()
        .unwrap()
    }

    fn close(a: &Point, b: &Point, tol: f64) -> bool {
        a.coords().iter().zip(b.coords()).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn cat_map_examples() {
        let cat = System::CatMap;
        assert_eq!(cat.step(&Point::torus(0.0, 0.0)), Point::torus(0.0, 0.0));
        assert!(close(&cat.step(&Point::torus(0.1, 0.2)), &Point::torus(0.4, 0.3), 1e-15));
        let back = cat.step_inverse(&Point::torus(0.4, 0.3)).unwrap();
        assert!(close(&back, &Point::torus(0.1, 0.2), 1e-15));
        assert_eq!(cat.step_inverse(&Point::torus(0.0, 0.0)).unwrap(), Point::torus(0.0, 0.0));
    }

    #[test]
    fn solenoid_examples() {
        let s = solenoid();
        let p = s.step(&Point::solid(0.0, 0.0, 0.0));
        assert!(close(&p, &Point::solid(0.0, 0.5, 0.0), 1e-15));
        let back = s.step_inverse(&Point::solid(0.0, 0.5, 0.0)).unwrap();
        assert!(close(&back, &Point::solid(0.0, 0.0, 0.0), 1e-12));
        let l = s.log_norms(&Point::solid(0.3, 0.1, 0.2));
        assert!((l.phi_cs + 2.302585093).abs() < 1e-9);
    }

    #[test]
    fn intermittent_examples() {
        let f = IntermittentMap::new(0.5).unwrap();
        assert_eq!(f.apply(0.0), 0.0);
        assert_eq!(f.apply(0.5), 0.0);
        assert_eq!(f.derivative(0.0), 1.0);
        let sys = SystemSpec::IntermittentCircle { gamma: 0.5 }.build().unwrap();
        assert_eq!(sys.log_norms(&Point::circle(0.0)).phi_cu, 0.0);
        assert!(matches!(
            sys.step_inverse(&Point::circle(0.3)),
            Err(Error::NotInvertible(_))
        ));
    }

    #[test]
    fn cat_log_norms_and_margin() {
        let l = System::CatMap.log_norms(&Point::torus(0.3, 0.7));
        assert!((l.phi_cu + 0.962_423_650_1).abs() < 1e-10);
        assert!((l.phi_cs - ((3.0 - 5f64.sqrt()) / 2.0).ln()).abs() < 1e-15);
        let m = System::CatMap.domination_margin(&Point::torus(0.3, 0.7), 1);
        assert!((m + 1.924_847_3).abs() < 1e-7);
        assert_eq!(System::CatMap.domination_margin(&Point::torus(0.3, 0.7), 0), 0.0);
    }

    #[test]
    fn solenoid_margin_negative_away_from_zero() {
        let s = solenoid();
        let m = s.domination_margin(&Point::solid(0.3, 0.0, 0.0), 1);
        assert!(m <= -10f64.ln() + 1e-15);
    }

    #[test]
    fn gamma_out_of_range_rejected() {
        for g in [0.0, 1.0, -0.2, 1.5, f64::NAN] {
            assert!(IntermittentMap::new(g).is_err());
        }
    }

    #[test]
    fn period_two_orbit_is_periodic() {
        let f = IntermittentMap::new(0.5).unwrap();
        let (t0, t1) = f.period_two_orbit();
        assert!((f.apply(t0) - t1).abs() < 1e-12);
        assert!((f.apply(t1) - t0).abs() < 1e-12);
    }

    #[test]
    fn modified_solenoid_is_neutral_on_the_period_two_orbit() {
        let s = modified();
        let bump = *s.bump().unwrap();
        let [(t0, z0), (t1, z1)] = bump.centers;
        let p0 = Point::Solid(PointSolid { theta: t0, z: z0 });
        let p1 = s.step(&p0);
        assert!(close(&p1, &Point::Solid(PointSolid { theta: t1, z: z1 }), 1e-12));
        assert!(close(&s.step(&p1), &p0, 1e-12));
        let total = s.log_norms(&p0).phi_cs + s.log_norms(&p1).phi_cs;
        assert!(total.abs() < 1e-12, "second-iterate fiber derivative {}", total.exp());
        // contracting everywhere else
        let mut rng = crate::rng::stream(1, 0);
        for _ in 0..10_000 {
            let p = s.sample_uniform(&mut rng);
            assert!(s.log_norms(&p).phi_cs < 0.0);
        }
    }

    #[test]
    fn bump_overlap_rejected() {
        let spec = SystemSpec::ModifiedSolenoid {
            gamma: 0.5,
            bump: BumpParams {
                theta_radius: 0.3,
                ..BumpParams::default()
            },
        };
        assert!(spec.build().is_err());
    }

    #[test]
    fn da_fixed_point_is_a_source() {
        let d = da();
        let l = d.log_norms(&Point::torus(0.0, 0.0));
        assert!((l.phi_cs - 1.1f64.ln()).abs() < 1e-12);
        assert!(l.phi_cs + l.phi_cu < 0.0);
        assert_eq!(d.step(&Point::torus(0.0, 0.0)), Point::torus(0.0, 0.0));
        assert!(SystemSpec::DerivedAnosovT2 {
            width: 0.05,
            center_factor: 1.4
        }
        .build()
        .is_err());
    }

    #[test]
    fn intermittent_derivative_monotone_on_grid() {
        let f = IntermittentMap::new(0.5).unwrap();
        for i in 1..100_000 {
            let x = i as f64 / 100_000.0;
            assert!(f.derivative(x) > 1.0, "f'({x}) = {}", f.derivative(x));
        }
    }

    #[test]
    fn solenoid_weak_dissipativity_chain() {
        // S_k phi_cs <= k log κ + d_cu S_k phi_cu with κ = 1, d_cu = 1
        let s = solenoid();
        let mut rng = crate::rng::stream(3, 0);
        for _ in 0..100 {
            let mut p = s.sample_uniform(&mut rng);
            let (mut scs, mut scu) = (0.0, 0.0);
            for _ in 0..200 {
                let l = s.log_norms(&p);
                scs += l.phi_cs;
                scu += l.phi_cu;
                assert!(scs <= scu + 1e-12);
                p = s.step(&p);
            }
        }
    }

    fn round_trip(sys: &System, seed: u64, count: usize, burn: usize) {
        let mut rng = crate::rng::stream(seed, 0);
        for _ in 0..count {
            let mut p = sys.sample_uniform(&mut rng);
            for _ in 0..burn {
                p = sys.step(&p);
            }
            let back = sys.step_inverse(&p).unwrap();
            let again = sys.step(&back);
            assert!(sys.distance(&again, &p) < 1e-12, "{p:?} -> {back:?} -> {again:?}");
        }
    }

    #[test]
    fn inverse_round_trip_all_invertible_systems() {
        round_trip(&System::CatMap, 11, 10_000, 0);
        round_trip(&da(), 12, 10_000, 0);
        round_trip(&solenoid(), 13, 10_000, 1);
        round_trip(&modified(), 14, 10_000, 1);
    }

    #[test]
    fn domination_margin_decreases_linearly() {
        let mut rng = crate::rng::stream(21, 0);
        for sys in [System::CatMap, da(), solenoid(), modified()] {
            for _ in 0..20 {
                let p = sys.sample_uniform(&mut rng);
                for n in [1, 10, 100] {
                    let m = sys.domination_margin(&p, n);
                    assert!(m <= -0.5 * n as f64, "{:?} n={n} margin={m}", sys.kind());
                }
            }
        }
    }

    proptest! {
        #[test]
        fn images_stay_in_chart(x1 in 0.0f64..1.0, x2 in 0.0f64..1.0, r in 0.0f64..1.0, a in 0.0f64..1.0) {
            let z = Complex64::from_polar(r, TAU * a);
            for sys in [System::CatMap, da()] {
                let q = sys.step(&Point::torus(x1, x2));
                prop_assert!(sys.contains(&q));
            }
            let circle = SystemSpec::IntermittentCircle { gamma: 0.3 }.build().unwrap();
            prop_assert!(circle.contains(&circle.step(&Point::circle(x1))));
            for sys in [solenoid(), modified()] {
                let q = sys.step(&Point::Solid(PointSolid { theta: x1, z }));
                prop_assert!(sys.contains(&q));
            }
        }
    }
}
