//! WebAssembly bindings for the static demo page in `www/`.

use ergolab::cocycle::{iterate, trace_from};
use ergolab::hyptimes::{hyperbolic_times, Inequality};
use ergolab::mixing::{fit_tail, tail_histogram, DecayModel, TailFit};
use ergolab::rng::stream;
use ergolab::systems::System;
use ergolab::{Point, SystemSpec};
use wasm_bindgen::prelude::*;

fn build(system: &str, gamma: f64) -> Result<System, JsError> {
    let spec = match system {
        "cat-map" => SystemSpec::CatMap,
        "derived-anosov-t2" => SystemSpec::DerivedAnosovT2 {
            width: 0.05,
            center_factor: 1.1,
        },
        "intermittent-circle" => SystemSpec::IntermittentCircle { gamma },
        "solenoid" => SystemSpec::Solenoid { gamma },
        "modified-solenoid" => SystemSpec::ModifiedSolenoid {
            gamma,
            bump: Default::default(),
        },
        other => return Err(JsError::new(&format!("unknown system `{other}`"))),
    };
    spec.build().map_err(|e| JsError::new(&e.to_string()))
}

/// Planar projection of one orbit, flattened as `[x0, y0, x1, y1, …]`:
/// `(x1, x2)` on the torus, `(Re z, Im z)` on the solid torus and the
/// delay pair `(x_k, x_{k+1})` on the circle.
#[wasm_bindgen]
pub fn orbit_scatter(system: &str, gamma: f64, points: usize, seed: u64) -> Result<Vec<f64>, JsError> {
    let sys = build(system, gamma)?;
    let mut rng = stream(seed, 0);
    let mut x = iterate(&sys, sys.sample_uniform(&mut rng), 100);
    let mut out = Vec::with_capacity(2 * points);
    for _ in 0..points {
        let next = sys.step(&x);
        match (x, next) {
            (Point::Torus(p), _) => out.extend([p.x1, p.x2]),
            (Point::Solid(p), _) => out.extend([p.z.re, p.z.im]),
            (Point::Circle(p), Point::Circle(q)) => out.extend([p.x, q.x]),
            _ => unreachable!("step keeps the domain"),
        }
        x = next;
    }
    Ok(out)
}

/// Expansion-time tail of the intermittent circle map.
#[wasm_bindgen]
pub struct Tail {
    frac: Vec<f64>,
    censored: f64,
    slope: f64,
    poly_r2: f64,
    stretched_r2: f64,
    chosen: String,
}

#[wasm_bindgen]
impl Tail {
    /// `frac[n-1]` = fraction of starts with a finite `h ≥ n`.
    #[wasm_bindgen(getter)]
    pub fn frac(&self) -> Vec<f64> {
        self.frac.clone()
    }
    #[wasm_bindgen(getter)]
    pub fn censored(&self) -> f64 {
        self.censored
    }
    /// Log-log slope of the polynomial fit (NaN if degenerate).
    #[wasm_bindgen(getter)]
    pub fn slope(&self) -> f64 {
        self.slope
    }
    #[wasm_bindgen(getter)]
    pub fn poly_r2(&self) -> f64 {
        self.poly_r2
    }
    #[wasm_bindgen(getter)]
    pub fn stretched_r2(&self) -> f64 {
        self.stretched_r2
    }
    #[wasm_bindgen(getter)]
    pub fn chosen(&self) -> String {
        self.chosen.clone()
    }
}

#[wasm_bindgen]
pub fn intermittent_tail(
    gamma: f64,
    c_u: f64,
    horizon: usize,
    samples: usize,
    seed: u64,
) -> Result<Tail, JsError> {
    let sys = build("intermittent-circle", gamma)?;
    let h = tail_histogram(&sys, c_u, horizon, samples, seed).map_err(|e| JsError::new(&e.to_string()))?;
    let fit = fit_tail(&h).map_err(|e| JsError::new(&e.to_string()))?;
    let (slope, poly_r2, stretched_r2, chosen) = match fit {
        TailFit::Degenerate => (f64::NAN, f64::NAN, f64::NAN, "degenerate".to_string()),
        TailFit::Fitted(d) => (
            -d.polynomial.alpha,
            d.polynomial.r_squared,
            d.stretched.r_squared,
            match d.chosen {
                DecayModel::Polynomial => "polynomial".into(),
                DecayModel::Exponential => "stretched-exponential".into(),
            },
        ),
    };
    Ok(Tail {
        frac: h.frac,
        censored: h.censored,
        slope,
        poly_r2,
        stretched_r2,
        chosen,
    })
}

/// Hyperbolic-time mask along one orbit: entry `n - 1` is 1 when `n` is a
/// `σ`-hyperbolic time, followed by the running sums `S_n phi_cu` in a
/// second block of the same length.
#[wasm_bindgen]
pub fn hyperbolic_mask(
    system: &str,
    gamma: f64,
    sigma: f64,
    horizon: usize,
    seed: u64,
) -> Result<Vec<f64>, JsError> {
    let sys = build(system, gamma)?;
    let mut rng = stream(seed, 0);
    let x = iterate(&sys, sys.sample_uniform(&mut rng), 100);
    let (t, _) = trace_from(&sys, x, horizon).map_err(|e| JsError::new(&e.to_string()))?;
    let times = hyperbolic_times(&t, sigma, Inequality::NonStrict).map_err(|e| JsError::new(&e.to_string()))?;
    let mut out = vec![0.0; 2 * horizon];
    for n in times.iter() {
        out[n - 1] = 1.0;
    }
    let mut s = 0.0;
    for (i, v) in t.phi_cu.iter().enumerate() {
        s += v;
        out[horizon + i] = s;
    }
    Ok(out)
}
