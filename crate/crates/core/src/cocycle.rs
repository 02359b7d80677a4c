//! Orbits, split log-norm traces, Birkhoff averages and Lyapunov exponents.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::{mean, pairwise_sum, stderr_of_mean};
use crate::systems::{Point, System, SystemSpec};

/// A finite forward orbit `points[i] = f^i(start)`.
#[derive(Debug, Clone, PartialEq)]
pub struct OrbitSegment {
    pub system: SystemSpec,
    pub start: Point,
    pub points: Vec<Point>,
    /// Seed used to draw `start`, when it was drawn at random.
    pub seed: Option<u64>,
}

impl OrbitSegment {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn last(&self) -> Option<&Point> {
        self.points.last()
    }
}

/// Which split log-norm to read from a trace.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Field {
    Cs,
    Cu,
    JCu,
}

/// Per-iterate split log-norms along an orbit.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CocycleTrace {
    pub phi_cs: Vec<f64>,
    pub phi_cu: Vec<f64>,
    pub j_cu: Vec<f64>,
}

impl CocycleTrace {
    pub fn with_capacity(n: usize) -> Self {
        CocycleTrace {
            phi_cs: Vec::with_capacity(n),
            phi_cu: Vec::with_capacity(n),
            j_cu: Vec::with_capacity(n),
        }
    }

    pub fn len(&self) -> usize {
        self.phi_cu.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phi_cu.is_empty()
    }

    pub fn field(&self, field: Field) -> &[f64] {
        match field {
            Field::Cs => &self.phi_cs,
            Field::Cu => &self.phi_cu,
            Field::JCu => &self.j_cu,
        }
    }

    /// Trace of the shifted orbit `f^j(x)`, i.e. entries `j..`.
    pub fn shifted(&self, j: usize) -> CocycleTrace {
        let j = j.min(self.len());
        CocycleTrace {
            phi_cs: self.phi_cs[j..].to_vec(),
            phi_cu: self.phi_cu[j..].to_vec(),
            j_cu: self.j_cu[j..].to_vec(),
        }
    }

    /// Entries `range`, as a trace of its own.
    pub fn window(&self, range: std::ops::Range<usize>) -> CocycleTrace {
        CocycleTrace {
            phi_cs: self.phi_cs[range.clone()].to_vec(),
            phi_cu: self.phi_cu[range.clone()].to_vec(),
            j_cu: self.j_cu[range].to_vec(),
        }
    }

    /// Trace with the same value in every slot (handy for tests and demos).
    pub fn constant(len: usize, phi_cs: f64, phi_cu: f64, j_cu: f64) -> Self {
        CocycleTrace {
            phi_cs: vec![phi_cs; len],
            phi_cu: vec![phi_cu; len],
            j_cu: vec![j_cu; len],
        }
    }

    /// Trace with only the `phi_cu` column filled in; the others are zero.
    pub fn from_phi_cu(phi_cu: Vec<f64>) -> Self {
        let n = phi_cu.len();
        CocycleTrace {
            phi_cs: vec![0.0; n],
            phi_cu,
            j_cu: vec![0.0; n],
        }
    }

    /// Trace with only the `phi_cs` column filled in; the others are zero.
    pub fn from_phi_cs(phi_cs: Vec<f64>) -> Self {
        let n = phi_cs.len();
        CocycleTrace {
            phi_cs,
            phi_cu: vec![0.0; n],
            j_cu: vec![0.0; n],
        }
    }

    fn push(&mut self, l: crate::systems::SplitLogNorms) {
        self.phi_cs.push(l.phi_cs);
        self.phi_cu.push(l.phi_cu);
        self.j_cu.push(l.j_cu);
    }
}

fn check_point(sys: &System, p: &Point, iterate: usize) -> Result<()> {
    if p.is_finite() && sys.contains(p) {
        Ok(())
    } else {
        Err(Error::DomainEscape { iterate })
    }
}

/// Orbit of length `n`: `start, f(start), …, f^{n-1}(start)`.
pub fn generate_orbit(sys: &System, start: Point, n: usize) -> Result<OrbitSegment> {
    if n == 0 {
        return Err(Error::invalid("n", "orbit length must be at least 1"));
    }
    if !sys.contains(&start) {
        return Err(Error::WrongDomain {
            expected: sys.domain_name(),
        });
    }
    let mut points = Vec::with_capacity(n);
    let mut x = start;
    points.push(x);
    for i in 1..n {
        x = sys.step(&x);
        check_point(sys, &x, i)?;
        points.push(x);
    }
    Ok(OrbitSegment {
        system: sys.spec(),
        start,
        points,
        seed: None,
    })
}

/// Split log-norms at every point of `orbit`.
pub fn trace(sys: &System, orbit: &OrbitSegment) -> CocycleTrace {
    let mut t = CocycleTrace::with_capacity(orbit.len());
    for p in &orbit.points {
        t.push(sys.log_norms(p));
    }
    t
}

/// Trace of length `n` from `start`, without storing the orbit. Also returns
/// `f^n(start)`.
pub fn trace_from(sys: &System, start: Point, n: usize) -> Result<(CocycleTrace, Point)> {
    let mut t = CocycleTrace::with_capacity(n);
    let mut x = start;
    for i in 0..n {
        check_point(sys, &x, i)?;
        t.push(sys.log_norms(&x));
        x = sys.step(&x);
    }
    check_point(sys, &x, n)?;
    Ok((t, x))
}

/// `f^n(start)`.
pub fn iterate(sys: &System, start: Point, n: usize) -> Point {
    let mut x = start;
    for _ in 0..n {
        x = sys.step(&x);
    }
    x
}

/// `S_n(values) / n` over the first `n` entries.
pub fn birkhoff_average(values: &[f64], n: usize) -> Result<f64> {
    if n == 0 || n > values.len() {
        return Err(Error::invalid(
            "n",
            format!("need 1 <= n <= {}, got {n}", values.len()),
        ));
    }
    Ok(pairwise_sum(&values[..n]) / n as f64)
}

/// Exponent estimate across independent orbits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LyapunovEstimate {
    pub value: f64,
    pub stderr: f64,
    pub horizon: usize,
    pub orbits: usize,
}

/// Minimum horizon accepted by [`lyapunov`].
pub const MIN_LYAPUNOV_HORIZON: usize = 100;

/// Exponent from a batch of traces, all truncated to the shortest one.
///
/// `Cu` gives `-S_n phi_cu / n` (the centre-unstable exponent, since
/// `E^cu` is one-dimensional in every implemented system), `Cs` and `JCu`
/// give the plain averages.
pub fn lyapunov(traces: &[CocycleTrace], field: Field) -> Result<LyapunovEstimate> {
    if traces.is_empty() {
        return Err(Error::InsufficientData { needed: 1, got: 0 });
    }
    let horizon = traces.iter().map(CocycleTrace::len).min().unwrap_or(0);
    if horizon < MIN_LYAPUNOV_HORIZON {
        return Err(Error::InsufficientData {
            needed: MIN_LYAPUNOV_HORIZON,
            got: horizon,
        });
    }
    let sign = if field == Field::Cu { -1.0 } else { 1.0 };
    let per_orbit: Vec<f64> = traces
        .iter()
        .map(|t| sign * pairwise_sum(&t.field(field)[..horizon]) / horizon as f64)
        .collect();
    Ok(LyapunovEstimate {
        value: mean(&per_orbit),
        stderr: stderr_of_mean(&per_orbit),
        horizon,
        orbits: traces.len(),
    })
}

/// Lyapunov estimate from `orbits` Lebesgue-random starts, run in parallel
/// without keeping the traces. Orbit `i` uses stream `(seed, i)`.
pub fn sampled_lyapunov(
    sys: &System,
    field: Field,
    orbits: usize,
    burn_in: usize,
    horizon: usize,
    seed: u64,
) -> Result<LyapunovEstimate> {
    if orbits == 0 {
        return Err(Error::InsufficientData { needed: 1, got: 0 });
    }
    if horizon < MIN_LYAPUNOV_HORIZON {
        return Err(Error::InsufficientData {
            needed: MIN_LYAPUNOV_HORIZON,
            got: horizon,
        });
    }
    let sign = if field == Field::Cu { -1.0 } else { 1.0 };
    let per_orbit = crate::par::map_indexed(orbits, |i| {
        let mut rng = crate::rng::stream(seed, i as u64);
        let x = iterate(sys, sys.sample_uniform(&mut rng), burn_in);
        let (t, _) = trace_from(sys, x, horizon)?;
        Ok(sign * pairwise_sum(t.field(field)) / horizon as f64)
    });
    let per_orbit: Vec<f64> = per_orbit.into_iter().collect::<Result<_>>()?;
    Ok(LyapunovEstimate {
        value: mean(&per_orbit),
        stderr: stderr_of_mean(&per_orbit),
        horizon,
        orbits,
    })
}

/// Finite-horizon non-uniform expansion: `S_n phi_cu / n < -c_u`.
pub fn nue_check(trace: &CocycleTrace, c_u: f64, n: usize) -> Result<bool> {
    Ok(birkhoff_average(&trace.phi_cu, n)? < -c_u)
}
