//! Ergodic, geometric and topological basin tests against an empirical
//! reference measure, and grid scans of their agreement.

use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::cocycle::iterate;
use crate::error::{Error, Result};
use crate::observables::Observable;
use crate::par::map_indexed;
use crate::stats::{fit_line, mean, pairwise_sum, stderr_of_mean};
use crate::systems::{Point, PointSolid, System};

/// Minimum reference orbit length.
pub const MIN_REFERENCE_LENGTH: usize = 10_000;
const REFERENCE_BATCHES: usize = 50;

// ---------------------------------------------------------------------------
// Nearest-neighbour index over the attractor cloud

/// Uniform cell grid over the chart, periodic in circle coordinates.
#[derive(Debug, Clone)]
pub struct CloudIndex {
    dims: usize,
    periodic: [bool; 3],
    lo: [f64; 3],
    width: [f64; 3],
    cells: [usize; 3],
    offsets: Vec<u32>,
    members: Vec<u32>,
    coords: Vec<[f64; 3]>,
}

fn chart(p: &Point) -> ([f64; 3], usize) {
    match p {
        Point::Circle(q) => ([q.x, 0.0, 0.0], 1),
        Point::Torus(q) => ([q.x1, q.x2, 0.0], 2),
        Point::Solid(q) => ([q.theta, q.z.re, q.z.im], 3),
    }
}

impl CloudIndex {
    pub fn new(points: &[Point]) -> Self {
        let dims = points.first().map_or(1, |p| chart(p).1);
        let (periodic, lo, hi) = match dims {
            1 => ([true, false, false], [0.0; 3], [1.0, 1.0, 1.0]),
            2 => ([true, true, false], [0.0; 3], [1.0, 1.0, 1.0]),
            _ => ([true, false, false], [0.0, -1.0, -1.0], [1.0, 1.0, 1.0]),
        };
        let per_axis = ((points.len().max(1) as f64).powf(1.0 / dims as f64).ceil() as usize)
            .clamp(1, match dims {
                1 => 1 << 20,
                2 => 1024,
                _ => 96,
            });
        let mut cells = [1usize; 3];
        let mut width = [1.0; 3];
        for a in 0..dims {
            cells[a] = per_axis;
            width[a] = (hi[a] - lo[a]) / per_axis as f64;
        }
        let coords: Vec<[f64; 3]> = points.iter().map(|p| chart(p).0).collect();
        let mut idx = CloudIndex {
            dims,
            periodic,
            lo,
            width,
            cells,
            offsets: Vec::new(),
            members: Vec::new(),
            coords,
        };
        let total = cells[0] * cells[1] * cells[2];
        let keys: Vec<usize> = idx.coords.iter().map(|c| idx.flat(idx.cell_of(c))).collect();
        let mut counts = vec![0u32; total + 1];
        for &k in &keys {
            counts[k + 1] += 1;
        }
        for i in 0..total {
            counts[i + 1] += counts[i];
        }
        let mut fill = counts.clone();
        let mut members = vec![0u32; keys.len()];
        for (i, &k) in keys.iter().enumerate() {
            members[fill[k] as usize] = i as u32;
            fill[k] += 1;
        }
        idx.offsets = counts;
        idx.members = members;
        idx
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    fn cell_of(&self, c: &[f64; 3]) -> [isize; 3] {
        let mut out = [0isize; 3];
        for a in 0..self.dims {
            let k = ((c[a] - self.lo[a]) / self.width[a]).floor() as isize;
            out[a] = k.clamp(0, self.cells[a] as isize - 1);
        }
        out
    }

    fn flat(&self, k: [isize; 3]) -> usize {
        (k[0] as usize * self.cells[1] + k[1] as usize) * self.cells[2] + k[2] as usize
    }

    fn dist2(&self, a: &[f64; 3], b: &[f64; 3]) -> f64 {
        let mut s = 0.0;
        for ax in 0..self.dims {
            let mut d = (a[ax] - b[ax]).abs();
            if self.periodic[ax] {
                d = d.min(1.0 - d);
            }
            s += d * d;
        }
        s
    }

    /// Distance from `p` to the nearest cloud point (infinite when empty).
    pub fn nearest_distance(&self, p: &Point) -> f64 {
        if self.coords.is_empty() {
            return f64::INFINITY;
        }
        let (q, _) = chart(p);
        self.search(&q, self.cell_of(&q), usize::MAX).sqrt()
    }

    /// Squared distance to the nearest cloud point other than `skip`,
    /// scanning Chebyshev rings of cells around `c`.
    fn search(&self, q: &[f64; 3], c: [isize; 3], skip: usize) -> f64 {
        let h = self.width[..self.dims].iter().cloned().fold(f64::INFINITY, f64::min);
        let max_r = *self.cells[..self.dims].iter().max().unwrap() as isize;
        let mut best = f64::INFINITY;
        for r in 0..=max_r {
            self.ring(c, r, q, skip, &mut best);
            // anything in ring r + 1 is at least r cell widths away
            if best.is_finite() && best.sqrt() <= r as f64 * h {
                break;
            }
        }
        best
    }

    /// Nearest-neighbour spacings of (up to) `probe` evenly spaced cloud
    /// points to the rest of the cloud, sorted.
    pub fn spacings(&self, probe: usize) -> Vec<f64> {
        let n = self.coords.len();
        if n < 2 {
            return Vec::new();
        }
        let stride = (n / probe.max(1)).max(1);
        let mut d: Vec<f64> = (0..n)
            .step_by(stride)
            .map(|i| {
                let q = self.coords[i];
                self.search(&q, self.cell_of(&q), i).sqrt()
            })
            .collect();
        d.sort_by(f64::total_cmp);
        d
    }

    pub fn median_spacing(&self, probe: usize) -> f64 {
        let d = self.spacings(probe);
        d.get(d.len() / 2).copied().unwrap_or(0.0)
    }

    /// Largest probed spacing: an estimate of the covering radius of the
    /// cloud within the attractor.
    pub fn max_spacing(&self, probe: usize) -> f64 {
        self.spacings(probe).last().copied().unwrap_or(0.0)
    }

    fn ring(&self, c: [isize; 3], r: isize, q: &[f64; 3], skip: usize, best: &mut f64) {
        let rng = -r..=r;
        for i in rng.clone() {
            for j in if self.dims >= 2 { rng.clone() } else { 0..=0 } {
                for k in if self.dims >= 3 { rng.clone() } else { 0..=0 } {
                    if i.abs() != r && j.abs() != r && k.abs() != r {
                        continue;
                    }
                    let mut kk = [c[0] + i, c[1] + j, c[2] + k];
                    let mut ok = true;
                    for a in 0..self.dims {
                        let n = self.cells[a] as isize;
                        if self.periodic[a] {
                            kk[a] = kk[a].rem_euclid(n);
                        } else if kk[a] < 0 || kk[a] >= n {
                            ok = false;
                        }
                    }
                    if !ok {
                        continue;
                    }
                    let f = self.flat(kk);
                    for &m in &self.members[self.offsets[f] as usize..self.offsets[f + 1] as usize]
                    {
                        if m as usize != skip {
                            let d = self.dist2(q, &self.coords[m as usize]);
                            if d < *best {
                                *best = d;
                            }
                        }
                    }
                }
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Reference measure

#[derive(Debug, Clone)]
pub struct ReferenceMeasure {
    pub battery: Vec<Observable>,
    /// Orbit averages of the battery.
    pub values: Vec<f64>,
    /// Batch-means standard errors of `values`.
    pub stderr: Vec<f64>,
    pub burn_in: usize,
    pub length: usize,
    pub seed: u64,
    pub cloud: Vec<Point>,
    pub index: CloudIndex,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReferenceConfig {
    pub burn_in: usize,
    pub length: usize,
    /// Number of orbit points kept (evenly spaced) as the attractor cloud.
    pub cloud_size: usize,
    pub seed: u64,
}

/// One long orbit after burn-in, from a Lebesgue-random start drawn from
/// stream `(seed, 0)`.
pub fn build_reference(
    sys: &System,
    battery: &[Observable],
    cfg: &ReferenceConfig,
) -> Result<ReferenceMeasure> {
    if cfg.length < MIN_REFERENCE_LENGTH {
        return Err(Error::InsufficientData {
            needed: MIN_REFERENCE_LENGTH,
            got: cfg.length,
        });
    }
    if battery.is_empty() {
        return Err(Error::invalid("battery", "needs at least one observable"));
    }
    let mut rng = crate::rng::stream(cfg.seed, 0);
    let mut x = iterate(sys, sys.sample_uniform(&mut rng), cfg.burn_in);
    let stride = (cfg.length / cfg.cloud_size.max(1)).max(1);
    let batch_len = cfg.length / REFERENCE_BATCHES;
    let mut cloud = Vec::with_capacity(cfg.length / stride + 1);
    let mut batch_sums = vec![vec![0.0; REFERENCE_BATCHES]; battery.len()];
    let mut acc = vec![0.0; battery.len()];
    let mut batch = 0;
    let mut in_batch = 0;
    for i in 0..cfg.length {
        if i % stride == 0 {
            cloud.push(x);
        }
        for (a, o) in acc.iter_mut().zip(battery) {
            *a += o.eval(&x);
        }
        in_batch += 1;
        if in_batch == batch_len && batch < REFERENCE_BATCHES {
            for (k, a) in acc.iter_mut().enumerate() {
                batch_sums[k][batch] = *a / batch_len as f64;
                *a = 0.0;
            }
            batch += 1;
            in_batch = 0;
        }
        x = sys.step(&x);
    }
    // the tail shorter than one batch is dropped from the estimate
    let values: Vec<f64> = batch_sums.iter().map(|b| mean(b)).collect();
    let stderr: Vec<f64> = batch_sums.iter().map(|b| stderr_of_mean(b)).collect();
    let index = CloudIndex::new(&cloud);
    Ok(ReferenceMeasure {
        battery: battery.to_vec(),
        values,
        stderr,
        burn_in: cfg.burn_in,
        length: REFERENCE_BATCHES * batch_len,
        seed: cfg.seed,
        cloud,
        index,
    })
}

// ---------------------------------------------------------------------------
// Basin tests

/// Largest battery deviation `max_k |S_n φ_k(y)/n - μ̂(φ_k)|`.
pub fn ergodic_deviation(sys: &System, y: Point, reference: &ReferenceMeasure, n: usize) -> f64 {
    let mut sums = vec![Vec::with_capacity(n); reference.battery.len()];
    let mut x = y;
    for _ in 0..n {
        for (s, o) in sums.iter_mut().zip(&reference.battery) {
            s.push(o.eval(&x));
        }
        x = sys.step(&x);
    }
    sums.iter()
        .zip(&reference.values)
        .map(|(s, v)| (pairwise_sum(s) / n as f64 - v).abs())
        .fold(0.0, f64::max)
}

/// Birkhoff averages of the whole battery within `tol` of the reference.
pub fn ergodic_basin_test(
    sys: &System,
    y: Point,
    reference: &ReferenceMeasure,
    n: usize,
    tol: f64,
) -> (bool, f64) {
    let dev = ergodic_deviation(sys, y, reference, n);
    (dev <= tol, dev)
}

/// Number of evenly spaced iterates inspected in the tail of a run.
const TAIL_PROBES: usize = 64;

fn tail_iterates(n: usize, from: usize) -> Vec<usize> {
    let span = n - from;
    let step = (span / TAIL_PROBES).max(1);
    let mut ks: Vec<usize> = (from..=n).step_by(step).collect();
    if *ks.last().unwrap() != n {
        ks.push(n);
    }
    ks
}

fn cloud_distances(sys: &System, y: Point, reference: &ReferenceMeasure, ks: &[usize]) -> Vec<f64> {
    let mut out = Vec::with_capacity(ks.len());
    let mut x = y;
    let mut k = 0;
    for &target in ks {
        x = iterate(sys, x, target - k);
        k = target;
        out.push(reference.index.nearest_distance(&x));
    }
    out
}

/// Largest accepted growth of the fitted distance across the second half of
/// a run (one doubling); stationary scatter at the cloud resolution stays
/// well below it.
pub const MAX_LOG_DISTANCE_GROWTH: f64 = std::f64::consts::LN_2;

/// `dist(f^n y, cloud) ≤ tol`, and the least-squares line through
/// `log max(d_k, tol)` over the second half of the run does not grow by
/// more than [`MAX_LOG_DISTANCE_GROWTH`].
pub fn geometric_basin_test(
    sys: &System,
    y: Point,
    reference: &ReferenceMeasure,
    n: usize,
    tol: f64,
) -> (bool, f64) {
    let ks = tail_iterates(n, n / 2);
    let d = cloud_distances(sys, y, reference, &ks);
    let last = *d.last().unwrap();
    let x: Vec<f64> = ks.iter().map(|&k| k as f64).collect();
    let logd: Vec<f64> = d.iter().map(|v| v.max(tol).ln()).collect();
    let slope = fit_line(&x, &logd).map_or(0.0, |f| f.slope);
    let growth = slope * (n - n / 2) as f64;
    (last <= tol && growth <= MAX_LOG_DISTANCE_GROWTH, last)
}

/// `f^k y` within `eps` of the cloud over the final quarter of the run.
pub fn topological_basin_test(
    sys: &System,
    y: Point,
    reference: &ReferenceMeasure,
    n: usize,
    eps: f64,
) -> (bool, f64) {
    let ks = tail_iterates(n, n - n / 4);
    let worst = cloud_distances(sys, y, reference, &ks)
        .into_iter()
        .fold(0.0, f64::max);
    (worst <= eps, worst)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub ergodic: f64,
    pub geometric: f64,
    pub topological: f64,
}

/// Multiplier on the battery standard error in the default ergodic
/// tolerance.
pub const ERGODIC_TOL_FACTOR: f64 = 5.0;
/// Multiplier on the cloud's covering radius in the default distance
/// tolerances.
pub const DISTANCE_TOL_FACTOR: f64 = 2.0;
const SPACING_PROBES: usize = 2000;

impl Tolerances {
    /// `ergodic = 5 · max_k stderr_k · sqrt(L / n)`; the distance tolerances
    /// are twice the largest nearest-neighbour spacing among 2000 probed
    /// cloud points. The spacing is heavy-tailed on fractal attractors, so
    /// a median-based scale would reject genuine attractor points.
    pub fn default_for(reference: &ReferenceMeasure, n: usize) -> Self {
        let se = reference.stderr.iter().cloned().fold(0.0, f64::max);
        let spacing = reference.index.max_spacing(SPACING_PROBES);
        Tolerances {
            ergodic: ERGODIC_TOL_FACTOR * se * (reference.length as f64 / n as f64).sqrt(),
            geometric: DISTANCE_TOL_FACTOR * spacing,
            topological: DISTANCE_TOL_FACTOR * spacing,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BasinVerdict {
    pub ergodic: bool,
    pub geometric: bool,
    pub topological: bool,
    pub max_deviation: f64,
    pub final_distance: f64,
    pub tail_distance: f64,
}

pub fn basin_verdict(
    sys: &System,
    y: Point,
    reference: &ReferenceMeasure,
    n: usize,
    tol: &Tolerances,
) -> BasinVerdict {
    let (ergodic, max_deviation) = ergodic_basin_test(sys, y, reference, n, tol.ergodic);
    let (geometric, final_distance) = geometric_basin_test(sys, y, reference, n, tol.geometric);
    let (topological, tail_distance) =
        topological_basin_test(sys, y, reference, n, tol.topological);
    BasinVerdict {
        ergodic,
        geometric,
        topological,
        max_deviation,
        final_distance,
        tail_distance,
    }
}

/// Offset of grid points inside their cells. An irrational offset keeps
/// grid coordinates away from short binary fractions, which the doubling
/// branches send onto periodic orbits in a few exact steps.
pub const GRID_OFFSET: f64 = 0.618_033_988_749_894_8;

/// Deterministic, evenly spread starting points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum GridSpec {
    Circle { n: usize },
    Torus { n1: usize, n2: usize },
    /// Rank-1 lattice of `points` points in `(θ, r², fiber angle)`, so the
    /// fiber coordinates are area-uniform in the disk and every point has
    /// its own base coordinate.
    Solid { points: usize },
}

/// Generators of the rank-1 lattice (Fibonacci-like, coprime to most
/// sizes).
const LATTICE_GEN: [u64; 2] = [1_597, 2_584_181];

impl GridSpec {
    pub fn len(&self) -> usize {
        match *self {
            GridSpec::Circle { n } => n,
            GridSpec::Torus { n1, n2 } => n1 * n2,
            GridSpec::Solid { points } => points,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn points(&self) -> Vec<Point> {
        let c = |i: usize, n: usize| (i as f64 + GRID_OFFSET) / n as f64;
        match *self {
            GridSpec::Circle { n } => (0..n).map(|i| Point::circle(c(i, n))).collect(),
            GridSpec::Torus { n1, n2 } => (0..n1)
                .flat_map(|i| (0..n2).map(move |j| Point::torus(c(i, n1), c(j, n2))))
                .collect(),
            GridSpec::Solid { points } => {
                let m = points as u64;
                (0..m)
                    .map(|i| {
                        let u = c((i * LATTICE_GEN[0] % m) as usize, points);
                        let v = c((i * LATTICE_GEN[1] % m) as usize, points);
                        Point::Solid(PointSolid {
                            theta: c(i as usize, points),
                            z: Complex64::from_polar(u.sqrt(), TAU * v),
                        })
                    })
                    .collect()
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AgreementReport {
    pub points: usize,
    pub n: usize,
    pub frac_ergodic: f64,
    pub frac_geometric: f64,
    pub frac_topological: f64,
    pub agree_ergodic_geometric: f64,
    pub agree_ergodic_topological: f64,
    pub agree_geometric_topological: f64,
    /// Fraction of points where exactly one of ergodic / geometric holds.
    pub sym_diff_ergodic_geometric: f64,
    pub verdicts: Vec<BasinVerdict>,
}

/// Run all three tests on every grid point (in parallel) and summarise.
/// Basin equalities hold up to null sets, so the report gives agreement
/// fractions rather than exact equality.
pub fn agreement_scan(
    sys: &System,
    grid: &[Point],
    reference: &ReferenceMeasure,
    n: usize,
    tol: &Tolerances,
) -> AgreementReport {
    let verdicts = map_indexed(grid.len(), |i| basin_verdict(sys, grid[i], reference, n, tol));
    if verdicts.is_empty() {
        return AgreementReport {
            n,
            ..Default::default()
        };
    }
    let m = verdicts.len() as f64;
    let frac = |f: &dyn Fn(&BasinVerdict) -> bool| verdicts.iter().filter(|v| f(v)).count() as f64 / m;
    let sym = frac(&|v| v.ergodic != v.geometric);
    AgreementReport {
        points: verdicts.len(),
        n,
        frac_ergodic: frac(&|v| v.ergodic),
        frac_geometric: frac(&|v| v.geometric),
        frac_topological: frac(&|v| v.topological),
        agree_ergodic_geometric: 1.0 - sym,
        agree_ergodic_topological: frac(&|v| v.ergodic == v.topological),
        agree_geometric_topological: frac(&|v| v.geometric == v.topological),
        sym_diff_ergodic_geometric: sym,
        verdicts,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;
    use rand::Rng;

    #[test]
    fn index_matches_brute_force() {
        let sys = crate::SystemSpec::Solenoid { gamma: 0.5 }.build().unwrap();
        let mut rng = stream(3, 0);
        let cloud: Vec<Point> = (0..3000).map(|_| sys.sample_uniform(&mut rng)).collect();
        let idx = CloudIndex::new(&cloud);
        for _ in 0..200 {
            let q = sys.sample_uniform(&mut rng);
            let brute = cloud.iter().map(|c| sys.distance(c, &q)).fold(f64::INFINITY, f64::min);
            assert!((idx.nearest_distance(&q) - brute).abs() < 1e-12);
        }
        let mut rng = stream(4, 0);
        let cloud: Vec<Point> = (0..500)
            .map(|_| Point::torus(rng.gen::<f64>() * 0.1, rng.gen::<f64>()))
            .collect();
        let idx = CloudIndex::new(&cloud);
        for _ in 0..200 {
            let q = Point::torus(rng.gen(), rng.gen());
            let brute = cloud
                .iter()
                .map(|c| System::CatMap.distance(c, &q))
                .fold(f64::INFINITY, f64::min);
            assert!((idx.nearest_distance(&q) - brute).abs() < 1e-12);
        }
    }

    #[test]
    fn short_reference_rejected() {
        let b = crate::observables::default_battery(crate::SystemKind::CatMap);
        let cfg = ReferenceConfig {
            burn_in: 0,
            length: 9_999,
            cloud_size: 100,
            seed: 1,
        };
        assert!(build_reference(&System::CatMap, &b, &cfg).is_err());
    }

    #[test]
    fn empty_grid_gives_empty_report() {
        let b = crate::observables::default_battery(crate::SystemKind::CatMap);
        let cfg = ReferenceConfig {
            burn_in: 0,
            length: 10_000,
            cloud_size: 1000,
            seed: 1,
        };
        let r = build_reference(&System::CatMap, &b, &cfg).unwrap();
        let tol = Tolerances::default_for(&r, 1000);
        let rep = agreement_scan(&System::CatMap, &[], &r, 1000, &tol);
        assert_eq!(rep.points, 0);
        assert!(rep.verdicts.is_empty());
    }
}
