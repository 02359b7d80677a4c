use ergolab::basins::*;
use ergolab::mixing::*;
use ergolab::observables::{default_battery, Axis, Observable};
use ergolab::systems::System;
use ergolab::{Point, SystemKind, SystemSpec};
use proptest::prelude::*;

fn on_threads<T: Send>(n: usize, f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build()
        .unwrap()
        .install(f)
}

#[test]
fn stretched_exponential_round_trip() {
    let (c, a, log_a) = (0.4, 0.5, -1.0);
    let pts: Vec<(f64, f64)> = (1..=200)
        .map(|n| {
            let n = n as f64;
            (n, (log_a - c * n.powf(a)).exp())
        })
        .collect();
    let f = fit_decay(&pts).unwrap();
    assert_eq!(f.chosen, DecayModel::Exponential);
    assert!((f.stretched.alpha_stretch - a).abs() < 1e-6, "{:?}", f.stretched);
    assert!((f.stretched.c - c).abs() < 1e-5);
    assert!((f.stretched.log_a - log_a).abs() < 1e-5);
    assert!(f.stretched.r_squared > f.polynomial.r_squared);
}

#[test]
fn fit_ignores_non_positive_values() {
    let mut pts: Vec<(f64, f64)> = (1..=20).map(|n| (n as f64, (n as f64).powi(-3))).collect();
    pts.push((21.0, 0.0));
    pts.push((22.0, -1.0));
    let f = fit_decay(&pts).unwrap();
    assert_eq!(f.points, 20);
    assert!((f.polynomial.alpha - 3.0).abs() < 1e-9);
}

#[test]
fn growing_series_is_rejected() {
    let pts: Vec<(f64, f64)> = (1..=20).map(|n| (n as f64, n as f64)).collect();
    assert!(fit_decay(&pts).is_err());
}

#[test]
fn cat_map_tail_is_degenerate() {
    let h = tail_histogram(&System::CatMap, 0.96, 50, 2000, 1).unwrap();
    assert_eq!(h.frac[0], 1.0);
    assert!(h.frac[1..].iter().all(|f| *f == 0.0));
    assert_eq!(h.censored, 0.0);
    assert_eq!(fit_tail(&h).unwrap(), TailFit::Degenerate);
    assert_eq!(
        predict_mixing_class(&TailFit::Degenerate),
        MixingClass::Exponential { stretch: 1.0 }
    );
    assert!(tail_histogram(&System::CatMap, 0.97, 50, 10, 1).is_err());
}

#[test]
fn tail_histogram_is_a_survival_function_and_thread_independent() {
    let sys = SystemSpec::IntermittentCircle { gamma: 0.5 }.build().unwrap();
    let a = on_threads(1, || tail_histogram(&sys, 0.3, 200, 20_000, 7).unwrap());
    let b = on_threads(4, || tail_histogram(&sys, 0.3, 200, 20_000, 7).unwrap());
    assert_eq!(a, b);
    assert!(a.frac.windows(2).all(|w| w[0] >= w[1]));
    assert!(a.frac.iter().all(|f| (0.0..=1.0).contains(f)));
    assert!(a.frac[0] + a.censored <= 1.0 + 1e-15);
}

#[test]
fn correlation_is_thread_independent() {
    let sys = SystemSpec::Solenoid { gamma: 0.5 }.build().unwrap();
    let cfg = CorrelationConfig {
        n_max: 6,
        samples: 5000,
        burn_in: 20,
        seed: 3,
        batches: 10,
    };
    let phi = Observable::cos(Axis::First);
    let a = on_threads(1, || estimate_correlation(&sys, &phi, &Observable::FiberRe, &cfg).unwrap());
    let b = on_threads(3, || estimate_correlation(&sys, &phi, &Observable::FiberRe, &cfg).unwrap());
    assert_eq!(a, b);
}

#[test]
fn holonomy_identity_and_base_only_case() {
    let plain = SystemSpec::Solenoid { gamma: 0.5 }.build().unwrap();
    let c = HolonomyConstants::for_system(&plain).unwrap();
    let x = Point::solid(0.3, 0.2, -0.1);
    let y = Point::solid(0.3, -0.5, 0.4);
    let r = holonomy_density(&plain, x, y, 32, &c).unwrap();
    assert!((r.value - 1.0).abs() < 1e-12);
    assert_eq!(r.remainder_bound, 0.0);
    let modified = SystemSpec::ModifiedSolenoid {
        gamma: 0.5,
        bump: Default::default(),
    }
    .build()
    .unwrap();
    let c = HolonomyConstants::for_system(&modified).unwrap();
    let same = holonomy_density(&modified, x, x, 16, &c).unwrap();
    assert_eq!(same.value, 1.0);
    assert_eq!(same.remainder_bound, 0.0);
    assert!(matches!(
        holonomy_density(&modified, x, Point::solid(0.31, 0.0, 0.0), 8, &c),
        Err(ergolab::Error::NotSameFiber { .. })
    ));
    assert!(HolonomyConstants::for_system(&System::CatMap).is_err());
}

fn small_reference(sys: &System, seed: u64) -> ReferenceMeasure {
    let cfg = ReferenceConfig {
        burn_in: 100,
        length: 200_000,
        cloud_size: 20_000,
        seed,
    };
    build_reference(sys, &default_battery(sys.kind()), &cfg).unwrap()
}

#[test]
fn reference_is_reproducible() {
    let sys = SystemSpec::Solenoid { gamma: 0.5 }.build().unwrap();
    let a = small_reference(&sys, 9);
    let b = small_reference(&sys, 9);
    assert_eq!(a.values, b.values);
    assert_eq!(a.stderr, b.stderr);
    assert_eq!(a.cloud, b.cloud);
    let c = small_reference(&sys, 10);
    assert_ne!(a.values, c.values);
}

#[test]
fn cat_map_reference_means_vanish() {
    let r = small_reference(&System::CatMap, 4);
    for (v, se) in r.values.iter().zip(&r.stderr) {
        assert!(v.abs() <= 5.0 * se + 1e-3, "{v} ± {se}");
    }
}

#[test]
fn derived_anosov_source_is_outside_every_basin() {
    let sys = SystemSpec::DerivedAnosovT2 {
        width: 0.05,
        center_factor: 1.1,
    }
    .build()
    .unwrap();
    let r = small_reference(&sys, 2);
    let n = 400;
    let tol = Tolerances::default_for(&r, n);
    let v = basin_verdict(&sys, Point::torus(0.0, 0.0), &r, n, &tol);
    assert!(!v.geometric && !v.topological, "{v:?}");
    let mut rng = ergolab::rng::stream(2, 99);
    let generic = sys.sample_uniform(&mut rng);
    let v = basin_verdict(&sys, generic, &r, n, &tol);
    assert!(v.geometric && v.topological, "{v:?}");
}

#[test]
fn grid_shapes() {
    let g = GridSpec::Torus { n1: 4, n2: 5 }.points();
    assert_eq!(g.len(), 20);
    let s = GridSpec::Solid { points: 1000 }.points();
    assert_eq!(s.len(), 1000);
    assert!(s.iter().all(|p| matches!(p, Point::Solid(q) if q.z.norm() <= 1.0)));
    assert_eq!(default_battery(SystemKind::Solenoid).len(), 5);
}

proptest! {
    #[test]
    fn dictionary_shifts_polynomial_exponent(alpha in 0.1f64..5.0) {
        let pts: Vec<(f64, f64)> = (1..=40).map(|n| (n as f64, (n as f64).powf(-alpha))).collect();
        let fit = fit_decay(&pts).unwrap();
        let class = predict_mixing_class(&TailFit::Fitted(fit));
        match class {
            MixingClass::Polynomial { exponent } => prop_assert!((exponent - (alpha - 1.0)).abs() < 1e-8),
            other => prop_assert!(false, "{other:?}"),
        }
    }

    #[test]
    fn holonomy_is_multiplicative_inverse(seed in 0u64..500) {
        let sys = SystemSpec::ModifiedSolenoid { gamma: 0.5, bump: Default::default() }.build().unwrap();
        let c = HolonomyConstants::for_system(&sys).unwrap();
        let mut rng = ergolab::rng::stream(seed, 0);
        let p = sys.sample_uniform(&mut rng);
        let q = sys.sample_uniform(&mut rng);
        let (Point::Solid(a), Point::Solid(b)) = (p, q) else { unreachable!() };
        let q = Point::solid(a.theta, b.z.re, b.z.im);
        let fwd = holonomy_density(&sys, p, q, 12, &c).unwrap();
        let back = holonomy_density(&sys, q, p, 12, &c).unwrap();
        prop_assert!(fwd.value > 0.0);
        prop_assert!((fwd.value * back.value - 1.0).abs() < 1e-12);
    }
}
