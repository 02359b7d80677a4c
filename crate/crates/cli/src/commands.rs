//! Subcommand bodies. Each returns its CSV tables and a JSON summary for
//! the manifest; nothing touches the file system here.

use anyhow::{bail, Result};
use ergolab::basins::{agreement_scan, build_reference, GridSpec, ReferenceConfig, Tolerances};
use ergolab::cocycle::{generate_orbit, iterate, sampled_lyapunov, trace, trace_from, Field};
use ergolab::hyptimes::{
    hyperbolic_times, inverse_hyperbolic_times, pliss_times, reverse_hyperbolic_times, TimeSet,
};
use ergolab::mixing::{
    correlation_class, estimate_correlation, fit_decay, fit_tail, holonomy_density,
    predict_mixing_class, srb_mean, tail_histogram, CorrelationConfig, DecayModel,
    HolonomyConstants, TailFit,
};
use ergolab::observables::default_battery;
use ergolab::rng::stream;
use ergolab::schedules::{block_theorem_check, BlockConfig};
use ergolab::systems::System;
use ergolab::{Point, SystemKind};
use rand::Rng;
use serde_json::{json, Value};

use crate::config::{observable, Config, ConfigInvalid};
use crate::output::{b, f, Table};

pub struct RunOutput {
    pub tables: Vec<Table>,
    pub summary: Value,
}

fn coord_names(kind: SystemKind) -> &'static [&'static str] {
    match kind {
        SystemKind::IntermittentCircle => &["x"],
        SystemKind::CatMap | SystemKind::DerivedAnosovT2 => &["x1", "x2"],
        SystemKind::Solenoid | SystemKind::ModifiedSolenoid => &["theta", "re_z", "im_z"],
    }
}

/// Start of the single-orbit subcommands: stream `(seed, 0)`, pushed
/// forward `burn_in` times.
fn orbit_start(sys: &System, cfg: &Config) -> Point {
    let mut rng = stream(cfg.seed, 0);
    iterate(sys, sys.sample_uniform(&mut rng), cfg.burn_in)
}

pub fn orbit(sys: &System, cfg: &Config) -> Result<RunOutput> {
    let o = generate_orbit(sys, orbit_start(sys, cfg), cfg.horizon)?;
    let t = trace(sys, &o);
    let mut header = vec!["i"];
    header.extend_from_slice(coord_names(sys.kind()));
    header.extend_from_slice(&["phi_cs", "phi_cu", "j_cu"]);
    let mut table = Table::new("orbit", "orbit.csv", &header)?;
    for (i, p) in o.points.iter().enumerate() {
        let mut row = vec![i.to_string()];
        row.extend(p.coords().into_iter().map(f));
        row.extend([f(t.phi_cs[i]), f(t.phi_cu[i]), f(t.j_cu[i])]);
        table.row(row)?;
    }
    Ok(RunOutput {
        tables: vec![table],
        summary: json!({ "points": o.len() }),
    })
}

pub fn lyapunov(sys: &System, cfg: &Config) -> Result<RunOutput> {
    let mut table = Table::new(
        "lyapunov",
        "lyapunov.csv",
        &["field", "value", "stderr", "horizon", "orbits", "analytic"],
    )?;
    let mut summary = serde_json::Map::new();
    for (name, field) in [("cs", Field::Cs), ("cu", Field::Cu), ("j_cu", Field::JCu)] {
        let e = sampled_lyapunov(sys, field, cfg.orbits, cfg.burn_in, cfg.horizon, cfg.seed)?;
        let analytic = match field {
            Field::Cu => sys.analytic_cu_exponent().map(f).unwrap_or_default(),
            _ => String::new(),
        };
        table.row([
            name.to_string(),
            f(e.value),
            f(e.stderr),
            e.horizon.to_string(),
            e.orbits.to_string(),
            analytic,
        ])?;
        summary.insert(name.into(), json!(e.value));
    }
    Ok(RunOutput {
        tables: vec![table],
        summary: Value::Object(summary),
    })
}

pub fn pliss(sys: &System, cfg: &Config) -> Result<RunOutput> {
    let (t, _) = trace_from(sys, orbit_start(sys, cfg), cfg.horizon)?;
    let a: Vec<f64> = t.phi_cu.iter().map(|v| -v).collect();
    let c2 = cfg.c_u;
    let c1 = cfg.pliss_c1.unwrap_or(c2 / 2.0);
    let l = sys.phibar_cu();
    let (times, theta) = pliss_times(&a, c1, c2, l)?;
    let mut table = Table::new("pliss", "pliss.csv", &["n", "a", "pliss"])?;
    for (i, v) in a.iter().enumerate() {
        table.row([(i + 1).to_string(), f(*v), b(times.contains(i + 1)).into()])?;
    }
    let n = a.len() as f64;
    Ok(RunOutput {
        tables: vec![table],
        summary: json!({
            "c1": c1, "c2": c2, "L": l, "theta": theta,
            "count": times.len(),
            "guaranteed": theta * n,
            "hypothesis_holds": a.iter().sum::<f64>() >= c2 * n,
        }),
    })
}

pub fn hyptimes(sys: &System, cfg: &Config) -> Result<RunOutput> {
    let (t, _) = trace_from(sys, orbit_start(sys, cfg), cfg.horizon)?;
    let ineq = cfg.inequality();
    let (su, ss) = (cfg.sigma_u(), cfg.sigma_cs());
    let hyp = hyperbolic_times(&t, su, ineq)?;
    let inv = inverse_hyperbolic_times(&t, ss, ineq)?;
    let rev = reverse_hyperbolic_times(&t, ss, t.len(), ineq)?;
    let mut table = Table::new(
        "hyptimes",
        "hyptimes.csv",
        &["n", "phi_cu", "phi_cs", "hyperbolic", "inverse", "reverse"],
    )?;
    // phi and reverse times live on 0..H, forward times on 1..=H
    let flag = |set: &TimeSet, n: usize, ok: bool| if ok { b(set.contains(n)) } else { "" };
    let len = t.len();
    for n in 0..=len {
        let (cu, cs) = if n < len {
            (f(t.phi_cu[n]), f(t.phi_cs[n]))
        } else {
            (String::new(), String::new())
        };
        table.row([
            n.to_string(),
            cu,
            cs,
            flag(&hyp, n, n >= 1).into(),
            flag(&inv, n, n >= 1).into(),
            flag(&rev, n, n < len).into(),
        ])?;
    }
    Ok(RunOutput {
        tables: vec![table],
        summary: json!({
            "sigma_u": su, "sigma_s": ss, "strict": cfg.strict,
            "hyperbolic": hyp.len(), "inverse": inv.len(), "reverse": rev.len(),
        }),
    })
}

pub fn tail(sys: &System, cfg: &Config) -> Result<RunOutput> {
    let h = tail_histogram(sys, cfg.c_u, cfg.horizon, cfg.samples, cfg.seed)?;
    let mut table = Table::new("tail", "tail.csv", &["n", "frac", "stderr", "censored"])?;
    for i in 0..h.n_grid.len() {
        table.row([h.n_grid[i].to_string(), f(h.frac[i]), f(h.stderr[i]), f(h.censored)])?;
    }
    let fit = fit_tail(&h)?;
    let mut fits = Table::new(
        "fits",
        "fits.csv",
        &["model", "slope", "alpha", "c", "stretch", "log_prefactor", "r_squared", "chosen"],
    )?;
    match &fit {
        TailFit::Degenerate => {
            fits.row(["degenerate", "", "", "", "", "", "", "true"])?;
        }
        TailFit::Fitted(d) => {
            let p = d.polynomial;
            let s = d.stretched;
            fits.row([
                "polynomial".into(),
                f(-p.alpha),
                f(p.alpha),
                String::new(),
                String::new(),
                f(p.log_c),
                f(p.r_squared),
                b(d.chosen == DecayModel::Polynomial).into(),
            ])?;
            fits.row([
                "stretched-exponential".into(),
                String::new(),
                String::new(),
                f(s.c),
                f(s.alpha_stretch),
                f(s.log_a),
                f(s.r_squared),
                b(d.chosen == DecayModel::Exponential).into(),
            ])?;
        }
    }
    Ok(RunOutput {
        tables: vec![table, fits],
        summary: json!({
            "censored": h.censored,
            "fit": fit,
            "predicted_mixing_class": predict_mixing_class(&fit),
        }),
    })
}

pub fn correlate(sys: &System, cfg: &Config) -> Result<RunOutput> {
    let phi = observable("phi", &cfg.phi)?;
    let psi = observable("psi", &cfg.psi)?;
    let cc = CorrelationConfig {
        n_max: cfg.n_max,
        samples: cfg.samples,
        burn_in: cfg.burn_in,
        seed: cfg.seed,
        batches: cfg.batches,
    };
    let c = estimate_correlation(sys, &phi, &psi, &cc)?;
    let mut table = Table::new("correlate", "correlation.csv", &["n", "cov", "cor", "stderr"])?;
    for i in 0..c.n_grid.len() {
        table.row([c.n_grid[i].to_string(), f(c.cov[i]), f(c.cor[i]), f(c.stderr[i])])?;
    }
    // burn-in stability of the SRB surrogate
    let (m1, s1) = srb_mean(sys, &phi, cfg.burn_in, cfg.samples, cfg.seed)?;
    let (m2, s2) = srb_mean(sys, &phi, 2 * cfg.burn_in, cfg.samples, cfg.seed)?;
    let pts: Vec<(f64, f64)> = c.n_grid.iter().zip(&c.cor).skip(1).map(|(n, v)| (*n as f64, *v)).collect();
    let class = fit_decay(&pts).ok().map(|d| correlation_class(&d));
    Ok(RunOutput {
        tables: vec![table],
        summary: json!({
            "phi": c.phi, "psi": c.psi,
            "burn_in_stability": {
                "burn_in": cfg.burn_in, "mean": m1, "stderr": s1,
                "double_burn_in_mean": m2, "double_burn_in_stderr": s2,
            },
            "fitted_class": class,
        }),
    })
}

pub fn block(sys: &System, cfg: &Config) -> Result<RunOutput> {
    let j_max = cfg.block_js.iter().copied().max().unwrap_or(0);
    if cfg.burn_in < j_max {
        return Err(ConfigInvalid {
            field: "burn_in".into(),
            message: format!("block needs burn_in >= max(block_js) = {j_max}"),
        }
        .into());
    }
    let sigma = cfg.sigma_u();
    let ineq = cfg.inequality();
    let det = move |t: &ergolab::cocycle::CocycleTrace| {
        hyperbolic_times(t, sigma, ineq).expect("sigma validated")
    };
    let bc = BlockConfig {
        samples: cfg.samples,
        burn_in: cfg.burn_in,
        horizon: cfg.horizon,
        seed: cfg.seed,
    };
    let rows = block_theorem_check(sys, &det, &cfg.block_js, &bc)?;
    let mut table = Table::new(
        "block",
        "block.csv",
        &[
            "j", "mu_block", "mu_stderr", "d_plus", "d_stderr", "combined_stderr", "z", "samples",
            "horizon",
        ],
    )?;
    for r in &rows {
        let se = r.combined_stderr();
        let z = if se > 0.0 { (r.mu_block - r.d_plus) / se } else { 0.0 };
        table.row([
            r.j.to_string(),
            f(r.mu_block),
            f(r.mu_stderr),
            f(r.d_plus),
            f(r.d_stderr),
            f(se),
            f(z),
            r.samples.to_string(),
            r.horizon.to_string(),
        ])?;
    }
    Ok(RunOutput {
        tables: vec![table],
        summary: json!({ "sigma": sigma, "strict": cfg.strict }),
    })
}

pub fn basin(sys: &System, cfg: &Config) -> Result<RunOutput> {
    let rc = ReferenceConfig {
        burn_in: cfg.ref_burn_in,
        length: cfg.ref_length,
        cloud_size: cfg.cloud_size,
        seed: cfg.seed,
    };
    let reference = build_reference(sys, &default_battery(sys.kind()), &rc)?;
    let grid = match sys.kind() {
        SystemKind::IntermittentCircle => GridSpec::Circle { n: cfg.grid_points },
        SystemKind::CatMap | SystemKind::DerivedAnosovT2 => {
            let side = ((cfg.grid_points as f64).sqrt().round() as usize).max(1);
            GridSpec::Torus { n1: side, n2: side }
        }
        SystemKind::Solenoid | SystemKind::ModifiedSolenoid => {
            GridSpec::Solid { points: cfg.grid_points }
        }
    };
    let points = grid.points();
    let n = cfg.horizon;
    let mut tol = Tolerances::default_for(&reference, n);
    tol.ergodic = cfg.tol_ergodic.unwrap_or(tol.ergodic);
    tol.geometric = cfg.tol_geometric.unwrap_or(tol.geometric);
    tol.topological = cfg.tol_topological.unwrap_or(tol.topological);
    let report = agreement_scan(sys, &points, &reference, n, &tol);
    let mut header = coord_names(sys.kind()).to_vec();
    header.extend_from_slice(&[
        "ergodic",
        "geometric",
        "topological",
        "max_deviation",
        "final_distance",
        "tail_distance",
    ]);
    let mut table = Table::new("basin", "basin.csv", &header)?;
    for (p, v) in points.iter().zip(&report.verdicts) {
        let mut row: Vec<String> = p.coords().into_iter().map(f).collect();
        row.extend([
            b(v.ergodic).into(),
            b(v.geometric).into(),
            b(v.topological).into(),
            f(v.max_deviation),
            f(v.final_distance),
            f(v.tail_distance),
        ]);
        table.row(row)?;
    }
    Ok(RunOutput {
        tables: vec![table],
        summary: json!({
            "n": n,
            "points": report.points,
            "tolerances": tol,
            "reference": {
                "values": reference.values, "stderr": reference.stderr,
                "battery": reference.battery.iter().map(|o| o.id()).collect::<Vec<_>>(),
            },
            "frac_ergodic": report.frac_ergodic,
            "frac_geometric": report.frac_geometric,
            "frac_topological": report.frac_topological,
            "agree_ergodic_geometric": report.agree_ergodic_geometric,
            "agree_ergodic_topological": report.agree_ergodic_topological,
            "agree_geometric_topological": report.agree_geometric_topological,
            "sym_diff_ergodic_geometric": report.sym_diff_ergodic_geometric,
            "note": "basin equalities hold up to null sets; a finite grid reports agreement fractions, not equality",
        }),
    })
}

pub fn holonomy(sys: &System, cfg: &Config) -> Result<RunOutput> {
    if !matches!(sys, System::Solenoid(_)) {
        return Err(ConfigInvalid {
            field: "system".into(),
            message: "holonomy needs solenoid or modified-solenoid".into(),
        }
        .into());
    }
    let mut consts = HolonomyConstants::for_system(sys)?;
    consts.c_j = cfg.holonomy_c_j.unwrap_or(consts.c_j);
    consts.eta = cfg.holonomy_eta.unwrap_or(consts.eta);
    consts.sigma_s = cfg.holonomy_sigma_s.unwrap_or(consts.sigma_s);
    let mut table = Table::new(
        "holonomy",
        "holonomy.csv",
        &[
            "pair", "theta", "z1_re", "z1_im", "z2_re", "z2_im", "fiber_distance", "n", "rho_n",
            "rho_2n", "remainder_bound", "within_bound",
        ],
    )?;
    let mut within = 0usize;
    let mut total = 0usize;
    for i in 0..cfg.holonomy_pairs {
        let mut rng = stream(cfg.seed, i as u64);
        let (th, za, zb) = match sys.bump() {
            Some(bump) => {
                let (r_t, r_z) = (bump.params.theta_radius, bump.params.z_scale);
                let (t0, z0) = bump.centers[i % 2];
                let mut z = || {
                    z0 + num_complex::Complex64::new(rng.gen_range(-r_z..r_z), rng.gen_range(-r_z..r_z))
                };
                let (za, zb) = (z(), z());
                (t0 + rng.gen_range(-r_t..r_t), za, zb)
            }
            None => {
                let mut z = || {
                    let r = 0.7 * rng.gen::<f64>().sqrt();
                    num_complex::Complex64::from_polar(r, std::f64::consts::TAU * rng.gen::<f64>())
                };
                let (za, zb) = (z(), z());
                (rng.gen::<f64>(), za, zb)
            }
        };
        let x = Point::solid(th, za.re, za.im);
        let y = Point::solid(th, zb.re, zb.im);
        let Point::Solid(px) = x else { bail!("solid point expected") };
        for &n in &cfg.truncations {
            let a = holonomy_density(sys, x, y, n, &consts)?;
            let c = holonomy_density(sys, x, y, 2 * n, &consts)?;
            let ok = (a.value - c.value).abs() <= a.remainder_bound;
            within += ok as usize;
            total += 1;
            table.row([
                i.to_string(),
                f(px.theta),
                f(za.re),
                f(za.im),
                f(zb.re),
                f(zb.im),
                f((za - zb).norm()),
                n.to_string(),
                f(a.value),
                f(c.value),
                f(a.remainder_bound),
                b(ok).into(),
            ])?;
        }
    }
    Ok(RunOutput {
        tables: vec![table],
        summary: json!({ "constants": consts, "within_bound": within, "rows": total }),
    })
}
