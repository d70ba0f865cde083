use std::f64::consts::PI;
use std::sync::Arc;

use moverfv::mesh::{build_icosphere, snapshot};
use moverfv::motion::NormalField;
use moverfv::num::Vec3;
use moverfv::numflux::{NumericalFlux, Quadrature, ScalarFlux};
use moverfv::problems::{PinchSetup, Problem};
use moverfv::solver::{cfl_dt, EdgeFluxes, init_cell_averages, local_extrema_violation, mass_total, step, step_value_form, Simulation};
use moverfv::validate::exact::exact_tp1;
use moverfv::{CellState, FluxModel, MotionMap, SolverConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn problems() -> Vec<Problem<f64>> {
    vec![
        Problem::tp1(),
        Problem::tp2_projected(PinchSetup::default()).unwrap(),
        Problem::tp2_divfree(PinchSetup::default()).unwrap(),
    ]
}

fn simulate(p: &Problem<f64>, level: u32, config: &SolverConfig) -> moverfv::RunOutput {
    Simulation {
        mesh: p.mesh(level).unwrap(),
        motion: &p.motion,
        flux: &p.flux,
        initial: &*p.initial,
        config,
    }
    .run()
    .unwrap()
}

#[test]
fn mass_is_conserved_for_every_problem_and_flux() {
    for p in problems() {
        for kind in [NumericalFlux::EngquistOsher, NumericalFlux::LocalLaxFriedrichs] {
            let mut config = SolverConfig::new(p.t_end);
            config.numerical_flux = kind;
            let mesh = p.mesh(2).unwrap();
            let mut prev: Option<f64> = None;
            let out = Simulation {
                mesh,
                motion: &p.motion,
                flux: &p.flux,
                initial: &*p.initial,
                config: &config,
            }
            .run_with(|_, st| {
                let m = mass_total(st);
                if let Some(q) = prev {
                    assert!((m - q).abs() <= 1e-13 * q.abs(), "{} {kind}: {m} vs {q}", p.name);
                }
                prev = Some(m);
                Ok(())
            })
            .unwrap();
            assert!(out.report.relative_mass_drift() <= 1e-10);
            assert_eq!(out.report.final_time, p.t_end);
        }
    }
}

#[test]
fn zero_flux_on_shrinking_sphere_grows_like_exp_2t() {
    let mesh = Arc::new(build_icosphere(3).unwrap());
    let motion = MotionMap::shrinking_sphere();
    let flux = FluxModel::zero(NormalField::Radial);
    let u0 = |x: Vec3<f64>| 1.0 + x.x() * x.y() + 0.5 * x.z();
    let config = SolverConfig::new(0.5);
    let mut initial: Option<Vec<f64>> = None;
    Simulation {
        mesh,
        motion: &motion,
        flux: &flux,
        initial: &u0,
        config: &config,
    }
    .run_with(|_, st| {
        let base = initial.get_or_insert_with(|| st.values.clone());
        let g = (2.0 * st.time).exp();
        for (u, b) in st.values.iter().zip(base.iter()) {
            assert!((u - g * b).abs() <= 1e-12 * (g * b).abs());
        }
        Ok(())
    })
    .unwrap();
}

#[test]
fn mass_and_value_forms_agree() {
    let p = Problem::tp2_projected(PinchSetup::default()).unwrap();
    let mesh = p.mesh(3).unwrap();
    let config = SolverConfig::new(p.t_end);
    let s0 = snapshot(&mesh, &p.motion, 0.3).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let values: Vec<f64> = (0..s0.num_cells()).map(|_| rng.gen_range(0.0..1.0)).collect();
    let st = CellState::from_values(values, &s0, 0);
    let tau = cfl_dt(&st, &s0, &p.flux, &config).unwrap();
    let s1 = snapshot(&mesh, &p.motion, 0.3 + tau).unwrap();
    for kind in [NumericalFlux::EngquistOsher, NumericalFlux::LocalLaxFriedrichs] {
        let a = step(&st, &s0, &s1, &p.flux, tau, kind, config.quadrature).unwrap();
        let b = step_value_form(&st, &s0, &s1, &p.flux, tau, kind, config.quadrature).unwrap();
        for (x, y) in a.values.iter().zip(&b) {
            assert!((x - y).abs() <= 1e-13 * x.abs().max(1.0));
        }
    }
}

/// Per-cell discrete divergence `D_j = (1/V_j) Σ_e ±c_e'` of a linear flux.
fn discrete_divergence(flux: &FluxModel, s: &moverfv::MeshSnapshot) -> Vec<f64> {
    let fluxes = EdgeFluxes::build(flux, s, Quadrature::Midpoint).unwrap();
    let mesh = s.mesh();
    (0..s.num_cells())
        .map(|j| {
            let mut d = 0.0;
            for (e, &id) in mesh.cell_edges()[j].iter().enumerate() {
                let w = fluxes.edges[id].derivative(0.0).unwrap();
                let owner = mesh.edges()[id].owner;
                d += if owner.triangle == j && owner.local as usize == e { w } else { -w };
            }
            d / s.cell_measure[j]
        })
        .collect()
}

/// Under the CFL condition a linear monotone update is a convex combination
/// of neighborhood values scaled by `1 - τ D_j`, so values leave the
/// neighborhood range by at most `τ max|D| max|u|`.
#[test]
fn local_maximum_principle_up_to_discrete_divergence() {
    let mesh = Arc::new(build_icosphere(3).unwrap());
    let motion = MotionMap::identity();
    let flux = FluxModel::rotation_linear();
    let s = snapshot(&mesh, &motion, 0.0).unwrap();
    let max_div = discrete_divergence(&flux, &s).iter().fold(0.0f64, |m, d| m.max(d.abs()));
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let values: Vec<f64> = (0..s.num_cells()).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let config = SolverConfig::new(1.0);
    for kind in [NumericalFlux::EngquistOsher, NumericalFlux::LocalLaxFriedrichs] {
        let mut st = CellState::from_values(values.clone(), &s, 0);
        for _ in 0..50 {
            let s0 = snapshot(&mesh, &motion, st.time).unwrap();
            let tau = cfl_dt(&st, &s0, &flux, &config).unwrap();
            let s1 = snapshot(&mesh, &motion, st.time + tau).unwrap();
            let next = step(&st, &s0, &s1, &flux, tau, kind, config.quadrature).unwrap();
            let umax = st.values.iter().fold(0.0f64, |m, u| m.max(u.abs()));
            let v = local_extrema_violation(&mesh, &st.values, &next.values);
            assert!(v <= tau * max_div * umax + 1e-12, "{kind}: {v}");
            st = next;
        }
    }
}

/// The shared edge conormal does not close around a flat cell, so constants
/// drift at the rate of the discrete divergence, which shrinks under
/// refinement.
#[test]
fn discrete_divergence_of_rotation_shrinks_under_refinement() {
    let flux = FluxModel::rotation_linear();
    let mut prev = f64::INFINITY;
    for level in 2..=5 {
        let mesh = Arc::new(build_icosphere(level).unwrap());
        let s = snapshot(&mesh, &MotionMap::identity(), 0.0).unwrap();
        let worst = discrete_divergence(&flux, &s).iter().fold(0.0f64, |m, d| m.max(d.abs()));
        assert!(worst < prev, "level {level}: {worst}");
        prev = worst;
    }
}

#[test]
fn step_size_halves_with_mesh_width() {
    let p = Problem::tp1();
    let mut config = SolverConfig::new(p.t_end);
    config.tau_max = f64::INFINITY;
    let taus: Vec<f64> = (2..=5)
        .map(|level| {
            let mesh = p.mesh(level).unwrap();
            let s = snapshot(&mesh, &p.motion, 0.0).unwrap();
            let st = init_cell_averages(&*p.initial, &s);
            cfl_dt(&st, &s, &p.flux, &config).unwrap()
        })
        .collect();
    for w in taus.windows(2) {
        let r = w[0] / w[1];
        assert!((1.8..=2.2).contains(&r), "ratio {r}");
    }
}

#[test]
fn step_size_halves_when_burgers_range_doubles() {
    let p = Problem::tp2_projected(PinchSetup::default()).unwrap();
    let mesh = p.mesh(3).unwrap();
    let s = snapshot(&mesh, &p.motion, 0.0).unwrap();
    let mut config = SolverConfig::new(p.t_end);
    config.tau_max = f64::INFINITY;
    let st = init_cell_averages(&*p.initial, &s);
    let doubled = CellState::from_values(st.values.iter().map(|u| 2.0 * u).collect(), &s, 0);
    let r = cfl_dt(&st, &s, &p.flux, &config).unwrap() / cfl_dt(&doubled, &s, &p.flux, &config).unwrap();
    assert!((1.8..=2.2).contains(&r), "ratio {r}");
}

#[test]
fn zero_end_time_returns_initial_state_only() {
    let p = Problem::tp1();
    let out = simulate(&p, 1, &SolverConfig::new(0.0));
    assert_eq!(out.trajectory.len(), 1);
    assert_eq!(out.report.steps, 0);
}

#[test]
fn recorded_frames_follow_the_cadence() {
    let p = Problem::tp1();
    let mut config = SolverConfig::new(p.t_end);
    config.record_every = 10;
    let out = simulate(&p, 1, &config);
    let idx: Vec<usize> = out.trajectory.iter().map(|f| f.1.step_index).collect();
    assert_eq!(idx[0], 0);
    assert_eq!(*idx.last().unwrap(), out.report.steps);
    assert!(idx[1..idx.len() - 1].iter().all(|i| i % 10 == 0));
}

/// `∫_{Γ(t)} u(·, t)` for the rotating-band solution, by Gauss-Legendre in
/// θ over the band and exact breakpoints in φ.
fn exact_tp1_mass(t: f64) -> f64 {
    const N: usize = 64;
    let (nodes, weights) = gauss_legendre(N);
    let r2 = (-2.0 * t).exp();
    let shift = (2.0 * PI * (t.exp() - 1.0)).rem_euclid(2.0 * PI);
    let mut cuts = [0.0, shift, (shift + PI).rem_euclid(2.0 * PI), 2.0 * PI];
    cuts.sort_by(f64::total_cmp);
    let (a, b) = (PI / 3.0, 2.0 * PI / 3.0);
    let mut total = 0.0;
    for w in cuts.windows(2) {
        let (p0, p1) = (w[0], w[1]);
        if p1 - p0 < 1e-15 {
            continue;
        }
        for i in 0..N {
            let phi = 0.5 * (p0 + p1) + 0.5 * (p1 - p0) * nodes[i];
            for j in 0..N {
                let th = 0.5 * (a + b) + 0.5 * (b - a) * nodes[j];
                let f = exact_tp1(phi, th, t) * th.sin() * r2;
                total += weights[i] * weights[j] * 0.25 * (p1 - p0) * (b - a) * f;
            }
        }
    }
    total
}

fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                let (mut q0, mut q1) = (1.0, z);
                for k in 2..=n {
                    let q2 = ((2 * k - 1) as f64 * z * q1 - (k - 1) as f64 * q0) / k as f64;
                    q0 = q1;
                    q1 = q2;
                }
                let dq = n as f64 * (z * q1 - q0) / (z * z - 1.0);
                x[i] = z;
                w[i] = 2.0 / ((1.0 - z * z) * dq * dq);
                break;
            }
        }
    }
    (x, w)
}

#[test]
fn exact_rotating_band_keeps_its_mass() {
    let m0 = exact_tp1_mass(0.0);
    assert!(m0 > 0.0);
    for t in [0.3, 2f64.ln()] {
        let m = exact_tp1_mass(t);
        assert!((m - m0).abs() <= 1e-6 * m0, "t={t}: {m} vs {m0}");
    }
}

#[test]
fn runs_in_single_precision() {
    let p: Problem<f32> = Problem::tp1();
    let mut config = moverfv::solver::SolverConfig::<f32>::new(0.1);
    config.cfl_number = 0.4;
    let out = Simulation {
        mesh: p.mesh(2).unwrap(),
        motion: &p.motion,
        flux: &p.flux,
        initial: &*p.initial,
        config: &config,
    }
    .run()
    .unwrap();
    assert!(out.last().1.is_finite());
    assert!(out.report.relative_mass_drift() < 1e-5);
    assert!(out.report.max_value <= (0.2f32).exp() + 1e-3);
}

#[test]
fn results_do_not_depend_on_thread_count() {
    let p = Problem::tp2_divfree(PinchSetup::default()).unwrap();
    let mut config = SolverConfig::new(0.3);
    config.record_every = 1;
    let go = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| simulate(&p, 3, &config))
    };
    let (a, b) = (go(1), go(4));
    assert_eq!(a.trajectory.len(), b.trajectory.len());
    for (x, y) in a.trajectory.iter().zip(&b.trajectory) {
        assert_eq!(x.1, y.1);
    }
}
