//! The invariant suite behind the `validate` command. Every check is
//! deterministic: sample points come from low-discrepancy sequences rather
//! than a random generator.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use moverfv::flux::{discrete_divergence_check, Potential};
use moverfv::mesh::{build_icosphere, check_manifold, snapshot};
use moverfv::motion::{NormalField, PinchParams};
use moverfv::numflux::{edge_flux_function, numerical_flux_eo, Quadrature, ScalarFlux};
use moverfv::problems::{PinchSetup, Problem};
use moverfv::solver::Simulation;
use moverfv::validate::eoc::eoc;
use moverfv::validate::oracle::{
    burgers_entropy_residuals, constant_state_defect, linear_transport_errors, vanishing_viscosity_distances,
    ORACLE_CFL,
};
use moverfv::{FluxModel, MotionMap, SolverConfig, Vec3};

use crate::error::CliResult;

/// Outcome of one named check.
#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Check {
            name: name.into(),
            passed,
            detail: detail.into(),
        }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let verdict = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "{verdict} {}: {}", self.name, self.detail)
    }
}

/// Weyl sequence `frac(i * alpha)`, used as a deterministic sampler.
fn weyl(i: usize, alpha: f64) -> f64 {
    (i as f64 * alpha).fract()
}

/// Fibonacci point `i` of `n` on the unit sphere.
fn sphere_point(i: usize, n: usize) -> Vec3<f64> {
    let z = 1.0 - 2.0 * (i as f64 + 0.5) / n as f64;
    let r = (1.0 - z * z).max(0.0).sqrt();
    let phi = i as f64 * PI * (3.0 - 5f64.sqrt());
    Vec3::new(r * phi.cos(), r * phi.sin(), z)
}

const ALPHA_T: f64 = 0.618_033_988_749_894_9;
const ALPHA_U: f64 = 0.414_213_562_373_095_1;
const ALPHA_V: f64 = 0.732_050_807_568_877_3;
const ALPHA_D: f64 = 0.236_067_977_499_789_7;

fn pinch_motion() -> CliResult<MotionMap> {
    Ok(MotionMap::pinching_ellipsoid(PinchParams::with_end_time(
        PinchSetup::<f64>::DEFAULT_END_TIME,
    ))?)
}

/// The three built-in flux models, each paired with the motion it runs on.
fn flux_cases() -> CliResult<Vec<(FluxModel, MotionMap)>> {
    let pinch = pinch_motion()?;
    let normal = pinch.normal_field();
    Ok(vec![
        (FluxModel::rotation_linear(), MotionMap::shrinking_sphere()),
        (
            FluxModel::projected_burgers(Vec3::axis(0), 1.0, normal.clone())?,
            pinch.clone(),
        ),
        (FluxModel::potential_divfree(Potential::default_vertical(), normal), pinch),
    ])
}

/// The built-in problems with their default end times.
pub fn builtin_problems() -> CliResult<Vec<Problem<f64>>> {
    Ok(vec![
        Problem::tp1(),
        Problem::tp2_projected(PinchSetup::default())?,
        Problem::tp2_divfree(PinchSetup::default())?,
    ])
}

/// Icospheres up to `max_level` are closed manifolds whose area increases
/// toward 4π.
pub fn mesh_check(max_level: u32) -> CliResult<Check> {
    let mut prev = 0.0;
    let mut ok = true;
    let mut area = 0.0;
    for level in 0..=max_level {
        let mesh = Arc::new(build_icosphere::<f64>(level)?);
        ok &= check_manifold(&mesh).passed();
        area = snapshot(&mesh, &MotionMap::identity(), 0.0)?.total_area();
        ok &= area > prev && area < 4.0 * PI;
        prev = area;
    }
    Ok(Check::new(
        "icosphere manifolds",
        ok,
        format!("levels 0..={max_level}, area {area:.6} < 4pi"),
    ))
}

/// Relative mass drift of every built-in problem run to `t_end` (or its
/// default end time) at `level`.
pub fn conservation_check(level: u32, t_end: Option<f64>, tol: f64) -> CliResult<Check> {
    let mut worst: f64 = 0.0;
    let mut names = Vec::new();
    for p in builtin_problems()? {
        let config = SolverConfig::new(t_end.unwrap_or(p.t_end));
        let out = Simulation {
            mesh: p.mesh(level)?,
            motion: &p.motion,
            flux: &p.flux,
            initial: &*p.initial,
            config: &config,
        }
        .run()
        .map_err(|f| f.error)?;
        worst = worst.max(out.report.relative_mass_drift());
        names.push(p.name);
    }
    Ok(Check::new(
        "discrete conservation",
        worst <= tol,
        format!("{} at level {level}: max relative drift {worst:.3e} (tol {tol:e})", names.join(", ")),
    ))
}

/// Zero flux on the shrinking sphere: `u_j(t) = e^{2t} u_j(0)` at every step.
pub fn homothety_check(level: u32, t_end: f64, tol: f64) -> CliResult<Check> {
    let mesh = Arc::new(build_icosphere(level)?);
    let motion = MotionMap::shrinking_sphere();
    let flux = FluxModel::zero(NormalField::Radial);
    let u0 = |x: Vec3<f64>| 1.0 + x.x() * x.y() + 0.5 * x.z();
    let config = SolverConfig::new(t_end);
    let mut initial: Option<Vec<f64>> = None;
    let mut worst: f64 = 0.0;
    let out = Simulation {
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
            worst = worst.max((u - g * b).abs() / (g * b).abs());
        }
        Ok(())
    })
    .map_err(|f| f.error)?;
    Ok(Check::new(
        "shrinking sphere homothety",
        worst <= tol,
        format!("{} steps, max relative deviation {worst:.3e} (tol {tol:e})", out.report.steps),
    ))
}

/// Tangency of the built-in fluxes at `samples` surface points per flux.
pub fn tangency_check(samples: usize, tol: f64) -> CliResult<Check> {
    let mut worst: f64 = 0.0;
    for (flux, motion) in flux_cases()? {
        for i in 0..samples {
            let t = 1.5 * weyl(i, ALPHA_T);
            let u = 4.0 * weyl(i, ALPHA_U) - 2.0;
            let x = motion.evaluate(motion.place_on_reference(sphere_point(i, samples)), t)?;
            let f = flux.eval(x, t, u)?;
            worst = worst.max(f.dot(flux.normal(x, t)).abs());
        }
    }
    Ok(Check::new(
        "flux tangency",
        worst <= tol,
        format!("{samples} points per flux, max |f.n| {worst:.3e} (tol {tol:e})"),
    ))
}

/// Engquist-Osher consistency, monotonicity and edge antisymmetry on the
/// edges of a level-2 mesh at `t = 0.5`.
pub fn engquist_osher_checks(samples: usize, consistency_tol: f64) -> CliResult<Vec<Check>> {
    let mut consistency: f64 = 0.0;
    let mut monotone_violations = 0usize;
    let mut antisymmetry_violations = 0usize;
    for (flux, motion) in flux_cases()? {
        let mesh = Arc::new(motion.reference_mesh(&build_icosphere(2)?)?);
        let s = snapshot(&mesh, &motion, 0.5)?;
        let edges = s
            .mesh()
            .edges()
            .iter()
            .zip(&s.shared_conormal)
            .map(|(e, &nu)| {
                let (a, b) = (s.vertices[e.vertices[0]], s.vertices[e.vertices[1]]);
                Ok((
                    edge_flux_function(&flux, a, b, nu, s.time, Quadrature::Gauss2)?,
                    edge_flux_function(&flux, a, b, -nu, s.time, Quadrature::Gauss2)?,
                ))
            })
            .collect::<moverfv::Result<Vec<_>>>()?;
        for i in 0..samples {
            let (c, twin) = &edges[(weyl(i, ALPHA_T) * edges.len() as f64) as usize];
            let u = 4.0 * weyl(i, ALPHA_U) - 2.0;
            let v = 4.0 * weyl(i, ALPHA_V) - 2.0;
            let du = weyl(i, ALPHA_D);
            let g = numerical_flux_eo(c, u, v)?;
            consistency = consistency.max((numerical_flux_eo(c, u, u)? - c.value(u)?).abs());
            if numerical_flux_eo(c, u + du, v)? < g || numerical_flux_eo(c, u, v + du)? > g {
                monotone_violations += 1;
            }
            if numerical_flux_eo(twin, v, u)? != -g {
                antisymmetry_violations += 1;
            }
        }
    }
    Ok(vec![
        Check::new(
            "EO consistency",
            consistency <= consistency_tol,
            format!("max |g(u,u) - c(u)| {consistency:.3e} (tol {consistency_tol:e})"),
        ),
        Check::new(
            "EO monotonicity",
            monotone_violations == 0,
            format!("{monotone_violations} violations in {samples} samples per flux"),
        ),
        Check::new(
            "EO edge antisymmetry",
            antisymmetry_violations == 0,
            format!("{antisymmetry_violations} inexact pairs in {samples} samples per flux"),
        ),
    ])
}

/// Worst cell residual of the potential flux divergence decreases over the
/// given levels.
pub fn divergence_check(levels: &[u32]) -> CliResult<Check> {
    let f = FluxModel::potential_divfree(Potential::default_vertical(), NormalField::Radial);
    let mut residuals = Vec::with_capacity(levels.len());
    for &level in levels {
        let mesh = Arc::new(build_icosphere(level)?);
        let s = snapshot(&mesh, &MotionMap::identity(), 0.0)?;
        let r = discrete_divergence_check(&f, &s, 1.0, 0.0)?;
        residuals.push(
            r.iter()
                .zip(&s.cell_measure)
                .map(|(x, v)| (x / v).abs())
                .fold(0.0, f64::max),
        );
    }
    let ok = residuals.windows(2).all(|w| w[1] < w[0]);
    Ok(Check::new(
        "potential flux divergence residual",
        ok,
        format!("levels {levels:?}: {}", fmt_list(&residuals)),
    ))
}

fn fmt_list(xs: &[f64]) -> String {
    xs.iter().map(|x| format!("{x:.3e}")).collect::<Vec<_>>().join(", ")
}

/// The one-dimensional oracle suite.
pub fn oracle_checks() -> CliResult<Vec<Check>> {
    let ns = [64usize, 128, 256, 512, 1024];
    let e = linear_transport_errors(&ns, ORACLE_CFL)?;
    let orders: Vec<f64> = (1..ns.len())
        .map(|i| eoc((1.0 / ns[i - 1] as f64, e[i - 1]), (1.0 / ns[i] as f64, e[i])))
        .collect();
    let mut defect: f64 = 0.0;
    for c in [0.8, 1.0, 3.0] {
        defect = defect.max(constant_state_defect(64, c, 1.0)?);
    }
    let r = burgers_entropy_residuals(&[128, 256, 512], 0.5, ORACLE_CFL)?;
    let d = vanishing_viscosity_distances(512, &[1e-2, 1e-3, 1e-4], 0.5, ORACLE_CFL)?;
    Ok(vec![
        Check::new(
            "1D linear transport EOC",
            orders.iter().all(|&o| o >= 0.8),
            format!("n=64..1024: {}", orders.iter().map(|o| format!("{o:.3}")).collect::<Vec<_>>().join(", ")),
        ),
        Check::new(
            "1D constant state",
            defect <= 1e-14,
            format!("max defect {defect:.3e} (tol 1e-14)"),
        ),
        Check::new(
            "1D entropy residual",
            r.windows(2).all(|w| w[1] < w[0]) && r.iter().all(|&x| x >= 0.0),
            format!("n=128,256,512: {}", fmt_list(&r)),
        ),
        Check::new(
            "1D vanishing viscosity",
            d.windows(2).all(|w| w[1] < w[0]),
            format!("n=512, eps=1e-2,1e-3,1e-4: {}", fmt_list(&d)),
        ),
    ])
}

/// The suite run by `validate`: small meshes and short runs so it finishes
/// in seconds.
pub fn validation_suite() -> CliResult<Vec<Check>> {
    let mut checks = vec![
        mesh_check(4)?,
        conservation_check(2, None, 1e-10)?,
        homothety_check(3, 0.5, 1e-12)?,
        tangency_check(10_000, 1e-12)?,
    ];
    checks.extend(engquist_osher_checks(10_000, 1e-10)?);
    checks.push(divergence_check(&[2, 3, 4, 5])?);
    checks.extend(oracle_checks()?);
    Ok(checks)
}

