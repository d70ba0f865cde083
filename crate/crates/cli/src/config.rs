//! Run configuration: a TOML document walked key by key so that every error
//! names the offending key.

use std::path::PathBuf;

use moverfv::motion::PinchParams;
use moverfv::numflux::{NumericalFlux, Quadrature};
use moverfv::problems::{PinchSetup, Problem};
use moverfv::{SolverConfig, Vec3};
use toml::{Table, Value};

use crate::error::{CliError, CliResult};

/// Which built-in problem to run.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ProblemKind {
    Tp1,
    Tp2Projected,
    Tp2Divfree,
    Custom,
}

impl ProblemKind {
    pub fn name(self) -> &'static str {
        match self {
            ProblemKind::Tp1 => "tp1",
            ProblemKind::Tp2Projected => "tp2_projected",
            ProblemKind::Tp2Divfree => "tp2_divfree",
            ProblemKind::Custom => "custom",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MotionKind {
    Identity,
    ShrinkingSphere,
    PinchingEllipsoid,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FluxKind {
    RotationLinear,
    ProjectedBurgers,
    PotentialDivfree,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum InitialKind {
    RotatingBand,
    Tp2,
    Constant(f64),
}

#[derive(Clone, Debug, PartialEq)]
pub struct MotionConfig {
    pub kind: MotionKind,
    pub pinch: PinchParams<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FluxConfig {
    pub kind: FluxKind,
    pub direction: [f64; 3],
    pub strength: f64,
    /// `c` in the potential `h = c x3 u^2`.
    pub potential_coefficient: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OutputConfig {
    pub dir: PathBuf,
    /// Write a VTK frame every this many steps; 0 disables the series.
    pub vtk_every: usize,
}

/// A validated run configuration with defaults filled in.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfiguration {
    pub problem: ProblemKind,
    pub level: u32,
    pub motion: MotionConfig,
    pub flux: FluxConfig,
    pub initial: InitialKind,
    pub solver: SolverConfig,
    pub output: OutputConfig,
}

const DEFAULT_LEVEL: u32 = 3;

const KNOWN: &[(&str, &[&str])] = &[
    ("", &["problem", "mesh", "motion", "flux", "initial", "solver", "output"]),
    ("mesh", &["level"]),
    (
        "motion",
        &["kind", "semi_axes", "pinch_amplitude", "pinch_width"],
    ),
    (
        "flux",
        &["kind", "direction", "strength", "potential_coefficient"],
    ),
    ("initial", &["kind", "value"]),
    (
        "solver",
        &["t_end", "cfl", "numerical_flux", "quadrature", "tau_max"],
    ),
    ("output", &["dir", "vtk_every"]),
];

fn err(key: &str, msg: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("{key}: {msg}"))
}

struct Doc {
    root: Table,
}

impl Doc {
    fn table(&self, name: &str) -> CliResult<Option<&Table>> {
        match self.root.get(name) {
            None => Ok(None),
            Some(Value::Table(t)) => Ok(Some(t)),
            Some(other) => Err(err(name, format!("expected a table, found {}", other.type_str()))),
        }
    }

    fn get(&self, key: &str) -> CliResult<Option<&Value>> {
        match key.split_once('.') {
            None => Ok(self.root.get(key)),
            Some((section, leaf)) => Ok(self.table(section)?.and_then(|t| t.get(leaf))),
        }
    }

    fn has(&self, key: &str) -> bool {
        matches!(self.get(key), Ok(Some(_)))
    }

    fn string(&self, key: &str) -> CliResult<Option<&str>> {
        match self.get(key)? {
            None => Ok(None),
            Some(Value::String(s)) => Ok(Some(s)),
            Some(v) => Err(err(key, format!("expected a string, found {}", v.type_str()))),
        }
    }

    fn float(&self, key: &str) -> CliResult<Option<f64>> {
        match self.get(key)? {
            None => Ok(None),
            Some(Value::Float(x)) => Ok(Some(*x)),
            Some(Value::Integer(i)) => Ok(Some(*i as f64)),
            Some(v) => Err(err(key, format!("expected a number, found {}", v.type_str()))),
        }
    }

    fn integer(&self, key: &str) -> CliResult<Option<i64>> {
        match self.get(key)? {
            None => Ok(None),
            Some(Value::Integer(i)) => Ok(Some(*i)),
            Some(v) => Err(err(key, format!("expected an integer, found {}", v.type_str()))),
        }
    }

    fn vec3(&self, key: &str) -> CliResult<Option<[f64; 3]>> {
        match self.get(key)? {
            None => Ok(None),
            Some(Value::Array(a)) if a.len() == 3 => {
                let mut out = [0.0; 3];
                for (slot, v) in out.iter_mut().zip(a) {
                    *slot = match v {
                        Value::Float(x) => *x,
                        Value::Integer(i) => *i as f64,
                        other => return Err(err(key, format!("expected numbers, found {}", other.type_str()))),
                    };
                }
                Ok(Some(out))
            }
            Some(v) => Err(err(key, format!("expected an array of 3 numbers, found {v}"))),
        }
    }

    fn check_unknown(&self) -> CliResult<()> {
        for (key, value) in &self.root {
            if !KNOWN[0].1.contains(&key.as_str()) {
                return Err(err(key, "unknown key"));
            }
            let allowed = KNOWN.iter().find(|(s, _)| s == key).map(|(_, a)| *a);
            if let (Some(allowed), Value::Table(t)) = (allowed, value) {
                if let Some(leaf) = t.keys().find(|leaf| !allowed.contains(&leaf.as_str())) {
                    return Err(err(&format!("{key}.{leaf}"), "unknown key"));
                }
            }
        }
        Ok(())
    }
}

fn parse_problem(s: &str) -> CliResult<ProblemKind> {
    Ok(match s {
        "tp1" => ProblemKind::Tp1,
        "tp2_projected" => ProblemKind::Tp2Projected,
        "tp2_divfree" => ProblemKind::Tp2Divfree,
        "custom" => ProblemKind::Custom,
        other => {
            return Err(err(
                "problem",
                format!("unknown problem '{other}' (expected tp1, tp2_projected, tp2_divfree or custom)"),
            ))
        }
    })
}

fn parse_motion_kind(s: &str) -> CliResult<MotionKind> {
    Ok(match s {
        "identity" => MotionKind::Identity,
        "shrinking_sphere" => MotionKind::ShrinkingSphere,
        "pinching_ellipsoid" => MotionKind::PinchingEllipsoid,
        other => return Err(err("motion.kind", format!("unknown motion '{other}'"))),
    })
}

fn parse_flux_kind(s: &str) -> CliResult<FluxKind> {
    Ok(match s {
        "rotation_linear" => FluxKind::RotationLinear,
        "projected_burgers" => FluxKind::ProjectedBurgers,
        "potential_divfree" => FluxKind::PotentialDivfree,
        other => return Err(err("flux.kind", format!("unknown flux '{other}'"))),
    })
}

fn parse_initial(doc: &Doc) -> CliResult<Option<InitialKind>> {
    let Some(kind) = doc.string("initial.kind")? else {
        if doc.has("initial.value") {
            return Err(err("initial.value", "only valid with initial.kind = \"constant\""));
        }
        return Ok(None);
    };
    Ok(Some(match kind {
        "rotating_band" => InitialKind::RotatingBand,
        "tp2" => InitialKind::Tp2,
        "constant" => InitialKind::Constant(
            doc.float("initial.value")?
                .ok_or_else(|| err("initial.value", "required for a constant initial state"))?,
        ),
        other => return Err(err("initial.kind", format!("unknown initial state '{other}'"))),
    }))
}

/// Parses and validates a configuration document.
pub fn parse_config(text: &str) -> CliResult<RunConfiguration> {
    let root: Table = text
        .parse()
        .map_err(|e: toml::de::Error| CliError::Config(format!("malformed configuration: {}", e.message())))?;
    let doc = Doc { root };
    doc.check_unknown()?;

    let problem = parse_problem(doc.string("problem")?.ok_or_else(|| err("problem", "missing"))?)?;

    let level = match doc.integer("mesh.level")? {
        None => DEFAULT_LEVEL,
        Some(l) if (0..=moverfv::mesh::MAX_ICOSPHERE_LEVEL as i64).contains(&l) => l as u32,
        Some(l) => {
            return Err(err(
                "mesh.level",
                format!("{l} outside [0, {}]", moverfv::mesh::MAX_ICOSPHERE_LEVEL),
            ))
        }
    };

    let (default_motion, default_flux, default_initial, default_t_end) = match problem {
        ProblemKind::Tp1 => (
            MotionKind::ShrinkingSphere,
            FluxKind::RotationLinear,
            InitialKind::RotatingBand,
            Some(2f64.ln()),
        ),
        ProblemKind::Tp2Projected => (
            MotionKind::PinchingEllipsoid,
            FluxKind::ProjectedBurgers,
            InitialKind::Tp2,
            Some(PinchSetup::<f64>::DEFAULT_END_TIME),
        ),
        ProblemKind::Tp2Divfree => (
            MotionKind::PinchingEllipsoid,
            FluxKind::PotentialDivfree,
            InitialKind::Tp2,
            Some(PinchSetup::<f64>::DEFAULT_END_TIME),
        ),
        ProblemKind::Custom => (
            MotionKind::Identity,
            FluxKind::RotationLinear,
            InitialKind::Constant(1.0),
            None,
        ),
    };

    let custom = problem == ProblemKind::Custom;
    let motion_kind = match doc.string("motion.kind")?.map(parse_motion_kind).transpose()? {
        Some(k) if !custom && k != default_motion => {
            return Err(err(
                "motion.kind",
                format!("problem {} fixes the motion; only custom problems choose it", problem.name()),
            ))
        }
        Some(k) => k,
        None => default_motion,
    };
    let flux_kind = match doc.string("flux.kind")?.map(parse_flux_kind).transpose()? {
        Some(k) if !custom && k != default_flux => {
            return Err(err(
                "flux.kind",
                format!("problem {} fixes the flux; only custom problems choose it", problem.name()),
            ))
        }
        Some(k) => k,
        None => default_flux,
    };
    let initial = match parse_initial(&doc)? {
        Some(_) if !custom => {
            return Err(err(
                "initial.kind",
                format!("problem {} fixes the initial state", problem.name()),
            ))
        }
        Some(i) => i,
        None => default_initial,
    };

    let solver_t_end = doc.float("solver.t_end")?;
    let t_end = match solver_t_end.or(default_t_end) {
        Some(t) if t > 0.0 && t.is_finite() => t,
        Some(t) => return Err(err("solver.t_end", format!("must be positive, got {t}"))),
        None => return Err(err("solver.t_end", "required for custom problems")),
    };

    let mut pinch = PinchParams::with_end_time(t_end);
    if let Some(a) = doc.vec3("motion.semi_axes")? {
        pinch.semi_axes = a;
    }
    if let Some(b) = doc.float("motion.pinch_amplitude")? {
        pinch.pinch_amplitude = b;
    }
    if let Some(w) = doc.float("motion.pinch_width")? {
        pinch.pinch_width = w;
    }
    let pinching = motion_kind == MotionKind::PinchingEllipsoid;
    for key in ["motion.semi_axes", "motion.pinch_amplitude", "motion.pinch_width"] {
        if doc.has(key) && !pinching {
            return Err(err(key, "only valid for the pinching ellipsoid"));
        }
    }
    if pinching {
        moverfv::motion::MotionMap::pinching_ellipsoid(pinch).map_err(|e| CliError::Config(e.to_string()))?;
    }

    let mut flux = FluxConfig {
        kind: flux_kind,
        direction: [1.0, 0.0, 0.0],
        strength: 1.0,
        potential_coefficient: -20.0,
    };
    if let Some(d) = doc.vec3("flux.direction")? {
        let n = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
        if !((n - 1.0).abs() <= 1e-12) {
            return Err(err("flux.direction", format!("must be a unit vector, |a| = {n}")));
        }
        flux.direction = d;
    }
    if let Some(s) = doc.float("flux.strength")? {
        if !s.is_finite() {
            return Err(err("flux.strength", "must be finite"));
        }
        flux.strength = s;
    }
    for key in ["flux.direction", "flux.strength"] {
        if doc.has(key) && flux_kind != FluxKind::ProjectedBurgers {
            return Err(err(key, "only valid for the projected Burgers flux"));
        }
    }
    if let Some(c) = doc.float("flux.potential_coefficient")? {
        if !custom {
            return Err(err("flux.potential_coefficient", "fixed by the problem; only custom problems set it"));
        }
        if flux_kind != FluxKind::PotentialDivfree {
            return Err(err("flux.potential_coefficient", "only valid for the potential flux"));
        }
        flux.potential_coefficient = c;
    }

    let mut solver = SolverConfig::new(t_end);
    if let Some(c) = doc.float("solver.cfl")? {
        solver.cfl_number = c;
    }
    if let Some(s) = doc.string("solver.numerical_flux")? {
        solver.numerical_flux = s.parse::<NumericalFlux>().map_err(|_| {
            err(
                "solver.numerical_flux",
                format!("unknown numerical flux '{s}' (expected engquist_osher or local_lax_friedrichs)"),
            )
        })?;
    }
    if let Some(s) = doc.string("solver.quadrature")? {
        solver.quadrature = s
            .parse::<Quadrature>()
            .map_err(|_| err("solver.quadrature", format!("unknown quadrature '{s}' (expected midpoint or gauss2)")))?;
    }
    if let Some(t) = doc.float("solver.tau_max")? {
        solver.tau_max = t;
    }
    solver.validate().map_err(|e| match e {
        moverfv::Error::Config(m) => CliError::Config(m),
        other => CliError::Config(other.to_string()),
    })?;

    let output = OutputConfig {
        dir: PathBuf::from(doc.string("output.dir")?.unwrap_or("out")),
        vtk_every: match doc.integer("output.vtk_every")? {
            None => 0,
            Some(n) if n >= 0 => n as usize,
            Some(n) => return Err(err("output.vtk_every", format!("must be >= 0, got {n}"))),
        },
    };

    Ok(RunConfiguration {
        problem,
        level,
        motion: MotionConfig { kind: motion_kind, pinch },
        flux,
        initial,
        solver,
        output,
    })
}

impl RunConfiguration {
    /// The problem described by this configuration.
    pub fn build_problem(&self) -> CliResult<Problem<f64>> {
        use moverfv::flux::{FluxModel, Potential};
        use moverfv::motion::MotionMap;
        use std::sync::Arc;

        let setup = PinchSetup {
            pinch: self.motion.pinch,
            strength: self.flux.strength,
            direction: Vec3(self.flux.direction),
        };
        let problem = match self.problem {
            ProblemKind::Tp1 => {
                let mut p = Problem::tp1();
                p.t_end = self.solver.t_end;
                p
            }
            ProblemKind::Tp2Projected => Problem::tp2_projected(setup)?,
            ProblemKind::Tp2Divfree => Problem::tp2_divfree(setup)?,
            ProblemKind::Custom => {
                let motion = match self.motion.kind {
                    MotionKind::Identity => MotionMap::identity(),
                    MotionKind::ShrinkingSphere => MotionMap::shrinking_sphere(),
                    MotionKind::PinchingEllipsoid => MotionMap::pinching_ellipsoid(self.motion.pinch)?,
                };
                let normal = motion.normal_field();
                let flux = match self.flux.kind {
                    FluxKind::RotationLinear => FluxModel::rotation_linear(),
                    FluxKind::ProjectedBurgers => {
                        FluxModel::projected_burgers(Vec3(self.flux.direction), self.flux.strength, normal)?
                    }
                    FluxKind::PotentialDivfree => FluxModel::potential_divfree(
                        Potential::vertical_quadratic(self.flux.potential_coefficient),
                        normal,
                    ),
                };
                let initial: moverfv::problems::ScalarField<f64> = match self.initial {
                    InitialKind::RotatingBand => Arc::new(moverfv::validate::exact::tp1_initial),
                    InitialKind::Tp2 => Arc::new(moverfv::validate::tp2_initial),
                    InitialKind::Constant(c) => Arc::new(move |_| c),
                };
                Problem {
                    name: "custom",
                    motion,
                    flux,
                    initial,
                    t_end: self.solver.t_end,
                    exact: None,
                }
            }
        };
        Ok(problem)
    }
}
