//! Plain-text run reports: one `key: value` line per entry.

use std::fmt::Write as _;

use moverfv::RunReport;

use crate::config::RunConfiguration;

pub fn render_report(config: &RunConfiguration, cells: usize, report: &RunReport) -> String {
    let mut s = String::new();
    let mut line = |k: &str, v: String| {
        let _ = writeln!(s, "{k}: {v}");
    };
    line("problem", config.problem.name().into());
    line("mesh level", config.level.to_string());
    line("cells", cells.to_string());
    line("numerical flux", config.solver.numerical_flux.to_string());
    line("quadrature", config.solver.quadrature.to_string());
    line(
        "step rule",
        format!(
            "cfl {} with tau_max {:e} (CFL-based reconstruction; the method fixes no step rule)",
            config.solver.cfl_number, config.solver.tau_max
        ),
    );
    line("steps", report.steps.to_string());
    line("final time", format!("{:.16e}", report.final_time));
    line("tau min", format!("{:e}", report.tau_min));
    line("tau max", format!("{:e}", report.tau_max));
    line("min value", format!("{:.16e}", report.min_value));
    line("max value", format!("{:.16e}", report.max_value));
    line("initial mass", format!("{:.16e}", report.initial_mass));
    line("final mass", format!("{:.16e}", report.final_mass));
    line("mass drift", format!("{:e} (relative)", report.relative_mass_drift()));
    s
}

/// Value of `key` in a rendered report.
pub fn report_value<'a>(text: &'a str, key: &str) -> Option<&'a str> {
    text.lines()
        .find_map(|l| l.split_once(": ").filter(|(k, _)| *k == key).map(|(_, v)| v))
}
