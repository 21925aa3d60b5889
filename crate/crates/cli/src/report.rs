//! Plain-text run report.
//!
//! Everything above the timing section depends only on the configuration
//! and inputs, so two single-threaded runs agree on it byte for byte.

use std::fmt::Write as _;
use std::path::Path;
use std::time::Duration;

use nsmpb_core::mesh::ValidationReport;
use nsmpb_core::post::SolutionBundle;
use nsmpb_core::solver::StageTimings;

use crate::config::RunConfig;

/// First line of the timing section.
pub const TIMINGS_HEADING: &str = "Timings (wall clock, seconds)";

pub fn solve_report(config_path: &Path, cfg: &RunConfig, mesh: &ValidationReport, bundle: &SolutionBundle) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "nsmpb solve report");
    let _ = writeln!(s, "config: {}", config_path.display());
    let _ = writeln!(s, "model: {}", cfg.model);
    let _ = writeln!(s);
    let _ = writeln!(s, "Overrides");
    if cfg.overrides.is_empty() {
        let _ = writeln!(s, "  (none)");
    }
    for (k, v) in &cfg.overrides {
        let _ = writeln!(s, "  {k} = {v}");
    }
    let _ = writeln!(s);
    let _ = writeln!(s, "Mesh data");
    s.push_str(&mesh.to_text());
    let _ = writeln!(s);

    let sol = &bundle.solvent;
    let _ = writeln!(s, "Solvent");
    let _ = writeln!(s, "  {:<8} {:>3} {:>12} {:>10} {:>12}", "species", "Z", "c_b (mol/L)", "radius (A)", "volume (A^3)");
    for sp in &sol.species {
        let _ = writeln!(
            s,
            "  {:<8} {:>3} {:>12.6} {:>10.4} {:>12.4}",
            sp.name, sp.charge_number, sp.bulk_concentration, sp.radius, sp.volume
        );
    }
    let _ = writeln!(
        s,
        "  eps_p {}, eps_s {}, eps_inf {}, lambda {} A",
        sol.eps_p, sol.eps_s, sol.eps_inf, sol.lambda
    );
    let _ = writeln!(
        s,
        "  v_bar {:.6} A^3, v0 {:.6} A^3, kappa^2 {:.6e}, Upsilon {:.6e}",
        sol.v_bar, sol.v0, sol.kappa_sq, sol.upsilon
    );
    let c = &sol.constants;
    let _ = writeln!(
        s,
        "  alpha {:.8}, beta {:.8}, gamma {:.8e}, T {} K",
        c.alpha, c.beta, c.gamma, c.temperature
    );
    let _ = writeln!(s);

    let _ = writeln!(s, "Newton iteration");
    match &bundle.trace {
        None => {
            let _ = writeln!(s, "  linear model, no Newton iteration");
        }
        Some(trace) => {
            let selection = trace.selection().map_or_else(|| "-".to_string(), |v| v.to_string());
            let _ = writeln!(s, "  converged: {}", if trace.converged() { "yes" } else { "no" });
            let _ = writeln!(s, "  initial iterate selection: {selection}");
            let _ = writeln!(s, "  iterations: {}", trace.iterations());
            let _ = writeln!(s, "  restarts: {}", trace.restarts());
            if let (Some(first), Some(last)) = (trace.residual_history().first(), trace.final_residual()) {
                let _ = writeln!(s, "  residual: {first:.6e} -> {last:.6e}");
            }
        }
    }
    let undefined = bundle.u.iter().filter(|v| !v.is_finite()).count();
    if undefined > 0 {
        let _ = writeln!(s, "  u undefined at {undefined} vertex(es) on an atom center");
    }
    let _ = writeln!(s);
    s.push_str(&timing_table(&bundle.timings));
    s
}

/// Stage timings in the usual performance-table layout: mesh generation,
/// the singular kernels, the Psi solve, the initial iterate, the Newton
/// iteration and the total.
pub fn timing_table(t: &StageTimings) -> String {
    let secs = |d: Duration| format!("{:.2}", d.as_secs_f64());
    let mesh = t.mesh.map_or_else(|| "-".to_string(), secs);
    let mut s = String::new();
    let _ = writeln!(s, "{TIMINGS_HEADING}");
    let _ = writeln!(
        s,
        "{:>10} | {:>22} | {:>10} | {:>12} | {:>10} | {:>10}",
        "Generate", "Calculate G, Ghat,", "Find Psi", "Find Phi~(0)", "Find Phi~", "Total"
    );
    let _ = writeln!(
        s,
        "{:>10} | {:>22} | {:>10} | {:>12} | {:>10} | {:>10}",
        "mesh", "grad G, grad Ghat", "", "", "", "CPU time"
    );
    let _ = writeln!(
        s,
        "{:>10} | {:>22} | {:>10} | {:>12} | {:>10} | {:>10}",
        mesh,
        secs(t.kernels),
        secs(t.psi),
        secs(t.initial),
        secs(t.newton),
        secs(t.total)
    );
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn timing_table_has_one_column_per_stage() {
        let t = StageTimings {
            mesh: Some(Duration::from_millis(1090)),
            kernels: Duration::from_millis(50),
            psi: Duration::from_millis(120),
            initial: Duration::from_millis(120),
            newton: Duration::from_millis(1630),
            total: Duration::from_millis(5040),
        };
        let text = timing_table(&t);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], TIMINGS_HEADING);
        let values: Vec<&str> = lines[3].split('|').map(str::trim).collect();
        assert_eq!(values, ["1.09", "0.05", "0.12", "0.12", "1.63", "5.04"]);
    }

    #[test]
    fn missing_mesh_time_is_a_dash() {
        let text = timing_table(&StageTimings::default());
        assert!(text.lines().nth(3).unwrap().trim_start().starts_with("- |"));
    }
}
