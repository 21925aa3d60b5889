use std::io::Write;

use super::PostError;
use crate::solver::NewtonTrace;

/// One row per Newton step of every attempt, preceded by an iteration-0 row
/// holding the initial residual. Columns: selection, iteration, absolute
/// residual, relative residual, difference norm, omega, auxiliary residual
/// and GMRES iterations. Missing values are empty.
pub fn write_trace_csv<W: Write>(trace: &NewtonTrace, w: W) -> Result<(), PostError> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record([
        "selection",
        "iteration",
        "abs_residual",
        "rel_residual",
        "diff_norm",
        "omega",
        "aux_residual",
        "gmres_iterations",
    ])?;
    let e = |v: f64| format!("{v:.16e}");
    for attempt in &trace.attempts {
        let sel = attempt.selection.to_string();
        let rel0 = if attempt.initial_residual > 0.0 { 1.0 } else { 0.0 };
        out.write_record([sel.as_str(), "0", &e(attempt.initial_residual), &e(rel0), "", "", "", ""])?;
        for r in &attempt.records {
            out.write_record([
                sel.clone(),
                r.iteration.to_string(),
                e(r.abs_residual),
                e(r.rel_residual),
                e(r.diff_norm),
                e(r.omega),
                r.aux_residual.map(e).unwrap_or_default(),
                r.linear.iterations.to_string(),
            ])?;
        }
    }
    out.flush()?;
    Ok(())
}
