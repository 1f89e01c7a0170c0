//! Deterministic CSV renderings of run, walk and sweep results.
//!
//! Floats are written with 17 significant digits so a table round-trips to
//! the same `f64` values.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::executor::RunTrace;
use crate::planner::SweepRow;
use crate::state;
use crate::walk::TrialRecord;

/// `x` in scientific notation with 17 significant digits.
pub fn float(x: f64) -> String {
    format!("{x:.16e}")
}

fn render(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<String> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    let io = |e: csv::Error| Error::InvalidArgument(format!("csv: {e}"));
    w.write_record(header).map_err(io)?;
    for row in rows {
        w.write_record(&row).map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::InvalidArgument(format!("csv: {e}")))?;
    String::from_utf8(bytes).map_err(|e| Error::InvalidArgument(format!("csv: {e}")))
}

/// One row per stochastic run. Fidelity is against `reference_state` and left
/// empty for incomplete runs.
pub fn batch_csv(traces: &[RunTrace], reference_state: &[Complex64]) -> Result<String> {
    render(
        &[
            "seed",
            "completed",
            "attempts",
            "attempts_cap",
            "faults",
            "correction_queries",
            "basic_queries",
            "recursive_steps",
            "fidelity",
        ],
        traces.iter().map(|t| {
            vec![
                t.seed.to_string(),
                t.completed.to_string(),
                t.attempts_used.to_string(),
                t.attempts_cap.to_string(),
                t.total_faults.to_string(),
                t.correction_queries.to_string(),
                t.basic_queries.to_string(),
                t.recursive_measurement_steps.to_string(),
                if t.completed {
                    float(state::fidelity(&t.final_state, reference_state))
                } else {
                    String::new()
                },
            ]
        }),
    )
}

pub fn walk_csv(records: &[TrialRecord]) -> Result<String> {
    render(
        &["trial", "attempts", "queries", "recursive_steps", "faults", "exceeded_cap"],
        records.iter().map(|r| {
            vec![
                r.trial.to_string(),
                r.attempts.to_string(),
                r.queries.to_string(),
                r.recursive_steps.to_string(),
                r.faults.to_string(),
                r.exceeded_cap.to_string(),
            ]
        }),
    )
}

/// Sweep rows with an optional measured operator error each.
pub fn sweep_csv(rows: &[(SweepRow, Option<f64>)]) -> Result<String> {
    render(
        &[
            "eps",
            "r",
            "gamma",
            "m",
            "k1",
            "eps1",
            "segments",
            "attempts_cap",
            "queries_total",
            "measured_error",
        ],
        rows.iter().map(|(row, measured)| {
            vec![
                float(row.eps),
                row.r.to_string(),
                float(row.gamma),
                row.m.to_string(),
                row.k1.to_string(),
                float(row.eps1),
                row.num_segments.to_string(),
                row.attempts_cap.to_string(),
                row.queries_total.to_string(),
                measured.map(float).unwrap_or_default(),
            ]
        }),
    )
}
