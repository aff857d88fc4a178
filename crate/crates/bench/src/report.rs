//! JSON reports and CSV traces for single solves.

use std::io::Write;

use mtaar_core::problems::ProblemInstance;
use mtaar_core::SolveReport;
use serde::Serialize;

#[derive(Debug, Serialize)]
pub struct ProblemSummary {
    pub label: String,
    pub order: usize,
    pub dim: usize,
    pub stopping: String,
    pub tol: f64,
}

/// Top-level document written by `solve`.
#[derive(Debug, Serialize)]
pub struct RunDocument<'a> {
    pub problem: ProblemSummary,
    pub report: &'a SolveReport<f64>,
}

impl<'a> RunDocument<'a> {
    pub fn new(instance: &ProblemInstance<f64>, tol: f64, report: &'a SolveReport<f64>) -> Self {
        Self {
            problem: ProblemSummary {
                label: instance.label.clone(),
                order: instance.order(),
                dim: instance.dim(),
                stopping: instance.stopping.to_string(),
                tol,
            },
            report,
        }
    }
}

/// `iter,residual,cumulative_flops,wall_ms`, one row per history entry.
pub fn write_trace<W: Write>(report: &SolveReport<f64>, w: W) -> anyhow::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["iter", "residual", "cumulative_flops", "wall_ms"])?;
    for (k, res) in report.residual_history.iter().enumerate() {
        out.write_record([
            k.to_string(),
            res.to_string(),
            report.cumulative_flops[k].to_string(),
            format!("{:.3}", report.elapsed_ms[k]),
        ])?;
    }
    out.flush()?;
    Ok(())
}

/// One value per line.
pub fn write_solution<W: Write>(x: &[f64], mut w: W) -> anyhow::Result<()> {
    for v in x {
        writeln!(w, "{v}")?;
    }
    Ok(())
}

pub fn read_solution(text: &str) -> anyhow::Result<Vec<f64>> {
    text.split_whitespace()
        .map(|t| {
            t.parse::<f64>()
                .map_err(|_| anyhow::anyhow!("bad number `{t}` in solution file"))
        })
        .collect()
}
