//! Experiment suites: each runs a grid of (instance, method) cells, in
//! parallel, and checks the results against the bands in `bands.toml`.

use std::fs;
use std::path::Path;
use std::str::FromStr;
use std::sync::Arc;

use mtaar_core::problems::{
    appendix_example61, appendix_problem3, gen_gravity_default, gen_random_mtensor, gen_sine_symmetric,
    parabola_deviation, ProblemInstance,
};
use mtaar_core::{solve, Method, PrecondKind, SolveReport};
use rayon::prelude::*;
use serde::Serialize;

use crate::bands::Bands;

pub const SUITES: [&str; 7] = ["table2", "table3", "table4", "table5", "table6", "fig1", "gravity"];

/// Shrunk random grid used by default.
pub const DESK_GRID: [(usize, usize); 4] = [(3, 50), (3, 100), (4, 20), (5, 10)];
/// Full-size random grid.
pub const FULL_GRID: [(usize, usize); 7] = [(3, 200), (3, 400), (3, 600), (4, 50), (4, 100), (5, 20), (5, 40)];
/// Diagonal shift parameter of the random grid.
pub const GRID_EPSILON: f64 = 0.01;

#[derive(Debug, Clone)]
pub struct SuiteOptions {
    pub full: bool,
    pub jobs: Option<usize>,
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteRow {
    pub suite: String,
    pub instance: String,
    pub method: String,
    pub precond: String,
    pub iter: usize,
    pub res: f64,
    pub cpu_s: f64,
    pub flops: u64,
    pub converged: bool,
    pub band: String,
    pub pass: bool,
    pub note: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct TraceRow {
    pub instance: String,
    pub method: String,
    pub iter: usize,
    pub cumulative_flops: u64,
    pub residual: f64,
}

#[derive(Debug, Clone)]
pub struct SuiteOutcome {
    pub name: String,
    pub rows: Vec<SuiteRow>,
    pub traces: Vec<TraceRow>,
}

impl SuiteOutcome {
    pub fn all_pass(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }

    /// Writes `<name>.csv` and, when there are traces, `<name>_trace.csv`.
    pub fn write(&self, dir: &Path) -> anyhow::Result<()> {
        fs::create_dir_all(dir)?;
        let mut w = csv::Writer::from_path(dir.join(format!("{}.csv", self.name)))?;
        for row in &self.rows {
            w.serialize(row)?;
        }
        w.flush()?;
        if !self.traces.is_empty() {
            let mut w = csv::Writer::from_path(dir.join(format!("{}_trace.csv", self.name)))?;
            for row in &self.traces {
                w.serialize(row)?;
            }
            w.flush()?;
        }
        Ok(())
    }
}

struct Cell {
    instance: Arc<ProblemInstance<f64>>,
    method: Method,
    precond: PrecondKind,
}

struct Done {
    instance: Arc<ProblemInstance<f64>>,
    method: Method,
    precond: PrecondKind,
    result: Result<SolveReport<f64>, String>,
}

impl Done {
    fn report(&self) -> Option<&SolveReport<f64>> {
        self.result.as_ref().ok()
    }

    fn iterations(&self) -> Option<usize> {
        self.report().filter(|r| r.converged).map(|r| r.iterations)
    }

    fn row(&self, suite: &str, band: String, pass: bool, note: String) -> SuiteRow {
        let (iter, res, cpu_s, flops, converged, note) = match &self.result {
            Ok(r) => (
                r.iterations,
                r.final_stopping_value(),
                r.wall_time_s,
                *r.cumulative_flops.last().unwrap(),
                r.converged,
                note,
            ),
            Err(e) => (0, f64::NAN, 0.0, 0, false, format!("error: {e}")),
        };
        SuiteRow {
            suite: suite.to_string(),
            instance: self.instance.label.clone(),
            method: self.method.name().to_string(),
            precond: if self.method.uses_preconditioner() {
                self.precond.to_string()
            } else {
                "-".into()
            },
            iter,
            res,
            cpu_s,
            flops,
            converged,
            band,
            pass,
            note,
        }
    }
}

fn run_cells(cells: Vec<Cell>, jobs: Option<usize>) -> anyhow::Result<Vec<Done>> {
    let work = || {
        cells
            .into_par_iter()
            .map(|c| {
                let cfg = c.instance.config(c.method).with_precond(c.precond);
                let result = solve(&c.instance.a, &c.instance.b, &cfg).map_err(|e| e.to_string());
                Done {
                    instance: c.instance,
                    method: c.method,
                    precond: c.precond,
                    result,
                }
            })
            .collect()
    };
    match jobs {
        Some(j) => Ok(rayon::ThreadPoolBuilder::new()
            .num_threads(j.max(1))
            .build()?
            .install(work)),
        None => Ok(work()),
    }
}

fn grid(opts: &SuiteOptions) -> anyhow::Result<Vec<Arc<ProblemInstance<f64>>>> {
    let shapes: &[(usize, usize)] = if opts.full { &FULL_GRID } else { &DESK_GRID };
    shapes
        .iter()
        .map(|&(m, n)| Ok(Arc::new(gen_random_mtensor(m, n, GRID_EPSILON, opts.seed)?)))
        .collect()
}

fn methods(names: &[String]) -> anyhow::Result<Vec<Method>> {
    names.iter().map(|s| Method::from_str(s).map_err(Into::into)).collect()
}

fn cells_for(instances: &[Arc<ProblemInstance<f64>>], plan: &[(Method, PrecondKind)]) -> Vec<Cell> {
    instances
        .iter()
        .flat_map(|inst| {
            plan.iter().map(move |&(method, precond)| Cell {
                instance: inst.clone(),
                method,
                precond,
            })
        })
        .collect()
}

fn converged_within(d: &Done, max: usize) -> bool {
    d.iterations().is_some_and(|k| k <= max)
}

/// Runs suite `name` with the given bands.
pub fn run_suite_with(name: &str, opts: &SuiteOptions, bands: &Bands) -> anyhow::Result<SuiteOutcome> {
    let mut traces = Vec::new();
    let rows = match name {
        "table2" => {
            let plan = [PrecondKind::Pf, PrecondKind::Pgs, PrecondKind::Pj].map(|p| (Method::Taar, p));
            let max = bands.table2.taar_max_iter;
            run_cells(cells_for(&grid(opts)?, &plan), opts.jobs)?
                .iter()
                .map(|d| {
                    d.row(
                        name,
                        format!("converged, iter<={max}"),
                        converged_within(d, max),
                        String::new(),
                    )
                })
                .collect()
        }
        "table3" => {
            let t3 = &bands.table3;
            let mut plan = vec![(Method::Taar, PrecondKind::Pf)];
            plan.extend(methods(&t3.baselines)?.into_iter().map(|m| (m, PrecondKind::Pf)));
            let done = run_cells(cells_for(&grid(opts)?, &plan), opts.jobs)?;
            done.chunks(plan.len())
                .flat_map(|chunk| {
                    let taar = &chunk[0];
                    let taar_iter = taar.iterations();
                    let mut rows = vec![taar.row(
                        name,
                        format!("converged, iter<={}", t3.taar_max_iter),
                        converged_within(taar, t3.taar_max_iter),
                        String::new(),
                    )];
                    for d in &chunk[1..] {
                        let row = match taar_iter {
                            Some(k) => {
                                let floor = (t3.baseline_min_ratio * k as f64).ceil() as usize;
                                let floor = if opts.full {
                                    floor.max(t3.full_baseline_min_iter)
                                } else {
                                    floor
                                };
                                let pass = d.iterations().is_some_and(|k| k >= floor);
                                d.row(name, format!("converged, iter>={floor}"), pass, String::new())
                            }
                            None => d.row(name, "taar reference missing".into(), false, String::new()),
                        };
                        rows.push(row);
                    }
                    rows
                })
                .collect()
        }
        "table4" => {
            let t4 = &bands.table4;
            let instances =
                t4.n.iter()
                    .map(|&n| Ok(Arc::new(gen_sine_symmetric(n)?)))
                    .collect::<anyhow::Result<Vec<_>>>()?;
            let plan = [(Method::Taar, PrecondKind::Pf), (Method::Newton, PrecondKind::Pf)];
            let done = run_cells(cells_for(&instances, &plan), opts.jobs)?;
            done.chunks(2)
                .enumerate()
                .flat_map(|(i, pair)| {
                    let (tmax, nmax) = (t4.taar_max_iter[i], t4.newton_max_iter[i]);
                    [
                        pair[0].row(
                            name,
                            format!("converged, iter<={tmax}"),
                            converged_within(&pair[0], tmax),
                            String::new(),
                        ),
                        pair[1].row(
                            name,
                            format!("converged, iter<={nmax}"),
                            converged_within(&pair[1], nmax),
                            String::new(),
                        ),
                    ]
                })
                .collect()
        }
        "table5" => {
            let inst = Arc::new(appendix_problem3());
            let plan = [(Method::J2, bands.table5.j2), (Method::Gs2, bands.table5.gs2)];
            let cells = plan
                .iter()
                .map(|&(method, _)| Cell {
                    instance: inst.clone(),
                    method,
                    precond: PrecondKind::Pf,
                })
                .collect();
            run_cells(cells, opts.jobs)?
                .iter()
                .zip(plan)
                .map(|(d, (_, w))| {
                    let pass = d.iterations().is_some_and(|k| w.contains(k));
                    d.row(name, format!("converged, iter in {w}"), pass, String::new())
                })
                .collect()
        }
        "table6" => {
            let inst = Arc::new(appendix_example61(opts.seed)?);
            let plan = [(Method::Gs3, bands.table6.gs3), (Method::Fullm, bands.table6.fullm)];
            let cells = plan
                .iter()
                .map(|&(method, _)| Cell {
                    instance: inst.clone(),
                    method,
                    precond: PrecondKind::Pf,
                })
                .collect();
            run_cells(cells, opts.jobs)?
                .iter()
                .zip(plan)
                .map(|(d, (_, w))| {
                    let pass = d.iterations().is_some_and(|k| w.contains(k));
                    d.row(name, format!("converged, iter in {w}"), pass, String::new())
                })
                .collect()
        }
        "fig1" => {
            let shapes: &[(usize, usize)] = if opts.full {
                &[(3, 200), (3, 400), (4, 100)]
            } else {
                &[(3, 100), (3, 200)]
            };
            let instances = shapes
                .iter()
                .map(|&(m, n)| Ok(Arc::new(gen_random_mtensor(m, n, GRID_EPSILON, opts.seed)?)))
                .collect::<anyhow::Result<Vec<_>>>()?;
            let mut plan = vec![(Method::Taar, PrecondKind::Pf)];
            plan.extend(
                methods(&bands.fig1.baselines)?
                    .into_iter()
                    .map(|m| (m, PrecondKind::Pf)),
            );
            let done = run_cells(cells_for(&instances, &plan), opts.jobs)?;
            for d in &done {
                if let Some(r) = d.report() {
                    for (k, (&res, &fl)) in r.residual_history.iter().zip(&r.cumulative_flops).enumerate() {
                        traces.push(TraceRow {
                            instance: d.instance.label.clone(),
                            method: d.method.name().to_string(),
                            iter: k,
                            cumulative_flops: fl,
                            residual: res,
                        });
                    }
                }
            }
            done.chunks(plan.len())
                .flat_map(|chunk| {
                    let taar_flops = chunk[0]
                        .report()
                        .filter(|r| r.converged)
                        .map(|r| *r.cumulative_flops.last().unwrap());
                    let beats_all = taar_flops.is_some_and(|tf| {
                        chunk[1..].iter().all(|d| {
                            d.report()
                                .is_some_and(|r| !r.converged || *r.cumulative_flops.last().unwrap() > tf)
                        })
                    });
                    let mut rows = vec![chunk[0].row(name, "converged, fewest flops".into(), beats_all, String::new())];
                    for d in &chunk[1..] {
                        let pass = match (taar_flops, d.report()) {
                            (Some(tf), Some(r)) => !r.converged || *r.cumulative_flops.last().unwrap() > tf,
                            _ => false,
                        };
                        rows.push(d.row(name, "more flops than taar".into(), pass, String::new()));
                    }
                    rows
                })
                .collect()
        }
        "gravity" => {
            let g = &bands.gravity;
            let inst = Arc::new(gen_gravity_default(g.n)?);
            let cells = vec![Cell {
                instance: inst.clone(),
                method: Method::Taar,
                precond: PrecondKind::Pf,
            }];
            run_cells(cells, opts.jobs)?
                .iter()
                .map(|d| {
                    let dev = d
                        .report()
                        .and_then(|r| parabola_deviation(&inst, &r.solution, g.surface_gravity).ok());
                    let pass = d.iterations().is_some() && dev.is_some_and(|v| v <= g.max_parabola_deviation);
                    let note = dev.map_or_else(String::new, |v| format!("parabola_deviation={v:e}"));
                    d.row(
                        name,
                        format!("converged, deviation<={}", g.max_parabola_deviation),
                        pass,
                        note,
                    )
                })
                .collect()
        }
        _ => anyhow::bail!("unknown suite `{name}` (expected one of {})", SUITES.join(", ")),
    };
    Ok(SuiteOutcome {
        name: name.to_string(),
        rows,
        traces,
    })
}

/// Runs suite `name` against the bundled bands.
pub fn run_suite(name: &str, opts: &SuiteOptions) -> anyhow::Result<SuiteOutcome> {
    run_suite_with(name, opts, &Bands::builtin())
}
