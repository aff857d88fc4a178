//! The `mtaar` command line: `solve`, `bench` and `verify`.

use std::ffi::OsString;
use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use crate::acceptance;
use crate::problem::{default_seed, ProblemKind, ProblemSpec};
use crate::report::{write_solution, write_trace, RunDocument};
use crate::suites::{run_suite, SuiteOptions, SUITES};
use anyhow::Context;
use clap::{Parser, Subcommand, ValueEnum};
use mtaar_core::problems::write_metadata;
use mtaar_core::tensor::write_tensor;
use mtaar_core::{solve, Method, PrecondKind, SolverConfig};

pub const EXIT_OK: u8 = 0;
pub const EXIT_INVALID: u8 = 1;
pub const EXIT_NOT_CONVERGED: u8 = 2;
pub const EXIT_BAND_VIOLATION: u8 = 3;

#[derive(Parser)]
#[command(
    name = "mtaar",
    version,
    about = "Solve multilinear systems with M-tensors and run benchmark suites"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum StartVector {
    /// 0.1 * e, or the problem's own start vector.
    Default,
    /// c * e with c chosen so that A (ce)^{m-1} matches b in max norm.
    Scaled,
}

#[derive(Subcommand)]
enum Command {
    /// Solve a single generated problem.
    Solve {
        #[arg(long, default_value = "random")]
        problem: String,
        #[arg(long, default_value_t = 3)]
        m: usize,
        #[arg(long, default_value_t = 10)]
        n: usize,
        #[arg(long, default_value_t = 0.01)]
        epsilon: f64,
        /// Defaults to MTAAR_SEED, then 0.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = "taar")]
        method: String,
        #[arg(long, default_value = "pf")]
        precond: String,
        /// Defaults to the problem's tolerance, then 1e-8.
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long)]
        max_iter: Option<usize>,
        #[arg(long)]
        p: Option<usize>,
        #[arg(long)]
        q: Option<usize>,
        #[arg(long, value_enum, default_value = "default")]
        x0: StartVector,
        /// Directory for report.json, trace.csv and solution.txt.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write the tensor and its metadata into the output directory.
        #[arg(long, requires = "out")]
        save_problem: bool,
    },
    /// Run an experiment suite and write its CSV tables.
    Bench {
        #[arg(long)]
        suite: String,
        #[arg(long)]
        full: bool,
        #[arg(long)]
        jobs: Option<usize>,
        #[arg(long, default_value = "bench-out")]
        out: PathBuf,
    },
    /// Run the acceptance checks and print one line per criterion.
    Verify {
        #[arg(long, default_value = "acceptance")]
        suite: String,
    },
}

/// Parses `args` (including the program name) and runs the command,
/// returning the process exit code.
pub fn run<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INVALID } else { EXIT_OK };
        }
    };
    match execute(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            EXIT_INVALID
        }
    }
}

fn execute(command: Command) -> anyhow::Result<u8> {
    match command {
        Command::Solve {
            problem,
            m,
            n,
            epsilon,
            seed,
            method,
            precond,
            tol,
            max_iter,
            p,
            q,
            x0,
            out,
            save_problem,
        } => {
            let spec = ProblemSpec {
                kind: problem.parse::<ProblemKind>()?,
                m,
                n,
                epsilon,
                seed: seed.map_or_else(default_seed, Ok)?,
            };
            let method: Method = method.parse()?;
            let precond: PrecondKind = precond.parse()?;
            let instance = spec.build()?;
            let mut cfg: SolverConfig<f64> = instance.config(method).with_precond(precond);
            if let Some(t) = tol {
                cfg = cfg.with_tol(t);
            }
            if let Some(k) = max_iter {
                cfg = cfg.with_max_iter(k);
            }
            if p.is_some() || q.is_some() {
                let (pp, qq) = (p.unwrap_or(cfg.p), q.unwrap_or(cfg.q));
                cfg = cfg.with_periods(pp, qq);
            }
            if let StartVector::Scaled = x0 {
                cfg = cfg.with_x0(instance.scaled_x0()?);
            }
            let report = solve(&instance.a, &instance.b, &cfg)?;
            println!(
                "{} {}: {} after {} iterations, residual {:.3e} ({}), {:.3}s",
                instance.label,
                method,
                if report.converged {
                    "converged"
                } else {
                    "did not converge"
                },
                report.iterations,
                report.final_stopping_value(),
                instance.stopping,
                report.wall_time_s
            );
            if let Some(dir) = out {
                fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
                let doc = RunDocument::new(&instance, cfg.tol, &report);
                serde_json::to_writer_pretty(create(&dir, "report.json")?, &doc)?;
                write_trace(&report, create(&dir, "trace.csv")?)?;
                write_solution(&report.solution, create(&dir, "solution.txt")?)?;
                if save_problem {
                    write_tensor(&instance.a, create(&dir, "tensor.txt")?)?;
                    write_metadata(&instance, create(&dir, "problem.txt")?)?;
                }
            }
            Ok(if report.converged { EXIT_OK } else { EXIT_NOT_CONVERGED })
        }
        Command::Bench { suite, full, jobs, out } => {
            anyhow::ensure!(
                SUITES.contains(&suite.as_str()),
                "unknown suite `{suite}`; expected one of {}",
                SUITES.join(", ")
            );
            let opts = SuiteOptions {
                full,
                jobs,
                seed: default_seed()?,
            };
            let outcome = run_suite(&suite, &opts)?;
            outcome.write(&out)?;
            for row in &outcome.rows {
                println!(
                    "{:<4} {:<28} {:<8} {:<4} iter={:<6} res={:.2e} band={} {}",
                    if row.pass { "ok" } else { "FAIL" },
                    row.instance,
                    row.method,
                    row.precond,
                    row.iter,
                    row.res,
                    row.band,
                    row.note
                );
            }
            println!("wrote {}", out.join(format!("{suite}.csv")).display());
            Ok(if outcome.all_pass() {
                EXIT_OK
            } else {
                EXIT_BAND_VIOLATION
            })
        }
        Command::Verify { suite } => {
            anyhow::ensure!(suite == "acceptance", "unknown verification suite `{suite}`");
            let criteria = acceptance::run_all(default_seed()?)?;
            for c in &criteria {
                println!("{c}");
            }
            let failed = criteria.iter().filter(|c| !c.pass).count();
            println!("{} passed, {failed} failed", criteria.len() - failed);
            Ok(if failed == 0 { EXIT_OK } else { EXIT_BAND_VIOLATION })
        }
    }
}

fn create(dir: &Path, name: &str) -> anyhow::Result<BufWriter<File>> {
    let path = dir.join(name);
    Ok(BufWriter::new(
        File::create(&path).with_context(|| format!("creating {}", path.display()))?,
    ))
}
