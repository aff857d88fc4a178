//! Solver configuration, run reports and the shared fixed-point driver.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flops::FlopsModel;
use crate::scalar::Scalar;
use crate::tensor::{DenseTensor, Vector};

/// Every iteration the crate implements.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    J1,
    Gs1,
    J1Sor,
    Gs1Sor,
    Newton,
    J2,
    Gs2,
    J3,
    Gs3,
    Fullm,
    /// Tensor Richardson only.
    Tr,
    /// Anderson-corrected step on every iteration.
    Tar,
    /// Alternating: one Anderson step after every `p - 1` Richardson steps.
    Taar,
    /// Matrix AAR baseline with a Jacobi preconditioner (order-2 input).
    AarLinear,
}

impl Method {
    pub const ALL: [Method; 14] = [
        Method::J1,
        Method::Gs1,
        Method::J1Sor,
        Method::Gs1Sor,
        Method::Newton,
        Method::J2,
        Method::Gs2,
        Method::J3,
        Method::Gs3,
        Method::Fullm,
        Method::Tr,
        Method::Tar,
        Method::Taar,
        Method::AarLinear,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::J1 => "j1",
            Method::Gs1 => "gs1",
            Method::J1Sor => "j1sor",
            Method::Gs1Sor => "gs1sor",
            Method::Newton => "newton",
            Method::J2 => "j2",
            Method::Gs2 => "gs2",
            Method::J3 => "j3",
            Method::Gs3 => "gs3",
            Method::Fullm => "fullm",
            Method::Tr => "tr",
            Method::Tar => "tar",
            Method::Taar => "taar",
            Method::AarLinear => "aar-linear",
        }
    }

    /// Whether the method is one of the Richardson-family solvers that takes
    /// a preconditioner kind.
    pub fn uses_preconditioner(self) -> bool {
        matches!(self, Method::Tr | Method::Tar | Method::Taar)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let key = s.to_ascii_lowercase().replace('_', "");
        Method::ALL
            .iter()
            .copied()
            .find(|m| m.name().replace('_', "") == key)
            .or(match key.as_str() {
                "j1sorlike" => Some(Method::J1Sor),
                "gs1sorlike" => Some(Method::Gs1Sor),
                _ => None,
            })
            .ok_or_else(|| Error::UnknownMethod(s.to_string()))
    }
}

/// Preconditioner `M(E)` built from the majorization matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PrecondKind {
    /// Diagonal of `M(A)`.
    Pj,
    /// Lower triangle of `M(A)`.
    Pgs,
    /// All of `M(A)`.
    Pf,
}

impl fmt::Display for PrecondKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PrecondKind::Pj => "pj",
            PrecondKind::Pgs => "pgs",
            PrecondKind::Pf => "pf",
        })
    }
}

impl FromStr for PrecondKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "pj" => Ok(PrecondKind::Pj),
            "pgs" => Ok(PrecondKind::Pgs),
            "pf" => Ok(PrecondKind::Pf),
            _ => Err(Error::InvalidConfig(format!("unknown preconditioner `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StoppingMode {
    /// `||b - A x_k^{m-1}|| / ||b - A x_0^{m-1}|| <= tol`
    Relative,
    /// `||b - A x_k^{m-1}|| <= tol`
    Absolute,
}

impl FromStr for StoppingMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "relative" => Ok(StoppingMode::Relative),
            "absolute" => Ok(StoppingMode::Absolute),
            _ => Err(Error::Parse(format!("unknown stopping mode `{s}`"))),
        }
    }
}

impl fmt::Display for StoppingMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StoppingMode::Relative => "relative",
            StoppingMode::Absolute => "absolute",
        })
    }
}

pub const DEFAULT_TOL: f64 = 1e-8;
pub const DEFAULT_MAX_ITER: usize = 20_000;
pub const DEFAULT_X0: f64 = 0.1;
pub const DEFAULT_P: usize = 10;
pub const DEFAULT_Q: usize = 6;

#[derive(Debug, Clone)]
pub struct SolverConfig<T> {
    pub method: Method,
    /// Only read by the Richardson family.
    pub precond: PrecondKind,
    pub tol: T,
    /// Maximum number of updates.
    pub max_iter: usize,
    /// Defaults to `0.1 * e`.
    pub x0: Option<Vector<T>>,
    /// SOR-like relaxation; defaults to `0.35 * min_i a_{i...i}`.
    pub omega: Option<T>,
    pub p: usize,
    pub q: usize,
    pub stopping: StoppingMode,
    /// Positive vector certifying the M-tensor precondition; defaults to `e`.
    pub probe: Option<Vector<T>>,
    /// Keep every iterate in the report.
    pub record_iterates: bool,
}

impl<T: Scalar> SolverConfig<T> {
    pub fn new(method: Method) -> Self {
        Self {
            method,
            precond: PrecondKind::Pf,
            tol: T::lit(DEFAULT_TOL),
            max_iter: DEFAULT_MAX_ITER,
            x0: None,
            omega: None,
            p: DEFAULT_P,
            q: DEFAULT_Q,
            stopping: StoppingMode::Relative,
            probe: None,
            record_iterates: false,
        }
    }

    pub fn with_precond(mut self, kind: PrecondKind) -> Self {
        self.precond = kind;
        self
    }

    pub fn with_tol(mut self, tol: T) -> Self {
        self.tol = tol;
        self
    }

    pub fn with_max_iter(mut self, max_iter: usize) -> Self {
        self.max_iter = max_iter;
        self
    }

    pub fn with_x0(mut self, x0: Vector<T>) -> Self {
        self.x0 = Some(x0);
        self
    }

    pub fn with_stopping(mut self, mode: StoppingMode) -> Self {
        self.stopping = mode;
        self
    }

    pub fn with_probe(mut self, probe: Vector<T>) -> Self {
        self.probe = Some(probe);
        self
    }

    pub fn with_periods(mut self, p: usize, q: usize) -> Self {
        self.p = p;
        self.q = q;
        self
    }

    pub fn recording_iterates(mut self) -> Self {
        self.record_iterates = true;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.tol.is_nan() || self.tol <= T::zero() {
            return Err(Error::InvalidConfig("tol must be positive".into()));
        }
        if self.max_iter < 1 {
            return Err(Error::InvalidConfig("max_iter must be at least 1".into()));
        }
        if self.method == Method::Taar && self.p < 2 {
            return Err(Error::InvalidConfig("p must be at least 2".into()));
        }
        if self.q < 1 {
            return Err(Error::InvalidConfig("q must be at least 1".into()));
        }
        Ok(())
    }

    pub(crate) fn initial_vector(&self, n: usize) -> Result<Vector<T>> {
        match &self.x0 {
            Some(x0) if x0.len() != n => Err(Error::DimensionMismatch {
                expected: n,
                found: x0.len(),
            }),
            Some(x0) => Ok(x0.clone()),
            None => Ok(Vector::filled(n, T::lit(DEFAULT_X0))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopReason {
    Converged,
    MaxIterations,
    /// The residual became non-finite.
    Breakdown,
}

/// Outcome of one solve.
#[derive(Debug, Clone, Serialize)]
pub struct SolveReport<T> {
    pub method: Method,
    pub precond: Option<PrecondKind>,
    pub converged: bool,
    pub stop_reason: StopReason,
    pub iterations: usize,
    pub stopping: StoppingMode,
    /// Stopping quantity before each update; `iterations + 1` entries.
    pub residual_history: Vec<T>,
    /// Model flops spent up to each history entry.
    pub cumulative_flops: Vec<u64>,
    /// Milliseconds since the start of the solve at each history entry.
    pub elapsed_ms: Vec<f64>,
    pub wall_time_s: f64,
    pub solution: Vector<T>,
    /// `||b - A x_0^{m-1}||_2`.
    pub initial_residual: T,
    /// `||b - A x^{m-1}||_2` at the returned solution.
    pub final_residual: T,
    /// Some iterate had a nonpositive component.
    pub nonpositive_iterate_flag: bool,
    /// Steps whose relaxation denominator underflowed.
    pub degenerate_steps: usize,
    /// Newton only: an iterate left `{x > 0 : A x^{m-1} > 0}`.
    pub left_omega_region: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub iterates: Option<Vec<Vector<T>>>,
}

impl<T: Scalar> SolveReport<T> {
    pub fn final_stopping_value(&self) -> T {
        *self.residual_history.last().expect("history is never empty")
    }
}

/// Flags a step may raise.
#[derive(Debug, Default, Clone, Copy)]
pub(crate) struct StepFlags {
    pub degenerate: bool,
    pub left_omega: bool,
}

/// Tracks the stopping rule and the report bookkeeping shared by every solver.
pub(crate) struct Monitor<T: Scalar> {
    method: Method,
    precond: Option<PrecondKind>,
    mode: StoppingMode,
    tol: T,
    max_iter: usize,
    per_iter_flops: u64,
    start: Instant,
    r0: T,
    history: Vec<T>,
    flops: Vec<u64>,
    elapsed: Vec<f64>,
    iterates: Option<Vec<Vector<T>>>,
    pub nonpositive: bool,
    pub degenerate_steps: usize,
    pub left_omega: bool,
    last_abs: T,
}

/// What the driver should do after recording a residual.
pub(crate) enum Verdict {
    Continue,
    Stop(StopReason),
}

impl<T: Scalar> Monitor<T> {
    pub fn new(cfg: &SolverConfig<T>, per_iter_flops: u64) -> Self {
        Self {
            method: cfg.method,
            precond: cfg.method.uses_preconditioner().then_some(cfg.precond),
            mode: cfg.stopping,
            tol: cfg.tol,
            max_iter: cfg.max_iter,
            per_iter_flops,
            start: Instant::now(),
            r0: T::zero(),
            history: Vec::new(),
            flops: Vec::new(),
            elapsed: Vec::new(),
            iterates: cfg.record_iterates.then(Vec::new),
            nonpositive: false,
            degenerate_steps: 0,
            left_omega: false,
            last_abs: T::zero(),
        }
    }

    pub fn iterations(&self) -> usize {
        self.history.len().saturating_sub(1)
    }

    /// Records the residual norm of the current iterate and decides whether
    /// to stop. Must be called once before each update and once at the end.
    pub fn observe(&mut self, x: &Vector<T>, defect_norm: T) -> Verdict {
        if self.history.is_empty() {
            self.r0 = defect_norm;
        }
        self.last_abs = defect_norm;
        let value = match self.mode {
            StoppingMode::Absolute => defect_norm,
            StoppingMode::Relative if self.r0 == T::zero() => T::zero(),
            StoppingMode::Relative => defect_norm / self.r0,
        };
        let k = self.history.len() as u64;
        self.history.push(value);
        self.flops.push(k * self.per_iter_flops);
        self.elapsed.push(self.start.elapsed().as_secs_f64() * 1e3);
        if let Some(its) = self.iterates.as_mut() {
            its.push(x.clone());
        }
        if !x.is_strictly_positive() {
            self.nonpositive = true;
        }
        if !value.is_finite() || !x.is_finite() {
            Verdict::Stop(StopReason::Breakdown)
        } else if value <= self.tol {
            Verdict::Stop(StopReason::Converged)
        } else if self.iterations() >= self.max_iter {
            Verdict::Stop(StopReason::MaxIterations)
        } else {
            Verdict::Continue
        }
    }

    pub fn absorb(&mut self, flags: StepFlags) {
        if flags.degenerate {
            self.degenerate_steps += 1;
        }
        self.left_omega |= flags.left_omega;
    }

    pub fn finish(self, reason: StopReason, solution: Vector<T>) -> SolveReport<T> {
        SolveReport {
            method: self.method,
            precond: self.precond,
            converged: reason == StopReason::Converged,
            stop_reason: reason,
            iterations: self.history.len() - 1,
            stopping: self.mode,
            residual_history: self.history,
            cumulative_flops: self.flops,
            elapsed_ms: self.elapsed,
            wall_time_s: self.start.elapsed().as_secs_f64(),
            solution,
            initial_residual: self.r0,
            final_residual: self.last_abs,
            nonpositive_iterate_flag: self.nonpositive,
            degenerate_steps: self.degenerate_steps,
            left_omega_region: self.left_omega,
            iterates: self.iterates,
        }
    }
}

/// Runs `x_{k+1} = step(x_k, A x_k^{m-1})` under the shared stopping rule.
pub(crate) fn fixed_point<T, S>(
    a: &DenseTensor<T>,
    b: &Vector<T>,
    cfg: &SolverConfig<T>,
    mut step: S,
) -> Result<SolveReport<T>>
where
    T: Scalar,
    S: FnMut(&Vector<T>, &Vector<T>, &mut StepFlags) -> Result<Vector<T>>,
{
    let fpi = FlopsModel::new(a.order(), a.dim()).per_iteration(cfg.method, cfg.precond);
    let mut mon = Monitor::new(cfg, fpi);
    let mut x = cfg.initial_vector(a.dim())?;
    loop {
        let ax = a.apply_xm1(&x)?;
        let defect = b.sub(&ax);
        if let Verdict::Stop(reason) = mon.observe(&x, defect.norm2()) {
            return Ok(mon.finish(reason, x));
        }
        let mut flags = StepFlags::default();
        x = step(&x, &ax, &mut flags)?;
        mon.absorb(flags);
    }
}

/// Common shape and sign checks.
pub(crate) fn check_problem<T: Scalar>(a: &DenseTensor<T>, b: &Vector<T>, cfg: &SolverConfig<T>) -> Result<()> {
    cfg.validate()?;
    if a.order() < 2 {
        return Err(Error::InvalidProblem("tensor order must be at least 2".into()));
    }
    if b.len() != a.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            found: b.len(),
        });
    }
    cfg.initial_vector(a.dim())?;
    Ok(())
}

/// Checks `b > 0`, `x_0 > 0` and the positive-probe M-tensor certificate.
pub(crate) fn require_m_tensor_problem<T: Scalar>(
    a: &DenseTensor<T>,
    b: &Vector<T>,
    cfg: &SolverConfig<T>,
) -> Result<()> {
    check_problem(a, b, cfg)?;
    if !b.is_strictly_positive() {
        return Err(Error::InvalidProblem(
            "right-hand side must be strictly positive".into(),
        ));
    }
    if !cfg.initial_vector(a.dim())?.is_strictly_positive() {
        return Err(Error::InvalidProblem("initial vector must be strictly positive".into()));
    }
    let probe = cfg.probe.clone().unwrap_or_else(|| Vector::ones(a.dim()));
    if !a.verify_nonsingular_m_tensor(&probe)? {
        return Err(Error::InvalidProblem(
            "tensor is not certified as a nonsingular M-tensor by the probe vector".into(),
        ));
    }
    Ok(())
}

/// Solves `A x^{m-1} = b` with the method named in `cfg`.
pub fn solve<T: Scalar>(a: &DenseTensor<T>, b: &Vector<T>, cfg: &SolverConfig<T>) -> Result<SolveReport<T>> {
    use crate::splitting::*;
    use crate::taar::{aar_linear_solve, taar_solve};
    match cfg.method {
        Method::J1 => solve_j1(a, b, cfg),
        Method::Gs1 => solve_gs1(a, b, cfg),
        Method::J1Sor => solve_sorlike(a, b, cfg, SorPart::Diagonal),
        Method::Gs1Sor => solve_sorlike(a, b, cfg, SorPart::Lower),
        Method::Newton => solve_newton_symmetric(a, b, cfg),
        Method::J2 => solve_j2(a, b, cfg),
        Method::Gs2 => solve_gs2(a, b, cfg),
        Method::J3 => solve_j3(a, b, cfg),
        Method::Gs3 => solve_gs3(a, b, cfg),
        Method::Fullm => solve_fullm(a, b, cfg),
        Method::Tr | Method::Tar | Method::Taar => taar_solve(a, b, cfg, cfg.precond),
        Method::AarLinear => {
            if a.order() != 2 {
                return Err(Error::InvalidProblem(
                    "aar-linear needs an order-2 (matrix) problem".into(),
                ));
            }
            let mat = a.apply_xm2(&vec![T::zero(); a.dim()])?;
            aar_linear_solve(&mat, b, cfg)
        }
    }
}
