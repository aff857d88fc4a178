//! Tensor alternating Anderson-Richardson iteration.
//!
//! The iteration works on `x^{[m-1]}`: every step computes the preconditioned
//! residual `r = M_E^{-1}(b - A x^{m-1})` and updates `x^{[m-1]}` either by a
//! relaxed Richardson step (TR) or by an Anderson-corrected step (TAR) built
//! from a ring buffer of the last `q` differences of `x^{[m-1]}` and `r`.

use crate::error::{Error, Result};
use crate::flops::FlopsModel;
use crate::linalg::{lstsq_gamma, solve_diagonal, solve_lower_triangular, LuFactor};
use crate::scalar::Scalar;
use crate::solver::{
    require_m_tensor_problem, Method, Monitor, PrecondKind, SolveReport, SolverConfig, StepFlags, Verdict,
};
use crate::tensor::vector::pow_component;
use crate::tensor::{DenseMatrix, DenseTensor, Vector};

/// Components of `x^{[m-2]}` smaller than this in magnitude are clamped
/// before dividing by them.
pub const POWER_FLOOR: f64 = 1e-30;

#[derive(Debug, Clone)]
enum Factor<T> {
    Diagonal(Vector<T>),
    Lower(DenseMatrix<T>),
    Full(LuFactor<T>),
}

/// `M_E` taken from the majorization matrix, factored once.
#[derive(Debug, Clone)]
pub struct Preconditioner<T> {
    kind: PrecondKind,
    matrix: DenseMatrix<T>,
    factor: Factor<T>,
}

impl<T: Scalar> Preconditioner<T> {
    /// Builds the preconditioner of `kind` from a square matrix.
    pub fn from_matrix(full: &DenseMatrix<T>, kind: PrecondKind) -> Result<Self> {
        if !full.is_square() {
            return Err(Error::DimensionMismatch {
                expected: full.rows(),
                found: full.cols(),
            });
        }
        let matrix = match kind {
            PrecondKind::Pj => full.diagonal_part(),
            PrecondKind::Pgs => full.lower_triangular_part(),
            PrecondKind::Pf => full.clone(),
        };
        if kind != PrecondKind::Pf {
            if let Some(i) = matrix.diagonal().iter().position(|&v| v == T::zero()) {
                return Err(Error::SingularPreconditioner(i));
            }
        }
        let factor = match kind {
            PrecondKind::Pj => Factor::Diagonal(matrix.diagonal()),
            PrecondKind::Pgs => Factor::Lower(matrix.clone()),
            PrecondKind::Pf => Factor::Full(LuFactor::new(&matrix)?),
        };
        Ok(Self { kind, matrix, factor })
    }

    pub fn kind(&self) -> PrecondKind {
        self.kind
    }

    /// The (unfactored) matrix `M_E`.
    pub fn matrix(&self) -> &DenseMatrix<T> {
        &self.matrix
    }

    /// `M_E^{-1} c`.
    pub fn solve(&self, c: &[T]) -> Result<Vector<T>> {
        match &self.factor {
            Factor::Diagonal(d) => solve_diagonal(d, c),
            Factor::Lower(l) => solve_lower_triangular(l, c),
            Factor::Full(lu) => lu.solve(c),
        }
    }
}

/// Preconditioner of `kind` built from `M(A)`.
pub fn build_preconditioner<T: Scalar>(a: &DenseTensor<T>, kind: PrecondKind) -> Result<Preconditioner<T>> {
    Preconditioner::from_matrix(&a.majorization_matrix(), kind)
}

/// `M_E^{-1}(b - A x^{m-1})`.
pub fn residual<T: Scalar>(a: &DenseTensor<T>, b: &Vector<T>, p: &Preconditioner<T>, x: &[T]) -> Result<Vector<T>> {
    let ax = a.apply_xm1(x)?;
    p.solve(&b.sub(&ax))
}

/// Ring buffer holding the last `q` differences `X` (of `x^{[m-1]}`) and `R`
/// (of residuals). The difference formed at iteration `k >= 2` goes to column
/// `(k - 2) mod q`.
#[derive(Debug, Clone)]
pub struct HistoryWindow<T> {
    x: DenseMatrix<T>,
    r: DenseMatrix<T>,
    filled: usize,
}

impl<T: Scalar> HistoryWindow<T> {
    pub fn new(n: usize, q: usize) -> Self {
        Self {
            x: DenseMatrix::zeros(n, q),
            r: DenseMatrix::zeros(n, q),
            filled: 0,
        }
    }

    pub fn capacity(&self) -> usize {
        self.x.cols()
    }

    /// Number of columns written so far, capped at the capacity.
    pub fn filled(&self) -> usize {
        self.filled
    }

    pub fn x_history(&self) -> &DenseMatrix<T> {
        &self.x
    }

    pub fn r_history(&self) -> &DenseMatrix<T> {
        &self.r
    }

    /// Stores the differences formed at iteration `k >= 2`.
    pub fn record(&mut self, k: usize, dx: &[T], dr: &[T]) {
        assert!(k >= 2, "differences start at iteration 2");
        let col = (k - 2) % self.capacity();
        self.x.set_column(col, dx);
        self.r.set_column(col, dr);
        self.filled = (self.filled + 1).min(self.capacity());
    }
}

/// Quantities derived from the current iterate.
#[derive(Debug, Clone)]
pub struct Evaluation<T> {
    /// `A x^{m-2}`.
    pub jac: DenseMatrix<T>,
    /// `b - A x^{m-1}`.
    pub defect: Vector<T>,
    /// `M_E^{-1}` applied to the defect.
    pub r: Vector<T>,
    /// `x^{[m-2]}` with tiny components clamped away from zero.
    pub xpow: Vector<T>,
}

/// Iteration state. `x` is always the sign-preserving `(m-1)`-th root of
/// `xm1`.
#[derive(Debug, Clone)]
pub struct TaarState<T> {
    pub order: usize,
    /// Iteration counter `k`.
    pub k: usize,
    pub x: Vector<T>,
    pub xm1: Vector<T>,
    pub window: HistoryWindow<T>,
    xm1_old: Vector<T>,
    r_old: Option<Vector<T>>,
    eval: Option<Evaluation<T>>,
}

/// Which update a step performed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepKind {
    Richardson,
    Anderson,
    /// The relaxation denominator underflowed; the iterate is unchanged.
    Degenerate,
    /// An Anderson step fell back to a Richardson step.
    AndersonFallback,
}

impl<T: Scalar> TaarState<T> {
    pub fn new(x0: Vector<T>, order: usize, q: usize) -> Self {
        let xm1 = x0.elementwise_pow(T::from_usize(order - 1).unwrap());
        let n = x0.len();
        Self {
            order,
            k: 0,
            x: x0,
            xm1_old: xm1.clone(),
            xm1,
            window: HistoryWindow::new(n, q),
            r_old: None,
            eval: None,
        }
    }

    /// Evaluates (or returns the cached) quantities at the current iterate.
    pub fn evaluate(&mut self, a: &DenseTensor<T>, b: &Vector<T>, p: &Preconditioner<T>) -> Result<&Evaluation<T>> {
        if self.eval.is_none() {
            let jac = a.apply_xm2(&self.x)?;
            let ax = jac.mul_vec(&self.x);
            let defect = b.sub(&ax);
            let r = p.solve(&defect)?;
            let floor = T::lit(POWER_FLOOR);
            let e = T::from_usize(self.order - 2).unwrap();
            let xpow = Vector::from_fn(self.x.len(), |i| {
                let v = pow_component(self.x[i], e);
                if v.abs() < floor {
                    if v < T::zero() {
                        -floor
                    } else {
                        floor
                    }
                } else {
                    v
                }
            });
            self.eval = Some(Evaluation { jac, defect, r, xpow });
        }
        Ok(self.eval.as_ref().unwrap())
    }

    /// Pushes the differences against the previous iterate into the window
    /// (from `k = 2` on) and remembers the current iterate.
    pub fn record_history(&mut self) {
        let r = self.eval.as_ref().expect("evaluate before recording").r.clone();
        if self.k > 1 {
            if let Some(r_old) = &self.r_old {
                let dx = self.xm1.sub(&self.xm1_old);
                let dr = r.sub(r_old);
                self.window.record(self.k, &dx, &dr);
            }
        }
        self.xm1_old = self.xm1.clone();
        self.r_old = Some(r);
    }

    fn take_evaluation(&mut self, a: &DenseTensor<T>, b: &Vector<T>, p: &Preconditioner<T>) -> Result<Evaluation<T>> {
        self.evaluate(a, b, p)?;
        Ok(self.eval.take().unwrap())
    }

    fn set_xm1(&mut self, xm1: Vector<T>) {
        let root = T::one() / T::from_usize(self.order - 1).unwrap();
        self.x = xm1.elementwise_pow(root);
        self.xm1 = xm1;
        self.eval = None;
        self.k += 1;
    }
}

fn divide<T: Scalar>(v: &Vector<T>, by: &Vector<T>) -> Vector<T> {
    Vector::from_fn(v.len(), |i| v[i] / by[i])
}

/// Relaxed Richardson step on `x^{[m-1]}`:
/// `u1 = r ./ x^{[m-2]}`, `omega = (b - A x^{m-1}, B u1) / (B u1, B u1)`,
/// `x^{[m-1]} += omega r`.
pub fn tr_step<T: Scalar>(
    a: &DenseTensor<T>,
    b: &Vector<T>,
    p: &Preconditioner<T>,
    state: &mut TaarState<T>,
) -> Result<StepKind> {
    let ev = state.take_evaluation(a, b, p)?;
    let bu1 = ev.jac.mul_vec(&divide(&ev.r, &ev.xpow));
    let den = bu1.dot(&bu1);
    if den.is_nan() || den < T::tiny() {
        let xm1 = state.xm1.clone();
        state.set_xm1(xm1);
        return Ok(StepKind::Degenerate);
    }
    let omega = ev.defect.dot(&bu1) / den;
    let mut xm1 = state.xm1.clone();
    xm1.axpy(omega, &ev.r);
    state.set_xm1(xm1);
    Ok(StepKind::Richardson)
}

/// Anderson-corrected step:
/// `Gamma = pinv(R^T R) R^T r`, `u2 = X Gamma ./ x^{[m-2]}`,
/// `u3 = (r - R Gamma) ./ x^{[m-2]}`,
/// `beta = (b - A x^{m-1} + B u2, B u3) / (B u3, B u3)` and
/// `x^{[m-1]} += beta (r - R Gamma) - X Gamma`.
pub fn tar_step<T: Scalar>(
    a: &DenseTensor<T>,
    b: &Vector<T>,
    p: &Preconditioner<T>,
    state: &mut TaarState<T>,
) -> Result<StepKind> {
    let l = state.window.filled();
    if l == 0 {
        return tr_step(a, b, p, state).map(|kind| match kind {
            StepKind::Degenerate => StepKind::Degenerate,
            _ => StepKind::AndersonFallback,
        });
    }
    let ev = state.take_evaluation(a, b, p)?;
    let gamma = lstsq_gamma(state.window.r_history(), &ev.r, l)?;
    let xg = state.window.x_history().mul_vec_leading(&gamma, l);
    let rg = state.window.r_history().mul_vec_leading(&gamma, l);
    let rbar = ev.r.sub(&rg);
    let mut xm1 = state.xm1.sub(&xg);
    if rbar.norm2() <= T::epsilon() * ev.r.norm2() {
        // The window reproduces r exactly; take the pure extrapolation.
        state.set_xm1(xm1);
        return Ok(StepKind::Anderson);
    }
    let bu2 = ev.jac.mul_vec(&divide(&xg, &ev.xpow));
    let bu3 = ev.jac.mul_vec(&divide(&rbar, &ev.xpow));
    let den = bu3.dot(&bu3);
    if den.is_nan() || den < T::tiny() {
        state.eval = Some(ev);
        return tr_step(a, b, p, state).map(|kind| match kind {
            StepKind::Degenerate => StepKind::Degenerate,
            _ => StepKind::AndersonFallback,
        });
    }
    let beta = ev.defect.add(&bu2).dot(&bu3) / den;
    xm1.axpy(beta, &rbar);
    state.set_xm1(xm1);
    Ok(StepKind::Anderson)
}

/// Solves `A x^{m-1} = b` with TR, TAR or TAAR according to `cfg.method`
/// (any other method runs TAAR).
pub fn taar_solve<T: Scalar>(
    a: &DenseTensor<T>,
    b: &Vector<T>,
    cfg: &SolverConfig<T>,
    kind: PrecondKind,
) -> Result<SolveReport<T>> {
    require_m_tensor_problem(a, b, cfg)?;
    let p = build_preconditioner(a, kind)?;
    let period = match cfg.method {
        Method::Tr => usize::MAX,
        Method::Tar => 1,
        _ => cfg.p,
    };
    let mut cfg = cfg.clone();
    cfg.precond = kind;
    if !matches!(cfg.method, Method::Tr | Method::Tar) {
        cfg.method = Method::Taar;
    }
    let fpi = FlopsModel::new(a.order(), a.dim()).per_iteration(cfg.method, kind);
    let mut mon = Monitor::new(&cfg, fpi);
    let mut state = TaarState::new(cfg.initial_vector(a.dim())?, a.order(), cfg.q);
    loop {
        let norm = state.evaluate(a, b, &p)?.defect.norm2();
        if let Verdict::Stop(reason) = mon.observe(&state.x, norm) {
            return Ok(mon.finish(reason, state.x));
        }
        state.record_history();
        let kind = if (state.k + 1) % period != 0 {
            tr_step(a, b, &p, &mut state)?
        } else {
            tar_step(a, b, &p, &mut state)?
        };
        mon.absorb(StepFlags {
            degenerate: kind == StepKind::Degenerate,
            left_omega: false,
        });
    }
}

/// Alternating Anderson-Richardson for a linear system `A x = b` with the
/// Jacobi preconditioner `diag(A)`.
pub fn aar_linear_solve<T: Scalar>(a: &DenseMatrix<T>, b: &Vector<T>, cfg: &SolverConfig<T>) -> Result<SolveReport<T>> {
    cfg.validate()?;
    let n = a.rows();
    if !a.is_square() {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: a.cols(),
        });
    }
    if b.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: b.len(),
        });
    }
    let p = Preconditioner::from_matrix(a, PrecondKind::Pj)?;
    let mut cfg = cfg.clone();
    cfg.method = Method::AarLinear;
    let fpi = FlopsModel::new(2, n).per_iteration(Method::AarLinear, PrecondKind::Pj);
    let mut mon = Monitor::new(&cfg, fpi);
    let mut x = cfg.initial_vector(n)?;
    let mut window = HistoryWindow::new(n, cfg.q);
    let mut prev: Option<(Vector<T>, Vector<T>)> = None;
    let mut k = 0usize;
    loop {
        let defect = b.sub(&a.mul_vec(&x));
        let r = p.solve(&defect)?;
        if let Verdict::Stop(reason) = mon.observe(&x, defect.norm2()) {
            return Ok(mon.finish(reason, x));
        }
        if k > 1 {
            if let Some((x_old, r_old)) = &prev {
                window.record(k, &x.sub(x_old), &r.sub(r_old));
            }
        }
        prev = Some((x.clone(), r.clone()));
        let mut flags = StepFlags::default();
        let l = window.filled();
        if !(k + 1).is_multiple_of(cfg.p) || l == 0 {
            let ar = a.mul_vec(&r);
            let den = ar.dot(&ar);
            if den >= T::tiny() {
                x.axpy(defect.dot(&ar) / den, &r);
            } else {
                flags.degenerate = true;
            }
        } else {
            let gamma = lstsq_gamma(window.r_history(), &r, l)?;
            let xbar = x.sub(&window.x_history().mul_vec_leading(&gamma, l));
            let dbar = b.sub(&a.mul_vec(&xbar));
            let rbar = p.solve(&dbar)?;
            let ar = a.mul_vec(&rbar);
            let den = ar.dot(&ar);
            x = xbar;
            if den >= T::tiny() {
                x.axpy(dbar.dot(&ar) / den, &rbar);
            }
        }
        mon.absorb(flags);
        k += 1;
    }
}
