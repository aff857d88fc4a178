//! Baseline splitting iterations and the symmetric Newton method.
//!
//! Every solver shares the stopping rule in [`crate::solver`]: the residual
//! is checked before each update, so a report may show zero iterations.

use crate::error::{Error, Result};
use crate::linalg::{lu_solve, poly_eval, positive_root, solve_diagonal, solve_lower_triangular, LuFactor};
use crate::scalar::Scalar;
use crate::solver::{check_problem, fixed_point, require_m_tensor_problem, SolveReport, SolverConfig};
use crate::tensor::vector::pow_component;
use crate::tensor::{DenseMatrix, DenseTensor, Vector};

/// Entries of `A` outside the splitting pattern larger than this make the
/// splitting nonregular.
const REGULARITY_TOL: f64 = 1e-12;
/// Default relaxation as a fraction of the smallest diagonal entry.
const OMEGA_FRACTION: f64 = 0.35;
const SYMMETRY_TOL: f64 = 1e-12;

/// Which part of `A` the SOR-like iteration inverts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SorPart {
    Diagonal,
    Lower,
}

fn inv_root<T: Scalar>(m: usize) -> T {
    T::one() / T::from_usize(m - 1).unwrap()
}

fn positive_diagonal<T: Scalar>(a: &DenseTensor<T>) -> Result<Vector<T>> {
    let d = a.diagonal_entries();
    match d.iter().position(|&v| v.is_nan() || v <= T::zero()) {
        Some(i) => Err(Error::ZeroDiagonal(i)),
        None => Ok(d),
    }
}

/// Coefficients, in ascending powers of `t`, of row `i` of `L y^{m-1}` with
/// `y_i = t` and `y_j = known[j]` for `j < i`. `L` keeps the entries whose
/// trailing indices are all `<= i`.
fn lower_row_poly<T: Scalar>(a: &DenseTensor<T>, i: usize, known: &[T]) -> Vec<T> {
    let m = a.order();
    let n = a.dim();
    let data = a.as_slice();
    let mut coeffs = vec![T::zero(); m];
    let mut idx = vec![0usize; m - 1];
    loop {
        let mut prod = T::one();
        let mut hits = 0;
        for &j in &idx {
            if j == i {
                hits += 1;
            } else {
                prod = prod * known[j];
            }
        }
        let off = idx.iter().fold(i, |acc, &j| acc * n + j);
        coeffs[hits] = coeffs[hits] + data[off] * prod;
        // odometer over [0, i]^(m-1)
        let mut p = m - 1;
        loop {
            if p == 0 {
                return coeffs;
            }
            p -= 1;
            idx[p] += 1;
            if idx[p] <= i {
                break;
            }
            idx[p] = 0;
        }
    }
}

fn default_omega<T: Scalar>(a: &DenseTensor<T>) -> T {
    let d = a.diagonal_entries();
    let min = d.iter().copied().fold(T::infinity(), T::min);
    T::lit(OMEGA_FRACTION) * min
}

/// `D y^{m-1} = F x^{m-1} + b` with the diagonal part of `A`.
pub fn solve_j1<T: Scalar>(a: &DenseTensor<T>, b: &Vector<T>, cfg: &SolverConfig<T>) -> Result<SolveReport<T>> {
    require_m_tensor_problem(a, b, cfg)?;
    jacobi_sorlike(a, b, cfg, T::zero())
}

/// Lower-triangular tensor splitting solved row by row.
pub fn solve_gs1<T: Scalar>(a: &DenseTensor<T>, b: &Vector<T>, cfg: &SolverConfig<T>) -> Result<SolveReport<T>> {
    require_m_tensor_problem(a, b, cfg)?;
    gauss_seidel_sorlike(a, b, cfg, T::zero())
}

/// `(M - omega I) y^{m-1} = (M - omega I - A) x^{m-1} + b` with `M` the
/// diagonal or lower-triangular part of `A`.
pub fn solve_sorlike<T: Scalar>(
    a: &DenseTensor<T>,
    b: &Vector<T>,
    cfg: &SolverConfig<T>,
    part: SorPart,
) -> Result<SolveReport<T>> {
    require_m_tensor_problem(a, b, cfg)?;
    let omega = cfg.omega.unwrap_or_else(|| default_omega(a));
    let dmin = a.diagonal_entries().iter().copied().fold(T::infinity(), T::min);
    if !(omega >= T::zero() && omega < dmin) {
        return Err(Error::InvalidConfig(format!(
            "omega must lie in [0, min a_ii), got {omega}"
        )));
    }
    match part {
        SorPart::Diagonal => jacobi_sorlike(a, b, cfg, omega),
        SorPart::Lower => gauss_seidel_sorlike(a, b, cfg, omega),
    }
}

fn jacobi_sorlike<T: Scalar>(
    a: &DenseTensor<T>,
    b: &Vector<T>,
    cfg: &SolverConfig<T>,
    omega: T,
) -> Result<SolveReport<T>> {
    let d = positive_diagonal(a)?;
    let m = a.order();
    let mf = T::from_usize(m - 1).unwrap();
    let root = inv_root::<T>(m);
    fixed_point(a, b, cfg, |x, ax, _| {
        Ok(Vector::from_fn(x.len(), |i| {
            let shifted = d[i] - omega;
            let xp = pow_component(x[i], mf);
            let y = (shifted * xp - ax[i] + b[i]) / shifted;
            pow_component(y, root)
        }))
    })
}

fn gauss_seidel_sorlike<T: Scalar>(
    a: &DenseTensor<T>,
    b: &Vector<T>,
    cfg: &SolverConfig<T>,
    omega: T,
) -> Result<SolveReport<T>> {
    positive_diagonal(a)?;
    let m = a.order();
    fixed_point(a, b, cfg, |x, ax, _| {
        let n = x.len();
        let mut y = Vector::zeros(n);
        for i in 0..n {
            let old = lower_row_poly(a, i, x);
            let (lx, _) = poly_eval(&old, x[i]);
            let xp = pow_component(x[i], T::from_usize(m - 1).unwrap());
            let rhs = lx - omega * xp - ax[i] + b[i];
            let mut coeffs = lower_row_poly(a, i, &y);
            coeffs[m - 1] = coeffs[m - 1] - omega;
            let hint = if x[i] > T::zero() { x[i] } else { T::one() };
            y[i] = positive_root(&coeffs, rhs, hint).map_err(|_| Error::RootSolveFailed { row: i })?;
        }
        Ok(y)
    })
}

/// Newton iteration for symmetric `A`:
/// `x_{k+1} = (A x_k^{m-2})^{-1} ((m-2)/(m-1) A x_k^{m-1} + b/(m-1))`.
pub fn solve_newton_symmetric<T: Scalar>(
    a: &DenseTensor<T>,
    b: &Vector<T>,
    cfg: &SolverConfig<T>,
) -> Result<SolveReport<T>> {
    require_m_tensor_problem(a, b, cfg)?;
    let scale = a.as_slice().iter().fold(T::one(), |acc, v| acc.max(v.abs()));
    let defect = a.symmetry_defect();
    if defect > T::lit(SYMMETRY_TOL) * scale {
        return Err(Error::NotSymmetric {
            max_diff: defect.to_f64_lossy(),
        });
    }
    let m = a.order();
    let mf = T::from_usize(m - 1).unwrap();
    let c1 = T::from_usize(m - 2).unwrap() / mf;
    fixed_point(a, b, cfg, |x, ax, flags| {
        if !x.is_strictly_positive() || !ax.is_strictly_positive() {
            flags.left_omega = true;
        }
        let jac = a.apply_xm2(x)?;
        let rhs = Vector::from_fn(x.len(), |i| c1 * ax[i] + b[i] / mf);
        lu_solve(&jac, &rhs)
    })
}

fn require_positive_data<T: Scalar>(a: &DenseTensor<T>, b: &Vector<T>, cfg: &SolverConfig<T>) -> Result<()> {
    check_problem(a, b, cfg)?;
    if !b.is_strictly_positive() {
        return Err(Error::InvalidProblem(
            "right-hand side must be strictly positive".into(),
        ));
    }
    if !cfg.initial_vector(a.dim())?.is_strictly_positive() {
        return Err(Error::InvalidProblem("initial vector must be strictly positive".into()));
    }
    Ok(())
}

/// `x_{k+1} = x_k + (1/(m-1)) D_k^{-1} (b - A x_k^{m-1})` with `D_k` the
/// diagonal of `A x_k^{m-2}`.
pub fn solve_j2<T: Scalar>(a: &DenseTensor<T>, b: &Vector<T>, cfg: &SolverConfig<T>) -> Result<SolveReport<T>> {
    require_positive_data(a, b, cfg)?;
    let step = T::one() / T::from_usize(a.order() - 1).unwrap();
    fixed_point(a, b, cfg, |x, ax, _| {
        let jac = a.apply_xm2(x)?;
        let d = solve_diagonal(&jac.diagonal(), &b.sub(ax))?;
        let mut next = x.clone();
        next.axpy(step, &d);
        Ok(next)
    })
}

/// As [`solve_j2`] with the lower triangle of `A x_k^{m-2}`.
pub fn solve_gs2<T: Scalar>(a: &DenseTensor<T>, b: &Vector<T>, cfg: &SolverConfig<T>) -> Result<SolveReport<T>> {
    require_positive_data(a, b, cfg)?;
    let step = T::one() / T::from_usize(a.order() - 1).unwrap();
    fixed_point(a, b, cfg, |x, ax, _| {
        let jac = a.apply_xm2(x)?;
        let d = solve_lower_triangular(&jac, &b.sub(ax))?;
        let mut next = x.clone();
        next.axpy(step, &d);
        Ok(next)
    })
}

/// Matrix part used by the regular splittings `A = M_E I - F`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Splitting {
    Diagonal,
    Lower,
    Full,
}

impl Splitting {
    fn admits(self, i: usize, j: usize) -> bool {
        match self {
            Splitting::Diagonal => i == j,
            Splitting::Lower => j <= i,
            Splitting::Full => true,
        }
    }
}

/// Largest entry of `A` that lands in `F` with the wrong sign.
fn splitting_violation<T: Scalar>(a: &DenseTensor<T>, kind: Splitting) -> T {
    let mut worst = T::zero();
    a.for_each_indexed(|idx, v| {
        let j = idx.get(1).copied().unwrap_or(idx[0]);
        let in_pattern = idx[1..].iter().all(|&t| t == j) && kind.admits(idx[0], j);
        if !in_pattern && v > worst {
            worst = v;
        }
    });
    worst
}

enum SplitSolver<T> {
    Diagonal(Vector<T>),
    Lower(DenseMatrix<T>),
    Full(LuFactor<T>),
}

fn regular_splitting<T: Scalar>(
    a: &DenseTensor<T>,
    b: &Vector<T>,
    cfg: &SolverConfig<T>,
    kind: Splitting,
) -> Result<SolveReport<T>> {
    check_problem(a, b, cfg)?;
    let worst = splitting_violation(a, kind);
    if worst > T::lit(REGULARITY_TOL) {
        return Err(Error::NonregularSplitting {
            value: worst.to_f64_lossy(),
        });
    }
    require_m_tensor_problem(a, b, cfg)?;
    let maj = a.majorization_matrix();
    let me = match kind {
        Splitting::Diagonal => maj.diagonal_part(),
        Splitting::Lower => maj.lower_triangular_part(),
        Splitting::Full => maj,
    };
    let solver = match kind {
        Splitting::Diagonal => SplitSolver::Diagonal(me.diagonal()),
        Splitting::Lower => SplitSolver::Lower(me.clone()),
        Splitting::Full => SplitSolver::Full(LuFactor::new(&me)?),
    };
    let m = a.order();
    let mf = T::from_usize(m - 1).unwrap();
    let root = inv_root::<T>(m);
    fixed_point(a, b, cfg, |x, ax, _| {
        let xp = x.elementwise_pow(mf);
        let mx = me.mul_vec(&xp);
        let c = Vector::from_fn(x.len(), |i| b[i] + mx[i] - ax[i]);
        let y = match &solver {
            SplitSolver::Diagonal(d) => solve_diagonal(d, &c)?,
            SplitSolver::Lower(l) => solve_lower_triangular(l, &c)?,
            SplitSolver::Full(lu) => lu.solve(&c)?,
        };
        Ok(y.elementwise_pow(root))
    })
}

/// Regular splitting with `M_E = D(M(A))`.
pub fn solve_j3<T: Scalar>(a: &DenseTensor<T>, b: &Vector<T>, cfg: &SolverConfig<T>) -> Result<SolveReport<T>> {
    regular_splitting(a, b, cfg, Splitting::Diagonal)
}

/// Regular splitting with `M_E = L(M(A))`.
pub fn solve_gs3<T: Scalar>(a: &DenseTensor<T>, b: &Vector<T>, cfg: &SolverConfig<T>) -> Result<SolveReport<T>> {
    regular_splitting(a, b, cfg, Splitting::Lower)
}

/// Regular splitting with `M_E = M(A)`.
pub fn solve_fullm<T: Scalar>(a: &DenseTensor<T>, b: &Vector<T>, cfg: &SolverConfig<T>) -> Result<SolveReport<T>> {
    regular_splitting(a, b, cfg, Splitting::Full)
}
