//! Small dense kernels used by the solvers: diagonal, triangular and LU
//! solves, a normal-equations least-squares solve through a Moore-Penrose
//! pseudoinverse, and a bracketed positive root finder for the scalar
//! equations that arise in triangular tensor solves.

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::{DenseMatrix, Vector};

/// `c ./ d`.
pub fn solve_diagonal<T: Scalar>(d: &[T], c: &[T]) -> Result<Vector<T>> {
    if d.len() != c.len() {
        return Err(Error::DimensionMismatch {
            expected: d.len(),
            found: c.len(),
        });
    }
    if let Some(i) = d.iter().position(|&v| v == T::zero()) {
        return Err(Error::ZeroDiagonal(i));
    }
    Ok(Vector::from_fn(d.len(), |i| c[i] / d[i]))
}

/// Forward substitution with the lower triangle of `l` (entries above the
/// diagonal are ignored).
pub fn solve_lower_triangular<T: Scalar>(l: &DenseMatrix<T>, c: &[T]) -> Result<Vector<T>> {
    let n = l.rows();
    if !l.is_square() || c.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: c.len(),
        });
    }
    let mut x = Vector::zeros(n);
    for i in 0..n {
        let piv = l[(i, i)];
        if piv == T::zero() {
            return Err(Error::ZeroPivot(i));
        }
        let row = l.row(i);
        let s: T = row[..i].iter().zip(x.iter()).map(|(&a, &b)| a * b).sum();
        x[i] = (c[i] - s) / piv;
    }
    Ok(x)
}

/// LU factorisation with partial pivoting, `P A = L U`, packed in place.
#[derive(Debug, Clone)]
pub struct LuFactor<T> {
    n: usize,
    lu: DenseMatrix<T>,
    perm: Vec<usize>,
}

impl<T: Scalar> LuFactor<T> {
    /// Fails with [`Error::SingularMatrix`] when a pivot falls below
    /// `1e-14 * ||A||_inf`.
    pub fn new(a: &DenseMatrix<T>) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::DimensionMismatch {
                expected: a.rows(),
                found: a.cols(),
            });
        }
        let n = a.rows();
        let threshold = T::lit(1e-14) * a.norm_inf();
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let (p, pmax) =
                (k..n)
                    .map(|i| (i, lu[(i, k)].abs()))
                    .fold((k, -T::one()), |best, cur| if cur.1 > best.1 { cur } else { best });
            if pmax.is_nan() || pmax <= threshold {
                return Err(Error::SingularMatrix);
            }
            if p != k {
                for j in 0..n {
                    let tmp = lu[(k, j)];
                    lu[(k, j)] = lu[(p, j)];
                    lu[(p, j)] = tmp;
                }
                perm.swap(k, p);
            }
            let piv = lu[(k, k)];
            for i in k + 1..n {
                let f = lu[(i, k)] / piv;
                lu[(i, k)] = f;
                if f == T::zero() {
                    continue;
                }
                for j in k + 1..n {
                    lu[(i, j)] = lu[(i, j)] - f * lu[(k, j)];
                }
            }
        }
        Ok(Self { n, lu, perm })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn solve(&self, c: &[T]) -> Result<Vector<T>> {
        let n = self.n;
        if c.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: c.len(),
            });
        }
        let mut y: Vector<T> = self.perm.iter().map(|&p| c[p]).collect();
        for i in 0..n {
            let row = self.lu.row(i);
            let s: T = row[..i].iter().zip(y.iter()).map(|(&a, &b)| a * b).sum();
            y[i] = y[i] - s;
        }
        for i in (0..n).rev() {
            let row = self.lu.row(i);
            let s: T = row[i + 1..].iter().zip(y[i + 1..].iter()).map(|(&a, &b)| a * b).sum();
            y[i] = (y[i] - s) / row[i];
        }
        Ok(y)
    }

    /// Unit lower factor `L`.
    pub fn lower(&self) -> DenseMatrix<T> {
        DenseMatrix::from_fn(self.n, self.n, |i, j| match i.cmp(&j) {
            std::cmp::Ordering::Greater => self.lu[(i, j)],
            std::cmp::Ordering::Equal => T::one(),
            std::cmp::Ordering::Less => T::zero(),
        })
    }

    pub fn upper(&self) -> DenseMatrix<T> {
        DenseMatrix::from_fn(self.n, self.n, |i, j| if j >= i { self.lu[(i, j)] } else { T::zero() })
    }

    /// `perm[k]` is the row of `A` that ended up in row `k`.
    pub fn permutation(&self) -> &[usize] {
        &self.perm
    }

    /// Explicit inverse, column by column.
    pub fn inverse(&self) -> DenseMatrix<T> {
        let mut inv = DenseMatrix::zeros(self.n, self.n);
        for j in 0..self.n {
            let mut e = vec![T::zero(); self.n];
            e[j] = T::one();
            let col = self.solve(&e).expect("dimension checked");
            inv.set_column(j, &col);
        }
        inv
    }
}

pub fn lu_solve<T: Scalar>(a: &DenseMatrix<T>, c: &[T]) -> Result<Vector<T>> {
    LuFactor::new(a)?.solve(c)
}

/// Moore-Penrose pseudoinverse from a one-sided Jacobi SVD. Singular values
/// below `1e-12 * sigma_max` are treated as zero.
#[derive(Debug, Clone)]
pub struct Pseudoinverse<T> {
    rows: usize,
    cols: usize,
    /// `U` (rows x k), `sigma` (k), `V` (cols x k) with `k = min(rows, cols)`.
    u: DenseMatrix<T>,
    sigma: Vec<T>,
    v: DenseMatrix<T>,
    cutoff: T,
}

const SVD_MAX_SWEEPS: usize = 60;

impl<T: Scalar> Pseudoinverse<T> {
    pub fn new(a: &DenseMatrix<T>) -> Self {
        if a.rows() >= a.cols() {
            let (u, sigma, v) = jacobi_svd(a);
            Self::assemble(a.rows(), a.cols(), u, sigma, v)
        } else {
            // A^T = U S V^T  =>  A = V S U^T
            let (u, sigma, v) = jacobi_svd(&a.transpose());
            Self::assemble(a.rows(), a.cols(), v, sigma, u)
        }
    }

    fn assemble(rows: usize, cols: usize, u: DenseMatrix<T>, sigma: Vec<T>, v: DenseMatrix<T>) -> Self {
        let smax = sigma.iter().copied().fold(T::zero(), T::max);
        let cutoff = T::lit(1e-12) * smax;
        Self {
            rows,
            cols,
            u,
            sigma,
            v,
            cutoff,
        }
    }

    pub fn singular_values(&self) -> &[T] {
        &self.sigma
    }

    /// Number of singular values kept above the cutoff.
    pub fn rank(&self) -> usize {
        self.sigma.iter().filter(|&&s| s > self.cutoff && s > T::zero()).count()
    }

    /// `pinv(A) * c` for `c` of length `rows`.
    pub fn apply(&self, c: &[T]) -> Vector<T> {
        assert_eq!(c.len(), self.rows);
        let k = self.sigma.len();
        let mut coef = vec![T::zero(); k];
        for (j, cf) in coef.iter_mut().enumerate() {
            let s = self.sigma[j];
            if s > self.cutoff && s > T::zero() {
                let proj: T = (0..self.rows).map(|i| self.u[(i, j)] * c[i]).sum();
                *cf = proj / s;
            }
        }
        Vector::from_fn(self.cols, |i| (0..k).map(|j| self.v[(i, j)] * coef[j]).sum())
    }

    /// Explicit `cols x rows` pseudoinverse matrix.
    pub fn matrix(&self) -> DenseMatrix<T> {
        let mut out = DenseMatrix::zeros(self.cols, self.rows);
        for j in 0..self.rows {
            let mut e = vec![T::zero(); self.rows];
            e[j] = T::one();
            out.set_column(j, &self.apply(&e));
        }
        out
    }
}

/// One-sided (Hestenes) Jacobi SVD of a tall matrix. Returns `U` with
/// orthonormal columns (zero columns for null singular values), the singular
/// values, and the orthogonal `V`.
fn jacobi_svd<T: Scalar>(a: &DenseMatrix<T>) -> (DenseMatrix<T>, Vec<T>, DenseMatrix<T>) {
    let (m, n) = (a.rows(), a.cols());
    let mut w = a.clone();
    let mut v = DenseMatrix::<T>::identity(n);
    let eps = T::epsilon();
    for _ in 0..SVD_MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let (mut alpha, mut beta, mut gamma) = (T::zero(), T::zero(), T::zero());
                for i in 0..m {
                    let (wp, wq) = (w[(i, p)], w[(i, q)]);
                    alpha = alpha + wp * wp;
                    beta = beta + wq * wq;
                    gamma = gamma + wp * wq;
                }
                if gamma == T::zero() || gamma.abs() <= eps * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (T::lit(2.0) * gamma);
                let t = zeta.signum() / (zeta.abs() + (T::one() + zeta * zeta).sqrt());
                let c = T::one() / (T::one() + t * t).sqrt();
                let s = c * t;
                for i in 0..m {
                    let (wp, wq) = (w[(i, p)], w[(i, q)]);
                    w[(i, p)] = c * wp - s * wq;
                    w[(i, q)] = s * wp + c * wq;
                }
                for i in 0..n {
                    let (vp, vq) = (v[(i, p)], v[(i, q)]);
                    v[(i, p)] = c * vp - s * vq;
                    v[(i, q)] = s * vp + c * vq;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut sigma = Vec::with_capacity(n);
    for j in 0..n {
        let norm = (0..m).map(|i| w[(i, j)] * w[(i, j)]).sum::<T>().sqrt();
        sigma.push(norm);
        for i in 0..m {
            w[(i, j)] = if norm > T::zero() { w[(i, j)] / norm } else { T::zero() };
        }
    }
    (w, sigma, v)
}

/// Anderson mixing coefficients `Gamma = pinv(R^T R) R^T r` using the first
/// `l` columns of `r_hist`.
pub fn lstsq_gamma<T: Scalar>(r_hist: &DenseMatrix<T>, r: &[T], l: usize) -> Result<Vector<T>> {
    if l == 0 || l > r_hist.cols() {
        return Err(Error::InvalidDimension(format!(
            "history width {l} out of 1..={}",
            r_hist.cols()
        )));
    }
    if r.len() != r_hist.rows() {
        return Err(Error::DimensionMismatch {
            expected: r_hist.rows(),
            found: r.len(),
        });
    }
    let n = r_hist.rows();
    let gram = DenseMatrix::from_fn(l, l, |i, j| (0..n).map(|k| r_hist[(k, i)] * r_hist[(k, j)]).sum());
    let rhs = r_hist.tr_mul_vec_leading(r, l);
    Ok(Pseudoinverse::new(&gram).apply(&rhs))
}

/// Evaluates `p(t)` and `p'(t)` for coefficients in ascending powers.
pub fn poly_eval<T: Scalar>(coeffs: &[T], t: T) -> (T, T) {
    let mut p = T::zero();
    let mut dp = T::zero();
    for &c in coeffs.iter().rev() {
        dp = dp * t + p;
        p = p * t + c;
    }
    (p, dp)
}

const MAX_DOUBLINGS: usize = 200;
const MAX_REFINE: usize = 300;

/// Positive root of `p(t) = target` for `p` given by ascending coefficients.
///
/// The bracket `[0, hint]` is expanded by doubling until `p - target` changes
/// sign, then refined by bisection with Newton steps taken whenever they stay
/// inside the bracket.
pub fn positive_root<T: Scalar>(coeffs: &[T], target: T, bracket_hint: T) -> Result<T> {
    let f = |t: T| {
        let (p, dp) = poly_eval(coeffs, t);
        (p - target, dp)
    };
    let tol = T::lit(1e-12) * T::one().max(target.abs());
    let (f0, _) = f(T::zero());
    if !f0.is_finite() {
        return Err(Error::NoBracketFound);
    }
    let mut lo = T::zero();
    let mut hi = if bracket_hint > T::zero() && bracket_hint.is_finite() {
        bracket_hint
    } else {
        T::one()
    };
    let mut found = false;
    for _ in 0..MAX_DOUBLINGS {
        let (fh, _) = f(hi);
        if !fh.is_finite() {
            break;
        }
        if fh == T::zero() {
            return Ok(hi);
        }
        if (fh > T::zero()) != (f0 > T::zero()) || f0 == T::zero() {
            found = true;
            break;
        }
        lo = hi;
        hi = hi * T::lit(2.0);
    }
    if !found {
        return Err(Error::NoBracketFound);
    }
    let rising = f0 < T::zero() || (f0 == T::zero() && f(hi).0 > T::zero());
    let mut t = (lo + hi) * T::lit(0.5);
    let mut best = (T::infinity(), t);
    for _ in 0..MAX_REFINE {
        let (ft, dft) = f(t);
        if ft.abs() < best.0 {
            best = (ft.abs(), t);
        }
        if ft.abs() <= tol {
            return Ok(t);
        }
        if (ft < T::zero()) == rising {
            lo = t;
        } else {
            hi = t;
        }
        if hi - lo <= T::epsilon() * hi {
            break;
        }
        let newton = if dft != T::zero() { t - ft / dft } else { T::nan() };
        t = if newton > lo && newton < hi {
            newton
        } else {
            (lo + hi) * T::lit(0.5)
        };
    }
    Ok(best.1)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: &[&[f64]]) -> DenseMatrix<f64> {
        DenseMatrix::from_rows(rows).unwrap()
    }

    #[test]
    fn diagonal_solves() {
        assert_eq!(
            solve_diagonal(&[2.0, 4.0], &[6.0, 8.0]).unwrap().as_slice(),
            &[3.0, 2.0]
        );
        assert_eq!(
            solve_diagonal(&[1.0, 1.0, 1.0], &[5.0, -1.0, 2.5]).unwrap().as_slice(),
            &[5.0, -1.0, 2.5]
        );
        assert_eq!(solve_diagonal(&[2.0, 0.0], &[1.0, 1.0]), Err(Error::ZeroDiagonal(1)));
    }

    #[test]
    fn forward_substitution() {
        let l = m(&[&[2.0, 0.0], &[1.0, 3.0]]);
        let x = solve_lower_triangular(&l, &[4.0, 7.0]).unwrap();
        assert!((x[0] - 2.0).abs() < 1e-15 && (x[1] - 5.0 / 3.0).abs() < 1e-15);
        let back = l.mul_vec(&x);
        assert!((back[0] - 4.0).abs() < 1e-12 && (back[1] - 7.0).abs() < 1e-12);
        assert_eq!(
            solve_lower_triangular(&DenseMatrix::identity(2), &[3.0, 4.0])
                .unwrap()
                .as_slice(),
            &[3.0, 4.0]
        );
        let bad = m(&[&[1.0, 0.0], &[1.0, 0.0]]);
        assert_eq!(solve_lower_triangular(&bad, &[1.0, 1.0]), Err(Error::ZeroPivot(1)));
    }

    #[test]
    fn lu_examples() {
        let x = lu_solve(&m(&[&[2.0, 1.0], &[1.0, 3.0]]), &[5.0, 10.0]).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-14 && (x[1] - 3.0).abs() < 1e-14);
        assert_eq!(
            lu_solve(&DenseMatrix::<f64>::identity(3), &[1.0, 2.0, 3.0])
                .unwrap()
                .as_slice(),
            &[1.0, 2.0, 3.0]
        );
        assert_eq!(
            lu_solve(&DenseMatrix::<f64>::zeros(2, 2), &[1.0, 1.0]),
            Err(Error::SingularMatrix)
        );
    }

    #[test]
    fn lu_reconstructs_permuted_matrix() {
        let a = m(&[&[0.0, 2.0, 1.0], &[4.0, 1.0, -1.0], &[2.0, 5.0, 3.0]]);
        let f = LuFactor::new(&a).unwrap();
        let lu = f.lower().matmul(&f.upper());
        let pa = DenseMatrix::from_fn(3, 3, |i, j| a[(f.permutation()[i], j)]);
        let diff = DenseMatrix::from_fn(3, 3, |i, j| lu[(i, j)] - pa[(i, j)]);
        assert!(diff.norm_fro() <= 1e-10 * pa.norm_fro());
    }

    #[test]
    fn pseudoinverse_of_full_rank_square_is_inverse() {
        let a = m(&[&[4.0, 1.0, 0.5], &[1.0, 3.0, -1.0], &[0.2, -1.0, 2.0]]);
        let p = Pseudoinverse::new(&a).matrix();
        let prod = p.matmul(&a);
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((prod[(i, j)] - want).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn pseudoinverse_of_wide_rank_one() {
        let a = m(&[&[1.0, 2.0, 2.0]]);
        let p = Pseudoinverse::new(&a);
        assert_eq!(p.rank(), 1);
        // pinv of a row vector v is v^T / |v|^2
        let pm = p.matrix();
        for (j, want) in [1.0 / 9.0, 2.0 / 9.0, 2.0 / 9.0].iter().enumerate() {
            assert!((pm[(j, 0)] - want).abs() < 1e-14);
        }
    }

    #[test]
    fn gamma_exact_fit_single_column() {
        let r = [1.0f64, -2.0, 0.5];
        let hist = DenseMatrix::new(3, 1, r.to_vec()).unwrap();
        let g = lstsq_gamma(&hist, &r, 1).unwrap();
        assert!((g[0] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn gamma_orthonormal_columns() {
        let s = 1.0 / 2f64.sqrt();
        let hist = m(&[&[s, 0.0], &[s, 0.0], &[0.0, 1.0]]);
        let r = [3.0, 1.0, -2.0];
        let g = lstsq_gamma(&hist, &r, 2).unwrap();
        assert!((g[0] - 4.0 * s).abs() < 1e-12);
        assert!((g[1] + 2.0).abs() < 1e-12);
    }

    #[test]
    fn gamma_duplicate_columns_still_fits() {
        // Oracle: brute force grid over (g1, g2); the residual only depends on g1 + g2.
        let hist = m(&[&[1.0, 1.0], &[2.0, 2.0], &[-1.0, -1.0]]);
        let r = [0.5, 1.0, -0.5];
        let resid = |g1: f64, g2: f64| -> f64 {
            (0..3)
                .map(|i| (r[i] - hist[(i, 0)] * g1 - hist[(i, 1)] * g2).powi(2))
                .sum::<f64>()
                .sqrt()
        };
        let mut brute = f64::INFINITY;
        for a in -20..=20 {
            for b in -20..=20 {
                brute = brute.min(resid(a as f64 * 0.05, b as f64 * 0.05));
            }
        }
        assert!(brute < 1e-12);
        let g = lstsq_gamma(&hist, &r, 2).unwrap();
        assert!(resid(g[0], g[1]) <= 1e-10);
        // minimum-norm solution splits evenly
        assert!((g[0] - g[1]).abs() < 1e-12);
    }

    #[test]
    fn root_examples() {
        let t = positive_root(&[0.0f64, 0.0, 1.0], 9.0, 1.0).unwrap();
        assert!((t - 3.0).abs() < 1e-12);
        let t = positive_root(&[0.0f64, -1.0, 0.0, 2.0], 14.0, 1.0).unwrap();
        assert!((t - 2.0).abs() < 1e-12);
        assert!((poly_eval(&[0.0f64, -1.0, 0.0, 2.0], 2.0).0 - 14.0).abs() == 0.0);
        assert_eq!(positive_root(&[0.0, 0.0, 1.0], -1.0, 1.0), Err(Error::NoBracketFound));
    }

    #[test]
    fn root_with_large_hint() {
        let t = positive_root(&[-1.0f64, 0.0, 1.0], 3.0, 1e6).unwrap();
        assert!((t - 2.0).abs() < 1e-12);
    }
}
