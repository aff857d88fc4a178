//! Deterministic per-iteration flop model used to compare methods.
//!
//! Counts are functions of `(m, n)` only: `A x^{m-1}` costs `m n^m - n`,
//! `A x^{m-2}` costs `(m-1) n^m - n^2`, and a preconditioner solve costs
//! `n^3` (full), `n^2` (lower triangle) or `n` (diagonal).

use crate::solver::{Method, PrecondKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FlopsModel {
    pub order: usize,
    pub dim: usize,
}

impl FlopsModel {
    pub fn new(order: usize, dim: usize) -> Self {
        Self { order, dim }
    }

    fn n_pow_m(&self) -> u64 {
        (self.dim as u64).saturating_pow(self.order as u32)
    }

    /// Cost of `A x^{m-1}`.
    pub fn apply_xm1(&self) -> u64 {
        (self.order as u64 * self.n_pow_m()).saturating_sub(self.dim as u64)
    }

    /// Cost of `A x^{m-2}`.
    pub fn apply_xm2(&self) -> u64 {
        let n = self.dim as u64;
        ((self.order as u64).saturating_sub(1) * self.n_pow_m()).saturating_sub(n * n)
    }

    pub fn precond_solve(&self, kind: PrecondKind) -> u64 {
        let n = self.dim as u64;
        match kind {
            PrecondKind::Pf => n * n * n,
            PrecondKind::Pgs => n * n,
            PrecondKind::Pj => n,
        }
    }

    /// Flops charged to one update of `method`. `precond` only matters for
    /// the Richardson family.
    pub fn per_iteration(&self, method: Method, precond: PrecondKind) -> u64 {
        let n = self.dim as u64;
        match method {
            Method::J1 | Method::Gs1 | Method::J1Sor | Method::Gs1Sor | Method::J3 | Method::Gs3 => {
                2 * self.apply_xm1()
            }
            Method::Fullm => 2 * self.apply_xm1() + n * n * n,
            Method::J2 | Method::Gs2 => self.apply_xm1() + self.apply_xm2(),
            Method::Newton => self.apply_xm1() + self.apply_xm2() + n * n * n,
            Method::Tr | Method::Tar | Method::Taar => self.apply_xm2() + self.precond_solve(precond),
            // Two matrix-vector products and a diagonal solve.
            Method::AarLinear => 2 * (2 * n * n - n) + n,
        }
    }
}

/// Per-iteration flops with the full preconditioner for the Richardson family.
pub fn flops_per_iteration(method: Method, m: usize, n: usize) -> u64 {
    FlopsModel::new(m, n).per_iteration(method, PrecondKind::Pf)
}
