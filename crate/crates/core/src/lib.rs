//! Dense tensors and iterative solvers for multilinear systems
//! `A x^{m-1} = b` with nonsingular M-tensor coefficients.
//!
//! The core is generic over the scalar type; `f64` aliases are provided for
//! the common case.

pub mod error;
pub mod flops;
pub mod linalg;
pub mod problems;
pub mod scalar;
pub mod solver;
pub mod splitting;
pub mod taar;
pub mod tensor;

pub use error::{Error, Result};
pub use flops::{flops_per_iteration, FlopsModel};
pub use scalar::Scalar;
pub use solver::{solve, Method, PrecondKind, SolveReport, SolverConfig, StopReason, StoppingMode};
pub use taar::{aar_linear_solve, build_preconditioner, residual, taar_solve, Preconditioner};
pub use tensor::{elementwise_pow, DenseMatrix, DenseTensor, Part, Vector};

pub type Tensor64 = DenseTensor<f64>;
pub type Matrix64 = DenseMatrix<f64>;
pub type Vector64 = Vector<f64>;
pub type Tensor32 = DenseTensor<f32>;
pub type Matrix32 = DenseMatrix<f32>;
pub type Vector32 = Vector<f32>;
