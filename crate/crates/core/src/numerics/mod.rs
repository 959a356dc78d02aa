//! Small dense linear-algebra kernels: fixed-size vectors and matrices,
//! heap matrices, symmetric eigen-decomposition, 3×3 SVD and linear solves.

pub mod dense;
pub mod eig;
pub mod small;
pub mod solve;
pub mod svd3;

pub use dense::{DenseMatrix, SymMatrix};
pub use eig::{sym_eig, sym_eig_tridiagonal, SymEig};
pub use small::{Mat3, Mat6, Vec3, Vec6};
pub use solve::{numeric_rank, singular_values, solve_damped_normal, svd_jacobi, Cholesky, JacobiSvd, RANK_RTOL};
pub use svd3::{project_to_so3, svd3, Svd3};
