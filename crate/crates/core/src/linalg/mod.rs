//! Dense and sparse symmetric linear algebra.

mod dense;
mod eigen;
mod sparse;

pub use dense::{dot, norm2, spd_solve, Cholesky, DenseMatrix, SymMatrix};
pub use eigen::{sym_generalized_eig, symmetric_eigen, EigenDecomposition};
pub use sparse::{
    reverse_cuthill_mckee, CsrMatrix, EnvelopeCholesky, SparseSpdSolver, DENSE_FALLBACK_ORDER,
};
