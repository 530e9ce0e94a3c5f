//! Dense factorizations used by the integrators: thin Householder QR,
//! one-sided Jacobi SVD, real symmetric eigendecomposition, complex Schur,
//! and small pivoted solves.

pub mod eig;
pub mod qr;
pub mod schur;
pub mod solve;
pub mod svd;

pub use eig::{herm_eig, sym_eig};
pub use qr::{orthonormalize_cols, thin_qr};
pub use schur::complex_schur;
pub use solve::{lu_inverse, lu_solve};
pub use svd::{apply_sign_convention, jacobi_svd, Svd};
