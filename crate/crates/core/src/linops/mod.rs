//! Dense complex Hermitian operator algebra.

mod density;
mod eig;
mod matrix;

pub use density::{is_density, Basis, DensityCheck, DensityState};
pub use eig::{check_psd, hermitian_eig, psd_sqrt, Eigen};
pub use matrix::{
    frobenius_distance, make_projector, ComplexMatrix, HermitianOperator, MatrixJson, StateVector,
};

pub(crate) use matrix::{inner, norm_sqr};
