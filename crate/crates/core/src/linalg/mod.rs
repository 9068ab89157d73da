//! Dense complex linear algebra: Haar sampling, unitary eigendecomposition,
//! singular value decomposition and Kronecker products.

mod decomp;
mod matrix;

pub(crate) use decomp::reunitarize;
pub use decomp::{
    eigendecompose_unitary, haar_unitary, kron, kron_unitaries, principal_arg, svd, wrap_angle,
    HaarReflections, SingularDecomposition, SpectralDecomposition, CLUSTER_GAP,
};
pub use matrix::{ComplexMatrix, UnitaryMatrix, C64};
pub(crate) use matrix::{ONE, ZERO};
