//! Periodic structured grids, tensor fields and the discrete differential operators.

mod field;
mod grid;
mod identities;
mod ops;

pub use field::{Field, MAX_RANK};
pub use grid::{Grid, MIN_NODES_PER_AXIS};
pub use identities::{gk_identity_residual, refinement_ratios, second_grade_identity_residual, GkIdentityResidual};
pub use ops::{
    biharmonic, contract, cross_in_plane, curl_of_scalar, curl_of_vector, div, div_grad, grad, grad2, inner,
    laplacian, outer, scalar_identity, volume_integral,
};
