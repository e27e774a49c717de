// Negated float comparisons are used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod error;
pub mod mesh;
pub mod fem;
pub mod invariants;
pub mod linalg;
pub mod precond;
pub mod solver;
pub mod spectral;
