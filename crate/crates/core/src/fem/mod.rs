//! Finite element spaces, quadrature, rheology and assembly.

pub mod assembly;
pub mod boundary;
pub mod quadrature;
pub mod rheology;
pub mod space;

pub use boundary::Constraints;
pub use quadrature::QuadratureRule;
pub use rheology::{glen_law, viscosity, Linearization, PhysicalParams, SymTensor2};
pub use space::{ElementFamily, FunctionSpace, StokesElement};
