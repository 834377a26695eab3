//! Projective-module calculus on quantum Heisenberg manifolds, discretized
//! on commensurate grids.

pub mod algebra;
pub mod bimodule;
pub mod calculus;
pub mod error;
pub mod laplace;
pub mod lattice;
pub mod morita;
pub mod projection;
pub mod sampling;
pub mod scalar;
pub mod yangmills;

pub use error::{Error, Result};
pub use scalar::{Cx, Real};

pub type Complex = Cx<f64>;
pub type Field = lattice::ScalarField<f64>;
pub type Torus = lattice::TorusFunction<f64>;
pub type Element = algebra::AlgebraElement<f64>;
