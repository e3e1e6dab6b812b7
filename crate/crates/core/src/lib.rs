pub mod error;
pub mod geometry;
pub mod io;
pub mod isotropy;
pub mod linalg;
pub mod perturbation;
pub mod quadrature;
pub mod scalar;
pub mod stability;
pub mod transport;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Polytope32 = geometry::Polytope<f32>;
pub type Polytope64 = geometry::Polytope<f64>;
pub type Simplex32 = geometry::Simplex<f32>;
pub type Simplex64 = geometry::Simplex<f64>;
pub type Polynomial32 = quadrature::Polynomial<f32>;
pub type Polynomial64 = quadrature::Polynomial<f64>;
pub type AffineMap32 = quadrature::AffineMap<f32>;
pub type AffineMap64 = quadrature::AffineMap<f64>;
pub type Functional32 = isotropy::CompositeMomentFunctional<f32>;
pub type Functional64 = isotropy::CompositeMomentFunctional<f64>;
