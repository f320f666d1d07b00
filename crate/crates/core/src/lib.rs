//! Exact and Monte Carlo calculus for the Dirichlet-Ferguson process on a
//! finite phase space `{0, ..., d-1}`.
//!
//! Every operator acts on finite representations (dense tensors, polynomial
//! functionals, truncated chaos expansions), so the identities of the
//! calculus can be checked exactly with rational arithmetic.

pub mod bracket;
pub mod chaos;
pub mod check;
pub mod combinat;
pub mod cylinder;
pub mod error;
pub mod field;
pub mod json;
pub mod law;
pub mod malliavin;
pub mod measure;
pub mod montecarlo;
pub mod poly;
pub mod random;
pub mod report;
pub mod scalar;
pub mod suites;
pub mod tensor;

pub use check::Comparison;
pub use error::{Error, Result};
pub use measure::{FiniteMeasure, SimplexPoint};
pub use poly::PolyFunctional;
pub use scalar::{Mode, Rational, Scalar};
pub use tensor::TensorFn;
