//! Partial Hoelder seminorms, partial mollifiers, Campanato quotients and
//! finite-difference solvers for elliptic and parabolic equations whose
//! coefficients are rough in some variables.

pub mod campanato;
pub mod error;
pub mod fields;
pub mod harness;
pub mod lattice;
pub mod mollify;
pub mod oracle;
pub mod seminorm;
pub mod solve;
pub(crate) mod util;

pub use campanato::{PolyClass, PolynomialSlice};
pub use error::{Error, Result};
pub use fields::{CoefficientField, Convention, Pattern, VectorField};
pub use harness::{EstimateReport, ExperimentConfig, ExperimentId};
pub use lattice::{AnisotropicGrid, Axis, Boundary, GridFunction, MultiIndex, TimeAxis};
pub use seminorm::{Family, PairBudget, SeminormSpec};
pub use solve::SolveReport;
