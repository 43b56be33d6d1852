//! Sharp Poincare (spectral-gap) constants of one-dimensional MCP(K,N)
//! densities: the model densities `h_{K,N,D}`, a Sturm-Liouville solver for
//! their gaps, closed-form and Muckenhoupt bounds, and the class constant
//! obtained by minimizing over the diameter when `K > 0`.

pub mod acceptance;
pub mod bounds;
pub mod error;
pub mod geometry;
pub mod grid;
pub mod sharp;
pub mod spectral;

pub use bounds::BoundsPair;
pub use error::{Error, Result};
pub use geometry::{CurvatureParams, ModelDensity};
pub use grid::GridDensity;
pub use sharp::{SharpConstantResult, SharpOptions};
pub use spectral::{BoundaryConditions, GapEstimate, SpectralResult};
