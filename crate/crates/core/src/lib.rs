//! Log-correlated Gaussian fields on dyadic lattices: the Dirichlet and torus
//! Gaussian free fields, the branching random walk and its modified
//! (stationary) variant, their exact kernels, and extreme-value experiments.

pub mod covariance;
pub mod error;
pub mod export;
pub mod extremes;
pub mod fields;
pub mod green;
pub mod lattice;
pub mod linalg;
pub mod rng;
pub mod stats;

pub use error::{Error, Result};
pub use fields::{FieldKind, FieldSample, FieldSampler, FieldSpec, ScaleWindow, DEFAULT_MAX_SIDE};
pub use lattice::{GridPoint, GridSpec, Subgrid};
pub use rng::{stream, SimRng};
