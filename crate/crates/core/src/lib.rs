//! Numerical tools for random projections of convex bodies: support functions, subgaussian
//! ensembles, Monte Carlo mean widths, and certified ball/cube inclusion tests.

pub mod bodies;
pub mod ensembles;
pub mod error;
pub mod inclusion;
pub mod linalg;
pub mod rng;
pub mod selection;
pub mod sphere;
pub mod widths;

pub use bodies::{BodyDescriptor, BodyKind, ConvexBody, Membership, RadiusEstimate};
pub use error::{Error, Result};
pub use linalg::{Matrix, Vector};
pub use ensembles::{sample_matrix, ScalarLaw, SampleMatrix};
pub use widths::WidthEstimate;
pub use inclusion::{InclusionCertificate, InclusionOptions, Mode, Status};
