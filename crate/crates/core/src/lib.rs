pub mod axioms;
pub mod census;
pub mod chains;
pub mod cylinder;
pub mod error;
pub mod interpolation;
pub mod problem;
pub mod representation;
pub mod runner;
pub mod solver;
pub mod topology;
pub mod transform;

pub use cylinder::{BaseSpace, CylinderElement};
pub use error::{Error, Result};
pub use topology::FiniteTopology;
pub use transform::FiniteTransformation;
