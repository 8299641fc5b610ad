//! Symbolic substitution systems on graded nilpotent Lie groups, with exact
//! rational arithmetic throughout.

pub mod bch;
pub mod bundled;
pub mod dynamics;
pub mod error;
pub mod fixpoint;
pub mod grading;
pub mod group;
pub mod lattice;
pub mod lie;
pub mod linalg;
pub mod patch;
pub mod poly;
pub mod scalar;
pub mod specfile;
pub mod substitution;

pub use error::CoreError;
pub use group::{GradedGroup, Provenance, ValidationReport};
pub use lie::LieAlgebraSpec;
pub use scalar::Scalar;
