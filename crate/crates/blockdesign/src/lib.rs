//! Block designs: construction, verification, composition, weak colouring and
//! the exact integer/rational vector computations behind their decomposition
//! arguments.

pub mod colour;
pub mod compose;
pub mod construct;
pub mod design;
pub mod error;
pub mod lattice;
pub mod verify;

pub use design::{BlockingSystem, Colouring, Design, GroupType, GroupedDesign};
pub use error::Error;
