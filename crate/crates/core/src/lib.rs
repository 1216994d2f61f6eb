//! Pseudo-arclength continuation and bifurcation analysis for 2D elliptic
//! systems discretized with P1 triangular finite elements.

pub mod cont;
pub mod error;
pub mod fem;
pub mod io;
pub mod linalg;
pub mod par;
pub mod problem;
pub mod problems;

pub use error::{Error, Result};
