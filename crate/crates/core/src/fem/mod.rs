//! Meshes, coefficient layouts, assembly and error estimation.

pub mod assembly;
pub mod bc;
pub mod coeffs;
pub mod estimator;
pub mod mesh;
pub mod refine;

pub use assembly::{AssembledSystem, FemSpace};
pub use bc::{BcPoint, BcValue, BoundaryConditionSet, SegmentBc};
pub use coeffs::{CoeffArray, CoefficientSet, JacobianCoefficients};
pub use estimator::{error_indicator, ErrorEstimate};
pub use mesh::{make_rect_mesh, BoundaryEdge, Mesh};
pub use refine::{adapt, mark_by_error, refine, AdaptControls, MarkStrategy, RefinementMap};
