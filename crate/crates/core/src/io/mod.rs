//! Run configuration, persistence of points and branches, plots, and the session driver.

pub mod branchfile;
pub mod config;
pub mod plot;
pub mod pointfile;
pub mod session;

pub use branchfile::{BranchTable, BranchWriter};
pub use config::{Action, ActionArgs, MeshConfig, RunConfig};
pub use pointfile::{load_point, save_point, PointData, POINT_FORMAT_VERSION};
pub use session::{run, RunOutcome, EXIT_CONFIG, EXIT_NUMERIC, EXIT_OK};
