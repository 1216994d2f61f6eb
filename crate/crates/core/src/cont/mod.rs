//! Continuation, bifurcation detection and branch switching.

pub mod corrector;
pub mod detect;
pub mod findbif;
pub mod meshcheck;
pub mod pmcont;
pub mod run;
pub mod settings;
pub mod state;
pub mod swibra;
pub mod tint;

pub use corrector::{
    cap_ds, compute_tangent, corrector_arclength, corrector_natural, newton_fixed_lambda, parametrization_choice,
    stepsize_control, Base, CorrectorOutcome, TangentOutcome,
};
pub use detect::{detect_bifurcation, evaluate_point, kernel_vectors, localize_bifurcation, PointSpectrum, DETECTION_XI};
pub use findbif::{findbif, Bracket};
pub use meshcheck::{meshcheck, MeshcheckReport, MESHCHECK_ADVICE};
pub use pmcont::pmcont;
pub use run::{adapt_state, cont, deviation_from_mean, estimate_error, init_step, ContOutcome, Observer, StepDiagnostics, StopReason};
pub use settings::{CorrectorKind, Parametrization, Settings};
pub use state::{default_xi, rescaled_xi, xi_inner, xi_norm, BifPoint, BranchRecord, ContinuationState, PointKind, SwitchData};
pub use swibra::{switch_data, swibra};
pub use tint::{tint, TintResult};
