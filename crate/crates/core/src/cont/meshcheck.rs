//! Refine, re-solve and compare: a quick check of whether the mesh resolves the solution.

use std::sync::Arc;

use super::corrector::newton_fixed_lambda;
use super::state::ContinuationState;
use crate::error::{Error, Result};
use crate::fem::estimator::{error_indicator, DEFAULT_ALPHA, DEFAULT_BETA};
use crate::fem::{mark_by_error, refine, MarkStrategy};
use crate::linalg::sparse::norm_inf;
use crate::problem::System;

/// Relative differences above this suggest refining before continuing.
pub const MESHCHECK_ADVICE: f64 = 0.01;

pub struct MeshcheckReport {
    /// `‖u_fine − I u‖_∞`, with `I` interpolation onto the refined mesh.
    pub diff_inf: f64,
    pub rel_error: f64,
    /// `u_fine − I u` per node of the refined mesh.
    pub diff: Vec<f64>,
    pub refined: System,
    pub u: Vec<f64>,
}

impl MeshcheckReport {
    pub fn needs_refinement(&self) -> bool {
        self.rel_error > MESHCHECK_ADVICE
    }
}

/// Refines the triangles with the largest error indicators until the mesh
/// has about twice as many triangles, and re-solves at the same `λ`.
pub fn meshcheck(sys: &System, state: &ContinuationState) -> Result<MeshcheckReport> {
    let coeffs = sys.problem.coefficients(&sys.space, &state.u, state.lam)?;
    let est = error_indicator(sys.mesh(), &coeffs, &state.u, DEFAULT_ALPHA, DEFAULT_BETA)?;
    let nt = sys.mesh().n_triangles();
    let marked = mark_by_error(&est.indicator, MarkStrategy::Budget { maxt: 2 * nt });
    let (mesh, map) = refine(sys.mesh(), &marked)?;
    let interp = map.apply(sys.mesh(), &state.u)?;
    let refined = sys.with_mesh(Arc::new(mesh));
    let out = newton_fixed_lambda(&refined, interp.clone(), state.lam, &state.settings, None)?;
    if !out.converged {
        return Err(Error::NoConvergence(format!(
            "meshcheck re-solve at lambda={} (residual {:.3e})",
            state.lam,
            out.residuals.last().copied().unwrap_or(f64::NAN)
        )));
    }
    let diff: Vec<f64> = out.u.iter().zip(&interp).map(|(a, b)| a - b).collect();
    let diff_inf = norm_inf(&diff);
    let scale = norm_inf(&out.u);
    let rel_error = if scale > 0.0 { diff_inf / scale } else { diff_inf };
    Ok(MeshcheckReport {
        diff_inf,
        rel_error,
        diff,
        refined,
        u: out.u,
    })
}
