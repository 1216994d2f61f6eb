//! The continuation loop.

use std::sync::Arc;

use super::corrector::{
    cap_ds, compute_tangent, correct, newton_fixed_lambda, stepsize_control, Base, CorrectorOutcome, DecreaseTest,
    TangentOutcome,
};
use super::detect::{detect_bifurcation, evaluate_point, localize_bifurcation, PointSpectrum};
use super::settings::Parametrization;
use super::state::{default_xi, xi_norm, BifPoint, BranchRecord, ContinuationState, PointKind};
use crate::error::{Error, Result};
use crate::fem::estimator::{error_indicator, DEFAULT_ALPHA, DEFAULT_BETA};
use crate::fem::{adapt, AdaptControls, FemSpace, Mesh};
use crate::linalg::sparse::{norm2, norm_inf};
use crate::problem::System;

/// Hooks called by [`cont`] and [`crate::cont::pmcont`].
pub trait Observer {
    /// Called for every branch row, including bifurcation rows.
    fn on_step(&mut self, _sys: &System, _state: &ContinuationState, _record: &BranchRecord) -> Result<()> {
        Ok(())
    }

    /// Corrector and tangent data of the step just accepted.
    fn on_diagnostics(&mut self, _state: &ContinuationState, _diag: &StepDiagnostics) -> Result<()> {
        Ok(())
    }

    fn on_bifpoint(&mut self, _sys: &System, _state: &ContinuationState, _bif: &BifPoint) -> Result<()> {
        Ok(())
    }

    fn on_adapt(&mut self, _sys: &System, _state: &ContinuationState) -> Result<()> {
        Ok(())
    }

    /// Polled before every step; `true` ends the run.
    fn stop(&mut self, _state: &ContinuationState) -> bool {
        false
    }
}

impl Observer for () {}

/// Why a run ended.
#[derive(Clone, Debug, PartialEq)]
pub enum StopReason {
    StepsDone,
    LambdaBounds,
    User,
    /// No convergence at the smallest step; the state holds the last accepted point.
    NoConvergence(String),
}

/// Quality data of one accepted step.
#[derive(Clone, Debug)]
pub struct StepDiagnostics {
    pub step: usize,
    pub iterations: usize,
    pub residuals: Vec<f64>,
    pub parametrization: Parametrization,
    pub constraint: f64,
    pub tangent_residual: f64,
    pub kernel_residual: f64,
    pub tangent_norm: f64,
    pub orientation: f64,
}

/// Output of a run.
#[derive(Clone, Debug)]
pub struct ContOutcome {
    pub records: Vec<BranchRecord>,
    pub bifpoints: Vec<BifPoint>,
    pub diagnostics: Vec<StepDiagnostics>,
    pub stop: StopReason,
}

impl ContOutcome {
    fn new() -> Self {
        Self {
            records: Vec::new(),
            bifpoints: Vec::new(),
            diagnostics: Vec::new(),
            stop: StopReason::StepsDone,
        }
    }

    /// Turns a convergence failure into an error.
    pub fn into_result(self) -> Result<Self> {
        match &self.stop {
            StopReason::NoConvergence(m) => Err(Error::NoConvergence(m.clone())),
            _ => Ok(self),
        }
    }
}

pub(crate) fn record(sys: &System, state: &ContinuationState, kind: PointKind, u: &[f64], lam: f64) -> BranchRecord {
    BranchRecord {
        kind,
        step: state.step,
        lam,
        ds: state.ds,
        n_unstable: state.n_unstable(),
        err: state.err,
        outputs: sys.outputs(u, lam),
    }
}

fn no_convergence(what: &str, out: &CorrectorOutcome) -> Error {
    Error::NoConvergence(format!(
        "{what}: residual {:.3e} after {} iterations at lambda={}",
        out.residuals.last().copied().unwrap_or(f64::NAN),
        out.iterations,
        out.lam
    ))
}

/// Converges the initial guess at fixed `λ₀`, corrects a second point at
/// `λ₀ + ds`, and sets `τ₀` from the ξ-normalized secant, oriented by `sign(ds)`.
pub fn init_step(sys: &System, state: &mut ContinuationState) -> Result<()> {
    state.settings.validate()?;
    let s = &state.settings;
    let first = newton_fixed_lambda(sys, state.u.clone(), state.lam, s, None)?;
    if !first.converged {
        return Err(no_convergence("initial point", &first));
    }
    let second = newton_fixed_lambda(sys, first.u.clone(), state.lam + state.ds, s, None)?;
    if !second.converged {
        return Err(no_convergence("second initial point", &second));
    }
    let mut secant: Vec<f64> = second.u.iter().zip(&first.u).map(|(a, b)| a - b).collect();
    secant.push(state.ds);
    // ds·τ must point from the first point toward the second
    let nrm = xi_norm(&secant, state.xi) * state.ds.signum();
    secant.iter_mut().for_each(|v| *v /= nrm);
    // a proper tangent at the first point, oriented along the secant
    let (gu, glam) = sys.jacobian(&first.u, state.lam, s.jsw)?;
    let t = compute_tangent(sys, &gu, &glam, &secant, state.xi, s.bordered)?;
    let spec = evaluate_point(sys, &gu, &glam, &t.tau, s)?;
    state.u = first.u;
    state.tau = t.tau;
    state.spectral = spec.spectral;
    state.det_sign = spec.det_sign;
    state.restart = false;
    state.step = 0;
    if s.errchecksw {
        state.err = estimate_error(sys, &state.u, state.lam)?;
    }
    Ok(())
}

/// Largest residual-type error indicator at a state.
pub fn estimate_error(sys: &System, u: &[f64], lam: f64) -> Result<f64> {
    let coeffs = sys.problem.coefficients(&sys.space, u, lam)?;
    Ok(error_indicator(sys.mesh(), &coeffs, u, DEFAULT_ALPHA, DEFAULT_BETA)?.err)
}

/// Tangent and spectrum at a converged point; `tau0` fixes the orientation.
pub(crate) fn finish_point(
    sys: &System,
    u: &[f64],
    lam: f64,
    tau0: &[f64],
    xi: f64,
    state: &ContinuationState,
) -> Result<(TangentOutcome, PointSpectrum)> {
    let s = &state.settings;
    let (gu, glam) = sys.jacobian(u, lam, s.jsw)?;
    let t = compute_tangent(sys, &gu, &glam, tau0, xi, s.bordered)?;
    let spec = evaluate_point(sys, &gu, &glam, &t.tau, s)?;
    Ok((t, spec))
}

pub(crate) fn diagnostics(step: usize, out: &CorrectorOutcome, t: &TangentOutcome, xi: f64) -> StepDiagnostics {
    StepDiagnostics {
        step,
        iterations: out.iterations,
        residuals: out.residuals.clone(),
        parametrization: out.parametrization,
        constraint: out.constraint,
        tangent_residual: t.residual,
        kernel_residual: t.kernel_residual,
        tangent_norm: xi_norm(&t.tau, xi),
        orientation: t.orientation,
    }
}

pub(crate) fn log_step(state: &ContinuationState, out: &CorrectorOutcome) {
    log::info!(
        "step {:4} lam={:.8} |u|={:.5e} res={:.2e} iter={} ds={:.3e} unstable={}",
        state.step,
        state.lam,
        norm2(&state.u),
        out.residuals.last().copied().unwrap_or(0.0),
        out.iterations,
        state.ds,
        state.n_unstable().map_or("-".into(), |n| n.to_string())
    );
}

/// Accepts a corrected point into `state`, running detection and localization
/// against the previous point. Returns the records to append (a bifurcation
/// row first, if one was found).
pub(crate) fn accept_point(
    sys: &System,
    state: &mut ContinuationState,
    out: &CorrectorOutcome,
    ds: f64,
    tangent: TangentOutcome,
    spectrum: PointSpectrum,
    outcome: &mut ContOutcome,
    observer: &mut dyn Observer,
) -> Result<()> {
    let prev = (state.u.clone(), state.lam, state.tau.clone(), state.det_sign, state.n_unstable());
    let xi = state.xi;
    state.u = out.u.clone();
    state.lam = out.lam;
    state.tau = tangent.tau.clone();
    state.ds = ds;
    state.step += 1;
    state.spectral = spectrum.spectral;
    state.det_sign = spectrum.det_sign;
    if state.settings.errchecksw {
        state.err = estimate_error(sys, &state.u, state.lam)?;
    }
    let diag = diagnostics(state.step, out, &tangent, xi);
    observer.on_diagnostics(state, &diag)?;
    outcome.diagnostics.push(diag);
    log_step(state, out);

    let mode = state.settings.bifchecksw;
    if mode > 0 && !state.adapted {
        if let (Some(s0), Some(s1)) = (prev.3, state.det_sign) {
            if detect_bifurcation(mode, s0, s1, prev.4, state.n_unstable()) {
                let base = Base {
                    u: &prev.0,
                    lam: prev.1,
                    tau: &prev.2,
                    xi,
                };
                let counts = (prev.4, state.n_unstable());
                match localize_bifurcation(sys, &base, &state.settings, ds, s0, s1, counts, state.bif_count + 1) {
                    Ok(bif) => {
                        state.bif_count += 1;
                        log::info!("bifurcation {} located at lambda={:.8}", bif.index, bif.lam);
                        let mut rec = record(sys, state, PointKind::Bifurcation, &bif.u, bif.lam);
                        rec.n_unstable = counts.0;
                        observer.on_step(sys, state, &rec)?;
                        observer.on_bifpoint(sys, state, &bif)?;
                        outcome.records.push(rec);
                        outcome.bifpoints.push(bif);
                    }
                    Err(e) => log::warn!("localization failed near lambda={:.6}: {e}", state.lam),
                }
            }
        }
    }
    state.adapted = false;
    let rec = record(sys, state, PointKind::Regular, &state.u, state.lam);
    observer.on_step(sys, state, &rec)?;
    outcome.records.push(rec);
    Ok(())
}

/// Interpolates `(u, u̇)` to a mesh adapted from the base mesh, re-solves at
/// fixed `λ` and recomputes the tangent.
pub fn adapt_state(sys: &mut System, state: &mut ContinuationState) -> Result<()> {
    let s = state.settings.clone();
    let n = state.n();
    let ncomp = sys.space.components();
    let problem = sys.problem.clone();
    let lam = state.lam;
    let estimate = |mesh: &Mesh, u: &[f64]| -> Result<Vec<f64>> {
        let space = FemSpace::new(Arc::new(mesh.clone()), ncomp);
        let coeffs = problem.coefficients(&space, u, lam)?;
        Ok(error_indicator(mesh, &coeffs, u, DEFAULT_ALPHA, DEFAULT_BETA)?.indicator)
    };
    let controls = AdaptControls {
        maxt: s.maxt,
        ngen: s.ngen,
        eb: s.errbound.unwrap_or(AdaptControls::default().eb),
        ..AdaptControls::default()
    };
    let fields = vec![state.u.clone(), state.tau[..n].to_vec()];
    let adapted = adapt(sys.mesh(), &sys.base, &fields, controls, estimate)?;
    log::info!(
        "mesh adapted: {} -> {} triangles, err={:.3e} after {} passes",
        sys.mesh().n_triangles(),
        adapted.mesh.n_triangles(),
        adapted.err,
        adapted.passes
    );
    let new_sys = sys.with_mesh(Arc::new(adapted.mesh));
    let out = newton_fixed_lambda(&new_sys, adapted.fields[0].clone(), lam, &s, None)?;
    if !out.converged {
        return Err(no_convergence("re-solve after mesh adaption", &out));
    }
    if s.xi.is_none() {
        state.xi = default_xi(new_sys.n_points());
    }
    let mut tau0 = adapted.fields[1].clone();
    tau0.push(state.lam_dot());
    let nrm = xi_norm(&tau0, state.xi);
    tau0.iter_mut().for_each(|v| *v /= nrm);
    let (t, spec) = finish_point(&new_sys, &out.u, lam, &tau0, state.xi, state)?;
    state.u = out.u;
    state.tau = t.tau;
    state.spectral = spec.spectral;
    state.det_sign = spec.det_sign;
    state.err = adapted.err;
    state.adapted = true;
    *sys = new_sys;
    Ok(())
}

fn wants_adapt(state: &ContinuationState) -> bool {
    let s = &state.settings;
    (s.amod > 0 && state.step.is_multiple_of(s.amod)) || s.errbound.is_some_and(|eb| s.errchecksw && state.err > eb)
}

/// Pseudo-arclength continuation for `nsteps` steps from `state`.
pub fn cont(sys: &mut System, state: &mut ContinuationState, observer: &mut dyn Observer) -> Result<ContOutcome> {
    state.settings.validate()?;
    let mut outcome = ContOutcome::new();
    if state.restart {
        init_step(sys, state)?;
        let rec = record(sys, state, PointKind::Regular, &state.u, state.lam);
        observer.on_step(sys, state, &rec)?;
        outcome.records.push(rec);
    }
    for _ in 0..state.settings.nsteps {
        if observer.stop(state) {
            outcome.stop = StopReason::User;
            return Ok(outcome);
        }
        let s = state.settings.clone();
        let mut ds = state.ds;
        let (out, tangent, spectrum) = loop {
            ds = cap_ds(ds, state.lam_dot(), s.dlammax);
            let base = Base {
                u: &state.u,
                lam: state.lam,
                tau: &state.tau,
                xi: state.xi,
            };
            let attempt = correct(sys, &base, ds, &s, None).and_then(|out| {
                if !out.converged {
                    return Err(no_convergence("corrector", &out));
                }
                let (t, spec) = finish_point(sys, &out.u, out.lam, &state.tau, state.xi, state)?;
                Ok((out, t, spec))
            });
            match attempt {
                Ok(ok) => break ok,
                Err(e) => match stepsize_control(false, s.imax, ds, state.lam_dot(), &s) {
                    Some(next) => {
                        log::debug!("step failed at ds={ds:.3e} ({e}); retrying with {next:.3e}");
                        ds = next;
                    }
                    None => {
                        log::warn!("no convergence at ds={ds:.3e}: {e}");
                        outcome.stop = StopReason::NoConvergence(e.to_string());
                        return Ok(outcome);
                    }
                },
            }
        };
        let iterations = out.iterations;
        accept_point(sys, state, &out, ds, tangent, spectrum, &mut outcome, observer)?;
        state.ds = stepsize_control(true, iterations, ds, state.lam_dot(), &s).unwrap_or(ds);
        if state.lam < s.lammin || state.lam > s.lammax {
            outcome.stop = StopReason::LambdaBounds;
            return Ok(outcome);
        }
        if wants_adapt(state) {
            adapt_state(sys, state)?;
            observer.on_adapt(sys, state)?;
        }
    }
    Ok(outcome)
}

/// Residual test shared with the multi-predictor loop.
pub(crate) fn decrease_test(state: &ContinuationState, pmimax: usize) -> DecreaseTest {
    DecreaseTest {
        resfac: state.settings.resfac,
        window: pmimax,
    }
}

/// `‖u − mean u‖_∞` of the first component.
pub fn deviation_from_mean(u: &[f64], n_points: usize) -> f64 {
    let u1 = &u[..n_points];
    let mean = u1.iter().sum::<f64>() / n_points as f64;
    norm_inf(&u1.iter().map(|v| v - mean).collect::<Vec<_>>())
}
