//! Continuation with several predictors per round, corrected concurrently.

use super::corrector::{cap_ds, correct, stepsize_control, Base, CorrectorOutcome};
use super::run::{accept_point, adapt_state, finish_point, init_step, record, ContOutcome, Observer, StopReason};
use super::run::decrease_test;
use super::state::{xi_inner, ContinuationState, PointKind};
use crate::error::Result;
use crate::par;
use crate::problem::System;

fn good(out: &Result<CorrectorOutcome>) -> Option<&CorrectorOutcome> {
    match out {
        Ok(o) if o.converged => Some(o),
        _ => None,
    }
}

/// Runs rounds of `mst` predictors `(u₀,λ₀) + i·ds·τ₀` until `nsteps`
/// points are accepted. A predictor is good when its Newton loop converges
/// and every `pmimax` steps reduce the residual by `resfac`.
pub fn pmcont(sys: &mut System, state: &mut ContinuationState, observer: &mut dyn Observer) -> Result<ContOutcome> {
    state.settings.validate()?;
    let mut outcome = ContOutcome {
        records: Vec::new(),
        bifpoints: Vec::new(),
        diagnostics: Vec::new(),
        stop: StopReason::StepsDone,
    };
    if state.restart {
        init_step(sys, state)?;
        let rec = record(sys, state, PointKind::Regular, &state.u, state.lam);
        observer.on_step(sys, state, &rec)?;
        outcome.records.push(rec);
    }
    let mut pmimax = state.settings.pmimax;
    let mut accepted = 0;
    while accepted < state.settings.nsteps {
        if observer.stop(state) {
            outcome.stop = StopReason::User;
            return Ok(outcome);
        }
        let s = state.settings.clone();
        let ds = cap_ds(state.ds, state.lam_dot(), s.dlammax);
        let test = decrease_test(state, pmimax);
        let outs = {
            let base = Base {
                u: &state.u,
                lam: state.lam,
                tau: &state.tau,
                xi: state.xi,
            };
            let sys_ref: &System = sys;
            par::map_indexed(s.mst, |i| correct(sys_ref, &base, (i + 1) as f64 * ds, &s, Some(test)))
        };
        let mut n_good = 0;
        let mut max_iter = 0;
        for out in outs.iter().filter_map(good) {
            let prev = state.point();
            let (t, spec) = match finish_point(sys, &out.u, out.lam, &state.tau, state.xi, state) {
                Ok(ok) => ok,
                Err(e) => {
                    log::warn!("pmcont: tangent failed at lambda={:.6}: {e}", out.lam);
                    break;
                }
            };
            let mut x = out.u.clone();
            x.push(out.lam);
            x.iter_mut().zip(&prev).for_each(|(a, b)| *a -= b);
            let step = xi_inner(&state.tau, &x, state.xi);
            accept_point(sys, state, out, step, t, spec, &mut outcome, observer)?;
            n_good += 1;
            max_iter = max_iter.max(out.iterations);
            accepted += 1;
            if state.lam < s.lammin || state.lam > s.lammax {
                outcome.stop = StopReason::LambdaBounds;
                return Ok(outcome);
            }
        }
        if n_good == s.mst {
            state.ds = stepsize_control(true, max_iter, ds, state.lam_dot(), &s).unwrap_or(ds);
        } else if n_good > 0 {
            state.ds = ds;
        } else if ds.abs() > (1 + s.mst) as f64 * s.dsmin {
            state.ds = ds / (1 + s.mst) as f64;
            log::debug!("pmcont: no good point, ds -> {:.3e}", state.ds);
        } else if pmimax < s.imax {
            pmimax += 1;
            state.ds = ds;
            log::debug!("pmcont: relaxing the residual test to {pmimax} steps");
        } else {
            let msg = format!("pmcont: no good predictor at ds={ds:.3e} with pmimax={pmimax}");
            log::warn!("{msg}");
            outcome.stop = StopReason::NoConvergence(msg);
            return Ok(outcome);
        }
        if n_good > 0 && (s.amod > 0 || s.errbound.is_some()) {
            let s = &state.settings;
            let due = (s.amod > 0 && state.step % s.amod < n_good)
                || s.errbound.is_some_and(|eb| s.errchecksw && state.err > eb);
            if due {
                adapt_state(sys, state)?;
                observer.on_adapt(sys, state)?;
            }
        }
    }
    Ok(outcome)
}
