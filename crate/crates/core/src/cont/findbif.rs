//! Locating changes in the number of unstable eigenvalues.

use super::corrector::{cap_ds, correct, stepsize_control, Base};
use super::detect::point_at;
use super::run::{finish_point, init_step};
use super::state::ContinuationState;
use crate::error::{Error, Result};
use crate::problem::System;

/// Two nearby points on a branch with different unstable counts.
#[derive(Clone, Debug)]
pub struct Bracket {
    pub left: ContinuationState,
    pub right: ContinuationState,
    /// Arclength distance between the two.
    pub width: f64,
    /// Accepted continuation steps taken before the change was seen.
    pub steps: usize,
}

fn count(state: &ContinuationState) -> Result<usize> {
    state
        .n_unstable()
        .ok_or_else(|| Error::InvalidInput("findbif needs spectral data".into()))
}

/// Steps along the branch until the unstable count changes, then bisects in
/// arclength (at most `bisecmax` times) on the count.
pub fn findbif(sys: &System, state: &ContinuationState) -> Result<Bracket> {
    let mut cur = state.clone();
    cur.settings.spcalcsw = true;
    cur.settings.validate()?;
    if cur.restart {
        init_step(sys, &mut cur)?;
    } else if cur.spectral.is_none() {
        let (t, spec) = finish_point(sys, &cur.u.clone(), cur.lam, &cur.tau.clone(), cur.xi, &cur)?;
        cur.tau = t.tau;
        cur.spectral = spec.spectral;
        cur.det_sign = spec.det_sign;
    }
    let s = cur.settings.clone();
    let c0 = count(&cur)?;
    for k in 0..s.nsteps {
        let mut ds = cur.ds;
        let (out, t, spec) = loop {
            ds = cap_ds(ds, cur.lam_dot(), s.dlammax);
            let base = Base {
                u: &cur.u,
                lam: cur.lam,
                tau: &cur.tau,
                xi: cur.xi,
            };
            let attempt = correct(sys, &base, ds, &s, None).and_then(|out| {
                if !out.converged {
                    return Err(Error::NoConvergence(format!("findbif corrector at lambda={}", out.lam)));
                }
                let (t, spec) = finish_point(sys, &out.u, out.lam, &cur.tau, cur.xi, &cur)?;
                Ok((out, t, spec))
            });
            match attempt {
                Ok(ok) => break ok,
                Err(e) => match stepsize_control(false, s.imax, ds, cur.lam_dot(), &s) {
                    Some(next) => ds = next,
                    None => return Err(e),
                },
            }
        };
        let new_count = spec.spectral.as_ref().map(|sp| sp.n_negative);
        if new_count != Some(c0) {
            let width = ds;
            let base = Base {
                u: &cur.u,
                lam: cur.lam,
                tau: &cur.tau,
                xi: cur.xi,
            };
            let (mut a, mut b) = (0.0, width);
            let mut right = (out.u.clone(), out.lam, t.tau.clone(), spec);
            let mut left: Option<(Vec<f64>, f64, Vec<f64>, _)> = None;
            for _ in 0..s.bisecmax {
                let mid = 0.5 * (a + b);
                let p = point_at(sys, &base, mid, &s)?;
                let cm = p.spectrum.spectral.as_ref().map(|sp| sp.n_negative);
                if cm == Some(c0) {
                    a = mid;
                    left = Some((p.u, p.lam, p.tau, p.spectrum));
                } else {
                    b = mid;
                    right = (p.u, p.lam, p.tau, p.spectrum);
                }
            }
            let mut l = cur.clone();
            if let Some((u, lam, tau, sp)) = left {
                l.u = u;
                l.lam = lam;
                l.tau = tau;
                l.spectral = sp.spectral;
                l.det_sign = sp.det_sign;
            }
            let mut r = cur.clone();
            r.u = right.0;
            r.lam = right.1;
            r.tau = right.2;
            r.spectral = right.3.spectral;
            r.det_sign = right.3.det_sign;
            r.step = cur.step + 1;
            log::info!(
                "findbif: unstable count {c0} -> {:?} between lambda={:.8} and {:.8}",
                r.n_unstable(),
                l.lam,
                r.lam
            );
            return Ok(Bracket {
                left: l,
                right: r,
                width: (b - a).abs(),
                steps: k + 1,
            });
        }
        cur.u = out.u;
        cur.lam = out.lam;
        cur.tau = t.tau;
        cur.spectral = spec.spectral;
        cur.det_sign = spec.det_sign;
        cur.step += 1;
        cur.ds = stepsize_control(true, out.iterations, ds, cur.lam_dot(), &s).unwrap_or(ds);
        if cur.lam < s.lammin || cur.lam > s.lammax {
            break;
        }
    }
    Err(Error::NotFound(format!(
        "no change of the unstable count ({c0}) within {} steps",
        s.nsteps
    )))
}
