//! Branch switching at a simple bifurcation point.

use super::state::{xi_norm, BifPoint, ContinuationState, SwitchData};
use crate::error::{Error, Result};
use crate::linalg::sparse::{dot, norm_inf};
use crate::problem::System;

/// Ratio `|μ₁|/|μ₂|` above which the kernel is not treated as simple.
const SIMPLE_KERNEL_RATIO: f64 = 0.1;

/// Coefficients of the bifurcation equation at `bif` and the tangent of the
/// new branch, normalized with weight `xi`.
pub fn switch_data(sys: &System, bif: &BifPoint, jsw: u8, xi: f64) -> Result<SwitchData> {
    let n = bif.u.len();
    if bif.mu.abs() > SIMPLE_KERNEL_RATIO * bif.mu_next {
        return Err(Error::Bifurcation(format!(
            "kernel is not simple: |mu1|={:.3e}, |mu2|={:.3e}; change ds and/or xi and relocate",
            bif.mu.abs(),
            bif.mu_next
        )));
    }
    let (u0, lam0) = (&bif.u, bif.lam);
    let (udot, alpha0) = (&bif.tau[..n], bif.tau[n]);
    if alpha0.abs() < 1e-8 * xi_norm(&bif.tau, xi).max(1.0) {
        return Err(Error::Bifurcation("pitchfork-through-fold case not implemented".into()));
    }
    let (phi, psi) = (&bif.phi, &bif.psi);
    let alpha1 = dot(psi, udot);
    let phi0: Vec<f64> = udot.iter().zip(phi).map(|(t, p)| (t - alpha1 * p) / alpha0).collect();

    let delta = 1e-4 * (1.0 + norm_inf(u0));
    let up: Vec<f64> = u0.iter().zip(phi).map(|(a, p)| a + delta * p).collect();
    let (gu0, glam0) = sys.jacobian(u0, lam0, jsw)?;
    let (gu1, glam1) = sys.jacobian(&up, lam0, jsw)?;
    let dgu = |x: &[f64]| -> Vec<f64> {
        let a = gu1.matvec(x);
        let b = gu0.matvec(x);
        a.iter().zip(&b).map(|(p, q)| p - q).collect()
    };
    let a1 = dot(psi, &dgu(phi)) / delta;
    let mut w = dgu(&phi0);
    w.iter_mut().zip(glam1.iter().zip(&glam0)).for_each(|(a, (g1, g0))| *a += g1 - g0);
    let b1 = dot(psi, &w) / delta;
    let alpha_bar = -(a1 * alpha1 / alpha0 + 2.0 * b1);

    let mut tau: Vec<f64> = phi.iter().zip(&phi0).map(|(p, q)| alpha_bar * p + a1 * q).collect();
    tau.push(a1);
    let nrm = xi_norm(&tau, xi);
    if !(nrm > 0.0 && nrm.is_finite()) {
        return Err(Error::Bifurcation("degenerate switching direction".into()));
    }
    tau.iter_mut().for_each(|v| *v /= nrm);
    Ok(SwitchData {
        alpha0,
        alpha1,
        a1,
        b1,
        alpha_bar,
        phi0,
        tau_new: tau,
    })
}

/// A state at the bifurcation point, pointing along the bifurcating branch
/// with signed step `ds`. `xi = None` keeps the weight of `template`.
pub fn swibra(
    sys: &System,
    bif: &mut BifPoint,
    template: &ContinuationState,
    ds: f64,
    xi: Option<f64>,
) -> Result<ContinuationState> {
    let xi = xi.unwrap_or(template.xi);
    let data = switch_data(sys, bif, template.settings.jsw, xi)?;
    log::info!(
        "swibra: alpha0={:.4e} alpha1={:.4e} a1={:.4e} b1={:.4e} alpha_bar={:.4e}",
        data.alpha0,
        data.alpha1,
        data.a1,
        data.b1,
        data.alpha_bar
    );
    let mut state = template.clone();
    state.u = bif.u.clone();
    state.lam = bif.lam;
    state.tau = data.tau_new.clone();
    state.ds = ds;
    state.xi = xi;
    state.step = 0;
    state.spectral = None;
    state.det_sign = None;
    state.restart = false;
    state.adapted = false;
    bif.switch = Some(data);
    Ok(state)
}
