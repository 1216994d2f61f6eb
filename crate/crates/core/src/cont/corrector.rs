//! Predictor-corrector pieces: Newton correctors, tangents and step size rules.

use super::settings::{CorrectorKind, Parametrization, Settings};
use super::state::{xi_inner, xi_norm};
use crate::error::{Error, Result};
use crate::linalg::sparse::norm_inf;
use crate::linalg::{BorderedLu, BorderedMethod, BorderedSystem, JacobianOp};
use crate::problem::System;

/// Result of one corrector run.
#[derive(Clone, Debug)]
pub struct CorrectorOutcome {
    pub u: Vec<f64>,
    pub lam: f64,
    /// Newton updates performed.
    pub iterations: usize,
    /// `‖H‖_∞` at every iterate, starting with the predictor.
    pub residuals: Vec<f64>,
    pub converged: bool,
    pub parametrization: Parametrization,
    /// Arclength constraint at the last iterate (zero for natural steps).
    pub constraint: f64,
}

/// Residual-decrease test of the multi-predictor method: the residual must
/// drop by `resfac` over every window of `window` Newton steps.
#[derive(Clone, Copy, Debug)]
pub struct DecreaseTest {
    pub resfac: f64,
    pub window: usize,
}

impl DecreaseTest {
    pub fn passes(&self, residuals: &[f64]) -> bool {
        let w = self.window.max(1);
        residuals.windows(w + 1).all(|r| r[w] <= self.resfac * r[0])
    }

    fn last_ok(&self, residuals: &[f64]) -> bool {
        let w = self.window.max(1);
        let k = residuals.len();
        k <= w || residuals[k - 1] <= self.resfac * residuals[k - 1 - w]
    }
}

/// The starting point of a corrector: `(u₀, λ₀)` with tangent `τ₀`.
#[derive(Clone, Copy, Debug)]
pub struct Base<'a> {
    pub u: &'a [f64],
    pub lam: f64,
    pub tau: &'a [f64],
    pub xi: f64,
}

impl Base<'_> {
    fn lam_dot(&self) -> f64 {
        self.tau[self.u.len()]
    }

    /// `(u₀, λ₀) + ds·τ₀`.
    pub fn predictor(&self, ds: f64) -> (Vec<f64>, f64) {
        let u = self.u.iter().zip(self.tau).map(|(a, t)| a + ds * t).collect();
        (u, self.lam + ds * self.lam_dot())
    }

    /// `p = ξ⟨u̇₀, u−u₀⟩ + (1−ξ)λ̇₀(λ−λ₀) − ds`.
    pub fn constraint(&self, u: &[f64], lam: f64, ds: f64) -> f64 {
        let du: f64 = self.tau.iter().zip(u.iter().zip(self.u)).map(|(t, (a, b))| t * (a - b)).sum();
        self.xi * du + (1.0 - self.xi) * self.lam_dot() * (lam - self.lam) - ds
    }

    fn row_u(&self) -> Vec<f64> {
        self.tau[..self.u.len()].iter().map(|t| self.xi * t).collect()
    }

    fn row_lam(&self) -> f64 {
        (1.0 - self.xi) * self.lam_dot()
    }
}

/// Natural parametrization when `parasw = 0`, or `parasw = 1` and `|λ̇| > lamdtol`.
pub fn parametrization_choice(settings: &Settings, lam_dot: f64) -> Parametrization {
    match settings.parasw {
        0 => Parametrization::Natural,
        1 if lam_dot.abs() > settings.lamdtol => Parametrization::Natural,
        _ => Parametrization::Arclength,
    }
}

fn factor_bordered(
    sys: &System,
    gu: &JacobianOp,
    glam: &[f64],
    base: &Base<'_>,
    method: BorderedMethod,
) -> Result<BorderedLu> {
    let row_u = base.row_u();
    BorderedSystem {
        gu,
        glam,
        row_u: &row_u,
        row_lam: base.row_lam(),
    }
    .factor(method, Some(&sys.cache))
}

fn finite(x: &[f64]) -> bool {
    x.iter().all(|v| v.is_finite())
}

/// Newton (or chord) on `H = (G, p) = 0` from the predictor at step `ds`.
pub fn corrector_arclength(
    sys: &System,
    base: &Base<'_>,
    ds: f64,
    settings: &Settings,
    decrease: Option<DecreaseTest>,
) -> Result<CorrectorOutcome> {
    let tol = settings.tolerance(base.u.len());
    let (mut u, mut lam) = base.predictor(ds);
    let mut residuals = Vec::new();
    let mut frozen: Option<BorderedLu> = None;
    let mut iterations = 0;
    loop {
        let r = sys.residual(&u, lam)?;
        let p = base.constraint(&u, lam, ds);
        let res = norm_inf(&r).max(p.abs());
        residuals.push(res);
        let done = |converged| CorrectorOutcome {
            u: u.clone(),
            lam,
            iterations,
            residuals: residuals.clone(),
            converged,
            parametrization: Parametrization::Arclength,
            constraint: p,
        };
        if !res.is_finite() {
            return Ok(done(false));
        }
        if res <= tol {
            return Ok(done(true));
        }
        if iterations >= settings.imax || decrease.is_some_and(|d| !d.last_ok(&residuals)) {
            return Ok(done(false));
        }
        let step = match (&frozen, settings.nsw) {
            (Some(lu), CorrectorKind::Chord) => lu.solve(&r, p)?,
            _ => {
                let (gu, glam) = sys.jacobian(&u, lam, settings.jsw)?;
                let lu = factor_bordered(sys, &gu, &glam, base, settings.bordered)?;
                let d = lu.solve(&r, p)?;
                if settings.nsw == CorrectorKind::Chord {
                    frozen = Some(lu);
                }
                d
            }
        };
        if !finite(&step) {
            return Ok(done(false));
        }
        let n = u.len();
        u.iter_mut().zip(&step).for_each(|(a, d)| *a -= d);
        lam -= step[n];
        iterations += 1;
    }
}

/// Newton on `G(·, λ₁) = 0` with `λ₁ = λ₀ + ds·λ̇₀` frozen.
pub fn corrector_natural(
    sys: &System,
    base: &Base<'_>,
    ds: f64,
    settings: &Settings,
    decrease: Option<DecreaseTest>,
) -> Result<CorrectorOutcome> {
    let (u0, lam) = base.predictor(ds);
    let mut out = newton_fixed_lambda(sys, u0, lam, settings, decrease)?;
    out.parametrization = Parametrization::Natural;
    Ok(out)
}

/// Plain Newton in `u` at fixed `λ`.
pub fn newton_fixed_lambda(
    sys: &System,
    mut u: Vec<f64>,
    lam: f64,
    settings: &Settings,
    decrease: Option<DecreaseTest>,
) -> Result<CorrectorOutcome> {
    let tol = settings.tolerance(u.len());
    let mut residuals = Vec::new();
    let mut iterations = 0;
    let mut frozen = None;
    loop {
        let r = sys.residual(&u, lam)?;
        let res = norm_inf(&r);
        residuals.push(res);
        let converged = res <= tol;
        if !res.is_finite()
            || converged
            || iterations >= settings.imax
            || decrease.is_some_and(|d| !d.last_ok(&residuals))
        {
            return Ok(CorrectorOutcome {
                u,
                lam,
                iterations,
                residuals,
                converged: converged && res.is_finite(),
                parametrization: Parametrization::Natural,
                constraint: 0.0,
            });
        }
        let step = match (&frozen, settings.nsw) {
            (Some(lu), CorrectorKind::Chord) => crate::linalg::JacobianLu::solve(lu, &r)?,
            _ => {
                let (gu, _) = sys.jacobian(&u, lam, settings.jsw)?;
                let lu = gu.factor(Some(&sys.cache))?;
                let d = lu.solve(&r)?;
                if settings.nsw == CorrectorKind::Chord {
                    frozen = Some(lu);
                }
                d
            }
        };
        if !finite(&step) {
            return Ok(CorrectorOutcome {
                u,
                lam,
                iterations,
                residuals,
                converged: false,
                parametrization: Parametrization::Natural,
                constraint: 0.0,
            });
        }
        u.iter_mut().zip(&step).for_each(|(a, d)| *a -= d);
        iterations += 1;
    }
}

/// Corrects with the parametrization chosen from `settings` and `λ̇₀`.
pub fn correct(
    sys: &System,
    base: &Base<'_>,
    ds: f64,
    settings: &Settings,
    decrease: Option<DecreaseTest>,
) -> Result<CorrectorOutcome> {
    match parametrization_choice(settings, base.lam_dot()) {
        Parametrization::Natural => corrector_natural(sys, base, ds, settings, decrease),
        Parametrization::Arclength => corrector_arclength(sys, base, ds, settings, decrease),
    }
}

/// A new tangent and its quality measures.
#[derive(Clone, Debug)]
pub struct TangentOutcome {
    pub tau: Vec<f64>,
    /// `‖A τ_raw − (0,…,0,1)‖_∞` for the unnormalized solve.
    pub residual: f64,
    /// `‖G_u u̇ + G_λ λ̇‖_∞` for the normalized tangent.
    pub kernel_residual: f64,
    /// `⟨τ₀, τ₁⟩_ξ`.
    pub orientation: f64,
}

/// Solves `A τ = (0, 1)` with the row `(ξu̇₀, (1−ξ)λ̇₀)` and normalizes in the ξ-norm.
pub fn compute_tangent(
    sys: &System,
    gu: &JacobianOp,
    glam: &[f64],
    tau0: &[f64],
    xi: f64,
    method: BorderedMethod,
) -> Result<TangentOutcome> {
    let n = gu.dim();
    let zero = vec![0.0; n];
    let base = Base {
        u: &zero,
        lam: 0.0,
        tau: tau0,
        xi,
    };
    let row_u = base.row_u();
    let a = BorderedSystem {
        gu,
        glam,
        row_u: &row_u,
        row_lam: base.row_lam(),
    };
    let raw = a.factor(method, Some(&sys.cache))?.solve(&zero, 1.0)?;
    if !finite(&raw) {
        return Err(Error::Singular("tangent solve produced non-finite values".into()));
    }
    let mut check = a.matvec(&raw);
    check[n] -= 1.0;
    let residual = norm_inf(&check);
    let nrm = xi_norm(&raw, xi);
    let mut tau: Vec<f64> = raw.iter().map(|v| v / nrm).collect();
    let mut orientation = xi_inner(tau0, &tau, xi);
    if orientation < 0.0 {
        tau.iter_mut().for_each(|v| *v = -*v);
        orientation = -orientation;
    }
    let mut k = gu.matvec(&tau[..n]);
    k.iter_mut().zip(glam).for_each(|(a, g)| *a += g * tau[n]);
    Ok(TangentOutcome {
        tau,
        residual,
        kernel_residual: norm_inf(&k),
        orientation,
    })
}

/// Limits `|ds·λ̇|` to `dlammax`, keeping the sign of `ds`.
pub fn cap_ds(ds: f64, lam_dot: f64, dlammax: f64) -> f64 {
    if (ds * lam_dot).abs() > dlammax {
        ds.signum() * dlammax / lam_dot.abs()
    } else {
        ds
    }
}

/// New `ds` after a corrector run, or `None` when the step cannot be reduced further.
pub fn stepsize_control(converged: bool, iterations: usize, ds: f64, lam_dot: f64, settings: &Settings) -> Option<f64> {
    let sign = ds.signum();
    let mag = ds.abs();
    if !converged {
        if mag <= settings.dsmin * (1.0 + 1e-12) {
            return None;
        }
        return Some(sign * (mag / 2.0).max(settings.dsmin));
    }
    let mut next = mag;
    if 2 * iterations < settings.imax {
        next = (mag * settings.dsincfac).min(settings.dsmax);
    }
    let next = cap_ds(sign * next, lam_dot, settings.dlammax).abs();
    Some(sign * next.max(settings.dsmin.min(mag)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parametrization_rules() {
        let mut s = Settings::default();
        s.parasw = 2;
        assert_eq!(parametrization_choice(&s, 10.0), Parametrization::Arclength);
        s.parasw = 0;
        assert_eq!(parametrization_choice(&s, 0.0), Parametrization::Natural);
        s.parasw = 1;
        s.lamdtol = 0.5;
        assert_eq!(parametrization_choice(&s, 0.6), Parametrization::Natural);
        assert_eq!(parametrization_choice(&s, -0.4), Parametrization::Arclength);
    }

    #[test]
    fn stepsize_examples() {
        let s = Settings {
            imax: 10,
            dsmax: 0.1,
            dsmin: 1e-3,
            ..Settings::default()
        };
        assert_eq!(stepsize_control(true, 2, 0.05, 0.1, &s), Some(0.1));
        assert_eq!(stepsize_control(true, 7, 0.05, 0.1, &s), Some(0.05));
        assert_eq!(stepsize_control(false, 10, -0.05, 0.1, &s), Some(-0.025));
        assert_eq!(stepsize_control(false, 10, 1e-3, 0.1, &s), None);
        let s = Settings {
            dlammax: 0.02,
            dsmax: 1.0,
            ..Settings::default()
        };
        let ds = stepsize_control(true, 1, 0.05, 1.0, &s).unwrap();
        assert!(ds <= 0.02 + 1e-15);
    }

    #[test]
    fn decrease_windows() {
        let d = DecreaseTest { resfac: 0.5, window: 1 };
        assert!(d.passes(&[1.0, 0.4, 0.1]));
        assert!(!d.passes(&[1.0, 0.6]));
        let d = DecreaseTest { resfac: 0.5, window: 2 };
        assert!(d.passes(&[1.0, 0.9, 0.4, 0.3]));
    }
}
