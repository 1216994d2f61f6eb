//! Spectral data, bifurcation detection and localization by bisection.

use super::corrector::{compute_tangent, corrector_arclength, Base};
use super::settings::Settings;
use super::state::BifPoint;
use crate::error::{Error, Result};
use crate::linalg::sparse::dot;
use crate::linalg::{det_sign, eigenpairs_factored, gu_eigenpairs, JacobianOp, SpectralData};
use crate::problem::System;

/// Weight of the tangent row in the matrix whose determinant is monitored.
pub const DETECTION_XI: f64 = 0.5;

/// Stability data at a point.
#[derive(Clone, Debug, Default)]
pub struct PointSpectrum {
    pub spectral: Option<SpectralData>,
    /// `sign det A` with the tangent row weighted by [`DETECTION_XI`];
    /// `Some(0)` when the sign is numerically zero.
    pub det_sign: Option<i8>,
}

fn sign_of(v: f64) -> i8 {
    if v > 0.0 {
        1
    } else if v < 0.0 {
        -1
    } else {
        0
    }
}

/// Eigenvalues of `G_u` nearest zero and the sign of `det A`.
///
/// `det A = det G_u · s` with the Schur complement `s = ½λ̇ − ½u̇ᵀG_u⁻¹G_λ`,
/// so one factorization of `G_u` serves both the eigenvalues and the sign.
pub fn evaluate_point(
    sys: &System,
    gu: &JacobianOp,
    glam: &[f64],
    tau: &[f64],
    settings: &Settings,
) -> Result<PointSpectrum> {
    if !settings.wants_spectrum() {
        return Ok(PointSpectrum::default());
    }
    let n = gu.dim();
    match gu.factor(Some(&sys.cache)) {
        Ok(lu) => {
            let pairs = eigenpairs_factored(&lu, &sys.mass, settings.neig, 0, false)?;
            let spec = SpectralData::from_eigenvalues(pairs.into_iter().map(|p| p.value).collect());
            let z = lu.solve(glam)?;
            let schur = DETECTION_XI * tau[n] - DETECTION_XI * dot(&tau[..n], &z);
            let det = match det_sign(&spec) {
                Ok(s) => Some(s * sign_of(schur)),
                Err(Error::DegenerateSign) => Some(0),
                Err(e) => return Err(e),
            };
            Ok(PointSpectrum {
                spectral: Some(spec),
                det_sign: det,
            })
        }
        Err(Error::Singular(_)) => {
            let pairs = gu_eigenpairs(gu, &sys.mass, settings.neig, 0, false)?;
            let spec = SpectralData::from_eigenvalues(pairs.into_iter().map(|p| p.value).collect());
            Ok(PointSpectrum {
                spectral: Some(spec),
                det_sign: Some(0),
            })
        }
        Err(e) => Err(e),
    }
}

/// Should the step between two points be searched for a bifurcation?
pub fn detect_bifurcation(mode: u8, prev_sign: i8, new_sign: i8, prev_count: Option<usize>, new_count: Option<usize>) -> bool {
    let flipped = prev_sign * new_sign < 0;
    match mode {
        0 => false,
        1 => {
            flipped
                && match (prev_count, new_count) {
                    (Some(a), Some(b)) => a.abs_diff(b) % 2 == 1,
                    _ => false,
                }
        }
        _ => flipped,
    }
}

/// A corrected point at arclength offset `s` from a base point.
#[derive(Clone, Debug)]
pub struct StepPoint {
    pub u: Vec<f64>,
    pub lam: f64,
    pub tau: Vec<f64>,
    pub spectrum: PointSpectrum,
}

/// Corrects at offset `s` from `base`, computes the tangent and spectrum there.
pub fn point_at(sys: &System, base: &Base<'_>, s: f64, settings: &Settings) -> Result<StepPoint> {
    let out = corrector_arclength(sys, base, s, settings, None)?;
    if !out.converged {
        return Err(Error::NoConvergence(format!(
            "bisection corrector at s={s:.3e} stopped with residual {:.3e}",
            out.residuals.last().copied().unwrap_or(f64::NAN)
        )));
    }
    let (gu, glam) = sys.jacobian(&out.u, out.lam, settings.jsw)?;
    let t = compute_tangent(sys, &gu, &glam, base.tau, base.xi, settings.bordered)?;
    let spectrum = evaluate_point(sys, &gu, &glam, &t.tau, settings)?;
    Ok(StepPoint {
        u: out.u,
        lam: out.lam,
        tau: t.tau,
        spectrum,
    })
}

/// Kernel data at a point: `φ₁`, `ψ₁` and the two smallest `|μ|`.
#[derive(Clone, Debug)]
pub struct Kernel {
    pub phi: Vec<f64>,
    pub psi: Vec<f64>,
    pub mu: f64,
    pub mu_next: f64,
}

/// Smallest-`|μ|` eigenvectors of `G_u` and `G_uᵀ`, with `‖φ₁‖₂ = 1`,
/// the largest entry of `φ₁` positive, and `⟨ψ₁, φ₁⟩ = 1`.
pub fn kernel_vectors(sys: &System, u: &[f64], lam: f64, settings: &Settings) -> Result<Kernel> {
    let (gu, _) = sys.jacobian(u, lam, settings.jsw)?;
    let neig = settings.neig.clamp(2, 10);
    let right = gu_eigenpairs(&gu, &sys.mass, neig, 1, false)?;
    let left = gu_eigenpairs(&gu, &sys.mass, neig, 1, true)?;
    let (r0, l0) = match (right.first(), left.first()) {
        (Some(r), Some(l)) => (r, l),
        _ => return Err(Error::Eigen("no eigenpairs for kernel vectors".into())),
    };
    let mut phi = r0.vector.clone();
    let imax = (0..phi.len()).max_by(|&a, &b| phi[a].abs().total_cmp(&phi[b].abs())).unwrap_or(0);
    if phi[imax] < 0.0 {
        phi.iter_mut().for_each(|v| *v = -*v);
    }
    let c = dot(&l0.vector, &phi);
    if c.abs() < 1e-10 {
        return Err(Error::Bifurcation(format!("left and right kernel vectors are orthogonal ({c:.2e})")));
    }
    let psi = l0.vector.iter().map(|v| v / c).collect();
    Ok(Kernel {
        phi,
        psi,
        mu: r0.value.re,
        mu_next: right.get(1).map_or(f64::INFINITY, |p| p.value.norm()),
    })
}

/// Bisects in arclength between `base` (offset 0, sign `sign0`) and offset
/// `ds` (sign `sign1`), then returns the point at the final midpoint.
#[allow(clippy::too_many_arguments)]
pub fn localize_bifurcation(
    sys: &System,
    base: &Base<'_>,
    settings: &Settings,
    ds: f64,
    sign0: i8,
    sign1: i8,
    counts: (Option<usize>, Option<usize>),
    index: usize,
) -> Result<BifPoint> {
    let (mut a, mut b) = (0.0, ds);
    let sa = sign0;
    let sign_flipped = sign0 * sign1 < 0;
    if !sign_flipped {
        log::warn!("localize: det-sign does not flip across the bracket ({sign0}, {sign1}); reporting the midpoint");
    }
    let mut exact_zero = false;
    let mut found: Option<StepPoint> = None;
    if sign_flipped {
        for _ in 0..settings.bisecmax {
            let mid = 0.5 * (a + b);
            let p = point_at(sys, base, mid, settings)?;
            let sm = p.spectrum.det_sign.unwrap_or(0);
            if sm == 0 {
                exact_zero = true;
                a = mid;
                b = mid;
                found = Some(p);
                break;
            }
            if sm == sa {
                a = mid;
            } else {
                b = mid;
            }
        }
    }
    let point = match found {
        Some(p) => p,
        None => point_at(sys, base, 0.5 * (a + b), settings)?,
    };
    let kernel = kernel_vectors(sys, &point.u, point.lam, settings)?;
    Ok(BifPoint {
        index,
        u: point.u,
        lam: point.lam,
        tau: point.tau,
        bracket: (a, b),
        phi: kernel.phi,
        psi: kernel.psi,
        mu: kernel.mu,
        mu_next: kernel.mu_next,
        sign_flipped,
        exact_zero,
        n_unstable: counts,
        switch: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn detection_modes() {
        assert!(!detect_bifurcation(1, 1, 1, Some(0), Some(0)));
        assert!(detect_bifurcation(1, 1, -1, Some(0), Some(1)));
        assert!(!detect_bifurcation(1, 1, -1, Some(0), Some(2)));
        assert!(detect_bifurcation(2, 1, -1, Some(0), Some(2)));
        assert!(!detect_bifurcation(0, 1, -1, Some(0), Some(1)));
        assert!(!detect_bifurcation(2, 1, 0, None, None));
    }
}
