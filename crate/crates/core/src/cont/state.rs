//! The continuation state and branch output records.

use serde::{Deserialize, Serialize};

use super::settings::Settings;
use crate::linalg::SpectralData;

/// `⟨(u,λ),(v,μ)⟩_ξ = ξ⟨u,v⟩ + (1−ξ)λμ` on `(n+1)`-vectors.
pub fn xi_inner(x: &[f64], y: &[f64], xi: f64) -> f64 {
    assert_eq!(x.len(), y.len(), "xi_inner: length mismatch");
    let n = x.len() - 1;
    let uu: f64 = x[..n].iter().zip(&y[..n]).map(|(a, b)| a * b).sum();
    xi * uu + (1.0 - xi) * x[n] * y[n]
}

pub fn xi_norm(x: &[f64], xi: f64) -> f64 {
    xi_inner(x, x, xi).sqrt()
}

/// `1/n_p`, clamped to `1/2` when `n_p = 1`.
pub fn default_xi(n_points: usize) -> f64 {
    if n_points <= 1 {
        log::warn!("xi = 1/n_p would be 1 for a single node; using 1/2");
        0.5
    } else {
        1.0 / n_points as f64
    }
}

/// Weight to use after rescaling the parameter as `λ̃ = factor·λ`.
pub fn rescaled_xi(xi: f64, factor: f64) -> f64 {
    xi / factor
}

/// A located point on a branch with its branch-switch data.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SwitchData {
    pub alpha0: f64,
    pub alpha1: f64,
    pub a1: f64,
    pub b1: f64,
    pub alpha_bar: f64,
    /// `φ₀`, the part of the old tangent orthogonal to the kernel.
    pub phi0: Vec<f64>,
    pub tau_new: Vec<f64>,
}

/// Kind of a branch row.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PointKind {
    Regular,
    Bifurcation,
}

/// One output row per accepted point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BranchRecord {
    pub kind: PointKind,
    pub step: usize,
    pub lam: f64,
    pub ds: f64,
    /// Eigenvalues of `G_u` with negative real part; `None` if not computed.
    pub n_unstable: Option<usize>,
    pub err: f64,
    pub outputs: Vec<f64>,
}

/// A bifurcation located by bisection.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BifPoint {
    /// Sequential index within the run (1-based).
    pub index: usize,
    pub u: Vec<f64>,
    pub lam: f64,
    /// Tangent at the located point.
    pub tau: Vec<f64>,
    /// Arclength offsets of the final bracket, relative to the left end of the step.
    pub bracket: (f64, f64),
    pub phi: Vec<f64>,
    pub psi: Vec<f64>,
    /// Eigenvalue of `G_u` belonging to `φ₁`.
    pub mu: f64,
    /// `|μ|` of the next eigenvalue; a simple kernel has `|μ| ≪ |μ_next|`.
    pub mu_next: f64,
    /// Did the det-sign actually flip inside the final bracket?
    pub sign_flipped: bool,
    /// An exactly vanishing sign was hit during bisection.
    pub exact_zero: bool,
    /// Unstable counts on either side.
    pub n_unstable: (Option<usize>, Option<usize>),
    pub switch: Option<SwitchData>,
}

/// Everything needed to resume a run at a point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContinuationState {
    pub u: Vec<f64>,
    pub lam: f64,
    /// `(u̇, λ̇)`, normalized in the ξ-norm once valid.
    pub tau: Vec<f64>,
    pub ds: f64,
    pub xi: f64,
    pub settings: Settings,
    pub step: usize,
    pub bif_count: usize,
    pub spectral: Option<SpectralData>,
    /// Sign of `det A` with the detection weight at the current point.
    pub det_sign: Option<i8>,
    pub err: f64,
    /// Set when `τ` is not valid: the next run starts with [`crate::cont::init_step`].
    pub restart: bool,
    /// Set after mesh adaption; detection is skipped on the next step.
    pub adapted: bool,
    /// Prefix of point files written by the session (`p`, `q`, ...).
    pub prefix: String,
}

impl ContinuationState {
    /// A fresh state from an initial guess, with ξ defaulted from `n_points`.
    pub fn new(u: Vec<f64>, lam: f64, settings: Settings, n_points: usize) -> Self {
        let n = u.len();
        let xi = settings.xi.unwrap_or_else(|| default_xi(n_points));
        let mut tau = vec![0.0; n + 1];
        tau[n] = 1.0 / (1.0 - xi).sqrt();
        Self {
            u,
            lam,
            tau,
            ds: settings.ds,
            xi,
            settings,
            step: 0,
            bif_count: 0,
            spectral: None,
            det_sign: None,
            err: 0.0,
            restart: true,
            adapted: false,
            prefix: "p".into(),
        }
    }

    pub fn n(&self) -> usize {
        self.u.len()
    }

    pub fn lam_dot(&self) -> f64 {
        self.tau[self.n()]
    }

    pub fn tol(&self) -> f64 {
        self.settings.tolerance(self.n())
    }

    pub fn n_unstable(&self) -> Option<usize> {
        self.spectral.as_ref().map(|s| s.n_negative)
    }

    /// `(u, λ)` as one vector.
    pub fn point(&self) -> Vec<f64> {
        let mut x = self.u.clone();
        x.push(self.lam);
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn inner_product_examples() {
        let e = [0.0, 0.0, 0.0, 1.0];
        assert!((xi_inner(&e, &e, 0.3) - 0.7).abs() < 1e-15);
        let x = [1.0, 0.0, 0.0, 1.0];
        assert!((xi_inner(&x, &x, 0.5) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn default_weight() {
        assert_eq!(default_xi(441), 1.0 / 441.0);
        assert_eq!(default_xi(1), 0.5);
        assert_eq!(rescaled_xi(0.01, 100.0), 1e-4);
    }

    #[test]
    fn fresh_state_tangent_is_unit() {
        let s = ContinuationState::new(vec![0.0; 5], 0.0, Settings::default(), 5);
        assert!((xi_norm(&s.tau, s.xi) - 1.0).abs() < 1e-14);
        assert!(s.restart);
    }

    proptest! {
        #[test]
        fn inner_is_symmetric_and_bilinear(
            x in proptest::collection::vec(-5.0f64..5.0, 6),
            y in proptest::collection::vec(-5.0f64..5.0, 6),
            a in -3.0f64..3.0,
            xi in 0.01f64..0.99,
        ) {
            prop_assert!((xi_inner(&x, &y, xi) - xi_inner(&y, &x, xi)).abs() < 1e-12);
            let ax: Vec<f64> = x.iter().map(|v| a * v).collect();
            prop_assert!((xi_inner(&ax, &y, xi) - a * xi_inner(&x, &y, xi)).abs() < 1e-10);
            prop_assert!(xi_inner(&x, &x, xi) >= 0.0);
        }
    }
}
