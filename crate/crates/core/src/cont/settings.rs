//! Algorithm switches and controls.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::BorderedMethod;

/// Newton variant used in the corrector.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CorrectorKind {
    #[default]
    Newton,
    /// Bordered matrix frozen at the predictor.
    Chord,
}

/// Which corrector to use.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Parametrization {
    Natural,
    Arclength,
}

/// Every tunable of `cont`, `pmcont`, detection and adaption.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Settings {
    /// Newton tolerance on `‖H‖_∞`; `None` means `1e-10·sqrt(n)`.
    pub tol: Option<f64>,
    pub imax: usize,
    pub nsw: CorrectorKind,
    /// 0: `G_u`, `G_λ` assembled; 1: `G_λ` by FD; 2: `G_u` by FD; 3: both by FD.
    pub jsw: u8,
    /// Initial signed step.
    pub ds: f64,
    pub dsmin: f64,
    pub dsmax: f64,
    pub dlammax: f64,
    pub lammin: f64,
    pub lammax: f64,
    pub nsteps: usize,
    /// 0 natural, 1 automatic, 2 arclength.
    pub parasw: u8,
    pub lamdtol: f64,
    /// Weight of the `u` part of the inner product; `None` means `1/n_p`.
    pub xi: Option<f64>,
    pub neig: usize,
    /// 0 off, 1 det-sign change with odd change of unstable count, 2 det-sign alone.
    pub bifchecksw: u8,
    pub spcalcsw: bool,
    pub bisecmax: usize,
    /// Adapt the mesh every `amod` steps (0: never).
    pub amod: usize,
    pub errchecksw: bool,
    /// Adapt when the error estimate exceeds this bound.
    pub errbound: Option<f64>,
    pub maxt: usize,
    pub ngen: usize,
    /// Save a point every `smod` accepted steps (0: never).
    pub smod: usize,
    /// Plot every `pmod` accepted steps (0: never).
    pub pmod: usize,
    pub bordered: BorderedMethod,
    pub mst: usize,
    pub resfac: f64,
    pub pmimax: usize,
    pub dsincfac: f64,
}

impl Default for Settings {
    fn default() -> Self {
        Self {
            tol: None,
            imax: 10,
            nsw: CorrectorKind::Newton,
            jsw: 0,
            ds: 0.05,
            dsmin: 1e-4,
            dsmax: 0.1,
            dlammax: 1.0,
            lammin: -1e6,
            lammax: 1e6,
            nsteps: 20,
            parasw: 2,
            lamdtol: 0.5,
            xi: None,
            neig: 50,
            bifchecksw: 1,
            spcalcsw: true,
            bisecmax: 10,
            amod: 0,
            errchecksw: false,
            errbound: None,
            maxt: 4000,
            ngen: 5,
            smod: 0,
            pmod: 0,
            bordered: BorderedMethod::Monolithic,
            mst: 1,
            resfac: 1.0,
            pmimax: 1,
            dsincfac: 2.0,
        }
    }
}

impl Settings {
    /// Newton tolerance for `n` unknowns.
    pub fn tolerance(&self, n: usize) -> f64 {
        self.tol.unwrap_or(1e-10 * (n.max(1) as f64).sqrt())
    }

    /// Spectra are needed for stability output or detection.
    pub fn wants_spectrum(&self) -> bool {
        self.spcalcsw || self.bifchecksw > 0
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if let Some(t) = self.tol {
            if t.partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater) {
                return bad("tol must be positive");
            }
        }
        if self.imax == 0 {
            return bad("imax must be at least 1");
        }
        if self.jsw > 3 {
            return bad("jsw must be in 0..=3");
        }
        if !(self.dsmin > 0.0 && self.dsmin <= self.dsmax) {
            return bad("need 0 < dsmin <= dsmax");
        }
        if self.ds == 0.0 || !self.ds.is_finite() {
            return bad("ds must be nonzero");
        }
        if self.dlammax.partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater) {
            return bad("dlammax must be positive");
        }
        if self.lammin >= self.lammax {
            return bad("lammin must be below lammax");
        }
        if self.parasw > 2 {
            return bad("parasw must be 0, 1 or 2");
        }
        if let Some(x) = self.xi {
            if !(x > 0.0 && x < 1.0) {
                return bad("xi must lie in (0, 1)");
            }
        }
        if self.bifchecksw > 2 {
            return bad("bifchecksw must be 0, 1 or 2");
        }
        if self.mst == 0 {
            return bad("mst must be at least 1");
        }
        if !(self.resfac > 0.0 && self.resfac <= 1.0) {
            return bad("resfac must lie in (0, 1]");
        }
        if self.pmimax == 0 || self.pmimax > self.imax {
            return bad("pmimax must lie in 1..=imax");
        }
        if self.dsincfac < 1.0 {
            return bad("dsincfac must be at least 1");
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        let s = Settings::default();
        s.validate().unwrap();
        assert_eq!(s.imax, 10);
        assert_eq!(s.neig, 50);
        assert_eq!(s.bisecmax, 10);
        assert_eq!(s.dsincfac, 2.0);
        assert_eq!(s.lamdtol, 0.5);
        assert!((s.tolerance(100) - 1e-9).abs() < 1e-24);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(toml::from_str::<Settings>("imax = 5\nfoo = 1").is_err());
        let s: Settings = toml::from_str("imax = 5\nnsw = \"chord\"").unwrap();
        assert_eq!(s.imax, 5);
        assert_eq!(s.nsw, CorrectorKind::Chord);
    }

    #[test]
    fn ranges_are_checked() {
        let s = Settings {
            xi: Some(1.0),
            ..Settings::default()
        };
        assert!(s.validate().is_err());
        let s = Settings {
            resfac: 0.0,
            ..Settings::default()
        };
        assert!(s.validate().is_err());
    }
}
