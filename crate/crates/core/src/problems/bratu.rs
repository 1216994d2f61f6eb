//! `−Δu − 10(u − λe^u) = 0` on the unit square with Neumann conditions.

use super::common::{rows, tri_values};
use crate::error::Result;
use crate::fem::coeffs::c_scalar;
use crate::fem::{BoundaryConditionSet, CoeffArray, CoefficientSet, FemSpace, JacobianCoefficients};
use crate::problem::{Params, ProblemDef};

#[derive(Debug, Default)]
pub struct Bratu {
    params: Params,
}

impl Bratu {
    pub fn new() -> Self {
        Self::default()
    }
}

/// Homogeneous solutions: `λ = u e^{−u}`.
pub fn homogeneous_lambda(u: f64) -> f64 {
    u * (-u).exp()
}

impl ProblemDef for Bratu {
    fn name(&self) -> &str {
        "bratu"
    }

    fn components(&self) -> usize {
        1
    }

    fn params(&self) -> &Params {
        &self.params
    }

    fn coefficients(&self, space: &FemSpace, u: &[f64], lam: f64) -> Result<CoefficientSet> {
        let ut = tri_values(space, u)?;
        let f: Vec<f64> = ut[0].iter().map(|&v| -10.0 * (v - lam * v.exp())).collect();
        Ok(CoefficientSet::new(1, c_scalar(1, 1.0), rows(vec![f])?))
    }

    fn jacobian_coefficients(&self, space: &FemSpace, u: &[f64], lam: f64) -> Option<Result<JacobianCoefficients>> {
        Some((|| {
            let ut = tri_values(space, u)?;
            let fu: Vec<f64> = ut[0].iter().map(|&v| -10.0 * (1.0 - lam * v.exp())).collect();
            let flam: Vec<f64> = ut[0].iter().map(|&v| 10.0 * v.exp()).collect();
            Ok(JacobianCoefficients {
                n: 1,
                c: c_scalar(1, 1.0),
                fu: rows(vec![fu])?,
                flam: rows(vec![flam])?,
                b: CoeffArray::zeros(2, 1),
            })
        })())
    }

    fn boundary_conditions(&self, space: &FemSpace, _u: &[f64], _lam: f64) -> Result<BoundaryConditionSet> {
        Ok(BoundaryConditionSet::neumann(1, space.mesh().segment_count()))
    }
}
