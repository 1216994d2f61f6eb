//! Schnakenberg reaction–diffusion system:
//! `−Δu₁ + u₁ − u₁²u₂ = 0`, `−dΔu₂ − λ + u₁²u₂ = 0`, Neumann.

use super::common::{param, rows, tri_values};
use crate::error::Result;
use crate::fem::coeffs::{a_row, c_diagonal};
use crate::fem::{BoundaryConditionSet, CoeffArray, CoefficientSet, FemSpace, JacobianCoefficients};
use crate::problem::{Params, ProblemDef};

/// Turing onset `λ_c = √d(√2 − 1)` of the homogeneous state `(λ, 1/λ)`.
pub fn turing_lambda(d: f64) -> f64 {
    d.sqrt() * (2f64.sqrt() - 1.0)
}

/// Critical wavenumber at onset, `k_c² = (d − λ_c²)/(2d)`.
pub fn turing_wavenumber(d: f64) -> f64 {
    let lc = turing_lambda(d);
    ((d - lc * lc) / (2.0 * d)).sqrt()
}

/// Half-widths `(2mπ/k_c, 2nδπ/(√3 k_c))` that fit stripes and a deformed hexagon cell.
pub fn domain_half_widths(d: f64, m: f64, n: f64, delta: f64) -> (f64, f64) {
    let kc = turing_wavenumber(d);
    let pi = std::f64::consts::PI;
    (2.0 * m * pi / kc, 2.0 * n * delta * pi / (3f64.sqrt() * kc))
}

/// Parameters `d`, `m`, `n`, `delta_def`.
#[derive(Debug)]
pub struct Schnakenberg {
    params: Params,
    d: f64,
}

impl Schnakenberg {
    pub fn new(params: Params) -> Self {
        let d = param(&params, "d");
        Self { params, d }
    }
}

impl ProblemDef for Schnakenberg {
    fn name(&self) -> &str {
        "schnak"
    }

    fn components(&self) -> usize {
        2
    }

    fn params(&self) -> &Params {
        &self.params
    }

    fn coefficients(&self, space: &FemSpace, u: &[f64], lam: f64) -> Result<CoefficientSet> {
        let ut = tri_values(space, u)?;
        let (f1, f2): (Vec<f64>, Vec<f64>) = ut[0]
            .iter()
            .zip(&ut[1])
            .map(|(&a, &b)| (-a + a * a * b, lam - a * a * b))
            .unzip();
        Ok(CoefficientSet::new(2, c_diagonal(&[1.0, self.d]), rows(vec![f1, f2])?))
    }

    fn jacobian_coefficients(&self, space: &FemSpace, u: &[f64], _lam: f64) -> Option<Result<JacobianCoefficients>> {
        Some((|| {
            let ut = tri_values(space, u)?;
            let nt = space.mesh().n_triangles();
            let mut fu = CoeffArray::zeros(4, nt);
            for t in 0..nt {
                let (a, b) = (ut[0][t], ut[1][t]);
                fu.set(a_row(2, 0, 0), t, -1.0 + 2.0 * a * b);
                fu.set(a_row(2, 0, 1), t, a * a);
                fu.set(a_row(2, 1, 0), t, -2.0 * a * b);
                fu.set(a_row(2, 1, 1), t, -a * a);
            }
            Ok(JacobianCoefficients {
                n: 2,
                c: c_diagonal(&[1.0, self.d]),
                fu,
                flam: CoeffArray::constant(vec![0.0, 1.0]),
                b: CoeffArray::zeros(8, 1),
            })
        })())
    }

    fn boundary_conditions(&self, space: &FemSpace, _u: &[f64], _lam: f64) -> Result<BoundaryConditionSet> {
        Ok(BoundaryConditionSet::neumann(2, space.mesh().segment_count()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn onset_values() {
        assert!((turing_lambda(60.0) - 3.2085).abs() < 1e-4);
        assert!((turing_wavenumber(60.0) - 0.6436).abs() < 1e-4);
    }
}
