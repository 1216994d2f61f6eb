//! Chemotaxis with cross diffusion:
//! `−DΔu₁ + λ∇·(u₁∇u₂) = r u₁(1−u₁)`, `−Δu₂ = u₁/(1+u₁) − u₂`, Neumann.

use super::common::{param, rows, tri_gradients, tri_laplacian, tri_values};
use crate::error::Result;
use crate::fem::coeffs::{a_row, b_row, c_isotropic};
use crate::fem::{BoundaryConditionSet, CoeffArray, CoefficientSet, FemSpace, JacobianCoefficients};
use crate::problem::{Params, ProblemDef};

/// Bifurcation points from `u* = (1, ½)` on a `lx × ly` rectangle:
/// `4(Dk² + r)(k² + 1)/k²` with `k² = π²(m²/lx² + l²/ly²)`.
pub fn homogeneous_bifurcation(d: f64, r: f64, lx: f64, ly: f64, m: u32, l: u32) -> f64 {
    let k2 = std::f64::consts::PI.powi(2) * ((m as f64 / lx).powi(2) + (l as f64 / ly).powi(2));
    4.0 * (d * k2 + r) * (k2 + 1.0) / k2
}

/// Parameters `D`, `r`, `Lx`, `Ly`; the domain is `[−Lx/2, Lx/2] × [−Ly/2, Ly/2]`.
#[derive(Debug)]
pub struct Chemotaxis {
    params: Params,
    d: f64,
    r: f64,
    area: f64,
}

impl Chemotaxis {
    pub fn new(params: Params) -> Self {
        let d = param(&params, "D");
        let r = param(&params, "r");
        let area = param(&params, "Lx") * param(&params, "Ly");
        Self { params, d, r, area }
    }

    fn diffusion(&self, u1: &[f64], lam: f64) -> Result<CoeffArray> {
        c_isotropic(&[
            vec![vec![self.d], u1.iter().map(|v| -lam * v).collect()],
            vec![vec![0.0], vec![1.0]],
        ])
    }
}

impl ProblemDef for Chemotaxis {
    fn name(&self) -> &str {
        "chemtax"
    }

    fn components(&self) -> usize {
        2
    }

    fn params(&self) -> &Params {
        &self.params
    }

    fn coefficients(&self, space: &FemSpace, u: &[f64], lam: f64) -> Result<CoefficientSet> {
        let ut = tri_values(space, u)?;
        let f1 = ut[0].iter().map(|&a| self.r * a * (1.0 - a)).collect();
        let f2 = ut[0].iter().zip(&ut[1]).map(|(&a, &b)| a / (1.0 + a) - b).collect();
        Ok(CoefficientSet::new(2, self.diffusion(&ut[0], lam)?, rows(vec![f1, f2])?))
    }

    fn jacobian_coefficients(&self, space: &FemSpace, u: &[f64], lam: f64) -> Option<Result<JacobianCoefficients>> {
        Some((|| {
            let mesh = space.mesh();
            let np = mesh.n_points();
            let nt = mesh.n_triangles();
            let ut = tri_values(space, u)?;
            let g1 = tri_gradients(mesh, &u[..np]);
            let g2 = tri_gradients(mesh, &u[np..]);
            let lap2 = tri_laplacian(mesh, &u[np..])?;
            let mut fu = CoeffArray::zeros(4, nt);
            let mut flam = CoeffArray::zeros(2, nt);
            let mut b = CoeffArray::zeros(8, nt);
            for t in 0..nt {
                let u1 = ut[0][t];
                fu.set(a_row(2, 0, 0), t, self.r * (1.0 - 2.0 * u1) - lam * lap2[t]);
                fu.set(a_row(2, 1, 0), t, 1.0 / (1.0 + u1).powi(2));
                fu.set(a_row(2, 1, 1), t, -1.0);
                b.set(b_row(2, 0, 0, 0), t, -lam * g2[t][0]);
                b.set(b_row(2, 0, 0, 1), t, -lam * g2[t][1]);
                flam.set(0, t, -(g1[t][0] * g2[t][0] + g1[t][1] * g2[t][1] + u1 * lap2[t]));
            }
            Ok(JacobianCoefficients {
                n: 2,
                c: self.diffusion(&ut[0], lam)?,
                fu,
                flam,
                b,
            })
        })())
    }

    fn boundary_conditions(&self, space: &FemSpace, _u: &[f64], _lam: f64) -> Result<BoundaryConditionSet> {
        Ok(BoundaryConditionSet::neumann(2, space.mesh().segment_count()))
    }

    fn output_names(&self) -> Vec<String> {
        vec!["max|u1|".into(), "L2(u1)".into(), "L1(u1-1)/vol".into()]
    }

    fn outputs(&self, space: &FemSpace, u: &[f64], _lam: f64) -> Vec<f64> {
        let mut out = crate::problem::default_outputs(space, u);
        let np = space.mesh().n_points();
        let dev: Vec<f64> = u[..np].iter().map(|v| (v - 1.0).abs()).collect();
        let l1 = space.mesh().triint(&dev).map(|v| v[0]).unwrap_or(f64::NAN);
        out.push(l1 / self.area);
        out
    }
}
