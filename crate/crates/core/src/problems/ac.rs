//! Allen–Cahn variants: `−μΔu − λu − u³ + u⁵ = 0` with Dirichlet conditions,
//! continuation in `μ`, a quasilinear diffusion, and a global coupling.

use super::common::{param, rows, tri_gradients, tri_laplacian, tri_values};
use crate::error::Result;
use crate::fem::assembly::assemble_load;
use crate::fem::coeffs::{b_row, c_scalar};
use crate::fem::{BoundaryConditionSet, CoeffArray, CoefficientSet, FemSpace, JacobianCoefficients};
use crate::linalg::RankOneCoupling;
use crate::problem::{Params, ProblemDef};

/// `λ_{kl} = μπ²((k/2L_x)² + (l/2L_y)²)` on `[−L_x,L_x] × [−L_y,L_y]`.
pub fn dirichlet_bifurcation(mu: f64, lx: f64, ly: f64, k: u32, l: u32) -> f64 {
    let (k, l) = (k as f64, l as f64);
    mu * std::f64::consts::PI.powi(2) * ((k / (2.0 * lx)).powi(2) + (l / (2.0 * ly)).powi(2))
}

fn dirichlet(space: &FemSpace, qs: f64) -> BoundaryConditionSet {
    BoundaryConditionSet::stiff_dirichlet(1, space.mesh().segment_count(), qs)
}

fn cubic_quintic(lin: f64, v: f64) -> f64 {
    lin * v + v.powi(3) - v.powi(5)
}

fn cubic_quintic_du(lin: f64, v: f64) -> f64 {
    lin + 3.0 * v * v - 5.0 * v.powi(4)
}

/// The basic cubic-quintic equation; parameters `mu`, `Lx`, `Ly`, `qs`.
#[derive(Debug)]
pub struct AllenCahn {
    params: Params,
    mu: f64,
    qs: f64,
}

impl AllenCahn {
    pub fn new(params: Params) -> Self {
        let mu = param(&params, "mu");
        let qs = param(&params, "qs");
        Self { params, mu, qs }
    }
}

impl ProblemDef for AllenCahn {
    fn name(&self) -> &str {
        "ac"
    }

    fn components(&self) -> usize {
        1
    }

    fn params(&self) -> &Params {
        &self.params
    }

    fn coefficients(&self, space: &FemSpace, u: &[f64], lam: f64) -> Result<CoefficientSet> {
        let ut = tri_values(space, u)?;
        let f = ut[0].iter().map(|&v| cubic_quintic(lam, v)).collect();
        Ok(CoefficientSet::new(1, c_scalar(1, self.mu), rows(vec![f])?))
    }

    fn jacobian_coefficients(&self, space: &FemSpace, u: &[f64], lam: f64) -> Option<Result<JacobianCoefficients>> {
        Some((|| {
            let ut = tri_values(space, u)?;
            Ok(JacobianCoefficients {
                n: 1,
                c: c_scalar(1, self.mu),
                fu: rows(vec![ut[0].iter().map(|&v| cubic_quintic_du(lam, v)).collect()])?,
                flam: rows(vec![ut[0].clone()])?,
                b: CoeffArray::zeros(2, 1),
            })
        })())
    }

    fn boundary_conditions(&self, space: &FemSpace, _u: &[f64], _lam: f64) -> Result<BoundaryConditionSet> {
        Ok(dirichlet(space, self.qs))
    }
}

/// Continuation in the diffusion coefficient: `c = λ`, with the former
/// parameter frozen at `lam_frozen`. `G_λ` is left to finite differences.
#[derive(Debug)]
pub struct AllenCahnMu {
    params: Params,
    frozen: f64,
    qs: f64,
}

impl AllenCahnMu {
    pub fn new(params: Params) -> Self {
        let frozen = param(&params, "lam_frozen");
        let qs = param(&params, "qs");
        Self { params, frozen, qs }
    }
}

impl ProblemDef for AllenCahnMu {
    fn name(&self) -> &str {
        "ac-mu"
    }

    fn components(&self) -> usize {
        1
    }

    fn params(&self) -> &Params {
        &self.params
    }

    fn coefficients(&self, space: &FemSpace, u: &[f64], lam: f64) -> Result<CoefficientSet> {
        let ut = tri_values(space, u)?;
        let f = ut[0].iter().map(|&v| cubic_quintic(self.frozen, v)).collect();
        Ok(CoefficientSet::new(1, c_scalar(1, lam), rows(vec![f])?))
    }

    fn jacobian_coefficients(&self, space: &FemSpace, u: &[f64], lam: f64) -> Option<Result<JacobianCoefficients>> {
        Some((|| {
            let ut = tri_values(space, u)?;
            Ok(JacobianCoefficients {
                n: 1,
                c: c_scalar(1, lam),
                fu: rows(vec![ut[0].iter().map(|&v| cubic_quintic_du(self.frozen, v)).collect()])?,
                // not available in closed form; continuation uses jsw = 1
                flam: CoeffArray::zeros(1, 1),
                b: CoeffArray::zeros(2, 1),
            })
        })())
    }

    fn boundary_conditions(&self, space: &FemSpace, _u: &[f64], _lam: f64) -> Result<BoundaryConditionSet> {
        Ok(dirichlet(space, self.qs))
    }

    fn output_names(&self) -> Vec<String> {
        vec!["max|u1|".into(), "L2(u1)".into(), "max|grad u1|".into()]
    }

    fn outputs(&self, space: &FemSpace, u: &[f64], _lam: f64) -> Vec<f64> {
        let mut out = crate::problem::default_outputs(space, u);
        let g = tri_gradients(space.mesh(), &u[..space.mesh().n_points()]);
        out.push(g.iter().map(|v| v[0].hypot(v[1])).fold(0.0, f64::max));
        out
    }
}

/// `−∇·[(0.25 + δu + γu²)∇u] − (λu + u³ − u⁵) = 0`; parameters `delta`, `gamma`.
#[derive(Debug)]
pub struct AllenCahnQuasilinear {
    params: Params,
    delta: f64,
    gamma: f64,
    qs: f64,
}

impl AllenCahnQuasilinear {
    pub fn new(params: Params) -> Self {
        let delta = param(&params, "delta");
        let gamma = param(&params, "gamma");
        let qs = param(&params, "qs");
        Self {
            params,
            delta,
            gamma,
            qs,
        }
    }

    fn diffusion(&self, ut: &[f64]) -> Result<CoeffArray> {
        let c: Vec<f64> = ut.iter().map(|&v| 0.25 + self.delta * v + self.gamma * v * v).collect();
        rows(vec![c.clone(), vec![0.0; c.len()], vec![0.0; c.len()], c])
    }
}

impl ProblemDef for AllenCahnQuasilinear {
    fn name(&self) -> &str {
        "ac-ql"
    }

    fn components(&self) -> usize {
        1
    }

    fn params(&self) -> &Params {
        &self.params
    }

    fn coefficients(&self, space: &FemSpace, u: &[f64], lam: f64) -> Result<CoefficientSet> {
        let ut = tri_values(space, u)?;
        let f = ut[0].iter().map(|&v| cubic_quintic(lam, v)).collect();
        Ok(CoefficientSet::new(1, self.diffusion(&ut[0])?, rows(vec![f])?))
    }

    fn jacobian_coefficients(&self, space: &FemSpace, u: &[f64], lam: f64) -> Option<Result<JacobianCoefficients>> {
        Some((|| {
            let mesh = space.mesh();
            let ut = tri_values(space, u)?;
            let grad = tri_gradients(mesh, u);
            let lap = tri_laplacian(mesh, u)?;
            let (d, g) = (self.delta, self.gamma);
            let nt = mesh.n_triangles();
            let mut fu = Vec::with_capacity(nt);
            let mut b = CoeffArray::zeros(2, nt);
            for t in 0..nt {
                let v = ut[0][t];
                let gg = grad[t][0].powi(2) + grad[t][1].powi(2);
                fu.push(cubic_quintic_du(lam, v) + d * lap[t] + 2.0 * g * (gg + v * lap[t]));
                let w = d + 2.0 * g * v;
                b.set(b_row(1, 0, 0, 0), t, w * grad[t][0]);
                b.set(b_row(1, 0, 0, 1), t, w * grad[t][1]);
            }
            Ok(JacobianCoefficients {
                n: 1,
                c: self.diffusion(&ut[0])?,
                fu: rows(vec![fu])?,
                flam: rows(vec![ut[0].clone()])?,
                b,
            })
        })())
    }

    fn boundary_conditions(&self, space: &FemSpace, _u: &[f64], _lam: f64) -> Result<BoundaryConditionSet> {
        Ok(dirichlet(space, self.qs))
    }
}

/// `−0.1Δu − u − u³ + u⁵ − λ∫u = 0` on `[−π/2, π/2]²`.
#[derive(Debug)]
pub struct AllenCahnGlobal {
    params: Params,
    qs: f64,
}

impl AllenCahnGlobal {
    pub fn new(params: Params) -> Self {
        let qs = param(&params, "qs");
        Self { params, qs }
    }
}

impl ProblemDef for AllenCahnGlobal {
    fn name(&self) -> &str {
        "ac-gc"
    }

    fn components(&self) -> usize {
        1
    }

    fn params(&self) -> &Params {
        &self.params
    }

    fn coefficients(&self, space: &FemSpace, u: &[f64], lam: f64) -> Result<CoefficientSet> {
        let ut = tri_values(space, u)?;
        let total = space.mesh().triint(u)?[0];
        let f = ut[0].iter().map(|&v| cubic_quintic(1.0, v) + lam * total).collect();
        Ok(CoefficientSet::new(1, c_scalar(1, 0.1), rows(vec![f])?))
    }

    /// The local part only; the coupling is supplied separately.
    fn jacobian_coefficients(&self, space: &FemSpace, u: &[f64], _lam: f64) -> Option<Result<JacobianCoefficients>> {
        Some((|| {
            let ut = tri_values(space, u)?;
            let total = space.mesh().triint(u)?[0];
            Ok(JacobianCoefficients {
                n: 1,
                c: c_scalar(1, 0.1),
                fu: rows(vec![ut[0].iter().map(|&v| cubic_quintic_du(1.0, v)).collect()])?,
                flam: CoeffArray::constant(vec![total]),
                b: CoeffArray::zeros(2, 1),
            })
        })())
    }

    fn boundary_conditions(&self, space: &FemSpace, _u: &[f64], _lam: f64) -> Result<BoundaryConditionSet> {
        Ok(dirichlet(space, self.qs))
    }

    /// `ν = ∫ψ_i` (load of the constant 1) and `η` with `ηᵀu = ∫u`.
    fn coupling(&self, space: &FemSpace) -> Option<RankOneCoupling> {
        let nu = assemble_load(space, &CoeffArray::constant(vec![1.0])).ok()?;
        let mesh = space.mesh();
        let mut eta = vec![0.0; mesh.n_points()];
        for (t, tri) in mesh.triangles().iter().enumerate() {
            for &p in tri {
                eta[p] += mesh.area(t) / 3.0;
            }
        }
        Some(RankOneCoupling { nu, eta })
    }
}
