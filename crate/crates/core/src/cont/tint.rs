//! Semi-implicit Euler time stepping of `M u_t = −(K(u)u − F(u))`.

use crate::error::{Error, Result};
use crate::fem::assembly::assemble_system;
use crate::linalg::sparse::norm_inf;
use crate::linalg::Factorization;
use crate::problem::System;

/// Result of a time integration.
#[derive(Clone, Debug)]
pub struct TintResult {
    pub u: Vec<f64>,
    /// `‖u^{n+1} − u^n‖_∞` per step.
    pub increments: Vec<f64>,
}

/// `u^{n+1} = (M + hK(u^n))⁻¹ (M u^n + hF(u^n))`, with `K` and `F` reassembled each step.
pub fn tint(sys: &System, u0: &[f64], lam: f64, h: f64, nsteps: usize) -> Result<TintResult> {
    if h.partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater) {
        return Err(Error::InvalidInput(format!("time step must be positive, got {h}")));
    }
    if u0.len() != sys.ndof() {
        return Err(Error::Dimension {
            what: "state vector length",
            expected: sys.ndof(),
            got: u0.len(),
        });
    }
    let mut u = u0.to_vec();
    let mut increments = Vec::with_capacity(nsteps);
    for step in 0..nsteps {
        let coeffs = sys.problem.coefficients(&sys.space, &u, lam)?;
        let bcs = sys.problem.boundary_conditions(&sys.space, &u, lam)?;
        let asm = assemble_system(&sys.space, &coeffs, &bcs, &u, lam)?;
        let a = sys.mass.add_scaled(h, &asm.k);
        let mut rhs = sys.mass.matvec(&u);
        rhs.iter_mut().zip(&asm.f).for_each(|(r, f)| *r += h * f);
        let next = Factorization::cached(&a, &sys.cache)
            .and_then(|lu| lu.solve(&rhs))
            .map_err(|e| Error::Singular(format!("M + hK at time step {}: {e}", step + 1)))?;
        let inc = norm_inf(&next.iter().zip(&u).map(|(a, b)| a - b).collect::<Vec<_>>());
        increments.push(inc);
        u = next;
    }
    Ok(TintResult { u, increments })
}
