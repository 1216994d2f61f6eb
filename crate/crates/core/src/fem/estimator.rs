//! Residual-type a-posteriori error indicator.
//!
//! `E(K) = α‖h(f − au)‖_K + β(½ Σ_{τ⊂∂K} h_τ² [n_τ·c∇u]²)^{1/2}`, where the
//! jump runs over interior edges only and `f` already contains `b⊗∇u`.

use super::coeffs::{a_row, b_row, c_row, CoefficientSet};
use super::mesh::Mesh;
use crate::error::{Error, Result};
use crate::par;

/// Per-triangle indicators and their maximum.
#[derive(Clone, Debug)]
pub struct ErrorEstimate {
    pub indicator: Vec<f64>,
    pub err: f64,
    pub alpha: f64,
    pub beta: f64,
    /// `h_τ² · jump²` per mesh edge (zero on the boundary).
    pub edge_jumps: Vec<f64>,
}

pub const DEFAULT_ALPHA: f64 = 0.15;
pub const DEFAULT_BETA: f64 = 0.15;

fn flux(coeffs: &CoefficientSet, grads: &[Vec<[f64; 2]>], t: usize, normal: [f64; 2]) -> Vec<f64> {
    let n = coeffs.n;
    (0..n)
        .map(|i| {
            let mut s = 0.0;
            for (j, gj) in grads.iter().enumerate() {
                for k in 0..2 {
                    for l in 0..2 {
                        s += normal[k] * coeffs.c.at(c_row(n, i, j, k, l), t) * gj[t][l];
                    }
                }
            }
            s
        })
        .collect()
}

pub fn error_indicator(mesh: &Mesh, coeffs: &CoefficientSet, u: &[f64], alpha: f64, beta: f64) -> Result<ErrorEstimate> {
    let nt = mesh.n_triangles();
    coeffs.validate(nt)?;
    let n = coeffs.n;
    if u.len() != n * mesh.n_points() {
        return Err(Error::Dimension {
            what: "nodal vector length",
            expected: n * mesh.n_points(),
            got: u.len(),
        });
    }
    let ut = mesh.interp_node_to_tri(u)?;
    let grads = mesh.gradients(u)?;

    let edges = mesh.mesh_edges();
    let edge_jumps: Vec<f64> = par::map_indexed(edges.len(), |e| {
        let edge = &edges[e];
        if edge.is_boundary() {
            return 0.0;
        }
        let [a, b] = edge.nodes;
        let (pa, pb) = (mesh.points()[a], mesh.points()[b]);
        let h = mesh.edge_length(e);
        let normal = [(pb[1] - pa[1]) / h, (pa[0] - pb[0]) / h];
        let f1 = flux(coeffs, &grads, edge.tris[0], normal);
        let f2 = flux(coeffs, &grads, edge.tris[1], normal);
        let jump2: f64 = f1.iter().zip(&f2).map(|(x, y)| (x - y).powi(2)).sum();
        h * h * jump2
    });

    let indicator = par::map_indexed(nt, |t| {
        let mut res2 = 0.0;
        for i in 0..n {
            let mut r = coeffs.f.at(i, t);
            for j in 0..n {
                r -= coeffs.a.at(a_row(n, i, j), t) * ut[j][t];
                for k in 0..2 {
                    r += coeffs.b.at(b_row(n, i, j, k), t) * grads[j][t][k];
                }
            }
            res2 += r * r;
        }
        let h = mesh.diameter(t);
        let vol = h * (res2 * mesh.area(t)).sqrt();
        let jumps: f64 = mesh.triangle_edges(t).iter().map(|&e| edge_jumps[e]).sum();
        alpha * vol + beta * (0.5 * jumps).sqrt()
    });
    let err = indicator.iter().cloned().fold(0.0, f64::max);
    Ok(ErrorEstimate {
        indicator,
        err,
        alpha,
        beta,
        edge_jumps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::coeffs::{c_scalar, CoeffArray};
    use crate::fem::mesh::make_rect_mesh;
    use crate::fem::refine::refine;

    #[test]
    fn linear_field_has_zero_indicator() {
        let m = make_rect_mesh(1.0, 0.5, 7, 5).unwrap();
        let cs = CoefficientSet::new(1, c_scalar(1, 1.0), CoeffArray::constant(vec![0.0]));
        let u: Vec<f64> = m.points().iter().map(|p| 3.0 * p[0] - p[1]).collect();
        let est = error_indicator(&m, &cs, &u, 0.15, 0.15).unwrap();
        assert!(est.indicator.iter().all(|&e| e.abs() < 1e-12));
        assert_eq!(est.err, est.indicator.iter().cloned().fold(0.0, f64::max));
    }

    #[test]
    fn homogeneous_in_constants() {
        let m = make_rect_mesh(1.0, 1.0, 6, 6).unwrap();
        let cs = CoefficientSet::new(1, c_scalar(1, 1.0), CoeffArray::constant(vec![1.0]));
        let u: Vec<f64> = m.points().iter().map(|p| (p[0] * 2.0).sin() * p[1]).collect();
        let e1 = error_indicator(&m, &cs, &u, 0.15, 0.2).unwrap();
        let e2 = error_indicator(&m, &cs, &u, 0.45, 0.6).unwrap();
        for (a, b) in e1.indicator.iter().zip(&e2.indicator) {
            assert!((3.0 * a - b).abs() <= 1e-12 * b.abs().max(1.0));
        }
    }

    #[test]
    fn uniform_refinement_reduces_error() {
        let m = make_rect_mesh(1.0, 1.0, 5, 5).unwrap();
        let f = |p: &[f64; 2]| (1.3 * p[0]).sin() * (0.7 * p[1]).cos();
        let cs = CoefficientSet::new(1, c_scalar(1, 1.0), CoeffArray::constant(vec![0.0]));
        let u: Vec<f64> = m.points().iter().map(f).collect();
        let e0 = error_indicator(&m, &cs, &u, 0.15, 0.15).unwrap().err;
        let all: Vec<usize> = (0..m.n_triangles()).collect();
        let (r, _) = refine(&m, &all).unwrap();
        let hmax0 = (0..m.n_triangles()).map(|t| m.diameter(t)).fold(0.0, f64::max);
        let hmax1 = (0..r.n_triangles()).map(|t| r.diameter(t)).fold(0.0, f64::max);
        assert!((hmax1 - 0.5 * hmax0).abs() < 1e-12);
        let u1: Vec<f64> = r.points().iter().map(f).collect();
        let e1 = error_indicator(&r, &cs, &u1, 0.15, 0.15).unwrap().err;
        assert!(e1 < e0, "{e1} !< {e0}");
    }
}
