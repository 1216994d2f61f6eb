//! Small helpers shared by the presets.

use crate::error::{Error, Result};
use crate::fem::{CoeffArray, FemSpace, Mesh};
use crate::problem::Params;

/// Per-triangle values of every component.
pub fn tri_values(space: &FemSpace, u: &[f64]) -> Result<Vec<Vec<f64>>> {
    space.mesh().interp_node_to_tri(u)
}

/// One row per entry, each with one value per triangle.
pub fn rows(rows: Vec<Vec<f64>>) -> Result<CoeffArray> {
    CoeffArray::from_rows(rows)
}

/// Per-triangle `(∂x u, ∂y u)` of one nodal field.
pub fn tri_gradients(mesh: &Mesh, u: &[f64]) -> Vec<[f64; 2]> {
    (0..mesh.n_triangles()).map(|t| mesh.triangle_gradient(t, u)).collect()
}

/// Per-triangle `Δu` by averaging gradients to the nodes and differentiating again.
pub fn tri_laplacian(mesh: &Mesh, u: &[f64]) -> Result<Vec<f64>> {
    let g = tri_gradients(mesh, u);
    let gx = mesh.interp_tri_to_node(&[g.iter().map(|v| v[0]).collect()])?;
    let gy = mesh.interp_tri_to_node(&[g.iter().map(|v| v[1]).collect()])?;
    Ok((0..mesh.n_triangles())
        .map(|t| mesh.triangle_gradient(t, &gx)[0] + mesh.triangle_gradient(t, &gy)[1])
        .collect())
}

/// Merges user values over defaults, rejecting unknown names.
pub fn merge_params(defaults: Params, given: &Params, problem: &str) -> Result<Params> {
    let mut out = defaults;
    for (k, v) in given {
        match out.get_mut(k) {
            Some(slot) => *slot = *v,
            None => {
                let known: Vec<&str> = out.keys().map(String::as_str).collect();
                return Err(Error::Config(format!(
                    "unknown parameter '{k}' for problem '{problem}' (known: {})",
                    known.join(", ")
                )));
            }
        }
    }
    Ok(out)
}

pub fn param(p: &Params, name: &str) -> f64 {
    p[name]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::make_rect_mesh;

    #[test]
    fn recovered_laplacian_of_quadratic() {
        let m = make_rect_mesh(1.0, 1.0, 21, 21).unwrap();
        let u: Vec<f64> = m.points().iter().map(|p| p[0] * p[0] + 2.0 * p[1] * p[1]).collect();
        let l = tri_laplacian(&m, &u).unwrap();
        // interior triangles away from the boundary see the exact value 6
        let interior: Vec<f64> = (0..m.n_triangles())
            .filter(|&t| {
                let c = m.centroid(t);
                c[0].abs() < 0.8 && c[1].abs() < 0.8
            })
            .map(|t| l[t])
            .collect();
        assert!(interior.iter().all(|v| (v - 6.0).abs() < 1e-8), "{:?}", &interior[..4]);
    }

    #[test]
    fn unknown_parameters_rejected() {
        let d: Params = [("mu".to_string(), 1.0)].into();
        assert!(merge_params(d.clone(), &[("nu".to_string(), 2.0)].into(), "x").is_err());
        let m = merge_params(d, &[("mu".to_string(), 2.0)].into(), "x").unwrap();
        assert_eq!(m["mu"], 2.0);
    }
}
