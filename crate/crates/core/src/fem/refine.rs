//! Conforming red/green refinement and base-mesh adaption.

use std::collections::HashMap;

use super::mesh::{BoundaryEdge, Mesh, PointLocator};
use crate::error::{Error, Result};

/// Where a node of a derived mesh comes from: a triangle of the parent mesh
/// and barycentric weights inside it.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NodeOrigin {
    pub triangle: usize,
    pub weights: [f64; 3],
}

/// Interpolation carrier from a parent mesh to a derived one.
#[derive(Clone, Debug)]
pub struct RefinementMap {
    pub parent: u64,
    pub parent_points: usize,
    pub origins: Vec<NodeOrigin>,
    /// True when some node had to be clamped to the nearest parent triangle.
    pub clamped: bool,
}

impl RefinementMap {
    pub fn identity(mesh: &Mesh) -> Self {
        let node_tris = mesh.node_triangles();
        let origins = (0..mesh.n_points())
            .map(|p| {
                let t = node_tris[p][0];
                let mut weights = [0.0; 3];
                let k = mesh.triangles()[t].iter().position(|&v| v == p).unwrap();
                weights[k] = 1.0;
                NodeOrigin { triangle: t, weights }
            })
            .collect();
        Self {
            parent: mesh.fingerprint(),
            parent_points: mesh.n_points(),
            origins,
            clamped: false,
        }
    }

    /// Builds the map by locating every node of `child` in `parent`.
    pub fn by_location(parent: &Mesh, child: &Mesh) -> Self {
        let loc = PointLocator::new(parent);
        let mut clamped = false;
        let origins = child
            .points()
            .iter()
            .map(|&p| {
                let (triangle, weights, inside) = parent.locate(&loc, p);
                clamped |= !inside;
                NodeOrigin { triangle, weights }
            })
            .collect();
        Self {
            parent: parent.fingerprint(),
            parent_points: parent.n_points(),
            origins,
            clamped,
        }
    }

    /// Interpolates a nodal field with any number of component blocks.
    pub fn apply(&self, parent: &Mesh, u: &[f64]) -> Result<Vec<f64>> {
        let np = self.parent_points;
        if parent.n_points() != np || !u.len().is_multiple_of(np) {
            return Err(Error::Dimension {
                what: "field on parent mesh",
                expected: np,
                got: u.len(),
            });
        }
        let ncomp = u.len() / np;
        let nq = self.origins.len();
        let mut out = vec![0.0; ncomp * nq];
        for k in 0..ncomp {
            let uk = &u[k * np..(k + 1) * np];
            for (q, o) in self.origins.iter().enumerate() {
                let tri = parent.triangles()[o.triangle];
                out[k * nq + q] = (0..3).map(|i| o.weights[i] * uk[tri[i]]).sum();
            }
        }
        Ok(out)
    }

    /// Composition `self ∘ first`, where `first` maps grand-parent -> parent and
    /// `self` maps parent -> child.
    pub fn compose(&self, parent: &Mesh, first: &RefinementMap, grand: &Mesh) -> RefinementMap {
        // push parent node weights through first, then re-express in a grand-parent triangle
        let loc = PointLocator::new(grand);
        let mut clamped = self.clamped || first.clamped;
        let origins = self
            .origins
            .iter()
            .map(|o| {
                let tri = parent.triangles()[o.triangle];
                let mut p = [0.0; 2];
                for i in 0..3 {
                    let q = parent.points()[tri[i]];
                    p[0] += o.weights[i] * q[0];
                    p[1] += o.weights[i] * q[1];
                }
                let (triangle, weights, inside) = grand.locate(&loc, p);
                clamped |= !inside;
                NodeOrigin { triangle, weights }
            })
            .collect();
        RefinementMap {
            parent: first.parent,
            parent_points: first.parent_points,
            origins,
            clamped,
        }
    }
}

/// Refines the marked triangles. Triangles with all three edges split are
/// divided regularly into four; closure splits neighbours so the result has
/// no hanging nodes (two split edges promote to a regular split, one split
/// edge bisects).
pub fn refine(mesh: &Mesh, marked: &[usize]) -> Result<(Mesh, RefinementMap)> {
    let nt = mesh.n_triangles();
    if nt == 0 {
        return Err(Error::Mesh("cannot refine an empty mesh".into()));
    }
    let edges = mesh.mesh_edges();
    let mut split = vec![false; edges.len()];
    let mut red = vec![false; nt];
    let mut stack: Vec<usize> = Vec::new();
    for &t in marked {
        if t >= nt {
            return Err(Error::InvalidInput(format!("marked triangle {t} out of range")));
        }
        if !red[t] {
            red[t] = true;
            stack.push(t);
        }
    }
    // closure: a triangle with two or more split edges becomes red
    while let Some(t) = stack.pop() {
        for e in mesh.triangle_edges(t) {
            if split[e] {
                continue;
            }
            split[e] = true;
            for &n in &edges[e].tris {
                if n == super::mesh::MeshEdge::NONE || red[n] {
                    continue;
                }
                let count = mesh.triangle_edges(n).iter().filter(|&&f| split[f]).count();
                if count >= 2 {
                    red[n] = true;
                    stack.push(n);
                }
            }
        }
    }

    let mut points = mesh.points().to_vec();
    let node_tris = mesh.node_triangles();
    let mut origins: Vec<NodeOrigin> = (0..mesh.n_points())
        .map(|p| {
            let t = node_tris[p][0];
            let mut weights = [0.0; 3];
            weights[mesh.triangles()[t].iter().position(|&v| v == p).unwrap()] = 1.0;
            NodeOrigin { triangle: t, weights }
        })
        .collect();
    let mut midpoint = vec![usize::MAX; edges.len()];
    for (e, edge) in edges.iter().enumerate() {
        if !split[e] {
            continue;
        }
        let [a, b] = edge.nodes;
        let (pa, pb) = (points[a], points[b]);
        midpoint[e] = points.len();
        points.push([0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1])]);
        let t = edge.tris[0];
        let tri = mesh.triangles()[t];
        let mut weights = [0.0; 3];
        for (k, &v) in tri.iter().enumerate() {
            if v == a || v == b {
                weights[k] = 0.5;
            }
        }
        origins.push(NodeOrigin { triangle: t, weights });
    }

    let mut triangles = Vec::with_capacity(nt * 2);
    for t in 0..nt {
        let v = mesh.triangles()[t];
        let te = mesh.triangle_edges(t);
        let m = te.map(|e| midpoint[e]);
        let nsplit = te.iter().filter(|&&e| split[e]).count();
        match nsplit {
            0 => triangles.push(v),
            3 => {
                // m[k] sits on edge (v[k], v[k+1])
                triangles.push([v[0], m[0], m[2]]);
                triangles.push([m[0], v[1], m[1]]);
                triangles.push([m[2], m[1], v[2]]);
                triangles.push([m[0], m[1], m[2]]);
            }
            1 => {
                let k = (0..3).find(|&k| split[te[k]]).unwrap();
                let (a, b, c) = (v[k], v[(k + 1) % 3], v[(k + 2) % 3]);
                triangles.push([a, m[k], c]);
                triangles.push([m[k], b, c]);
            }
            _ => unreachable!("closure leaves no triangle with two split edges"),
        }
    }

    let lookup: HashMap<(usize, usize), usize> = edges
        .iter()
        .enumerate()
        .map(|(e, edge)| {
            let [a, b] = edge.nodes;
            ((a.min(b), a.max(b)), e)
        })
        .collect();
    let mut bedges = Vec::with_capacity(mesh.boundary_edges().len() * 2);
    for be in mesh.boundary_edges() {
        let e = lookup[&(be.a.min(be.b), be.a.max(be.b))];
        if split[e] {
            let mid = midpoint[e];
            bedges.push(BoundaryEdge { a: be.a, b: mid, segment: be.segment });
            bedges.push(BoundaryEdge { a: mid, b: be.b, segment: be.segment });
        } else {
            bedges.push(*be);
        }
    }

    let child = Mesh::new(points, triangles, bedges)?;
    let map = RefinementMap {
        parent: mesh.fingerprint(),
        parent_points: mesh.n_points(),
        origins,
        clamped: false,
    };
    Ok((child, map))
}

/// Marking rule for adaptive refinement.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum MarkStrategy {
    /// Marks every triangle with `E(K) >= theta * max E`.
    Maximum { theta: f64 },
    /// Marks the largest indicators until the projected triangle count reaches `maxt`.
    Budget { maxt: usize },
}

/// Selects triangles for refinement from per-triangle indicators.
pub fn mark_by_error(indicator: &[f64], strategy: MarkStrategy) -> Vec<usize> {
    match strategy {
        MarkStrategy::Maximum { theta } => {
            let max = indicator.iter().cloned().fold(0.0, f64::max);
            (0..indicator.len()).filter(|&k| indicator[k] >= theta * max).collect()
        }
        MarkStrategy::Budget { maxt } => {
            let nt = indicator.len();
            if maxt <= nt {
                return Vec::new();
            }
            // a regular split adds three triangles, closure roughly one more
            let take = ((maxt - nt) / 4).clamp(1, nt);
            let mut order: Vec<usize> = (0..nt).collect();
            order.sort_by(|&a, &b| indicator[b].total_cmp(&indicator[a]).then(a.cmp(&b)));
            let mut picked: Vec<usize> = order.into_iter().take(take).collect();
            picked.sort_unstable();
            picked
        }
    }
}

/// Controls for base-mesh adaption.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdaptControls {
    pub maxt: usize,
    pub ngen: usize,
    pub eb: f64,
    pub theta: f64,
}

impl Default for AdaptControls {
    fn default() -> Self {
        Self {
            maxt: 4000,
            ngen: 5,
            eb: 0.05,
            theta: 0.5,
        }
    }
}

/// Result of an adaption pass.
#[derive(Clone, Debug)]
pub struct Adapted {
    pub mesh: Mesh,
    pub fields: Vec<Vec<f64>>,
    pub err: f64,
    pub passes: usize,
    pub clamped: bool,
}

/// Interpolates `fields` to `base`, then refines where `estimate` is large
/// until `err <= eb/2`, the triangle budget is reached, or `ngen` passes are
/// spent. `estimate` returns per-triangle indicators for a mesh and the
/// first field. `fields` may contain the solution and the tangent's u-part.
pub fn adapt<F>(mesh: &Mesh, base: &Mesh, fields: &[Vec<f64>], controls: AdaptControls, estimate: F) -> Result<Adapted>
where
    F: Fn(&Mesh, &[f64]) -> Result<Vec<f64>>,
{
    let to_base = RefinementMap::by_location(mesh, base);
    let mut cur = base.clone();
    let mut cur_fields: Vec<Vec<f64>> = fields.iter().map(|f| to_base.apply(mesh, f)).collect::<Result<_>>()?;
    let mut ind = estimate(&cur, &cur_fields[0])?;
    let mut err = ind.iter().cloned().fold(0.0, f64::max);
    let mut passes = 0;
    while passes < controls.ngen && err > controls.eb / 2.0 && cur.n_triangles() < controls.maxt {
        let marked = mark_by_error(&ind, MarkStrategy::Maximum { theta: controls.theta });
        if marked.is_empty() {
            break;
        }
        let (next, map) = refine(&cur, &marked)?;
        cur_fields = cur_fields.iter().map(|f| map.apply(&cur, f)).collect::<Result<_>>()?;
        cur = next;
        ind = estimate(&cur, &cur_fields[0])?;
        err = ind.iter().cloned().fold(0.0, f64::max);
        passes += 1;
    }
    Ok(Adapted {
        mesh: cur,
        fields: cur_fields,
        err,
        passes,
        clamped: to_base.clamped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::mesh::make_rect_mesh;
    use approx::assert_relative_eq;

    fn conforming(m: &Mesh) -> bool {
        // Mesh::new already rejects edges with three triangles and unlabelled
        // boundary edges; a hanging node would show up as an unlabelled
        // boundary edge in the interior.
        let (lo, hi) = m.bounding_box();
        m.mesh_edges().iter().filter(|e| e.is_boundary()).all(|e| {
            let on = |p: [f64; 2]| {
                (p[0] - lo[0]).abs() < 1e-12
                    || (p[0] - hi[0]).abs() < 1e-12
                    || (p[1] - lo[1]).abs() < 1e-12
                    || (p[1] - hi[1]).abs() < 1e-12
            };
            on(m.points()[e.nodes[0]]) && on(m.points()[e.nodes[1]])
        })
    }

    #[test]
    fn red_refinement_of_square() {
        let m = make_rect_mesh(0.5, 0.5, 2, 2).unwrap();
        let (r, map) = refine(&m, &[0, 1]).unwrap();
        assert_eq!(r.n_triangles(), 8);
        assert_relative_eq!(r.total_area(), 1.0, epsilon = 1e-14);
        assert_eq!(map.origins.len(), r.n_points());
    }

    #[test]
    fn empty_marking_is_identity() {
        let m = make_rect_mesh(1.0, 1.0, 4, 4).unwrap();
        let (r, map) = refine(&m, &[]).unwrap();
        assert_eq!(r.points(), m.points());
        assert_eq!(r.triangles(), m.triangles());
        let u: Vec<f64> = (0..m.n_points()).map(|i| i as f64).collect();
        assert_eq!(map.apply(&m, &u).unwrap(), u);
    }

    #[test]
    fn single_mark_is_conforming() {
        let m = make_rect_mesh(1.0, 1.0, 5, 5).unwrap();
        let (r, _) = refine(&m, &[13]).unwrap();
        assert!(r.n_triangles() > m.n_triangles());
        assert!(conforming(&r));
        assert_relative_eq!(r.total_area(), 4.0, epsilon = 1e-12);
    }

    #[test]
    fn linear_fields_survive_refinement() {
        let m = make_rect_mesh(1.0, 0.7, 6, 5).unwrap();
        let (r, map) = refine(&m, &[0, 7, 8, 20]).unwrap();
        let f = |p: &[f64; 2]| 1.5 * p[0] - 0.3 * p[1] + 2.0;
        let u: Vec<f64> = m.points().iter().map(f).collect();
        let v = map.apply(&m, &u).unwrap();
        for (p, val) in r.points().iter().zip(&v) {
            assert!((f(p) - val).abs() <= 1e-12);
        }
        for o in &map.origins {
            assert!(o.weights.iter().all(|&w| w >= 0.0));
            assert_relative_eq!(o.weights.iter().sum::<f64>(), 1.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn marking_rules() {
        assert_eq!(mark_by_error(&[2.0, 2.0, 2.0], MarkStrategy::Maximum { theta: 0.5 }), vec![0, 1, 2]);
        assert_eq!(mark_by_error(&[1.0, 0.0, 0.0, 0.0], MarkStrategy::Maximum { theta: 0.5 }), vec![0]);
        assert!(mark_by_error(&[1.0, 0.5], MarkStrategy::Budget { maxt: 1 }).is_empty());
        assert_eq!(mark_by_error(&[0.1, 0.9, 0.5, 0.2], MarkStrategy::Budget { maxt: 8 }), vec![1]);
    }

    #[test]
    fn adapt_to_self_is_noop() {
        let m = make_rect_mesh(1.0, 1.0, 5, 5).unwrap();
        let u: Vec<f64> = m.points().iter().map(|p| p[0] * p[1]).collect();
        let ctrl = AdaptControls { eb: f64::INFINITY, ..Default::default() };
        let out = adapt(&m, &m, std::slice::from_ref(&u), ctrl, |mm, _| Ok(vec![1.0; mm.n_triangles()])).unwrap();
        assert_eq!(out.mesh.n_triangles(), m.n_triangles());
        for (a, b) in out.fields[0].iter().zip(&u) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn adapt_without_generations_coarsens() {
        let base = make_rect_mesh(1.0, 1.0, 4, 4).unwrap();
        let (fine, map) = refine(&base, &(0..base.n_triangles()).collect::<Vec<_>>()).unwrap();
        let u = map.apply(&base, &base.points().iter().map(|p| p[0]).collect::<Vec<_>>()).unwrap();
        let ctrl = AdaptControls { ngen: 0, eb: 0.0, ..Default::default() };
        let out = adapt(&fine, &base, &[u], ctrl, |mm, _| Ok(vec![1.0; mm.n_triangles()])).unwrap();
        assert_eq!(out.mesh.n_triangles(), base.n_triangles());
        for (p, v) in base.points().iter().zip(&out.fields[0]) {
            assert!((p[0] - v).abs() < 1e-12);
        }
    }
}
