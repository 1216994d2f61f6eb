//! Triangular meshes with labelled boundary segments.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

/// A boundary edge `a -> b` carrying a segment label in `1..=segment_count`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BoundaryEdge {
    pub a: usize,
    pub b: usize,
    pub segment: usize,
}

/// An edge of the triangulation with its one or two incident triangles.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MeshEdge {
    pub nodes: [usize; 2],
    pub tris: [usize; 2],
}

impl MeshEdge {
    pub const NONE: usize = usize::MAX;

    pub fn is_boundary(&self) -> bool {
        self.tris[1] == Self::NONE
    }
}

/// Immutable P1 triangulation.
#[derive(Clone, Debug)]
pub struct Mesh {
    points: Vec<[f64; 2]>,
    edges: Vec<BoundaryEdge>,
    triangles: Vec<[usize; 3]>,
    segment_count: usize,
    areas: Vec<f64>,
    // gradients of the three barycentric basis functions per triangle
    basis_grads: Vec<[[f64; 2]; 3]>,
    mesh_edges: Vec<MeshEdge>,
    // edge k of a triangle joins local vertices k and k+1
    tri_edges: Vec<[usize; 3]>,
}

fn signed_area(p: [f64; 2], q: [f64; 2], r: [f64; 2]) -> f64 {
    0.5 * ((q[0] - p[0]) * (r[1] - p[1]) - (r[0] - p[0]) * (q[1] - p[1]))
}

fn key(a: usize, b: usize) -> (usize, usize) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

impl Mesh {
    /// Builds and validates a mesh.
    pub fn new(points: Vec<[f64; 2]>, triangles: Vec<[usize; 3]>, edges: Vec<BoundaryEdge>) -> Result<Self> {
        if triangles.is_empty() {
            return Err(Error::Mesh("mesh has no triangles".into()));
        }
        let np = points.len();
        let mut areas = Vec::with_capacity(triangles.len());
        let mut basis_grads = Vec::with_capacity(triangles.len());
        for (t, tri) in triangles.iter().enumerate() {
            if tri.iter().any(|&v| v >= np) {
                return Err(Error::Mesh(format!("triangle {t} references a missing node")));
            }
            let [p0, p1, p2] = tri.map(|v| points[v]);
            let area = signed_area(p0, p1, p2);
            if !(area > 0.0) {
                return Err(Error::Mesh(format!("triangle {t} has negative area {area:.3e}")));
            }
            let inv = 1.0 / (2.0 * area);
            // grad of basis k is the rotated opposite edge over twice the area
            let g = |a: [f64; 2], b: [f64; 2]| [(a[1] - b[1]) * inv, (b[0] - a[0]) * inv];
            basis_grads.push([g(p1, p2), g(p2, p0), g(p0, p1)]);
            areas.push(area);
        }

        let mut index: HashMap<(usize, usize), usize> = HashMap::with_capacity(triangles.len() * 2);
        let mut mesh_edges: Vec<MeshEdge> = Vec::new();
        let mut tri_edges = Vec::with_capacity(triangles.len());
        for (t, tri) in triangles.iter().enumerate() {
            let mut te = [0; 3];
            for k in 0..3 {
                let (a, b) = (tri[k], tri[(k + 1) % 3]);
                if a == b {
                    return Err(Error::Mesh(format!("triangle {t} is degenerate")));
                }
                let e = *index.entry(key(a, b)).or_insert_with(|| {
                    mesh_edges.push(MeshEdge {
                        nodes: [a, b],
                        tris: [t, MeshEdge::NONE],
                    });
                    mesh_edges.len() - 1
                });
                if mesh_edges[e].tris[0] != t {
                    if mesh_edges[e].tris[1] != MeshEdge::NONE {
                        return Err(Error::Mesh(format!("edge ({a},{b}) shared by more than two triangles")));
                    }
                    mesh_edges[e].tris[1] = t;
                }
                te[k] = e;
            }
            tri_edges.push(te);
        }

        let segment_count = edges.iter().map(|e| e.segment).max().unwrap_or(0);
        let mut seen = vec![false; mesh_edges.len()];
        for e in &edges {
            if e.segment == 0 {
                return Err(Error::Mesh(format!("boundary edge ({},{}) has label 0", e.a, e.b)));
            }
            match index.get(&key(e.a, e.b)) {
                Some(&k) if mesh_edges[k].is_boundary() => {
                    if seen[k] {
                        return Err(Error::Mesh(format!("boundary edge ({},{}) listed twice", e.a, e.b)));
                    }
                    seen[k] = true;
                }
                Some(_) => {
                    return Err(Error::Mesh(format!("edge ({},{}) is interior but listed as boundary", e.a, e.b)))
                }
                None => return Err(Error::Mesh(format!("dangling boundary edge ({},{})", e.a, e.b))),
            }
        }
        if let Some(k) = (0..mesh_edges.len()).find(|&k| mesh_edges[k].is_boundary() && !seen[k]) {
            let [a, b] = mesh_edges[k].nodes;
            return Err(Error::Mesh(format!("boundary edge ({a},{b}) carries no segment label")));
        }

        Ok(Self {
            points,
            edges,
            triangles,
            segment_count,
            areas,
            basis_grads,
            mesh_edges,
            tri_edges,
        })
    }

    pub fn points(&self) -> &[[f64; 2]] {
        &self.points
    }

    pub fn boundary_edges(&self) -> &[BoundaryEdge] {
        &self.edges
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn segment_count(&self) -> usize {
        self.segment_count
    }

    pub fn n_points(&self) -> usize {
        self.points.len()
    }

    pub fn n_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn areas(&self) -> &[f64] {
        &self.areas
    }

    pub fn area(&self, t: usize) -> f64 {
        self.areas[t]
    }

    pub fn total_area(&self) -> f64 {
        self.areas.iter().sum()
    }

    /// Gradients of the three P1 basis functions of triangle `t`.
    pub fn basis_gradients(&self, t: usize) -> &[[f64; 2]; 3] {
        &self.basis_grads[t]
    }

    pub fn mesh_edges(&self) -> &[MeshEdge] {
        &self.mesh_edges
    }

    /// Edge indices of triangle `t`; edge `k` joins local vertices `k` and `k+1`.
    pub fn triangle_edges(&self, t: usize) -> [usize; 3] {
        self.tri_edges[t]
    }

    pub fn edge_length(&self, e: usize) -> f64 {
        let [a, b] = self.mesh_edges[e].nodes;
        dist(self.points[a], self.points[b])
    }

    pub fn centroid(&self, t: usize) -> [f64; 2] {
        let [a, b, c] = self.triangles[t].map(|v| self.points[v]);
        [(a[0] + b[0] + c[0]) / 3.0, (a[1] + b[1] + c[1]) / 3.0]
    }

    /// Longest edge of triangle `t`.
    pub fn diameter(&self, t: usize) -> f64 {
        self.tri_edges[t].iter().map(|&e| self.edge_length(e)).fold(0.0, f64::max)
    }

    pub fn bounding_box(&self) -> ([f64; 2], [f64; 2]) {
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for p in &self.points {
            for d in 0..2 {
                lo[d] = lo[d].min(p[d]);
                hi[d] = hi[d].max(p[d]);
            }
        }
        (lo, hi)
    }

    /// Sorted node neighbourhoods, each including the node itself.
    pub fn node_adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj: Vec<Vec<usize>> = (0..self.n_points()).map(|i| vec![i]).collect();
        for e in &self.mesh_edges {
            let [a, b] = e.nodes;
            adj[a].push(b);
            adj[b].push(a);
        }
        for a in &mut adj {
            a.sort_unstable();
            a.dedup();
        }
        adj
    }

    /// Triangles incident to each node.
    pub fn node_triangles(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.n_points()];
        for (t, tri) in self.triangles.iter().enumerate() {
            for &v in tri {
                out[v].push(t);
            }
        }
        out
    }

    /// Content hash used to tie refinement maps to their parent mesh.
    pub fn fingerprint(&self) -> u64 {
        let mut h: u64 = 0xcbf29ce484222325;
        let mut eat = |x: u64| {
            h ^= x;
            h = h.wrapping_mul(0x100000001b3);
        };
        for p in &self.points {
            eat(p[0].to_bits());
            eat(p[1].to_bits());
        }
        for t in &self.triangles {
            t.iter().for_each(|&v| eat(v as u64));
        }
        h
    }

    fn components(&self, len: usize, per: usize, what: &'static str) -> Result<usize> {
        if per == 0 || len == 0 || !len.is_multiple_of(per) {
            return Err(Error::Dimension {
                what,
                expected: per,
                got: len,
            });
        }
        Ok(len / per)
    }

    /// Centroid values (vertex means) per component; row `k` holds component `k`.
    pub fn interp_node_to_tri(&self, u: &[f64]) -> Result<Vec<Vec<f64>>> {
        let np = self.n_points();
        let n = self.components(u.len(), np, "nodal field length")?;
        Ok((0..n)
            .map(|k| {
                let uk = &u[k * np..(k + 1) * np];
                self.triangles
                    .iter()
                    .map(|t| (uk[t[0]] + uk[t[1]] + uk[t[2]]) / 3.0)
                    .collect()
            })
            .collect())
    }

    /// Area-weighted nodal averages of per-triangle values, one row per component.
    pub fn interp_tri_to_node(&self, v: &[Vec<f64>]) -> Result<Vec<f64>> {
        let np = self.n_points();
        let mut weight = vec![0.0; np];
        for (t, tri) in self.triangles.iter().enumerate() {
            for &p in tri {
                weight[p] += self.areas[t];
            }
        }
        let mut out = vec![0.0; np * v.len()];
        for (k, row) in v.iter().enumerate() {
            if row.len() != self.n_triangles() {
                return Err(Error::Dimension {
                    what: "triangle field length",
                    expected: self.n_triangles(),
                    got: row.len(),
                });
            }
            let ok = &mut out[k * np..(k + 1) * np];
            for (t, tri) in self.triangles.iter().enumerate() {
                for &p in tri {
                    ok[p] += self.areas[t] * row[t];
                }
            }
            for (o, w) in ok.iter_mut().zip(&weight) {
                if *w > 0.0 {
                    *o /= w;
                }
            }
        }
        Ok(out)
    }

    /// Constant P1 gradient per triangle, per component.
    pub fn gradients(&self, u: &[f64]) -> Result<Vec<Vec<[f64; 2]>>> {
        let np = self.n_points();
        let n = self.components(u.len(), np, "nodal field length")?;
        Ok((0..n)
            .map(|k| {
                let uk = &u[k * np..(k + 1) * np];
                (0..self.n_triangles()).map(|t| self.triangle_gradient(t, uk)).collect()
            })
            .collect())
    }

    /// Gradient of the scalar nodal field `u` (length n_p) on triangle `t`.
    pub fn triangle_gradient(&self, t: usize, u: &[f64]) -> [f64; 2] {
        let g = &self.basis_grads[t];
        let tri = &self.triangles[t];
        let mut out = [0.0; 2];
        for k in 0..3 {
            out[0] += u[tri[k]] * g[k][0];
            out[1] += u[tri[k]] * g[k][1];
        }
        out
    }

    /// Midpoint-rule integral per component.
    pub fn triint(&self, u: &[f64]) -> Result<Vec<f64>> {
        Ok(self
            .interp_node_to_tri(u)?
            .iter()
            .map(|row| row.iter().zip(&self.areas).map(|(v, a)| v * a).sum())
            .collect())
    }

    /// Locates the triangle containing `p` and its barycentric coordinates.
    /// Falls back to the closest triangle (weights clamped and renormalised)
    /// and reports `false` in that case.
    pub fn locate(&self, locator: &PointLocator, p: [f64; 2]) -> (usize, [f64; 3], bool) {
        let tol = 1e-10;
        for &t in locator.candidates(p) {
            let w = self.barycentric(t, p);
            if w.iter().all(|&x| x >= -tol) {
                return (t, clamp_weights(w), true);
            }
        }
        let mut best = (0, [1.0, 0.0, 0.0], f64::INFINITY);
        for t in 0..self.n_triangles() {
            let w = self.barycentric(t, p);
            let defect = -w.iter().cloned().fold(0.0, f64::min);
            if defect < best.2 {
                best = (t, w, defect);
            }
        }
        (best.0, clamp_weights(best.1), best.2 <= tol)
    }

    pub fn barycentric(&self, t: usize, p: [f64; 2]) -> [f64; 3] {
        let [a, b, c] = self.triangles[t].map(|v| self.points[v]);
        let area = self.areas[t];
        [
            signed_area(p, b, c) / area,
            signed_area(a, p, c) / area,
            signed_area(a, b, p) / area,
        ]
    }

    /// Serialises to the mesh text format (1-based indices).
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{} {} {}", self.points.len(), self.triangles.len(), self.edges.len());
        for p in &self.points {
            let _ = writeln!(s, "{:?} {:?}", p[0], p[1]);
        }
        for t in &self.triangles {
            let _ = writeln!(s, "{} {} {}", t[0] + 1, t[1] + 1, t[2] + 1);
        }
        for e in &self.edges {
            let _ = writeln!(s, "{} {} {}", e.a + 1, e.b + 1, e.segment);
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let mut next = |what: &str| {
            lines.next().ok_or_else(|| Error::Parse {
                line: 0,
                msg: format!("unexpected end of input while reading {what}"),
            })
        };
        fn fields<T: std::str::FromStr>(line: usize, s: &str, n: usize) -> Result<Vec<T>> {
            let v: Vec<T> = s
                .split_whitespace()
                .map(|x| x.parse::<T>())
                .collect::<Result<_, _>>()
                .map_err(|_| Error::Parse {
                    line,
                    msg: format!("cannot parse '{s}'"),
                })?;
            if v.len() != n {
                return Err(Error::Parse {
                    line,
                    msg: format!("expected {n} fields, found {}", v.len()),
                });
            }
            Ok(v)
        }
        let (ln, header) = next("header")?;
        let h: Vec<usize> = fields(ln, header, 3)?;
        let mut points = Vec::with_capacity(h[0]);
        for _ in 0..h[0] {
            let (ln, l) = next("points")?;
            let v: Vec<f64> = fields(ln, l, 2)?;
            points.push([v[0], v[1]]);
        }
        let one_based = |ln: usize, i: usize| {
            i.checked_sub(1).ok_or(Error::Parse {
                line: ln,
                msg: "indices are 1-based".into(),
            })
        };
        let mut triangles = Vec::with_capacity(h[1]);
        for _ in 0..h[1] {
            let (ln, l) = next("triangles")?;
            let v: Vec<usize> = fields(ln, l, 3)?;
            triangles.push([one_based(ln, v[0])?, one_based(ln, v[1])?, one_based(ln, v[2])?]);
        }
        let mut edges = Vec::with_capacity(h[2]);
        for _ in 0..h[2] {
            let (ln, l) = next("edges")?;
            let v: Vec<usize> = fields(ln, l, 3)?;
            edges.push(BoundaryEdge {
                a: one_based(ln, v[0])?,
                b: one_based(ln, v[1])?,
                segment: v[2],
            });
        }
        Self::new(points, triangles, edges)
    }

    pub fn export(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn import(path: &Path) -> Result<Self> {
        Self::from_text(&std::fs::read_to_string(path)?)
    }
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

fn clamp_weights(w: [f64; 3]) -> [f64; 3] {
    let c = w.map(|x| x.max(0.0));
    let s: f64 = c.iter().sum();
    c.map(|x| x / s)
}

/// Uniform bucket grid over triangle bounding boxes.
#[derive(Clone, Debug)]
pub struct PointLocator {
    lo: [f64; 2],
    cell: [f64; 2],
    dims: [usize; 2],
    buckets: Vec<Vec<usize>>,
}

impl PointLocator {
    pub fn new(mesh: &Mesh) -> Self {
        let (lo, hi) = mesh.bounding_box();
        let side = (mesh.n_triangles() as f64).sqrt().ceil().max(1.0) as usize;
        let dims = [side, side];
        let cell = [
            ((hi[0] - lo[0]) / side as f64).max(f64::MIN_POSITIVE),
            ((hi[1] - lo[1]) / side as f64).max(f64::MIN_POSITIVE),
        ];
        let mut buckets = vec![Vec::new(); side * side];
        for (t, tri) in mesh.triangles().iter().enumerate() {
            let ps = tri.map(|v| mesh.points()[v]);
            let (mut blo, mut bhi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
            for p in ps {
                for d in 0..2 {
                    blo[d] = blo[d].min(p[d]);
                    bhi[d] = bhi[d].max(p[d]);
                }
            }
            let (i0, j0) = Self::cell_of(lo, cell, dims, blo);
            let (i1, j1) = Self::cell_of(lo, cell, dims, bhi);
            for j in j0..=j1 {
                for i in i0..=i1 {
                    buckets[j * side + i].push(t);
                }
            }
        }
        Self {
            lo,
            cell,
            dims,
            buckets,
        }
    }

    fn cell_of(lo: [f64; 2], cell: [f64; 2], dims: [usize; 2], p: [f64; 2]) -> (usize, usize) {
        let f = |d: usize| (((p[d] - lo[d]) / cell[d]).floor().max(0.0) as usize).min(dims[d] - 1);
        (f(0), f(1))
    }

    pub fn candidates(&self, p: [f64; 2]) -> &[usize] {
        let (i, j) = Self::cell_of(self.lo, self.cell, self.dims, p);
        &self.buckets[j * self.dims[0] + i]
    }
}

/// Structured mesh of `[-lx,lx] x [-ly,ly]` with `nx*ny` nodes. Node `(i,j)`
/// has index `j*nx + i`. Boundary segments run counterclockwise from the
/// bottom edge: 1 bottom, 2 right, 3 top, 4 left.
pub fn make_rect_mesh(lx: f64, ly: f64, nx: usize, ny: usize) -> Result<Mesh> {
    if nx < 2 || ny < 2 {
        return Err(Error::InvalidInput(format!("need nx, ny >= 2, got {nx} x {ny}")));
    }
    if !(lx > 0.0 && ly > 0.0) {
        return Err(Error::InvalidInput("half-widths must be positive".into()));
    }
    let mut points = Vec::with_capacity(nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let x = -lx + 2.0 * lx * i as f64 / (nx - 1) as f64;
            let y = -ly + 2.0 * ly * j as f64 / (ny - 1) as f64;
            points.push([x, y]);
        }
    }
    let id = |i: usize, j: usize| j * nx + i;
    let mut triangles = Vec::with_capacity(2 * (nx - 1) * (ny - 1));
    for j in 0..ny - 1 {
        for i in 0..nx - 1 {
            let (p00, p10, p11, p01) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
            triangles.push([p00, p10, p11]);
            triangles.push([p00, p11, p01]);
        }
    }
    let mut edges = Vec::with_capacity(2 * (nx + ny - 2));
    for i in 0..nx - 1 {
        edges.push(BoundaryEdge { a: id(i, 0), b: id(i + 1, 0), segment: 1 });
    }
    for j in 0..ny - 1 {
        edges.push(BoundaryEdge { a: id(nx - 1, j), b: id(nx - 1, j + 1), segment: 2 });
    }
    for i in (1..nx).rev() {
        edges.push(BoundaryEdge { a: id(i, ny - 1), b: id(i - 1, ny - 1), segment: 3 });
    }
    for j in (1..ny).rev() {
        edges.push(BoundaryEdge { a: id(0, j), b: id(0, j - 1), segment: 4 });
    }
    Mesh::new(points, triangles, edges)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn smallest_square() {
        let m = make_rect_mesh(0.5, 0.5, 2, 2).unwrap();
        assert_eq!(m.n_points(), 4);
        assert_eq!(m.n_triangles(), 2);
        assert_relative_eq!(m.total_area(), 1.0, epsilon = 1e-15);
        assert_eq!(m.segment_count(), 4);
    }

    #[test]
    fn triangle_count_and_area() {
        assert_eq!(make_rect_mesh(0.5, 0.5, 21, 21).unwrap().n_triangles(), 800);
        let m = make_rect_mesh(1.0, 0.9, 5, 5).unwrap();
        assert_relative_eq!(m.total_area(), 3.6, epsilon = 1e-13);
    }

    #[test]
    fn rejects_small_grids() {
        assert!(make_rect_mesh(1.0, 1.0, 1, 3).is_err());
    }

    #[test]
    fn text_round_trip() {
        let m = make_rect_mesh(1.0, 0.9, 4, 3).unwrap();
        let back = Mesh::from_text(&m.to_text()).unwrap();
        assert_eq!(back.points(), m.points());
        assert_eq!(back.triangles(), m.triangles());
        assert_eq!(back.boundary_edges(), m.boundary_edges());
    }

    #[test]
    fn clockwise_triangle_rejected() {
        let text = "4 2 4\n0 0\n1 0\n1 1\n0 1\n1 3 2\n1 3 4\n1 2 1\n2 3 1\n3 4 1\n4 1 1\n";
        let err = Mesh::from_text(text).unwrap_err().to_string();
        assert!(err.contains("negative area"), "{err}");
    }

    #[test]
    fn hand_written_square() {
        let text = "4 2 4\n0 0\n1 0\n1 1\n0 1\n1 2 3\n1 3 4\n1 2 1\n2 3 2\n3 4 3\n4 1 4\n";
        let m = Mesh::from_text(text).unwrap();
        // two right triangles with legs 1 and 1
        assert_relative_eq!(m.area(0), 0.5);
        assert_relative_eq!(m.area(1), 0.5);
        let u: Vec<f64> = m.points().iter().map(|p| p[0] + p[1]).collect();
        assert_relative_eq!(m.triint(&u).unwrap()[0], 1.0, epsilon = 1e-15);
    }

    #[test]
    fn dangling_edge_rejected() {
        let text = "4 2 5\n0 0\n1 0\n1 1\n0 1\n1 2 3\n1 3 4\n1 2 1\n2 3 1\n3 4 1\n4 1 1\n1 3 1\n";
        assert!(Mesh::from_text(text).is_err());
    }

    #[test]
    fn centroid_interpolation() {
        let m = make_rect_mesh(1.0, 0.5, 5, 4).unwrap();
        let lin: Vec<f64> = m.points().iter().map(|p| p[0] + p[1]).collect();
        let tv = m.interp_node_to_tri(&lin).unwrap();
        for t in 0..m.n_triangles() {
            let c = m.centroid(t);
            assert_relative_eq!(tv[0][t], c[0] + c[1], epsilon = 1e-14);
        }
        let two: Vec<f64> = lin.iter().copied().chain(std::iter::repeat_n(7.0, m.n_points())).collect();
        let tv2 = m.interp_node_to_tri(&two).unwrap();
        assert_eq!(tv2.len(), 2);
        assert_eq!(tv2[0], tv[0]);
        assert!(tv2[1].iter().all(|&v| (v - 7.0).abs() < 1e-14));
        assert!(m.interp_node_to_tri(&lin[1..]).is_err());
    }

    #[test]
    fn tri_to_node_equal_weights() {
        // one interior node with four equal triangles around it
        let pts = vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0]];
        let tris = vec![[0, 1, 2], [0, 2, 3], [0, 3, 4], [0, 4, 1]];
        let edges = vec![
            BoundaryEdge { a: 1, b: 2, segment: 1 },
            BoundaryEdge { a: 2, b: 3, segment: 1 },
            BoundaryEdge { a: 3, b: 4, segment: 1 },
            BoundaryEdge { a: 4, b: 1, segment: 1 },
        ];
        let m = Mesh::new(pts, tris, edges).unwrap();
        let v = m.interp_tri_to_node(&[vec![1.0, 2.0, 3.0, 4.0]]).unwrap();
        assert_relative_eq!(v[0], 2.5);
    }

    #[test]
    fn linear_round_trip_interior() {
        let m = make_rect_mesh(1.0, 1.0, 5, 5).unwrap();
        let u: Vec<f64> = m.points().iter().map(|p| 2.0 * p[0] - p[1] + 0.5).collect();
        let back = m.interp_tri_to_node(&m.interp_node_to_tri(&u).unwrap()).unwrap();
        for j in 1..4 {
            for i in 1..4 {
                let k = j * 5 + i;
                assert!((back[k] - u[k]).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn gradient_exactness() {
        let m = make_rect_mesh(0.5, 0.5, 4, 4).unwrap();
        let u: Vec<f64> = m.points().iter().map(|p| 2.0 * p[0] + 3.0 * p[1] + 1.0).collect();
        for g in &m.gradients(&u).unwrap()[0] {
            assert_relative_eq!(g[0], 2.0, epsilon = 1e-12);
            assert_relative_eq!(g[1], 3.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn gradient_of_x_squared_on_one_triangle() {
        // mesh of [0,1]^2 shifted from [-.5,.5]^2
        let m = make_rect_mesh(0.5, 0.5, 3, 3).unwrap();
        let u: Vec<f64> = m.points().iter().map(|p| (p[0] + 0.5).powi(2)).collect();
        // first triangle has vertices (0,0), (0.5,0), (0.5,0.5) in shifted coordinates:
        // u = 0, 0.25, 0.25 so du/dx = 0.5, du/dy = 0
        let g = m.gradients(&u).unwrap()[0][0];
        assert_relative_eq!(g[0], 0.5, epsilon = 1e-14);
        assert_relative_eq!(g[1], 0.0, epsilon = 1e-14);
    }

    #[test]
    fn integrals() {
        let h = std::f64::consts::FRAC_PI_2;
        let m = make_rect_mesh(h, h, 7, 7).unwrap();
        let one = vec![1.0; m.n_points()];
        assert_relative_eq!(m.triint(&one).unwrap()[0], std::f64::consts::PI.powi(2), epsilon = 1e-12);
        let x: Vec<f64> = m.points().iter().map(|p| p[0]).collect();
        assert!(m.triint(&x).unwrap()[0].abs() < 1e-13);
    }

    #[test]
    fn locate_points() {
        let m = make_rect_mesh(1.0, 1.0, 6, 6).unwrap();
        let loc = PointLocator::new(&m);
        let (t, w, inside) = m.locate(&loc, [0.13, -0.41]);
        assert!(inside);
        let tri = m.triangles()[t];
        let x: f64 = (0..3).map(|k| w[k] * m.points()[tri[k]][0]).sum();
        let y: f64 = (0..3).map(|k| w[k] * m.points()[tri[k]][1]).sum();
        assert_relative_eq!(x, 0.13, epsilon = 1e-12);
        assert_relative_eq!(y, -0.41, epsilon = 1e-12);
        let (_, _, inside) = m.locate(&loc, [3.0, 0.0]);
        assert!(!inside);
    }
}
