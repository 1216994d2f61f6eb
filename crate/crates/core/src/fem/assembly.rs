//! P1 assembly of stiffness, mass, advection, load and boundary terms.
//!
//! Degrees of freedom are blocked by component: entry `i*n_p + p` is
//! component `i` at node `p`. All matrices share the node-adjacency pattern
//! of their [`FemSpace`], so sums of assembled matrices never reallocate.

use std::collections::HashMap;
use std::sync::Arc;

use super::bc::{BcPoint, BoundaryConditionSet};
use super::coeffs::{a_row, b_row, c_row, CoeffArray, CoefficientSet};
use super::mesh::Mesh;
use crate::error::{Error, Result};
use crate::linalg::sparse::SparseMat;
use crate::par;

/// A mesh together with a component count and the shared sparsity pattern.
#[derive(Clone, Debug)]
pub struct FemSpace {
    mesh: Arc<Mesh>,
    n: usize,
    pattern: SparseMat,
    // value positions of the 3N x 3N element matrix, row-major over (i,p),(j,q)
    elem_pos: Vec<usize>,
    // triangle adjacent to each boundary edge
    edge_tri: Vec<usize>,
}

impl FemSpace {
    pub fn new(mesh: Arc<Mesh>, n: usize) -> Self {
        assert!(n >= 1, "at least one component");
        let np = mesh.n_points();
        let adj = mesh.node_adjacency();
        let mut row_ptr = Vec::with_capacity(n * np + 1);
        let mut col_idx = Vec::new();
        row_ptr.push(0);
        for _i in 0..n {
            for nbrs in &adj {
                for j in 0..n {
                    col_idx.extend(nbrs.iter().map(|&q| j * np + q));
                }
                row_ptr.push(col_idx.len());
            }
        }
        let nnz = col_idx.len();
        let pattern = SparseMat::from_csr(n * np, n * np, row_ptr, col_idx, vec![0.0; nnz])
            .expect("adjacency pattern is sorted");

        let m = 3 * n;
        let mut elem_pos = Vec::with_capacity(mesh.n_triangles() * m * m);
        for tri in mesh.triangles() {
            for i in 0..n {
                for p in 0..3 {
                    for j in 0..n {
                        for q in 0..3 {
                            let pos = pattern.position(i * np + tri[p], j * np + tri[q]).unwrap();
                            elem_pos.push(pos);
                        }
                    }
                }
            }
        }

        let lookup: HashMap<(usize, usize), usize> = mesh
            .mesh_edges()
            .iter()
            .filter(|e| e.is_boundary())
            .map(|e| ((e.nodes[0].min(e.nodes[1]), e.nodes[0].max(e.nodes[1])), e.tris[0]))
            .collect();
        let edge_tri = mesh
            .boundary_edges()
            .iter()
            .map(|e| lookup[&(e.a.min(e.b), e.a.max(e.b))])
            .collect();

        Self {
            mesh,
            n,
            pattern,
            elem_pos,
            edge_tri,
        }
    }

    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    pub fn mesh_arc(&self) -> &Arc<Mesh> {
        &self.mesh
    }

    pub fn components(&self) -> usize {
        self.n
    }

    pub fn ndof(&self) -> usize {
        self.n * self.mesh.n_points()
    }

    pub fn pattern(&self) -> &SparseMat {
        &self.pattern
    }

    fn check_len(&self, u: &[f64]) -> Result<()> {
        if u.len() != self.ndof() {
            return Err(Error::Dimension {
                what: "nodal vector length",
                expected: self.ndof(),
                got: u.len(),
            });
        }
        Ok(())
    }

    /// Scatters per-triangle 3N x 3N element matrices in triangle order.
    fn scatter(&self, elems: &[Vec<f64>]) -> SparseMat {
        let mut out = self.pattern.clone();
        let vals = out.values_mut();
        let m2 = 9 * self.n * self.n;
        for (t, e) in elems.iter().enumerate() {
            let pos = &self.elem_pos[t * m2..(t + 1) * m2];
            for (&p, &v) in pos.iter().zip(e) {
                vals[p] += v;
            }
        }
        out
    }

    fn assemble_elements<F>(&self, f: F) -> SparseMat
    where
        F: Fn(usize, &mut [f64]) + Sync + Send,
    {
        let m2 = 9 * self.n * self.n;
        let elems = par::map_indexed(self.mesh.n_triangles(), |t| {
            let mut e = vec![0.0; m2];
            f(t, &mut e);
            e
        });
        self.scatter(&elems)
    }
}

const MASS_REF: [[f64; 3]; 3] = [[2.0, 1.0, 1.0], [1.0, 2.0, 1.0], [1.0, 1.0, 2.0]];

#[inline]
fn idx(n: usize, i: usize, p: usize, j: usize, q: usize) -> usize {
    ((i * 3 + p) * n + j) * 3 + q
}

fn add_stiffness(space: &FemSpace, t: usize, c: &CoeffArray, e: &mut [f64]) {
    let n = space.n;
    let g = space.mesh.basis_gradients(t);
    let area = space.mesh.area(t);
    for j in 0..n {
        for i in 0..n {
            let cc = [
                [c.at(c_row(n, i, j, 0, 0), t), c.at(c_row(n, i, j, 0, 1), t)],
                [c.at(c_row(n, i, j, 1, 0), t), c.at(c_row(n, i, j, 1, 1), t)],
            ];
            if cc.iter().flatten().all(|&v| v == 0.0) {
                continue;
            }
            for p in 0..3 {
                for q in 0..3 {
                    let mut s = 0.0;
                    for k in 0..2 {
                        for l in 0..2 {
                            s += cc[k][l] * g[p][k] * g[q][l];
                        }
                    }
                    e[idx(n, i, p, j, q)] += area * s;
                }
            }
        }
    }
}

fn add_reaction(space: &FemSpace, t: usize, a: &CoeffArray, scale: f64, e: &mut [f64]) {
    let n = space.n;
    let w = scale * space.mesh.area(t) / 12.0;
    for j in 0..n {
        for i in 0..n {
            let aij = a.at(a_row(n, i, j), t);
            if aij == 0.0 {
                continue;
            }
            for p in 0..3 {
                for q in 0..3 {
                    e[idx(n, i, p, j, q)] += w * aij * MASS_REF[p][q];
                }
            }
        }
    }
}

fn add_advection(space: &FemSpace, t: usize, b: &CoeffArray, scale: f64, e: &mut [f64]) {
    let n = space.n;
    let g = space.mesh.basis_gradients(t);
    let w = scale * space.mesh.area(t) / 3.0;
    for j in 0..n {
        for i in 0..n {
            let bx = b.at(b_row(n, i, j, 0), t);
            let by = b.at(b_row(n, i, j, 1), t);
            if bx == 0.0 && by == 0.0 {
                continue;
            }
            for q in 0..3 {
                let v = w * (bx * g[q][0] + by * g[q][1]);
                for p in 0..3 {
                    e[idx(n, i, p, j, q)] += v;
                }
            }
        }
    }
}

/// Exact P1 mass matrix, block-diagonal over components.
pub fn assemble_mass(space: &FemSpace) -> SparseMat {
    let n = space.n;
    let mut ident = CoeffArray::zeros(n * n, 1);
    for i in 0..n {
        ident.set(a_row(n, i, i), 0, 1.0);
    }
    space.assemble_elements(|t, e| add_reaction(space, t, &ident, 1.0, e))
}

/// Diffusion term `∫ ∇φ_p · c_{ij} ∇φ_q` with `c` at centroids.
pub fn assemble_stiffness(space: &FemSpace, c: &CoeffArray) -> Result<SparseMat> {
    let n = space.n;
    c.check_layout("rows of c", 4 * n * n, space.mesh.n_triangles())?;
    Ok(space.assemble_elements(|t, e| add_stiffness(space, t, c, e)))
}

/// Advection term `∫ φ_p (b_{ij}·∇φ_q)`.
pub fn assemble_advection(space: &FemSpace, b: &CoeffArray) -> Result<SparseMat> {
    let n = space.n;
    b.check_layout("rows of b", 2 * n * n, space.mesh.n_triangles())?;
    Ok(space.assemble_elements(|t, e| add_advection(space, t, b, 1.0, e)))
}

/// Reaction term `∫ a_{ij} φ_p φ_q` with `a` at centroids.
pub fn assemble_reaction(space: &FemSpace, a: &CoeffArray) -> Result<SparseMat> {
    let n = space.n;
    a.check_layout("rows of a", n * n, space.mesh.n_triangles())?;
    Ok(space.assemble_elements(|t, e| add_reaction(space, t, a, 1.0, e)))
}

/// `K_c + K_a - B` in one pass.
pub fn assemble_operator(space: &FemSpace, c: &CoeffArray, a: &CoeffArray, b: &CoeffArray) -> Result<SparseMat> {
    let n = space.n;
    let nt = space.mesh.n_triangles();
    c.check_layout("rows of c", 4 * n * n, nt)?;
    a.check_layout("rows of a", n * n, nt)?;
    b.check_layout("rows of b", 2 * n * n, nt)?;
    let (az, bz) = (a.is_zero(), b.is_zero());
    Ok(space.assemble_elements(|t, e| {
        add_stiffness(space, t, c, e);
        if !az {
            add_reaction(space, t, a, 1.0, e);
        }
        if !bz {
            add_advection(space, t, b, -1.0, e);
        }
    }))
}

/// Load vector: centroid value times `area/3` at each vertex.
pub fn assemble_load(space: &FemSpace, f: &CoeffArray) -> Result<Vec<f64>> {
    let n = space.n;
    let mesh = &space.mesh;
    f.check_layout("rows of f", n, mesh.n_triangles())?;
    let np = mesh.n_points();
    let mut out = vec![0.0; n * np];
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let w = mesh.area(t) / 3.0;
        for i in 0..n {
            let v = w * f.at(i, t);
            for &p in tri {
                out[i * np + p] += v;
            }
        }
    }
    Ok(out)
}

/// Midpoint data on every boundary edge: `(edge, x, y, u, ∇u)`.
fn edge_points<'a>(space: &'a FemSpace, u: &'a [f64]) -> impl Iterator<Item = (usize, [f64; 2], Vec<f64>, Vec<[f64; 2]>)> + 'a {
    let mesh = &space.mesh;
    let n = space.n;
    let np = mesh.n_points();
    mesh.boundary_edges().iter().enumerate().map(move |(k, e)| {
        let (pa, pb) = (mesh.points()[e.a], mesh.points()[e.b]);
        let mid = [0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1])];
        let t = space.edge_tri[k];
        let um: Vec<f64> = (0..n).map(|i| 0.5 * (u[i * np + e.a] + u[i * np + e.b])).collect();
        let gm: Vec<[f64; 2]> = (0..n)
            .map(|i| mesh.triangle_gradient(t, &u[i * np..(i + 1) * np]))
            .collect();
        (k, mid, um, gm)
    })
}

/// Boundary matrix from `q` (edge mass `h/6·[[2,1],[1,2]]`) and boundary
/// load from `g` (`h/2` per edge node), with formulas evaluated at edge midpoints.
pub fn assemble_bc(space: &FemSpace, bcs: &BoundaryConditionSet, u: &[f64], lam: f64) -> Result<(SparseMat, Vec<f64>)> {
    space.check_len(u)?;
    let mesh = &space.mesh;
    bcs.validate(mesh.segment_count())?;
    if bcs.n != space.n {
        return Err(Error::Dimension {
            what: "boundary condition components",
            expected: space.n,
            got: bcs.n,
        });
    }
    let n = space.n;
    let np = mesh.n_points();
    let mut kq = space.pattern.clone();
    let mut gvec = vec![0.0; n * np];
    if bcs.is_homogeneous_neumann() {
        return Ok((kq, gvec));
    }
    for (k, mid, um, gm) in edge_points(space, u) {
        let e = mesh.boundary_edges()[k];
        let seg = &bcs.segments[e.segment - 1];
        let h = {
            let (pa, pb) = (mesh.points()[e.a], mesh.points()[e.b]);
            ((pa[0] - pb[0]).powi(2) + (pa[1] - pb[1]).powi(2)).sqrt()
        };
        let pt = BcPoint {
            x: mid[0],
            y: mid[1],
            u: &um,
            grad: &gm,
            lam,
        };
        let nodes = [e.a, e.b];
        for i in 0..n {
            for j in 0..n {
                let qij = seg.q[i * n + j].eval(&pt);
                if qij == 0.0 {
                    continue;
                }
                for (s, &p) in nodes.iter().enumerate() {
                    for (r, &q) in nodes.iter().enumerate() {
                        let w = if s == r { 2.0 } else { 1.0 };
                        let pos = kq.position(i * np + p, j * np + q).unwrap();
                        kq.values_mut()[pos] += qij * h / 6.0 * w;
                    }
                }
            }
            let gi = seg.g[i].eval(&pt);
            if gi != 0.0 {
                for &p in &nodes {
                    gvec[i * np + p] += 0.5 * h * gi;
                }
            }
        }
    }
    Ok((kq, gvec))
}

/// Full linear system at a state.
#[derive(Clone, Debug)]
pub struct AssembledSystem {
    /// `K_c + K_a + K_q - B`
    pub k: SparseMat,
    pub m: SparseMat,
    /// `F_f + G_g`
    pub f: Vec<f64>,
    pub b: SparseMat,
}

impl AssembledSystem {
    pub fn residual(&self, u: &[f64]) -> Vec<f64> {
        let mut r = self.k.matvec(u);
        for (ri, fi) in r.iter_mut().zip(&self.f) {
            *ri -= fi;
        }
        r
    }
}

/// Assembles `K`, `M`, `F` and `B` from coefficients and boundary conditions.
pub fn assemble_system(
    space: &FemSpace,
    coeffs: &CoefficientSet,
    bcs: &BoundaryConditionSet,
    u: &[f64],
    lam: f64,
) -> Result<AssembledSystem> {
    coeffs.validate(space.mesh.n_triangles())?;
    let k0 = assemble_operator(space, &coeffs.c, &coeffs.a, &coeffs.b)?;
    let b = assemble_advection(space, &coeffs.b)?;
    let (kq, g) = assemble_bc(space, bcs, u, lam)?;
    let mut f = assemble_load(space, &coeffs.f)?;
    for (fi, gi) in f.iter_mut().zip(&g) {
        *fi += gi;
    }
    Ok(AssembledSystem {
        k: k0.add_scaled(1.0, &kq),
        m: assemble_mass(space),
        f,
        b,
    })
}

/// Residual `K(u)u - F(u)` computed element by element without forming `K`.
pub fn residual_from_coeffs(
    space: &FemSpace,
    coeffs: &CoefficientSet,
    bcs: &BoundaryConditionSet,
    u: &[f64],
    lam: f64,
) -> Result<Vec<f64>> {
    space.check_len(u)?;
    let mesh = &space.mesh;
    coeffs.validate(mesh.n_triangles())?;
    let n = space.n;
    let np = mesh.n_points();
    let m = 3 * n;
    let (az, bz) = (coeffs.a.is_zero(), coeffs.b.is_zero());
    let locals = par::map_indexed(mesh.n_triangles(), |t| {
        let mut e = vec![0.0; m * m];
        add_stiffness(space, t, &coeffs.c, &mut e);
        if !az {
            add_reaction(space, t, &coeffs.a, 1.0, &mut e);
        }
        if !bz {
            add_advection(space, t, &coeffs.b, -1.0, &mut e);
        }
        let tri = mesh.triangles()[t];
        let ul: Vec<f64> = (0..n).flat_map(|j| tri.map(|q| u[j * np + q])).collect();
        let w = mesh.area(t) / 3.0;
        let mut r = vec![0.0; m];
        for row in 0..m {
            let s: f64 = e[row * m..(row + 1) * m].iter().zip(&ul).map(|(a, b)| a * b).sum();
            r[row] = s - w * coeffs.f.at(row / 3, t);
        }
        r
    });
    let mut out = vec![0.0; n * np];
    for (t, r) in locals.iter().enumerate() {
        let tri = mesh.triangles()[t];
        for i in 0..n {
            for p in 0..3 {
                out[i * np + tri[p]] += r[i * 3 + p];
            }
        }
    }
    if !bcs.is_homogeneous_neumann() {
        let (kq, g) = assemble_bc(space, bcs, u, lam)?;
        let ku = kq.matvec(u);
        for ((o, k), gi) in out.iter_mut().zip(&ku).zip(&g) {
            *o += k - gi;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::coeffs::{c_diagonal, c_scalar};
    use crate::fem::mesh::{make_rect_mesh, BoundaryEdge};
    use approx::assert_relative_eq;

    fn reference_triangle() -> Arc<Mesh> {
        let edges = vec![
            BoundaryEdge { a: 0, b: 1, segment: 1 },
            BoundaryEdge { a: 1, b: 2, segment: 1 },
            BoundaryEdge { a: 2, b: 0, segment: 1 },
        ];
        Arc::new(Mesh::new(vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]], vec![[0, 1, 2]], edges).unwrap())
    }

    fn unit_square(nx: usize) -> Arc<Mesh> {
        Arc::new(make_rect_mesh(0.5, 0.5, nx, nx).unwrap())
    }

    #[test]
    fn reference_mass() {
        let s = FemSpace::new(reference_triangle(), 1);
        let m = assemble_mass(&s).to_dense();
        for p in 0..3 {
            for q in 0..3 {
                assert_relative_eq!(m[p][q], MASS_REF[p][q] / 24.0, epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn reference_stiffness() {
        let s = FemSpace::new(reference_triangle(), 1);
        let k = assemble_stiffness(&s, &c_scalar(1, 1.0)).unwrap().to_dense();
        let expect = [[2.0, -1.0, -1.0], [-1.0, 1.0, 0.0], [-1.0, 0.0, 1.0]];
        for p in 0..3 {
            for q in 0..3 {
                assert_relative_eq!(k[p][q], 0.5 * expect[p][q], epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn mass_sums_to_area_per_component() {
        let s = FemSpace::new(unit_square(6), 2);
        let m = assemble_mass(&s);
        assert_relative_eq!(m.values().iter().sum::<f64>(), 2.0, epsilon = 1e-13);
        let np = s.mesh().n_points();
        for (i, j, v) in m.triplets() {
            assert!(v == 0.0 || i / np == j / np, "mass couples components");
        }
        for (i, j, v) in m.triplets() {
            if i < np {
                assert_eq!(v, m.get(i + np, j + np));
            }
        }
    }

    #[test]
    fn stiffness_kernel_and_diagonal_scaling() {
        let s1 = FemSpace::new(unit_square(7), 1);
        let k1 = assemble_stiffness(&s1, &c_scalar(1, 1.0)).unwrap();
        let ones = vec![1.0; s1.ndof()];
        assert!(k1.matvec(&ones).iter().all(|v| v.abs() <= 1e-12 * k1.norm_inf()));
        assert!(k1.asymmetry() < 1e-14);

        let s2 = FemSpace::new(unit_square(7), 2);
        let k2 = assemble_stiffness(&s2, &c_diagonal(&[1.0, 60.0])).unwrap();
        let np = s1.ndof();
        for (i, j, v) in k1.triplets() {
            assert_relative_eq!(k2.get(i, j), v, epsilon = 1e-14);
            assert_relative_eq!(k2.get(i + np, j + np), 60.0 * v, epsilon = 1e-12);
            assert_eq!(k2.get(i, j + np), 0.0);
        }
    }

    #[test]
    fn advection_of_x_gives_mass_row_sums() {
        let s = FemSpace::new(unit_square(6), 1);
        let b = assemble_advection(&s, &CoeffArray::constant(vec![1.0, 0.0])).unwrap();
        let x: Vec<f64> = s.mesh().points().iter().map(|p| p[0]).collect();
        let bu = b.matvec(&x);
        let rows = assemble_mass(&s).matvec(&vec![1.0; s.ndof()]);
        for (a, b) in bu.iter().zip(&rows) {
            assert_relative_eq!(a, b, epsilon = 1e-14);
        }
        assert!(assemble_advection(&s, &CoeffArray::zeros(2, 1)).unwrap().norm_fro() == 0.0);
    }

    #[test]
    fn two_component_advection_is_block_diagonal() {
        let s1 = FemSpace::new(unit_square(5), 1);
        let s2 = FemSpace::new(unit_square(5), 2);
        let b1 = assemble_advection(&s1, &CoeffArray::constant(vec![0.7, 0.0])).unwrap();
        let b2 = assemble_advection(&s2, &CoeffArray::constant(vec![0.7, 0.0, 0.0, 0.0, 0.0, 0.0, 0.7, 0.0])).unwrap();
        let np = s1.ndof();
        for (i, j, v) in b1.triplets() {
            assert_eq!(b2.get(i, j), v);
            assert_eq!(b2.get(i + np, j + np), v);
            assert_eq!(b2.get(i + np, j), 0.0);
        }
    }

    #[test]
    fn load_rules() {
        let s = FemSpace::new(unit_square(2), 1);
        let f1 = assemble_load(&s, &CoeffArray::constant(vec![1.0])).unwrap();
        assert_relative_eq!(f1.iter().sum::<f64>(), 1.0, epsilon = 1e-15);
        // triangles (0,1,3) and (0,3,2) of area 1/2 with values 1 and 2
        let f = assemble_load(&s, &CoeffArray::from_rows(vec![vec![1.0, 2.0]]).unwrap()).unwrap();
        let sixth = 1.0 / 6.0;
        let expect = [3.0 * sixth, sixth, 2.0 * sixth, 3.0 * sixth];
        for (a, b) in f.iter().zip(&expect) {
            assert_relative_eq!(a, b, epsilon = 1e-15);
        }
    }

    #[test]
    fn zero_bc_is_zero() {
        let s = FemSpace::new(unit_square(4), 1);
        let (k, g) = assemble_bc(&s, &BoundaryConditionSet::neumann(1, 4), &vec![0.0; s.ndof()], 0.0).unwrap();
        assert_eq!(k.norm_fro(), 0.0);
        assert!(g.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn bc_edge_mass_totals() {
        // sum of q-boundary matrix entries equals q times perimeter
        let s = FemSpace::new(unit_square(5), 1);
        let (k, _) = assemble_bc(&s, &BoundaryConditionSet::stiff_dirichlet(1, 4, 2.0), &vec![0.0; s.ndof()], 0.0).unwrap();
        assert_relative_eq!(k.values().iter().sum::<f64>(), 8.0, epsilon = 1e-13);
    }

    #[test]
    fn elementwise_residual_matches_assembled() {
        let s = FemSpace::new(unit_square(6), 2);
        let nt = s.mesh().n_triangles();
        let mut c = CoeffArray::zeros(16, nt);
        let mut a = CoeffArray::zeros(4, nt);
        let mut b = CoeffArray::zeros(8, nt);
        let mut f = CoeffArray::zeros(2, nt);
        for t in 0..nt {
            let x = t as f64 / nt as f64;
            for r in 0..16 {
                c.set(r, t, 0.1 + x * (r as f64 * 0.37).sin());
            }
            for r in 0..4 {
                a.set(r, t, (x + r as f64).cos());
            }
            for r in 0..8 {
                b.set(r, t, x - 0.2 * r as f64);
            }
            f.set(0, t, x);
            f.set(1, t, -x);
        }
        let coeffs = CoefficientSet { n: 2, c, a, f, b };
        let bcs = BoundaryConditionSet::stiff_dirichlet(2, 4, 3.0);
        let u: Vec<f64> = (0..s.ndof()).map(|i| (i as f64 * 0.3).sin()).collect();
        let sys = assemble_system(&s, &coeffs, &bcs, &u, 0.0).unwrap();
        let r1 = sys.residual(&u);
        let r2 = residual_from_coeffs(&s, &coeffs, &bcs, &u, 0.0).unwrap();
        for (x, y) in r1.iter().zip(&r2) {
            assert_relative_eq!(x, y, epsilon = 1e-12);
        }
        let again = assemble_system(&s, &coeffs, &bcs, &u, 0.0).unwrap();
        assert_eq!(again.k, sys.k);
        assert_eq!(again.f, sys.f);
    }

    #[test]
    fn symmetric_data_gives_symmetric_operator() {
        let s = FemSpace::new(unit_square(6), 2);
        let mut c = vec![0.0; 16];
        for (i, j, v) in [(0, 0, 1.0), (1, 1, 2.0), (0, 1, 0.3), (1, 0, 0.3)] {
            c[c_row(2, i, j, 0, 0)] = v;
            c[c_row(2, i, j, 1, 1)] = v;
            c[c_row(2, i, j, 0, 1)] = 0.1 * v;
            c[c_row(2, i, j, 1, 0)] = 0.1 * v;
        }
        let a = CoeffArray::constant(vec![1.0, 0.5, 0.5, 2.0]);
        let coeffs = CoefficientSet {
            n: 2,
            c: CoeffArray::constant(c),
            a,
            f: CoeffArray::zeros(2, 1),
            b: CoeffArray::zeros(8, 1),
        };
        let sys = assemble_system(&s, &coeffs, &BoundaryConditionSet::stiff_dirichlet(2, 4, 5.0), &vec![0.0; s.ndof()], 0.0).unwrap();
        assert!(sys.k.asymmetry() <= 1e-12);
    }
}
