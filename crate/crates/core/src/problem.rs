//! Problem definitions and the residual/Jacobian layer.

use std::collections::BTreeMap;
use std::sync::{Arc, OnceLock};
use std::time::Instant;

use crate::error::{Error, Result};
use crate::fem::assembly::{
    assemble_advection, assemble_load, assemble_mass, assemble_reaction, assemble_stiffness, residual_from_coeffs, FemSpace,
};
use crate::fem::{BoundaryConditionSet, CoefficientSet, JacobianCoefficients, Mesh};
use crate::linalg::solve::{JacobianOp, SymbolicCache};
use crate::linalg::{RankOneCoupling, SparseMat};
use crate::par;

/// Named scalar parameters of a problem.
pub type Params = BTreeMap<String, f64>;

/// A stationary PDE system `-∇·(c⊗∇u) + au - b⊗∇u = f` with boundary data.
///
/// Implementations must be pure: the engine may evaluate them concurrently.
pub trait ProblemDef: Send + Sync {
    fn name(&self) -> &str;

    fn components(&self) -> usize;

    fn params(&self) -> &Params;

    /// Coefficients at `(u, λ)`, per triangle or constant.
    fn coefficients(&self, space: &FemSpace, u: &[f64], lam: f64) -> Result<CoefficientSet>;

    /// Jacobian coefficients, if the problem provides them.
    fn jacobian_coefficients(&self, _space: &FemSpace, _u: &[f64], _lam: f64) -> Option<Result<JacobianCoefficients>> {
        None
    }

    fn boundary_conditions(&self, space: &FemSpace, u: &[f64], lam: f64) -> Result<BoundaryConditionSet>;

    /// Column names of [`ProblemDef::outputs`].
    fn output_names(&self) -> Vec<String> {
        vec!["max|u1|".into(), "L2(u1)".into()]
    }

    /// User branch data; by default the sup norm and `L²` norm of the first component.
    fn outputs(&self, space: &FemSpace, u: &[f64], _lam: f64) -> Vec<f64> {
        default_outputs(space, u)
    }

    /// Rank-one nonlocal term: the Jacobian is `K - λ ν ηᵀ` with `K` local.
    fn coupling(&self, _space: &FemSpace) -> Option<RankOneCoupling> {
        None
    }
}

/// `(‖u₁‖_∞, ‖u₁‖_{L²})`.
pub fn default_outputs(space: &FemSpace, u: &[f64]) -> Vec<f64> {
    let np = space.mesh().n_points();
    let u1 = &u[..np];
    let sup = u1.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let sq: Vec<f64> = u1.iter().map(|v| v * v).collect();
    let l2 = space.mesh().triint(&sq).map(|v| v[0].max(0.0).sqrt()).unwrap_or(f64::NAN);
    vec![sup, l2]
}

pub fn fd_step(x: f64) -> f64 {
    1e-6 * (1.0 + x.abs())
}

/// Grouping of unknowns so that no two columns in a group share a row.
#[derive(Clone, Debug)]
pub struct Colouring {
    pub groups: Vec<Vec<usize>>,
}

impl Colouring {
    /// Greedy distance-2 colouring of a structurally symmetric pattern.
    pub fn distance_two(pattern: &SparseMat) -> Self {
        let n = pattern.ncols();
        let mut colour = vec![usize::MAX; n];
        let mut mark: Vec<usize> = Vec::new();
        let mut stamp = vec![usize::MAX; 0];
        let mut ncol = 0;
        for j in 0..n {
            stamp.clear();
            let (rows, _) = pattern.row(j);
            for &i in rows {
                let (cols, _) = pattern.row(i);
                for &k in cols {
                    if colour[k] != usize::MAX {
                        stamp.push(colour[k]);
                    }
                }
            }
            mark.clear();
            mark.resize(ncol + 1, 0);
            for &c in &stamp {
                mark[c] = 1;
            }
            let c = mark.iter().position(|&m| m == 0).unwrap();
            colour[j] = c;
            ncol = ncol.max(c + 1);
        }
        let mut groups = vec![Vec::new(); ncol];
        for (j, &c) in colour.iter().enumerate() {
            groups[c].push(j);
        }
        Self { groups }
    }
}

/// Result of comparing assembled and finite-difference `G_u`.
#[derive(Clone, Debug)]
pub struct JacCheckReport {
    pub gu_assembled: SparseMat,
    pub gu_fd: SparseMat,
    /// `‖G_fd − G_asm‖_F / ‖G_fd‖_F`
    pub rel_error: f64,
    pub seconds_assembled: f64,
    pub seconds_fd: f64,
}

/// A problem bound to a mesh: everything needed to evaluate `G`, `G_u`, `G_λ`.
pub struct System {
    pub problem: Arc<dyn ProblemDef>,
    pub space: FemSpace,
    pub mass: SparseMat,
    pub cache: SymbolicCache,
    /// Coarse mesh that mesh adaption starts from.
    pub base: Arc<Mesh>,
    colouring: OnceLock<Colouring>,
    coupling: OnceLock<Option<RankOneCoupling>>,
}

impl std::fmt::Debug for System {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "System({}, np={}, N={})",
            self.problem.name(),
            self.space.mesh().n_points(),
            self.space.components()
        )
    }
}

impl System {
    pub fn new(problem: Arc<dyn ProblemDef>, mesh: Arc<Mesh>) -> Self {
        let base = mesh.clone();
        let space = FemSpace::new(mesh, problem.components());
        let mass = assemble_mass(&space);
        Self {
            problem,
            space,
            mass,
            cache: SymbolicCache::new(),
            base,
            colouring: OnceLock::new(),
            coupling: OnceLock::new(),
        }
    }

    /// The same problem on another mesh.
    pub fn with_mesh(&self, mesh: Arc<Mesh>) -> Self {
        let mut s = Self::new(self.problem.clone(), mesh);
        s.base = self.base.clone();
        s
    }

    pub fn mesh(&self) -> &Mesh {
        self.space.mesh()
    }

    pub fn ndof(&self) -> usize {
        self.space.ndof()
    }

    pub fn n_points(&self) -> usize {
        self.space.mesh().n_points()
    }

    fn check(&self, u: &[f64]) -> Result<()> {
        if u.len() != self.ndof() {
            return Err(Error::Dimension {
                what: "state vector length",
                expected: self.ndof(),
                got: u.len(),
            });
        }
        Ok(())
    }

    /// `r = K(u,λ) u − F(u,λ)`.
    pub fn residual(&self, u: &[f64], lam: f64) -> Result<Vec<f64>> {
        self.check(u)?;
        let coeffs = self.problem.coefficients(&self.space, u, lam)?;
        let bcs = self.problem.boundary_conditions(&self.space, u, lam)?;
        residual_from_coeffs(&self.space, &coeffs, &bcs, u, lam)
    }

    pub fn outputs(&self, u: &[f64], lam: f64) -> Vec<f64> {
        self.problem.outputs(&self.space, u, lam)
    }

    pub fn coupling_vectors(&self) -> Option<&RankOneCoupling> {
        self.coupling.get_or_init(|| self.problem.coupling(&self.space)).as_ref()
    }

    fn attach_coupling(&self, k: SparseMat, lam: f64) -> JacobianOp {
        JacobianOp {
            k,
            coupling: self.coupling_vectors().map(|c| (c.clone(), lam)),
        }
    }

    fn jac_coeffs(&self, u: &[f64], lam: f64, jsw: u8) -> Result<JacobianCoefficients> {
        let jc = self
            .problem
            .jacobian_coefficients(&self.space, u, lam)
            .ok_or(Error::MissingJacobian(jsw))??;
        jc.validate(self.mesh().n_triangles())?;
        Ok(jc)
    }

    /// Local part of `G_u` from Jacobian coefficients.
    pub fn assembled_gu_from(&self, jc: &JacobianCoefficients, u: &[f64], lam: f64) -> Result<SparseMat> {
        let bcs = self.problem.boundary_conditions(&self.space, u, lam)?;
        let mut gu = assemble_stiffness(&self.space, &jc.c)?;
        if !jc.fu.is_zero() {
            gu = gu.add_scaled(-1.0, &assemble_reaction(&self.space, &jc.fu)?);
        }
        if !jc.b.is_zero() {
            gu = gu.add_scaled(-1.0, &assemble_advection(&self.space, &jc.b)?);
        }
        if !bcs.is_homogeneous_neumann() {
            let (kq, _) = crate::fem::assembly::assemble_bc(&self.space, &bcs, u, lam)?;
            gu = gu.add_scaled(1.0, &kq);
        }
        Ok(gu)
    }

    pub fn assembled_gu(&self, u: &[f64], lam: f64) -> Result<SparseMat> {
        self.check(u)?;
        let jc = self.jac_coeffs(u, lam, 0)?;
        self.assembled_gu_from(&jc, u, lam)
    }

    pub fn assembled_glam(&self, u: &[f64], lam: f64) -> Result<Vec<f64>> {
        self.check(u)?;
        let jc = self.jac_coeffs(u, lam, 2)?;
        Ok(assemble_load(&self.space, &jc.flam)?.into_iter().map(|v| -v).collect())
    }

    fn colouring(&self) -> &Colouring {
        self.colouring.get_or_init(|| Colouring::distance_two(self.space.pattern()))
    }

    /// Finite-difference `G_u` on the node-adjacency pattern.
    pub fn fd_gu(&self, u: &[f64], lam: f64, r0: Option<&[f64]>) -> Result<SparseMat> {
        self.check(u)?;
        let r0 = match r0 {
            Some(r) => r.to_vec(),
            None => self.residual(u, lam)?,
        };
        let pattern = self.space.pattern();
        let groups = &self.colouring().groups;
        let diffs = par::map_slice(groups, |group| -> Result<(Vec<f64>, Vec<f64>)> {
            let mut up = u.to_vec();
            let mut steps = vec![0.0; u.len()];
            for &j in group {
                steps[j] = fd_step(u[j]);
                up[j] += steps[j];
            }
            Ok((self.residual(&up, lam)?, steps))
        });
        let mut values = vec![0.0; pattern.nnz()];
        let mut off_pattern: f64 = 0.0;
        let mut on_pattern: f64 = 0.0;
        // column j of group g owns rows in its pattern (symmetric pattern)
        let mut owner = vec![usize::MAX; u.len()];
        for (group, d) in groups.iter().zip(diffs) {
            let (rp, steps) = d?;
            for &j in group {
                let (rows, _) = pattern.row(j);
                for &i in rows {
                    owner[i] = j;
                }
            }
            for i in 0..u.len() {
                let delta = rp[i] - r0[i];
                let j = owner[i];
                if j == usize::MAX {
                    off_pattern = off_pattern.max((delta / 1e-6).abs());
                    continue;
                }
                let v = delta / steps[j];
                on_pattern = on_pattern.max(v.abs());
                values[pattern.position(i, j).unwrap()] = v;
            }
            for &j in group {
                let (rows, _) = pattern.row(j);
                for &i in rows {
                    owner[i] = usize::MAX;
                }
            }
        }
        if off_pattern > 1e-8 * on_pattern.max(1.0) {
            return Err(Error::SparsityViolation(off_pattern));
        }
        SparseMat::from_csr(
            pattern.nrows(),
            pattern.ncols(),
            pattern.row_ptr().to_vec(),
            pattern.col_idx().to_vec(),
            values,
        )
    }

    /// `(r(u, λ+δ) − r(u, λ)) / δ`.
    pub fn fd_glam(&self, u: &[f64], lam: f64, r0: Option<&[f64]>) -> Result<Vec<f64>> {
        let r0 = match r0 {
            Some(r) => r.to_vec(),
            None => self.residual(u, lam)?,
        };
        let d = fd_step(lam);
        let r1 = self.residual(u, lam + d)?;
        Ok(r1.iter().zip(&r0).map(|(a, b)| (a - b) / d).collect())
    }

    /// `(G_u, G_λ)` in the mode `jsw`: 0 both assembled, 1 `G_λ` by finite
    /// differences, 2 `G_u` by finite differences, 3 both.
    pub fn jacobian(&self, u: &[f64], lam: f64, jsw: u8) -> Result<(JacobianOp, Vec<f64>)> {
        self.check(u)?;
        if jsw > 3 {
            return Err(Error::InvalidInput(format!("jsw must be 0..3, got {jsw}")));
        }
        let needs_r0 = jsw != 0;
        let r0 = if needs_r0 { Some(self.residual(u, lam)?) } else { None };
        let jc = if jsw <= 2 { Some(self.jac_coeffs(u, lam, jsw)?) } else { None };
        let gu = if jsw <= 1 {
            self.assembled_gu_from(jc.as_ref().unwrap(), u, lam)?
        } else {
            self.fd_gu(u, lam, r0.as_deref())?
        };
        let glam = if jsw == 0 || jsw == 2 {
            let flam = &jc.as_ref().unwrap().flam;
            assemble_load(&self.space, flam)?.into_iter().map(|v| -v).collect()
        } else {
            self.fd_glam(u, lam, r0.as_deref())?
        };
        Ok((self.attach_coupling(gu, lam), glam))
    }

    /// Compares the assembled local Jacobian against finite differences.
    pub fn jac_check(&self, u: &[f64], lam: f64) -> Result<JacCheckReport> {
        let t0 = Instant::now();
        let gu_assembled = self.assembled_gu(u, lam)?;
        let seconds_assembled = t0.elapsed().as_secs_f64();
        let t1 = Instant::now();
        let gu_fd = self.fd_gu(u, lam, None)?;
        let seconds_fd = t1.elapsed().as_secs_f64();
        let diff = gu_fd.add_scaled(-1.0, &gu_assembled);
        let rel_error = diff.norm_fro() / gu_fd.norm_fro();
        Ok(JacCheckReport {
            gu_assembled,
            gu_fd,
            rel_error,
            seconds_assembled,
            seconds_fd,
        })
    }

    /// Solves `G_u v = rhs`, through Sherman–Morrison when `G_u` carries a coupling.
    pub fn solve_linearized(&self, gu: &JacobianOp, rhs: &[f64]) -> Result<Vec<f64>> {
        gu.factor(Some(&self.cache))?.solve(rhs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::coeffs::{c_scalar, CoeffArray};
    use crate::fem::make_rect_mesh;
    use crate::linalg::solve;

    /// `-Δu - λu = x`, with the linear term in the reaction coefficient.
    struct Linear {
        params: Params,
    }

    impl ProblemDef for Linear {
        fn name(&self) -> &str {
            "linear"
        }
        fn components(&self) -> usize {
            1
        }
        fn params(&self) -> &Params {
            &self.params
        }
        fn coefficients(&self, space: &FemSpace, _u: &[f64], lam: f64) -> Result<CoefficientSet> {
            let f: Vec<f64> = (0..space.mesh().n_triangles()).map(|t| space.mesh().centroid(t)[0]).collect();
            let mut cs = CoefficientSet::new(1, c_scalar(1, 1.0), CoeffArray::from_rows(vec![f])?);
            cs.a = CoeffArray::constant(vec![-lam]);
            Ok(cs)
        }
        fn jacobian_coefficients(&self, space: &FemSpace, u: &[f64], lam: f64) -> Option<Result<JacobianCoefficients>> {
            let ut = space.mesh().interp_node_to_tri(u).ok()?;
            Some(Ok(JacobianCoefficients {
                n: 1,
                c: c_scalar(1, 1.0),
                fu: CoeffArray::constant(vec![lam]),
                flam: CoeffArray::from_rows(vec![ut[0].clone()]).unwrap(),
                b: CoeffArray::zeros(2, 1),
            }))
        }
        fn boundary_conditions(&self, space: &FemSpace, _u: &[f64], _lam: f64) -> Result<BoundaryConditionSet> {
            Ok(BoundaryConditionSet::neumann(1, space.mesh().segment_count()))
        }
    }

    fn linear_system(n: usize) -> System {
        let mesh = Arc::new(make_rect_mesh(0.5, 0.5, n, n).unwrap());
        System::new(Arc::new(Linear { params: Params::new() }), mesh)
    }

    #[test]
    fn colouring_is_distance_two() {
        let s = linear_system(6);
        let p = s.space.pattern();
        let c = Colouring::distance_two(p);
        let total: usize = c.groups.iter().map(Vec::len).sum();
        assert_eq!(total, s.ndof());
        for g in &c.groups {
            let mut seen = vec![false; s.ndof()];
            for &j in g {
                for &i in p.row(j).0 {
                    assert!(!seen[i], "rows shared inside a colour group");
                    seen[i] = true;
                }
            }
        }
    }

    #[test]
    fn linear_problem_fd_matches_assembled() {
        let s = linear_system(7);
        let u: Vec<f64> = s.mesh().points().iter().map(|p| (p[0] * 3.0).sin() + p[1]).collect();
        let rep = s.jac_check(&u, 0.7).unwrap();
        assert!(rep.rel_error <= 1e-6, "{}", rep.rel_error);
        // the assembled G_λ uses centroid values, so only the totals agree exactly
        let (_, g0) = s.jacobian(&u, 0.7, 0).unwrap();
        let (_, g1) = s.jacobian(&u, 0.7, 1).unwrap();
        let (s0, s1): (f64, f64) = (g0.iter().sum(), g1.iter().sum());
        assert!((s0 - s1).abs() < 1e-6 * (1.0 + s0.abs()), "{s0} {s1}");
    }

    #[test]
    fn jsw_zero_and_one_share_gu() {
        let s = linear_system(5);
        let u = vec![0.3; s.ndof()];
        let (a, _) = s.jacobian(&u, 0.2, 0).unwrap();
        let (b, _) = s.jacobian(&u, 0.2, 1).unwrap();
        assert_eq!(a.k, b.k);
    }

    #[test]
    fn newton_on_linear_problem() {
        let s = linear_system(8);
        let mut u = vec![0.0; s.ndof()];
        let lam = -1.0;
        for _ in 0..2 {
            let r = s.residual(&u, lam).unwrap();
            let (gu, _) = s.jacobian(&u, lam, 0).unwrap();
            let du = s.solve_linearized(&gu, &r).unwrap();
            u.iter_mut().zip(&du).for_each(|(a, b)| *a -= b);
        }
        let r = s.residual(&u, lam).unwrap();
        assert!(crate::linalg::sparse::norm_inf(&r) < 1e-12);
        // uncoupled solve equals plain solve
        let (gu, _) = s.jacobian(&u, lam, 0).unwrap();
        assert_eq!(s.solve_linearized(&gu, &r).unwrap(), solve(&gu.k, &r).unwrap());
    }

    #[test]
    fn missing_jacobian_is_reported() {
        struct NoJac(Params);
        impl ProblemDef for NoJac {
            fn name(&self) -> &str {
                "nojac"
            }
            fn components(&self) -> usize {
                1
            }
            fn params(&self) -> &Params {
                &self.0
            }
            fn coefficients(&self, _s: &FemSpace, _u: &[f64], _l: f64) -> Result<CoefficientSet> {
                Ok(CoefficientSet::new(1, c_scalar(1, 1.0), CoeffArray::constant(vec![1.0])))
            }
            fn boundary_conditions(&self, s: &FemSpace, _u: &[f64], _l: f64) -> Result<BoundaryConditionSet> {
                Ok(BoundaryConditionSet::neumann(1, s.mesh().segment_count()))
            }
        }
        let mesh = Arc::new(make_rect_mesh(0.5, 0.5, 4, 4).unwrap());
        let s = System::new(Arc::new(NoJac(Params::new())), mesh);
        let u = vec![0.0; s.ndof()];
        assert!(matches!(s.jacobian(&u, 0.0, 0), Err(Error::MissingJacobian(0))));
        assert!(s.jacobian(&u, 0.0, 3).is_ok());
    }

    #[test]
    fn nonlocal_residual_violates_pattern() {
        struct Global(Params);
        impl ProblemDef for Global {
            fn name(&self) -> &str {
                "global"
            }
            fn components(&self) -> usize {
                1
            }
            fn params(&self) -> &Params {
                &self.0
            }
            fn coefficients(&self, s: &FemSpace, u: &[f64], _l: f64) -> Result<CoefficientSet> {
                let mean = s.mesh().triint(u)?[0];
                Ok(CoefficientSet::new(1, c_scalar(1, 1.0), CoeffArray::constant(vec![mean])))
            }
            fn boundary_conditions(&self, s: &FemSpace, _u: &[f64], _l: f64) -> Result<BoundaryConditionSet> {
                Ok(BoundaryConditionSet::neumann(1, s.mesh().segment_count()))
            }
        }
        let mesh = Arc::new(make_rect_mesh(0.5, 0.5, 6, 6).unwrap());
        let s = System::new(Arc::new(Global(Params::new())), mesh);
        let u = vec![0.1; s.ndof()];
        assert!(matches!(s.fd_gu(&u, 0.0, None), Err(Error::SparsityViolation(_))));
    }
}
