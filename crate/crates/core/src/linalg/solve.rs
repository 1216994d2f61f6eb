//! Sparse direct solves, bordered systems and rank-one-modified systems.

use std::sync::{Arc, Mutex};

use faer::linalg::solvers::Solve;
use faer::sparse::linalg::solvers::{Lu, SymbolicLu};
use faer::sparse::{SparseColMatRef, SymbolicSparseColMatRef};
use faer::Mat;

use super::sparse::{dot, norm_inf, SparseMat};
use crate::error::{Error, Result};

const RESIDUAL_TOL: f64 = 1e-10;

fn pattern_hash(m: &SparseMat) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for &x in m.row_ptr().iter().chain(m.col_idx()) {
        h ^= x as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h ^ (m.nrows() as u64).rotate_left(32)
}

/// Caller-owned cache of symbolic factorizations keyed by sparsity pattern.
#[derive(Clone, Default)]
pub struct SymbolicCache {
    inner: Arc<Mutex<Vec<(u64, SymbolicLu<usize>)>>>,
}

impl std::fmt::Debug for SymbolicCache {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "SymbolicCache({} patterns)", self.inner.lock().map(|v| v.len()).unwrap_or(0))
    }
}

impl SymbolicCache {
    pub fn new() -> Self {
        Self::default()
    }

    fn get_or_build(&self, m: &SparseMat) -> Result<SymbolicLu<usize>> {
        let key = pattern_hash(m);
        if let Some((_, s)) = self.inner.lock().unwrap().iter().find(|(k, _)| *k == key) {
            return Ok(s.clone());
        }
        let s = symbolic(m)?;
        let mut guard = self.inner.lock().unwrap();
        if guard.len() >= 8 {
            guard.remove(0);
        }
        guard.push((key, s.clone()));
        Ok(s)
    }
}

// The CSR arrays of `m` are the CSC arrays of its transpose.
fn transposed_view(m: &SparseMat) -> SparseColMatRef<'_, usize, f64> {
    let sym = SymbolicSparseColMatRef::new_checked(m.ncols(), m.nrows(), m.row_ptr(), None, m.col_idx());
    SparseColMatRef::new(sym, m.values())
}

fn symbolic(m: &SparseMat) -> Result<SymbolicLu<usize>> {
    SymbolicLu::try_new(transposed_view(m).symbolic()).map_err(|e| Error::Singular(format!("symbolic analysis failed: {e:?}")))
}

/// An LU factorization of a square sparse matrix.
pub struct Factorization {
    matrix: SparseMat,
    // factors of the transpose; `solve_transpose` on them solves with the matrix
    lu: Lu<usize, f64>,
    norm: f64,
}

impl std::fmt::Debug for Factorization {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Factorization({}x{})", self.matrix.nrows(), self.matrix.ncols())
    }
}

impl Factorization {
    pub fn new(m: &SparseMat) -> Result<Self> {
        Self::with_symbolic(m, symbolic(m)?)
    }

    pub fn cached(m: &SparseMat, cache: &SymbolicCache) -> Result<Self> {
        Self::with_symbolic(m, cache.get_or_build(m)?)
    }

    fn with_symbolic(m: &SparseMat, sym: SymbolicLu<usize>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::Dimension {
                what: "square matrix",
                expected: m.nrows(),
                got: m.ncols(),
            });
        }
        if m.values().iter().any(|v| !v.is_finite()) {
            return Err(Error::Singular("matrix has non-finite entries".into()));
        }
        let lu = Lu::try_new_with_symbolic(sym, transposed_view(m))
            .map_err(|e| Error::Singular(format!("numeric factorization failed: {e:?}")))?;
        Ok(Self {
            matrix: m.clone(),
            lu,
            norm: m.norm_inf(),
        })
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &SparseMat {
        &self.matrix
    }

    fn raw(&self, r: &[f64], transpose: bool) -> Vec<f64> {
        let b = Mat::<f64>::from_fn(r.len(), 1, |i, _| r[i]);
        let x = if transpose { self.lu.solve(&b) } else { self.lu.solve_transpose(&b) };
        (0..r.len()).map(|i| x[(i, 0)]).collect()
    }

    fn checked(&self, r: &[f64], transpose: bool) -> Result<Vec<f64>> {
        if r.len() != self.dim() {
            return Err(Error::Dimension {
                what: "right-hand side",
                expected: self.dim(),
                got: r.len(),
            });
        }
        let apply = |x: &[f64]| {
            if transpose {
                self.matrix.matvec_transpose(x)
            } else {
                self.matrix.matvec(x)
            }
        };
        let mut x = self.raw(r, transpose);
        for pass in 0..2 {
            if x.iter().any(|v| !v.is_finite()) {
                return Err(Error::Singular("solve produced non-finite values".into()));
            }
            let ax = apply(&x);
            let res: Vec<f64> = r.iter().zip(&ax).map(|(a, b)| a - b).collect();
            let bound = RESIDUAL_TOL * (self.norm * norm_inf(&x) + norm_inf(r));
            if norm_inf(&res) <= bound {
                return Ok(x);
            }
            if pass == 1 {
                return Err(Error::Singular(format!(
                    "residual {:.3e} exceeds {:.3e}",
                    norm_inf(&res),
                    bound
                )));
            }
            // one step of iterative refinement
            let dx = self.raw(&res, transpose);
            for (xi, di) in x.iter_mut().zip(&dx) {
                *xi += di;
            }
        }
        unreachable!()
    }

    /// Solves `A x = r`.
    pub fn solve(&self, r: &[f64]) -> Result<Vec<f64>> {
        self.checked(r, false)
    }

    /// Solves `Aᵀ x = r`.
    pub fn solve_transpose(&self, r: &[f64]) -> Result<Vec<f64>> {
        self.checked(r, true)
    }
}

/// Solves `m v = r` with a fresh factorization.
pub fn solve(m: &SparseMat, r: &[f64]) -> Result<Vec<f64>> {
    Factorization::new(m)?.solve(r)
}

/// Rank-one coupling `ν ηᵀ` of a globally coupled problem.
#[derive(Clone, Debug, PartialEq)]
pub struct RankOneCoupling {
    pub nu: Vec<f64>,
    pub eta: Vec<f64>,
}

/// Solves `(K - λ ν ηᵀ) v = r` through two solves with `K`.
pub fn solve_rank_one(k: &Factorization, coupling: &RankOneCoupling, lam: f64, r: &[f64]) -> Result<Vec<f64>> {
    let x = k.solve(r)?;
    if lam == 0.0 || coupling.nu.iter().all(|&v| v == 0.0) || coupling.eta.iter().all(|&v| v == 0.0) {
        return Ok(x);
    }
    let y = k.solve(&coupling.nu)?;
    let denom = 1.0 - lam * dot(&coupling.eta, &y);
    if denom.abs() < 1e-12 {
        return Err(Error::Singular(format!("rank-one denominator {denom:.3e}")));
    }
    let alpha = lam / denom;
    let s = alpha * dot(&coupling.eta, &x);
    Ok(x.iter().zip(&y).map(|(a, b)| a + s * b).collect())
}

/// A Jacobian `K - coef·ν ηᵀ`, kept in factored form for the dense part.
#[derive(Clone, Debug)]
pub struct JacobianOp {
    pub k: SparseMat,
    pub coupling: Option<(RankOneCoupling, f64)>,
}

impl JacobianOp {
    pub fn sparse(k: SparseMat) -> Self {
        Self { k, coupling: None }
    }

    pub fn dim(&self) -> usize {
        self.k.nrows()
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = self.k.matvec(x);
        if let Some((c, coef)) = &self.coupling {
            let s = coef * dot(&c.eta, x);
            for (yi, ni) in y.iter_mut().zip(&c.nu) {
                *yi -= s * ni;
            }
        }
        y
    }

    pub fn matvec_transpose(&self, x: &[f64]) -> Vec<f64> {
        let mut y = self.k.matvec_transpose(x);
        if let Some((c, coef)) = &self.coupling {
            let s = coef * dot(&c.nu, x);
            for (yi, ei) in y.iter_mut().zip(&c.eta) {
                *yi -= s * ei;
            }
        }
        y
    }

    pub fn factor(&self, cache: Option<&SymbolicCache>) -> Result<JacobianLu> {
        let lu = match cache {
            Some(c) => Factorization::cached(&self.k, c)?,
            None => Factorization::new(&self.k)?,
        };
        let coupled = match &self.coupling {
            Some((c, coef)) if *coef != 0.0 => {
                let knu = lu.solve(&c.nu)?;
                let kteta = lu.solve_transpose(&c.eta)?;
                let denom = 1.0 - coef * dot(&c.eta, &knu);
                if denom.abs() < 1e-12 {
                    return Err(Error::Singular(format!("rank-one denominator {denom:.3e}")));
                }
                Some(Coupled {
                    c: c.clone(),
                    coef: *coef,
                    knu,
                    kteta,
                    denom,
                })
            }
            _ => None,
        };
        Ok(JacobianLu { lu, coupled })
    }
}

struct Coupled {
    c: RankOneCoupling,
    coef: f64,
    knu: Vec<f64>,
    kteta: Vec<f64>,
    denom: f64,
}

/// Factored [`JacobianOp`].
pub struct JacobianLu {
    lu: Factorization,
    coupled: Option<Coupled>,
}

impl JacobianLu {
    pub fn dim(&self) -> usize {
        self.lu.dim()
    }

    pub fn solve(&self, r: &[f64]) -> Result<Vec<f64>> {
        let x = self.lu.solve(r)?;
        Ok(match &self.coupled {
            None => x,
            Some(c) => {
                let s = c.coef * dot(&c.c.eta, &x) / c.denom;
                x.iter().zip(&c.knu).map(|(a, b)| a + s * b).collect()
            }
        })
    }

    pub fn solve_transpose(&self, r: &[f64]) -> Result<Vec<f64>> {
        let x = self.lu.solve_transpose(r)?;
        Ok(match &self.coupled {
            None => x,
            Some(c) => {
                let s = c.coef * dot(&c.c.nu, &x) / c.denom;
                x.iter().zip(&c.kteta).map(|(a, b)| a + s * b).collect()
            }
        })
    }
}

/// `[[G_u, G_λ], [row_u, row_λ]] (x, μ) = (r, s)`
#[derive(Clone, Debug)]
pub struct BorderedSystem<'a> {
    pub gu: &'a JacobianOp,
    pub glam: &'a [f64],
    pub row_u: &'a [f64],
    pub row_lam: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BorderedMethod {
    /// Factor the full `(n+1) x (n+1)` matrix.
    #[default]
    Monolithic,
    /// Two solves with `G_u` and a scalar Schur complement.
    BlockElimination,
}

impl<'a> BorderedSystem<'a> {
    pub fn dim(&self) -> usize {
        self.gu.dim() + 1
    }

    pub fn matvec(&self, z: &[f64]) -> Vec<f64> {
        let n = self.gu.dim();
        let (x, mu) = (&z[..n], z[n]);
        let mut y = self.gu.matvec(x);
        for (yi, gi) in y.iter_mut().zip(self.glam) {
            *yi += mu * gi;
        }
        y.push(dot(self.row_u, x) + self.row_lam * mu);
        y
    }

    /// Factors the system once for repeated right-hand sides.
    pub fn factor(&self, method: BorderedMethod, cache: Option<&SymbolicCache>) -> Result<BorderedLu> {
        let method = if self.gu.coupling.is_some() {
            BorderedMethod::BlockElimination
        } else {
            method
        };
        match method {
            BorderedMethod::Monolithic => {
                let a = self.gu.k.bordered(self.glam, self.row_u, self.row_lam);
                let lu = match cache {
                    Some(c) => Factorization::cached(&a, c)?,
                    None => Factorization::new(&a)?,
                };
                Ok(BorderedLu::Monolithic(lu))
            }
            BorderedMethod::BlockElimination => {
                let lu = self.gu.factor(cache)?;
                let z1 = lu.solve(self.glam)?;
                let schur = self.row_lam - dot(self.row_u, &z1);
                if schur.abs() < 1e-14 * (1.0 + self.row_lam.abs()) {
                    return Err(Error::Singular("bordered Schur complement vanishes".into()));
                }
                Ok(BorderedLu::Block {
                    lu,
                    z1,
                    row_u: self.row_u.to_vec(),
                    schur,
                })
            }
        }
    }
}

/// A factored bordered system.
pub enum BorderedLu {
    Monolithic(Factorization),
    Block {
        lu: JacobianLu,
        z1: Vec<f64>,
        row_u: Vec<f64>,
        schur: f64,
    },
}

impl BorderedLu {
    pub fn solve(&self, r: &[f64], s: f64) -> Result<Vec<f64>> {
        match self {
            Self::Monolithic(lu) => {
                let mut rhs = r.to_vec();
                rhs.push(s);
                lu.solve(&rhs)
            }
            Self::Block { lu, z1, row_u, schur } => {
                let z2 = lu.solve(r)?;
                let mu = (s - dot(row_u, &z2)) / schur;
                let mut x: Vec<f64> = z2.iter().zip(z1).map(|(a, b)| a - mu * b).collect();
                x.push(mu);
                Ok(x)
            }
        }
    }
}

/// One-shot bordered solve.
pub fn solve_bordered(sys: &BorderedSystem<'_>, r: &[f64], s: f64, method: BorderedMethod) -> Result<Vec<f64>> {
    sys.factor(method, None)?.solve(r, s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_sparse(rng: &mut ChaCha8Rng, n: usize, density: f64, diag: f64) -> SparseMat {
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, diag + rng.gen::<f64>()));
            for j in 0..n {
                if i != j && rng.gen::<f64>() < density {
                    t.push((i, j, rng.gen_range(-1.0..1.0)));
                }
            }
        }
        SparseMat::from_triplets(n, n, &t)
    }

    // Gaussian elimination with partial pivoting on a dense copy.
    fn dense_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
        let n = b.len();
        for k in 0..n {
            let p = (k..n).max_by(|&i, &j| a[i][k].abs().total_cmp(&a[j][k].abs())).unwrap();
            a.swap(k, p);
            b.swap(k, p);
            for i in k + 1..n {
                let f = a[i][k] / a[k][k];
                for j in k..n {
                    a[i][j] -= f * a[k][j];
                }
                b[i] -= f * b[k];
            }
        }
        let mut x = vec![0.0; n];
        for i in (0..n).rev() {
            let s: f64 = (i + 1..n).map(|j| a[i][j] * x[j]).sum();
            x[i] = (b[i] - s) / a[i][i];
        }
        x
    }

    #[test]
    fn identity_and_two_by_two() {
        let r = vec![1.0, -2.0, 3.0];
        assert_eq!(solve(&SparseMat::identity(3), &r).unwrap(), r);
        let m = SparseMat::from_dense(&[vec![2.0, 1.0], vec![1.0, 2.0]]);
        let v = solve(&m, &[3.0, 3.0]).unwrap();
        assert_relative_eq!(v[0], 1.0, epsilon = 1e-14);
        assert_relative_eq!(v[1], 1.0, epsilon = 1e-14);
    }

    #[test]
    fn singular_matrix_is_an_error() {
        let m = SparseMat::from_dense(&[vec![1.0, 1.0], vec![1.0, 1.0]]);
        assert!(matches!(solve(&m, &[1.0, 2.0]), Err(Error::Singular(_))));
    }

    #[test]
    fn random_spd_against_dense_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let b = random_sparse(&mut rng, 50, 0.08, 0.0);
        // B Bᵀ + n I is SPD
        let bt = b.transpose();
        let dense_b = b.to_dense();
        let dense_bt = bt.to_dense();
        let mut a = vec![vec![0.0; 50]; 50];
        for i in 0..50 {
            for j in 0..50 {
                a[i][j] = (0..50).map(|k| dense_b[i][k] * dense_bt[k][j]).sum::<f64>();
            }
            a[i][i] += 50.0;
        }
        let sp = SparseMat::from_dense(&a);
        let r: Vec<f64> = (0..50).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let x = solve(&sp, &r).unwrap();
        let y = dense_solve(a, r);
        for (p, q) in x.iter().zip(&y) {
            assert!((p - q).abs() <= 1e-9);
        }
    }

    #[test]
    fn transpose_solve() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let a = random_sparse(&mut rng, 30, 0.1, 3.0);
        let lu = Factorization::new(&a).unwrap();
        let r: Vec<f64> = (0..30).map(|i| i as f64).collect();
        let x = lu.solve_transpose(&r).unwrap();
        let back = a.matvec_transpose(&x);
        for (p, q) in back.iter().zip(&r) {
            assert!((p - q).abs() < 1e-10);
        }
    }

    #[test]
    fn bordered_trivial() {
        let gu = JacobianOp::sparse(SparseMat::identity(4));
        let glam = vec![0.0; 4];
        let row = vec![0.0; 4];
        let sys = BorderedSystem {
            gu: &gu,
            glam: &glam,
            row_u: &row,
            row_lam: 1.0,
        };
        let r = vec![1.0, 2.0, 3.0, 4.0];
        for m in [BorderedMethod::Monolithic, BorderedMethod::BlockElimination] {
            let z = solve_bordered(&sys, &r, 5.0, m).unwrap();
            assert_eq!(z, vec![1.0, 2.0, 3.0, 4.0, 5.0]);
        }
    }

    #[test]
    fn bordered_methods_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..5 {
            let gu = JacobianOp::sparse(random_sparse(&mut rng, 30, 0.1, 2.0));
            let glam: Vec<f64> = (0..30).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let row: Vec<f64> = (0..30).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let sys = BorderedSystem {
                gu: &gu,
                glam: &glam,
                row_u: &row,
                row_lam: 0.7,
            };
            let r: Vec<f64> = (0..30).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let a = solve_bordered(&sys, &r, 0.3, BorderedMethod::Monolithic).unwrap();
            let b = solve_bordered(&sys, &r, 0.3, BorderedMethod::BlockElimination).unwrap();
            for (p, q) in a.iter().zip(&b) {
                assert!((p - q).abs() <= 1e-8);
            }
        }
    }

    #[test]
    fn rank_one_against_dense_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let n = 20;
        let k = random_sparse(&mut rng, n, 0.15, 4.0);
        let nu: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let eta: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let lam = 0.8;
        let r: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let lu = Factorization::new(&k).unwrap();
        let c = RankOneCoupling { nu: nu.clone(), eta: eta.clone() };
        let v = solve_rank_one(&lu, &c, lam, &r).unwrap();
        let mut dense = k.to_dense();
        for i in 0..n {
            for j in 0..n {
                dense[i][j] -= lam * nu[i] * eta[j];
            }
        }
        let w = dense_solve(dense, r.clone());
        for (p, q) in v.iter().zip(&w) {
            assert!((p - q).abs() <= 1e-9);
        }
        assert_eq!(solve_rank_one(&lu, &c, 0.0, &r).unwrap(), lu.solve(&r).unwrap());
        let zero = RankOneCoupling { nu: vec![0.0; n], eta };
        assert_eq!(solve_rank_one(&lu, &zero, lam, &r).unwrap(), lu.solve(&r).unwrap());
    }

    #[test]
    fn coupled_operator_transpose_solve() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 15;
        let k = random_sparse(&mut rng, n, 0.2, 4.0);
        let c = RankOneCoupling {
            nu: (0..n).map(|_| rng.gen_range(0.0..1.0)).collect(),
            eta: (0..n).map(|_| rng.gen_range(0.0..1.0)).collect(),
        };
        let op = JacobianOp { k, coupling: Some((c, 0.3)) };
        let lu = op.factor(None).unwrap();
        let r: Vec<f64> = (0..n).map(|i| (i as f64).cos()).collect();
        let x = lu.solve(&r).unwrap();
        let y = lu.solve_transpose(&r).unwrap();
        for ((a, b), ri) in op.matvec(&x).iter().zip(op.matvec_transpose(&y)).zip(&r) {
            assert!((a - ri).abs() < 1e-10);
            assert!((b - ri).abs() < 1e-10);
        }
    }
}
