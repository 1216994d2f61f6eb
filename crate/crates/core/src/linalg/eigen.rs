//! Eigenvalues of smallest magnitude for `A φ = μ B φ` with `B` the mass
//! matrix, by shift-invert Arnoldi with full reorthogonalization.

use faer::Mat;
use num_complex::Complex64;

use super::solve::{BorderedMethod, BorderedSystem, JacobianLu, JacobianOp};
use super::sparse::{dot, norm2, SparseMat};
use crate::error::{Error, Result};

/// Eigenvalues nearest zero and derived stability information.
#[derive(Clone, Debug, PartialEq, Default, serde::Serialize, serde::Deserialize)]
pub struct SpectralData {
    /// Sorted by increasing magnitude.
    pub eigenvalues: Vec<Complex64>,
    /// Number of listed eigenvalues with negative real part.
    pub n_negative: usize,
    /// `|μ_1| > |μ_neig| / 2`: unstable eigenvalues might leave the window.
    pub window_warning: bool,
}

impl SpectralData {
    pub fn from_eigenvalues(mut eigenvalues: Vec<Complex64>) -> Self {
        eigenvalues.sort_by(|a, b| a.norm().total_cmp(&b.norm()).then(a.re.total_cmp(&b.re)).then(a.im.total_cmp(&b.im)));
        let n_negative = eigenvalues.iter().filter(|m| m.re < 0.0).count();
        let window_warning = match (eigenvalues.first(), eigenvalues.last()) {
            (Some(a), Some(b)) if eigenvalues.len() > 1 => a.norm() > b.norm() / 2.0,
            _ => false,
        };
        Self {
            eigenvalues,
            n_negative,
            window_warning,
        }
    }
}

/// `sign(Π Re μ_i)`; conjugate pairs contribute `+1`.
pub fn det_sign(spec: &SpectralData) -> Result<i8> {
    let mut sign = 1i8;
    for m in &spec.eigenvalues {
        if m.re.abs() < 1e-14 {
            return Err(Error::DegenerateSign);
        }
        if m.re < 0.0 {
            sign = -sign;
        }
    }
    Ok(sign)
}

/// An eigenvalue with its (real) eigenvector.
#[derive(Clone, Debug)]
pub struct EigenPair {
    pub value: Complex64,
    pub vector: Vec<f64>,
}

const MAX_ATTEMPTS: usize = 4;
const RITZ_TOL: f64 = 1e-9;

// Start vector: ones plus a small deterministic perturbation, so that modes
// orthogonal to constants (odd modes on symmetric domains) are reachable.
fn start_vector(n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| 1.0 + 0.1 * ((i as f64 + 1.0) * 0.618_033_988_749_895).fract() - 0.05)
        .collect()
}

struct Ritz {
    theta: Vec<Complex64>,
    // coefficient vectors in the Krylov basis (only when requested)
    coeffs: Option<Mat<Complex64>>,
    basis: Vec<Vec<f64>>,
    converged: Vec<bool>,
}

/// Arnoldi on the operator `x -> op(x)`; returns Ritz values of largest modulus first.
fn arnoldi<F>(n: usize, m: usize, op: &F, vectors: bool) -> Result<Ritz>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    let mut v0 = start_vector(n);
    let nrm = norm2(&v0);
    v0.iter_mut().for_each(|x| *x /= nrm);
    let mut basis = vec![v0];
    let mut h = vec![vec![0.0; m]; m + 1];
    let mut k = m;
    for j in 0..m {
        let mut w = op(&basis[j])?;
        let wnorm0 = norm2(&w);
        // two passes of classical Gram-Schmidt
        for _ in 0..2 {
            for (i, vi) in basis.iter().enumerate() {
                let c = dot(vi, &w);
                h[i][j] += c;
                w.iter_mut().zip(vi).for_each(|(a, b)| *a -= c * b);
            }
        }
        let beta = norm2(&w);
        h[j + 1][j] = beta;
        if beta <= 1e-13 * wnorm0.max(f64::MIN_POSITIVE) || j + 1 == n {
            k = j + 1;
            h[j + 1][j] = 0.0;
            break;
        }
        w.iter_mut().for_each(|x| *x /= beta);
        basis.push(w);
    }
    basis.truncate(k);
    let hk = Mat::<f64>::from_fn(k, k, |i, j| h[i][j]);
    let eig = hk.eigen().map_err(|e| Error::Eigen(format!("Hessenberg eigenproblem failed: {e:?}")))?;
    let s = eig.S().column_vector();
    let u = eig.U();
    let beta = h[k][k - 1];
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| s[b].norm().total_cmp(&s[a].norm()).then(a.cmp(&b)));
    let theta: Vec<Complex64> = order.iter().map(|&i| s[i]).collect();
    let converged = order
        .iter()
        .map(|&i| {
            let ynorm: f64 = (0..k).map(|r| u[(r, i)].norm_sqr()).sum::<f64>().sqrt();
            beta * u[(k - 1, i)].norm() / ynorm <= RITZ_TOL * s[i].norm().max(1e-300)
        })
        .collect();
    let coeffs = vectors.then(|| Mat::<Complex64>::from_fn(k, order.len(), |r, c| u[(r, order[c])]));
    Ok(Ritz {
        theta,
        coeffs,
        basis,
        converged,
    })
}

/// Eigenpairs `μ` of smallest magnitude given `solve_shifted(x) = (A − σB)⁻¹ x`
/// and `mass(x) = B x`.
fn smallest<S, B>(n: usize, sigma: f64, solve_shifted: S, mass: B, neig: usize, vectors: usize) -> Result<Vec<EigenPair>>
where
    S: Fn(&[f64]) -> Result<Vec<f64>>,
    B: Fn(&[f64]) -> Vec<f64>,
{
    if n == 0 || neig == 0 {
        return Ok(Vec::new());
    }
    let neig = neig.min(n);
    let op = |x: &[f64]| solve_shifted(&mass(x));
    let mut m = n.min((2 * neig + 20).max(40));
    for attempt in 0..MAX_ATTEMPTS {
        let ritz = arnoldi(n, m, &op, vectors > 0)?;
        let take = neig.min(ritz.theta.len());
        let all_ok = ritz.converged[..take].iter().all(|&c| c);
        let first_ok = ritz.converged.first().copied().unwrap_or(false);
        let last_attempt = attempt + 1 == MAX_ATTEMPTS || m == n;
        if all_ok || last_attempt {
            if !all_ok {
                if !first_ok {
                    return Err(Error::Eigen(format!("no converged Ritz value with Krylov dimension {m}")));
                }
                log::warn!("eigensolver: some of the {take} requested eigenvalues are not converged (m={m})");
            }
            let mut out: Vec<EigenPair> = ritz.theta[..take]
                .iter()
                .map(|&t| EigenPair {
                    value: Complex64::new(sigma, 0.0) + t.inv(),
                    vector: Vec::new(),
                })
                .collect();
            if let Some(c) = &ritz.coeffs {
                for (col, pair) in out.iter_mut().enumerate().take(vectors) {
                    let mut re = vec![0.0; n];
                    let mut im = vec![0.0; n];
                    for (r, v) in ritz.basis.iter().enumerate() {
                        let y = c[(r, col)];
                        for i in 0..n {
                            re[i] += y.re * v[i];
                            im[i] += y.im * v[i];
                        }
                    }
                    // the larger of the real and imaginary parts, after
                    // rotating the phase to make it real where possible
                    let (a, b, ab) = (dot(&re, &re), dot(&im, &im), dot(&re, &im));
                    let phi = 0.5 * (2.0 * ab).atan2(a - b);
                    let (cs, sn) = (phi.cos(), phi.sin());
                    let mut x: Vec<f64> = re.iter().zip(&im).map(|(r, i)| cs * r + sn * i).collect();
                    let nx = norm2(&x);
                    x.iter_mut().for_each(|v| *v /= nx);
                    pair.vector = x;
                }
            }
            out.sort_by(|a, b| a.value.norm().total_cmp(&b.value.norm()));
            return Ok(out);
        }
        m = n.min(2 * m);
    }
    unreachable!()
}

fn mean_abs_diag(a: &SparseMat) -> f64 {
    let d = a.diagonal();
    let s: f64 = d.iter().map(|v| v.abs()).sum::<f64>() / d.len().max(1) as f64;
    if s > 0.0 {
        s
    } else {
        1.0
    }
}

fn shifts(k: &SparseMat) -> [f64; 2] {
    [0.0, 1e-6 * mean_abs_diag(k)]
}

/// Generalized eigenpairs of `G_u φ = μ M φ` nearest zero. `vectors` of them
/// (in increasing `|μ|`) carry eigenvectors; `transpose` targets `G_uᵀ`.
pub fn gu_eigenpairs(gu: &JacobianOp, m: &SparseMat, neig: usize, vectors: usize, transpose: bool) -> Result<Vec<EigenPair>> {
    let mut last = None;
    for sigma in shifts(&gu.k) {
        let shifted = JacobianOp {
            k: if sigma == 0.0 { gu.k.clone() } else { gu.k.add_scaled(-sigma, m) },
            coupling: gu.coupling.clone(),
        };
        match shifted.factor(None) {
            Ok(lu) => {
                let solve = |x: &[f64]| if transpose { lu.solve_transpose(x) } else { lu.solve(x) };
                return smallest(gu.dim(), sigma, solve, |x| m.matvec(x), neig, vectors);
            }
            Err(e) => last = Some(e),
        }
    }
    Err(last.unwrap())
}

/// As [`gu_eigenpairs`] at shift zero, reusing a factorization of `G_u`.
pub fn eigenpairs_factored(lu: &JacobianLu, m: &SparseMat, neig: usize, vectors: usize, transpose: bool) -> Result<Vec<EigenPair>> {
    let solve = |x: &[f64]| if transpose { lu.solve_transpose(x) } else { lu.solve(x) };
    smallest(lu.dim(), 0.0, solve, |x| m.matvec(x), neig, vectors)
}

/// The `neig` generalized eigenvalues of `G_u φ = μ M φ` of smallest magnitude.
pub fn eigs_near_zero(gu: &SparseMat, m: &SparseMat, neig: usize) -> Result<SpectralData> {
    spectrum(&JacobianOp::sparse(gu.clone()), m, neig)
}

/// As [`eigs_near_zero`] for a possibly rank-one-coupled operator.
pub fn spectrum(gu: &JacobianOp, m: &SparseMat, neig: usize) -> Result<SpectralData> {
    let pairs = gu_eigenpairs(gu, m, neig, 0, false)?;
    Ok(SpectralData::from_eigenvalues(pairs.into_iter().map(|p| p.value).collect()))
}

/// Eigenvalues nearest zero of the bordered matrix `A` with mass `diag(M, 1)`.
pub fn bordered_spectrum(sys: &BorderedSystem<'_>, m: &SparseMat, neig: usize) -> Result<SpectralData> {
    let n = sys.dim();
    let mass = |x: &[f64]| {
        let mut y = m.matvec(&x[..n - 1]);
        y.push(x[n - 1]);
        y
    };
    let mut last = None;
    for sigma in shifts(&sys.gu.k) {
        let k = if sigma == 0.0 { sys.gu.k.clone() } else { sys.gu.k.add_scaled(-sigma, m) };
        let gu = JacobianOp {
            k,
            coupling: sys.gu.coupling.clone(),
        };
        let shifted = BorderedSystem {
            gu: &gu,
            glam: sys.glam,
            row_u: sys.row_u,
            row_lam: sys.row_lam - sigma,
        };
        match shifted.factor(BorderedMethod::Monolithic, None) {
            Ok(lu) => {
                let solve = |x: &[f64]| lu.solve(&x[..n - 1], x[n - 1]);
                let pairs = smallest(n, sigma, solve, mass, neig, 0)?;
                return Ok(SpectralData::from_eigenvalues(pairs.into_iter().map(|p| p.value).collect()));
            }
            Err(e) => last = Some(e),
        }
    }
    Err(last.unwrap())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::assembly::{assemble_mass, assemble_stiffness, FemSpace};
    use crate::fem::coeffs::c_scalar;
    use crate::fem::mesh::make_rect_mesh;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;
    use std::sync::Arc;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn det_sign_examples() {
        let s = |v: Vec<Complex64>| det_sign(&SpectralData::from_eigenvalues(v)).unwrap();
        assert_eq!(s(vec![c(-1.0, 0.0), c(2.0, 0.0), c(3.0, 0.0)]), -1);
        assert_eq!(s(vec![c(-1.0, 0.0), c(-2.0, 0.0), c(3.0, 0.0)]), 1);
        assert_eq!(s(vec![c(-1.0, 0.0), c(1.0, 2.0), c(1.0, -2.0)]), -1);
        let z = SpectralData::from_eigenvalues(vec![c(0.0, 1.0), c(0.0, -1.0)]);
        assert!(matches!(det_sign(&z), Err(Error::DegenerateSign)));
    }

    #[test]
    fn window_warning_flag() {
        let d = SpectralData::from_eigenvalues(vec![c(3.0, 0.0), c(4.0, 0.0)]);
        assert!(d.window_warning);
        let d = SpectralData::from_eigenvalues(vec![c(1.0, 0.0), c(4.0, 0.0)]);
        assert!(!d.window_warning);
    }

    fn laplace(n: usize) -> (SparseMat, SparseMat) {
        let mesh = Arc::new(make_rect_mesh(0.5, 0.5, n, n).unwrap());
        let space = FemSpace::new(mesh, 1);
        let k = assemble_stiffness(&space, &c_scalar(1, 1.0)).unwrap();
        (k, assemble_mass(&space))
    }

    #[test]
    fn mass_against_itself_gives_ones() {
        let (_, m) = laplace(6);
        let d = eigs_near_zero(&m, &m, 5).unwrap();
        for mu in &d.eigenvalues {
            assert!((mu.re - 1.0).abs() < 1e-8 && mu.im.abs() < 1e-8);
        }
    }

    #[test]
    fn shifted_neumann_laplacian() {
        let (k, m) = laplace(41);
        let gu = k.add_scaled(1.0, &m);
        let d = eigs_near_zero(&gu, &m, 6).unwrap();
        let mu: Vec<f64> = d.eigenvalues.iter().map(|z| z.re).collect();
        assert!((mu[0] - 1.0).abs() < 1e-8);
        for &v in &mu[1..3] {
            assert!((v - (1.0 + PI * PI)).abs() / (1.0 + PI * PI) < 0.01, "{mu:?}");
        }
        assert_eq!(d.n_negative, 0);
    }

    #[test]
    fn deterministic_eigenvalues() {
        let (k, m) = laplace(15);
        let gu = k.add_scaled(-3.0, &m);
        let a = eigs_near_zero(&gu, &m, 8).unwrap();
        let b = eigs_near_zero(&gu, &m, 8).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.n_negative, 1);
    }

    fn dense_det_sign(a: &[Vec<f64>]) -> i8 {
        let mut a = a.to_vec();
        let n = a.len();
        let mut sign = 1i8;
        for k in 0..n {
            let p = (k..n).max_by(|&i, &j| a[i][k].abs().total_cmp(&a[j][k].abs())).unwrap();
            if p != k {
                a.swap(k, p);
                sign = -sign;
            }
            if a[k][k] < 0.0 {
                sign = -sign;
            }
            for i in k + 1..n {
                let f = a[i][k] / a[k][k];
                for j in k..n {
                    a[i][j] -= f * a[k][j];
                }
            }
        }
        sign
    }

    #[test]
    fn det_sign_matches_dense_determinant() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let n = 20;
        let id = SparseMat::identity(n);
        for _ in 0..20 {
            let a: Vec<Vec<f64>> = (0..n).map(|_| (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
            let d = eigs_near_zero(&SparseMat::from_dense(&a), &id, n).unwrap();
            assert_eq!(d.eigenvalues.len(), n);
            assert_eq!(det_sign(&d).unwrap(), dense_det_sign(&a));
        }
    }

    #[test]
    fn mass_weighting_keeps_negative_count() {
        let (k, m) = laplace(9);
        let gu = k.add_scaled(-12.0, &m);
        let weighted = eigs_near_zero(&gu, &m, 10).unwrap();
        let plain = eigs_near_zero(&gu, &SparseMat::identity(gu.nrows()), gu.nrows()).unwrap();
        assert_eq!(weighted.n_negative, plain.n_negative);
        assert_eq!(weighted.n_negative, 3);
    }

    #[test]
    fn eigenvectors_and_transpose() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let n = 25;
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 1.0 + i as f64));
            if i + 1 < n {
                t.push((i, i + 1, rng.gen_range(-0.5..0.5)));
            }
        }
        let a = SparseMat::from_triplets(n, n, &t);
        let op = JacobianOp::sparse(a.clone());
        let id = SparseMat::identity(n);
        let right = gu_eigenpairs(&op, &id, 3, 1, false).unwrap();
        let left = gu_eigenpairs(&op, &id, 3, 1, true).unwrap();
        assert!((right[0].value.re - 1.0).abs() < 1e-10);
        let ax = a.matvec(&right[0].vector);
        for (p, q) in ax.iter().zip(&right[0].vector) {
            assert!((p - q).abs() < 1e-9);
        }
        let aty = a.matvec_transpose(&left[0].vector);
        for (p, q) in aty.iter().zip(&left[0].vector) {
            assert!((p - q).abs() < 1e-9);
        }
    }
}
