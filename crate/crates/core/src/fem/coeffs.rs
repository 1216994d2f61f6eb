//! PDE coefficient arrays in the column layouts used by the assembler.
//!
//! For an `N`-component system (0-based indices `i, j < N`, `k, l < 2`):
//!
//! * `c_{ijkl}` lives in row `4N·j + 4i + 2l + k`,
//! * `a_{ij}` in row `N·j + i`,
//! * `b_{ijk}` in row `2N·j + 2i + k`,
//! * `f_i` in row `i`.
//!
//! Every array has either one column (constant) or one column per triangle.

use std::fmt::Write as _;

use crate::error::{Error, Result};

pub fn c_row(n: usize, i: usize, j: usize, k: usize, l: usize) -> usize {
    4 * n * j + 4 * i + 2 * l + k
}

pub fn a_row(n: usize, i: usize, j: usize) -> usize {
    n * j + i
}

pub fn b_row(n: usize, i: usize, j: usize, k: usize) -> usize {
    2 * n * j + 2 * i + k
}

/// Inverse of [`c_row`].
pub fn c_index(n: usize, row: usize) -> (usize, usize, usize, usize) {
    let j = row / (4 * n);
    let r = row % (4 * n);
    (r / 4, j, r % 2, (r % 4) / 2)
}

/// Inverse of [`b_row`].
pub fn b_index(n: usize, row: usize) -> (usize, usize, usize) {
    let j = row / (2 * n);
    let r = row % (2 * n);
    (r / 2, j, r % 2)
}

/// A `rows x cols` coefficient array stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct CoeffArray {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl CoeffArray {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn constant(column: Vec<f64>) -> Self {
        Self {
            rows: column.len(),
            cols: 1,
            data: column,
        }
    }

    /// Builds from one vector per row, each of length `cols`.
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let cols = rows.first().map_or(1, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::InvalidInput("ragged coefficient rows".into()));
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            data: rows.into_iter().flatten().collect(),
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// Value in `row` for triangle `t`; constant arrays ignore `t`.
    #[inline]
    pub fn at(&self, row: usize, t: usize) -> f64 {
        if self.cols == 1 {
            self.data[row]
        } else {
            self.data[row * self.cols + t]
        }
    }

    pub fn set(&mut self, row: usize, col: usize, v: f64) {
        self.data[row * self.cols + col] = v;
    }

    pub fn row_mut(&mut self, row: usize) -> &mut [f64] {
        &mut self.data[row * self.cols..(row + 1) * self.cols]
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&v| v == 0.0)
    }

    pub(crate) fn check_layout(&self, what: &'static str, rows: usize, nt: usize) -> Result<()> {
        if self.rows != rows {
            return Err(Error::Dimension {
                what,
                expected: rows,
                got: self.rows,
            });
        }
        if self.cols != 1 && self.cols != nt {
            return Err(Error::Dimension {
                what,
                expected: nt,
                got: self.cols,
            });
        }
        Ok(())
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| v * s).collect(),
        }
    }

    fn write(&self, name: &str, out: &mut String) {
        let _ = writeln!(out, "{name} {} {}", self.rows, self.cols);
        for r in 0..self.rows {
            let row: Vec<String> = self.data[r * self.cols..(r + 1) * self.cols]
                .iter()
                .map(|v| format!("{v:?}"))
                .collect();
            let _ = writeln!(out, "{}", row.join(" "));
        }
    }
}

/// Diffusion tensor with all entries zero except `c_{ii11} = c_{ii22} = d`.
pub fn c_scalar(n: usize, d: f64) -> CoeffArray {
    c_diagonal(&vec![d; n])
}

/// Diagonal diffusion `c_{ii11} = c_{ii22} = d_i`.
pub fn c_diagonal(d: &[f64]) -> CoeffArray {
    let n = d.len();
    let mut c = vec![0.0; 4 * n * n];
    for (i, &di) in d.iter().enumerate() {
        c[c_row(n, i, i, 0, 0)] = di;
        c[c_row(n, i, i, 1, 1)] = di;
    }
    CoeffArray::constant(c)
}

/// Isotropic system encoding: `m[i][j]` (one value per triangle, or a single
/// value) gives `c_{ij11} = c_{ij22} = m_ij` and zero mixed entries.
pub fn c_isotropic(m: &[Vec<Vec<f64>>]) -> Result<CoeffArray> {
    let n = m.len();
    let cols = m
        .iter()
        .flatten()
        .map(Vec::len)
        .max()
        .ok_or_else(|| Error::InvalidInput("empty isotropic tensor".into()))?;
    let mut c = CoeffArray::zeros(4 * n * n, cols);
    for (i, row) in m.iter().enumerate() {
        if row.len() != n {
            return Err(Error::InvalidInput("isotropic tensor must be N x N".into()));
        }
        for (j, vals) in row.iter().enumerate() {
            for t in 0..cols {
                let v = match vals.len() {
                    1 => vals[0],
                    len if len == cols => vals[t],
                    _ => return Err(Error::InvalidInput("mixed column counts in isotropic tensor".into())),
                };
                c.set(c_row(n, i, j, 0, 0), t, v);
                c.set(c_row(n, i, j, 1, 1), t, v);
            }
        }
    }
    Ok(c)
}

/// The `(c, a, f, b)` coefficient fields of an `N`-component system.
#[derive(Clone, Debug, PartialEq)]
pub struct CoefficientSet {
    pub n: usize,
    pub c: CoeffArray,
    pub a: CoeffArray,
    pub f: CoeffArray,
    pub b: CoeffArray,
}

impl CoefficientSet {
    /// Zero `a` and `b`, given `c` and `f`.
    pub fn new(n: usize, c: CoeffArray, f: CoeffArray) -> Self {
        Self {
            n,
            c,
            a: CoeffArray::zeros(n * n, 1),
            f,
            b: CoeffArray::zeros(2 * n * n, 1),
        }
    }

    pub fn validate(&self, nt: usize) -> Result<()> {
        let n = self.n;
        self.c.check_layout("rows of c", 4 * n * n, nt)?;
        self.a.check_layout("rows of a", n * n, nt)?;
        self.f.check_layout("rows of f", n, nt)?;
        self.b.check_layout("rows of b", 2 * n * n, nt)
    }

    /// Text dump of the four arrays in their storage layouts.
    pub fn dump(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "N {}", self.n);
        self.c.write("c", &mut s);
        self.a.write("a", &mut s);
        self.f.write("f", &mut s);
        self.b.write("b", &mut s);
        s
    }
}

/// Coefficients from which the Jacobian is assembled: `G_u` from `c`, `-fu`
/// (as a reaction term) and `b`; `G_λ` from `-flam` (as a load).
#[derive(Clone, Debug, PartialEq)]
pub struct JacobianCoefficients {
    pub n: usize,
    pub c: CoeffArray,
    pub fu: CoeffArray,
    pub flam: CoeffArray,
    pub b: CoeffArray,
}

impl JacobianCoefficients {
    pub fn validate(&self, nt: usize) -> Result<()> {
        let n = self.n;
        self.c.check_layout("rows of c", 4 * n * n, nt)?;
        self.fu.check_layout("rows of fu", n * n, nt)?;
        self.flam.check_layout("rows of flam", n, nt)?;
        self.b.check_layout("rows of b", 2 * n * n, nt)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn laplacian_encoding() {
        assert_eq!(c_scalar(1, 1.0).data(), &[1.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn advection_example_rows() {
        // alpha * d/dx in both components of a 2-system
        let n = 2;
        let mut b = vec![0.0; 8];
        b[b_row(n, 0, 0, 0)] = 3.0;
        b[b_row(n, 1, 1, 0)] = 3.0;
        assert_eq!(b, vec![3.0, 0.0, 0.0, 0.0, 0.0, 0.0, 3.0, 0.0]);
    }

    #[test]
    fn isotropic_expansion() {
        let c = c_isotropic(&[vec![vec![1.0], vec![2.0]], vec![vec![0.0], vec![3.0]]]).unwrap();
        assert_eq!(c.rows(), 16);
        assert_eq!(c.at(c_row(2, 0, 1, 0, 0), 0), 2.0);
        assert_eq!(c.at(c_row(2, 0, 1, 1, 1), 0), 2.0);
        assert_eq!(c.at(c_row(2, 0, 1, 0, 1), 0), 0.0);
        assert_eq!(c.at(c_row(2, 1, 1, 1, 1), 0), 3.0);
    }

    #[test]
    fn validation_catches_bad_shapes() {
        let mut cs = CoefficientSet::new(1, c_scalar(1, 1.0), CoeffArray::constant(vec![0.0]));
        assert!(cs.validate(5).is_ok());
        cs.f = CoeffArray::zeros(1, 3);
        assert!(cs.validate(5).is_err());
        cs.f = CoeffArray::zeros(2, 1);
        assert!(cs.validate(5).is_err());
    }

    proptest! {
        #[test]
        fn c_layout_round_trip(n in 1usize..=4, i in 0usize..4, j in 0usize..4, k in 0usize..2, l in 0usize..2) {
            prop_assume!(i < n && j < n);
            let r = c_row(n, i, j, k, l);
            prop_assert!(r < 4 * n * n);
            prop_assert_eq!(c_index(n, r), (i, j, k, l));
        }

        #[test]
        fn b_layout_round_trip(n in 1usize..=4, i in 0usize..4, j in 0usize..4, k in 0usize..2) {
            prop_assume!(i < n && j < n);
            let r = b_row(n, i, j, k);
            prop_assert!(r < 2 * n * n);
            prop_assert_eq!(b_index(n, r), (i, j, k));
        }
    }
}
