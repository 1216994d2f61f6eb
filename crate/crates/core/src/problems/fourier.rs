//! Cosine spectra of nodal fields on structured rectangle grids.
//!
//! Each grid line is extended evenly and transformed, which is the natural
//! basis for Neumann problems: bin `j` has wavenumber `jπ/L` for side length `L`.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::fem::Mesh;

/// Node layout of a tensor grid: node `j·nx + i` sits at `(xs[i], ys[j])`.
#[derive(Clone, Debug, PartialEq)]
pub struct GridLayout {
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
}

impl GridLayout {
    /// Recognizes the node ordering of a structured mesh; anything else is unsupported.
    pub fn detect(mesh: &Mesh) -> Result<Self> {
        let pts = mesh.points();
        let unsupported = || Error::Unsupported("Fourier diagnostics need a structured grid".into());
        let y0 = pts.first().ok_or_else(unsupported)?[1];
        let nx = pts.iter().take_while(|p| p[1] == y0).count();
        if nx < 2 || !pts.len().is_multiple_of(nx) {
            return Err(unsupported());
        }
        let ny = pts.len() / nx;
        let xs: Vec<f64> = pts[..nx].iter().map(|p| p[0]).collect();
        let ys: Vec<f64> = (0..ny).map(|j| pts[j * nx][1]).collect();
        let tol = 1e-9 * (xs[nx - 1] - xs[0]).abs().max(1.0);
        let regular = |v: &[f64]| {
            let h = (v[v.len() - 1] - v[0]) / (v.len() - 1) as f64;
            h > 0.0 && v.iter().enumerate().all(|(i, &x)| (x - v[0] - i as f64 * h).abs() <= tol)
        };
        if ny < 2 || !regular(&xs) || !regular(&ys) {
            return Err(unsupported());
        }
        let ok = pts
            .iter()
            .enumerate()
            .all(|(k, p)| (p[0] - xs[k % nx]).abs() <= tol && (p[1] - ys[k / nx]).abs() <= tol);
        if !ok {
            return Err(unsupported());
        }
        Ok(Self { xs, ys })
    }

    pub fn nx(&self) -> usize {
        self.xs.len()
    }

    pub fn ny(&self) -> usize {
        self.ys.len()
    }
}

/// Power per cosine index along one axis, summed over all grid lines.
#[derive(Clone, Debug)]
pub struct AxisSpectrum {
    pub wavenumbers: Vec<f64>,
    pub power: Vec<f64>,
}

impl AxisSpectrum {
    /// Wavenumber of the strongest non-constant mode (`0` if the field is flat).
    pub fn dominant(&self) -> f64 {
        let mut best = (0.0, 0.0);
        for (&k, &p) in self.wavenumbers.iter().zip(&self.power).skip(1) {
            if p > best.1 {
                best = (k, p);
            }
        }
        best.0
    }
}

#[derive(Clone, Debug)]
pub struct FourierSummary {
    pub x: AxisSpectrum,
    pub y: AxisSpectrum,
}

fn axis_spectrum(lines: impl Iterator<Item = Vec<f64>>, coords: &[f64]) -> AxisSpectrum {
    let n = coords.len();
    let len = coords[n - 1] - coords[0];
    let m = 2 * (n - 1);
    let fft = FftPlanner::<f64>::new().plan_fft_forward(m);
    let mut power = vec![0.0; n];
    for line in lines {
        let mut buf: Vec<Complex<f64>> = (0..m)
            .map(|k| Complex::new(if k < n { line[k] } else { line[m - k] }, 0.0))
            .collect();
        fft.process(&mut buf);
        for (j, p) in power.iter_mut().enumerate() {
            *p += buf[j].norm_sqr();
        }
    }
    let wavenumbers = (0..n).map(|j| j as f64 * std::f64::consts::PI / len).collect();
    AxisSpectrum { wavenumbers, power }
}

/// Cosine spectra of the nodal field `v` (one value per mesh node) along x and y.
pub fn fourier_summary(mesh: &Mesh, v: &[f64]) -> Result<FourierSummary> {
    let grid = GridLayout::detect(mesh)?;
    let (nx, ny) = (grid.nx(), grid.ny());
    if v.len() != nx * ny {
        return Err(Error::Dimension {
            what: "nodal field length",
            expected: nx * ny,
            got: v.len(),
        });
    }
    let x = axis_spectrum((0..ny).map(|j| v[j * nx..(j + 1) * nx].to_vec()), &grid.xs);
    let y = axis_spectrum((0..nx).map(|i| (0..ny).map(|j| v[j * nx + i]).collect()), &grid.ys);
    Ok(FourierSummary { x, y })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::{make_rect_mesh, refine};

    #[test]
    fn recovers_cosine_wavenumbers() {
        let m = make_rect_mesh(3.0, 2.0, 61, 41).unwrap();
        let (kx, ky) = (3.0 * std::f64::consts::PI / 6.0, 2.0 * std::f64::consts::PI / 4.0);
        let v: Vec<f64> = m
            .points()
            .iter()
            .map(|p| (kx * (p[0] + 3.0)).cos() + 0.3 * (ky * (p[1] + 2.0)).cos())
            .collect();
        let s = fourier_summary(&m, &v).unwrap();
        assert!((s.x.dominant() - kx).abs() < 1e-12);
        assert!((s.y.dominant() - ky).abs() < 1e-12);
    }

    #[test]
    fn refined_mesh_is_unsupported() {
        let m = make_rect_mesh(1.0, 1.0, 5, 5).unwrap();
        let (r, _) = refine(&m, &[0]).unwrap();
        let v = vec![0.0; r.n_points()];
        assert!(matches!(fourier_summary(&r, &v), Err(Error::Unsupported(_))));
    }
}
