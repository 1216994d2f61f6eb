//! Generalized Neumann boundary conditions `n·(c⊗∇u) + q u = g`.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Data available to a boundary formula at an edge midpoint.
#[derive(Clone, Debug)]
pub struct BcPoint<'a> {
    pub x: f64,
    pub y: f64,
    pub u: &'a [f64],
    pub grad: &'a [[f64; 2]],
    pub lam: f64,
}

pub type BcFormula = Arc<dyn Fn(&BcPoint<'_>) -> f64 + Send + Sync>;

/// A boundary coefficient entry.
#[derive(Clone)]
pub enum BcValue {
    Const(f64),
    Formula(BcFormula),
}

impl BcValue {
    pub fn formula<F>(f: F) -> Self
    where
        F: Fn(&BcPoint<'_>) -> f64 + Send + Sync + 'static,
    {
        Self::Formula(Arc::new(f))
    }

    pub fn eval(&self, p: &BcPoint<'_>) -> f64 {
        match self {
            Self::Const(v) => *v,
            Self::Formula(f) => f(p),
        }
    }

    pub fn is_zero_const(&self) -> bool {
        matches!(self, Self::Const(v) if *v == 0.0)
    }

    /// True when the value does not depend on `u`, `∇u` or `λ`.
    pub fn is_const(&self) -> bool {
        matches!(self, Self::Const(_))
    }
}

impl fmt::Debug for BcValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Const(v) => write!(f, "Const({v})"),
            Self::Formula(_) => write!(f, "Formula(..)"),
        }
    }
}

/// `q` (row-major `N x N`) and `g` (length `N`) on one boundary segment.
#[derive(Clone, Debug)]
pub struct SegmentBc {
    pub q: Vec<BcValue>,
    pub g: Vec<BcValue>,
}

/// One `(q, g)` pair per segment label; entry `s` belongs to label `s+1`.
#[derive(Clone, Debug)]
pub struct BoundaryConditionSet {
    pub n: usize,
    pub segments: Vec<SegmentBc>,
}

impl BoundaryConditionSet {
    /// Zero flux on every segment.
    pub fn neumann(n: usize, segment_count: usize) -> Self {
        let seg = SegmentBc {
            q: vec![BcValue::Const(0.0); n * n],
            g: vec![BcValue::Const(0.0); n],
        };
        Self {
            n,
            segments: vec![seg; segment_count],
        }
    }

    /// Stiff-spring approximation of `u = 0` on every segment: `q = qs·I`, `g = 0`.
    pub fn stiff_dirichlet(n: usize, segment_count: usize, qs: f64) -> Self {
        let mut q = vec![BcValue::Const(0.0); n * n];
        for i in 0..n {
            q[i * n + i] = BcValue::Const(qs);
        }
        let seg = SegmentBc {
            q,
            g: vec![BcValue::Const(0.0); n],
        };
        Self {
            n,
            segments: vec![seg; segment_count],
        }
    }

    pub fn validate(&self, segment_count: usize) -> Result<()> {
        if self.segments.len() < segment_count {
            return Err(Error::InvalidInput(format!(
                "boundary conditions given for {} segments, mesh has {segment_count}",
                self.segments.len()
            )));
        }
        for (s, seg) in self.segments.iter().enumerate() {
            if seg.q.len() != self.n * self.n || seg.g.len() != self.n {
                return Err(Error::InvalidInput(format!("segment {} has wrong q/g dimensions", s + 1)));
            }
        }
        Ok(())
    }

    /// True when all entries are constant zero.
    pub fn is_homogeneous_neumann(&self) -> bool {
        self.segments
            .iter()
            .all(|s| s.q.iter().all(BcValue::is_zero_const) && s.g.iter().all(BcValue::is_zero_const))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn formula_sees_lambda() {
        let v = BcValue::formula(|p| 1e4 * p.lam * p.x);
        let p = BcPoint {
            x: 0.5,
            y: 0.0,
            u: &[0.0],
            grad: &[[0.0, 0.0]],
            lam: 2.0,
        };
        assert_eq!(v.eval(&p), 1e4);
    }

    #[test]
    fn constructors_validate() {
        assert!(BoundaryConditionSet::neumann(2, 4).validate(4).is_ok());
        assert!(BoundaryConditionSet::neumann(2, 3).validate(4).is_err());
        assert!(BoundaryConditionSet::neumann(1, 4).is_homogeneous_neumann());
        assert!(!BoundaryConditionSet::stiff_dirichlet(1, 4, 1e3).is_homogeneous_neumann());
    }
}
