//! Sparse matrices, direct and bordered solves, and eigenvalues near zero.

pub mod eigen;
pub mod solve;
pub mod sparse;

pub use eigen::{
    bordered_spectrum, det_sign, eigenpairs_factored, eigs_near_zero, gu_eigenpairs, spectrum, EigenPair, SpectralData,
};
pub use solve::{
    solve, solve_bordered, solve_rank_one, BorderedLu, BorderedMethod, BorderedSystem, Factorization, JacobianLu,
    JacobianOp, RankOneCoupling, SymbolicCache,
};
pub use sparse::SparseMat;
