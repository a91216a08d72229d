//! Conic programs over products of zero, nonnegative, second-order and PSD
//! cones, a built-in interior-point solver, and helpers for Hermitian
//! matrix variables.

mod cones;
mod ir;
mod solver;

pub use cones::{psd_side, smat, svec};
pub use ir::{Cone, ConicProgram, ConicSolver, ConstraintBlock, Solution, SolverConfig, Status};
pub use solver::{block_residuals, solve, InteriorPoint};

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::linalg::{CMat, HermitianMatrix};

/// Real parametrization of an `L x L` Hermitian matrix: the `L` diagonal
/// entries, then `(Re, Im)` of each `W_ij` with `i < j` in row order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HermitianParam {
    pub l: usize,
}

impl HermitianParam {
    pub fn new(l: usize) -> Self {
        Self { l }
    }

    pub fn n_vars(&self) -> usize {
        self.l * self.l
    }

    fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.l).flat_map(move |i| (i + 1..self.l).map(move |j| (i, j)))
    }

    pub fn to_matrix(&self, theta: &[f64]) -> HermitianMatrix {
        let l = self.l;
        let mut m = CMat::zeros(l, l);
        for i in 0..l {
            m[(i, i)] = Complex64::new(theta[i], 0.0);
        }
        for (k, (i, j)) in self.pairs().enumerate() {
            let z = Complex64::new(theta[l + 2 * k], theta[l + 2 * k + 1]);
            m[(i, j)] = z;
            m[(j, i)] = z.conj();
        }
        HermitianMatrix::new(m).expect("square")
    }

    pub fn from_matrix(&self, w: &HermitianMatrix) -> Vec<f64> {
        let mut out: Vec<f64> = (0..self.l).map(|i| w.get(i, i).re).collect();
        for (i, j) in self.pairs() {
            let z = w.get(i, j);
            out.push(z.re);
            out.push(z.im);
        }
        out
    }

    pub fn var_names(&self) -> Vec<String> {
        let mut names: Vec<String> = (0..self.l).map(|i| format!("W[{i},{i}]")).collect();
        for (i, j) in self.pairs() {
            names.push(format!("Re W[{i},{j}]"));
            names.push(format!("Im W[{i},{j}]"));
        }
        names
    }
}

/// Real symmetric embedding `[Re W, -Im W; Im W, Re W]`; PSD iff `W` is.
pub fn hermitian_embed(w: &HermitianMatrix) -> DMatrix<f64> {
    let l = w.dim();
    let m = w.as_matrix();
    DMatrix::from_fn(2 * l, 2 * l, |r, c| {
        let z = m[(r % l, c % l)];
        match (r < l, c < l) {
            (true, true) | (false, false) => z.re,
            (true, false) => -z.im,
            (false, true) => z.im,
        }
    })
}

/// `svec` of the embedding of the Hermitian matrix held in `theta[offset..]`.
pub fn embed_svec(param: &HermitianParam, theta: &[f64]) -> Vec<f64> {
    svec(&hermitian_embed(&param.to_matrix(theta)))
}

/// Detected rank: the smallest `k` with `lambda_k / lambda_{k+1} > ratio`
/// (eigenvalues descending, `lambda_{L+1} = 0`); `L` if no such gap exists.
pub fn rank_of(w: &HermitianMatrix, ratio: f64) -> usize {
    rank_of_eigenvalues(&w.eigenvalues_desc(), ratio)
}

pub fn rank_of_eigenvalues(eigs_desc: &[f64], ratio: f64) -> usize {
    let l = eigs_desc.len();
    for k in 0..l {
        let a = eigs_desc[k];
        let b = if k + 1 < l {
            eigs_desc[k + 1].max(0.0)
        } else {
            0.0
        };
        if a > 0.0 && (b == 0.0 || a / b > ratio) {
            return k + 1;
        }
    }
    l
}

pub const RANK_RATIO: f64 = 1e4;
