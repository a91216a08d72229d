//! Moment versus Bernstein right-hand sides for a real Gaussian quadratic
//! `Q(xi) = xi^T A xi + a^T xi`, `xi ~ N(0, I)`, and the dominance check.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{check_len, Error, Result};
use crate::linalg::sym_eigenvalues_desc;
use crate::moment::c_of_rho;
use crate::rng::GaussianSource;

pub const SYMMETRY_TOL: f64 = 1e-12;

/// Open interval of `rho` on which the moment bound is provably the more
/// conservative one.
pub fn rho_window() -> (f64, f64) {
    ((-8.0f64).exp(), 0.00045)
}

pub fn in_window(rho: f64) -> bool {
    let (lo, hi) = rho_window();
    rho > lo && rho < hi
}

#[derive(Debug, Clone, PartialEq)]
pub struct GaussianQuadratic {
    pub a_mat: DMatrix<f64>,
    pub a: DVector<f64>,
    /// Threshold in `Pr(Q >= t) <= rho`.
    pub t: f64,
}

impl GaussianQuadratic {
    pub fn new(a_mat: DMatrix<f64>, a: DVector<f64>, t: f64) -> Result<Self> {
        check_len("A rows vs cols", a_mat.nrows(), a_mat.ncols())?;
        check_len("a", a_mat.nrows(), a.len())?;
        let asym = (&a_mat - a_mat.transpose()).amax();
        if asym > SYMMETRY_TOL * a_mat.amax().max(1.0) {
            return Err(Error::InvalidParameter {
                name: "A",
                reason: format!("not symmetric (deviation {asym:e})"),
            });
        }
        let a_mat = (&a_mat + a_mat.transpose()) * 0.5;
        Ok(Self { a_mat, a, t })
    }

    /// Entries N(0, 1), `A` symmetrized.
    pub fn random(m: usize, src: &mut GaussianSource) -> Self {
        let g = DMatrix::from_fn(m, m, |_, _| src.normal());
        let a = DVector::from_vec(src.normal_vec(m));
        Self {
            a_mat: (&g + g.transpose()) * 0.5,
            a,
            t: 0.0,
        }
    }

    pub fn dim(&self) -> usize {
        self.a.len()
    }

    pub fn eval(&self, xi: &DVector<f64>) -> f64 {
        xi.dot(&(&self.a_mat * xi)) + self.a.dot(xi)
    }

    pub fn scaled(&self, alpha: f64) -> Self {
        Self {
            a_mat: &self.a_mat * alpha,
            a: &self.a * alpha,
            t: self.t,
        }
    }
}

/// `E[Q^2] = (tr A)^2 + 2 ||A||_F^2 + ||a||^2`.
pub fn second_moment(q: &GaussianQuadratic) -> f64 {
    let tr = q.a_mat.trace();
    tr * tr + 2.0 * q.a_mat.norm_squared() + q.a.norm_squared()
}

/// `||a||^2 + ||A||_F^2 + (tr A)^2 + sum_i A_ii^2`. Agrees with
/// [`second_moment`] for diagonal `A` and undercounts the off-diagonal
/// entries otherwise.
pub fn second_moment_printed(q: &GaussianQuadratic) -> f64 {
    let tr = q.a_mat.trace();
    let diag: f64 = q.a_mat.diagonal().iter().map(|x| x * x).sum();
    q.a.norm_squared() + q.a_mat.norm_squared() + tr * tr + diag
}

/// `max(lambda_max(A), 0)`.
pub fn s_plus(a: &DMatrix<f64>) -> f64 {
    if a.nrows() == 0 {
        return 0.0;
    }
    sym_eigenvalues_desc(a)[0].max(0.0)
}

/// `c(rho) sqrt(E[Q^2])`.
pub fn moment_rhs(q: &GaussianQuadratic, rho: f64) -> Result<f64> {
    Ok(c_of_rho(rho)? * second_moment(q).sqrt())
}

/// `tr A + 2 sqrt(ln 1/rho) sqrt(||A||_F^2 + ||a||^2 / 2) + 2 ln(1/rho) s+(A)`.
pub fn bernstein_rhs(q: &GaussianQuadratic, rho: f64) -> Result<f64> {
    if !(rho > 0.0 && rho < 1.0) {
        return Err(Error::RhoOutOfRange(rho));
    }
    let lr = (1.0 / rho).ln();
    let spread = (q.a_mat.norm_squared() + 0.5 * q.a.norm_squared()).sqrt();
    Ok(q.a_mat.trace() + 2.0 * lr.sqrt() * spread + 2.0 * lr * s_plus(&q.a_mat))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DominanceReport {
    pub rho: f64,
    pub moment_rhs: f64,
    pub bernstein_rhs: f64,
    /// `moment_rhs >= bernstein_rhs`.
    pub dominated: bool,
    pub in_window: bool,
}

pub fn check_dominance(q: &GaussianQuadratic, rho: f64) -> Result<DominanceReport> {
    let m = moment_rhs(q, rho)?;
    let b = bernstein_rhs(q, rho)?;
    Ok(DominanceReport {
        rho,
        moment_rhs: m,
        bernstein_rhs: b,
        dominated: m >= b,
        in_window: in_window(rho),
    })
}

/// The two scalar inequalities the dominance argument reduces to:
/// `1/(4 sqrt(3 rho)) >= 2 sqrt(ln 1/rho)` and `sqrt(3)/(4 sqrt(rho)) >= 2 ln(1/rho)`.
pub fn proof_thresholds(rho: f64) -> (bool, bool) {
    let lr = (1.0 / rho).ln();
    (
        1.0 / (4.0 * (3.0 * rho).sqrt()) >= 2.0 * lr.sqrt(),
        3f64.sqrt() / (4.0 * rho.sqrt()) >= 2.0 * lr,
    )
}

/// `n` points strictly inside `(lo, hi)`, evenly spaced.
pub fn interior_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (1..=n)
        .map(|k| lo + (hi - lo) * k as f64 / (n + 1) as f64)
        .collect()
}
