//! Dense complex/real helpers shared by the design modules.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{check_len, Result};

pub type CMat = DMatrix<Complex64>;
pub type CVec = DVector<Complex64>;
pub type RMat = DMatrix<f64>;

pub const HERMITIAN_TOL: f64 = 1e-12;

/// Square complex matrix that equals its conjugate transpose.
///
/// Every constructor symmetrizes with `(M + M^H) / 2`, so rounding noise from
/// the construction never leaks into downstream invariants.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianMatrix(CMat);

impl HermitianMatrix {
    pub fn new(m: CMat) -> Result<Self> {
        check_len("hermitian rows vs cols", m.nrows(), m.ncols())?;
        Ok(Self::symmetrized(m))
    }

    fn symmetrized(m: CMat) -> Self {
        let adj = m.adjoint();
        Self((m + adj) * Complex64::new(0.5, 0.0))
    }

    pub fn zeros(n: usize) -> Self {
        Self(CMat::zeros(n, n))
    }

    pub fn identity(n: usize) -> Self {
        Self(CMat::identity(n, n))
    }

    pub fn from_real_diagonal(d: &[f64]) -> Self {
        let n = d.len();
        Self(CMat::from_fn(n, n, |i, j| {
            if i == j {
                Complex64::new(d[i], 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        }))
    }

    /// `w w^H`.
    pub fn outer(w: &[Complex64]) -> Self {
        let n = w.len();
        Self::symmetrized(CMat::from_fn(n, n, |i, j| w[i] * w[j].conj()))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_matrix(&self) -> &CMat {
        &self.0
    }

    pub fn into_matrix(self) -> CMat {
        self.0
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.0[(i, j)]
    }

    /// Real inner product `A . B = sum conj(A_ij) B_ij`.
    pub fn dot(&self, other: &HermitianMatrix) -> f64 {
        frob_inner(&self.0, &other.0).re
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn scale(&self, a: f64) -> Self {
        Self(&self.0 * Complex64::new(a, 0.0))
    }

    pub fn add(&self, other: &HermitianMatrix) -> Self {
        Self(&self.0 + &other.0)
    }

    pub fn sub(&self, other: &HermitianMatrix) -> Self {
        Self(&self.0 - &other.0)
    }

    /// Largest deviation from Hermitian symmetry.
    pub fn asymmetry(&self) -> f64 {
        let n = self.dim();
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                worst = worst.max((self.0[(i, j)] - self.0[(j, i)].conj()).norm());
            }
        }
        worst
    }

    /// Eigenpairs sorted by descending eigenvalue. Columns of the returned
    /// matrix are the matching unit eigenvectors.
    pub fn eigh(&self) -> (Vec<f64>, CMat) {
        let eig = SymmetricEigen::new(self.0.clone());
        let n = self.dim();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
        let vals = order.iter().map(|&k| eig.eigenvalues[k]).collect();
        let vecs = CMat::from_fn(n, n, |i, c| eig.eigenvectors[(i, order[c])]);
        (vals, vecs)
    }

    pub fn eigenvalues_desc(&self) -> Vec<f64> {
        self.eigh().0
    }

    /// `Re(w^H M w)`.
    pub fn quad_form(&self, w: &[Complex64]) -> f64 {
        let n = self.dim();
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..n {
            let mut row = Complex64::new(0.0, 0.0);
            for j in 0..n {
                row += self.0[(i, j)] * w[j];
            }
            acc += w[i].conj() * row;
        }
        acc.re
    }
}

/// `sum conj(a_ij) b_ij`.
pub fn frob_inner(a: &CMat, b: &CMat) -> Complex64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

pub fn hadamard(a: &CMat, b: &CMat) -> CMat {
    a.component_mul(b)
}

/// `u v^H`.
pub fn outer(u: &[Complex64], v: &[Complex64]) -> CMat {
    CMat::from_fn(u.len(), v.len(), |i, j| u[i] * v[j].conj())
}

pub fn conj_vec(v: &[Complex64]) -> Vec<Complex64> {
    v.iter().map(|z| z.conj()).collect()
}

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn cre(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// PSD square root of a Hermitian matrix with eigenvalues below
/// `rel_tol * lambda_max` clamped to zero. Returns the root, the number of
/// eigenvalues that were strictly negative before clamping, and the most
/// negative eigenvalue seen.
pub fn hermitian_psd_sqrt(m: &CMat, rel_tol: f64) -> (CMat, usize, f64) {
    let eig = SymmetricEigen::new(m.clone());
    let n = m.nrows();
    let lmax = eig.eigenvalues.iter().cloned().fold(0.0f64, f64::max);
    let cut = rel_tol * lmax;
    let mut clamped = 0;
    let mut min_eig = f64::INFINITY;
    let mut scaled = eig.eigenvectors.clone();
    for k in 0..n {
        let l = eig.eigenvalues[k];
        min_eig = min_eig.min(l);
        if l < 0.0 {
            clamped += 1;
        }
        let root = if l > cut { l.sqrt() } else { 0.0 };
        for i in 0..n {
            scaled[(i, k)] *= root;
        }
    }
    let root = &scaled * eig.eigenvectors.adjoint();
    let root = (&root + root.adjoint()) * cre(0.5);
    (root, clamped, if n == 0 { 0.0 } else { min_eig })
}

/// Eigenvalues of a real symmetric matrix, descending.
pub fn sym_eigenvalues_desc(m: &RMat) -> Vec<f64> {
    let mut v: Vec<f64> = SymmetricEigen::new(m.clone())
        .eigenvalues
        .iter()
        .cloned()
        .collect();
    v.sort_by(|a, b| b.total_cmp(a));
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::GaussianSource;

    fn random_herm(n: usize, seed: u64) -> HermitianMatrix {
        let mut g = GaussianSource::new(seed, 0);
        let m = CMat::from_fn(n, n, |_, _| g.complex_normal());
        HermitianMatrix::new(m).unwrap()
    }

    #[test]
    fn constructors_are_hermitian() {
        let h = random_herm(5, 1);
        assert!(h.asymmetry() <= HERMITIAN_TOL);
        let mut g = GaussianSource::new(3, 0);
        let w = g.complex_normal_vec(4);
        assert!(HermitianMatrix::outer(&w).asymmetry() <= HERMITIAN_TOL);
    }

    #[test]
    fn dot_of_outer_is_quad_form() {
        let h = random_herm(4, 2);
        let mut g = GaussianSource::new(9, 0);
        let w = g.complex_normal_vec(4);
        let ww = HermitianMatrix::outer(&w);
        assert!((ww.dot(&h) - h.quad_form(&w)).abs() < 1e-12);
    }

    #[test]
    fn eigh_reconstructs() {
        let h = random_herm(5, 4);
        let (vals, vecs) = h.eigh();
        assert!(vals.windows(2).all(|p| p[0] >= p[1]));
        let d = CMat::from_fn(5, 5, |i, j| if i == j { cre(vals[i]) } else { cre(0.0) });
        let back = &vecs * d * vecs.adjoint();
        assert!((back - h.as_matrix()).norm() < 1e-10);
    }

    #[test]
    fn psd_sqrt_squares_back() {
        let a = random_herm(4, 5);
        let psd = a.as_matrix() * a.as_matrix().adjoint();
        let (r, clamped, _) = hermitian_psd_sqrt(&psd, 1e-9);
        assert_eq!(clamped, 0);
        assert!((&r * &r - &psd).norm() < 1e-9 * psd.norm());
    }
}
