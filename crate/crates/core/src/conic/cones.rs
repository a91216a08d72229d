//! Per-cone algebra for the interior-point solver: Jordan products,
//! Nesterov–Todd scalings and step lengths.

use nalgebra::{DMatrix, DVector, DVectorView, DVectorViewMut, SymmetricEigen};
use std::f64::consts::SQRT_2;

/// Packs the lower triangle of a symmetric matrix column by column, scaling
/// off-diagonal entries by `sqrt(2)` so that `svec(A) . svec(B) = tr(AB)`.
pub fn svec(m: &DMatrix<f64>) -> Vec<f64> {
    let k = m.nrows();
    let mut out = Vec::with_capacity(k * (k + 1) / 2);
    for j in 0..k {
        out.push(m[(j, j)]);
        for i in j + 1..k {
            out.push(SQRT_2 * 0.5 * (m[(i, j)] + m[(j, i)]));
        }
    }
    out
}

/// Inverse of [`svec`].
pub fn smat(v: &[f64], k: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(k, k);
    let mut p = 0;
    for j in 0..k {
        m[(j, j)] = v[p];
        p += 1;
        for i in j + 1..k {
            let x = v[p] / SQRT_2;
            m[(i, j)] = x;
            m[(j, i)] = x;
            p += 1;
        }
    }
    m
}

/// Side length `k` of a PSD block with `svec` length `d`.
pub fn psd_side(d: usize) -> usize {
    let k = ((((8 * d + 1) as f64).sqrt() - 1.0) / 2.0).round() as usize;
    debug_assert_eq!(k * (k + 1) / 2, d);
    k
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Kind {
    Nonneg,
    Soc,
    Psd(usize),
}

/// One inequality cone with its offset in the stacked slack vector.
#[derive(Debug, Clone, Copy)]
pub(crate) struct ConeSlot {
    pub kind: Kind,
    pub off: usize,
    pub dim: usize,
}

impl ConeSlot {
    pub fn degree(&self) -> usize {
        match self.kind {
            Kind::Nonneg => self.dim,
            Kind::Soc => 1,
            Kind::Psd(k) => k,
        }
    }

    pub fn seg<'a>(&self, v: &'a DVector<f64>) -> DVectorView<'a, f64> {
        v.rows(self.off, self.dim)
    }

    pub fn seg_mut<'a>(&self, v: &'a mut DVector<f64>) -> DVectorViewMut<'a, f64> {
        v.rows_mut(self.off, self.dim)
    }

    /// Writes the cone identity into `out`.
    pub fn identity(&self, out: &mut DVector<f64>) {
        let mut s = self.seg_mut(out);
        s.fill(0.0);
        match self.kind {
            Kind::Nonneg => s.fill(1.0),
            Kind::Soc => s[0] = 1.0,
            Kind::Psd(k) => {
                let mut p = 0;
                for j in 0..k {
                    s[p] = 1.0;
                    p += k - j;
                }
            }
        }
    }

    /// Smallest eigenvalue with respect to the cone's Jordan algebra.
    pub fn min_eig(&self, v: &DVector<f64>) -> f64 {
        let s = self.seg(v);
        match self.kind {
            Kind::Nonneg => s.min(),
            Kind::Soc => s[0] - s.rows(1, self.dim - 1).norm(),
            Kind::Psd(k) => {
                let m = smat(s.as_slice(), k);
                SymmetricEigen::new(m).eigenvalues.min()
            }
        }
    }

    /// Largest `alpha` with `x + alpha d` in the cone, for interior `x`.
    pub fn max_step(&self, x: &DVector<f64>, d: &DVector<f64>) -> f64 {
        let xs = self.seg(x);
        let ds = self.seg(d);
        match self.kind {
            Kind::Nonneg => {
                let mut a = f64::INFINITY;
                for i in 0..self.dim {
                    if ds[i] < 0.0 {
                        a = a.min(-xs[i] / ds[i]);
                    }
                }
                a
            }
            Kind::Soc => {
                let n = self.dim;
                let jdot = |u: &DVectorView<f64>, v: &DVectorView<f64>| {
                    u[0] * v[0] - u.rows(1, n - 1).dot(&v.rows(1, n - 1))
                };
                let a = jdot(&ds, &ds);
                let b = jdot(&xs, &ds);
                let c = jdot(&xs, &xs);
                // The head must stay nonnegative too; this also covers a
                // double root lost to rounding when the tail of d is zero.
                let head = if ds[0] < 0.0 {
                    -xs[0] / ds[0]
                } else {
                    f64::INFINITY
                };
                smallest_positive_root(a, b, c).min(head)
            }
            Kind::Psd(k) => {
                let xm = smat(xs.as_slice(), k);
                let dm = smat(ds.as_slice(), k);
                let Some(ch) = xm.cholesky() else {
                    return 0.0;
                };
                let linv = ch.l().try_inverse().expect("cholesky factor is invertible");
                let t = &linv * dm * linv.transpose();
                let t = 0.5 * (&t + t.transpose());
                let lmin = SymmetricEigen::new(t).eigenvalues.min();
                if lmin < 0.0 {
                    -1.0 / lmin
                } else {
                    f64::INFINITY
                }
            }
        }
    }
}

/// Smallest positive root of `a t^2 + 2 b t + c` with `c > 0`; infinity if none.
fn smallest_positive_root(a: f64, b: f64, c: f64) -> f64 {
    let scale = a.abs().max(b.abs()).max(c.abs());
    if a.abs() <= 1e-15 * scale {
        return if b < 0.0 {
            -c / (2.0 * b)
        } else {
            f64::INFINITY
        };
    }
    let disc = b * b - a * c;
    if disc < 0.0 {
        return f64::INFINITY;
    }
    let q = -(b + b.signum() * disc.sqrt());
    let mut best = f64::INFINITY;
    for r in [q / a, if q != 0.0 { c / q } else { f64::INFINITY }] {
        if r > 0.0 && r < best {
            best = r;
        }
    }
    best
}

/// SVD `m = U diag(s) V^T` of a square matrix by one-sided Jacobi
/// rotations. Slower than bidiagonalization but accurate to full relative
/// precision, which the bidiagonal routine is not for near-repeated
/// singular values. `None` if a singular value is zero.
fn accurate_svd(m: DMatrix<f64>) -> Option<(DMatrix<f64>, DVector<f64>, DMatrix<f64>)> {
    let n = m.ncols();
    let mut a = m;
    let mut v = DMatrix::identity(n, n);
    for _ in 0..60 {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let alpha = a.column(p).norm_squared();
                let beta = a.column(q).norm_squared();
                let gamma = a.column(p).dot(&a.column(q));
                if gamma.abs() <= f64::EPSILON * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for mat in [&mut a, &mut v] {
                    for i in 0..mat.nrows() {
                        let (x, y) = (mat[(i, p)], mat[(i, q)]);
                        mat[(i, p)] = c * x - s * y;
                        mat[(i, q)] = s * x + c * y;
                    }
                }
            }
        }
        if !rotated {
            let sv = DVector::from_fn(n, |j, _| a.column(j).norm());
            if sv.iter().any(|&x| !(x > 0.0)) {
                return None;
            }
            let mut u = a;
            for j in 0..n {
                u.column_mut(j).unscale_mut(sv[j]);
            }
            return Some((u, sv, v));
        }
    }
    None
}

/// Nesterov–Todd scaling of one cone: `W z = W^{-T} s = lambda`.
#[derive(Debug, Clone)]
pub(crate) enum Scaling {
    Nonneg {
        d: DVector<f64>,
    },
    /// Dense `W` and `W^{-1}`; a fresh scaling is `beta (2 v v^T - J)`.
    Soc {
        w: DMatrix<f64>,
        winv: DMatrix<f64>,
    },
    /// `W(Z) = R^T Z R`, `W^{-T}(S) = R^{-1} S R^{-T}`.
    Psd {
        k: usize,
        r: DMatrix<f64>,
        rinv_t: DMatrix<f64>,
    },
}

impl Scaling {
    /// Scaling and scaled point for strictly interior `s`, `z` (the slot
    /// segments of the stacked vectors); `None` otherwise.
    pub fn compute(
        slot: &ConeSlot,
        s: &DVector<f64>,
        z: &DVector<f64>,
    ) -> Option<(Self, DVector<f64>)> {
        Self::compute_local(
            slot.kind,
            &slot.seg(s).into_owned(),
            &slot.seg(z).into_owned(),
        )
    }

    fn compute_local(
        kind: Kind,
        ss: &DVector<f64>,
        zs: &DVector<f64>,
    ) -> Option<(Self, DVector<f64>)> {
        match kind {
            Kind::Nonneg => {
                if ss.iter().chain(zs.iter()).any(|&v| !(v > 0.0)) {
                    return None;
                }
                let d = ss.zip_map(zs, |a, b| (a / b).sqrt());
                let lam = zs.component_mul(&d);
                Some((Scaling::Nonneg { d }, lam))
            }
            Kind::Soc => {
                let n = ss.len();
                let jn = |v: &DVector<f64>| {
                    let t = v.rows(1, n - 1).norm();
                    (v[0] - t) * (v[0] + t)
                };
                let sn = jn(ss);
                let zn = jn(zs);
                if !(sn > 0.0 && zn > 0.0 && ss[0] > 0.0 && zs[0] > 0.0) {
                    return None;
                }
                let sbar = ss / sn.sqrt();
                let zbar = zs / zn.sqrt();
                let g = ((1.0 + sbar.dot(&zbar)) / 2.0).sqrt();
                let mut wbar = sbar.clone();
                wbar[0] += zbar[0];
                for i in 1..n {
                    wbar[i] -= zbar[i];
                }
                wbar /= 2.0 * g;
                // v = (wbar + e) / sqrt(2 (wbar_0 + 1)), so that W = beta (2 v v^T - J).
                let den = (2.0 * (wbar[0] + 1.0)).sqrt();
                let mut v = wbar;
                v[0] += 1.0;
                v /= den;
                let beta = (sn / zn).powf(0.25);
                let mut jm = DMatrix::identity(n, n) * -1.0;
                jm[(0, 0)] = 1.0;
                let vv = &v * v.transpose();
                let w = (&vv * 2.0 - &jm) * beta;
                let winv = (&jm * &vv * &jm * 2.0 - &jm) / beta;
                let lam = &w * zs;
                Some((Scaling::Soc { w, winv }, lam))
            }
            Kind::Psd(k) => {
                let ls = smat(ss.as_slice(), k).cholesky()?.l();
                let lz = smat(zs.as_slice(), k).cholesky()?.l();
                let (u, lam, v) = accurate_svd(lz.transpose() * &ls)?;
                if lam.iter().any(|&x| !(x > 0.0)) {
                    return None;
                }
                let isq = DMatrix::from_diagonal(&lam.map(|x| 1.0 / x.sqrt()));
                let lam_vec = DVector::from_vec(svec(&DMatrix::from_diagonal(&lam)));
                Some((
                    Scaling::Psd {
                        k,
                        r: ls * v * &isq,
                        rinv_t: lz * u * isq,
                    },
                    lam_vec,
                ))
            }
        }
    }

    /// Moves the scaling to the stepped point. `lam` is the current scaled
    /// point and `dsw = W^{-T} ds`, `dzw = W dz` the scaled steps. Returns the
    /// new scaled point.
    pub fn update(
        &mut self,
        kind: Kind,
        lam: &DVector<f64>,
        dsw: &DVector<f64>,
        dzw: &DVector<f64>,
        alpha: f64,
    ) -> Option<DVector<f64>> {
        let st = lam + dsw * alpha;
        let zt = lam + dzw * alpha;
        let (tilde, lam_new) = Self::compute_local(kind, &st, &zt)?;
        *self = match (&*self, tilde) {
            (Scaling::Nonneg { d }, Scaling::Nonneg { d: dt }) => Scaling::Nonneg {
                d: d.component_mul(&dt),
            },
            (Scaling::Soc { w, winv }, Scaling::Soc { w: wt, winv: wit }) => Scaling::Soc {
                w: wt * w,
                winv: winv * wit,
            },
            (
                Scaling::Psd { k, r, rinv_t },
                Scaling::Psd {
                    r: rt, rinv_t: rit, ..
                },
            ) => Scaling::Psd {
                k: *k,
                r: r * rt,
                rinv_t: rinv_t * rit,
            },
            _ => unreachable!("cone kind is fixed per slot"),
        };
        Some(lam_new)
    }

    /// Applies `W`, `W^T`, `W^{-1}` or `W^{-T}` to one cone segment.
    pub fn apply(&self, op: Op, v: DVectorView<f64>) -> DVector<f64> {
        match self {
            Scaling::Nonneg { d } => match op {
                Op::W | Op::WT => v.component_mul(d),
                Op::WInv | Op::WInvT => v.component_div(d),
            },
            Scaling::Soc { w, winv } => match op {
                Op::W => w * v,
                Op::WT => w.tr_mul(&v),
                Op::WInv => winv * v,
                Op::WInvT => winv.tr_mul(&v),
            },
            Scaling::Psd { k, r, rinv_t } => {
                let m = smat(v.as_slice(), *k);
                let res = match op {
                    Op::W => r.transpose() * m * r,
                    Op::WT => r * m * r.transpose(),
                    Op::WInv => rinv_t * m * rinv_t.transpose(),
                    Op::WInvT => rinv_t.transpose() * m * rinv_t,
                };
                DVector::from_vec(svec(&res))
            }
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) enum Op {
    W,
    WT,
    WInv,
    WInvT,
}

/// Jordan product `u ∘ v` on one cone.
pub(crate) fn jordan(kind: Kind, u: &DVector<f64>, v: &DVector<f64>) -> DVector<f64> {
    match kind {
        Kind::Nonneg => u.component_mul(v),
        Kind::Soc => {
            let n = u.len();
            let mut out = DVector::zeros(n);
            out[0] = u.dot(v);
            for i in 1..n {
                out[i] = u[0] * v[i] + v[0] * u[i];
            }
            out
        }
        Kind::Psd(k) => {
            let a = smat(u.as_slice(), k);
            let b = smat(v.as_slice(), k);
            let p = &a * &b;
            DVector::from_vec(svec(&(0.5 * (&p + p.transpose()))))
        }
    }
}

/// Solves `lambda ∘ x = r` for `x`, where `lambda` is the NT-scaled point
/// (diagonal for PSD cones).
pub(crate) fn jordan_solve(kind: Kind, lambda: &DVector<f64>, r: &DVector<f64>) -> DVector<f64> {
    match kind {
        Kind::Nonneg => r.component_div(lambda),
        Kind::Soc => {
            let n = lambda.len();
            let l0 = lambda[0];
            let l1 = lambda.rows(1, n - 1);
            let r1 = r.rows(1, n - 1);
            let x0 = (l0 * r[0] - l1.dot(&r1)) / (l0 * l0 - l1.norm_squared());
            let mut out = DVector::zeros(n);
            out[0] = x0;
            for i in 1..n {
                out[i] = (r[i] - x0 * lambda[i]) / l0;
            }
            out
        }
        Kind::Psd(k) => {
            let lm = smat(lambda.as_slice(), k);
            let rm = smat(r.as_slice(), k);
            let x = DMatrix::from_fn(k, k, |i, j| 2.0 * rm[(i, j)] / (lm[(i, i)] + lm[(j, j)]));
            DVector::from_vec(svec(&x))
        }
    }
}
