//! Bernstein-type restriction of the quadratic truncation.
//!
//! With `xi = sqrt(2) [Re x; Im x; Re y; Im y] ~ N(0, I_{4L})` the degree-2
//! truncation of the satisfaction margin `-Q` is `s + v^T xi + xi^T R xi`,
//! where `s = a0(W)` and `v`, `R` are linear in `W`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use std::f64::consts::SQRT_2;

use crate::conic::{svec, Cone, ConicProgram, ConstraintBlock, HermitianParam};
use crate::error::{check_len, Error, Result};
use crate::linalg::{sym_eigenvalues_desc, CMat, HermitianMatrix};
use crate::model::{a0, ChannelScenario, Perturbation, SystemParams};
use crate::moment::{power_objective, psd_block};

pub fn xi_from_pert(p: &Perturbation) -> DVector<f64> {
    let l = p.x.len();
    let mut xi = DVector::zeros(4 * l);
    for i in 0..l {
        xi[i] = SQRT_2 * p.x[i].re;
        xi[l + i] = SQRT_2 * p.x[i].im;
        xi[2 * l + i] = SQRT_2 * p.y[i].re;
        xi[3 * l + i] = SQRT_2 * p.y[i].im;
    }
    xi
}

/// The `2L x 2L` building blocks of `R` before scaling.
#[derive(Debug, Clone)]
pub struct KBlocks {
    pub k1: DMatrix<f64>,
    pub k2: DMatrix<f64>,
    pub k3: DMatrix<f64>,
    pub k4_1: DMatrix<f64>,
    pub k4_2: DMatrix<f64>,
}

/// `s + v^T xi + xi^T r_bar xi` in `4L` real Gaussian variables.
#[derive(Debug, Clone)]
pub struct QuadraticForm {
    pub s: f64,
    pub v: DVector<f64>,
    pub r_bar: DMatrix<f64>,
    pub blocks: KBlocks,
}

impl QuadraticForm {
    pub fn eval(&self, xi: &DVector<f64>) -> f64 {
        self.s + self.v.dot(xi) + xi.dot(&(&self.r_bar * xi))
    }

    /// `[svec(R_bar); v / sqrt(2)]`, whose norm is `sqrt(||R_bar||_F^2 + ||v||^2 / 2)`.
    pub fn stacked(&self) -> Vec<f64> {
        let mut out = svec(&self.r_bar);
        out.extend(self.v.iter().map(|x| x / SQRT_2));
        out
    }

    pub fn spread(&self) -> f64 {
        self.stacked().iter().map(|x| x * x).sum::<f64>().sqrt()
    }
}

/// `[[Re M, Im M], [-Im M, Re M]]`.
fn realify(m: &CMat) -> DMatrix<f64> {
    let l = m.nrows();
    DMatrix::from_fn(2 * l, 2 * l, |r, c| {
        let z = m[(r % l, c % l)];
        match (r < l, c < l) {
            (true, true) | (false, false) => z.re,
            (true, false) => z.im,
            (false, true) => -z.im,
        }
    })
}

pub fn decompose(
    w: &HermitianMatrix,
    sc: &ChannelScenario,
    params: &SystemParams,
) -> Result<QuadraticForm> {
    sc.check(params)?;
    check_len("W", params.relays(), w.dim())?;
    let l = params.relays();
    let cg = params.pt_over_gamma();
    let (eps, eta) = (sc.eps, sc.eta);
    let wm = w.as_matrix();
    let wc = wm.map(|z| z.conj());
    let (fb, gb) = (&sc.f_bar, &sc.g_bar);
    // G = conj(g) g^T, F = f f^H.
    let gmat = CMat::from_fn(l, l, |i, j| gb[i].conj() * gb[j]);
    let fmat = CMat::from_fn(l, l, |i, j| fb[i] * fb[j].conj());
    let wsig: Vec<f64> = (0..l).map(|i| wm[(i, i)].re * params.sigma2[i]).collect();

    let fcol = CMat::from_fn(l, 1, |i, _| fb[i]);
    let gcol = CMat::from_fn(l, 1, |i, _| gb[i]);
    let t1 = wm.component_mul(&gmat.map(|z| z.conj())) * &fcol;
    let t3 = wc.component_mul(&fmat) * &gcol;
    let mut v = DVector::zeros(4 * l);
    for i in 0..l {
        v[i] = SQRT_2 * eps * cg * t1[i].re;
        v[l + i] = SQRT_2 * eps * cg * t1[i].im;
        v[2 * l + i] = SQRT_2 * (-eta * wsig[i] * gb[i].re + eta * cg * t3[i].re);
        v[3 * l + i] = SQRT_2 * (-eta * wsig[i] * gb[i].im + eta * cg * t3[i].im);
    }

    let k1 = realify(&wc.component_mul(&gmat));
    let mut k4_1 = DMatrix::zeros(2 * l, 2 * l);
    for i in 0..l {
        k4_1[(i, i)] = wsig[i];
        k4_1[(l + i, l + i)] = wsig[i];
    }
    let k4_2 = realify(&wm.component_mul(&fmat.map(|z| z.conj())));

    let h: Vec<Complex64> = (0..l).map(|i| fb[i] * gb[i].conj()).collect();
    let d1: Vec<Complex64> = (0..l)
        .map(|i| (0..l).map(|j| wm[(i, j)] * h[j]).sum())
        .collect();
    let d2: Vec<Complex64> = (0..l)
        .map(|i| (0..l).map(|j| wc[(i, j)] * h[j].conj()).sum())
        .collect();
    let am = CMat::from_fn(l, l, |i, j| wm[(i, j)] * gb[i] * fb[j]);
    let bm = CMat::from_fn(l, l, |i, j| wc[(i, j)] * fb[i] * gb[j]);
    let mut k2 = DMatrix::zeros(2 * l, 2 * l);
    let mut k3 = DMatrix::zeros(2 * l, 2 * l);
    for i in 0..l {
        for j in 0..l {
            let dg = |z: Complex64| if i == j { z } else { Complex64::new(0.0, 0.0) };
            k2[(i, j)] = dg(d1[i]).re + am[(i, j)].re;
            k2[(i, l + j)] = dg(d2[i]).im + am[(i, j)].im;
            k2[(l + i, j)] = dg(d1[i]).im + am[(i, j)].im;
            k2[(l + i, l + j)] = dg(d2[i]).re - am[(i, j)].re;
            k3[(i, j)] = dg(d1[i]).re + bm[(i, j)].re;
            k3[(i, l + j)] = dg(d1[i]).im + bm[(i, j)].im;
            k3[(l + i, j)] = dg(d2[i]).im + bm[(i, j)].im;
            k3[(l + i, l + j)] = dg(d2[i]).re - bm[(i, j)].re;
        }
    }

    let n2 = 2 * l;
    let mut r = DMatrix::zeros(4 * l, 4 * l);
    r.view_mut((0, 0), (n2, n2))
        .copy_from(&(&k1 * (0.5 * eps * eps * cg)));
    r.view_mut((0, n2), (n2, n2))
        .copy_from(&(&k2 * (0.5 * eps * eta * cg)));
    r.view_mut((n2, 0), (n2, n2))
        .copy_from(&(&k3 * (0.5 * eps * eta * cg)));
    r.view_mut((n2, n2), (n2, n2))
        .copy_from(&((&k4_1 * -1.0 + &k4_2 * cg) * (0.5 * eta * eta)));
    let r_bar = (&r + r.transpose()) * 0.5;
    Ok(QuadraticForm {
        s: a0(w, sc, params)?,
        v,
        r_bar,
        blocks: KBlocks {
            k1,
            k2,
            k3,
            k4_1,
            k4_2,
        },
    })
}

/// `sqrt(ln(1/rho))` and `ln(1/rho)`.
fn log_terms(rho: f64) -> Result<(f64, f64)> {
    if !(rho > 0.0 && rho < 1.0) {
        return Err(Error::RhoOutOfRange(rho));
    }
    let lr = (1.0 / rho).ln();
    Ok((lr.sqrt(), lr))
}

/// Left side of the Bernstein constraint at the best `(lambda, delta)` for `W`:
/// `Tr(R_bar) - 2 sqrt(ln 1/rho) ||[R_bar; v/sqrt 2]|| - 2 ln(1/rho) s+(-R_bar) + s`.
pub fn margin(form: &QuadraticForm, rho: f64) -> Result<f64> {
    let (sq, lr) = log_terms(rho)?;
    let lam = sym_eigenvalues_desc(&(-&form.r_bar))[0].max(0.0);
    Ok(form.r_bar.trace() - 2.0 * sq * form.spread() - 2.0 * lr * lam + form.s)
}

#[derive(Debug, Clone)]
pub struct BernsteinProblem {
    pub program: ConicProgram,
    pub param: HermitianParam,
    pub rho: f64,
    pub scenario_hash: u64,
}

impl BernsteinProblem {
    pub fn lambda_index(&self) -> usize {
        self.param.n_vars()
    }

    pub fn delta_index(&self) -> usize {
        self.param.n_vars() + 1
    }
}

/// Variables `(theta, lambda, delta)` with `theta` the real parametrization of `W`.
pub fn build_b2_problem(sc: &ChannelScenario, params: &SystemParams) -> Result<BernsteinProblem> {
    params.validate()?;
    sc.check(params)?;
    let l = params.relays();
    let param = HermitianParam::new(l);
    let nw = param.n_vars();
    let n = nw + 2;
    let (sq, lr) = log_terms(params.rho)?;
    let form_at =
        |x: &[f64]| decompose(&param.to_matrix(&x[..nw]), sc, params).expect("dimensions checked");

    let mut objective = power_objective(&param, sc, params);
    objective.extend([0.0, 0.0]);
    let mut names = param.var_names();
    names.extend(["lambda".to_string(), "delta".to_string()]);
    let mut prog = ConicProgram::new(objective, names);

    prog.push(ConstraintBlock::from_affine(
        "bernstein",
        Cone::Nonneg(1),
        n,
        |x| {
            let f = form_at(x);
            vec![f.r_bar.trace() - 2.0 * sq * x[nw + 1] - 2.0 * lr * x[nw] + f.s]
        },
    ));
    let m = 4 * l;
    let soc_dim = 1 + m * (m + 1) / 2 + m;
    prog.push(ConstraintBlock::from_affine(
        "spread soc",
        Cone::Soc(soc_dim),
        n,
        |x| {
            let mut out = vec![x[nw + 1]];
            out.extend(form_at(x).stacked());
            out
        },
    ));
    prog.push(ConstraintBlock::from_affine(
        "lambda I + R psd",
        Cone::Psd(m),
        n,
        |x| {
            let f = form_at(x);
            svec(&(f.r_bar + DMatrix::identity(m, m) * x[nw]))
        },
    ));
    prog.push(ConstraintBlock::from_affine(
        "lambda >= 0",
        Cone::Nonneg(1),
        n,
        |x| vec![x[nw]],
    ));
    prog.push(psd_block(&param, n));
    Ok(BernsteinProblem {
        program: prog,
        param,
        rho: params.rho,
        scenario_hash: sc.fingerprint(),
    })
}
