//! Moment-inequality restrictions (fourth- and second-order).
//!
//! `W . M(x, y)` is the perturbation-dependent part of the outage polynomial:
//! `Q(W, x, y) = W . M(x, y) - a0(W)`. The restriction
//! `a0(W) >= c(rho) ||U^{1/2} vec(W)||` with `U = E[vec(M) vec(M)^H]` implies
//! the outage constraint.
//!
//! `vec` is row-major: `vec(W)[i L + j] = W[i, j]`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::conic::{embed_svec, Cone, ConicProgram, ConstraintBlock, HermitianParam};
use crate::error::{check_len, Error, Result};
use crate::linalg::{cre, hermitian_psd_sqrt, CMat, CVec, HermitianMatrix};
use crate::model::{a0, avg_power_matrix, ChannelScenario, Perturbation, SystemParams};

/// Eigenvalues of `U` below this fraction of the largest are clamped to zero.
pub const U_CLAMP_REL: f64 = 1e-9;
/// Negative eigenvalues of `U` beyond this fraction of the largest are an error.
pub const U_NEGATIVE_REL: f64 = 1e-6;

fn check_rho(rho: f64) -> Result<()> {
    if rho > 0.0 && rho < 1.0 {
        Ok(())
    } else {
        Err(Error::RhoOutOfRange(rho))
    }
}

/// Moment order chosen by the Markov-inequality bound; 2 unless `rho <= e^-8`.
pub fn q_of_rho(rho: f64) -> Result<f64> {
    check_rho(rho)?;
    let lr = rho.ln();
    if rho <= (-8.0f64).exp() {
        Ok((-lr + (lr * lr - 8.0 * lr).sqrt()) / 4.0)
    } else {
        Ok(2.0)
    }
}

/// Constant `c(rho)` multiplying the moment norm.
pub fn c_of_rho(rho: f64) -> Result<f64> {
    let q = q_of_rho(rho)?;
    if q > 2.0 {
        Ok((q - 1.0).powi(2) * (2.0 * q / (q - 1.0)).exp())
    } else {
        Ok(1.0 / rho.sqrt())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Order {
    /// Full quartic polynomial.
    Fourth,
    /// Degree-2 truncation.
    Second,
}

impl Order {
    pub fn degree(&self) -> u32 {
        match self {
            Order::Fourth => 4,
            Order::Second => 2,
        }
    }

    fn is_fourth(&self) -> bool {
        matches!(self, Order::Fourth)
    }
}

/// How the pure-diagonal entries `U[(i,i),(i,i)]` are assembled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum DiagonalRule {
    /// `sum_m |C_m(i)|^2` plus the variance of the higher-chaos terms
    /// (`|y_i|^2 - 1`, `|x_i|^2 - 1`, ...) that the nine-term sum leaves out.
    #[default]
    Complete,
    /// `sum_m |C_m(i)|^2` only.
    Printed,
}

/// `C_1..C_9` per relay and `D_1..D_15` (order 4) or `D_1..D_10` (order 2)
/// per ordered relay pair. Stored zero-based.
#[derive(Debug, Clone)]
pub struct MomentCoefficients {
    pub order: Order,
    pub l: usize,
    pub c: Vec<[Complex64; 9]>,
    d: Vec<[Complex64; 15]>,
    /// Variance of the diagonal chaos terms not covered by `C`.
    pub diag_extra: Vec<f64>,
}

impl MomentCoefficients {
    /// `D_{n+1}(k, l)`.
    pub fn d(&self, k: usize, l: usize) -> &[Complex64; 15] {
        &self.d[k * self.l + l]
    }

    pub fn n_d(&self) -> usize {
        match self.order {
            Order::Fourth => 15,
            Order::Second => 10,
        }
    }
}

pub fn coefficients(
    sc: &ChannelScenario,
    params: &SystemParams,
    order: Order,
) -> Result<MomentCoefficients> {
    sc.check(params)?;
    let l = params.relays();
    let cg = params.pt_over_gamma();
    let (eps, eta) = (sc.eps, sc.eta);
    let e4 = if order.is_fourth() { 1.0 } else { 0.0 };
    let mut c = Vec::with_capacity(l);
    let mut extra = Vec::with_capacity(l);
    for i in 0..l {
        let (f, g, s2) = (sc.f_bar[i], sc.g_bar[i], params.sigma2[i]);
        let (af, ag) = (f.norm_sqr(), g.norm_sqr());
        c.push([
            g * (eta * s2) - (g * (eta * af) + g * (e4 * eta * eps * eps)) * cg,
            g.conj() * (eta * s2)
                - (g.conj() * (eta * af) + g.conj() * (e4 * eta * eps * eps)) * cg,
            -(f.conj() * (eps * ag) + f.conj() * (e4 * eps * eta * eta)) * cg,
            -(f * (eps * ag) + f * (e4 * eps * eta * eta)) * cg,
            -f.conj() * g * (cg * eps * eta),
            -f.conj() * g.conj() * (cg * eps * eta),
            -f * g * (cg * eps * eta),
            -f * g.conj() * (cg * eps * eta),
            cre(eta * eta * s2
                - cg * (eta * eta * af + eps * eps * ag + e4 * eps * eps * eta * eta)),
        ]);
        let terms: Vec<f64> = if order.is_fourth() {
            vec![
                eta * eta * (s2 - cg * af - cg * eps * eps),
                -cg * eps * eps * (ag + eta * eta),
                -cg * eps * eps * eta * eta,
                cg * eps * eta * eta * af.sqrt(),
                cg * eps * eta * eta * af.sqrt(),
                cg * eps * eps * eta * ag.sqrt(),
                cg * eps * eps * eta * ag.sqrt(),
            ]
        } else {
            vec![eta * eta * (s2 - cg * af), -cg * eps * eps * ag]
        };
        extra.push(terms.iter().map(|t| t * t).sum());
    }
    let zero = Complex64::new(0.0, 0.0);
    let mut d = Vec::with_capacity(l * l);
    for k in 0..l {
        for m in 0..l {
            let (fk, fl, gk, gl) = (sc.f_bar[k], sc.f_bar[m], sc.g_bar[k], sc.g_bar[m]);
            let mut row = [
                -fk * fl.conj() * gl * (cg * eta),
                -fk * fl.conj() * gk.conj() * (cg * eta),
                -gk.conj() * gl * fl.conj() * (cg * eps),
                -gk.conj() * gl * fk * (cg * eps),
                -fl.conj() * gl * (cg * eps * eta),
                -fl.conj() * gk.conj() * (cg * eps * eta),
                -fk * gl * (cg * eps * eta),
                -fk * gk.conj() * (cg * eps * eta),
                -fk * fl.conj() * (cg * eta * eta),
                -gk.conj() * gl * (cg * eps * eps),
                -fl.conj() * (cg * eps * eta * eta),
                -fk * (cg * eps * eta * eta),
                -gl * (cg * eps * eps * eta),
                -gk.conj() * (cg * eps * eps * eta),
                cre(-cg * eps * eps * eta * eta),
            ];
            if !order.is_fourth() {
                for v in row.iter_mut().skip(10) {
                    *v = zero;
                }
            }
            d.push(row);
        }
    }
    Ok(MomentCoefficients {
        order,
        l,
        c,
        d,
        diag_extra: extra,
    })
}

/// `M(x, y)`: for order 4 the exact shift `Q(W, x, y) + a0(W) = W . M`;
/// for order 2 its degree-2 truncation.
pub fn m_matrix(
    p: &Perturbation,
    sc: &ChannelScenario,
    params: &SystemParams,
    order: Order,
) -> Result<HermitianMatrix> {
    sc.check(params)?;
    let l = params.relays();
    check_len("perturbation x", l, p.x.len())?;
    check_len("perturbation y", l, p.y.len())?;
    let cg = params.pt_over_gamma();
    let (eps, eta) = (sc.eps, sc.eta);
    let hi = if order.is_fourth() { 1.0 } else { 0.0 };
    let (fb, gb, x, y) = (&sc.f_bar, &sc.g_bar, &p.x, &p.y);
    let mut m = CMat::zeros(l, l);
    for i in 0..l {
        let s2 = params.sigma2[i];
        let (af, ag) = (fb[i].norm_sqr(), gb[i].norm_sqr());
        let (ax, ay) = (x[i].norm_sqr(), y[i].norm_sqr());
        let yg = (y[i].conj() * gb[i] + gb[i].conj() * y[i]).re;
        let xf = (x[i] * fb[i].conj() + fb[i] * x[i].conj()).re;
        let val = eta * s2 * yg + eta * eta * s2 * ay
            - cg * ((eta * af * yg + eps * ag * xf)
                + (eta * eta * af * ay + eps * eps * ag * ax + eps * eta * xf * yg)
                + hi * (eps * eta * eta * xf * ay + eta * eps * eps * ax * yg)
                + hi * eps * eps * eta * eta * ax * ay);
        m[(i, i)] = cre(val);
    }
    for k in 0..l {
        for j in 0..l {
            if k == j {
                continue;
            }
            let yg = y[k].conj() * gb[j] + gb[k].conj() * y[j];
            let xf = x[k] * fb[j].conj() + fb[k] * x[j].conj();
            let v = (fb[k] * fb[j].conj() * yg * eta + gb[k].conj() * gb[j] * xf * eps)
                + (fb[k] * fb[j].conj() * y[k].conj() * y[j] * (eta * eta)
                    + gb[k].conj() * gb[j] * x[k] * x[j].conj() * (eps * eps)
                    + xf * yg * (eps * eta))
                + (xf * y[k].conj() * y[j] * (eps * eta * eta)
                    + x[k] * x[j].conj() * yg * (eta * eps * eps))
                    * hi
                + x[k] * x[j].conj() * y[k].conj() * y[j] * (hi * eps * eps * eta * eta);
            m[(k, j)] = -v * cg;
        }
    }
    HermitianMatrix::new(m)
}

/// Row-major `vec(W)`.
pub fn vec_w(w: &HermitianMatrix) -> CVec {
    let l = w.dim();
    CVec::from_fn(l * l, |r, _| w.get(r / l, r % l))
}

pub fn unvec_w(v: &CVec) -> Result<HermitianMatrix> {
    let l = (v.len() as f64).sqrt().round() as usize;
    check_len("vec(W) length", l * l, v.len())?;
    HermitianMatrix::new(CMat::from_fn(l, l, |i, j| v[i * l + j]))
}

/// `U = E[vec(M) vec(M)^H]` with its PSD square root.
#[derive(Debug, Clone)]
pub struct UMatrix {
    pub order: Order,
    pub u: CMat,
    pub sqrt: CMat,
    /// Number of negative eigenvalues clamped to zero.
    pub clamped: usize,
    pub min_eig: f64,
    pub max_eig: f64,
}

impl UMatrix {
    /// `||U^{1/2} vec(W)||`.
    pub fn norm_of(&self, w: &HermitianMatrix) -> f64 {
        (&self.sqrt * vec_w(w)).norm()
    }
}

pub fn build_u(coeffs: &MomentCoefficients) -> Result<UMatrix> {
    build_u_with(coeffs, DiagonalRule::Complete)
}

pub fn build_u_with(co: &MomentCoefficients, rule: DiagonalRule) -> Result<UMatrix> {
    let l = co.l;
    let n = l * l;
    let zero = Complex64::new(0.0, 0.0);
    let dot = |a: &[Complex64], b: &[Complex64], ms: &[usize]| -> Complex64 {
        ms.iter().map(|&m| a[m - 1] * b[m - 1].conj()).sum()
    };
    const FRONT: [usize; 3] = [1, 3, 5];
    const BACK: [usize; 3] = [2, 4, 8];
    let mut u = CMat::zeros(n, n);
    for a in 0..n {
        let (i, j) = (a / l, a % l);
        for b in 0..n {
            let (k, m) = (b / l, b % l);
            u[(a, b)] = match (i == j, k == m) {
                (true, true) => {
                    if i == k {
                        let mut s: f64 = co.c[i].iter().map(|z| z.norm_sqr()).sum();
                        if rule == DiagonalRule::Complete {
                            s += co.diag_extra[i];
                        }
                        cre(s)
                    } else {
                        co.c[i][8] * co.c[k][8].conj()
                    }
                }
                (true, false) => {
                    if i == k {
                        dot(&co.c[i], co.d(i, m), &FRONT)
                    } else if i == m {
                        dot(&co.c[i], co.d(k, i), &BACK)
                    } else {
                        zero
                    }
                }
                (false, true) => {
                    if i == k {
                        dot(co.d(i, j), &co.c[i], &FRONT)
                    } else if j == k {
                        dot(co.d(i, j), &co.c[j], &BACK)
                    } else {
                        zero
                    }
                }
                (false, false) => {
                    if i == k && j == m {
                        cre(co.d(i, j)[..co.n_d()].iter().map(|z| z.norm_sqr()).sum())
                    } else if i == k {
                        dot(co.d(k, j), co.d(k, m), &FRONT)
                    } else if j == m {
                        dot(co.d(i, m), co.d(k, m), &BACK)
                    } else {
                        zero
                    }
                }
            };
        }
    }
    let u = HermitianMatrix::new(u)?.into_matrix();
    let (sqrt, clamped, min_eig) = hermitian_psd_sqrt(&u, U_CLAMP_REL);
    let max_eig = HermitianMatrix::new(u.clone())?
        .eigenvalues_desc()
        .first()
        .copied()
        .unwrap_or(0.0)
        .max(0.0);
    if min_eig < -U_NEGATIVE_REL * max_eig {
        return Err(Error::UClamp { min_eig, max_eig });
    }
    Ok(UMatrix {
        order: co.order,
        u,
        sqrt,
        clamped,
        min_eig,
        max_eig,
    })
}

/// SOC-restricted SDP: minimize `E[D] . W` subject to
/// `a0(W) >= c(rho) ||U^{1/2} vec(W)||` and `W ⪰ 0`.
#[derive(Debug, Clone)]
pub struct SafeSocProblem {
    pub program: ConicProgram,
    pub param: HermitianParam,
    pub order: Order,
    pub c_rho: f64,
    pub scenario_hash: u64,
    pub u: UMatrix,
}

impl SafeSocProblem {
    /// `a0(W) - c ||U^{1/2} vec(W)||`.
    pub fn residual(
        &self,
        w: &HermitianMatrix,
        sc: &ChannelScenario,
        params: &SystemParams,
    ) -> Result<f64> {
        Ok(a0(w, sc, params)? - self.c_rho * self.u.norm_of(w))
    }
}

/// Minimize the average relay power `E[D] . W`, as a linear function of the
/// real parametrization.
pub(crate) fn power_objective(
    param: &HermitianParam,
    sc: &ChannelScenario,
    params: &SystemParams,
) -> Vec<f64> {
    let d = avg_power_matrix(sc, params);
    (0..param.n_vars())
        .map(|j| {
            let mut e = vec![0.0; param.n_vars()];
            e[j] = 1.0;
            d.dot(&param.to_matrix(&e))
        })
        .collect()
}

pub(crate) fn psd_block(param: &HermitianParam, n: usize) -> ConstraintBlock {
    let p = *param;
    ConstraintBlock::from_affine("W psd", Cone::Psd(2 * p.l), n, move |x| {
        embed_svec(&p, &x[..p.n_vars()])
    })
}

pub fn build_problem(
    sc: &ChannelScenario,
    params: &SystemParams,
    order: Order,
) -> Result<SafeSocProblem> {
    build_problem_with(sc, params, order, DiagonalRule::Complete)
}

pub fn build_problem_with(
    sc: &ChannelScenario,
    params: &SystemParams,
    order: Order,
    rule: DiagonalRule,
) -> Result<SafeSocProblem> {
    params.validate()?;
    sc.check(params)?;
    let l = params.relays();
    let param = HermitianParam::new(l);
    let n = param.n_vars();
    let c_rho = c_of_rho(params.rho)?;
    let u = build_u_with(&coefficients(sc, params, order)?, rule)?;
    let mut prog = ConicProgram::new(power_objective(&param, sc, params), param.var_names());
    let usqrt = u.sqrt.clone();
    prog.push(ConstraintBlock::from_affine(
        "moment soc",
        Cone::Soc(2 * l * l + 1),
        n,
        |x| {
            let w = param.to_matrix(x);
            let r = &usqrt * vec_w(&w);
            let mut out = Vec::with_capacity(2 * l * l + 1);
            out.push(a0(&w, sc, params).expect("dimensions checked"));
            out.extend(r.iter().map(|z| c_rho * z.re));
            out.extend(r.iter().map(|z| c_rho * z.im));
            out
        },
    ));
    prog.push(psd_block(&param, n));
    Ok(SafeSocProblem {
        program: prog,
        param,
        order,
        c_rho,
        scenario_hash: sc.fingerprint(),
        u,
    })
}

/// Non-robust program: `a0(W) >= 0` on the estimated channels.
pub fn build_nonrobust_problem(
    sc: &ChannelScenario,
    params: &SystemParams,
) -> Result<ConicProgram> {
    params.validate()?;
    sc.check(params)?;
    let param = HermitianParam::new(params.relays());
    let n = param.n_vars();
    let mut prog = ConicProgram::new(power_objective(&param, sc, params), param.var_names());
    prog.push(ConstraintBlock::from_affine(
        "a0 >= 0",
        Cone::Nonneg(1),
        n,
        |x| vec![a0(&param.to_matrix(x), sc, params).expect("dimensions checked")],
    ));
    prog.push(psd_block(&param, n));
    Ok(prog)
}
