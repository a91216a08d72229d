//! Independent oracles and fixtures shared by the integration tests.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use relay_robust::conic::{Cone, ConicProgram, ConstraintBlock};
use relay_robust::linalg::CMat;
use relay_robust::model::{ChannelScenario, Perturbation, SystemParams};
use relay_robust::rng::GaussianSource;
use relay_robust::HermitianMatrix;

pub type C = Complex64;

pub fn params(l: usize, gamma_db: f64) -> SystemParams {
    SystemParams::uniform(l, 10.0, 10f64.powf(gamma_db / 10.0), 0.1, 0.25, 0.25).unwrap()
}

/// Parameters with per-relay noise levels and a random threshold.
pub fn random_params(l: usize, src: &mut GaussianSource) -> SystemParams {
    let sigma2 = (0..l).map(|_| 0.1 + src.uniform()).collect();
    let gamma = 10f64.powf(0.3 + 1.5 * src.uniform());
    SystemParams::new(
        1.0 + 9.0 * src.uniform(),
        gamma,
        0.1,
        0.1 + src.uniform(),
        sigma2,
    )
    .unwrap()
}

pub fn random_scenario(l: usize, src: &mut GaussianSource) -> ChannelScenario {
    let eps = 0.05 + 0.3 * src.uniform();
    let eta = 0.05 + 0.3 * src.uniform();
    ChannelScenario::new(
        src.complex_normal_vec(l),
        src.complex_normal_vec(l),
        eps,
        eta,
    )
    .unwrap()
}

pub fn random_pert(l: usize, src: &mut GaussianSource) -> Perturbation {
    Perturbation {
        x: src.complex_normal_vec(l),
        y: src.complex_normal_vec(l),
    }
}

/// Hermitian, not necessarily PSD.
pub fn random_hermitian(l: usize, src: &mut GaussianSource) -> HermitianMatrix {
    let a = CMat::from_fn(l, l, |_, _| src.complex_normal());
    HermitianMatrix::new((&a + a.adjoint()) * C::new(0.5, 0.0)).unwrap()
}

pub fn random_psd(l: usize, src: &mut GaussianSource) -> HermitianMatrix {
    let a = CMat::from_fn(l, l, |_, _| src.complex_normal());
    HermitianMatrix::new(&a * a.adjoint()).unwrap()
}

/// Q written out entry by entry:
/// `sigma_v^2 + sum_ij conj(W_ij) K_ij`,
/// `K_ij = [i=j] s_i |g_i|^2 - (P_t/gamma) f_i conj(f_j) conj(g_i) g_j`.
pub fn naive_q(w: &HermitianMatrix, f: &[C], g: &[C], p: &SystemParams) -> f64 {
    let l = f.len();
    let mut acc = C::new(p.sigma_v2, 0.0);
    for i in 0..l {
        for j in 0..l {
            let mut k = -(f[i] * f[j].conj() * g[i].conj() * g[j]) * (p.pt / p.gamma);
            if i == j {
                k += p.sigma2[i] * g[i].norm_sqr();
            }
            acc += w.get(i, j).conj() * k;
        }
    }
    acc.re
}

pub fn naive_realize(sc: &ChannelScenario, pert: &Perturbation) -> (Vec<C>, Vec<C>) {
    let f = (0..sc.f_bar.len())
        .map(|i| sc.f_bar[i] + pert.x[i] * sc.eps)
        .collect();
    let g = (0..sc.g_bar.len())
        .map(|i| sc.g_bar[i] + pert.y[i] * sc.eta)
        .collect();
    (f, g)
}

/// SNR from the explicit signal matrix `P_t (f f^H) .* (g* g*^H)` and noise
/// diagonal.
pub fn naive_snr(w: &[C], f: &[C], g: &[C], p: &SystemParams) -> f64 {
    let l = w.len();
    let mut num = C::new(0.0, 0.0);
    let mut den = p.sigma_v2;
    for i in 0..l {
        for j in 0..l {
            num += w[i].conj() * f[i] * f[j].conj() * g[i].conj() * g[j] * w[j];
        }
        den += w[i].norm_sqr() * g[i].norm_sqr() * p.sigma2[i];
    }
    p.pt * num.re / den
}

/// Coefficients `c_0..c_deg` of the polynomial through `f` at `deg + 1`
/// nodes symmetric about zero.
pub fn poly_fit(f: impl Fn(f64) -> f64, deg: usize) -> Vec<f64> {
    let n = deg + 1;
    let nodes: Vec<f64> = (0..n)
        .map(|k| -1.25 + 2.5 * k as f64 / deg as f64)
        .collect();
    let v = DMatrix::from_fn(n, n, |i, j| nodes[i].powi(j as i32));
    let y = DVector::from_iterator(n, nodes.iter().map(|&t| f(t)));
    v.lu()
        .solve(&y)
        .expect("distinct nodes")
        .iter()
        .copied()
        .collect()
}

/// Degree-at-most-2 part at `t = 1` of `t -> f(t)`, from a degree-5 fit.
pub fn quadratic_truncation(f: impl Fn(f64) -> f64) -> f64 {
    let c = poly_fit(f, 5);
    c[0] + c[1] + c[2]
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1.0)
}

/// A hand-solvable conic program with its optimal value.
pub struct Case {
    pub name: &'static str,
    pub prog: ConicProgram,
    pub optimum: f64,
}

fn prog(c: &[f64]) -> ConicProgram {
    ConicProgram::new(c.to_vec(), (0..c.len()).map(|i| format!("x{i}")).collect())
}

fn block(name: &str, cone: Cone, a: &[&[f64]], b: &[f64]) -> ConstraintBlock {
    let rows = a.len();
    let cols = a[0].len();
    ConstraintBlock::new(
        name,
        cone,
        DMatrix::from_fn(rows, cols, |i, j| a[i][j]),
        DVector::from_column_slice(b),
    )
}

/// Hand-solvable LP, SOCP and SDP instances.
pub fn battery() -> Vec<Case> {
    let mut out = Vec::new();

    let mut p = prog(&[1.0]);
    p.push(block("x >= 1", Cone::Nonneg(1), &[&[1.0]], &[-1.0]));
    out.push(Case {
        name: "lp scalar",
        prog: p,
        optimum: 1.0,
    });

    // min x + y s.t. x + 2y >= 2, 2x + y >= 2, x, y >= 0 -> (2/3, 2/3)
    let mut p = prog(&[1.0, 1.0]);
    p.push(block(
        "cuts",
        Cone::Nonneg(2),
        &[&[1.0, 2.0], &[2.0, 1.0]],
        &[-2.0, -2.0],
    ));
    p.push(block(
        "x >= 0",
        Cone::Nonneg(2),
        &[&[1.0, 0.0], &[0.0, 1.0]],
        &[0.0, 0.0],
    ));
    out.push(Case {
        name: "lp two cuts",
        prog: p,
        optimum: 4.0 / 3.0,
    });

    // min 2x + 3y + z s.t. x + y + z = 1, x, y, z >= 0 -> 1
    let mut p = prog(&[2.0, 3.0, 1.0]);
    p.push(block("sum", Cone::Zero(1), &[&[1.0, 1.0, 1.0]], &[-1.0]));
    p.push(block(
        "x >= 0",
        Cone::Nonneg(3),
        &[&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0], &[0.0, 0.0, 1.0]],
        &[0.0; 3],
    ));
    out.push(Case {
        name: "lp simplex",
        prog: p,
        optimum: 1.0,
    });

    // max x + y s.t. x <= 3, y <= 4 written as min -x - y
    let mut p = prog(&[-1.0, -1.0]);
    p.push(block(
        "caps",
        Cone::Nonneg(2),
        &[&[-1.0, 0.0], &[0.0, -1.0]],
        &[3.0, 4.0],
    ));
    out.push(Case {
        name: "lp box",
        prog: p,
        optimum: -7.0,
    });

    // min t s.t. (t, 3, 4) in SOC -> 5
    let mut p = prog(&[1.0]);
    p.push(block(
        "soc",
        Cone::Soc(3),
        &[&[1.0], &[0.0], &[0.0]],
        &[0.0, 3.0, 4.0],
    ));
    out.push(Case {
        name: "soc norm",
        prog: p,
        optimum: 5.0,
    });

    // min x + y s.t. ||(x, y)|| <= 1 -> -sqrt 2
    let mut p = prog(&[1.0, 1.0]);
    p.push(block(
        "ball",
        Cone::Soc(3),
        &[&[0.0, 0.0], &[1.0, 0.0], &[0.0, 1.0]],
        &[1.0, 0.0, 0.0],
    ));
    out.push(Case {
        name: "soc ball",
        prog: p,
        optimum: -std::f64::consts::SQRT_2,
    });

    // min t s.t. ||(x - 1, x - 3)|| <= t -> x = 2, t = sqrt 2
    let mut p = prog(&[0.0, 1.0]);
    p.push(block(
        "dist",
        Cone::Soc(3),
        &[&[0.0, 1.0], &[1.0, 0.0], &[1.0, 0.0]],
        &[0.0, -1.0, -3.0],
    ));
    out.push(Case {
        name: "soc distance",
        prog: p,
        optimum: std::f64::consts::SQRT_2,
    });

    // min x s.t. x^2 <= y, y <= 4 i.e. ||(2x, y - 1)|| <= y + 1 -> -2
    let mut p = prog(&[1.0, 0.0]);
    p.push(block(
        "rotated",
        Cone::Soc(3),
        &[&[0.0, 1.0], &[2.0, 0.0], &[0.0, 1.0]],
        &[1.0, 0.0, -1.0],
    ));
    p.push(block("y <= 4", Cone::Nonneg(1), &[&[0.0, -1.0]], &[4.0]));
    out.push(Case {
        name: "soc parabola",
        prog: p,
        optimum: -2.0,
    });

    // min tr X s.t. X - I in PSD(2) -> 2; svec off-diagonal carries sqrt 2
    let r2 = std::f64::consts::SQRT_2;
    let mut p = prog(&[1.0, 0.0, 1.0]);
    p.push(block(
        "X - I",
        Cone::Psd(2),
        &[&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0], &[0.0, 0.0, 1.0]],
        &[-1.0, 0.0, -1.0],
    ));
    out.push(Case {
        name: "sdp shifted identity",
        prog: p,
        optimum: 2.0,
    });

    // min lambda s.t. lambda I - A in PSD, A = [[2, 1], [1, 2]] -> 3
    let mut p = prog(&[1.0]);
    p.push(block(
        "lambda I - A",
        Cone::Psd(2),
        &[&[1.0], &[0.0], &[1.0]],
        &[-2.0, -r2, -2.0],
    ));
    out.push(Case {
        name: "sdp max eigenvalue",
        prog: p,
        optimum: 3.0,
    });

    // min <C, X> s.t. tr X = 1, X psd, C = [[1, 0], [0, 3]] -> 1
    let mut p = prog(&[1.0, 0.0, 3.0]);
    p.push(block("trace", Cone::Zero(1), &[&[1.0, 0.0, 1.0]], &[-1.0]));
    p.push(block(
        "X psd",
        Cone::Psd(2),
        &[&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0], &[0.0, 0.0, 1.0]],
        &[0.0; 3],
    ));
    out.push(Case {
        name: "sdp min eigenvalue",
        prog: p,
        optimum: 1.0,
    });

    // min x s.t. [[x, 1], [1, y]] psd, y <= 2 -> 1/2
    let mut p = prog(&[1.0, 0.0]);
    p.push(block(
        "schur",
        Cone::Psd(2),
        &[&[1.0, 0.0], &[0.0, 0.0], &[0.0, 1.0]],
        &[0.0, r2, 0.0],
    ));
    p.push(block("y <= 2", Cone::Nonneg(1), &[&[0.0, -1.0]], &[2.0]));
    out.push(Case {
        name: "sdp schur",
        prog: p,
        optimum: 0.5,
    });

    // mixed: min x + t s.t. x >= 1, ||(x, 1)|| <= t, [[t, 0], [0, x]] psd -> 1 + sqrt 2
    let mut p = prog(&[1.0, 1.0]);
    p.push(block("x >= 1", Cone::Nonneg(1), &[&[1.0, 0.0]], &[-1.0]));
    p.push(block(
        "soc",
        Cone::Soc(3),
        &[&[0.0, 1.0], &[1.0, 0.0], &[0.0, 0.0]],
        &[0.0, 0.0, 1.0],
    ));
    p.push(block(
        "psd",
        Cone::Psd(2),
        &[&[0.0, 1.0], &[0.0, 0.0], &[1.0, 0.0]],
        &[0.0; 3],
    ));
    out.push(Case {
        name: "mixed cones",
        prog: p,
        optimum: 1.0 + r2,
    });

    out
}

/// Primal-infeasible instances.
pub fn infeasible_battery() -> Vec<(&'static str, ConicProgram)> {
    let mut out = Vec::new();

    let mut p = prog(&[1.0]);
    p.push(block("x >= 1", Cone::Nonneg(1), &[&[1.0]], &[-1.0]));
    p.push(block("x <= 0", Cone::Nonneg(1), &[&[-1.0]], &[0.0]));
    out.push(("lp contradiction", p));

    // ||(x, 1)|| <= x - 1 has no solution
    let mut p = prog(&[1.0]);
    p.push(block(
        "soc",
        Cone::Soc(3),
        &[&[1.0], &[1.0], &[0.0]],
        &[-1.0, 0.0, 1.0],
    ));
    out.push(("soc empty", p));

    // X psd with X_11 = -1
    let mut p = prog(&[1.0, 0.0, 1.0]);
    p.push(block("X11", Cone::Zero(1), &[&[1.0, 0.0, 0.0]], &[1.0]));
    p.push(block(
        "X psd",
        Cone::Psd(2),
        &[&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0], &[0.0, 0.0, 1.0]],
        &[0.0; 3],
    ));
    out.push(("sdp negative diagonal", p));

    out
}

/// Dual-infeasible (unbounded) instance: min -x s.t. x >= 0.
pub fn unbounded() -> ConicProgram {
    let mut p = prog(&[-1.0]);
    p.push(block("x >= 0", Cone::Nonneg(1), &[&[1.0]], &[0.0]));
    p
}
