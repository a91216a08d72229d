//! Homogeneous self-dual interior-point method with Nesterov–Todd scaling
//! and Mehrotra predictor-corrector steps.
//!
//! The program `a_k x + b_k ∈ K_k` is put in the standard form
//! `min c^T x  s.t.  G x + s = h, A x = b, s ∈ K` with `G = -a_k`, `h = b_k`
//! for inequality cones and `A = a_k`, `b = -b_k` for zero cones.

use nalgebra::{DMatrix, DVector};

use super::cones::{jordan, jordan_solve, ConeSlot, Kind, Op, Scaling};
use super::ir::{Cone, ConicProgram, ConicSolver, Solution, SolverConfig, Status};
use crate::error::Result;

/// Built-in dense interior-point solver.
#[derive(Debug, Clone, Copy, Default)]
pub struct InteriorPoint {
    pub cfg: SolverConfig,
}

impl InteriorPoint {
    pub fn new(cfg: SolverConfig) -> Self {
        Self { cfg }
    }
}

impl ConicSolver for InteriorPoint {
    fn solve(&self, prog: &ConicProgram) -> Result<Solution> {
        solve(prog, &self.cfg)
    }
}

struct Standard {
    c: DVector<f64>,
    g: DMatrix<f64>,
    h: DVector<f64>,
    a: DMatrix<f64>,
    b: DVector<f64>,
    slots: Vec<ConeSlot>,
    /// For each program block: (is_zero_cone, row offset in A or G).
    map: Vec<(bool, usize)>,
}

fn standardize(prog: &ConicProgram) -> Standard {
    let n = prog.n;
    let m: usize = prog
        .blocks
        .iter()
        .filter(|b| !matches!(b.cone, Cone::Zero(_)))
        .map(|b| b.cone.dim())
        .sum();
    let p: usize = prog
        .blocks
        .iter()
        .filter(|b| matches!(b.cone, Cone::Zero(_)))
        .map(|b| b.cone.dim())
        .sum();
    let mut g = DMatrix::zeros(m, n);
    let mut h = DVector::zeros(m);
    let mut a = DMatrix::zeros(p, n);
    let mut b = DVector::zeros(p);
    let mut slots = Vec::new();
    let mut map = Vec::new();
    let (mut gi, mut ai) = (0, 0);
    for blk in &prog.blocks {
        let d = blk.cone.dim();
        let kind = match blk.cone {
            Cone::Zero(_) => {
                a.rows_mut(ai, d).copy_from(&blk.a);
                b.rows_mut(ai, d).copy_from(&(-&blk.b));
                map.push((true, ai));
                ai += d;
                continue;
            }
            Cone::Nonneg(_) => Kind::Nonneg,
            Cone::Soc(_) => Kind::Soc,
            Cone::Psd(k) => Kind::Psd(k),
        };
        g.rows_mut(gi, d).copy_from(&(-&blk.a));
        h.rows_mut(gi, d).copy_from(&blk.b);
        if d > 0 {
            slots.push(ConeSlot {
                kind,
                off: gi,
                dim: d,
            });
        }
        map.push((false, gi));
        gi += d;
    }
    Standard {
        c: DVector::from_column_slice(&prog.objective),
        g,
        h,
        a,
        b,
        slots,
        map,
    }
}

/// Reduced KKT system for the current scaling.
struct Kkt<'a> {
    std: &'a Standard,
    scalings: &'a [Scaling],
    fact: Factor,
}

enum Factor {
    /// `W^{-T} G = Q R`; used when there are no equality rows.
    Qr(DMatrix<f64>),
    Lu(nalgebra::linalg::LU<f64, nalgebra::Dyn, nalgebra::Dyn>),
}

impl<'a> Kkt<'a> {
    fn apply_all(&self, op: Op, v: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(v.len());
        for (slot, w) in self.std.slots.iter().zip(self.scalings) {
            let r = w.apply(op, slot.seg(v));
            slot.seg_mut(&mut out).copy_from(&r);
        }
        out
    }

    fn factor(std: &'a Standard, scalings: &'a [Scaling]) -> Option<Self> {
        let n = std.c.len();
        let p = std.b.len();
        // W^{-T} G, column by column.
        let mut wg = DMatrix::zeros(std.g.nrows(), n);
        for j in 0..n {
            let col = std.g.column(j).into_owned();
            let mut out = DVector::zeros(col.len());
            for (slot, w) in std.slots.iter().zip(scalings) {
                out.rows_mut(slot.off, slot.dim)
                    .copy_from(&w.apply(Op::WInvT, slot.seg(&col)));
            }
            wg.set_column(j, &out);
        }
        if p == 0 && wg.nrows() >= n {
            let r = wg.qr().r();
            let dmax = r.diagonal().amax();
            if r.diagonal().iter().any(|d| !(d.abs() > 1e-15 * dmax)) {
                return None;
            }
            return Some(Self {
                std,
                scalings,
                fact: Factor::Qr(r),
            });
        }
        let hmat = wg.transpose() * &wg;
        let mut k = DMatrix::zeros(n + p, n + p);
        k.view_mut((0, 0), (n, n)).copy_from(&hmat);
        k.view_mut((0, n), (n, p)).copy_from(&std.a.transpose());
        k.view_mut((n, 0), (p, n)).copy_from(&std.a);
        let lu = k.lu();
        if !lu.is_invertible() {
            return None;
        }
        Some(Self {
            std,
            scalings,
            fact: Factor::Lu(lu),
        })
    }

    /// Applies `[0 A^T G^T; A 0 0; G 0 -W^T W]` to `(dx, dy, dz)`.
    fn apply(&self, dx: &DVector<f64>, dy: &DVector<f64>, dz: &DVector<f64>) -> [DVector<f64>; 3] {
        let wz = self.apply_all(Op::W, dz);
        let wtwz = self.apply_all(Op::WT, &wz);
        [
            self.std.a.transpose() * dy + self.std.g.transpose() * dz,
            &self.std.a * dx,
            &self.std.g * dx - wtwz,
        ]
    }

    fn solve_once(
        &self,
        r1: &DVector<f64>,
        r2: &DVector<f64>,
        r3: &DVector<f64>,
    ) -> Option<[DVector<f64>; 3]> {
        let n = r1.len();
        let p = r2.len();
        // dz = W^{-1} W^{-T} (G dx - r3)
        let t = self.apply_all(Op::WInvT, r3);
        let t = self.apply_all(Op::WInv, &t);
        let mut rhs = DVector::zeros(n + p);
        rhs.rows_mut(0, n)
            .copy_from(&(r1 + self.std.g.transpose() * &t));
        rhs.rows_mut(n, p).copy_from(r2);
        let sol = match &self.fact {
            Factor::Lu(lu) => lu.solve(&rhs)?,
            Factor::Qr(r) => {
                // R^T R dx = rhs
                let t = r.transpose().solve_lower_triangular(&rhs)?;
                r.solve_upper_triangular(&t)?
            }
        };
        let dx = sol.rows(0, n).into_owned();
        let dy = sol.rows(n, p).into_owned();
        let u = &self.std.g * &dx - r3;
        let u = self.apply_all(Op::WInvT, &u);
        let dz = self.apply_all(Op::WInv, &u);
        if dx
            .iter()
            .chain(dy.iter())
            .chain(dz.iter())
            .any(|v| !v.is_finite())
        {
            return None;
        }
        Some([dx, dy, dz])
    }

    fn solve(
        &self,
        r1: &DVector<f64>,
        r2: &DVector<f64>,
        r3: &DVector<f64>,
    ) -> Option<[DVector<f64>; 3]> {
        let mut sol = self.solve_once(r1, r2, r3)?;
        for _ in 0..3 {
            let [a1, a2, a3] = self.apply(&sol[0], &sol[1], &sol[2]);
            let e1 = r1 - a1;
            let e2 = r2 - a2;
            let e3 = r3 - a3;
            let err = e1.norm() + e2.norm() + e3.norm();
            let scale = 1.0 + r1.norm() + r2.norm() + r3.norm();
            if err <= 1e-14 * scale {
                break;
            }
            let [c1, c2, c3] = self.solve_once(&e1, &e2, &e3)?;
            sol[0] += c1;
            sol[1] += c2;
            sol[2] += c3;
        }
        Some(sol)
    }
}

fn max_step(slots: &[ConeSlot], x: &DVector<f64>, d: &DVector<f64>) -> f64 {
    slots
        .iter()
        .map(|s| s.max_step(x, d))
        .fold(f64::INFINITY, f64::min)
}

/// Violation of `a x + b ∈ K` per block.
pub fn block_residuals(prog: &ConicProgram, x: &[f64]) -> Vec<f64> {
    prog.blocks
        .iter()
        .map(|blk| {
            let v = blk.eval(x);
            match blk.cone {
                Cone::Zero(_) => v.norm(),
                Cone::Nonneg(d) | Cone::Soc(d) | Cone::Psd(d) if d == 0 => 0.0,
                Cone::Nonneg(d) => (-ConeSlot {
                    kind: Kind::Nonneg,
                    off: 0,
                    dim: d,
                }
                .min_eig(&v))
                .max(0.0),
                Cone::Soc(d) => (-ConeSlot {
                    kind: Kind::Soc,
                    off: 0,
                    dim: d,
                }
                .min_eig(&v))
                .max(0.0),
                Cone::Psd(k) => (-ConeSlot {
                    kind: Kind::Psd(k),
                    off: 0,
                    dim: blk.cone.dim(),
                }
                .min_eig(&v))
                .max(0.0),
            }
        })
        .collect()
}

fn failure(prog: &ConicProgram, status: Status, x: Vec<f64>, iterations: usize) -> Solution {
    let objective = prog.objective_value(&x);
    Solution {
        status,
        residuals: block_residuals(prog, &x),
        x,
        objective,
        dual_objective: f64::NAN,
        duals: None,
        iterations,
    }
}

fn split_duals(
    prog: &ConicProgram,
    std: &Standard,
    y: &DVector<f64>,
    z: &DVector<f64>,
) -> Vec<Vec<f64>> {
    prog.blocks
        .iter()
        .zip(&std.map)
        .map(|(blk, &(zero, off))| {
            let d = blk.cone.dim();
            if zero {
                y.rows(off, d).iter().copied().collect()
            } else {
                z.rows(off, d).iter().copied().collect()
            }
        })
        .collect()
}

/// Stacked per-cone map.
fn map_cones(
    slots: &[ConeSlot],
    v: &DVector<f64>,
    mut f: impl FnMut(usize, &ConeSlot, DVector<f64>) -> DVector<f64>,
) -> DVector<f64> {
    let mut out = DVector::zeros(v.len());
    for (k, sl) in slots.iter().enumerate() {
        let r = f(k, sl, sl.seg(v).into_owned());
        sl.seg_mut(&mut out).copy_from(&r);
    }
    out
}

struct Direction {
    dx: DVector<f64>,
    dy: DVector<f64>,
    dz: DVector<f64>,
    ds: DVector<f64>,
    /// `W^{-T} ds` and `W dz`.
    dsw: DVector<f64>,
    dzw: DVector<f64>,
    dtau: f64,
    dkappa: f64,
}

pub fn solve(prog: &ConicProgram, cfg: &SolverConfig) -> Result<Solution> {
    prog.validate()?;
    cfg.validate()?;
    let std = standardize(prog);
    let n = std.c.len();
    let m = std.h.len();
    let p = std.b.len();
    let slots = std.slots.clone();
    let degree: usize = slots.iter().map(|s| s.degree()).sum();
    let tol = cfg.tol;
    let fail = |status, x: &DVector<f64>, tau: f64, iter| {
        Ok(failure(
            prog,
            status,
            (x / tau).iter().copied().collect(),
            iter,
        ))
    };

    let mut e = DVector::zeros(m);
    for s in &slots {
        s.identity(&mut e);
    }

    // Initial point from the identity-scaled KKT system.
    let ident: Vec<Scaling> = slots
        .iter()
        .map(|s| Scaling::compute(s, &e, &e).expect("identity is interior").0)
        .collect();
    let Some(kkt) = Kkt::factor(&std, &ident) else {
        return fail(Status::NumericalFailure, &DVector::zeros(n), 1.0, 0);
    };
    let (zn, zm, zp) = (DVector::zeros(n), DVector::zeros(m), DVector::zeros(p));
    let Some([mut x, _, zs]) = kkt.solve(&zn, &std.b, &std.h) else {
        return fail(Status::NumericalFailure, &zn, 1.0, 0);
    };
    let Some([_, mut y, mut z]) = kkt.solve(&(-&std.c), &zp, &zm) else {
        return fail(Status::NumericalFailure, &zn, 1.0, 0);
    };
    let mut s = -zs;
    if !slots.is_empty() {
        for v in [&mut s, &mut z] {
            let t = slots
                .iter()
                .map(|sl| -sl.min_eig(v))
                .fold(f64::NEG_INFINITY, f64::max);
            if t >= -1e-8 * v.norm().max(1.0) {
                *v += &e * (1.0 + t);
            }
        }
    }
    let mut tau = 1.0;
    let mut kappa = 1.0;

    let mut scal = Vec::with_capacity(slots.len());
    let mut lam = DVector::zeros(m);
    for sl in &slots {
        let Some((w, l)) = Scaling::compute(sl, &s, &z) else {
            return fail(Status::NumericalFailure, &x, tau, 0);
        };
        sl.seg_mut(&mut lam).copy_from(&l);
        scal.push(w);
    }

    let resx0 = std.c.norm();
    let resy0 = std.b.norm();
    let resz0 = std.h.norm();

    for iter in 0..=cfg.max_iter {
        let rx = std.a.transpose() * &y + std.g.transpose() * &z + &std.c * tau;
        let ry = -(&std.a * &x) + &std.b * tau;
        let rz = &s + &std.g * &x - &std.h * tau;
        let cx = std.c.dot(&x);
        let by = std.b.dot(&y);
        let hz = std.h.dot(&z);
        let rt = kappa + cx + by + hz;

        let gap = s.dot(&z);
        let mu = (lam.norm_squared() + tau * kappa) / (degree as f64 + 1.0);
        let pcost = cx / tau;
        let dcost = -(hz + by) / tau;
        let relgap = if pcost < 0.0 {
            Some(gap / tau / tau / -pcost)
        } else if dcost > 0.0 {
            Some(gap / tau / tau / dcost)
        } else {
            None
        };
        // Residuals relative to the data and the current iterate size.
        let xn = x.norm() / tau;
        let pres =
            (ry.norm().hypot(rz.norm()) / tau) / (resy0 + resz0 + xn + s.norm() / tau).max(1.0);
        let dres = (rx.norm() / tau) / (resx0 + xn + (y.norm() + z.norm()) / tau).max(1.0);
        let pinfres = (hz + by < 0.0).then(|| {
            (std.a.transpose() * &y + std.g.transpose() * &z).norm() / resx0.max(1.0) / -(hz + by)
        });
        let dinfres = (cx < 0.0).then(|| {
            ((&std.a * &x).norm() / resy0.max(1.0)).max((&std.g * &x + &s).norm() / resz0.max(1.0))
                / -cx
        });
        let cost_gap = (pcost - dcost).abs();

        let converged = pres <= tol
            && dres <= tol
            && (gap / tau / tau <= tol || relgap.is_some_and(|r| r <= tol))
            && (cost_gap <= tol || cost_gap <= tol * pcost.abs().min(dcost.abs()));
        if converged {
            let xs: Vec<f64> = (&x / tau).iter().copied().collect();
            return Ok(Solution {
                status: Status::Optimal,
                objective: prog.objective_value(&xs),
                dual_objective: dcost,
                residuals: block_residuals(prog, &xs),
                duals: Some(split_duals(prog, &std, &(&y / tau), &(&z / tau))),
                x: xs,
                iterations: iter,
            });
        }
        if pinfres.is_some_and(|r| r <= tol) {
            let scale = -(hz + by);
            let mut sol = failure(
                prog,
                Status::Infeasible,
                (&x / tau).iter().copied().collect(),
                iter,
            );
            sol.duals = Some(split_duals(prog, &std, &(&y / scale), &(&z / scale)));
            return Ok(sol);
        }
        if dinfres.is_some_and(|r| r <= tol) {
            return Ok(failure(
                prog,
                Status::Unbounded,
                (&x / -cx).iter().copied().collect(),
                iter,
            ));
        }
        if iter == cfg.max_iter {
            break;
        }

        let Some(kkt) = Kkt::factor(&std, &scal) else {
            return fail(Status::NumericalFailure, &x, tau, iter);
        };
        let Some(u2) = kkt.solve(&(-&std.c), &std.b, &std.h) else {
            return fail(Status::NumericalFailure, &x, tau, iter);
        };

        // Newton direction reducing residuals by `omega` and targeting
        // `sigma mu`, with optional second-order correction.
        let direction =
            |sigma: f64, omega: f64, corr: Option<(&DVector<f64>, f64)>| -> Option<Direction> {
                // r_s = lambda^{-1} ∘ (-lambda∘lambda + sigma mu e - corr)
                let rs = map_cones(&slots, &lam, |_, sl, l| {
                    let mut t = -jordan(sl.kind, &l, &l);
                    t += sl.seg(&e) * (sigma * mu);
                    if let Some((c, _)) = corr {
                        t -= sl.seg(c);
                    }
                    jordan_solve(sl.kind, &l, &t)
                });
                let wt_rs = kkt.apply_all(Op::WT, &rs);
                let u1 = kkt.solve(
                    &(-(&rx * omega)),
                    &(&ry * omega),
                    &(-(&rz * omega) - &wt_rs),
                )?;
                let corr_t = corr.map_or(0.0, |(_, c)| c);
                let rhs_k = -tau * kappa + sigma * mu - corr_t;
                let num = -omega * rt
                    - rhs_k / tau
                    - (std.c.dot(&u1[0]) + std.b.dot(&u1[1]) + std.h.dot(&u1[2]));
                let den = -kappa / tau + std.c.dot(&u2[0]) + std.b.dot(&u2[1]) + std.h.dot(&u2[2]);
                let dtau = num / den;
                if !dtau.is_finite() {
                    return None;
                }
                let dx = &u1[0] + &u2[0] * dtau;
                let dz = &u1[2] + &u2[2] * dtau;
                let dzw = kkt.apply_all(Op::W, &dz);
                // ds from the linear residual equation rather than W^T (r_s - W dz):
                // the two agree in exact arithmetic, and this one keeps the primal
                // residual free of errors amplified by the conditioning of W.
                let ds = -(&rz * omega) - &std.g * &dx + &std.h * dtau;
                let dsw = kkt.apply_all(Op::WInvT, &ds);
                Some(Direction {
                    dx,
                    dy: &u1[1] + &u2[1] * dtau,
                    ds,
                    dz,
                    dsw,
                    dzw,
                    dtau,
                    dkappa: (rhs_k - kappa * dtau) / tau,
                })
            };

        let step_len = |d: &Direction| {
            let mut a = max_step(&slots, &lam, &d.dsw).min(max_step(&slots, &lam, &d.dzw));
            if d.dtau < 0.0 {
                a = a.min(-tau / d.dtau);
            }
            if d.dkappa < 0.0 {
                a = a.min(-kappa / d.dkappa);
            }
            a
        };

        // Predictor.
        let Some(aff) = direction(0.0, 1.0, None) else {
            return fail(Status::NumericalFailure, &x, tau, iter);
        };
        let alpha_a = step_len(&aff).min(1.0);
        let sigma = (1.0 - alpha_a).powi(3);

        // Corrector.
        let corr = map_cones(&slots, &aff.dsw, |_, sl, a| {
            jordan(sl.kind, &a, &sl.seg(&aff.dzw).into_owned())
        });
        let Some(d) = direction(sigma, 1.0 - sigma, Some((&corr, aff.dtau * aff.dkappa))) else {
            return fail(Status::NumericalFailure, &x, tau, iter);
        };
        let alpha = (cfg.step_fraction * step_len(&d)).min(1.0);
        if !(alpha > 1e-12) {
            return fail(Status::NumericalFailure, &x, tau, iter);
        }
        for (k, sl) in slots.iter().enumerate() {
            let l = sl.seg(&lam).into_owned();
            let dsw = sl.seg(&d.dsw).into_owned();
            let dzw = sl.seg(&d.dzw).into_owned();
            let Some(l_new) = scal[k].update(sl.kind, &l, &dsw, &dzw, alpha) else {
                return fail(Status::NumericalFailure, &x, tau, iter);
            };
            sl.seg_mut(&mut lam).copy_from(&l_new);
        }
        x += &d.dx * alpha;
        y += &d.dy * alpha;
        z += &d.dz * alpha;
        s += &d.ds * alpha;
        tau += d.dtau * alpha;
        kappa += d.dkappa * alpha;
    }
    fail(Status::MaxIter, &x, tau, cfg.max_iter)
}
