//! Rank-one weight extraction from a relaxed optimum by Gaussian randomization.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::conic::{rank_of, RANK_RATIO};
use crate::error::{check_len, Error, Result};
use crate::linalg::HermitianMatrix;
use crate::rng::{streams, GaussianSource};

/// A deterministic safe constraint of the form `h(W) - offset >= 0` with `h`
/// positively homogeneous of degree one, so `t W` is feasible iff
/// `t h(W) >= offset`.
pub trait ConstraintChecker {
    fn homogeneous(&self, w: &HermitianMatrix) -> f64;

    fn offset(&self) -> f64;

    fn residual(&self, w: &HermitianMatrix) -> f64 {
        self.homogeneous(w) - self.offset()
    }

    /// Smallest `t > 0` making `t W` feasible.
    fn min_scale(&self, w: &HermitianMatrix) -> Option<f64> {
        let h = self.homogeneous(w);
        (h > 0.0).then(|| self.offset() / h)
    }
}

/// Relative factor by which extracted designs are pushed inside the safe
/// constraint, so a design on the boundary is not an outage by rounding.
pub const INWARD_MARGIN: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Source {
    EigRankOne,
    Randomized,
}

#[derive(Debug, Clone)]
pub struct ExtractionResult {
    pub w: Vec<Complex64>,
    /// `E[D] . w w^H`.
    pub power: f64,
    pub n_feasible: usize,
    pub n_samples: usize,
    pub source: Source,
    /// Scale applied to the raw candidate `w w^H`.
    pub scale: f64,
}

/// Extracts a rank-one design from `w_opt`.
///
/// A rank-one `w_opt` yields its scaled dominant eigenvector. Otherwise
/// `n_samples` candidates are drawn from `CN(0, w_opt)`, each is rescaled to
/// the boundary of the safe constraint, and the cheapest one wins.
pub fn extract(
    w_opt: &HermitianMatrix,
    checker: &dyn ConstraintChecker,
    power_matrix: &HermitianMatrix,
    n_samples: usize,
    seed: u64,
) -> Result<ExtractionResult> {
    check_len("power matrix", w_opt.dim(), power_matrix.dim())?;
    let l = w_opt.dim();
    let (vals, vecs) = w_opt.eigh();
    if rank_of(w_opt, RANK_RATIO) == 1 {
        let root = vals[0].max(0.0).sqrt();
        let w: Vec<Complex64> = (0..l).map(|i| vecs[(i, 0)] * root).collect();
        if let Some(t) = checker.min_scale(&HermitianMatrix::outer(&w)) {
            let t = t * (1.0 + INWARD_MARGIN);
            let w: Vec<Complex64> = w.iter().map(|z| z * t.sqrt()).collect();
            return Ok(ExtractionResult {
                power: power_matrix.quad_form(&w),
                w,
                n_feasible: 1,
                n_samples: 1,
                source: Source::EigRankOne,
                scale: t,
            });
        }
    }
    if n_samples == 0 {
        return Err(Error::NoFeasibleCandidate { tried: 0 });
    }
    // Factor F with F F^H = W_opt.
    let roots: Vec<f64> = vals.iter().map(|v| v.max(0.0).sqrt()).collect();
    let mut src = GaussianSource::new(seed, streams::RANDOMIZATION);
    let mut best: Option<(f64, Vec<Complex64>, f64)> = None;
    let mut n_feasible = 0;
    for _ in 0..n_samples {
        let zeta = src.complex_normal_vec(l);
        let cand: Vec<Complex64> = (0..l)
            .map(|i| (0..l).map(|k| vecs[(i, k)] * roots[k] * zeta[k]).sum())
            .collect();
        let Some(t) = checker.min_scale(&HermitianMatrix::outer(&cand)) else {
            continue;
        };
        n_feasible += 1;
        let power = t * power_matrix.quad_form(&cand);
        if best.as_ref().is_none_or(|b| power < b.0) {
            best = Some((power, cand, t));
        }
    }
    let Some((power, cand, t)) = best else {
        return Err(Error::NoFeasibleCandidate { tried: n_samples });
    };
    let (power, t) = (power * (1.0 + INWARD_MARGIN), t * (1.0 + INWARD_MARGIN));
    Ok(ExtractionResult {
        w: cand.iter().map(|z| z * t.sqrt()).collect(),
        power,
        n_feasible,
        n_samples,
        source: Source::Randomized,
        scale: t,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conic::{ConicSolver, InteriorPoint, Status};
    use crate::design::{build, Method, SafeConstraint};
    use crate::linalg::CMat;
    use crate::model::{a0, avg_power_matrix, sample_channel, SystemParams};
    use crate::moment::{build_u, c_of_rho, coefficients, Order};

    fn params() -> SystemParams {
        SystemParams::uniform(4, 10.0, 10f64.powf(0.3), 0.1, 0.25, 0.25).unwrap()
    }

    /// Smallest feasible scale by bisection on the residual sign.
    fn bisect(checker: &dyn ConstraintChecker, w: &HermitianMatrix) -> Option<f64> {
        let mut hi = 1.0;
        while checker.residual(&w.scale(hi)) < 0.0 {
            hi *= 2.0;
            if hi > 1e12 {
                return None;
            }
        }
        let mut lo = 0.0;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if checker.residual(&w.scale(mid)) >= 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Some(hi)
    }

    #[test]
    fn moment_scale_matches_bisection_and_is_minimal() {
        let p = params();
        let sc = sample_channel(&p, 3, 0.1, 0.1);
        let u = build_u(&coefficients(&sc, &p, Order::Fourth).unwrap()).unwrap();
        let checker = SafeConstraint::Moment {
            sc: &sc,
            params: &p,
            u,
            c_rho: c_of_rho(p.rho).unwrap(),
        };
        let mut src = GaussianSource::new(1, 0);
        let (mut finite, mut infinite) = (0, 0);
        for _ in 0..200 {
            let w = HermitianMatrix::outer(&src.complex_normal_vec(4));
            let lin = a0(&w, &sc, &p).unwrap() + p.sigma_v2;
            let r = checker.homogeneous(&w) - lin;
            match checker.min_scale(&w) {
                Some(t) => {
                    finite += 1;
                    assert!(lin + r > 0.0);
                    assert!((t - p.sigma_v2 / (lin + r)).abs() <= 1e-12 * t);
                    let tb = bisect(&checker, &w).unwrap();
                    assert!((t - tb).abs() <= 1e-9 * t, "{t} vs {tb}");
                    assert!(checker.residual(&w.scale(t)).abs() <= 1e-9);
                    assert!(checker.residual(&w.scale(0.99 * t)) < 0.0);
                }
                None => {
                    infinite += 1;
                    assert!(checker.homogeneous(&w) <= 0.0);
                    assert!(bisect(&checker, &w).is_none());
                }
            }
        }
        assert!(finite > 0 && infinite > 0, "{finite} {infinite}");
    }

    fn relaxed(method: Method, seed: u64) -> Option<(HermitianMatrix, f64)> {
        let p = params();
        let sc = sample_channel(&p, seed, 0.1, 0.1);
        let nominal = sc.with_errors(0.0, 0.0);
        let (prog, _, param) = build(method, &sc, &nominal, &p).unwrap();
        let sol = InteriorPoint::default().solve(&prog).unwrap();
        (sol.status == Status::Optimal)
            .then(|| (param.to_matrix(&sol.x[..param.n_vars()]), sol.objective))
    }

    #[test]
    fn rank_one_optimum_reconstructs() {
        let p = params();
        for seed in 0..10 {
            let sc = sample_channel(&p, seed, 0.0, 0.0);
            let Some((w, obj)) = relaxed(Method::Nr, seed) else {
                continue;
            };
            if rank_of(&w, RANK_RATIO) != 1 {
                continue;
            }
            let checker = SafeConstraint::NonRobust {
                sc: &sc,
                params: &p,
            };
            let power = avg_power_matrix(&sc, &p);
            let e = extract(&w, &checker, &power, 1000, 0).unwrap();
            assert_eq!(e.source, Source::EigRankOne);
            let ww = HermitianMatrix::outer(&e.w);
            assert!(ww.sub(&w).frobenius_norm() <= 1e-6 * w.frobenius_norm());
            assert!((e.power - obj).abs() <= 1e-6 * obj);
            return;
        }
        panic!("no rank-one nonrobust optimum found");
    }

    #[test]
    fn randomized_extraction_invariants() {
        let p = params();
        let mut checked = 0;
        for seed in 0..20 {
            let sc = sample_channel(&p, seed, 0.1, 0.1);
            let Some((w, obj)) = relaxed(Method::M2, seed) else {
                continue;
            };
            let u = build_u(&coefficients(&sc, &p, Order::Second).unwrap()).unwrap();
            let checker = SafeConstraint::Moment {
                sc: &sc,
                params: &p,
                u,
                c_rho: c_of_rho(p.rho).unwrap(),
            };
            let power = avg_power_matrix(&sc, &p);
            // Force the randomized branch with a full-rank perturbation of W.
            let w = w.add(
                &HermitianMatrix::new(CMat::identity(4, 4))
                    .unwrap()
                    .scale(1e-3 * w.frobenius_norm()),
            );
            let Ok(e) = extract(&w, &checker, &power, 200, 7) else {
                continue;
            };
            assert_eq!(e.source, Source::Randomized);
            let ww = HermitianMatrix::outer(&e.w);
            assert!(checker.residual(&ww) >= -1e-6);
            assert!((e.power - power.dot(&ww)).abs() <= 1e-9 * e.power);
            assert!(e.power >= obj - 1e-6);
            assert!(e.n_feasible >= 1 && e.n_feasible <= 200);
            let again = extract(&w, &checker, &power, 200, 7).unwrap();
            assert_eq!(again.w, e.w);
            checked += 1;
        }
        assert!(checked > 0);
    }

    #[test]
    fn no_candidates_is_an_error() {
        let p = params();
        let sc = sample_channel(&p, 1, 0.1, 0.1);
        let checker = SafeConstraint::NonRobust {
            sc: &sc,
            params: &p,
        };
        let power = avg_power_matrix(&sc, &p);
        let w = HermitianMatrix::identity(4);
        assert!(matches!(
            extract(&w, &checker, &power, 0, 0),
            Err(Error::NoFeasibleCandidate { tried: 0 })
        ));
    }
}
