//! End-to-end designs: build a method's program, solve it, detect rank and
//! extract rank-one weights.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::str::FromStr;

use crate::bernstein::{build_b2_problem, decompose, margin};
use crate::conic::{rank_of, ConicProgram, ConicSolver, HermitianParam, Status, RANK_RATIO};
use crate::error::{Error, Result};
use crate::extract::{extract, ConstraintChecker, ExtractionResult};
use crate::linalg::HermitianMatrix;
use crate::model::{a0, avg_power_matrix, ChannelScenario, SystemParams};
use crate::moment::{build_nonrobust_problem, build_problem, Order, UMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Method {
    /// Non-robust: estimated channels taken as exact.
    #[serde(rename = "NR")]
    Nr,
    M4,
    M2,
    B2,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Nr, Method::M4, Method::M2, Method::B2];

    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Nr => "NR",
            Method::M4 => "M4",
            Method::M2 => "M2",
            Method::B2 => "B2",
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "NR" => Ok(Method::Nr),
            "M4" => Ok(Method::M4),
            "M2" => Ok(Method::M2),
            "B2" => Ok(Method::B2),
            other => Err(Error::InvalidParameter {
                name: "method",
                reason: format!("unknown method {other:?}"),
            }),
        }
    }
}

/// The deterministic constraint each method imposes on `W`.
pub enum SafeConstraint<'a> {
    NonRobust {
        sc: &'a ChannelScenario,
        params: &'a SystemParams,
    },
    Moment {
        sc: &'a ChannelScenario,
        params: &'a SystemParams,
        u: UMatrix,
        c_rho: f64,
    },
    Bernstein {
        sc: &'a ChannelScenario,
        params: &'a SystemParams,
    },
}

impl ConstraintChecker for SafeConstraint<'_> {
    fn homogeneous(&self, w: &HermitianMatrix) -> f64 {
        match self {
            SafeConstraint::NonRobust { sc, params } => {
                a0(w, sc, params).expect("dimensions checked") + params.sigma_v2
            }
            SafeConstraint::Moment {
                sc,
                params,
                u,
                c_rho,
            } => {
                a0(w, sc, params).expect("dimensions checked") + params.sigma_v2
                    - c_rho * u.norm_of(w)
            }
            SafeConstraint::Bernstein { sc, params } => {
                let form = decompose(w, sc, params).expect("dimensions checked");
                margin(&form, params.rho).expect("rho checked") + params.sigma_v2
            }
        }
    }

    fn offset(&self) -> f64 {
        match self {
            SafeConstraint::NonRobust { params, .. }
            | SafeConstraint::Moment { params, .. }
            | SafeConstraint::Bernstein { params, .. } => params.sigma_v2,
        }
    }
}

/// Program, constraint checker and parametrization of `W` for one method.
/// The non-robust design ignores the error scales entirely.
pub fn build<'a>(
    method: Method,
    sc: &'a ChannelScenario,
    nominal: &'a ChannelScenario,
    params: &'a SystemParams,
) -> Result<(ConicProgram, SafeConstraint<'a>, HermitianParam)> {
    let param = HermitianParam::new(params.relays());
    Ok(match method {
        Method::Nr => (
            build_nonrobust_problem(nominal, params)?,
            SafeConstraint::NonRobust {
                sc: nominal,
                params,
            },
            param,
        ),
        Method::M4 | Method::M2 => {
            let order = if method == Method::M4 {
                Order::Fourth
            } else {
                Order::Second
            };
            let p = build_problem(sc, params, order)?;
            (
                p.program,
                SafeConstraint::Moment {
                    sc,
                    params,
                    u: p.u,
                    c_rho: p.c_rho,
                },
                param,
            )
        }
        Method::B2 => (
            build_b2_problem(sc, params)?.program,
            SafeConstraint::Bernstein { sc, params },
            param,
        ),
    })
}

#[derive(Debug, Clone)]
pub struct DesignOptions {
    pub n_randomizations: usize,
    pub seed: u64,
}

impl Default for DesignOptions {
    fn default() -> Self {
        Self {
            n_randomizations: 1000,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct DesignResult {
    pub method: Method,
    pub status: Status,
    /// Relaxed optimum of the method's own objective.
    pub objective: f64,
    pub w_relaxed: Option<HermitianMatrix>,
    /// Full solver output, including `lambda`, `delta` for B2.
    pub x: Vec<f64>,
    pub rank: Option<usize>,
    pub extraction: Option<ExtractionResult>,
    /// Why extraction failed, when it did.
    pub extraction_error: Option<String>,
    pub iterations: usize,
}

impl DesignResult {
    pub fn feasible(&self) -> bool {
        self.status == Status::Optimal
    }

    pub fn w(&self) -> Option<&[Complex64]> {
        self.extraction.as_ref().map(|e| e.w.as_slice())
    }

    pub fn power(&self) -> Option<f64> {
        self.extraction.as_ref().map(|e| e.power)
    }
}

/// Solves `method` on `sc`. Extracted powers are measured with the true
/// average-power matrix (error scales of `sc`) for every method.
pub fn solve_design(
    method: Method,
    sc: &ChannelScenario,
    params: &SystemParams,
    solver: &dyn ConicSolver,
    opts: &DesignOptions,
) -> Result<DesignResult> {
    let nominal = sc.with_errors(0.0, 0.0);
    let (prog, checker, param) = build(method, sc, &nominal, params)?;
    let sol = solver.solve(&prog)?;
    let mut res = DesignResult {
        method,
        status: sol.status,
        objective: sol.objective,
        w_relaxed: None,
        x: sol.x.clone(),
        rank: None,
        extraction: None,
        extraction_error: None,
        iterations: sol.iterations,
    };
    if sol.status != Status::Optimal {
        return Ok(res);
    }
    let w = param.to_matrix(&sol.x[..param.n_vars()]);
    res.rank = Some(rank_of(&w, RANK_RATIO));
    let power = avg_power_matrix(sc, params);
    match extract(&w, &checker, &power, opts.n_randomizations, opts.seed) {
        Ok(e) => res.extraction = Some(e),
        Err(Error::NoFeasibleCandidate { tried }) => {
            res.extraction_error = Some(format!("no feasible candidate among {tried}"))
        }
        Err(e) => return Err(e),
    }
    res.w_relaxed = Some(w);
    Ok(res)
}
