use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Cone tag of a constraint block. `Psd(k)` acts on `k x k` symmetric
/// matrices stored by [`svec`](super::svec), so its vector dimension is `k(k+1)/2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Cone {
    Zero(usize),
    Nonneg(usize),
    Soc(usize),
    Psd(usize),
}

impl Cone {
    pub fn dim(&self) -> usize {
        match *self {
            Cone::Zero(n) | Cone::Nonneg(n) | Cone::Soc(n) => n,
            Cone::Psd(k) => k * (k + 1) / 2,
        }
    }
}

/// Constraint `a x + b ∈ cone`.
#[derive(Debug, Clone)]
pub struct ConstraintBlock {
    pub name: String,
    pub cone: Cone,
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
}

impl ConstraintBlock {
    pub fn new(name: impl Into<String>, cone: Cone, a: DMatrix<f64>, b: DVector<f64>) -> Self {
        Self {
            name: name.into(),
            cone,
            a,
            b,
        }
    }

    /// Builds the block from an affine map given as a closure, sampled at the
    /// origin and at each unit vector.
    pub fn from_affine(
        name: impl Into<String>,
        cone: Cone,
        n: usize,
        f: impl Fn(&[f64]) -> Vec<f64>,
    ) -> Self {
        let dim = cone.dim();
        let mut x = vec![0.0; n];
        let b0 = f(&x);
        assert_eq!(
            b0.len(),
            dim,
            "affine map output does not match cone dimension"
        );
        let mut a = DMatrix::zeros(dim, n);
        for j in 0..n {
            x[j] = 1.0;
            let col = f(&x);
            x[j] = 0.0;
            for i in 0..dim {
                a[(i, j)] = col[i] - b0[i];
            }
        }
        Self::new(name, cone, a, DVector::from_vec(b0))
    }

    pub fn eval(&self, x: &[f64]) -> DVector<f64> {
        &self.a * DVector::from_column_slice(x) + &self.b
    }
}

/// Solver-agnostic conic program: minimize `objective . x` over constraint blocks.
#[derive(Debug, Clone)]
pub struct ConicProgram {
    pub n: usize,
    pub objective: Vec<f64>,
    pub blocks: Vec<ConstraintBlock>,
    pub var_names: Vec<String>,
}

impl ConicProgram {
    pub fn new(objective: Vec<f64>, var_names: Vec<String>) -> Self {
        Self {
            n: objective.len(),
            objective,
            blocks: Vec::new(),
            var_names,
        }
    }

    pub fn push(&mut self, block: ConstraintBlock) {
        self.blocks.push(block);
    }

    pub fn validate(&self) -> Result<()> {
        if self.objective.len() != self.n {
            return Err(Error::MalformedProgram(format!(
                "objective has length {} for {} variables",
                self.objective.len(),
                self.n
            )));
        }
        if !self.var_names.is_empty() && self.var_names.len() != self.n {
            return Err(Error::MalformedProgram("variable name count".into()));
        }
        for blk in &self.blocks {
            let d = blk.cone.dim();
            if blk.a.nrows() != d || blk.b.len() != d || blk.a.ncols() != self.n {
                return Err(Error::MalformedProgram(format!(
                    "block {:?}: map is {}x{} + {}, cone dimension {d}, n = {}",
                    blk.name,
                    blk.a.nrows(),
                    blk.a.ncols(),
                    blk.b.len(),
                    self.n
                )));
            }
            if matches!(blk.cone, Cone::Soc(0)) {
                return Err(Error::MalformedProgram(format!(
                    "block {:?}: empty SOC",
                    blk.name
                )));
            }
            if blk.a.iter().chain(blk.b.iter()).any(|v| !v.is_finite()) {
                return Err(Error::MalformedProgram(format!(
                    "block {:?}: non-finite data",
                    blk.name
                )));
            }
        }
        if self.objective.iter().any(|v| !v.is_finite()) {
            return Err(Error::MalformedProgram("non-finite objective".into()));
        }
        Ok(())
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective.iter().zip(x).map(|(c, v)| c * v).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Status {
    Optimal,
    Infeasible,
    Unbounded,
    MaxIter,
    NumericalFailure,
}

impl Status {
    pub fn as_str(&self) -> &'static str {
        match self {
            Status::Optimal => "optimal",
            Status::Infeasible => "infeasible",
            Status::Unbounded => "unbounded",
            Status::MaxIter => "max_iter",
            Status::NumericalFailure => "numerical_failure",
        }
    }
}

impl std::fmt::Display for Status {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub status: Status,
    pub x: Vec<f64>,
    pub objective: f64,
    /// Lower bound from the dual iterate (meaningful when optimal).
    pub dual_objective: f64,
    /// Cone-membership violation of each block at `x`, in block order.
    pub residuals: Vec<f64>,
    /// Dual multipliers per block (optimal), or a normalized infeasibility certificate.
    pub duals: Option<Vec<Vec<f64>>>,
    pub iterations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub tol: f64,
    pub max_iter: usize,
    pub step_fraction: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iter: 200,
            step_fraction: 0.99,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) || !(self.step_fraction > 0.0 && self.step_fraction < 1.0) {
            return Err(Error::InvalidParameter {
                name: "solver",
                reason: "tol must be > 0 and step fraction in (0, 1)".into(),
            });
        }
        Ok(())
    }
}

/// Pluggable backend boundary.
pub trait ConicSolver: Sync {
    fn solve(&self, prog: &ConicProgram) -> Result<Solution>;
}
