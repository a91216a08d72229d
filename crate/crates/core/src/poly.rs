//! Polynomial interpolation used by truncation oracles in tests.

use nalgebra::{DMatrix, DVector};

/// Coefficients `c_0..c_{n-1}` of the unique degree `n-1` polynomial through `(nodes, vals)`.
pub(crate) fn fit_exact(nodes: &[f64], vals: &[f64]) -> Vec<f64> {
    let n = nodes.len();
    let v = DMatrix::from_fn(n, n, |i, j| nodes[i].powi(j as i32));
    let b = DVector::from_column_slice(vals);
    v.lu()
        .solve(&b)
        .expect("distinct nodes")
        .iter()
        .copied()
        .collect()
}

/// Sum of the degree `<= 2` coefficients, i.e. the quadratic truncation evaluated at 1.
pub(crate) fn quadratic_truncation_at_one(f: impl Fn(f64) -> f64) -> f64 {
    let nodes = [-1.5, -1.0, -0.5, 0.5, 1.0, 1.5];
    let vals: Vec<f64> = nodes.iter().map(|&t| f(t)).collect();
    let c = fit_exact(&nodes, &vals);
    c[0] + c[1] + c[2]
}
