use serde::Serialize;

use crate::error::{NclError, Result};

/// Nodes and weights of a one-dimensional Gauss rule on [-1, 1].
#[derive(Clone, Debug, Serialize)]
pub struct QuadratureRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }
}

/// Second-kind Chebyshev rule for the weight `√(1−x²)`: exact up to degree `2l−1`.
pub fn gauss_chebyshev_rule(l: usize) -> Result<QuadratureRule> {
    if l == 0 {
        return Err(NclError::invalid("quadrature needs at least one node"));
    }
    let h = std::f64::consts::PI / (l + 1) as f64;
    let nodes = (1..=l).map(|j| (j as f64 * h).cos()).collect();
    let weights = (1..=l).map(|j| h * (j as f64 * h).sin().powi(2)).collect();
    Ok(QuadratureRule { nodes, weights })
}

/// Legendre polynomial `P_l(x)` and its derivative.
fn legendre(l: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if l == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=l {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let dp = l as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Gauss–Legendre rule for the unit weight: exact up to degree `2l−1`.
/// Nodes are returned in decreasing order.
pub fn gauss_legendre_rule(l: usize) -> Result<QuadratureRule> {
    if l == 0 {
        return Err(NclError::invalid("quadrature needs at least one node"));
    }
    let mut nodes = Vec::with_capacity(l);
    let mut weights = Vec::with_capacity(l);
    for i in 1..=l {
        let mut x = (std::f64::consts::PI * (i as f64 - 0.25) / (l as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre(l, x);
            let step = p / dp;
            x -= step;
            if step.abs() < 1e-16 {
                break;
            }
        }
        let (_, dp) = legendre(l, x);
        nodes.push(x);
        weights.push(2.0 / ((1.0 - x * x) * dp * dp));
    }
    Ok(QuadratureRule { nodes, weights })
}
