//! Numerical checks of two operator inequalities used by the fidelity bounds:
//! `ρ_AB ≤ dim(A) I_A ⊗ ρ_B` and `F(ρ, Σ p_i ψ_i) ≤ N max_i F(ρ, ψ_i)`.

use serde::Serialize;

use super::linalg::{fidelity_with_pure, min_eigenvalue, uhlmann_fidelity, PSD_TOL};
use super::operator::Operator;
use super::random::{random_density, rng_for};
use crate::ensembles::WeightedEnsemble;
use crate::error::{NclError, Result};

#[derive(Clone, Debug, Serialize)]
pub struct PinchingReport {
    /// Smallest eigenvalue of `dim(A) I ⊗ ρ_B − ρ_AB` over every instance checked.
    pub min_eigenvalue: f64,
    /// Value for the supplied operator alone.
    pub input_min_eigenvalue: f64,
    pub instances: usize,
    pub pass: bool,
}

fn pinching_gap(rho: &Operator, dim_a: usize, dim_b: usize) -> Result<f64> {
    let bipartite = rho.clone().with_factor_dims(vec![dim_a, dim_b])?;
    let rho_b = bipartite.partial_trace(&[1])?;
    let bound = Operator::identity(&[dim_a]).tensor(&rho_b).scale(dim_a as f64);
    Ok(min_eigenvalue(&bound.sub(&bipartite)?))
}

/// Evaluates the pinching gap on `rho` and on `trials` random densities of the same shape.
pub fn pinching_check(rho: &Operator, dim_a: usize, trials: usize, seed: u64) -> Result<PinchingReport> {
    if dim_a == 0 || rho.dim() % dim_a != 0 {
        return Err(NclError::DimMismatch(format!(
            "dimension {} is not divisible by dim(A) = {}",
            rho.dim(),
            dim_a
        )));
    }
    let dim_b = rho.dim() / dim_a;
    let input = pinching_gap(rho, dim_a, dim_b)?;
    let mut worst = input;
    for t in 0..trials {
        let mut rng = rng_for(seed, t as u64);
        let sample = random_density(&[dim_a, dim_b], &mut rng);
        worst = worst.min(pinching_gap(&sample, dim_a, dim_b)?);
    }
    Ok(PinchingReport {
        min_eigenvalue: worst,
        input_min_eigenvalue: input,
        instances: trials + 1,
        pass: worst >= -PSD_TOL,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct RankInequalityReport {
    /// `F(ρ, σ)` with `σ = Σ p_i |ψ_i⟩⟨ψ_i|`.
    pub lhs: f64,
    /// `N max_i F(ρ, |ψ_i⟩)`
    pub rhs: f64,
    pub pass: bool,
}

pub fn rank_inequality_check(rho: &Operator, ensemble: &WeightedEnsemble) -> Result<RankInequalityReport> {
    let sigma = ensemble.moment(1)?;
    let lhs = uhlmann_fidelity(rho, &sigma)?;
    let mut best: f64 = 0.0;
    for (_, psi) in ensemble.elements() {
        best = best.max(fidelity_with_pure(rho, psi)?);
    }
    let rhs = ensemble.len() as f64 * best;
    Ok(RankInequalityReport {
        lhs,
        rhs,
        pass: lhs <= rhs + PSD_TOL,
    })
}
