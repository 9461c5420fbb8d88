use nalgebra::SymmetricEigen;

use super::operator::{CMatrix, Operator, PureState, C64};
use crate::error::{NclError, Result};

/// Eigenvalues in (-CLIP_TOL, 0) are treated as exact zeros.
pub const CLIP_TOL: f64 = 1e-12;
/// Eigenvalues below -PSD_TOL mean the operator is not PSD.
pub const PSD_TOL: f64 = 1e-10;

/// Spectrum of a Hermitian matrix, eigenvalues ascending with matching
/// eigenvector columns.
#[derive(Clone, Debug)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    pub vectors: CMatrix,
}

impl HermitianEigen {
    /// Rebuilds `Σ f(λ_i) |v_i⟩⟨v_i|`.
    pub fn apply<F: Fn(f64) -> f64>(&self, f: F) -> CMatrix {
        let d = self.values.len();
        let mut scaled = self.vectors.clone();
        for (k, &lam) in self.values.iter().enumerate() {
            let fk = f(lam);
            for i in 0..d {
                scaled[(i, k)] *= fk;
            }
        }
        scaled * self.vectors.adjoint()
    }
}

/// Eigendecomposition of the Hermitian part of `mat`.
pub fn hermitian_eigen(mat: &CMatrix) -> HermitianEigen {
    let herm = (mat + mat.adjoint()).map(|z| z * 0.5);
    let eig = SymmetricEigen::new(herm);
    let d = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order
        .iter()
        .map(|&k| {
            let v = eig.eigenvalues[k];
            if (-CLIP_TOL..0.0).contains(&v) {
                0.0
            } else {
                v
            }
        })
        .collect();
    let vectors = CMatrix::from_fn(d, d, |i, j| eig.eigenvectors[(i, order[j])]);
    HermitianEigen { values, vectors }
}

pub fn eigenvalues(op: &Operator) -> Vec<f64> {
    hermitian_eigen(op.matrix()).values
}

pub fn min_eigenvalue(op: &Operator) -> f64 {
    eigenvalues(op).first().copied().unwrap_or(0.0)
}

pub fn max_eigenvalue(op: &Operator) -> f64 {
    eigenvalues(op).last().copied().unwrap_or(0.0)
}

/// Applies a real function to the spectrum of a Hermitian operator.
pub fn spectral_map<F: Fn(f64) -> f64>(op: &Operator, f: F) -> Operator {
    let eig = hermitian_eigen(op.matrix());
    Operator::from_parts(eig.apply(f), op.factor_dims().to_vec())
}

/// `exp(−i t H)` for Hermitian `H`.
pub fn unitary_exp(h: &Operator, t: f64) -> Operator {
    let eig = hermitian_eigen(h.matrix());
    let d = eig.values.len();
    let mut scaled = eig.vectors.clone();
    for (k, &lam) in eig.values.iter().enumerate() {
        let phase = C64::new((t * lam).cos(), -(t * lam).sin());
        for i in 0..d {
            scaled[(i, k)] *= phase;
        }
    }
    Operator::from_parts(scaled * eig.vectors.adjoint(), h.factor_dims().to_vec())
}

pub fn psd_sqrt(a: &Operator) -> Result<Operator> {
    let eig = hermitian_eigen(a.matrix());
    let min = eig.values.first().copied().unwrap_or(0.0);
    if min < -PSD_TOL {
        return Err(NclError::NotPsd { min_eigenvalue: min });
    }
    Ok(Operator::from_parts(
        eig.apply(|x| x.max(0.0).sqrt()),
        a.factor_dims().to_vec(),
    ))
}

/// Moore-Penrose inverse of a PSD operator restricted to eigenvalues above `tol`,
/// raised to the given power.
pub fn psd_pinv_power(a: &Operator, power: f64, tol: f64) -> Operator {
    spectral_map(a, |x| if x > tol { x.powf(power) } else { 0.0 })
}

fn same_dim(a: &Operator, b: &Operator) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(NclError::DimMismatch(format!("{} vs {}", a.dim(), b.dim())));
    }
    Ok(())
}

/// Checks the density-operator invariants: Hermitian, unit trace, PSD.
pub fn check_density(op: &Operator) -> Result<()> {
    let herm = op.hermitian_deviation();
    if herm > PSD_TOL {
        return Err(NclError::NotDensity(format!("hermitian deviation {herm:e}")));
    }
    let tr = op.trace();
    if (tr.re - 1.0).abs() > PSD_TOL || tr.im.abs() > PSD_TOL {
        return Err(NclError::NotDensity(format!("trace {tr}")));
    }
    let min = min_eigenvalue(op);
    if min < -PSD_TOL {
        return Err(NclError::NotDensity(format!("minimum eigenvalue {min:e}")));
    }
    Ok(())
}

/// Square root with eigenvalues below the round-off floor `dim·ε·λ_max` set to zero.
fn floored_sqrt(a: &Operator) -> Result<CMatrix> {
    let eig = hermitian_eigen(a.matrix());
    let min = eig.values.first().copied().unwrap_or(0.0);
    if min < -PSD_TOL {
        return Err(NclError::NotPsd { min_eigenvalue: min });
    }
    let max = eig.values.last().copied().unwrap_or(0.0).max(0.0);
    let floor = eig.values.len() as f64 * f64::EPSILON * max;
    Ok(eig.apply(|x| if x > floor { x.sqrt() } else { 0.0 }))
}

/// `(Tr|√ρ√σ|)²`, the trace norm taken from singular values of `√ρ√σ`.
///
/// Also accepts unnormalized PSD arguments.
pub fn uhlmann_fidelity(rho: &Operator, sigma: &Operator) -> Result<f64> {
    same_dim(rho, sigma)?;
    let product = floored_sqrt(rho)? * floored_sqrt(sigma)?;
    let norm: f64 = product.singular_values().iter().sum();
    Ok(norm * norm)
}

/// `⟨ψ|ρ|ψ⟩`
pub fn fidelity_with_pure(rho: &Operator, psi: &PureState) -> Result<f64> {
    if rho.dim() != psi.dim() {
        return Err(NclError::DimMismatch(format!(
            "{} vs {}",
            rho.dim(),
            psi.dim()
        )));
    }
    let v = psi.amplitudes();
    Ok(v.dotc(&(rho.matrix() * v)).re.max(0.0))
}

pub fn trace_distance(rho: &Operator, sigma: &Operator) -> Result<f64> {
    let diff = rho.sub(sigma)?;
    Ok(0.5 * eigenvalues(&diff).iter().map(|x| x.abs()).sum::<f64>())
}

/// `Σ_i |v_i⟩⟨v_i|` over the columns of `vectors` whose eigenvalue exceeds `tol`.
pub fn support_projector(op: &Operator, tol: f64) -> Operator {
    spectral_map(op, |x| if x > tol { 1.0 } else { 0.0 })
}
