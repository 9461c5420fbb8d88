use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::quadrature::gauss_legendre_rule;
use super::{Family, WeightedEnsemble};
use crate::error::{NclError, Result};
use crate::numerics::operator::{c64, check_dense_dim, CMatrix, CVector, Operator, PureState};
use crate::symspace::binomial;

/// Spin quantum number stored as `2s`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Spin {
    pub twice: u32,
}

impl Spin {
    pub fn from_twice(twice: u32) -> Self {
        Self { twice }
    }

    pub fn new(s: f64) -> Result<Self> {
        let t = 2.0 * s;
        if !(t.is_finite()) || t < 0.0 || (t - t.round()).abs() > 1e-12 || t > u32::MAX as f64 {
            return Err(NclError::invalid(format!("spin {s} is not a non-negative half-integer")));
        }
        Ok(Self { twice: t.round() as u32 })
    }

    pub fn value(self) -> f64 {
        self.twice as f64 / 2.0
    }

    pub fn dim(self) -> usize {
        self.twice as usize + 1
    }

    /// Spin of `n` copies restricted to the symmetric sector.
    pub fn times(self, n: usize) -> Self {
        Self { twice: self.twice * n as u32 }
    }
}

impl fmt::Display for Spin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.twice % 2 == 0 {
            write!(f, "{}", self.twice / 2)
        } else {
            write!(f, "{}/2", self.twice)
        }
    }
}

/// `|s,θ,φ⟩` in the basis `|s,p⟩`, `p = −s..s`, stored at index `k = s + p`.
pub fn spin_coherent_state(s: Spin, theta: f64, phi: f64) -> PureState {
    let two_s = s.twice as i32;
    let (sh, ch) = ((theta / 2.0).sin(), (theta / 2.0).cos());
    let amps = CVector::from_fn(s.dim(), |k, _| {
        let mag = (binomial(two_s as u64, k as u64) as f64).sqrt() * sh.powi(k as i32) * ch.powi(two_s - k as i32);
        let ang = -(k as f64) * phi;
        c64(mag * ang.cos(), mag * ang.sin())
    });
    PureState::from_parts(amps, vec![s.dim()])
}

/// `S_x, S_y, S_z` in the same basis ordering as [`spin_coherent_state`].
pub fn spin_operators(s: Spin) -> [Operator; 3] {
    let d = s.dim();
    let sv = s.value();
    let mut plus = CMatrix::zeros(d, d);
    for k in 0..d.saturating_sub(1) {
        let m = k as f64 - sv;
        plus[(k + 1, k)] = c64((sv * (sv + 1.0) - m * (m + 1.0)).sqrt(), 0.0);
    }
    let minus = plus.adjoint();
    let sx = (&plus + &minus).map(|z| z * 0.5);
    let sy = (&plus - &minus).map(|z| z * c64(0.0, -0.5));
    let sz = CMatrix::from_fn(d, d, |i, j| if i == j { c64(i as f64 - sv, 0.0) } else { c64(0.0, 0.0) });
    [
        Operator::from_parts(sx, vec![d]),
        Operator::from_parts(sy, vec![d]),
        Operator::from_parts(sz, vec![d]),
    ]
}

/// Isometric image of `|ns, K⟩` inside `(C^{2s+1})^{⊗n}`.
fn symmetric_embedding(s: Spin, n: usize, big_k: usize) -> CVector {
    let d = s.dim();
    let total = d.pow(n as u32);
    let two_s = s.twice as u64;
    let norm = (binomial(two_s * n as u64, big_k as u64) as f64).sqrt();
    CVector::from_fn(total, |x, _| {
        let mut rest = x;
        let mut sum = 0usize;
        let mut coeff = 1.0;
        for _ in 0..n {
            let k = rest % d;
            rest /= d;
            sum += k;
            coeff *= (binomial(two_s, k as u64) as f64).sqrt();
        }
        if sum == big_k {
            c64(coeff / norm, 0.0)
        } else {
            c64(0.0, 0.0)
        }
    })
}

/// Average of `|s,Ω⟩⟨s,Ω|^{⊗n}` over the sphere: the maximally mixed state
/// on the spin-`ns` sector of `(C^{2s+1})^{⊗n}`.
pub fn spin_rho0(s: Spin, n: usize) -> Result<Operator> {
    if n == 0 {
        return Err(NclError::invalid("n must be positive"));
    }
    let size = (s.dim() as u128).checked_pow(n as u32).unwrap_or(u128::MAX);
    check_dense_dim("spin moment", size)?;
    let big = s.times(n);
    let total = size as usize;
    let mut acc = CMatrix::zeros(total, total);
    for k in 0..big.dim() {
        let v = symmetric_embedding(s, n, k);
        acc += &v * v.adjoint();
    }
    let scale = 1.0 / big.dim() as f64;
    Ok(Operator::from_parts(acc.map(|z| z * scale), vec![s.dim(); n]))
}

/// Weights and angles `(w, θ, φ)` of the spin design grid: `2ns+1` uniform
/// azimuths times `⌊ns⌋+1` Gauss–Legendre polar nodes in `cos θ`.
pub fn spin_design_grid(s: Spin, n: usize) -> Result<Vec<(f64, f64, f64)>> {
    if n == 0 {
        return Err(NclError::invalid("n must be positive"));
    }
    if s.twice == 0 {
        return Err(NclError::invalid("spin must be positive"));
    }
    let big = s.times(n);
    let phases = big.dim();
    let polar = big.twice as usize / 2 + 1;
    let rule = gauss_legendre_rule(polar)?;
    let mut grid = Vec::with_capacity(phases * polar);
    for (&x, &w) in rule.nodes.iter().zip(&rule.weights) {
        let theta = x.clamp(-1.0, 1.0).acos();
        for k in 0..phases {
            let phi = std::f64::consts::TAU * k as f64 / phases as f64;
            grid.push((w / (2.0 * phases as f64), theta, phi));
        }
    }
    Ok(grid)
}

/// Exact spin-`s` coherent-state `n`-design on [`spin_design_grid`].
pub fn spin_coherent_design(s: Spin, n: usize) -> Result<WeightedEnsemble> {
    let elements = spin_design_grid(s, n)?
        .into_iter()
        .map(|(w, theta, phi)| (w, spin_coherent_state(s, theta, phi)))
        .collect();
    let mut params = BTreeMap::new();
    params.insert("s".to_string(), s.value());
    params.insert("n".to_string(), n as f64);
    WeightedEnsemble::new(Family::Spin, params, elements)
}

/// `Σ_i w_i |ns,Ω_i⟩⟨ns,Ω_i|` over the design grid, i.e. the design identity
/// evaluated in the `(2ns+1)`-dimensional representation.
pub fn spin_design_identity(s: Spin, n: usize) -> Result<Operator> {
    let big = s.times(n);
    let d = big.dim();
    let mut acc = CMatrix::zeros(d, d);
    for (w, theta, phi) in spin_design_grid(s, n)? {
        let v = spin_coherent_state(big, theta, phi);
        acc += v.amplitudes() * v.amplitudes().adjoint() * c64(w, 0.0);
    }
    Ok(Operator::from_parts(acc, vec![d]))
}
