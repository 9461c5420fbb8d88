//! Weighted ensembles of pure states and the exact designs used throughout:
//! multi-phase grids, spin coherent grids, Pauli/Weyl Choi states, MUBs.

pub mod clifford;
pub mod mub;
pub mod quadrature;
pub mod spin;

use std::collections::BTreeMap;
use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{NclError, Result};
use crate::numerics::operator::{c64, check_dense_dim, CMatrix, CVector, Operator, PureState};
use crate::numerics::{hermitian_eigen, rng_for};
use crate::schurweyl::{choi_rho0, choi_state};
use crate::symspace::{rho0_general, rho0_multiphase};

pub use clifford::{canonical_phase, clifford_group, frame_potential};
pub use mub::{mub_bases, mub_bases_prime, mub_design, mub_design_dim, mub_design_prime};
pub use quadrature::{gauss_chebyshev_rule, gauss_legendre_rule, QuadratureRule};
pub use spin::{
    spin_coherent_design, spin_coherent_state, spin_design_grid, spin_design_identity, spin_operators, spin_rho0,
    Spin,
};

/// Largest ensemble size any constructor will enumerate.
pub const MAX_ENSEMBLE_SIZE: u128 = 1 << 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    /// Haar-random pure states, realized by an exact design.
    General,
    /// Computational basis, a 1-design for general states.
    Computational,
    Multiphase,
    Spin,
    Mub,
    PauliChoi,
    WeylChoi,
    Custom,
}

impl Family {
    pub fn is_choi(self) -> bool {
        matches!(self, Family::PauliChoi | Family::WeylChoi)
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Family::General => "general",
            Family::Computational => "computational",
            Family::Multiphase => "multiphase",
            Family::Spin => "spin",
            Family::Mub => "mub",
            Family::PauliChoi => "pauli-choi",
            Family::WeylChoi => "weyl-choi",
            Family::Custom => "custom",
        };
        f.write_str(s)
    }
}

/// Finite ensemble `{(p_φ, |φ⟩)}` with family metadata.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightedEnsemble {
    family: Family,
    params: BTreeMap<String, f64>,
    elements: Vec<(f64, PureState)>,
}

impl WeightedEnsemble {
    pub const WEIGHT_TOL: f64 = 1e-12;

    pub fn new(family: Family, params: BTreeMap<String, f64>, elements: Vec<(f64, PureState)>) -> Result<Self> {
        let first = elements
            .first()
            .ok_or_else(|| NclError::invalid("ensemble must be non-empty"))?;
        let dim = first.1.dim();
        let mut total = 0.0;
        for (w, s) in &elements {
            if !(w.is_finite() && *w > 0.0) {
                return Err(NclError::invalid(format!("weight {w} is not positive")));
            }
            if s.dim() != dim {
                return Err(NclError::DimMismatch("ensemble states differ in dimension".into()));
            }
            if (s.norm() - 1.0).abs() > PureState::NORM_TOL {
                return Err(NclError::invalid("ensemble state is not normalized"));
            }
            total += w;
        }
        if (total - 1.0).abs() > Self::WEIGHT_TOL {
            return Err(NclError::invalid(format!("weights sum to {total}, not 1")));
        }
        Ok(Self {
            family,
            params,
            elements,
        })
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn params(&self) -> &BTreeMap<String, f64> {
        &self.params
    }

    pub fn param(&self, key: &str) -> Option<f64> {
        self.params.get(key).copied()
    }

    pub fn elements(&self) -> &[(f64, PureState)] {
        &self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    /// Dimension of each member state (`d`, or `d²` for Choi states).
    pub fn base_dim(&self) -> usize {
        self.elements[0].1.dim()
    }

    /// Local dimension `d` the family is defined over.
    pub fn local_dim(&self) -> usize {
        if self.family.is_choi() {
            self.elements[0].1.factor_dims()[0]
        } else {
            self.base_dim()
        }
    }

    /// `ρ_W^l = Σ p_φ |φ⟩⟨φ|^{⊗l}`
    pub fn moment(&self, l: usize) -> Result<Operator> {
        if l == 0 {
            return Err(NclError::invalid("moment order must be positive"));
        }
        let size = (self.base_dim() as u128).checked_pow(l as u32).unwrap_or(u128::MAX);
        check_dense_dim("ensemble moment", size)?;
        let dims: Vec<usize> = (0..l).flat_map(|_| self.elements[0].1.factor_dims().to_vec()).collect();
        let total = size as usize;
        let mut cols = CMatrix::zeros(total, self.len());
        for (k, (w, s)) in self.elements.iter().enumerate() {
            let v = s.tensor_power(l)?;
            let sw = w.sqrt();
            cols.set_column(k, &v.amplitudes().map(|z| z * sw));
        }
        Ok(Operator::from_parts(&cols * cols.adjoint(), dims))
    }

    /// The state `ρ_W^n` should reproduce for this family.
    pub fn reference_moment(&self, n: usize) -> Result<Operator> {
        let d = self.local_dim();
        match self.family {
            Family::Multiphase => rho0_multiphase(d, n),
            Family::General | Family::Computational | Family::Mub => rho0_general(d, n),
            Family::Spin => spin_rho0(Spin::from_twice(d as u32 - 1), n),
            Family::PauliChoi | Family::WeylChoi => choi_rho0(d, n),
            Family::Custom => Err(NclError::Unsupported("custom ensembles have no reference moment".into())),
        }
    }

    pub fn with_family(mut self, family: Family) -> Self {
        self.family = family;
        self
    }
}

#[derive(Serialize, Deserialize)]
struct ElementRepr {
    weight: f64,
    state: PureState,
}

#[derive(Serialize, Deserialize)]
struct EnsembleRepr {
    family: Family,
    params: BTreeMap<String, f64>,
    elements: Vec<ElementRepr>,
}

impl Serialize for WeightedEnsemble {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        EnsembleRepr {
            family: self.family,
            params: self.params.clone(),
            elements: self
                .elements
                .iter()
                .map(|(w, s)| ElementRepr {
                    weight: *w,
                    state: s.clone(),
                })
                .collect(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for WeightedEnsemble {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error;
        let repr = EnsembleRepr::deserialize(deserializer)?;
        let elements = repr.elements.into_iter().map(|e| (e.weight, e.state)).collect();
        WeightedEnsemble::new(repr.family, repr.params, elements).map_err(D::Error::custom)
    }
}

fn uniform_ensemble(family: Family, params: BTreeMap<String, f64>, states: Vec<PureState>) -> Result<WeightedEnsemble> {
    let w = 1.0 / states.len() as f64;
    WeightedEnsemble::new(family, params, states.into_iter().map(|s| (w, s)).collect())
}

fn params_of(pairs: &[(&str, f64)]) -> BTreeMap<String, f64> {
    pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

/// `{|i⟩}` with uniform weights: a 1-design for general states.
pub fn computational_design(d: usize) -> Result<WeightedEnsemble> {
    if d == 0 {
        return Err(NclError::invalid("dimension must be positive"));
    }
    let states = (0..d).map(|i| PureState::basis(&[d], i)).collect::<Result<Vec<_>>>()?;
    uniform_ensemble(Family::Computational, params_of(&[("d", d as f64)]), states)
}

/// Smallest built-in exact `n`-design for general states in dimension `d`.
pub fn general_design(d: usize, n: usize) -> Result<WeightedEnsemble> {
    let w = match n {
        1 => computational_design(d)?,
        2 => mub_design_dim(d)?,
        _ => {
            return Err(NclError::Unsupported(format!(
                "no built-in {n}-design for general states"
            )))
        }
    };
    let mut params = w.params().clone();
    params.insert("d".to_string(), d as f64);
    params.insert("n".to_string(), n as f64);
    let elements = w.elements().to_vec();
    WeightedEnsemble::new(Family::General, params, elements)
}

/// `|φ_k⟩ = (1/√d) Σ_i e^{iθ_0 k_i}|i⟩` for all `k ∈ Z_{n+1}^d`, `θ_0 = 2π/(n+1)`.
pub fn multiphase_design(d: usize, n: usize) -> Result<WeightedEnsemble> {
    if d == 0 {
        return Err(NclError::invalid("dimension must be positive"));
    }
    let base = n + 1;
    let size = (base as u128).checked_pow(d as u32).unwrap_or(u128::MAX);
    if size > MAX_ENSEMBLE_SIZE {
        return Err(NclError::guard("(n+1)^d", size, MAX_ENSEMBLE_SIZE));
    }
    let theta0 = std::f64::consts::TAU / base as f64;
    let amp = 1.0 / (d as f64).sqrt();
    let mut states = Vec::with_capacity(size as usize);
    for idx in 0..size as usize {
        let mut rest = idx;
        let mut ks = vec![0usize; d];
        for slot in ks.iter_mut().rev() {
            *slot = rest % base;
            rest /= base;
        }
        let v = CVector::from_fn(d, |i, _| {
            let ang = theta0 * ks[i] as f64;
            c64(amp * ang.cos(), amp * ang.sin())
        });
        states.push(PureState::from_parts(v, vec![d]));
    }
    uniform_ensemble(
        Family::Multiphase,
        params_of(&[("d", d as f64), ("n", n as f64), ("theta0", theta0)]),
        states,
    )
}

/// `σ_{k,l} = ⊗_i X^{k_i} Z^{l_i}` on `r` qubits, `k, l` read as bit strings.
pub fn pauli_operator(r: usize, k: usize, l: usize) -> Operator {
    let mut op = Operator::identity(&[1]);
    for q in 0..r {
        let bit = r - 1 - q;
        let x = if (k >> bit) & 1 == 1 {
            crate::numerics::gates::pauli_x()
        } else {
            Operator::identity(&[2])
        };
        let z = if (l >> bit) & 1 == 1 {
            crate::numerics::gates::pauli_z()
        } else {
            Operator::identity(&[2])
        };
        let local = x.matmul(&z).expect("2x2");
        op = if q == 0 { local } else { op.tensor(&local) };
    }
    let d = 1usize << r;
    op.with_factor_dims(vec![d]).expect("qubit register")
}

/// The `4^r` Choi states `(σ_{k,l} ⊗ I)|Φ⟩` with uniform weights, `(out, in)` ordering.
pub fn pauli_choi_design(r: usize) -> Result<WeightedEnsemble> {
    if r == 0 || r > 2 {
        return Err(NclError::guard("Pauli-Choi register size r", r as u128, 2));
    }
    let d = 1usize << r;
    let mut states = Vec::with_capacity(d * d);
    for k in 0..d {
        for l in 0..d {
            states.push(choi_state(&pauli_operator(r, k, l))?);
        }
    }
    uniform_ensemble(
        Family::PauliChoi,
        params_of(&[("r", r as f64), ("d", d as f64)]),
        states,
    )
}

/// Clock and shift `X^a Z^b` in dimension `d`.
pub fn weyl_operator(d: usize, a: usize, b: usize) -> Operator {
    let mut m = CMatrix::zeros(d, d);
    for j in 0..d {
        let ang = std::f64::consts::TAU * ((b * j) % d) as f64 / d as f64;
        m[((j + a) % d, j)] = c64(ang.cos(), ang.sin());
    }
    Operator::from_parts(m, vec![d])
}

/// The `d²` Choi states of the Weyl operators: an exact Choi 1-design in any dimension.
pub fn weyl_choi_design(d: usize) -> Result<WeightedEnsemble> {
    if d == 0 || d * d > 64 {
        return Err(NclError::guard("Weyl-Choi dimension d", d as u128, 8));
    }
    let mut states = Vec::with_capacity(d * d);
    for a in 0..d {
        for b in 0..d {
            states.push(choi_state(&weyl_operator(d, a, b))?);
        }
    }
    uniform_ensemble(Family::WeylChoi, params_of(&[("d", d as f64)]), states)
}

/// Deviation of `ρ_W^n` from its target.
#[derive(Clone, Debug, Serialize)]
pub struct DesignCheckResult {
    pub residual_frobenius: f64,
    /// Smallest ε with `(1−ε)ρ_0 ≤ ρ_W^n ≤ (1+ε)ρ_0`; `None` when `ρ_W^n`
    /// has weight outside the support of `ρ_0`, so no finite ε exists.
    pub epsilon_estimate: Option<f64>,
    /// Largest eigenvalue of `ρ_W^n` compressed to the kernel of `ρ_0`.
    pub support_leakage: f64,
    pub target: String,
}

pub const SUPPORT_TOL: f64 = 1e-12;

pub fn design_residual(w: &WeightedEnsemble, n: usize, target: &Operator, label: &str) -> Result<DesignCheckResult> {
    let moment = w.moment(n)?;
    if moment.dim() != target.dim() {
        return Err(NclError::DimMismatch(format!(
            "moment {} vs target {}",
            moment.dim(),
            target.dim()
        )));
    }
    if target.frobenius_norm() < SUPPORT_TOL {
        return Err(NclError::invalid("target ρ_0 is zero"));
    }
    let residual_frobenius = moment.frobenius_distance(target)?;

    let eig = hermitian_eigen(target.matrix());
    let support: Vec<usize> = (0..eig.values.len()).filter(|&k| eig.values[k] > SUPPORT_TOL).collect();
    let kernel: Vec<usize> = (0..eig.values.len()).filter(|&k| eig.values[k] <= SUPPORT_TOL).collect();
    let m = moment.matrix();
    let compress = |cols: &[usize], scale: &dyn Fn(usize) -> f64| -> CMatrix {
        let v = CMatrix::from_fn(m.nrows(), cols.len(), |i, j| eig.vectors[(i, cols[j])] * scale(cols[j]));
        v.adjoint() * m * v
    };
    let support_leakage = if kernel.is_empty() {
        0.0
    } else {
        hermitian_eigen(&compress(&kernel, &|_| 1.0))
            .values
            .last()
            .copied()
            .unwrap_or(0.0)
            .max(0.0)
    };
    let epsilon_estimate = if support_leakage > SUPPORT_TOL {
        None
    } else {
        let whitened = compress(&support, &|k| 1.0 / eig.values[k].sqrt());
        let rel = hermitian_eigen(&whitened).values;
        Some(rel.iter().map(|x| (x - 1.0).abs()).fold(0.0, f64::max))
    };
    Ok(DesignCheckResult {
        residual_frobenius,
        epsilon_estimate,
        support_leakage,
        target: label.to_string(),
    })
}

/// Multiplies each weight by an independent factor uniform in `[1−δ, 1+δ]`
/// and renormalizes.
pub fn perturbed_design(w: &WeightedEnsemble, delta: f64, seed: u64) -> Result<WeightedEnsemble> {
    if !(0.0..1.0).contains(&delta) {
        return Err(NclError::invalid(format!("perturbation δ = {delta} must lie in [0, 1)")));
    }
    if delta == 0.0 {
        return Ok(w.clone());
    }
    let mut rng = rng_for(seed, 0);
    let mut weights: Vec<f64> = w
        .elements()
        .iter()
        .map(|(p, _)| p * (1.0 + delta * (2.0 * rng.random::<f64>() - 1.0)))
        .collect();
    let total: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|x| *x /= total);
    let mut params = w.params().clone();
    params.insert("delta".to_string(), delta);
    let elements = weights
        .into_iter()
        .zip(w.elements().iter().map(|(_, s)| s.clone()))
        .collect();
    WeightedEnsemble::new(w.family(), params, elements)
}
