//! Symmetric subspace of `(C^d)^{⊗n}`: occupation multi-indices, the
//! orthonormal type basis `|α⟩`, `P_sym` and the two invariant states
//! used for general and multi-phase ensembles.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{NclError, Result};
use crate::numerics::operator::{c64, check_dense_dim, CMatrix, CVector, Operator, PureState};

/// Largest `d^n` for which computational-basis vectors are built.
pub const MAX_STRING_SPACE: u128 = 1 << 20;

/// Occupation numbers `α = (α_1, …, α_d)` with `Σ α_i = n`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MultiIndex {
    parts: Vec<usize>,
}

impl MultiIndex {
    pub fn new(parts: Vec<usize>) -> Self {
        Self { parts }
    }

    pub fn parts(&self) -> &[usize] {
        &self.parts
    }

    pub fn order(&self) -> usize {
        self.parts.iter().sum()
    }

    /// `n!/α!`, the number of strings of this type.
    pub fn multinomial(&self) -> u128 {
        let mut out: u128 = 1;
        let mut seen = 0u128;
        for &a in &self.parts {
            for k in 1..=a as u128 {
                seen += 1;
                out = out * seen / k;
            }
        }
        out
    }
}

pub fn binomial(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut out: u128 = 1;
    for i in 0..k as u128 {
        out = out * (n as u128 - i) / (i + 1);
    }
    out
}

/// `d[n] = binom(d+n−1, n)`
pub fn dim_sym(d: usize, n: usize) -> u128 {
    if d == 0 {
        return 0;
    }
    binomial((d + n - 1) as u64, n as u64)
}

/// All compositions of `n` into `d` parts, lexicographically descending.
pub fn multi_indices(d: usize, n: usize) -> Vec<MultiIndex> {
    fn rec(rest: usize, slots: usize, prefix: &mut Vec<usize>, out: &mut Vec<MultiIndex>) {
        if slots == 1 {
            prefix.push(rest);
            out.push(MultiIndex::new(prefix.clone()));
            prefix.pop();
            return;
        }
        for first in (0..=rest).rev() {
            prefix.push(first);
            rec(rest - first, slots - 1, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    if d == 0 {
        return out;
    }
    rec(n, d, &mut Vec::with_capacity(d), &mut out);
    out
}

fn string_space(d: usize, n: usize) -> Result<usize> {
    let size = (d as u128).checked_pow(n as u32).unwrap_or(u128::MAX);
    if size > MAX_STRING_SPACE {
        return Err(NclError::guard("d^n", size, MAX_STRING_SPACE));
    }
    Ok(size as usize)
}

/// Occupation type of every computational string of length `n`, as an
/// index into `multi_indices(d, n)`.
pub fn string_types(d: usize, n: usize) -> Result<(Vec<MultiIndex>, Vec<usize>)> {
    if d == 0 {
        return Err(NclError::invalid("local dimension must be positive"));
    }
    let total = string_space(d, n)?;
    let indices = multi_indices(d, n);
    let lookup: HashMap<&MultiIndex, usize> = indices.iter().enumerate().map(|(i, a)| (a, i)).collect();
    let mut types = Vec::with_capacity(total);
    let mut counts = vec![0usize; d];
    for x in 0..total {
        counts.iter_mut().for_each(|c| *c = 0);
        let mut rest = x;
        for _ in 0..n {
            counts[rest % d] += 1;
            rest /= d;
        }
        types.push(lookup[&MultiIndex::new(counts.clone())]);
    }
    Ok((indices, types))
}

/// Orthonormal basis `{|α⟩}` of the symmetric subspace.
#[derive(Clone, Debug, Serialize)]
pub struct SymBasis {
    pub d: usize,
    pub n: usize,
    pub vectors: Vec<SymBasisVector>,
}

#[derive(Clone, Debug, Serialize)]
pub struct SymBasisVector {
    pub multi_index: MultiIndex,
    pub state: PureState,
}

impl SymBasis {
    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn get(&self, alpha: &MultiIndex) -> Option<&PureState> {
        self.vectors
            .iter()
            .find(|v| &v.multi_index == alpha)
            .map(|v| &v.state)
    }
}

pub fn sym_basis(d: usize, n: usize) -> Result<SymBasis> {
    let (indices, types) = string_types(d, n)?;
    let coeffs: Vec<f64> = indices
        .iter()
        .map(|a| (1.0 / a.multinomial() as f64).sqrt())
        .collect();
    let mut amps: Vec<CVector> = vec![CVector::zeros(types.len()); indices.len()];
    for (x, &t) in types.iter().enumerate() {
        amps[t][x] = c64(coeffs[t], 0.0);
    }
    let dims = vec![d; n.max(1)];
    let vectors = indices
        .into_iter()
        .zip(amps)
        .map(|(multi_index, v)| SymBasisVector {
            multi_index,
            state: PureState::from_parts(v, dims.clone()),
        })
        .collect();
    Ok(SymBasis { d, n, vectors })
}

/// Dense operator whose `(x, y)` entry is `value[type]` when strings `x`
/// and `y` share a type and zero otherwise.
fn type_block_operator(d: usize, n: usize, value: impl Fn(&MultiIndex) -> f64) -> Result<Operator> {
    let size = (d as u128).checked_pow(n as u32).unwrap_or(u128::MAX);
    check_dense_dim("symmetric-space operator", size)?;
    let (indices, types) = string_types(d, n)?;
    let vals: Vec<f64> = indices.iter().map(value).collect();
    let total = types.len();
    let m = CMatrix::from_fn(total, total, |x, y| {
        if types[x] == types[y] {
            c64(vals[types[x]], 0.0)
        } else {
            c64(0.0, 0.0)
        }
    });
    Ok(Operator::from_parts(m, vec![d; n.max(1)]))
}

pub fn projector_sym(d: usize, n: usize) -> Result<Operator> {
    type_block_operator(d, n, |a| 1.0 / a.multinomial() as f64)
}

/// `P_sym/d[n]`, the Haar average of `|φ⟩⟨φ|^{⊗n}`.
pub fn rho0_general(d: usize, n: usize) -> Result<Operator> {
    let dn = dim_sym(d, n) as f64;
    type_block_operator(d, n, |a| 1.0 / (a.multinomial() as f64 * dn))
}

/// Weights `n!/(d^n α!)` in `multi_indices(d, n)` order.
pub fn multiphase_weights(d: usize, n: usize) -> Vec<f64> {
    let dn = (d as f64).powi(n as i32);
    multi_indices(d, n)
        .iter()
        .map(|a| a.multinomial() as f64 / dn)
        .collect()
}

/// `Σ_α n!/(d^n α!) |α⟩⟨α|`, the phase average of `|φ_θ⟩⟨φ_θ|^{⊗n}`.
pub fn rho0_multiphase(d: usize, n: usize) -> Result<Operator> {
    let entry = 1.0 / (d as f64).powi(n as i32);
    type_block_operator(d, n, |_| entry)
}
