use nalgebra::{DMatrix, DVector};
use num_complex::Complex;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{NclError, Result};

pub type C64 = Complex<f64>;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

/// Largest dense operator dimension any routine will allocate.
pub const MAX_DENSE_DIM: usize = 2048;

pub(crate) const fn c64(re: f64, im: f64) -> C64 {
    Complex::new(re, im)
}

pub(crate) fn check_dense_dim(what: &str, dim: u128) -> Result<()> {
    if dim > MAX_DENSE_DIM as u128 {
        Err(NclError::guard(what, dim, MAX_DENSE_DIM as u128))
    } else {
        Ok(())
    }
}

fn product(dims: &[usize]) -> usize {
    dims.iter().product()
}

fn strides(dims: &[usize]) -> Vec<usize> {
    let mut s = vec![1; dims.len()];
    for i in (0..dims.len().saturating_sub(1)).rev() {
        s[i] = s[i + 1] * dims[i + 1];
    }
    s
}

/// Maps every index of the reordered space to its index in the original one.
/// `perm[k]` names the original factor that ends up at position `k`.
fn reorder_map(dims: &[usize], perm: &[usize]) -> Result<(Vec<usize>, Vec<usize>)> {
    let n = dims.len();
    if perm.len() != n {
        return Err(NclError::InvalidPermutation(format!(
            "length {} for {} factors",
            perm.len(),
            n
        )));
    }
    let mut seen = vec![false; n];
    for &p in perm {
        if p >= n || seen[p] {
            return Err(NclError::InvalidPermutation(format!("{perm:?}")));
        }
        seen[p] = true;
    }
    let old_strides = strides(dims);
    let new_dims: Vec<usize> = perm.iter().map(|&p| dims[p]).collect();
    let total = product(dims);
    let mut map = Vec::with_capacity(total);
    let mut digits = vec![0usize; n];
    for _ in 0..total {
        map.push(
            digits
                .iter()
                .zip(perm)
                .map(|(&e, &p)| e * old_strides[p])
                .sum(),
        );
        for k in (0..n).rev() {
            digits[k] += 1;
            if digits[k] < new_dims[k] {
                break;
            }
            digits[k] = 0;
        }
    }
    Ok((map, new_dims))
}

/// Inverse of a factor permutation.
pub fn invert_permutation(perm: &[usize]) -> Vec<usize> {
    let mut inv = vec![0; perm.len()];
    for (k, &p) in perm.iter().enumerate() {
        inv[p] = k;
    }
    inv
}

fn validate_dims(dim: usize, factor_dims: &[usize]) -> Result<()> {
    if factor_dims.is_empty() || factor_dims.iter().any(|&d| d == 0) {
        return Err(NclError::DimMismatch(format!(
            "invalid factor dims {factor_dims:?}"
        )));
    }
    if product(factor_dims) != dim {
        return Err(NclError::DimMismatch(format!(
            "factor dims {factor_dims:?} do not multiply to {dim}"
        )));
    }
    Ok(())
}

/// Dense complex square matrix with a declared tensor-factor structure.
#[derive(Clone, Debug, PartialEq)]
pub struct Operator {
    mat: CMatrix,
    factor_dims: Vec<usize>,
}

impl Operator {
    pub fn new(mat: CMatrix, factor_dims: Vec<usize>) -> Result<Self> {
        if mat.nrows() != mat.ncols() {
            return Err(NclError::DimMismatch(format!(
                "matrix is {}x{}",
                mat.nrows(),
                mat.ncols()
            )));
        }
        validate_dims(mat.nrows(), &factor_dims)?;
        Ok(Self { mat, factor_dims })
    }

    /// Single-factor operator.
    pub fn from_matrix(mat: CMatrix) -> Result<Self> {
        let d = mat.nrows();
        Self::new(mat, vec![d])
    }

    pub(crate) fn from_parts(mat: CMatrix, factor_dims: Vec<usize>) -> Self {
        debug_assert_eq!(mat.nrows(), product(&factor_dims));
        Self { mat, factor_dims }
    }

    pub fn identity(factor_dims: &[usize]) -> Self {
        let d = product(factor_dims);
        Self::from_parts(CMatrix::identity(d, d), factor_dims.to_vec())
    }

    pub fn zeros(factor_dims: &[usize]) -> Self {
        let d = product(factor_dims);
        Self::from_parts(CMatrix::zeros(d, d), factor_dims.to_vec())
    }

    pub fn diagonal(values: &[f64]) -> Self {
        let d = values.len();
        let mut mat = CMatrix::zeros(d, d);
        for (i, &v) in values.iter().enumerate() {
            mat[(i, i)] = c64(v, 0.0);
        }
        Self::from_parts(mat, vec![d])
    }

    pub fn projector(state: &PureState) -> Self {
        let v = state.amplitudes();
        Self::from_parts(v * v.adjoint(), state.factor_dims().to_vec())
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn factor_dims(&self) -> &[usize] {
        &self.factor_dims
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.mat
    }

    pub fn into_matrix(self) -> CMatrix {
        self.mat
    }

    pub fn with_factor_dims(self, factor_dims: Vec<usize>) -> Result<Self> {
        validate_dims(self.dim(), &factor_dims)?;
        Ok(Self {
            mat: self.mat,
            factor_dims,
        })
    }

    pub fn tensor(&self, other: &Operator) -> Operator {
        let mut dims = self.factor_dims.clone();
        dims.extend_from_slice(&other.factor_dims);
        Self::from_parts(self.mat.kronecker(&other.mat), dims)
    }

    pub fn tensor_power(&self, n: usize) -> Result<Operator> {
        check_dense_dim("operator tensor power", (self.dim() as u128).pow(n as u32))?;
        if n == 0 {
            return Ok(Self::identity(&[1]));
        }
        let mut out = self.clone();
        for _ in 1..n {
            out = out.tensor(self);
        }
        Ok(out)
    }

    pub fn adjoint(&self) -> Operator {
        Self::from_parts(self.mat.adjoint(), self.factor_dims.clone())
    }

    /// Transpose in the computational basis.
    pub fn transpose(&self) -> Operator {
        Self::from_parts(self.mat.transpose(), self.factor_dims.clone())
    }

    pub fn trace(&self) -> C64 {
        self.mat.trace()
    }

    pub fn scale(&self, factor: f64) -> Operator {
        Self::from_parts(self.mat.map(|z| z * factor), self.factor_dims.clone())
    }

    fn same_dim(&self, other: &Operator) -> Result<()> {
        if self.dim() != other.dim() {
            return Err(NclError::DimMismatch(format!(
                "{} vs {}",
                self.dim(),
                other.dim()
            )));
        }
        Ok(())
    }

    pub fn add(&self, other: &Operator) -> Result<Operator> {
        self.same_dim(other)?;
        Ok(Self::from_parts(&self.mat + &other.mat, self.factor_dims.clone()))
    }

    pub fn sub(&self, other: &Operator) -> Result<Operator> {
        self.same_dim(other)?;
        Ok(Self::from_parts(&self.mat - &other.mat, self.factor_dims.clone()))
    }

    /// Matrix product `self * other`; keeps the factor structure of `self`.
    pub fn matmul(&self, other: &Operator) -> Result<Operator> {
        self.same_dim(other)?;
        Ok(Self::from_parts(&self.mat * &other.mat, self.factor_dims.clone()))
    }

    /// `u * self * u†`
    pub fn conjugate_by(&self, u: &Operator) -> Result<Operator> {
        self.same_dim(u)?;
        Ok(Self::from_parts(
            &u.mat * &self.mat * u.mat.adjoint(),
            self.factor_dims.clone(),
        ))
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.mat.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn frobenius_distance(&self, other: &Operator) -> Result<f64> {
        self.same_dim(other)?;
        Ok(self
            .mat
            .iter()
            .zip(other.mat.iter())
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt())
    }

    pub fn max_abs_diff(&self, other: &Operator) -> Result<f64> {
        self.same_dim(other)?;
        Ok(self
            .mat
            .iter()
            .zip(other.mat.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max))
    }

    /// Largest entrywise |A - A†|.
    pub fn hermitian_deviation(&self) -> f64 {
        let d = self.dim();
        let mut worst: f64 = 0.0;
        for i in 0..d {
            for j in i..d {
                worst = worst.max((self.mat[(i, j)] - self.mat[(j, i)].conj()).norm());
            }
        }
        worst
    }

    /// (A + A†)/2
    pub fn hermitian_part(&self) -> Operator {
        Self::from_parts(
            (&self.mat + self.mat.adjoint()).map(|z| z * 0.5),
            self.factor_dims.clone(),
        )
    }

    pub fn unitarity_deviation(&self) -> f64 {
        let d = self.dim();
        let prod = self.mat.adjoint() * &self.mat;
        let mut worst: f64 = 0.0;
        for i in 0..d {
            for j in 0..d {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((prod[(i, j)] - c64(target, 0.0)).norm());
            }
        }
        worst
    }

    /// Traces out every factor not listed in `keep`. Kept factors stay in
    /// their original relative order.
    pub fn partial_trace(&self, keep: &[usize]) -> Result<Operator> {
        let n = self.factor_dims.len();
        let mut kept: Vec<usize> = keep.to_vec();
        kept.sort_unstable();
        kept.dedup();
        if let Some(&bad) = kept.iter().find(|&&k| k >= n) {
            return Err(NclError::IndexOutOfRange {
                index: bad,
                count: n,
            });
        }
        let traced: Vec<usize> = (0..n).filter(|i| !kept.contains(i)).collect();
        let full_strides = strides(&self.factor_dims);
        let offsets = |factors: &[usize]| -> Vec<usize> {
            let dims: Vec<usize> = factors.iter().map(|&f| self.factor_dims[f]).collect();
            let total = product(&dims);
            let mut out = Vec::with_capacity(total);
            let mut digits = vec![0usize; factors.len()];
            for _ in 0..total {
                out.push(
                    digits
                        .iter()
                        .zip(factors)
                        .map(|(&e, &f)| e * full_strides[f])
                        .sum(),
                );
                for k in (0..factors.len()).rev() {
                    digits[k] += 1;
                    if digits[k] < dims[k] {
                        break;
                    }
                    digits[k] = 0;
                }
            }
            out
        };
        let kept_off = offsets(&kept);
        let traced_off = offsets(&traced);
        let dk = kept_off.len();
        let mut out = CMatrix::zeros(dk, dk);
        for (a, &ra) in kept_off.iter().enumerate() {
            for (b, &rb) in kept_off.iter().enumerate() {
                let mut acc = c64(0.0, 0.0);
                for &t in &traced_off {
                    acc += self.mat[(ra + t, rb + t)];
                }
                out[(a, b)] = acc;
            }
        }
        let dims = if kept.is_empty() {
            vec![1]
        } else {
            kept.iter().map(|&k| self.factor_dims[k]).collect()
        };
        Ok(Self::from_parts(out, dims))
    }

    /// Permutes tensor factors: factor `perm[k]` of the input becomes
    /// factor `k` of the output.
    pub fn reorder(&self, perm: &[usize]) -> Result<Operator> {
        let (map, new_dims) = reorder_map(&self.factor_dims, perm)?;
        let d = self.dim();
        let out = CMatrix::from_fn(d, d, |i, j| self.mat[(map[i], map[j])]);
        Ok(Self::from_parts(out, new_dims))
    }
}

/// Normalized state vector with a declared tensor-factor structure.
#[derive(Clone, Debug, PartialEq)]
pub struct PureState {
    amps: CVector,
    factor_dims: Vec<usize>,
}

impl PureState {
    pub const NORM_TOL: f64 = 1e-12;

    pub fn new(amps: CVector, factor_dims: Vec<usize>) -> Result<Self> {
        validate_dims(amps.len(), &factor_dims)?;
        let norm = amps.norm();
        if (norm - 1.0).abs() > Self::NORM_TOL {
            return Err(NclError::invalid(format!("state norm {norm} is not 1")));
        }
        Ok(Self { amps, factor_dims })
    }

    pub fn normalized(amps: CVector, factor_dims: Vec<usize>) -> Result<Self> {
        validate_dims(amps.len(), &factor_dims)?;
        let norm = amps.norm();
        if norm == 0.0 || !norm.is_finite() {
            return Err(NclError::invalid("cannot normalize a zero vector"));
        }
        Ok(Self {
            amps: amps.unscale(norm),
            factor_dims,
        })
    }

    pub(crate) fn from_parts(amps: CVector, factor_dims: Vec<usize>) -> Self {
        debug_assert_eq!(amps.len(), product(&factor_dims));
        Self { amps, factor_dims }
    }

    pub fn basis(factor_dims: &[usize], index: usize) -> Result<Self> {
        let d = product(factor_dims);
        if index >= d {
            return Err(NclError::IndexOutOfRange { index, count: d });
        }
        let mut amps = CVector::zeros(d);
        amps[index] = c64(1.0, 0.0);
        Ok(Self::from_parts(amps, factor_dims.to_vec()))
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn factor_dims(&self) -> &[usize] {
        &self.factor_dims
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.norm()
    }

    /// ⟨self|other⟩
    pub fn inner(&self, other: &PureState) -> Result<C64> {
        if self.dim() != other.dim() {
            return Err(NclError::DimMismatch(format!(
                "{} vs {}",
                self.dim(),
                other.dim()
            )));
        }
        Ok(self.amps.dotc(&other.amps))
    }

    pub fn tensor(&self, other: &PureState) -> PureState {
        let mut dims = self.factor_dims.clone();
        dims.extend_from_slice(&other.factor_dims);
        Self::from_parts(self.amps.kronecker(&other.amps), dims)
    }

    pub fn tensor_power(&self, n: usize) -> Result<PureState> {
        if n == 0 {
            return Err(NclError::invalid("tensor power of order 0"));
        }
        let size = (self.dim() as u128).checked_pow(n as u32).unwrap_or(u128::MAX);
        if size > (1u128 << 24) {
            return Err(NclError::guard("state tensor power", size, 1 << 24));
        }
        let mut out = self.clone();
        for _ in 1..n {
            out = out.tensor(self);
        }
        Ok(out)
    }

    pub fn projector(&self) -> Operator {
        Operator::projector(self)
    }

    /// Applies an operator and keeps the factor structure of the state.
    /// The result is not renormalized.
    pub fn apply(&self, op: &Operator) -> Result<PureState> {
        if op.dim() != self.dim() {
            return Err(NclError::DimMismatch(format!(
                "operator {} vs state {}",
                op.dim(),
                self.dim()
            )));
        }
        Ok(Self::from_parts(op.matrix() * &self.amps, self.factor_dims.clone()))
    }

    pub fn conj(&self) -> PureState {
        Self::from_parts(self.amps.map(|z| z.conj()), self.factor_dims.clone())
    }

    pub fn reorder(&self, perm: &[usize]) -> Result<PureState> {
        let (map, new_dims) = reorder_map(&self.factor_dims, perm)?;
        let out = CVector::from_fn(self.dim(), |i, _| self.amps[map[i]]);
        Ok(Self::from_parts(out, new_dims))
    }

    pub fn distance(&self, other: &PureState) -> Result<f64> {
        if self.dim() != other.dim() {
            return Err(NclError::DimMismatch(format!(
                "{} vs {}",
                self.dim(),
                other.dim()
            )));
        }
        Ok((&self.amps - &other.amps).norm())
    }
}

/// `(1/√D) Σ_i |i⟩|i⟩` on two copies of a space of dimension `dim`.
pub fn max_entangled(dim: usize) -> PureState {
    let mut amps = CVector::zeros(dim * dim);
    let a = 1.0 / (dim as f64).sqrt();
    for i in 0..dim {
        amps[i * dim + i] = c64(a, 0.0);
    }
    PureState::from_parts(amps, vec![dim, dim])
}

#[derive(Serialize, Deserialize)]
struct DenseRepr {
    dim: usize,
    factor_dims: Vec<usize>,
    entries: Vec<[f64; 2]>,
}

impl Serialize for Operator {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let d = self.dim();
        let mut entries = Vec::with_capacity(d * d);
        for i in 0..d {
            for j in 0..d {
                let z = self.mat[(i, j)];
                entries.push([z.re, z.im]);
            }
        }
        DenseRepr {
            dim: d,
            factor_dims: self.factor_dims.clone(),
            entries,
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Operator {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error;
        let repr = DenseRepr::deserialize(deserializer)?;
        if repr.entries.len() != repr.dim * repr.dim {
            return Err(D::Error::custom(format!(
                "expected {} entries, found {}",
                repr.dim * repr.dim,
                repr.entries.len()
            )));
        }
        let d = repr.dim;
        let mat = CMatrix::from_fn(d, d, |i, j| {
            let [re, im] = repr.entries[i * d + j];
            c64(re, im)
        });
        Operator::new(mat, repr.factor_dims).map_err(D::Error::custom)
    }
}

impl Serialize for PureState {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        DenseRepr {
            dim: self.dim(),
            factor_dims: self.factor_dims.clone(),
            entries: self.amps.iter().map(|z| [z.re, z.im]).collect(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for PureState {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error;
        let repr = DenseRepr::deserialize(deserializer)?;
        if repr.entries.len() != repr.dim {
            return Err(D::Error::custom(format!(
                "expected {} entries, found {}",
                repr.dim,
                repr.entries.len()
            )));
        }
        let amps = CVector::from_iterator(repr.dim, repr.entries.iter().map(|&[re, im]| c64(re, im)));
        PureState::new(amps, repr.factor_dims).map_err(D::Error::custom)
    }
}

/// Computational-basis matrix `|i⟩⟨j|` helpers and small fixed gates.
pub mod gates {
    use super::{c64, CMatrix, Operator};

    pub fn pauli_x() -> Operator {
        Operator::from_parts(
            CMatrix::from_row_slice(2, 2, &[c64(0.0, 0.0), c64(1.0, 0.0), c64(1.0, 0.0), c64(0.0, 0.0)]),
            vec![2],
        )
    }

    pub fn pauli_y() -> Operator {
        Operator::from_parts(
            CMatrix::from_row_slice(2, 2, &[c64(0.0, 0.0), c64(0.0, -1.0), c64(0.0, 1.0), c64(0.0, 0.0)]),
            vec![2],
        )
    }

    pub fn pauli_z() -> Operator {
        Operator::diagonal(&[1.0, -1.0])
    }

    pub fn hadamard() -> Operator {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        Operator::from_parts(
            CMatrix::from_row_slice(2, 2, &[c64(h, 0.0), c64(h, 0.0), c64(h, 0.0), c64(-h, 0.0)]),
            vec![2],
        )
    }

    pub fn phase_s() -> Operator {
        Operator::from_parts(
            CMatrix::from_row_slice(2, 2, &[c64(1.0, 0.0), c64(0.0, 0.0), c64(0.0, 0.0), c64(0.0, 1.0)]),
            vec![2],
        )
    }

    /// SWAP on two copies of C^d.
    pub fn swap(d: usize) -> Operator {
        let mut m = CMatrix::zeros(d * d, d * d);
        for i in 0..d {
            for j in 0..d {
                m[(i * d + j, j * d + i)] = c64(1.0, 0.0);
            }
        }
        Operator::from_parts(m, vec![d, d])
    }
}
