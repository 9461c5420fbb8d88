//! Partition combinatorics, two-copy Schur–Weyl structure of Choi states,
//! and group twirls.

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive};
use rand::Rng;
use serde::Serialize;

use crate::ensembles::spin::{spin_operators, Spin};
use crate::error::{NclError, Result};
use crate::numerics::operator::{c64, check_dense_dim, gates, CMatrix, CVector, Operator, PureState};
use crate::numerics::{haar_unitary_with, random_phase_unitary, rng_for, unitary_exp, NclRng};
use crate::par::ordered_map;
use crate::symspace::string_types;

/// Young diagram with weakly decreasing positive rows.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(transparent)]
pub struct Partition {
    rows: Vec<usize>,
}

impl Partition {
    pub fn new(rows: Vec<usize>) -> Result<Self> {
        if rows.contains(&0) || rows.windows(2).any(|w| w[0] < w[1]) {
            return Err(NclError::invalid(format!("{rows:?} is not a partition")));
        }
        Ok(Self { rows })
    }

    pub fn rows(&self) -> &[usize] {
        &self.rows
    }

    pub fn size(&self) -> usize {
        self.rows.iter().sum()
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    /// Length of column `j` (0-based).
    fn column_len(&self, j: usize) -> usize {
        self.rows.iter().take_while(|&&r| r > j).count()
    }

    fn hook(&self, i: usize, j: usize) -> usize {
        (self.rows[i] - j - 1) + (self.column_len(j) - i - 1) + 1
    }
}

/// Partitions of `m` with at most `max_rows` rows, lexicographically decreasing.
pub fn partitions(m: usize, max_rows: usize) -> Vec<Partition> {
    fn rec(rest: usize, cap: usize, rows_left: usize, prefix: &mut Vec<usize>, out: &mut Vec<Partition>) {
        if rest == 0 {
            out.push(Partition { rows: prefix.clone() });
            return;
        }
        if rows_left == 0 {
            return;
        }
        for first in (1..=cap.min(rest)).rev() {
            prefix.push(first);
            rec(rest - first, first, rows_left - 1, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    if m == 0 {
        return out;
    }
    rec(m, m, max_rows, &mut Vec::new(), &mut out);
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct IrrepDims {
    /// Dimension of the `U(d)` irrep.
    pub p_dim: u128,
    /// Dimension of the symmetric-group irrep.
    pub q_dim: u128,
}

fn big_to_u128(x: BigUint, what: &str) -> Result<u128> {
    x.to_u128()
        .ok_or_else(|| NclError::guard(what.to_string(), u128::MAX, u128::MAX))
}

/// Hook-length formula for `q`, hook-content formula for `p`.
pub fn hook_dims(lambda: &Partition, d: usize) -> Result<IrrepDims> {
    if lambda.num_rows() > d {
        return Err(NclError::invalid(format!(
            "partition {:?} has more than {d} rows",
            lambda.rows
        )));
    }
    let m = lambda.size();
    let mut hooks = BigUint::one();
    let mut contents = BigUint::one();
    for (i, &r) in lambda.rows.iter().enumerate() {
        for j in 0..r {
            hooks *= BigUint::from(lambda.hook(i, j));
            contents *= BigUint::from(d + j - i);
        }
    }
    let mut fact = BigUint::one();
    for k in 2..=m {
        fact *= BigUint::from(k);
    }
    Ok(IrrepDims {
        p_dim: big_to_u128(&contents / &hooks, "|P_λ|")?,
        q_dim: big_to_u128(fact / hooks, "|Q_λ|")?,
    })
}

/// `Σ_λ |Q_λ|²` over partitions of `m` with at most `d` rows.
pub fn sum_q_squared(d: usize, m: usize) -> Result<u128> {
    let mut total: u128 = 0;
    for lambda in partitions(m, d) {
        let q = hook_dims(&lambda, d)?.q_dim;
        total = q
            .checked_mul(q)
            .and_then(|x| total.checked_add(x))
            .ok_or_else(|| NclError::guard("Σ|Q_λ|²", u128::MAX, u128::MAX))?;
    }
    Ok(total)
}

pub const MAX_SYT_SIZE: usize = 8;

/// Number of standard Young tableaux, counted by recursively removing the
/// cell that holds the largest entry (always a corner).
pub fn syt_count_bruteforce(lambda: &Partition) -> Result<u64> {
    let m = lambda.size();
    if m > MAX_SYT_SIZE {
        return Err(NclError::guard("partition size", m as u128, MAX_SYT_SIZE as u128));
    }
    fn count(rows: &mut Vec<usize>) -> u64 {
        if rows.iter().all(|&r| r == 0) {
            return 1;
        }
        let mut total = 0;
        for i in 0..rows.len() {
            let is_corner = rows[i] > 0 && (i + 1 == rows.len() || rows[i + 1] < rows[i]);
            if is_corner {
                rows[i] -= 1;
                total += count(rows);
                rows[i] += 1;
            }
        }
        total
    }
    Ok(count(&mut lambda.rows.clone()))
}

/// `|J_U⟩ = (1/√d) Σ_i U|i⟩ ⊗ |i⟩`, factors ordered `(out, in)`.
pub fn choi_state(u: &Operator) -> Result<PureState> {
    let deviation = u.unitarity_deviation();
    if deviation > 1e-10 {
        return Err(NclError::NotUnitary { deviation });
    }
    let d = u.dim();
    let s = 1.0 / (d as f64).sqrt();
    let m = u.matrix();
    let amps = CVector::from_fn(d * d, |idx, _| m[(idx / d, idx % d)] * s);
    Ok(PureState::from_parts(amps, vec![d, d]))
}

/// `Σ_{i,j} |i⟩⟨i| ⊗ |i+j mod d⟩⟨j|`
pub fn cnot(d: usize) -> Operator {
    let mut m = CMatrix::zeros(d * d, d * d);
    for i in 0..d {
        for j in 0..d {
            m[(i * d + (i + j) % d, i * d + j)] = c64(1.0, 0.0);
        }
    }
    Operator::from_parts(m, vec![d, d])
}

#[derive(Clone, Debug, Serialize)]
pub struct EquivalenceReport {
    pub overlap: f64,
    pub pass: bool,
}

/// Compares the Choi state of `diag(e^{iθ_j})` with `CNOT(|φ_θ⟩|0⟩)`.
pub fn multiphase_choi_equivalence(theta: &[f64]) -> Result<EquivalenceReport> {
    let d = theta.len();
    if d == 0 {
        return Err(NclError::invalid("θ must be non-empty"));
    }
    let diag = CMatrix::from_fn(d, d, |i, j| {
        if i == j {
            c64(theta[i].cos(), theta[i].sin())
        } else {
            c64(0.0, 0.0)
        }
    });
    let j_theta = choi_state(&Operator::from_parts(diag, vec![d]))?;
    let s = 1.0 / (d as f64).sqrt();
    let phi = PureState::from_parts(CVector::from_fn(d, |i, _| c64(theta[i].cos(), theta[i].sin()) * s), vec![d]);
    let input = phi.tensor(&PureState::basis(&[d], 0)?);
    let output = input.apply(&cnot(d))?;
    let overlap = j_theta.inner(&output)?.norm();
    Ok(EquivalenceReport {
        overlap,
        pass: (overlap - 1.0).abs() < 1e-12,
    })
}

/// `(I ± SWAP)/2` on two copies of `C^d`.
fn pair_projector(d: usize, symmetric: bool) -> Operator {
    let sign = if symmetric { 1.0 } else { -1.0 };
    Operator::identity(&[d, d])
        .add(&gates::swap(d).scale(sign))
        .expect("same dims")
        .scale(0.5)
}

/// Builds `Σ_λ c_λ P_λ ⊗ P_λ` in `(out₁, out₂, in₁, in₂)` order and moves it
/// to the interleaved `(out₁, in₁, out₂, in₂)` order.
fn two_copy_block_operator(d: usize, c_sym: f64, c_anti: f64) -> Result<Operator> {
    let sym = pair_projector(d, true);
    let anti = pair_projector(d, false);
    let block = sym.tensor(&sym).scale(c_sym).add(&anti.tensor(&anti).scale(c_anti))?;
    block.reorder(&[0, 2, 1, 3])
}

/// Haar average of `|J_U⟩⟨J_U|^{⊗n}` for `n ∈ {1, 2}`, copies interleaved.
pub fn choi_rho0(d: usize, n: usize) -> Result<Operator> {
    if d == 0 {
        return Err(NclError::invalid("dimension must be positive"));
    }
    check_dense_dim("Choi moment", (d as u128).pow(2 * n as u32))?;
    match n {
        1 => Ok(Operator::identity(&[d, d]).scale(1.0 / (d * d) as f64)),
        2 => {
            let df = d as f64;
            let p_sym = df * (df + 1.0) / 2.0;
            let p_anti = df * (df - 1.0) / 2.0;
            let c_anti = if p_anti > 0.0 { 1.0 / (df * df * p_anti) } else { 0.0 };
            two_copy_block_operator(d, 1.0 / (df * df * p_sym), c_anti)
        }
        _ => Err(NclError::Unsupported(format!("Choi moments for n = {n}"))),
    }
}

/// `P_0⊗P_0/(2^{3r−1}(2^r+1)) + P_1⊗P_1/(2^{3r−1}(2^r−1))` on two Choi copies
/// of an `r`-qubit unitary.
pub fn sigma_m_pauli(r: usize) -> Result<Operator> {
    if !(1..=2).contains(&r) {
        return Err(NclError::guard("r", r as u128, 2));
    }
    let two_r = (1u64 << r) as f64;
    let base = 2f64.powi(3 * r as i32 - 1);
    two_copy_block_operator(1 << r, 1.0 / (base * (two_r + 1.0)), 1.0 / (base * (two_r - 1.0)))
}

/// Source of random group elements for twirling.
pub trait GroupSampler: Sync {
    /// Dimension of the representation the samples act on.
    fn dim(&self) -> usize;
    fn sample(&self, rng: &mut NclRng) -> Operator;
    fn label(&self) -> String;
}

pub struct HaarSampler {
    pub d: usize,
}

impl GroupSampler for HaarSampler {
    fn dim(&self) -> usize {
        self.d
    }
    fn sample(&self, rng: &mut NclRng) -> Operator {
        haar_unitary_with(self.d, rng).expect("positive dimension")
    }
    fn label(&self) -> String {
        format!("haar U({})", self.d)
    }
}

/// Diagonal phase unitaries `diag(e^{iθ_1}, …, e^{iθ_d})`.
pub struct PhaseSampler {
    pub d: usize,
}

impl GroupSampler for PhaseSampler {
    fn dim(&self) -> usize {
        self.d
    }
    fn sample(&self, rng: &mut NclRng) -> Operator {
        random_phase_unitary(self.d, rng)
    }
    fn label(&self) -> String {
        format!("diagonal phases T({})", self.d)
    }
}

/// Haar-random SU(2) rotations in the spin-`s` representation,
/// `e^{−iαS_z} e^{−iβS_y} e^{−iγS_z}` with `cos β` uniform.
pub struct SpinRotationSampler {
    pub s: Spin,
}

impl GroupSampler for SpinRotationSampler {
    fn dim(&self) -> usize {
        self.s.dim()
    }
    fn sample(&self, rng: &mut NclRng) -> Operator {
        let [_, sy, sz] = spin_operators(self.s);
        let tau = std::f64::consts::TAU;
        let alpha = rng.random::<f64>() * tau;
        let beta = (2.0 * rng.random::<f64>() - 1.0).acos();
        let gamma = rng.random::<f64>() * tau;
        let a = unitary_exp(&sz, alpha);
        let b = unitary_exp(&sy, beta);
        let c = unitary_exp(&sz, gamma);
        a.matmul(&b).and_then(|ab| ab.matmul(&c)).expect("same dims")
    }
    fn label(&self) -> String {
        format!("SU(2) spin-{}", self.s)
    }
}

/// Uniform choice from a finite list of unitaries.
pub struct FiniteGroupSampler {
    pub elements: Vec<Operator>,
    pub name: String,
}

impl GroupSampler for FiniteGroupSampler {
    fn dim(&self) -> usize {
        self.elements[0].dim()
    }
    fn sample(&self, rng: &mut NclRng) -> Operator {
        self.elements[rng.random_range(0..self.elements.len())].clone()
    }
    fn label(&self) -> String {
        self.name.clone()
    }
}

/// `V ⊗ I` on a Choi `(out, in)` pair for `V` drawn from the inner sampler.
pub struct ChoiOutSampler<S: GroupSampler> {
    pub inner: S,
}

impl<S: GroupSampler> GroupSampler for ChoiOutSampler<S> {
    fn dim(&self) -> usize {
        self.inner.dim() * self.inner.dim()
    }
    fn sample(&self, rng: &mut NclRng) -> Operator {
        let d = self.inner.dim();
        let v = self.inner.sample(rng);
        v.tensor(&Operator::identity(&[d]))
    }
    fn label(&self) -> String {
        format!("{} on Choi output", self.inner.label())
    }
}

const TWIRL_CHUNK: usize = 256;

/// Empirical mean of `(V†)^{⊗m} σ V^{⊗m}` over `samples` draws; draw `i`
/// uses stream `i` of `seed`.
pub fn mc_twirl(sampler: &dyn GroupSampler, m: usize, sigma: &Operator, samples: usize, seed: u64) -> Result<Operator> {
    if samples == 0 {
        return Err(NclError::invalid("at least one sample is required"));
    }
    let size = (sampler.dim() as u128).checked_pow(m as u32).unwrap_or(u128::MAX);
    if size != sigma.dim() as u128 {
        return Err(NclError::DimMismatch(format!(
            "sampler acts on dimension {} per copy, σ has dimension {}",
            sampler.dim(),
            sigma.dim()
        )));
    }
    let chunks = samples.div_ceil(TWIRL_CHUNK);
    let partials = ordered_map(chunks, |c| -> Result<CMatrix> {
        let mut acc = CMatrix::zeros(sigma.dim(), sigma.dim());
        for i in c * TWIRL_CHUNK..((c + 1) * TWIRL_CHUNK).min(samples) {
            let v = sampler.sample(&mut rng_for(seed, i as u64)).tensor_power(m)?;
            acc += v.matrix().adjoint() * sigma.matrix() * v.matrix();
        }
        Ok(acc)
    });
    let mut total = CMatrix::zeros(sigma.dim(), sigma.dim());
    for p in partials {
        total += p?;
    }
    let scale = 1.0 / samples as f64;
    Ok(Operator::from_parts(total.map(|z| z * scale), sigma.factor_dims().to_vec()))
}

/// Exact average over diagonal phase unitaries: zeroes every entry between
/// computational strings of different occupation type.
pub fn exact_diagonal_twirl(sigma: &Operator, d: usize, m: usize) -> Result<Operator> {
    let (_, types) = string_types(d, m)?;
    if types.len() != sigma.dim() {
        return Err(NclError::DimMismatch(format!(
            "d^m = {} but σ has dimension {}",
            types.len(),
            sigma.dim()
        )));
    }
    let s = sigma.matrix();
    let out = CMatrix::from_fn(s.nrows(), s.ncols(), |i, j| {
        if types[i] == types[j] {
            s[(i, j)]
        } else {
            c64(0.0, 0.0)
        }
    });
    Ok(Operator::from_parts(out, sigma.factor_dims().to_vec()))
}

#[derive(Clone, Debug, Serialize)]
pub struct FramePotentialEstimate {
    /// U-statistic over all ordered pairs of distinct samples.
    pub mean: f64,
    /// Standard error from disjoint sample pairs.
    pub standard_error: f64,
    pub samples: usize,
}

/// Monte Carlo estimate of the Haar frame potential `E|Tr(U†V)|^{2t}`.
pub fn haar_frame_potential_mc(d: usize, t: usize, samples: usize, seed: u64) -> Result<FramePotentialEstimate> {
    if samples < 4 {
        return Err(NclError::invalid("need at least four samples"));
    }
    let us: Vec<Operator> = ordered_map(samples, |i| haar_unitary_with(d, &mut rng_for(seed, i as u64)))
        .into_iter()
        .collect::<Result<_>>()?;
    let term = |a: &Operator, b: &Operator| (a.matrix().adjoint() * b.matrix()).trace().norm_sqr().powi(t as i32);
    let rows = ordered_map(samples, |i| {
        us.iter()
            .enumerate()
            .filter(|&(j, _)| j != i)
            .map(|(_, b)| term(&us[i], b))
            .sum::<f64>()
    });
    let pairs = (samples * (samples - 1)) as f64;
    let mean = rows.iter().sum::<f64>() / pairs;
    let disjoint: Vec<f64> = (0..samples / 2).map(|k| term(&us[2 * k], &us[2 * k + 1])).collect();
    let k = disjoint.len() as f64;
    let dm = disjoint.iter().sum::<f64>() / k;
    let var = disjoint.iter().map(|x| (x - dm).powi(2)).sum::<f64>() / (k - 1.0);
    Ok(FramePotentialEstimate {
        mean,
        standard_error: (var / k).sqrt(),
        samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{eigenvalues, haar_unitary, min_eigenvalue};

    #[test]
    fn partition_lists() {
        let p: Vec<Vec<usize>> = partitions(3, 2).iter().map(|p| p.rows().to_vec()).collect();
        assert_eq!(p, vec![vec![3], vec![2, 1]]);
        let p: Vec<Vec<usize>> = partitions(2, 2).iter().map(|p| p.rows().to_vec()).collect();
        assert_eq!(p, vec![vec![2], vec![1, 1]]);
        assert_eq!(partitions(5, 5).len(), 7);
        assert!(Partition::new(vec![1, 2]).is_err());
    }

    #[test]
    fn hook_dims_small() {
        let two = Partition::new(vec![2]).unwrap();
        let one_one = Partition::new(vec![1, 1]).unwrap();
        assert_eq!(hook_dims(&two, 2).unwrap(), IrrepDims { p_dim: 3, q_dim: 1 });
        assert_eq!(hook_dims(&one_one, 2).unwrap(), IrrepDims { p_dim: 1, q_dim: 1 });
        assert_eq!(hook_dims(&Partition::new(vec![2, 1]).unwrap(), 2).unwrap().q_dim, 2);
        assert!(hook_dims(&Partition::new(vec![1, 1, 1]).unwrap(), 2).is_err());
        let total: u128 = partitions(3, 2)
            .iter()
            .map(|l| {
                let h = hook_dims(l, 2).unwrap();
                h.p_dim * h.q_dim
            })
            .sum();
        assert_eq!(total, 8);
    }

    #[test]
    fn syt_counts() {
        assert_eq!(syt_count_bruteforce(&Partition::new(vec![5]).unwrap()).unwrap(), 1);
        assert_eq!(syt_count_bruteforce(&Partition::new(vec![2, 1]).unwrap()).unwrap(), 2);
        let sq: u64 = partitions(4, 4)
            .iter()
            .map(|l| syt_count_bruteforce(l).unwrap().pow(2))
            .sum();
        assert_eq!(sq, 24);
        assert!(syt_count_bruteforce(&Partition::new(vec![9]).unwrap()).is_err());
    }

    #[test]
    fn choi_states() {
        let phi = choi_state(&Operator::identity(&[2])).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((phi.amplitudes()[0].re - h).abs() < 1e-15 && (phi.amplitudes()[3].re - h).abs() < 1e-15);
        let u = haar_unitary(3, 5).unwrap();
        let j = choi_state(&u).unwrap();
        assert!((j.norm() - 1.0).abs() < 1e-12);
        let marginal = j.projector().partial_trace(&[1]).unwrap();
        assert!(marginal.max_abs_diff(&Operator::identity(&[3]).scale(1.0 / 3.0)).unwrap() < 1e-12);
        assert!(matches!(
            choi_state(&Operator::diagonal(&[1.0, 2.0])),
            Err(NclError::NotUnitary { .. })
        ));
    }

    #[test]
    fn cnot_equivalence() {
        assert!(multiphase_choi_equivalence(&[0.0, 0.0]).unwrap().pass);
        assert!(multiphase_choi_equivalence(&[0.3, 1.7, 4.1]).unwrap().pass);
        assert!(cnot(3).unitarity_deviation() < 1e-15);
    }

    #[test]
    fn choi_rho0_spectrum() {
        assert!(choi_rho0(2, 1)
            .unwrap()
            .max_abs_diff(&Operator::identity(&[2, 2]).scale(0.25))
            .unwrap()
            < 1e-15);
        let rho = choi_rho0(2, 2).unwrap();
        assert!((rho.trace().re - 1.0).abs() < 1e-12);
        let ev = eigenvalues(&rho);
        let count = |v: f64| ev.iter().filter(|&&x| (x - v).abs() < 1e-12).count();
        assert_eq!((count(0.0), count(1.0 / 4.0), count(1.0 / 12.0)), (6, 1, 9));
        assert!(choi_rho0(2, 3).is_err());
    }

    #[test]
    fn sigma_m_pauli_matches_rho0() {
        for r in [1, 2] {
            let s = sigma_m_pauli(r).unwrap();
            assert!((s.trace().re - 1.0).abs() < 1e-12);
            assert!(min_eigenvalue(&s) > -1e-12);
            assert!(s.max_abs_diff(&choi_rho0(1 << r, 2).unwrap()).unwrap() < 1e-14);
        }
    }

    #[test]
    fn twirl_identity_and_diagonal() {
        let id = Operator::identity(&[2, 2]);
        let t = mc_twirl(&HaarSampler { d: 2 }, 2, &id, 10, 1).unwrap();
        assert!(t.max_abs_diff(&id).unwrap() < 1e-12);
        let diag = Operator::diagonal(&[0.1, 0.2, 0.3, 0.4]).with_factor_dims(vec![2, 2]).unwrap();
        assert_eq!(exact_diagonal_twirl(&diag, 2, 2).unwrap(), diag);
    }
}
