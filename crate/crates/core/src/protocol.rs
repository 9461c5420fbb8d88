//! Density-matrix simulation of remote identical state preparation, its
//! ε-approximate variant with a residue outcome, and the no-signalling check.

use serde::Serialize;

use crate::cloners::CloningMap;
use crate::ensembles::{clifford_group, Family, Spin, WeightedEnsemble};
use crate::error::{NclError, Result};
use crate::numerics::operator::{c64, CMatrix, CVector, Operator, PureState};
use crate::numerics::{check_density, hermitian_eigen, min_eigenvalue, rng_for, trace_distance, PSD_TOL};
use crate::par::try_ordered_map;
use crate::schurweyl::{
    ChoiOutSampler, FiniteGroupSampler, GroupSampler, HaarSampler, PhaseSampler, SpinRotationSampler,
};

/// Eigenvalues of `ρ_0` at or below this value are treated as kernel.
pub const SUPPORT_CUTOFF: f64 = 1e-12;

/// Shared state and local operators for one protocol configuration.
#[derive(Clone, Debug)]
pub struct ProtocolInstance {
    pub n: usize,
    pub ensemble: WeightedEnsemble,
    pub rho0: Operator,
    pub p_a: Operator,
    pub p_b: Operator,
    pub l_b: Operator,
    pub psi_m: PureState,
    pub c_perp: f64,
    /// `N = √(D / Tr(L_B† L_B))`
    pub normalization: f64,
    pub support_rank: usize,
    /// `K⁻¹` where `L_B = Kᵀ`; `K` is Hermitian and commutes with `P_A`.
    k_inv: CMatrix,
    /// Coefficient matrix of `|Ψ_m⟩ = Σ M_ab |a⟩|b⟩`.
    state_matrix: CMatrix,
}

impl ProtocolInstance {
    pub fn dim(&self) -> usize {
        self.rho0.dim()
    }

    /// `Tr(L_B† L_B)`
    pub fn trace_lb(&self) -> f64 {
        self.l_b.frobenius_norm().powi(2)
    }

    /// `(L_B⁻¹)†`
    fn lb_inv_dagger(&self) -> CMatrix {
        // L_B⁻¹ = (K⁻¹)ᵀ and K⁻¹ is Hermitian, so (L_B⁻¹)† = conj(K⁻¹).
        self.k_inv.map(|z| z.conj())
    }

    fn lb_inv(&self) -> CMatrix {
        self.k_inv.transpose()
    }

    /// Alice's unnormalized state `Tr_B[(I ⊗ E) Ψ_m]` after Bob's outcome `E`.
    fn alice_state(&self, bob_element: &CMatrix) -> CMatrix {
        // (I ⊗ E)|Ψ_m⟩ has coefficient matrix M Eᵀ, so Tr_B = M Eᵀ M†.
        &self.state_matrix * bob_element.transpose() * self.state_matrix.adjoint()
    }
}

/// Builds the protocol with `ρ_0 = ρ_W^n` and `c_⊥ = 1`.
pub fn build_protocol(ensemble: &WeightedEnsemble, n: usize) -> Result<ProtocolInstance> {
    let rho0 = ensemble.moment(n)?;
    build_protocol_with_reference(ensemble, n, &rho0, 1.0)
}

/// Builds the protocol around a given `ρ_0`, which need not equal `ρ_W^n`.
pub fn build_protocol_with_reference(
    ensemble: &WeightedEnsemble,
    n: usize,
    rho0: &Operator,
    c_perp: f64,
) -> Result<ProtocolInstance> {
    if !(c_perp.is_finite() && c_perp != 0.0) {
        return Err(NclError::invalid("c_⊥ must be a non-zero finite constant"));
    }
    let dim = ensemble.base_dim().pow(n as u32);
    if rho0.dim() != dim {
        return Err(NclError::DimMismatch(format!(
            "ρ_0 has dimension {} but the {n}-copy space has {dim}",
            rho0.dim()
        )));
    }
    let eig = hermitian_eigen(rho0.matrix());
    let support: Vec<usize> = (0..dim).filter(|&x| eig.values[x] > SUPPORT_CUTOFF).collect();
    if support.is_empty() {
        return Err(NclError::invalid("ρ_0 is numerically zero"));
    }
    let in_support = |x: usize| eig.values[x] > SUPPORT_CUTOFF;
    let p_a = eig.apply(|lam| if lam > SUPPORT_CUTOFF { 1.0 } else { 0.0 });
    let spectral = |f: &dyn Fn(usize) -> f64| -> CMatrix {
        let mut scaled = eig.vectors.clone();
        for x in 0..dim {
            let fx = f(x);
            for i in 0..dim {
                scaled[(i, x)] *= fx;
            }
        }
        scaled * eig.vectors.adjoint()
    };
    let k = spectral(&|x| if in_support(x) { eig.values[x].sqrt() } else { c_perp });
    let k_inv = spectral(&|x| if in_support(x) { 1.0 / eig.values[x].sqrt() } else { 1.0 / c_perp });
    let trace_lb: f64 = k.iter().map(|z| z.norm_sqr()).sum();
    let normalization = (dim as f64 / trace_lb).sqrt();
    // |Ψ_m⟩ = N (I ⊗ L_B)|Ψ⟩ = N (K ⊗ I)|Ψ⟩, |Ψ⟩ = Σ|i⟩|i⟩/√D.
    let state_matrix = k.map(|z| z * (normalization / (dim as f64).sqrt()));
    let amps = CVector::from_iterator(
        dim * dim,
        (0..dim).flat_map(|a| (0..dim).map(move |b| (a, b))).map(|(a, b)| state_matrix[(a, b)]),
    );
    let mut pair_dims = rho0.factor_dims().to_vec();
    pair_dims.extend_from_slice(rho0.factor_dims());
    let psi_m = PureState::normalized(amps, pair_dims)?;
    let factor_dims = rho0.factor_dims().to_vec();
    Ok(ProtocolInstance {
        n,
        ensemble: ensemble.clone(),
        rho0: rho0.clone(),
        p_b: Operator::from_parts(p_a.transpose(), factor_dims.clone()),
        p_a: Operator::from_parts(p_a, factor_dims.clone()),
        l_b: Operator::from_parts(k.transpose(), factor_dims),
        psi_m,
        c_perp,
        normalization,
        support_rank: support.len(),
        k_inv,
        state_matrix,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct ProtocolRunReport {
    pub family: Family,
    pub n: usize,
    pub dim: usize,
    pub p_suc: f64,
    /// `1 / Tr(L_B† L_B)`
    pub p_suc_expected: f64,
    /// Outcome probabilities conditioned on success, in ensemble order.
    pub p_phi_given_suc: Vec<f64>,
    /// Fidelity of Alice's conditional state with `(V|φ⟩⟨φ|V†)^{⊗n}`.
    pub alice_state_fidelities: Vec<f64>,
    pub min_alice_fidelity: f64,
    /// `Tr(P_A⊗(I−P_B) Ψ_m) + Tr((I−P_A)⊗P_B Ψ_m)`
    pub correlation_mismatch: f64,
    /// Largest entry of `Σ(POVM elements) − P_B`.
    pub povm_completeness_error: f64,
    /// Smallest eigenvalue among Bob's POVM elements.
    pub povm_min_eigenvalue: f64,
    /// `max_φ |p_{φ|suc} − (1−p_res) p_φ|`
    pub max_weight_deviation: f64,
    pub epsilon: Option<f64>,
    pub p_res_given_suc: Option<f64>,
    /// Smallest eigenvalue of `2ε/(1+ε) P_B − p_res τ_res`.
    pub residue_bound_margin: Option<f64>,
}

impl ProtocolRunReport {
    pub fn probability_total(&self) -> f64 {
        self.p_phi_given_suc.iter().sum::<f64>() + self.p_res_given_suc.unwrap_or(0.0)
    }
}

fn transformed_targets(inst: &ProtocolInstance, v: &Operator) -> Result<Vec<PureState>> {
    if v.dim() != inst.ensemble.base_dim() {
        return Err(NclError::DimMismatch(format!(
            "V acts on dimension {}, ensemble states have {}",
            v.dim(),
            inst.ensemble.base_dim()
        )));
    }
    inst.ensemble
        .elements()
        .iter()
        .map(|(_, phi)| phi.apply(v)?.tensor_power(inst.n))
        .collect()
}

fn max_entry(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn run(inst: &ProtocolInstance, v: &Operator, epsilon: f64) -> Result<ProtocolRunReport> {
    let dim = inst.dim();
    let targets = transformed_targets(inst, v)?;
    let p_res = epsilon / (1.0 + epsilon);
    let lb_inv_dag = inst.lb_inv_dagger();
    let lb_inv = inst.lb_inv();

    // Bob's elements p_φ (1−p_res) |u⟩⟨u| with u = (L_B⁻¹)† conj(t).
    let mut elements = Vec::with_capacity(targets.len());
    let mut povm_sum = CMatrix::zeros(dim, dim);
    for ((p, _), t) in inst.ensemble.elements().iter().zip(&targets) {
        let u = &lb_inv_dag * t.amplitudes().map(|z| z.conj());
        let e = &u * u.adjoint() * c64(p * (1.0 - p_res), 0.0);
        povm_sum += &e;
        elements.push(e);
    }
    let p_b = inst.p_b.matrix();
    let residue = if epsilon > 0.0 {
        // p_res τ_res = P_B − Σ_φ (1−p_res) E_φ
        let mut rho_w = CMatrix::zeros(dim, dim);
        for ((p, _), t) in inst.ensemble.elements().iter().zip(&targets) {
            rho_w += t.amplitudes() * t.amplitudes().adjoint() * c64(*p, 0.0);
        }
        let tau = p_b.map(|z| z * ((1.0 + epsilon) / epsilon))
            - (&lb_inv_dag * rho_w.transpose() * &lb_inv).map(|z| z / epsilon);
        Some(tau.map(|z| z * p_res))
    } else {
        None
    };

    let mut completeness = povm_sum.clone();
    if let Some(r) = &residue {
        completeness += r;
    }
    let povm_completeness_error = max_entry(&(completeness - p_b));
    let mut povm_min_eigenvalue = f64::INFINITY;
    for e in &elements {
        povm_min_eigenvalue = povm_min_eigenvalue.min(hermitian_eigen(e).values[0]);
    }
    let mut residue_bound_margin = None;
    if let Some(r) = &residue {
        let min_r = hermitian_eigen(r).values[0];
        if min_r < -PSD_TOL {
            return Err(NclError::NotPsd { min_eigenvalue: min_r });
        }
        povm_min_eigenvalue = povm_min_eigenvalue.min(min_r);
        let cap = p_b.map(|z| z * (2.0 * epsilon / (1.0 + epsilon))) - r;
        residue_bound_margin = Some(hermitian_eigen(&cap).values[0]);
    }
    if povm_min_eigenvalue < -PSD_TOL {
        return Err(NclError::NotPsd {
            min_eigenvalue: povm_min_eigenvalue,
        });
    }

    let p_a = inst.p_a.matrix();
    let success_state = inst.alice_state(p_b);
    let p_suc = (p_a * &success_state).trace().re;

    let mut p_phi_given_suc = Vec::with_capacity(elements.len());
    let mut fidelities = Vec::with_capacity(elements.len());
    for (e, t) in elements.iter().zip(&targets) {
        let rho = p_a * inst.alice_state(e) * p_a;
        let prob = rho.trace().re;
        p_phi_given_suc.push(prob / p_suc);
        let v = t.amplitudes();
        let fid = if prob > 0.0 { v.dotc(&(&rho * v)).re / prob } else { 0.0 };
        fidelities.push(fid);
    }
    let p_res_given_suc = residue
        .as_ref()
        .map(|r| (p_a * inst.alice_state(r) * p_a).trace().re / p_suc);

    let identity = CMatrix::identity(dim, dim);
    let m = &inst.state_matrix;
    let frob2 = |x: CMatrix| x.iter().map(|z| z.norm_sqr()).sum::<f64>();
    let correlation_mismatch =
        frob2(p_a * m * (&identity - p_b).transpose()) + frob2((&identity - p_a) * m * p_b.transpose());

    let max_weight_deviation = inst
        .ensemble
        .elements()
        .iter()
        .zip(&p_phi_given_suc)
        .map(|((p, _), q)| (q - (1.0 - p_res) * p).abs())
        .fold(0.0, f64::max);

    Ok(ProtocolRunReport {
        family: inst.ensemble.family(),
        n: inst.n,
        dim,
        p_suc,
        p_suc_expected: 1.0 / inst.trace_lb(),
        min_alice_fidelity: fidelities.iter().copied().fold(f64::INFINITY, f64::min),
        p_phi_given_suc,
        alice_state_fidelities: fidelities,
        correlation_mismatch,
        povm_completeness_error,
        povm_min_eigenvalue,
        max_weight_deviation,
        epsilon: residue.as_ref().map(|_| epsilon),
        p_res_given_suc,
        residue_bound_margin,
    })
}

/// Runs the exact protocol for Bob's choice `V`.
pub fn run_exact(inst: &ProtocolInstance, v: &Operator) -> Result<ProtocolRunReport> {
    run(inst, v, 0.0)
}

/// Runs the ε-approximate protocol; `inst` should be built around the
/// reference `ρ_0` the ensemble approximates.
pub fn run_approximate(inst: &ProtocolInstance, v: &Operator, epsilon: f64) -> Result<ProtocolRunReport> {
    if !(0.0..1.0).contains(&epsilon) {
        return Err(NclError::invalid(format!("ε = {epsilon} must lie in [0, 1)")));
    }
    run(inst, v, epsilon)
}

/// Unitary group under which the family's `n`-th moment is invariant.
pub fn family_sampler(ensemble: &WeightedEnsemble) -> Result<Box<dyn GroupSampler>> {
    let d = ensemble.local_dim();
    Ok(match ensemble.family() {
        Family::Multiphase => Box::new(PhaseSampler { d }),
        Family::Spin => Box::new(SpinRotationSampler {
            s: Spin::from_twice(d as u32 - 1),
        }),
        Family::General | Family::Computational | Family::Mub => Box::new(HaarSampler { d }),
        Family::PauliChoi | Family::WeylChoi => Box::new(ChoiOutSampler { inner: HaarSampler { d } }),
        Family::Custom => return Err(NclError::Unsupported("custom ensembles have no symmetry group".into())),
    })
}

/// The single-qubit Clifford group as a sampler.
pub fn clifford_sampler() -> Result<FiniteGroupSampler> {
    Ok(FiniteGroupSampler {
        elements: clifford_group(1)?,
        name: "Clifford(1)".into(),
    })
}

/// `run_exact` for `samples` independent draws of `V`, draw `i` from stream `i`.
pub fn run_exact_sampled(inst: &ProtocolInstance, samples: usize, seed: u64) -> Result<Vec<ProtocolRunReport>> {
    let sampler = family_sampler(&inst.ensemble)?;
    try_ordered_map(samples, |i| run_exact(inst, &sampler.sample(&mut rng_for(seed, i as u64))))
}

/// Largest change of `p_suc` or any `p_{φ|suc}` across reports.
pub fn v_independence(reports: &[ProtocolRunReport]) -> f64 {
    let Some(first) = reports.first() else {
        return 0.0;
    };
    let mut worst: f64 = 0.0;
    for r in reports {
        worst = worst.max((r.p_suc - first.p_suc).abs());
        for (a, b) in r.p_phi_given_suc.iter().zip(&first.p_phi_given_suc) {
            worst = worst.max((a - b).abs());
        }
    }
    worst
}

#[derive(Clone, Debug, Serialize)]
pub struct NoSignallingReport {
    pub cloner: String,
    pub samples: usize,
    pub max_pairwise_trace_distance: f64,
    /// Largest distance of a per-`V` average from their mean `σ_R`.
    pub max_distance_to_mean: f64,
}

fn check_output(out: &Operator) -> Result<()> {
    let tr = out.trace();
    let min = min_eigenvalue(out);
    if (tr.re - 1.0).abs() > 1e-8 || tr.im.abs() > 1e-8 || min < -1e-8 || out.hermitian_deviation() > 1e-8 {
        return Err(NclError::NotDensity(format!(
            "cloner output has trace {tr} and minimum eigenvalue {min:e}"
        )));
    }
    Ok(())
}

fn signalling_summary(cloner: &CloningMap, averages: Vec<Operator>) -> Result<NoSignallingReport> {
    let count = averages.len();
    let mut mean = Operator::zeros(averages[0].factor_dims());
    for a in &averages {
        mean = mean.add(a)?;
    }
    let mean = mean.scale(1.0 / count as f64);
    let mut pairwise: f64 = 0.0;
    let mut to_mean: f64 = 0.0;
    for (i, a) in averages.iter().enumerate() {
        to_mean = to_mean.max(trace_distance(a, &mean)?);
        for b in &averages[i + 1..] {
            pairwise = pairwise.max(trace_distance(a, b)?);
        }
    }
    Ok(NoSignallingReport {
        cloner: cloner.name().to_string(),
        samples: count,
        max_pairwise_trace_distance: pairwise,
        max_distance_to_mean: to_mean,
    })
}

/// For each sampled `V`, forms `Σ_φ p_φ R((V|φ⟩⟨φ|V†)^{⊗n})` and compares the averages.
pub fn no_signalling_check(
    cloner: &CloningMap,
    ensemble: &WeightedEnsemble,
    n: usize,
    m: usize,
    samples: usize,
    seed: u64,
) -> Result<NoSignallingReport> {
    if samples == 0 {
        return Err(NclError::invalid("at least one group sample is required"));
    }
    if cloner.n() != n || cloner.m() != m {
        return Err(NclError::invalid(format!(
            "cloner maps {} → {} copies, check asks for {n} → {m}",
            cloner.n(),
            cloner.m()
        )));
    }
    let sampler = family_sampler(ensemble)?;
    let averages = try_ordered_map(samples, |i| -> Result<Operator> {
        let v = sampler.sample(&mut rng_for(seed, i as u64));
        let mut acc: Option<Operator> = None;
        for (p, phi) in ensemble.elements() {
            let input = phi.apply(&v)?.tensor_power(n)?.projector();
            let out = cloner.apply(&input)?;
            check_output(&out)?;
            let term = out.scale(*p);
            acc = Some(match acc {
                Some(a) => a.add(&term)?,
                None => term,
            });
        }
        Ok(acc.expect("non-empty ensemble"))
    })?;
    signalling_summary(cloner, averages)
}

/// Approximate-design version: Alice's average includes the residue
/// outcome `p_{res|suc} R(ρ_{V,res})` next to the identical-state outcomes.
pub fn no_signalling_check_approximate(
    cloner: &CloningMap,
    inst: &ProtocolInstance,
    epsilon: f64,
    samples: usize,
    seed: u64,
) -> Result<NoSignallingReport> {
    if samples == 0 {
        return Err(NclError::invalid("at least one group sample is required"));
    }
    let sampler = family_sampler(&inst.ensemble)?;
    let p_res = epsilon / (1.0 + epsilon);
    let averages = try_ordered_map(samples, |i| -> Result<Operator> {
        let v = sampler.sample(&mut rng_for(seed, i as u64));
        let report = run_approximate(inst, &v, epsilon)?;
        let targets = transformed_targets(inst, &v)?;
        let mut acc = Operator::zeros(&cloner.output_dims());
        for (q, t) in report.p_phi_given_suc.iter().zip(&targets) {
            let out = cloner.apply(&t.projector())?;
            check_output(&out)?;
            acc = acc.add(&out.scale(*q))?;
        }
        if p_res > 0.0 {
            // Alice's residue state ∝ P_A M (p_res τ)ᵀ M† P_A
            let dim = inst.dim();
            let mut rho_w = CMatrix::zeros(dim, dim);
            for ((p, _), t) in inst.ensemble.elements().iter().zip(&targets) {
                rho_w += t.amplitudes() * t.amplitudes().adjoint() * c64(*p, 0.0);
            }
            let lb_inv_dag = inst.lb_inv_dagger();
            let tau = inst.p_b.matrix().map(|z| z * ((1.0 + epsilon) / epsilon))
                - (&lb_inv_dag * rho_w.transpose() * inst.lb_inv()).map(|z| z / epsilon);
            let p_a = inst.p_a.matrix();
            let raw = p_a * inst.alice_state(&tau.map(|z| z * p_res)) * p_a;
            let weight = raw.trace().re;
            if weight > 0.0 {
                let state = Operator::from_parts(raw.map(|z| z / weight), inst.rho0.factor_dims().to_vec());
                let out = cloner.apply(&state.hermitian_part())?;
                check_output(&out)?;
                acc = acc.add(&out.scale(report.p_res_given_suc.unwrap_or(0.0)))?;
            }
        }
        check_density(&acc)?;
        Ok(acc)
    })?;
    signalling_summary(cloner, averages)
}
