//! Reference cloning maps: linear CPTP cloners stored as superoperators and
//! a nonlinear best-guess map, plus worst/average fidelity estimation.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::ensembles::{spin_coherent_state, spin_design_grid, Spin, WeightedEnsemble};
use crate::error::{NclError, Result};
use crate::numerics::operator::{c64, CMatrix, CVector, Operator, PureState};
use crate::numerics::{eigenvalues, fidelity_with_pure, rng_for, NclRng};
use crate::par::try_ordered_map;
use crate::symspace::projector_sym;

/// Largest superoperator (entries) a linear cloner will store.
pub const MAX_SUPEROPERATOR_ENTRIES: u128 = 1 << 24;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ClonerKind {
    LinearMatrix,
    MeasurePrepare,
    NonlinearBestguess,
}

#[derive(Clone, Debug)]
enum Payload {
    /// Row-major vectorization: `vec(R(X)) = S vec(X)`.
    Superoperator(CMatrix),
    BestGuess {
        /// `|φ⟩^{⊗n}` per reference element.
        candidates: Vec<PureState>,
        singles: Vec<PureState>,
    },
}

/// Map from `n` copies to `m` copies of a `d`-dimensional system.
#[derive(Clone, Debug)]
pub struct CloningMap {
    kind: ClonerKind,
    name: String,
    n: usize,
    m: usize,
    d: usize,
    payload: Payload,
}

#[derive(Clone, Debug, Serialize)]
pub struct CptpReport {
    pub choi_min_eigenvalue: f64,
    /// Largest entry of `Tr_out(J) − I`.
    pub trace_preservation_error: f64,
}

fn guard_superop(d_in: usize, d_out: usize) -> Result<()> {
    let entries = (d_in as u128).pow(2) * (d_out as u128).pow(2);
    if entries > MAX_SUPEROPERATOR_ENTRIES {
        return Err(NclError::guard("superoperator entries", entries, MAX_SUPEROPERATOR_ENTRIES));
    }
    Ok(())
}

/// Superoperator of the linear extension of `f` from its action on `|i⟩⟨j|`.
fn superop_from_fn<F: Fn(&CMatrix) -> CMatrix>(d_in: usize, d_out: usize, f: F) -> CMatrix {
    let mut s = CMatrix::zeros(d_out * d_out, d_in * d_in);
    for i in 0..d_in {
        for j in 0..d_in {
            let mut e = CMatrix::zeros(d_in, d_in);
            e[(i, j)] = c64(1.0, 0.0);
            let out = f(&e);
            let col = i * d_in + j;
            for a in 0..d_out {
                for b in 0..d_out {
                    s[(a * d_out + b, col)] = out[(a, b)];
                }
            }
        }
    }
    s
}

fn power(d: usize, k: usize) -> usize {
    d.pow(k as u32)
}

impl CloningMap {
    pub fn kind(&self) -> ClonerKind {
        self.kind
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn local_dim(&self) -> usize {
        self.d
    }

    pub fn input_dim(&self) -> usize {
        power(self.d, self.n)
    }

    pub fn output_dim(&self) -> usize {
        power(self.d, self.m)
    }

    pub fn output_dims(&self) -> Vec<usize> {
        vec![self.d; self.m]
    }

    pub fn is_linear(&self) -> bool {
        matches!(self.payload, Payload::Superoperator(_))
    }

    pub fn apply(&self, rho: &Operator) -> Result<Operator> {
        let d_in = self.input_dim();
        if rho.dim() != d_in {
            return Err(NclError::DimMismatch(format!(
                "cloner expects dimension {d_in}, got {}",
                rho.dim()
            )));
        }
        let d_out = self.output_dim();
        match &self.payload {
            Payload::Superoperator(s) => {
                let x = rho.matrix();
                let v = CVector::from_iterator(d_in * d_in, (0..d_in).flat_map(|i| (0..d_in).map(move |j| x[(i, j)])));
                let out = s * v;
                Ok(Operator::from_parts(
                    CMatrix::from_fn(d_out, d_out, |a, b| out[a * d_out + b]),
                    self.output_dims(),
                ))
            }
            Payload::BestGuess { candidates, singles } => {
                let mut best = 0;
                let mut best_val = f64::NEG_INFINITY;
                for (k, c) in candidates.iter().enumerate() {
                    let val = fidelity_with_pure(rho, c)?;
                    if val > best_val + 1e-12 {
                        best = k;
                        best_val = val;
                    }
                }
                Ok(singles[best].tensor_power(self.m)?.projector().with_factor_dims(self.output_dims())?)
            }
        }
    }

    /// Positivity of the Choi matrix and trace preservation, for linear kinds.
    pub fn cptp_report(&self) -> Result<CptpReport> {
        let Payload::Superoperator(s) = &self.payload else {
            return Err(NclError::Unsupported("CPTP check of a nonlinear map".into()));
        };
        let d_in = self.input_dim();
        let d_out = self.output_dim();
        // J = Σ_{ij} |i⟩⟨j| ⊗ R(|i⟩⟨j|)
        let mut j = CMatrix::zeros(d_in * d_out, d_in * d_out);
        let mut tp_err: f64 = 0.0;
        for i in 0..d_in {
            for k in 0..d_in {
                let col = s.column(i * d_in + k);
                let mut tr = c64(0.0, 0.0);
                for a in 0..d_out {
                    tr += col[a * d_out + a];
                    for b in 0..d_out {
                        j[(i * d_out + a, k * d_out + b)] = col[a * d_out + b];
                    }
                }
                let want = if i == k { 1.0 } else { 0.0 };
                tp_err = tp_err.max((tr - c64(want, 0.0)).norm());
            }
        }
        let ev = eigenvalues(&Operator::from_parts(j, vec![d_in * d_out]));
        Ok(CptpReport {
            choi_min_eigenvalue: ev[0],
            trace_preservation_error: tp_err,
        })
    }
}

/// `ρ ↦ c P_sym^m (ρ ⊗ I^{⊗(m−n)}) P_sym^m` on the symmetric subspace,
/// completed by `Tr((I − P_sym^n)ρ) |0…0⟩⟨0…0|`. The constant `c` is
/// measured on random symmetric inputs and checked to be input-independent.
pub fn werner_projection_cloner(d: usize, n: usize, m: usize) -> Result<CloningMap> {
    if n == 0 || m < n {
        return Err(NclError::invalid(format!("need 1 ≤ n ≤ m, got n = {n}, m = {m}")));
    }
    let d_in = power(d, n);
    let d_out = power(d, m);
    guard_superop(d_in, d_out)?;
    let p_m = projector_sym(d, m)?.into_matrix();
    let p_n = projector_sym(d, n)?.into_matrix();
    let extra = power(d, m - n);
    let id_extra = CMatrix::identity(extra, extra);
    let raw = |x: &CMatrix| &p_m * x.kronecker(&id_extra) * &p_m;

    let mut norms = Vec::with_capacity(20);
    for k in 0..20 {
        let psi = crate::numerics::haar_state(d, &mut rng_for(0x5eed, k)).tensor_power(n)?;
        let x = psi.amplitudes() * psi.amplitudes().adjoint();
        norms.push(raw(&x).trace().re);
    }
    let c = 1.0 / norms[0];
    if norms.iter().any(|v| (v * c - 1.0).abs() > 1e-10) {
        return Err(NclError::CheckFailed(format!(
            "projection normalization depends on the input: {norms:?}"
        )));
    }
    let id_in = CMatrix::identity(d_in, d_in);
    let s = superop_from_fn(d_in, d_out, |x| {
        let mut out = raw(x).map(|z| z * c);
        out[(0, 0)] += ((&id_in - &p_n) * x).trace();
        out
    });
    Ok(CloningMap {
        kind: ClonerKind::LinearMatrix,
        name: "werner".into(),
        n,
        m,
        d,
        payload: Payload::Superoperator(s),
    })
}

/// `ρ ↦ ((1−p)ρ + p Tr(ρ) I/d^n) ⊗ (I/d)^{⊗(m−n)}`
pub fn depolarizing_cloner(d: usize, n: usize, m: usize, p: f64) -> Result<CloningMap> {
    if n == 0 || m < n {
        return Err(NclError::invalid(format!("need 1 ≤ n ≤ m, got n = {n}, m = {m}")));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(NclError::invalid(format!("depolarizing probability {p} outside [0, 1]")));
    }
    let d_in = power(d, n);
    let d_out = power(d, m);
    guard_superop(d_in, d_out)?;
    let extra = power(d, m - n);
    let mixed_extra = CMatrix::identity(extra, extra).map(|z| z / extra as f64);
    let id_in = CMatrix::identity(d_in, d_in);
    let s = superop_from_fn(d_in, d_out, |x| {
        let dep = x.map(|z| z * (1.0 - p)) + id_in.map(|z| z * (p / d_in as f64)) * x.trace();
        dep.kronecker(&mixed_extra)
    });
    Ok(CloningMap {
        kind: ClonerKind::LinearMatrix,
        name: if p == 0.0 && m == n { "identity".into() } else { "depolarizing".into() },
        n,
        m,
        d,
        payload: Payload::Superoperator(s),
    })
}

pub fn identity_cloner(d: usize, n: usize) -> Result<CloningMap> {
    depolarizing_cloner(d, n, n, 0.0)
}

/// POVM elements `(2ns+1) w_i |s,Ω_i⟩⟨s,Ω_i|^{⊗n}` on a spin design grid of
/// order `n · resolution`, with the grid angles.
pub fn measure_prepare_povm(s: Spin, n: usize, resolution: usize) -> Result<Vec<(Operator, f64, f64)>> {
    if resolution == 0 {
        return Err(NclError::invalid("resolution must be at least 1"));
    }
    let scale = s.times(n).dim() as f64;
    spin_design_grid(s, n * resolution)?
        .into_iter()
        .map(|(w, theta, phi)| {
            let v = spin_coherent_state(s, theta, phi).tensor_power(n)?;
            Ok((v.projector().scale(scale * w), theta, phi))
        })
        .collect()
}

/// Measures with [`measure_prepare_povm`] and prepares `|s,Ω_i⟩^{⊗m}`; the
/// complement `I − P_{ns}` prepares `|s,−s⟩^{⊗m}`.
pub fn measure_prepare_spin_cloner(s: Spin, n: usize, m: usize, resolution: usize) -> Result<CloningMap> {
    if n == 0 || m == 0 {
        return Err(NclError::invalid("n and m must be positive"));
    }
    if s.twice == 0 {
        return Err(NclError::invalid("spin must be positive"));
    }
    let d = s.dim();
    let d_in = power(d, n);
    let d_out = power(d, m);
    guard_superop(d_in, d_out)?;
    let povm = measure_prepare_povm(s, n, resolution)?;
    let mut complement = CMatrix::identity(d_in, d_in);
    let mut branches: Vec<(CMatrix, CMatrix)> = Vec::with_capacity(povm.len() + 1);
    for (e, theta, phi) in &povm {
        complement -= e.matrix();
        let out = spin_coherent_state(s, *theta, *phi).tensor_power(m)?.projector().into_matrix();
        branches.push((e.matrix().clone(), out));
    }
    let mut fallback = CMatrix::zeros(d_out, d_out);
    fallback[(0, 0)] = c64(1.0, 0.0);
    branches.push((complement, fallback));
    let superop = superop_from_fn(d_in, d_out, |x| {
        let mut out = CMatrix::zeros(d_out, d_out);
        for (e, prep) in &branches {
            let p = (e * x).trace();
            if p.norm() > 0.0 {
                out += prep * p;
            }
        }
        out
    });
    Ok(CloningMap {
        kind: ClonerKind::MeasurePrepare,
        name: "measure-prepare".into(),
        n,
        m,
        d,
        payload: Payload::Superoperator(superop),
    })
}

/// `ρ ↦ |φ*⟩⟨φ*|^{⊗m}` with `φ* = argmax_φ ⟨φ^{⊗n}|ρ|φ^{⊗n}⟩`; ties go to the lowest index.
pub fn nonlinear_bestguess_cloner(reference: &WeightedEnsemble, n: usize, m: usize) -> Result<CloningMap> {
    if n == 0 || m == 0 {
        return Err(NclError::invalid("n and m must be positive"));
    }
    let candidates = reference
        .elements()
        .iter()
        .map(|(_, s)| s.tensor_power(n))
        .collect::<Result<Vec<_>>>()?;
    Ok(CloningMap {
        kind: ClonerKind::NonlinearBestguess,
        name: "bestguess".into(),
        n,
        m,
        d: reference.base_dim(),
        payload: Payload::BestGuess {
            candidates,
            singles: reference.elements().iter().map(|(_, s)| s.clone()).collect(),
        },
    })
}

/// State family a cloner is evaluated on, with its natural measure.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum StateFamily {
    /// All pure states of `C^d`, Haar measure. Parameters: real and
    /// imaginary parts of an unnormalized amplitude vector.
    General { d: usize },
    /// `(1/√d) Σ e^{iθ_j}|j⟩`, uniform phases. Parameters: `θ_1..θ_d`.
    Multiphase { d: usize },
    /// Spin coherent states, uniform on the sphere. Parameters: `(θ, φ)`.
    Spin { s: Spin },
}

impl StateFamily {
    pub fn dim(&self) -> usize {
        match *self {
            StateFamily::General { d } | StateFamily::Multiphase { d } => d,
            StateFamily::Spin { s } => s.dim(),
        }
    }

    pub fn state(&self, params: &[f64]) -> Result<PureState> {
        match *self {
            StateFamily::General { d } => {
                let v = CVector::from_fn(d, |i, _| c64(params[2 * i], params[2 * i + 1]));
                PureState::normalized(v, vec![d])
            }
            StateFamily::Multiphase { d } => {
                let a = 1.0 / (d as f64).sqrt();
                let v = CVector::from_fn(d, |i, _| c64(a * params[i].cos(), a * params[i].sin()));
                Ok(PureState::from_parts(v, vec![d]))
            }
            StateFamily::Spin { s } => Ok(spin_coherent_state(s, params[0], params[1])),
        }
    }

    fn random_params(&self, rng: &mut NclRng) -> Vec<f64> {
        let tau = std::f64::consts::TAU;
        match *self {
            StateFamily::General { d } => (0..2 * d).map(|_| rng.sample::<f64, _>(StandardNormal)).collect(),
            StateFamily::Multiphase { d } => (0..d).map(|_| rng.random::<f64>() * tau).collect(),
            StateFamily::Spin { .. } => {
                let theta = (2.0 * rng.random::<f64>() - 1.0).acos();
                vec![theta, rng.random::<f64>() * tau]
            }
        }
    }

    fn perturb(&self, params: &[f64], scale: f64, rng: &mut NclRng) -> Vec<f64> {
        let mut out: Vec<f64> = params
            .iter()
            .map(|p| p + scale * rng.sample::<f64, _>(StandardNormal))
            .collect();
        if let StateFamily::Spin { .. } = self {
            out[0] = out[0].rem_euclid(std::f64::consts::TAU);
            if out[0] > std::f64::consts::PI {
                out[0] = std::f64::consts::TAU - out[0];
            }
        }
        out
    }

    /// Deterministic coarse grid over the parameter space.
    fn grid(&self) -> Vec<Vec<f64>> {
        let tau = std::f64::consts::TAU;
        let pi = std::f64::consts::PI;
        match *self {
            StateFamily::Spin { .. } => {
                let mut g = Vec::new();
                for i in 0..=16 {
                    for j in 0..32 {
                        g.push(vec![pi * i as f64 / 16.0, tau * j as f64 / 32.0]);
                    }
                }
                g
            }
            StateFamily::Multiphase { d } => {
                let steps: usize = match d {
                    0..=2 => 64,
                    3 => 16,
                    _ => 4,
                };
                let count = steps.pow(d.saturating_sub(1) as u32);
                (0..count)
                    .map(|mut idx| {
                        let mut p = vec![0.0; d];
                        for slot in p.iter_mut().skip(1) {
                            *slot = tau * (idx % steps) as f64 / steps as f64;
                            idx /= steps;
                        }
                        p
                    })
                    .collect()
            }
            StateFamily::General { d } => {
                let mut g = Vec::new();
                // basis states
                for i in 0..d {
                    let mut p = vec![0.0; 2 * d];
                    p[2 * i] = 1.0;
                    g.push(p);
                }
                // Bloch-type grid on each pair of basis states
                for i in 0..d {
                    for j in i + 1..d {
                        for a in 1..8 {
                            let t = pi * a as f64 / 8.0;
                            for b in 0..16 {
                                let f = tau * b as f64 / 16.0;
                                let mut p = vec![0.0; 2 * d];
                                p[2 * i] = (t / 2.0).cos();
                                p[2 * j] = (t / 2.0).sin() * f.cos();
                                p[2 * j + 1] = (t / 2.0).sin() * f.sin();
                                g.push(p);
                            }
                        }
                    }
                }
                g
            }
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct FidelityEstimate {
    /// Smallest fidelity found; an upper estimate of the true minimum.
    pub worst_case: f64,
    pub average_case: f64,
    pub argmin_state: Vec<f64>,
    /// Total number of evaluated input states.
    pub samples: usize,
    pub average_samples: usize,
}

#[derive(Clone, Copy, Debug)]
pub struct FidelityOptions {
    pub refinements: usize,
    pub average_samples: usize,
    pub seed: u64,
}

impl Default for FidelityOptions {
    fn default() -> Self {
        Self {
            refinements: 1000,
            average_samples: 10_000,
            seed: 0,
        }
    }
}

/// `F(R(|ψ⟩⟨ψ|^{⊗n}), |ψ⟩⟨ψ|^{⊗m})`
pub fn clone_fidelity(cloner: &CloningMap, psi: &PureState) -> Result<f64> {
    let input = psi.tensor_power(cloner.n())?.projector();
    let out = cloner.apply(&input)?;
    fidelity_with_pure(&out, &psi.tensor_power(cloner.m())?)
}

/// Worst case over a grid, random points and local refinements around the
/// running minimum; average over `average_samples` draws from the family measure.
pub fn fidelity_estimate(cloner: &CloningMap, family: StateFamily, options: FidelityOptions) -> Result<FidelityEstimate> {
    if family.dim() != cloner.local_dim() {
        return Err(NclError::DimMismatch(format!(
            "family states have dimension {}, cloner acts on {}",
            family.dim(),
            cloner.local_dim()
        )));
    }
    let eval = |p: &[f64]| -> Result<f64> { clone_fidelity(cloner, &family.state(p)?) };
    let seed = options.seed;

    let avg_points: Vec<Vec<f64>> = (0..options.average_samples)
        .map(|i| family.random_params(&mut rng_for(seed, i as u64)))
        .collect();
    let avg_vals = try_ordered_map(avg_points.len(), |i| eval(&avg_points[i]))?;

    let mut points: Vec<Vec<f64>> = family.grid();
    let uniform = options.refinements / 2;
    let offset = options.average_samples as u64;
    points.extend((0..uniform).map(|i| family.random_params(&mut rng_for(seed, offset + i as u64))));
    let mut vals = try_ordered_map(points.len(), |i| eval(&points[i]))?;
    points.extend(avg_points.iter().cloned());
    vals.extend(avg_vals.iter().copied());

    let mut best = 0;
    for (i, v) in vals.iter().enumerate() {
        if *v < vals[best] {
            best = i;
        }
    }
    let mut best_params = points[best].clone();
    let mut best_val = vals[best];
    let local = options.refinements - uniform;
    let local_offset = offset + uniform as u64;
    let mut scale = 0.2;
    for i in 0..local {
        let candidate = family.perturb(&best_params, scale, &mut rng_for(seed, local_offset + i as u64));
        let v = eval(&candidate)?;
        if v < best_val {
            best_val = v;
            best_params = candidate;
        } else if i % 50 == 49 {
            scale *= 0.7;
        }
    }
    let average_case = if avg_vals.is_empty() {
        best_val
    } else {
        avg_vals.iter().sum::<f64>() / avg_vals.len() as f64
    };
    Ok(FidelityEstimate {
        worst_case: best_val,
        average_case,
        argmin_state: best_params,
        samples: vals.len() + local,
        average_samples: avg_vals.len(),
    })
}
