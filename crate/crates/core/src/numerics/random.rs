use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::operator::{c64, CMatrix, CVector, Operator, PureState};
use crate::error::{NclError, Result};

pub type NclRng = ChaCha8Rng;

/// Independent generator for `(seed, stream)`. Each Monte Carlo sample
/// draws from its own stream so results do not depend on evaluation order.
pub fn rng_for(seed: u64, stream: u64) -> NclRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Matrix with iid standard complex Gaussian entries.
pub fn ginibre<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMatrix {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    CMatrix::from_fn(rows, cols, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        c64(re * s, im * s)
    })
}

pub fn haar_unitary_with<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Result<Operator> {
    if d == 0 {
        return Err(NclError::invalid("unitary dimension must be positive"));
    }
    let qr = ginibre(d, d, rng).qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..d {
        let rjj = r[(j, j)];
        let norm = rjj.norm();
        let phase = if norm > 0.0 { rjj / norm } else { c64(1.0, 0.0) };
        for i in 0..d {
            q[(i, j)] *= phase;
        }
    }
    Operator::from_matrix(q)
}

pub fn haar_unitary(d: usize, seed: u64) -> Result<Operator> {
    haar_unitary_with(d, &mut rng_for(seed, 0))
}

pub fn haar_state<R: Rng + ?Sized>(d: usize, rng: &mut R) -> PureState {
    loop {
        let g = ginibre(d, 1, rng);
        let v = CVector::from_iterator(d, g.iter().copied());
        if let Ok(state) = PureState::normalized(v, vec![d]) {
            return state;
        }
    }
}

/// Full-rank random density `GG†/Tr(GG†)` with the given factor structure.
pub fn random_density<R: Rng + ?Sized>(factor_dims: &[usize], rng: &mut R) -> Operator {
    let d: usize = factor_dims.iter().product();
    let g = ginibre(d, d, rng);
    let m = &g * g.adjoint();
    let tr = m.trace().re;
    Operator::from_parts(m.map(|z| z / tr), factor_dims.to_vec())
}

/// Random PSD matrix of the given rank, not normalized.
pub fn random_psd<R: Rng + ?Sized>(d: usize, rank: usize, rng: &mut R) -> Operator {
    let g = ginibre(d, rank.max(1), rng);
    Operator::from_parts(&g * g.adjoint(), vec![d])
}

/// `diag(e^{iθ_1}, …, e^{iθ_d})` with uniform phases.
pub fn random_phase_unitary<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Operator {
    let tau = std::f64::consts::TAU;
    let mut m = CMatrix::zeros(d, d);
    for i in 0..d {
        let t: f64 = rng.random::<f64>() * tau;
        m[(i, i)] = c64(t.cos(), t.sin());
    }
    Operator::from_parts(m, vec![d])
}
