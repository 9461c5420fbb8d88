use std::collections::{HashSet, VecDeque};

use crate::error::{NclError, Result};
use crate::numerics::operator::{gates, C64, MAX_DENSE_DIM};
use crate::numerics::Operator;

const PHASE_TOL: f64 = 1e-9;

/// Fixes the global phase so that the first entry with modulus above
/// `PHASE_TOL` (row-major) is positive real.
pub fn canonical_phase(u: &Operator) -> Operator {
    let d = u.dim();
    let m = u.matrix();
    let mut phase = C64::new(1.0, 0.0);
    'outer: for i in 0..d {
        for j in 0..d {
            let z = m[(i, j)];
            if z.norm() > PHASE_TOL {
                phase = z.conj() / z.norm();
                break 'outer;
            }
        }
    }
    Operator::from_parts(m.map(|z| z * phase), u.factor_dims().to_vec())
}

fn phase_key(u: &Operator) -> Vec<i64> {
    let scale = 1e8;
    let m = u.matrix();
    let d = u.dim();
    let mut key = Vec::with_capacity(2 * d * d);
    for i in 0..d {
        for j in 0..d {
            let z = m[(i, j)];
            key.push((z.re * scale).round() as i64);
            key.push((z.im * scale).round() as i64);
        }
    }
    key
}

/// Single-qubit Clifford group modulo global phase, by breadth-first closure
/// of `{H, S}` starting from the identity.
pub fn clifford_group(r: usize) -> Result<Vec<Operator>> {
    if r != 1 {
        return Err(NclError::Unsupported(format!("Clifford group for r = {r}")));
    }
    let generators = [gates::hadamard(), gates::phase_s()];
    let start = Operator::identity(&[2]);
    let mut seen = HashSet::new();
    seen.insert(phase_key(&start));
    let mut group = vec![start.clone()];
    let mut queue = VecDeque::from([start]);
    while let Some(g) = queue.pop_front() {
        for h in &generators {
            let next = canonical_phase(&h.matmul(&g)?);
            if seen.insert(phase_key(&next)) {
                group.push(next.clone());
                queue.push_back(next);
            }
        }
    }
    Ok(group)
}

/// `(1/|G|²) Σ_{g,h} |Tr(g†h)|^{2t}`
pub fn frame_potential(group: &[Operator], t: usize) -> Result<f64> {
    let first = group
        .first()
        .ok_or_else(|| NclError::invalid("frame potential of an empty set"))?;
    let d = first.dim();
    let size = (d as u128).checked_pow(t as u32).unwrap_or(u128::MAX);
    if size > MAX_DENSE_DIM as u128 {
        return Err(NclError::guard("d^t", size, MAX_DENSE_DIM as u128));
    }
    let mut total = 0.0;
    for g in group {
        let ga = g.matrix().adjoint();
        for h in group {
            if h.dim() != d {
                return Err(NclError::DimMismatch("group elements differ in dimension".into()));
            }
            let tr = (&ga * h.matrix()).trace();
            total += tr.norm_sqr().powi(t as i32);
        }
    }
    let n = group.len() as f64;
    Ok(total / (n * n))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn group_size_and_closure() {
        let g = clifford_group(1).unwrap();
        assert_eq!(g.len(), 24);
        let keys: HashSet<_> = g.iter().map(phase_key).collect();
        for a in &g {
            assert!(a.unitarity_deviation() < 1e-12);
            for b in &g {
                let prod = canonical_phase(&a.matmul(b).unwrap());
                assert!(keys.contains(&phase_key(&prod)));
            }
        }
        for p in [gates::pauli_x(), gates::pauli_y(), gates::pauli_z()] {
            assert!(keys.contains(&phase_key(&canonical_phase(&p))));
        }
        assert!(clifford_group(2).is_err());
    }

    #[test]
    fn frame_potentials() {
        let g = clifford_group(1).unwrap();
        for (t, want) in [(1, 1.0), (2, 2.0), (3, 5.0)] {
            assert!((frame_potential(&g, t).unwrap() - want).abs() < 1e-9);
        }
        // the Clifford group is not a 4-design: Haar value would be 14
        assert!(frame_potential(&g, 4).unwrap() > 14.0 + 1e-3);
    }
}
