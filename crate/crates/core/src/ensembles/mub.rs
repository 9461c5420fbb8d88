use std::collections::BTreeMap;

use super::{Family, WeightedEnsemble};
use crate::error::{NclError, Result};
use crate::numerics::operator::{c64, gates, CVector, Operator, PureState};

/// Multiplies by a phase so the first entry with modulus above 1e-9 is positive real.
fn canonical_state(v: CVector, dims: Vec<usize>) -> Result<PureState> {
    let phase = v
        .iter()
        .find(|z| z.norm() > 1e-9)
        .map(|z| z.conj() / z.norm())
        .unwrap_or(c64(1.0, 0.0));
    PureState::normalized(v.map(|z| z * phase), dims)
}

/// Joint eigenvector of commuting Pauli strings with the given signs, via the
/// rank-one projector `Π (I + s_k P_k)/2`.
fn joint_eigenvector(paulis: &[Operator], signs: &[f64]) -> Result<PureState> {
    let dims = paulis[0].factor_dims().to_vec();
    let mut proj = Operator::identity(&dims);
    for (p, &s) in paulis.iter().zip(signs) {
        let factor = Operator::identity(&dims).add(&p.scale(s))?.scale(0.5);
        proj = proj.matmul(&factor)?;
    }
    let m = proj.matrix();
    let col = (0..m.ncols())
        .max_by(|&a, &b| m.column(a).norm().total_cmp(&m.column(b).norm()))
        .unwrap_or(0);
    canonical_state(m.column(col).into_owned(), dims)
}

fn pauli(label: char) -> Operator {
    match label {
        'X' => gates::pauli_x(),
        'Y' => gates::pauli_y(),
        'Z' => gates::pauli_z(),
        _ => Operator::identity(&[2]),
    }
}

fn pauli_string(label: &str) -> Operator {
    let mut chars = label.chars();
    let mut op = pauli(chars.next().unwrap_or('I'));
    for c in chars {
        op = op.tensor(&pauli(c));
    }
    op
}

/// Maximal set of `2^r + 1` mutually unbiased bases on `r` qubits, as
/// joint eigenbases of a partition of the non-identity Pauli strings into
/// commuting classes.
pub fn mub_bases(r: usize) -> Result<Vec<Vec<PureState>>> {
    let classes: Vec<Vec<&str>> = match r {
        1 => vec![vec!["Z"], vec!["X"], vec!["Y"]],
        2 => vec![
            vec!["ZI", "IZ"],
            vec!["XI", "IX"],
            vec!["YI", "IY"],
            vec!["XY", "YZ"],
            vec!["YX", "ZY"],
        ],
        _ => return Err(NclError::Unsupported(format!("MUB construction for r = {r}"))),
    };
    let mut bases = Vec::with_capacity(classes.len());
    for class in classes {
        let ops: Vec<Operator> = class.iter().map(|l| pauli_string(l)).collect();
        let mut basis = Vec::with_capacity(1 << r);
        for bits in 0..(1usize << r) {
            let signs: Vec<f64> = (0..r)
                .map(|k| if (bits >> (r - 1 - k)) & 1 == 0 { 1.0 } else { -1.0 })
                .collect();
            basis.push(joint_eigenvector(&ops, &signs)?);
        }
        bases.push(basis);
    }
    Ok(bases)
}

fn uniform(family: Family, params: BTreeMap<String, f64>, states: Vec<PureState>) -> Result<WeightedEnsemble> {
    let w = 1.0 / states.len() as f64;
    WeightedEnsemble::new(family, params, states.into_iter().map(|s| (w, s)).collect())
}

/// `2^r(2^r+1)` uniformly weighted MUB states on `r` qubits; a quantum 2-design.
pub fn mub_design(r: usize) -> Result<WeightedEnsemble> {
    let states: Vec<PureState> = mub_bases(r)?.into_iter().flatten().collect();
    let mut params = BTreeMap::new();
    params.insert("r".to_string(), r as f64);
    params.insert("d".to_string(), (1usize << r) as f64);
    uniform(Family::Mub, params, states)
}

fn is_prime(p: usize) -> bool {
    p >= 2 && (2..p).take_while(|k| k * k <= p).all(|k| p % k != 0)
}

/// `p + 1` MUBs in odd prime dimension: the computational basis and the
/// quadratic-phase bases `(1/√p) Σ_j ω^{b j² + a j}|j⟩`.
pub fn mub_bases_prime(p: usize) -> Result<Vec<Vec<PureState>>> {
    if !is_prime(p) || p == 2 {
        return Err(NclError::Unsupported(format!("quadratic-phase MUBs need an odd prime, got {p}")));
    }
    let mut bases = vec![(0..p).map(|i| PureState::basis(&[p], i)).collect::<Result<Vec<_>>>()?];
    let norm = 1.0 / (p as f64).sqrt();
    for b in 0..p {
        let mut basis = Vec::with_capacity(p);
        for a in 0..p {
            let v = CVector::from_fn(p, |j, _| {
                let e = (b * j * j + a * j) % p;
                let ang = std::f64::consts::TAU * e as f64 / p as f64;
                c64(norm * ang.cos(), norm * ang.sin())
            });
            basis.push(PureState::normalized(v, vec![p])?);
        }
        bases.push(basis);
    }
    Ok(bases)
}

/// `p(p+1)` uniformly weighted MUB states in odd prime dimension.
pub fn mub_design_prime(p: usize) -> Result<WeightedEnsemble> {
    let states: Vec<PureState> = mub_bases_prime(p)?.into_iter().flatten().collect();
    let mut params = BTreeMap::new();
    params.insert("d".to_string(), p as f64);
    uniform(Family::Mub, params, states)
}

/// A complete set of MUBs in dimension `d` when one of the constructions applies.
pub fn mub_design_dim(d: usize) -> Result<WeightedEnsemble> {
    match d {
        2 => mub_design(1),
        4 => mub_design(2),
        _ => mub_design_prime(d),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn check_unbiased(bases: &[Vec<PureState>]) {
        let d = bases[0][0].dim() as f64;
        for (i, bi) in bases.iter().enumerate() {
            for (j, bj) in bases.iter().enumerate() {
                for (a, u) in bi.iter().enumerate() {
                    for (b, v) in bj.iter().enumerate() {
                        let o = u.inner(v).unwrap().norm_sqr();
                        let want = if i != j {
                            1.0 / d
                        } else if a == b {
                            1.0
                        } else {
                            0.0
                        };
                        assert!((o - want).abs() < 1e-12, "bases {i},{j} states {a},{b}: {o}");
                    }
                }
            }
        }
    }

    #[test]
    fn qubit_mubs_are_unbiased() {
        for r in [1, 2] {
            let bases = mub_bases(r).unwrap();
            assert_eq!(bases.len(), (1 << r) + 1);
            check_unbiased(&bases);
        }
        assert_eq!(mub_design(1).unwrap().len(), 6);
        assert_eq!(mub_design(2).unwrap().len(), 20);
        assert!(mub_design(3).is_err());
    }

    #[test]
    fn prime_mubs_are_unbiased() {
        for p in [3, 5] {
            let bases = mub_bases_prime(p).unwrap();
            assert_eq!(bases.len(), p + 1);
            check_unbiased(&bases);
        }
        assert!(mub_bases_prime(4).is_err());
    }
}
