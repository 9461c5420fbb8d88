use ncl_core::cloners::{depolarizing_cloner, nonlinear_bestguess_cloner, werner_projection_cloner};
use ncl_core::ensembles::{
    design_residual, general_design, multiphase_design, pauli_choi_design, perturbed_design, spin_coherent_design,
    weyl_choi_design, Spin, WeightedEnsemble,
};
use ncl_core::numerics::{haar_unitary, random_phase_unitary, rng_for, Operator};
use ncl_core::protocol::{
    build_protocol, build_protocol_with_reference, clifford_sampler, no_signalling_check,
    no_signalling_check_approximate, run_approximate, run_exact, run_exact_sampled, v_independence,
};
use ncl_core::schurweyl::GroupSampler;

fn exact_families() -> Vec<(WeightedEnsemble, usize)> {
    vec![
        (multiphase_design(2, 1).unwrap(), 1),
        (multiphase_design(2, 2).unwrap(), 2),
        (multiphase_design(3, 2).unwrap(), 2),
        (general_design(2, 2).unwrap(), 2),
        (general_design(3, 2).unwrap(), 2),
        (spin_coherent_design(Spin::from_twice(1), 2).unwrap(), 2),
        (spin_coherent_design(Spin::from_twice(2), 1).unwrap(), 1),
        (pauli_choi_design(1).unwrap(), 1),
        (weyl_choi_design(3).unwrap(), 1),
    ]
}

#[test]
fn exact_protocol_prepares_identical_states() {
    for (w, n) in exact_families() {
        let inst = build_protocol(&w, n).unwrap();
        let reports = run_exact_sampled(&inst, 5, 17).unwrap();
        for r in &reports {
            assert!(r.min_alice_fidelity >= 1.0 - 1e-10, "{}: {}", w.family(), r.min_alice_fidelity);
            assert!(r.correlation_mismatch < 1e-12);
            assert!((r.p_suc - r.p_suc_expected).abs() < 1e-10);
            assert!(r.povm_completeness_error < 1e-10);
            assert!(r.povm_min_eigenvalue > -1e-10);
            assert!(r.max_weight_deviation < 1e-10);
            assert!((r.probability_total() - 1.0).abs() < 1e-10);
        }
        assert!(v_independence(&reports) < 1e-10);
    }
}

#[test]
fn mub_success_probability_with_scaled_complement() {
    let w = general_design(2, 2).unwrap();
    let rho0 = w.moment(2).unwrap();
    let inst = build_protocol_with_reference(&w, 2, &rho0, 1.0 / 3f64.sqrt()).unwrap();
    let r = run_exact(&inst, &haar_unitary(2, 5).unwrap()).unwrap();
    assert!((r.p_suc - 0.75).abs() < 1e-12);
    assert_eq!(inst.support_rank, 3);
}

#[test]
fn conditional_quantities_ignore_complement_scale() {
    let w = multiphase_design(2, 2).unwrap();
    let rho0 = w.moment(2).unwrap();
    let v = haar_unitary(2, 8).unwrap();
    let inst = build_protocol_with_reference(&w, 2, &rho0, 1.0).unwrap();
    let a = run_exact(&inst, &v).unwrap();
    let b = run_exact(&build_protocol_with_reference(&w, 2, &rho0, 0.3).unwrap(), &v).unwrap();
    for (x, y) in a.p_phi_given_suc.iter().zip(&b.p_phi_given_suc) {
        assert!((x - y).abs() < 1e-12);
    }
    for (x, y) in a.alice_state_fidelities.iter().zip(&b.alice_state_fidelities) {
        assert!((x - y).abs() < 1e-10);
    }
    // p_suc = 1 / (1 + c⊥² rank P⊥)
    let kernel = (4 - inst.support_rank) as f64;
    assert!(kernel > 0.0);
    assert!((a.p_suc - 1.0 / (1.0 + kernel)).abs() < 1e-12);
    assert!((b.p_suc - 1.0 / (1.0 + 0.09 * kernel)).abs() < 1e-12);
}

#[test]
fn clifford_group_preserves_stabilizer_design() {
    let w = general_design(2, 2).unwrap();
    let inst = build_protocol(&w, 2).unwrap();
    let cl = clifford_sampler().unwrap();
    let mut reports = Vec::new();
    for i in 0..8 {
        let v = cl.sample(&mut rng_for(3, i));
        reports.push(run_exact(&inst, &v).unwrap());
    }
    assert!(v_independence(&reports) < 1e-10);
    assert!(reports.iter().all(|r| r.min_alice_fidelity > 1.0 - 1e-10));
}

fn approximate_setup(delta: f64) -> (ncl_core::protocol::ProtocolInstance, f64) {
    let base = multiphase_design(2, 2).unwrap();
    let w = perturbed_design(&base, delta, 11).unwrap();
    let rho0 = w.reference_moment(2).unwrap();
    let eps = design_residual(&w, 2, &rho0, "multiphase").unwrap().epsilon_estimate.unwrap();
    (build_protocol_with_reference(&w, 2, &rho0, 1.0).unwrap(), eps)
}

#[test]
fn approximate_protocol_residue_is_bounded() {
    let (inst, eps) = approximate_setup(0.05);
    assert!(eps > 0.0 && eps < 0.2);
    for i in 0..5 {
        let v = random_phase_unitary(2, &mut rng_for(40, i));
        let r = run_approximate(&inst, &v, eps).unwrap();
        assert!(r.povm_completeness_error < 1e-10);
        assert!(r.povm_min_eigenvalue > -1e-10);
        let p_res = r.p_res_given_suc.unwrap();
        assert!(p_res <= 2.0 * eps / (1.0 + eps) + 1e-10);
        assert!((p_res - eps / (1.0 + eps)).abs() < 1e-10);
        assert!(r.residue_bound_margin.unwrap() > -1e-10);
        assert!(r.min_alice_fidelity > 1.0 - 1e-10);
        assert!((r.probability_total() - 1.0).abs() < 1e-10);
    }
}

#[test]
fn approximate_protocol_rejects_small_epsilon() {
    let (inst, eps) = approximate_setup(0.2);
    // an ε below the true deviation leaves the residue non-PSD
    assert!(run_approximate(&inst, &Operator::identity(&[2]), eps * 0.5).is_err());
}

#[test]
fn linear_cloners_do_not_signal() {
    let w = multiphase_design(2, 2).unwrap();
    for cloner in [
        werner_projection_cloner(2, 2, 3).unwrap(),
        depolarizing_cloner(2, 2, 3, 0.25).unwrap(),
    ] {
        let rep = no_signalling_check(&cloner, &w, 2, 3, 10, 2).unwrap();
        assert!(rep.max_pairwise_trace_distance < 1e-9, "{}", rep.max_pairwise_trace_distance);
    }
}

#[test]
fn bestguess_cloner_signals() {
    let w = multiphase_design(2, 1).unwrap();
    // guessing among the protocol's own two states is covariant and cannot signal
    let own = nonlinear_bestguess_cloner(&w, 1, 2).unwrap();
    let rep = no_signalling_check(&own, &w, 1, 2, 20, 6).unwrap();
    assert!(rep.max_pairwise_trace_distance < 1e-9);
    let finer = nonlinear_bestguess_cloner(&multiphase_design(2, 3).unwrap(), 1, 2).unwrap();
    let rep = no_signalling_check(&finer, &w, 1, 2, 20, 6).unwrap();
    assert!(rep.max_pairwise_trace_distance > 0.01, "{}", rep.max_pairwise_trace_distance);
}

#[test]
fn approximate_design_linear_cloner_does_not_signal() {
    let (inst, eps) = approximate_setup(0.05);
    let cloner = werner_projection_cloner(2, 2, 3).unwrap();
    let rep = no_signalling_check_approximate(&cloner, &inst, eps, 8, 1).unwrap();
    assert!(rep.max_pairwise_trace_distance < 1e-9, "{}", rep.max_pairwise_trace_distance);
}

#[test]
fn mismatched_cloner_shape_is_rejected() {
    let w = multiphase_design(2, 1).unwrap();
    let cloner = werner_projection_cloner(2, 1, 3).unwrap();
    assert!(no_signalling_check(&cloner, &w, 1, 2, 3, 0).is_err());
}
