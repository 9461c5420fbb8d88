//! Dense complex linear algebra for small quantum systems.

pub mod linalg;
pub mod operator;
pub mod oracles;
pub mod random;

pub use linalg::{
    check_density, eigenvalues, fidelity_with_pure, hermitian_eigen, max_eigenvalue, min_eigenvalue,
    psd_pinv_power, psd_sqrt, spectral_map, support_projector, trace_distance, uhlmann_fidelity, unitary_exp,
    HermitianEigen, CLIP_TOL, PSD_TOL,
};
pub use operator::{
    gates, invert_permutation, max_entangled, CMatrix, CVector, Operator, PureState, C64, MAX_DENSE_DIM,
};
pub use oracles::{pinching_check, rank_inequality_check, PinchingReport, RankInequalityReport};
pub use random::{
    ginibre, haar_state, haar_unitary, haar_unitary_with, random_density, random_phase_unitary, random_psd,
    rng_for, NclRng,
};
