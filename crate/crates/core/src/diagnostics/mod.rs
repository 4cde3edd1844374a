//! Ground-truth oracles, sampler statistics, and property audits.

mod checks;
mod instances;
mod oracle;
mod stats;

pub use checks::{
    logdet_gradient, logdet_plus_identity, lewis_stability, symmetry_parameter, verify_cross_ratio,
    verify_det_ratio_lemma, verify_gaussian_tail, verify_local_norm, verify_logdet_convexity, verify_nu_symmetry,
    InstanceDetail, VerificationReport, CONVEXITY_STEP_FRACTION, CONVEXITY_TOLERANCE,
};
pub use instances::{interior_points, random_polytope, random_spectrahedron, random_unit_vector};
pub use oracle::{
    grid_tv, grid_tv_with_floor, rejection_oracle, GridSpec, GridTv, DEFAULT_CELLS_PER_AXIS, MAX_ORACLE_DIM,
};
pub use stats::{
    ess, ess_columns, ks_coefficient, ks_statistic, ks_test, ks_two_sample_statistic, ks_two_sample_test, KsResult,
    MIN_ESS_LENGTH,
};
