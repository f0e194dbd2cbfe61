//! Scorers for modality pairs that never co-occur in training: direct
//! critic comparison, Monte Carlo marginalization over a bank of
//! intermediate representations, and the two closed forms (uniform
//! hypersphere and isotropic Gaussian representation laws).

mod checks;
mod discrete;
mod estimator;
mod laws;

pub use checks::{gaussian_law_check, sphere_law_check, GaussianLawCheck, LawCase, SphereLawCheck};
pub use discrete::{binary_counterexample, DiscreteChain, DiscreteJoint};
pub use estimator::{
    direct_score, lse_of_sums, mc_lse_log_ratio, mc_lse_matrix, mc_lse_selected, BridgeEstimator,
    PhiBank,
};
pub use laws::{
    gaussian_law_coefficients, gaussian_law_log_ratio, gaussian_law_log_ratio_with_delta,
    sphere_law_log_ratio,
};
