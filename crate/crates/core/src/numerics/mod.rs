//! Dense linear algebra, seeded sampling, stable reductions and the
//! special functions needed by the closed-form hypersphere scores.

mod linalg;
mod reduce;
mod rng;
mod sampling;
mod special;

pub use linalg::{cholesky, ensure_finite, row_norms, Matrix, Vector};
pub use reduce::{log_mean_exp, log_softmax, log_sum_exp};
pub use rng::SeedRng;
pub use sampling::{
    sample_gaussian, sample_uniform_sphere, sample_vmf, standard_normal_matrix, GaussianSample,
    SphereSample,
};
pub use special::{
    bessel_i, bessel_i_miller, bessel_i_series, ln_bessel_i, ln_gamma, ln_sphere_area, vmf_log_norm,
};
