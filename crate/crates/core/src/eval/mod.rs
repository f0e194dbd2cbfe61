//! Retrieval benchmarking over candidate sets, multi-trial experiment
//! runners (joint chains, separately trained pairs, bank-size sweeps),
//! hypersphere uniformity diagnostics and 2-D dumps.

mod bridging;
mod dump;
mod recall;
mod trials;
mod uniformity;

pub use bridging::{
    run_independent_trial, run_independent_trials, scaling_experiment, IndependentReport,
    ScalingReport,
};
pub use dump::{dump_representations_2d, read_points_csv, write_points_csv, Point2d};
pub use recall::{
    rank_of_truth, recall_at_k, recall_from_scores, recall_from_set_scores, CandidateSets,
};
pub use trials::{
    ablate_ci, chain_recalls, mean_std, pair_recall, run_trial, run_trials, AbortedTrial, Method,
    MethodCurve, RetrievalConfig, RetrievalReport, TrialCurves, TrialData,
};
pub use uniformity::{kolmogorov_q, ks_two_sample, uniformity_test, KsResult, UniformityReport};
