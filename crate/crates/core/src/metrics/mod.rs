//! Recognition and protection metrics: Monte Carlo estimators, their exact
//! enumeration twins, and the extremal quantities the games are scored
//! against.

mod estimate;
mod exact;
mod extremal;
mod match_rate;
mod stats;

pub use estimate::{
    diversity_entropy, est_baseline_rates, est_fmr_bp, est_fmr_div, est_fmr_tp, est_mr_of_feature, est_overlap_probability,
    est_scheme_fnmr, pt_match_rate, pt_match_stats, rmr_of_feature, EstimationConfig,
};
pub use exact::{exact_baseline_rates, ExactModel, MValue, Provenance, EXACT_MAX_N};
pub use extremal::{extremal_mr, extremal_rmr, mr_of_feature, overlap_probability, overlap_rates, CandidateSearch, CLOSED_FORM_MAX_N};
pub use match_rate::MatchRateStats;
pub use stats::{wilson_interval, z_score, AdvantageEstimate, Confidence, IntervalMethod};
