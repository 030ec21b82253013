//! Game-based evaluation of biometric template protection (BTP) algorithms.
//!
//! The crate models a Hamming feature space with a noisy user population,
//! a small family of reference protection schemes, Monte Carlo estimators
//! with exhaustive-enumeration twins for every recognition and protection
//! metric, executable irreversibility and unlinkability games, the
//! adversaries needed to attack them, and checkers that turn the relations
//! between those notions into pass/fail verdicts.

pub mod adversaries;
pub mod error;
pub mod games;
pub mod metrics;
pub mod population;
pub mod rng;
pub mod schemes;
pub mod verify;

pub use error::{BtpError, Result};
pub use population::{hamming_distance, neighborhood_overlap, FeatureElement, Population, PopulationConfig, SamplingOracle};
pub use schemes::{lambda_project, BtpScheme, Decision, LambdaSet, LambdaView, ProtectedTemplate};
