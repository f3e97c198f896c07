//! Uniformity testing over an *unknown* support.
//!
//! Classical uniformity testers decide whether samples come from the uniform
//! distribution on a known domain. This crate addresses the harder question
//! that arises when nothing is known about the domain: do the samples come
//! from a distribution that is uniform on *some* subset of it? The label set
//! carries no structure, so everything here is built out of collision
//! statistics, which are the only information a relabeling-invariant decision
//! procedure can use.
//!
//! The crate has three layers:
//!
//! * exact arithmetic on explicit finite distributions ([`dist`]): power-sum
//!   norms, total variation distance, and an exact oracle for the distance to
//!   the class of uniform distributions;
//! * sample-based procedures ([`estimator`], [`tester`]) driven by pull-based
//!   oracles ([`sampling`]) and incremental collision counters ([`collision`]):
//!   an adaptive estimator of the squared 2-norm that samples until a fixed
//!   number of pairwise collisions, and the two-stage uniformity tester built
//!   on top of it;
//! * machinery that certifies sample-complexity *lower* bounds numerically
//!   ([`lowerbound`]) and a deterministic Monte Carlo harness ([`harness`])
//!   for validating the probabilistic guarantees of the sample-based layer.
//!
//! Everything randomized is seeded explicitly and reproducible bit-for-bit;
//! see [`sampling::rng`] for the generator contract.

pub mod collision;
pub mod dist;
pub mod estimator;
pub mod harness;
pub mod lowerbound;
pub mod sampling;
pub mod tester;

mod accum;

pub use collision::CollisionTracker;
pub use dist::{
    norms, norms_to_distance_bound, tv_distance, tv_to_uniform_class, uniformity_gap, Distribution,
    NormSummary, UniformClassDistance,
};
pub use estimator::{build_l2_adversary, estimate_l2_squared, EstimatorConfig, L2Estimate};
pub use sampling::{FamilySpec, RecordingOracle, SampleOracle, StreamOracle, SyntheticOracle};
pub use tester::{expected_stage2_budget, test_uniformity, Decision, TesterConfig, Verdict};
