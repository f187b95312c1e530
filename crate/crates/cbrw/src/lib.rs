//! Confidence-bounds random walk (CBRW) over tree-structured data streams.
//!
//! A set of data streams is arranged as a tree; a few streams have means
//! above their level's threshold. The walk starts at the root and moves
//! between neighboring nodes, steering each move by a local sequential
//! test that compares a confidence bound on the sample mean against the
//! threshold. It terminates by declaring a target at a configurable
//! confidence level, using a number of samples that grows with the depth
//! of the tree rather than with the number of streams.
//!
//! Module map:
//! - [`rng`]: deterministic, substream-keyed random source.
//! - [`streams`]: observation models (constant, Gaussian, Bernoulli,
//!   two-sided Pareto) and the truncated-mean statistic.
//! - [`seqtest`]: the local sequential test in sub-Gaussian and
//!   heavy-tailed forms, plus its expected-sample-count bound.
//! - [`hierarchy`]: tree topology, thresholds, synthetic instances,
//!   ground-truth target semantics, subtree decomposition.
//! - [`walk`]: the walk policies (leaf, hierarchical, multi-target,
//!   general trees) and their constants.
//! - [`applications`]: adapters for noisy group testing, adaptive
//!   sampling of a step function, and prefix-tree heavy hitters.

pub mod applications;
pub mod hierarchy;
pub mod rng;
pub mod seqtest;
pub mod streams;
pub mod walk;

pub use hierarchy::{NodeAddress, TargetPlacement, TreeModel};
pub use rng::RandomSource;
pub use seqtest::{TestOutput, TestParams, TestVerdict};
pub use streams::{StreamSpec, TailModel};
pub use walk::{Detection, DetectionSet, WalkConfig, WalkMode};
