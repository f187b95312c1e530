//! Local confidence-bound sequential test L(alpha, beta, eta).
//!
//! The test draws samples one at a time and stops as soon as a
//! confidence bound on the mean clears the threshold: output 1 when the
//! lower bound exceeds eta (confidence 1−alpha), output 0 when the upper
//! bound falls below eta (confidence 1−beta). Sub-Gaussian streams use
//! Hoeffding radii on the plain sample mean; heavy-tailed streams use
//! truncated-mean radii. A finite budget turns the never-terminating
//! boundary case (mean exactly at eta) into an `Inconclusive` verdict.

use crate::rng::RandomSource;
use crate::streams::{self, SampleBuffer, StreamSpec, TailModel};
use std::collections::BinaryHeap;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum SeqTestError {
    #[error("confidence parameter {0} must lie in (0, 1)")]
    Confidence(f64),
    #[error("sample count {0} must be >= 1")]
    SampleCount(u64),
    #[error("xi = {0} must be >= 0")]
    Xi(f64),
    #[error("budget must be >= 1")]
    Budget,
    #[error("moment parameters invalid: u = {u}, b = {b}")]
    MomentParams { u: f64, b: f64 },
    #[error("params tail model does not match what the test requires")]
    TailMismatch,
    #[error("gap {0} must be > 0")]
    Gap(f64),
}

/// Default per-test sample budget.
pub const DEFAULT_TEST_BUDGET: u64 = 10_000_000;

/// Parameters of one local sequential test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TestParams {
    pub alpha: f64,
    pub beta: f64,
    pub eta: f64,
    pub tail: TailModel,
    pub budget: u64,
}

impl TestParams {
    pub fn new(
        alpha: f64,
        beta: f64,
        eta: f64,
        tail: TailModel,
        budget: u64,
    ) -> Result<Self, SeqTestError> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(SeqTestError::Confidence(alpha));
        }
        if !(beta > 0.0 && beta < 1.0) {
            return Err(SeqTestError::Confidence(beta));
        }
        if budget == 0 {
            return Err(SeqTestError::Budget);
        }
        if let TailModel::HeavyTailed { b, u } = tail {
            if !(b > 1.0 && b < 2.0 && u > 0.0) {
                return Err(SeqTestError::MomentParams { u, b });
            }
        }
        Ok(TestParams {
            alpha,
            beta,
            eta,
            tail,
            budget,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TestOutput {
    One,
    Zero,
    Inconclusive,
}

impl std::fmt::Display for TestOutput {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            TestOutput::One => write!(f, "1"),
            TestOutput::Zero => write!(f, "0"),
            TestOutput::Inconclusive => write!(f, "inconclusive"),
        }
    }
}

/// Outcome of one test run, with the terminating statistics for audit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TestVerdict {
    pub output: TestOutput,
    pub samples_used: u64,
    /// Mean statistic at termination (truncated mean of the rule that
    /// fired, for heavy tails).
    pub final_mean: f64,
    /// Radius of the upper confidence bound at termination (beta side,
    /// the `mean + r < eta` rule).
    pub final_radius_upper: f64,
    /// Radius of the lower confidence bound at termination (alpha side,
    /// the `mean − r > eta` rule).
    pub final_radius_lower: f64,
}

/// Hoeffding-style radius sqrt(2·xi·ln(2s³/p)/s).
pub fn radius_subgaussian(s: u64, p: f64, xi: f64) -> Result<f64, SeqTestError> {
    if s == 0 {
        return Err(SeqTestError::SampleCount(s));
    }
    if !(p > 0.0 && p < 1.0) {
        return Err(SeqTestError::Confidence(p));
    }
    if !(xi >= 0.0) {
        return Err(SeqTestError::Xi(xi));
    }
    Ok(radius_subgaussian_unchecked(s as f64, p, xi))
}

#[inline]
fn radius_subgaussian_unchecked(s: f64, p: f64, xi: f64) -> f64 {
    (2.0 * xi * (2.0 * s * s * s / p).ln() / s).sqrt()
}

/// Truncated-mean radius 4·u^(1/b)·(ln(2s³/p)/s)^((b−1)/b).
pub fn radius_heavy(s: u64, p: f64, u: f64, b: f64) -> Result<f64, SeqTestError> {
    if s == 0 {
        return Err(SeqTestError::SampleCount(s));
    }
    if !(p > 0.0 && p < 1.0) {
        return Err(SeqTestError::Confidence(p));
    }
    if !(u > 0.0 && b > 1.0 && b < 2.0) {
        return Err(SeqTestError::MomentParams { u, b });
    }
    Ok(radius_heavy_unchecked(s as f64, p, u, b))
}

#[inline]
fn radius_heavy_unchecked(s: f64, p: f64, u: f64, b: f64) -> f64 {
    4.0 * u.powf(1.0 / b) * ((2.0 * s * s * s / p).ln() / s).powf((b - 1.0) / b)
}

/// Lemma-style upper bound on the expected stopping time of the test
/// for a stream whose mean sits `gap` away from eta:
/// 48/gap²·ln(24·(2/p)^(1/3)/gap²) + 2, where `p` is the confidence
/// parameter of the opposite-side rule. Used as an oracle in acceptance
/// checks, not on any decision path.
pub fn lemma1_bound(gap: f64, p_opposite: f64) -> Result<f64, SeqTestError> {
    if !(gap > 0.0) {
        return Err(SeqTestError::Gap(gap));
    }
    if !(p_opposite > 0.0 && p_opposite < 1.0) {
        return Err(SeqTestError::Confidence(p_opposite));
    }
    let g2 = gap * gap;
    Ok(48.0 / g2 * (24.0 * (2.0 / p_opposite).powf(1.0 / 3.0) / g2).ln() + 2.0)
}

/// Incrementally maintained truncated mean whose truncation level
/// tightens as the test advances.
///
/// Sample `t` is kept at step `s` iff |X(t)| ≤ (u·t/D_s)^(1/b) with
/// D_s = ln(1/p_s) increasing in `s`, equivalently iff
/// |X(t)|^b/(u·t) ≤ 1/D_s. Since the bound only decreases, a dropped
/// sample never re-enters; a max-heap on |X(t)|^b/(u·t) makes each
/// eviction O(log n) once.
struct TruncatedMeanTracker {
    u: f64,
    b: f64,
    kept: BinaryHeap<HeapEntry>,
    kept_sum: f64,
    count: u64,
}

struct HeapEntry {
    kappa: f64,
    value: f64,
}

impl PartialEq for HeapEntry {
    fn eq(&self, other: &Self) -> bool {
        self.kappa.total_cmp(&other.kappa) == std::cmp::Ordering::Equal
    }
}
impl Eq for HeapEntry {}
impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.kappa.total_cmp(&other.kappa)
    }
}

impl TruncatedMeanTracker {
    fn new(u: f64, b: f64) -> Self {
        TruncatedMeanTracker {
            u,
            b,
            kept: BinaryHeap::new(),
            kept_sum: 0.0,
            count: 0,
        }
    }

    /// Record the next sample and retighten to truncation level
    /// `log_inv_p` = ln(1/p_s). Returns the truncated mean at this step.
    fn step(&mut self, x: f64, log_inv_p: f64) -> f64 {
        self.count += 1;
        let kappa = x.abs().powf(self.b) / (self.u * self.count as f64);
        let limit = 1.0 / log_inv_p;
        if kappa <= limit {
            self.kept_sum += x;
            self.kept.push(HeapEntry { kappa, value: x });
        }
        while let Some(top) = self.kept.peek() {
            if top.kappa > limit {
                self.kept_sum -= top.value;
                self.kept.pop();
            } else {
                break;
            }
        }
        self.kept_sum / self.count as f64
    }
}

/// Run L(alpha, beta, eta) against `stream`, drawing fresh samples from
/// `rng`. Equality with eta in either comparison continues sampling; at
/// budget exhaustion the verdict is `Inconclusive`.
pub fn run_local_test(
    stream: &StreamSpec,
    params: &TestParams,
    rng: &mut RandomSource,
) -> Result<TestVerdict, SeqTestError> {
    match params.tail {
        TailModel::SubGaussian { xi } => {
            // Hoeffding radii are only valid for sub-Gaussian streams.
            if !matches!(stream.tail, TailModel::SubGaussian { .. }) {
                return Err(SeqTestError::TailMismatch);
            }
            if !(xi >= 0.0) {
                return Err(SeqTestError::Xi(xi));
            }
            Ok(run_subgaussian(stream, params, xi, rng))
        }
        // The truncated-mean test only needs E[|X|^b] <= u, which the
        // caller asserts by supplying (b, u); any stream family is
        // acceptable.
        TailModel::HeavyTailed { b, u } => Ok(run_heavy(stream, params, u, b, rng)),
    }
}

fn run_subgaussian(
    stream: &StreamSpec,
    params: &TestParams,
    xi: f64,
    rng: &mut RandomSource,
) -> TestVerdict {
    let mut sum = 0.0;
    for s in 1..=params.budget {
        sum += streams::draw(stream, rng);
        let sf = s as f64;
        let mean = sum / sf;
        let r_lower = radius_subgaussian_unchecked(sf, params.alpha, xi);
        if mean - r_lower > params.eta {
            return TestVerdict {
                output: TestOutput::One,
                samples_used: s,
                final_mean: mean,
                final_radius_upper: radius_subgaussian_unchecked(sf, params.beta, xi),
                final_radius_lower: r_lower,
            };
        }
        let r_upper = radius_subgaussian_unchecked(sf, params.beta, xi);
        if mean + r_upper < params.eta {
            return TestVerdict {
                output: TestOutput::Zero,
                samples_used: s,
                final_mean: mean,
                final_radius_upper: r_upper,
                final_radius_lower: r_lower,
            };
        }
    }
    let sf = params.budget as f64;
    TestVerdict {
        output: TestOutput::Inconclusive,
        samples_used: params.budget,
        final_mean: sum / sf,
        final_radius_upper: radius_subgaussian_unchecked(sf, params.beta, xi),
        final_radius_lower: radius_subgaussian_unchecked(sf, params.alpha, xi),
    }
}

fn run_heavy(
    stream: &StreamSpec,
    params: &TestParams,
    u: f64,
    b: f64,
    rng: &mut RandomSource,
) -> TestVerdict {
    // The truncation level at step s is ln(1/p_s) with p_s = p/(2s³),
    // i.e. ln(2s³/p): the same union-bound schedule the radius uses.
    let mut upper_side = TruncatedMeanTracker::new(u, b);
    // When alpha == beta the two rules share one statistic.
    let shared = params.alpha == params.beta;
    let mut lower_side = if shared {
        None
    } else {
        Some(TruncatedMeanTracker::new(u, b))
    };
    for s in 1..=params.budget {
        let x = streams::draw(stream, rng);
        let sf = s as f64;
        let d_alpha = (2.0 * sf * sf * sf / params.alpha).ln();
        let d_beta = (2.0 * sf * sf * sf / params.beta).ln();
        let mean_alpha = upper_side.step(x, d_alpha);
        let mean_beta = match lower_side.as_mut() {
            Some(t) => t.step(x, d_beta),
            None => mean_alpha,
        };
        let r_lower = radius_heavy_unchecked(sf, params.alpha, u, b);
        if mean_alpha - r_lower > params.eta {
            return TestVerdict {
                output: TestOutput::One,
                samples_used: s,
                final_mean: mean_alpha,
                final_radius_upper: radius_heavy_unchecked(sf, params.beta, u, b),
                final_radius_lower: r_lower,
            };
        }
        let r_upper = radius_heavy_unchecked(sf, params.beta, u, b);
        if mean_beta + r_upper < params.eta {
            return TestVerdict {
                output: TestOutput::Zero,
                samples_used: s,
                final_mean: mean_beta,
                final_radius_upper: r_upper,
                final_radius_lower: r_lower,
            };
        }
    }
    let sf = params.budget as f64;
    TestVerdict {
        output: TestOutput::Inconclusive,
        samples_used: params.budget,
        final_mean: upper_side.kept_sum / sf,
        final_radius_upper: radius_heavy_unchecked(sf, params.beta, u, b),
        final_radius_lower: radius_heavy_unchecked(sf, params.alpha, u, b),
    }
}
