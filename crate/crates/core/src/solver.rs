//! Solvers for the maximum ergodic throughput `λ*` and the connection
//! threshold `μ`.
//!
//! `λ*` is the unique root of
//!
//! ```text
//! residual(λ) = E[(R̂ − λθ)⁺] − λ·η(p_gamma)
//! ```
//!
//! with `θ = T_ra + T_data`. The residual is continuous and strictly
//! decreasing, so [`solve_bisection`] brackets it on `[0, max R̂ / θ]`.
//! [`solve_iterative`] instead iterates the equivalent rate map
//!
//! ```text
//! h(λ) = E[R̂·𝕀(R̂ ≥ λθ)] / (η + θ·P(R̂ ≥ λθ))
//! ```
//!
//! which is the throughput of the threshold policy at `λθ`. Since no policy
//! beats `λ*`, `h(λ) ≤ λ*` everywhere, and `h(λ) ≥ λ` below `λ*`: after the
//! first step the iterates climb monotonically to `λ*`.

use serde::Serialize;

use crate::distribution::MetricDistribution;
use crate::error::{Error, Result};
use crate::model::{CellObservation, SystemParams};

pub const DEFAULT_BISECTION_REL_TOL: f64 = 1e-10;
pub const DEFAULT_ITERATION_REL_TOL: f64 = 1e-8;
pub const DEFAULT_MAX_ITER: usize = 500;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolverSettings {
    pub bisection_rel_tol: f64,
    pub iteration_rel_tol: f64,
    pub max_iter: usize,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            bisection_rel_tol: DEFAULT_BISECTION_REL_TOL,
            iteration_rel_tol: DEFAULT_ITERATION_REL_TOL,
            max_iter: DEFAULT_MAX_ITER,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverMethod {
    Bisection,
    FixedPointIteration,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StoppingSolution {
    pub method: SolverMethod,
    /// Maximum ergodic throughput, bit/s.
    pub lambda_star: f64,
    /// Connection threshold on the selection metric, bit/s/Hz.
    pub mu: f64,
    /// Threshold on the effective reward, bits: `λ*·(T_ra + T_data)`.
    pub reward_threshold: f64,
    /// `(iteration, λ)` for every evaluated iterate or bisection midpoint.
    pub trace: Vec<(usize, f64)>,
    /// `residual(λ*)` in bits.
    pub residual: f64,
}

impl StoppingSolution {
    fn new(
        method: SolverMethod,
        dist: &MetricDistribution,
        params: &SystemParams,
        lambda_star: f64,
        trace: Vec<(usize, f64)>,
    ) -> Self {
        let reward_threshold = lambda_star * params.theta();
        Self {
            method,
            lambda_star,
            mu: reward_threshold / params.bits_per_metric(),
            reward_threshold,
            trace,
            residual: residual(dist, params, lambda_star),
        }
    }

    pub fn iterations(&self) -> usize {
        self.trace.len()
    }
}

/// Empirical reward distribution of a batch of observed cells.
pub fn build_distribution(observations: &[CellObservation]) -> Result<MetricDistribution> {
    MetricDistribution::from_observations(observations)
}

/// `E[(R̂ − λθ)⁺] − λ·η(p_gamma)`, in bits.
pub fn residual(dist: &MetricDistribution, params: &SystemParams, lambda: f64) -> f64 {
    dist.expected_excess(lambda * params.theta()) - lambda * params.eta(dist.p_gamma())
}

/// Throughput of the policy that stops at the first cell with `R̂ ≥ λθ`.
pub fn threshold_policy_rate(dist: &MetricDistribution, params: &SystemParams, lambda: f64) -> f64 {
    let c = lambda * params.theta();
    dist.partial_expectation(c)
        / (params.eta(dist.p_gamma()) + params.theta() * dist.tail_probability(c))
}

/// Throughput of stopping at the first cell, `E[R̂]/(η + θ)`; never above `λ*`.
pub fn default_initial_value(dist: &MetricDistribution, params: &SystemParams) -> f64 {
    threshold_policy_rate(dist, params, 0.0)
}

fn check_positive_mean(dist: &MetricDistribution) -> Result<()> {
    if dist.mean() > 0.0 {
        Ok(())
    } else {
        Err(Error::ZeroMeanDistribution)
    }
}

fn check_tol(name: &'static str, tol: f64) -> Result<()> {
    if tol.is_finite() && tol > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(name, format!("must be positive, got {tol}")))
    }
}

pub fn solve_bisection(
    dist: &MetricDistribution,
    params: &SystemParams,
    rel_tol: f64,
) -> Result<StoppingSolution> {
    check_positive_mean(dist)?;
    check_tol("rel_tol", rel_tol)?;
    let mut lo = 0.0;
    let mut hi = dist.max() / params.theta();
    let mut trace = Vec::new();
    let mut k = 0;
    while hi - lo > rel_tol * hi {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        k += 1;
        trace.push((k, mid));
        if residual(dist, params, mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(StoppingSolution::new(
        SolverMethod::Bisection,
        dist,
        params,
        0.5 * (lo + hi),
        trace,
    ))
}

/// Iterates `λ[t+1] = h(λ[t])` from `lambda0` until successive iterates agree
/// to `rel_tol`.
pub fn solve_iterative(
    dist: &MetricDistribution,
    params: &SystemParams,
    lambda0: f64,
    rel_tol: f64,
    max_iter: usize,
) -> Result<StoppingSolution> {
    if !(lambda0.is_finite() && lambda0 > 0.0) {
        return Err(Error::invalid(
            "lambda0",
            format!("must be positive, got {lambda0}"),
        ));
    }
    check_positive_mean(dist)?;
    check_tol("rel_tol", rel_tol)?;
    let mut lambda = lambda0;
    let mut trace = vec![(0, lambda0)];
    for t in 1..=max_iter {
        let next = threshold_policy_rate(dist, params, lambda);
        trace.push((t, next));
        if (next - lambda).abs() <= rel_tol * next {
            return Ok(StoppingSolution::new(
                SolverMethod::FixedPointIteration,
                dist,
                params,
                next,
                trace,
            ));
        }
        lambda = next;
    }
    Err(Error::MaxIterationsExceeded {
        max_iter,
        last: lambda,
    })
}

/// `μ = λ*·θ / (W·T_data)`.
pub fn optimal_threshold(solution: &StoppingSolution, params: &SystemParams) -> f64 {
    solution.lambda_star * params.theta() / params.bits_per_metric()
}
