//! Closed-form results: expected period durations, the binary-metric optimum,
//! the law of the stopping time and of the stopped reward, and the value
//! function of the associated ordinary stopping problem.

use serde::Serialize;

use crate::distribution::MetricDistribution;
use crate::error::{Error, Result};
use crate::model::SystemParams;

/// `E[T_n]` for a period that examines exactly `n` cells:
/// `n(L − ½)T_syn + (n/2)(T_sib − T_syn)·p_gamma + T_ra + T_data`.
pub fn expected_period_duration(params: &SystemParams, p_gamma: f64, n: u64) -> f64 {
    let n = n as f64;
    n * (f64::from(params.beam_pairs()) - 0.5) * params.t_syn()
        + 0.5 * n * (params.t_sib() - params.t_syn()) * p_gamma
        + params.t_ra()
        + params.t_data()
}

/// Selection metric equal to `r_max` with probability `q` and zero otherwise,
/// with every cell admitted.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BinaryMetricModel {
    pub q: f64,
    pub r_max: f64,
}

impl BinaryMetricModel {
    pub fn new(q: f64, r_max: f64) -> Result<Self> {
        if !(q > 0.0 && q <= 1.0) {
            return Err(Error::invalid("q", format!("must lie in (0, 1], got {q}")));
        }
        if !(r_max.is_finite() && r_max > 0.0) {
            return Err(Error::invalid(
                "r_max",
                format!("must be positive, got {r_max}"),
            ));
        }
        Ok(Self { q, r_max })
    }

    /// The reward distribution `R̂ ∈ {0, W·T_data·r_max}` with `p_gamma = 1`.
    pub fn distribution(&self, params: &SystemParams) -> Result<MetricDistribution> {
        MetricDistribution::two_point(self.q, params.bits_per_metric() * self.r_max, 1.0)
    }
}

fn binary_search_time(params: &SystemParams) -> f64 {
    (f64::from(params.beam_pairs()) - 0.5) * params.t_syn()
        + 0.5 * (params.t_sib() - params.t_syn())
}

/// Ratio of the expected search time per useful cell to `T_ra + T_data`.
pub fn binary_phi(params: &SystemParams, model: &BinaryMetricModel) -> Result<f64> {
    if model.q <= 0.0 {
        return Err(Error::DegenerateModel(
            "binary metric with q = 0 never yields a reward",
        ));
    }
    Ok(binary_search_time(params) / (model.q * params.theta()))
}

/// Maximum throughput (bit/s) for the binary metric.
pub fn binary_optimal_throughput(params: &SystemParams, model: &BinaryMetricModel) -> Result<f64> {
    if model.q <= 0.0 {
        return Err(Error::DegenerateModel(
            "binary metric with q = 0 never yields a reward",
        ));
    }
    Ok(model.q * params.bits_per_metric() * model.r_max
        / (binary_search_time(params) + model.q * params.theta()))
}

/// Geometric law on `{1, 2, …}` with success probability `p`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GeometricLaw {
    p: f64,
}

impl GeometricLaw {
    pub fn success_probability(&self) -> f64 {
        self.p
    }

    pub fn mean(&self) -> f64 {
        1.0 / self.p
    }

    pub fn variance(&self) -> f64 {
        (1.0 - self.p) / (self.p * self.p)
    }

    pub fn pmf(&self, n: u64) -> f64 {
        if n == 0 {
            return 0.0;
        }
        self.p * (1.0 - self.p).powf((n - 1) as f64)
    }

    /// `P(N > n)`.
    pub fn survival(&self, n: u64) -> f64 {
        (1.0 - self.p).powf(n as f64)
    }

    pub fn cdf(&self, n: u64) -> f64 {
        1.0 - self.survival(n)
    }
}

/// Law of the number of examined cells when every cell is rejected with
/// probability `f_at_threshold`.
pub fn stopping_time_law(f_at_threshold: f64) -> Result<GeometricLaw> {
    if !(0.0..=1.0).contains(&f_at_threshold) {
        return Err(Error::invalid(
            "f_at_threshold",
            format!("must lie in [0, 1), got {f_at_threshold}"),
        ));
    }
    if f_at_threshold == 1.0 {
        return Err(Error::ThresholdAboveSupport {
            threshold: f64::NAN,
        });
    }
    Ok(GeometricLaw {
        p: 1.0 - f_at_threshold,
    })
}

/// Distribution of the reward collected at the stopping cell: `R̂`
/// conditioned on `R̂ ≥ λ*·(T_ra + T_data)`.
#[derive(Debug, Clone, Copy)]
pub struct StoppedValueCdf<'a> {
    dist: &'a MetricDistribution,
    threshold: f64,
    below: f64,
    tail: f64,
}

impl<'a> StoppedValueCdf<'a> {
    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    /// Probability that an examined cell is rejected.
    pub fn rejection_probability(&self) -> f64 {
        self.below
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x < self.threshold {
            return 0.0;
        }
        ((self.dist.cdf(x) - self.below) / self.tail).clamp(0.0, 1.0)
    }

    /// The atoms of `R̂` that can be collected.
    pub fn support(&self) -> &'a [f64] {
        let values = self.dist.values();
        &values[values.partition_point(|&v| v < self.threshold)..]
    }

    pub fn stopping_law(&self) -> GeometricLaw {
        GeometricLaw { p: self.tail }
    }
}

pub fn stopped_value_cdf<'a>(
    dist: &'a MetricDistribution,
    lambda_star: f64,
    params: &SystemParams,
) -> Result<StoppedValueCdf<'a>> {
    let threshold = lambda_star * params.theta();
    let tail = dist.tail_probability(threshold);
    if tail == 0.0 {
        return Err(Error::ThresholdAboveSupport { threshold });
    }
    Ok(StoppedValueCdf {
        dist,
        threshold,
        below: dist.cdf_below(threshold),
        tail,
    })
}

/// Value `V(λ)` of the ordinary problem `sup_N E[U_N − λ·T_N]`: the root of
/// `E[(R̂ − λθ − V)⁺] = λ·η(p_gamma)`, found by bisection.
///
/// `V(λ*) = 0` at the maximum throughput. At `λ = 0` the root degenerates to
/// the largest atom.
pub fn ordinary_value(
    dist: &MetricDistribution,
    params: &SystemParams,
    lambda: f64,
) -> Result<f64> {
    if !(lambda.is_finite() && lambda >= 0.0) {
        return Err(Error::invalid(
            "lambda",
            format!("must be nonnegative, got {lambda}"),
        ));
    }
    let c = lambda * params.theta();
    let cost = lambda * params.eta(dist.p_gamma());
    let excess = |v: f64| dist.expected_excess(c + v) - cost;

    // (x)⁺ ≥ x gives excess(lo) ≥ 0; excess(hi) = −cost ≤ 0.
    let mut lo = dist.mean() - c - cost;
    let mut hi = dist.max() - c;
    let scale = dist.max().max(c).max(cost).max(f64::MIN_POSITIVE);
    for _ in 0..400 {
        if hi - lo <= 1e-12 * scale {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if excess(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}
