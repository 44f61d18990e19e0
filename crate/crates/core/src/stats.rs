//! Goodness-of-fit tests for checking simulated laws against predictions.

use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::analytic::GeometricLaw;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TestResult {
    pub statistic: f64,
    pub p_value: f64,
}

/// Kolmogorov survival function `Q(λ) = 2 Σ (−1)^(k−1) exp(−2k²λ²)`.
pub fn kolmogorov_survival(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let k = f64::from(k);
        let term = (-2.0 * k * k * lambda * lambda).exp();
        sum += if k as u32 % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

fn ks_p_value(d: f64, effective_n: f64) -> f64 {
    let sqrt_n = effective_n.sqrt();
    kolmogorov_survival((sqrt_n + 0.12 + 0.11 / sqrt_n) * d)
}

fn sorted(sample: &[f64]) -> Result<Vec<f64>> {
    if sample.is_empty() {
        return Err(Error::EmptyDistribution);
    }
    if sample.iter().any(|x| x.is_nan()) {
        return Err(Error::invalid("sample", "contains NaN"));
    }
    let mut v = sample.to_vec();
    v.sort_by(f64::total_cmp);
    Ok(v)
}

/// One-sample Kolmogorov–Smirnov test against a CDF `F(x) = P(X ≤ x)`.
///
/// For a CDF with jumps the asymptotic p-value is conservative.
pub fn ks_one_sample(sample: &[f64], cdf: impl Fn(f64) -> f64) -> Result<TestResult> {
    let xs = sorted(sample)?;
    let n = xs.len() as f64;
    let mut d = 0.0f64;
    let mut i = 0;
    while i < xs.len() {
        let x = xs[i];
        let mut j = i;
        while j < xs.len() && xs[j] == x {
            j += 1;
        }
        let f = cdf(x);
        // below the jump at x the empirical CDF is i/n, at x it is j/n
        d = d.max((j as f64 / n - f).abs()).max(i as f64 / n - f);
        i = j;
    }
    Ok(TestResult {
        statistic: d,
        p_value: ks_p_value(d, n),
    })
}

/// Two-sample Kolmogorov–Smirnov test.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<TestResult> {
    let (xa, xb) = (sorted(a)?, sorted(b)?);
    let (na, nb) = (xa.len() as f64, xb.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d = 0.0f64;
    while i < xa.len() && j < xb.len() {
        let x = xa[i].min(xb[j]);
        while i < xa.len() && xa[i] == x {
            i += 1;
        }
        while j < xb.len() && xb[j] == x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    Ok(TestResult {
        statistic: d,
        p_value: ks_p_value(d, na * nb / (na + nb)),
    })
}

/// Pearson chi-square test of observed counts against expected counts,
/// with `constraints` degrees of freedom removed besides the total.
pub fn chi_square(observed: &[u64], expected: &[f64], constraints: usize) -> Result<TestResult> {
    if observed.len() != expected.len() {
        return Err(Error::invalid(
            "expected",
            "must have one entry per observed bin",
        ));
    }
    if observed.len() < constraints + 2 {
        return Err(Error::invalid(
            "observed",
            "too few bins for the degrees of freedom",
        ));
    }
    if expected.iter().any(|&e| e.is_nan() || e <= 0.0) {
        return Err(Error::invalid(
            "expected",
            "every bin needs a positive expected count",
        ));
    }
    let statistic: f64 = observed
        .iter()
        .zip(expected)
        .map(|(&o, &e)| {
            let diff = o as f64 - e;
            diff * diff / e
        })
        .sum();
    let dof = (observed.len() - 1 - constraints) as f64;
    let law = ChiSquared::new(dof).expect("positive degrees of freedom");
    Ok(TestResult {
        statistic,
        p_value: law.sf(statistic),
    })
}

/// Chi-square test of positive integer draws against a geometric law.
///
/// Bins are `{1}, {2}, …` while each has an expected count of at least five,
/// with everything beyond pooled into one tail bin.
pub fn geometric_chi_square(draws: &[u64], law: &GeometricLaw) -> Result<TestResult> {
    if draws.is_empty() {
        return Err(Error::EmptyDistribution);
    }
    if draws.contains(&0) {
        return Err(Error::invalid("draws", "geometric draws start at 1"));
    }
    let total = draws.len() as f64;
    let mut expected = Vec::new();
    let mut n = 1;
    while total * law.pmf(n) >= 5.0 && total * law.survival(n) >= 5.0 {
        expected.push(total * law.pmf(n));
        n += 1;
    }
    let last = n - 1;
    expected.push(total * law.survival(last));
    let mut observed = vec![0u64; expected.len()];
    for &k in draws {
        let bin = if k > last {
            expected.len() - 1
        } else {
            (k - 1) as usize
        };
        observed[bin] += 1;
    }
    chi_square(&observed, &expected, 0)
}
