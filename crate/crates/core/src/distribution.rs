//! Empirical distribution of the effective reward `R̂` (bits).
//!
//! Stored as sorted atoms with cumulative mass and reward tail sums, so the
//! CDF, tail probability and partial expectation are all `O(log n)` lookups.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{observe_cell, CellObservation, ChannelModel, LoadModel, SystemParams};
use crate::rng::RngStream;

/// Cells drawn per RNG stream when sampling a distribution from the models.
pub const SAMPLE_BATCH: usize = 1 << 14;

#[derive(Debug, Clone, PartialEq)]
pub struct MetricDistribution {
    values: Vec<f64>,
    /// `mass_below[i]` is the probability of `values[..i]`.
    mass_below: Vec<f64>,
    /// `tail_mass[i]` is the probability of `values[i..]`.
    tail_mass: Vec<f64>,
    /// `tail_sum[i]` is `Σ_{j ≥ i} w_j·values[j]`.
    tail_sum: Vec<f64>,
    p_gamma: f64,
}

fn check_p_gamma(p_gamma: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p_gamma) {
        Ok(())
    } else {
        Err(Error::invalid(
            "p_gamma",
            format!("must lie in [0, 1], got {p_gamma}"),
        ))
    }
}

fn check_value(x: f64) -> Result<()> {
    if x.is_finite() && x >= 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(
            "samples",
            format!("rewards must be finite and nonnegative, got {x}"),
        ))
    }
}

impl MetricDistribution {
    /// Equal-weight empirical distribution of `samples`.
    pub fn from_samples(mut samples: Vec<f64>, p_gamma: f64) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::EmptyDistribution);
        }
        check_p_gamma(p_gamma)?;
        for &x in &samples {
            check_value(x)?;
        }
        samples.sort_unstable_by(f64::total_cmp);
        let n = samples.len();
        let nf = n as f64;
        let mass_below = (0..=n).map(|i| i as f64 / nf).collect();
        let tail_mass = (0..=n).map(|i| (n - i) as f64 / nf).collect();
        let mut tail_sum = vec![0.0; n + 1];
        let mut acc = 0.0;
        for i in (0..n).rev() {
            acc += samples[i];
            tail_sum[i] = acc / nf;
        }
        Ok(Self {
            values: samples,
            mass_below,
            tail_mass,
            tail_sum,
            p_gamma,
        })
    }

    /// Distribution with explicit `(value, probability)` atoms. Probabilities
    /// are normalized to sum to one.
    pub fn from_atoms(atoms: &[(f64, f64)], p_gamma: f64) -> Result<Self> {
        check_p_gamma(p_gamma)?;
        let mut atoms: Vec<(f64, f64)> = atoms.iter().copied().filter(|&(_, w)| w != 0.0).collect();
        if atoms.is_empty() {
            return Err(Error::EmptyDistribution);
        }
        for &(x, w) in &atoms {
            check_value(x)?;
            if !(w.is_finite() && w > 0.0) {
                return Err(Error::invalid(
                    "atoms",
                    format!("weights must be positive, got {w}"),
                ));
            }
        }
        atoms.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));
        let total: f64 = atoms.iter().map(|a| a.1).sum();
        let n = atoms.len();
        let mut mass_below = vec![0.0; n + 1];
        for i in 0..n {
            mass_below[i + 1] = mass_below[i] + atoms[i].1 / total;
        }
        mass_below[n] = 1.0;
        let mut tail_mass = vec![0.0; n + 1];
        let mut tail_sum = vec![0.0; n + 1];
        for i in (0..n).rev() {
            let w = atoms[i].1 / total;
            tail_mass[i] = tail_mass[i + 1] + w;
            tail_sum[i] = tail_sum[i + 1] + w * atoms[i].0;
        }
        tail_mass[0] = 1.0;
        Ok(Self {
            values: atoms.into_iter().map(|a| a.0).collect(),
            mass_below,
            tail_mass,
            tail_sum,
            p_gamma,
        })
    }

    /// `R̂ ≡ value`.
    pub fn point_mass(value: f64, p_gamma: f64) -> Result<Self> {
        Self::from_atoms(&[(value, 1.0)], p_gamma)
    }

    /// `R̂ = high` with probability `q`, else 0.
    pub fn two_point(q: f64, high: f64, p_gamma: f64) -> Result<Self> {
        if !(q > 0.0 && q <= 1.0) {
            return Err(Error::invalid("q", format!("must lie in (0, 1], got {q}")));
        }
        Self::from_atoms(&[(0.0, 1.0 - q), (high, q)], p_gamma)
    }

    /// Rewards of `observations`, with `p_gamma` set to the admitted fraction.
    pub fn from_observations(observations: &[CellObservation]) -> Result<Self> {
        if observations.is_empty() {
            return Err(Error::EmptyDistribution);
        }
        let admitted = observations.iter().filter(|o| o.admitted).count();
        let p_gamma = admitted as f64 / observations.len() as f64;
        Self::from_samples(
            observations.iter().map(|o| o.reward_bits).collect(),
            p_gamma,
        )
    }

    /// Samples `n` cells from the models and builds their reward distribution.
    ///
    /// Cells are drawn in fixed batches of [`SAMPLE_BATCH`], batch `b` from
    /// [`RngStream::distribution_batch`]`(seed, b)`, so the result does not
    /// depend on the worker count.
    pub fn sample(
        params: &SystemParams,
        channel: &ChannelModel,
        load: &LoadModel,
        n: usize,
        seed: u64,
    ) -> Result<Self> {
        let observations = sample_observations(params, channel, load, n, seed);
        Self::from_observations(&observations)
    }

    /// Same atoms, different admission probability (e.g. the closed form).
    pub fn with_p_gamma(mut self, p_gamma: f64) -> Result<Self> {
        check_p_gamma(p_gamma)?;
        self.p_gamma = p_gamma;
        Ok(self)
    }

    /// Every atom multiplied by `k > 0`.
    pub fn scaled(&self, k: f64) -> Result<Self> {
        if !(k.is_finite() && k > 0.0) {
            return Err(Error::invalid(
                "k",
                format!("scale must be positive, got {k}"),
            ));
        }
        let mut out = self.clone();
        out.values.iter_mut().for_each(|x| *x *= k);
        out.tail_sum.iter_mut().for_each(|x| *x *= k);
        Ok(out)
    }

    pub fn p_gamma(&self) -> f64 {
        self.p_gamma
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Sorted support (with repeats for equal-weight samples).
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn max(&self) -> f64 {
        *self.values.last().expect("distribution is nonempty")
    }

    pub fn mean(&self) -> f64 {
        self.tail_sum[0]
    }

    fn first_at_or_above(&self, x: f64) -> usize {
        self.values.partition_point(|&v| v < x)
    }

    /// `P(R̂ ≤ x)`.
    pub fn cdf(&self, x: f64) -> f64 {
        self.mass_below[self.values.partition_point(|&v| v <= x)]
    }

    /// `P(R̂ < x)`.
    pub fn cdf_below(&self, x: f64) -> f64 {
        self.mass_below[self.first_at_or_above(x)]
    }

    /// `P(R̂ ≥ x)`.
    pub fn tail_probability(&self, x: f64) -> f64 {
        self.tail_mass[self.first_at_or_above(x)]
    }

    /// `E[R̂ · 𝕀(R̂ ≥ a)]`.
    pub fn partial_expectation(&self, a: f64) -> f64 {
        self.tail_sum[self.first_at_or_above(a)]
    }

    /// `E[(R̂ − c)⁺]`. Atoms at `c` contribute zero, so the `≥` tail is exact.
    pub fn expected_excess(&self, c: f64) -> f64 {
        let i = self.first_at_or_above(c);
        (self.tail_sum[i] - c * self.tail_mass[i]).max(0.0)
    }
}

/// Draws `n` independent cells in fixed-size batches, one stream per batch.
pub fn sample_observations(
    params: &SystemParams,
    channel: &ChannelModel,
    load: &LoadModel,
    n: usize,
    seed: u64,
) -> Vec<CellObservation> {
    let batches = n.div_ceil(SAMPLE_BATCH);
    (0..batches)
        .into_par_iter()
        .flat_map_iter(|b| {
            let mut rng = RngStream::distribution_batch(seed, b as u64).rng();
            let len = SAMPLE_BATCH.min(n - b * SAMPLE_BATCH);
            (0..len)
                .map(|_| observe_cell(params, channel, load, &mut rng))
                .collect::<Vec<_>>()
        })
        .collect()
}
