//! System constants, channel and load models, and the per-cell samplers.

use rand::Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};
use serde::Serialize;
use statrs::function::erf::erfc;

use crate::error::{Error, Result};

/// Converts a dB quantity to a linear ratio.
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(linear: f64) -> f64 {
    10.0 * linear.log10()
}

/// Timing and radio constants of one UE's communication period.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SystemParams {
    t_syn: f64,
    t_sib: f64,
    t_ra: f64,
    t_data: f64,
    beam_pairs: u32,
    bandwidth_hz: f64,
    snr_threshold: f64,
    #[serde(skip)]
    sib_slots: u64,
}

impl SystemParams {
    /// Validates and builds the parameter set.
    ///
    /// `snr_threshold` is a linear ratio; `f64::NEG_INFINITY` admits every
    /// cell and `f64::INFINITY` admits none.
    pub fn new(
        t_syn: f64,
        t_sib: f64,
        t_ra: f64,
        t_data: f64,
        beam_pairs: u32,
        bandwidth_hz: f64,
        snr_threshold: f64,
    ) -> Result<Self> {
        if !(t_syn.is_finite() && t_syn > 0.0) {
            return Err(Error::invalid(
                "t_syn",
                format!("must be positive, got {t_syn}"),
            ));
        }
        if !(t_ra.is_finite() && t_ra >= 0.0) {
            return Err(Error::invalid(
                "t_ra",
                format!("must be nonnegative, got {t_ra}"),
            ));
        }
        if !(t_data.is_finite() && t_data > 0.0) {
            return Err(Error::invalid(
                "t_data",
                format!("must be positive, got {t_data}"),
            ));
        }
        if !(bandwidth_hz.is_finite() && bandwidth_hz > 0.0) {
            return Err(Error::invalid(
                "bandwidth_hz",
                format!("must be positive, got {bandwidth_hz}"),
            ));
        }
        if beam_pairs == 0 {
            return Err(Error::invalid("beam_pairs", "must be at least 1"));
        }
        if snr_threshold.is_nan() {
            return Err(Error::invalid("snr_threshold", "is NaN"));
        }
        if !(t_sib.is_finite() && t_sib >= t_syn) {
            return Err(Error::invalid(
                "t_sib",
                format!("must be at least t_syn = {t_syn}, got {t_sib}"),
            ));
        }
        let ratio = t_sib / t_syn;
        let slots = ratio.round();
        if (ratio - slots).abs() > 1e-9 * slots {
            return Err(Error::invalid(
                "t_sib",
                format!("t_sib / t_syn must be an integer, got {ratio}"),
            ));
        }
        Ok(Self {
            t_syn,
            t_sib,
            t_ra,
            t_data,
            beam_pairs,
            bandwidth_hz,
            snr_threshold,
            sib_slots: slots as u64,
        })
    }

    /// Reference operating point: 5 ms sync period, 10 ms SIB period, 20 ms
    /// random access, 10 s of data, 64 beam pairs, 1 GHz, −10 dB threshold.
    pub fn reference() -> Self {
        Self::new(0.005, 0.01, 0.02, 10.0, 64, 1e9, db_to_linear(-10.0))
            .expect("reference parameters are valid")
    }

    pub fn t_syn(&self) -> f64 {
        self.t_syn
    }

    pub fn t_sib(&self) -> f64 {
        self.t_sib
    }

    pub fn t_ra(&self) -> f64 {
        self.t_ra
    }

    pub fn t_data(&self) -> f64 {
        self.t_data
    }

    pub fn beam_pairs(&self) -> u32 {
        self.beam_pairs
    }

    pub fn bandwidth_hz(&self) -> f64 {
        self.bandwidth_hz
    }

    pub fn snr_threshold(&self) -> f64 {
        self.snr_threshold
    }

    /// Number of sync periods per SIB period.
    pub fn sib_slots(&self) -> u64 {
        self.sib_slots
    }

    /// `T_ra + T_data`: time spent after a cell is selected.
    pub fn theta(&self) -> f64 {
        self.t_ra + self.t_data
    }

    /// Expected search time per examined cell, `(L − ½)·T_syn + ½(T_sib − T_syn)·p_gamma`.
    pub fn eta(&self, p_gamma: f64) -> f64 {
        (f64::from(self.beam_pairs) - 0.5) * self.t_syn + 0.5 * (self.t_sib - self.t_syn) * p_gamma
    }

    /// Bits delivered per bit/s/Hz of selection metric: `W·T_data`.
    pub fn bits_per_metric(&self) -> f64 {
        self.bandwidth_hz * self.t_data
    }

    pub fn admits(&self, snr: f64) -> bool {
        snr >= self.snr_threshold
    }

    pub fn with_beam_pairs(self, beam_pairs: u32) -> Result<Self> {
        Self::new(
            self.t_syn,
            self.t_sib,
            self.t_ra,
            self.t_data,
            beam_pairs,
            self.bandwidth_hz,
            self.snr_threshold,
        )
    }

    pub fn with_t_data(self, t_data: f64) -> Result<Self> {
        Self::new(
            self.t_syn,
            self.t_sib,
            self.t_ra,
            t_data,
            self.beam_pairs,
            self.bandwidth_hz,
            self.snr_threshold,
        )
    }

    pub fn with_bandwidth(self, bandwidth_hz: f64) -> Result<Self> {
        Self::new(
            self.t_syn,
            self.t_sib,
            self.t_ra,
            self.t_data,
            self.beam_pairs,
            bandwidth_hz,
            self.snr_threshold,
        )
    }

    pub fn with_snr_threshold(self, snr_threshold: f64) -> Result<Self> {
        Self::new(
            self.t_syn,
            self.t_sib,
            self.t_ra,
            self.t_data,
            self.beam_pairs,
            self.bandwidth_hz,
            snr_threshold,
        )
    }
}

/// Log-normal shadowing around an average SNR, with a beamforming gain of `L`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChannelModel {
    snr_avg: f64,
    shadow_sigma_db: f64,
}

impl ChannelModel {
    pub fn new(snr_avg: f64, shadow_sigma_db: f64) -> Result<Self> {
        if !(snr_avg.is_finite() && snr_avg > 0.0) {
            return Err(Error::invalid(
                "snr_avg",
                format!("must be positive, got {snr_avg}"),
            ));
        }
        if !(shadow_sigma_db.is_finite() && shadow_sigma_db >= 0.0) {
            return Err(Error::invalid(
                "shadow_sigma_db",
                format!("must be nonnegative, got {shadow_sigma_db}"),
            ));
        }
        Ok(Self {
            snr_avg,
            shadow_sigma_db,
        })
    }

    pub fn from_db(snr_avg_db: f64, shadow_sigma_db: f64) -> Result<Self> {
        Self::new(db_to_linear(snr_avg_db), shadow_sigma_db)
    }

    /// −10 dB average SNR with 7 dB shadowing.
    pub fn reference() -> Self {
        Self::from_db(-10.0, 7.0).expect("reference channel is valid")
    }

    pub fn snr_avg(&self) -> f64 {
        self.snr_avg
    }

    pub fn shadow_sigma_db(&self) -> f64 {
        self.shadow_sigma_db
    }

    /// Closed-form `P(SNR ≥ Γ)` under this channel.
    pub fn admission_probability(&self, params: &SystemParams) -> f64 {
        let gamma = params.snr_threshold();
        if gamma == f64::NEG_INFINITY || gamma <= 0.0 {
            return 1.0;
        }
        if gamma == f64::INFINITY {
            return 0.0;
        }
        // SNR ≥ Γ  ⇔  shadow_db ≥ margin
        let margin = linear_to_db(gamma / (f64::from(params.beam_pairs()) * self.snr_avg));
        if self.shadow_sigma_db == 0.0 {
            return if margin <= 0.0 { 1.0 } else { 0.0 };
        }
        0.5 * erfc(margin / (self.shadow_sigma_db * std::f64::consts::SQRT_2))
    }
}

/// Distribution of the active-UE count `M` behind the broadcast `β = 1/(M+1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ActiveUeCount {
    Poisson {
        mean: f64,
    },
    Fixed {
        count: u32,
    },
    /// `low` with probability `p_low`, otherwise `high`.
    TwoPoint {
        low: u32,
        high: u32,
        p_low: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LoadModel {
    counts: ActiveUeCount,
    #[serde(skip)]
    poisson: Option<Poisson<f64>>,
}

impl LoadModel {
    pub fn new(counts: ActiveUeCount) -> Result<Self> {
        let poisson = match counts {
            ActiveUeCount::Poisson { mean } => {
                if !(mean.is_finite() && mean >= 0.0) {
                    return Err(Error::invalid(
                        "mean_active_ues",
                        format!("must be nonnegative, got {mean}"),
                    ));
                }
                if mean > 0.0 {
                    Some(
                        Poisson::new(mean)
                            .map_err(|e| Error::invalid("mean_active_ues", e.to_string()))?,
                    )
                } else {
                    None
                }
            }
            ActiveUeCount::TwoPoint { p_low, .. } => {
                if !(0.0..=1.0).contains(&p_low) {
                    return Err(Error::invalid(
                        "p_low",
                        format!("must lie in [0, 1], got {p_low}"),
                    ));
                }
                None
            }
            ActiveUeCount::Fixed { .. } => None,
        };
        Ok(Self { counts, poisson })
    }

    pub fn poisson(mean_active_ues: f64) -> Result<Self> {
        Self::new(ActiveUeCount::Poisson {
            mean: mean_active_ues,
        })
    }

    /// Poisson load with 10 active UEs per cell on average.
    pub fn reference() -> Self {
        Self::poisson(10.0).expect("reference load is valid")
    }

    pub fn counts(&self) -> ActiveUeCount {
        self.counts
    }

    pub fn mean_active_ues(&self) -> f64 {
        match self.counts {
            ActiveUeCount::Poisson { mean } => mean,
            ActiveUeCount::Fixed { count } => f64::from(count),
            ActiveUeCount::TwoPoint { low, high, p_low } => {
                p_low * f64::from(low) + (1.0 - p_low) * f64::from(high)
            }
        }
    }

    pub fn sample_count<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        match self.counts {
            ActiveUeCount::Poisson { .. } => match &self.poisson {
                Some(p) => p.sample(rng) as u64,
                None => 0,
            },
            ActiveUeCount::Fixed { count } => u64::from(count),
            ActiveUeCount::TwoPoint { low, high, p_low } => {
                if rng.random::<f64>() < p_low {
                    u64::from(low)
                } else {
                    u64::from(high)
                }
            }
        }
    }
}

/// One examined cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CellObservation {
    pub snr: f64,
    /// Broadcast load factor; `None` when the SNR missed the threshold and the
    /// system information was never read.
    pub beta: Option<f64>,
    /// `β·log₂(1 + SNR)` in bit/s/Hz, zero when not admitted.
    pub metric: f64,
    pub admitted: bool,
    /// `W·T_data·metric` when admitted, else zero.
    pub reward_bits: f64,
}

/// `SNR = g·L·snr_avg` with `10·log₁₀ g ~ N(0, σ²)`.
pub fn sample_snr<R: Rng + ?Sized>(
    channel: &ChannelModel,
    params: &SystemParams,
    rng: &mut R,
) -> f64 {
    let z: f64 = rng.sample(StandardNormal);
    let gain = db_to_linear(channel.shadow_sigma_db * z);
    gain * f64::from(params.beam_pairs()) * channel.snr_avg
}

/// `β = 1/(M + 1)` with `M` drawn from the load model.
pub fn sample_beta<R: Rng + ?Sized>(load: &LoadModel, rng: &mut R) -> f64 {
    1.0 / (load.sample_count(rng) as f64 + 1.0)
}

/// `β·log₂(1 + SNR)` in bit/s/Hz.
pub fn selection_metric(beta: f64, snr: f64) -> f64 {
    beta * snr.ln_1p() / std::f64::consts::LN_2
}

/// Delay until the first sync signal of a new cell, uniform on `[0, T_syn)`.
pub fn sample_sync_delay<R: Rng + ?Sized>(params: &SystemParams, rng: &mut R) -> f64 {
    rng.random::<f64>() * params.t_syn()
}

/// Wait from the last sync signal to the next SIB, `j·T_syn` with `j`
/// uniform on `{0, …, T_sib/T_syn − 1}`.
pub fn sample_sib_delay<R: Rng + ?Sized>(params: &SystemParams, rng: &mut R) -> f64 {
    let slots = params.sib_slots();
    if slots <= 1 {
        return 0.0;
    }
    rng.random_range(0..slots) as f64 * params.t_syn()
}

/// Builds the observation for a cell whose SNR is already known, drawing `β`
/// only if the cell is admitted.
pub(crate) fn observe_with_snr<R: Rng + ?Sized>(
    params: &SystemParams,
    load: &LoadModel,
    snr: f64,
    rng: &mut R,
) -> CellObservation {
    if !params.admits(snr) {
        return CellObservation {
            snr,
            beta: None,
            metric: 0.0,
            admitted: false,
            reward_bits: 0.0,
        };
    }
    let beta = sample_beta(load, rng);
    let metric = selection_metric(beta, snr);
    CellObservation {
        snr,
        beta: Some(beta),
        metric,
        admitted: true,
        reward_bits: params.bits_per_metric() * metric,
    }
}

/// Draws one cell: SNR first, then `β` if the SNR clears the threshold.
pub fn observe_cell<R: Rng + ?Sized>(
    params: &SystemParams,
    channel: &ChannelModel,
    load: &LoadModel,
    rng: &mut R,
) -> CellObservation {
    let snr = sample_snr(channel, params, rng);
    observe_with_snr(params, load, snr, rng)
}
