//! Two-tier macro/micro load balancing and the comparison of scan strategies.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{db_to_linear, selection_metric, ChannelModel, LoadModel, SystemParams};
use crate::rng::RngStream;
use crate::sim::{estimate_policy, Policy, ScanCriterion, ThroughputEstimate};

pub const SPEED_OF_LIGHT: f64 = 2.998e8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tier {
    Macro,
    Micro,
}

impl Tier {
    pub fn name(&self) -> &'static str {
        match self {
            Tier::Macro => "macro",
            Tier::Micro => "micro",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaseStation {
    pub id: usize,
    pub position: (f64, f64),
    pub tx_power_dbm: f64,
    pub carrier_ghz: f64,
    pub bandwidth_hz: f64,
    pub beam_gain_db: f64,
    pub tier: Tier,
    pub active_ues: u64,
}

impl BaseStation {
    pub fn wavelength_m(&self) -> f64 {
        SPEED_OF_LIGHT / (self.carrier_ghz * 1e9)
    }

    /// Broadcast load factor `1/(M + 1)`.
    pub fn beta(&self) -> f64 {
        1.0 / (self.active_ues as f64 + 1.0)
    }

    pub fn distance_to(&self, (x, y): (f64, f64)) -> f64 {
        (x - self.position.0).hypot(y - self.position.1)
    }
}

/// Receiver noise model shared by all links.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseParams {
    pub psd_dbm_per_hz: f64,
    pub noise_figure_db: f64,
}

impl NoiseParams {
    pub fn floor_dbm(&self, bandwidth_hz: f64) -> f64 {
        self.psd_dbm_per_hz + 10.0 * bandwidth_hz.log10() + self.noise_figure_db
    }
}

/// `20·log₁₀(4π/ϱ) + 10·α·log₁₀(d)` in dB.
pub fn pathloss_db(wavelength_m: f64, alpha: f64, distance_m: f64) -> f64 {
    20.0 * (4.0 * std::f64::consts::PI / wavelength_m).log10() + 10.0 * alpha * distance_m.log10()
}

/// Linear SNR of the link from `bs` to a UE at `ue_position`.
///
/// Distances below `min_distance_m` are raised to it; a UE exactly on top of
/// the base station is rejected.
pub fn link_snr(
    bs: &BaseStation,
    ue_position: (f64, f64),
    shadow_db: f64,
    alpha: f64,
    noise: &NoiseParams,
    min_distance_m: f64,
) -> Result<f64> {
    let d = bs.distance_to(ue_position);
    if d == 0.0 {
        return Err(Error::CoLocated);
    }
    Ok(db_to_linear(link_snr_db(
        bs,
        d.max(min_distance_m),
        shadow_db,
        alpha,
        noise,
    )))
}

fn received_power_dbm(bs: &BaseStation, distance_m: f64, shadow_db: f64, alpha: f64) -> f64 {
    bs.tx_power_dbm + bs.beam_gain_db
        - pathloss_db(bs.wavelength_m(), alpha, distance_m)
        - shadow_db
}

fn link_snr_db(
    bs: &BaseStation,
    distance_m: f64,
    shadow_db: f64,
    alpha: f64,
    noise: &NoiseParams,
) -> f64 {
    received_power_dbm(bs, distance_m, shadow_db, alpha) - noise.floor_dbm(bs.bandwidth_hz)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TwoTierConfig {
    pub macro_position_m: (f64, f64),
    pub macro_tx_power_dbm: f64,
    pub macro_carrier_ghz: f64,
    pub macro_bandwidth_hz: f64,
    pub micro_positions_m: Vec<(f64, f64)>,
    pub micro_tx_power_dbm: f64,
    pub micro_carrier_ghz: f64,
    pub micro_bandwidth_hz: f64,
    /// Applied to micro links only.
    pub micro_beam_gain_db: f64,
    pub n_ues: u64,
    /// UEs are dropped uniformly on `[−h, h]²`.
    pub field_half_width_m: f64,
    pub pathloss_exponent: f64,
    pub shadow_sigma_db: f64,
    pub noise_psd_dbm_per_hz: f64,
    pub noise_figure_db: f64,
    pub min_distance_m: f64,
}

impl Default for TwoTierConfig {
    fn default() -> Self {
        Self {
            macro_position_m: (0.0, 0.0),
            macro_tx_power_dbm: 46.0,
            macro_carrier_ghz: 2.0,
            macro_bandwidth_hz: 20e6,
            micro_positions_m: vec![
                (100.0, 100.0),
                (-100.0, 100.0),
                (-100.0, -100.0),
                (100.0, -100.0),
            ],
            micro_tx_power_dbm: 23.0,
            micro_carrier_ghz: 39.0,
            micro_bandwidth_hz: 1e9,
            micro_beam_gain_db: 30.0,
            n_ues: 100,
            field_half_width_m: 150.0,
            pathloss_exponent: 3.8,
            shadow_sigma_db: 7.0,
            noise_psd_dbm_per_hz: -174.0,
            noise_figure_db: 9.0,
            min_distance_m: 1.0,
        }
    }
}

impl TwoTierConfig {
    pub fn validate(&self) -> Result<()> {
        let finite = [
            ("macro_tx_power_dbm", self.macro_tx_power_dbm),
            ("micro_tx_power_dbm", self.micro_tx_power_dbm),
            ("micro_beam_gain_db", self.micro_beam_gain_db),
            ("noise_psd_dbm_per_hz", self.noise_psd_dbm_per_hz),
            ("noise_figure_db", self.noise_figure_db),
            (
                "macro_position_m",
                self.macro_position_m.0 + self.macro_position_m.1,
            ),
        ];
        for (name, v) in finite {
            if !v.is_finite() {
                return Err(Error::invalid(name, "must be finite"));
            }
        }
        let positive = [
            ("macro_carrier_ghz", self.macro_carrier_ghz),
            ("macro_bandwidth_hz", self.macro_bandwidth_hz),
            ("micro_carrier_ghz", self.micro_carrier_ghz),
            ("micro_bandwidth_hz", self.micro_bandwidth_hz),
            ("field_half_width_m", self.field_half_width_m),
            ("min_distance_m", self.min_distance_m),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid(name, format!("must be positive, got {v}")));
            }
        }
        if self
            .micro_positions_m
            .iter()
            .any(|(x, y)| !(x.is_finite() && y.is_finite()))
        {
            return Err(Error::invalid("micro_positions_m", "must be finite"));
        }
        if !(self.pathloss_exponent > 2.0 && self.pathloss_exponent.is_finite()) {
            return Err(Error::invalid(
                "pathloss_exponent",
                format!("must exceed 2, got {}", self.pathloss_exponent),
            ));
        }
        if !(self.shadow_sigma_db >= 0.0 && self.shadow_sigma_db.is_finite()) {
            return Err(Error::invalid("shadow_sigma_db", "must be nonnegative"));
        }
        if self.n_ues == 0 {
            return Err(Error::invalid("n_ues", "must be at least 1"));
        }
        Ok(())
    }

    /// Macro station first (id 0), then the micro stations in order.
    pub fn base_stations(&self) -> Vec<BaseStation> {
        let mut stations = vec![BaseStation {
            id: 0,
            position: self.macro_position_m,
            tx_power_dbm: self.macro_tx_power_dbm,
            carrier_ghz: self.macro_carrier_ghz,
            bandwidth_hz: self.macro_bandwidth_hz,
            beam_gain_db: 0.0,
            tier: Tier::Macro,
            active_ues: 0,
        }];
        stations.extend(
            self.micro_positions_m
                .iter()
                .enumerate()
                .map(|(i, &p)| BaseStation {
                    id: i + 1,
                    position: p,
                    tx_power_dbm: self.micro_tx_power_dbm,
                    carrier_ghz: self.micro_carrier_ghz,
                    bandwidth_hz: self.micro_bandwidth_hz,
                    beam_gain_db: self.micro_beam_gain_db,
                    tier: Tier::Micro,
                    active_ues: 0,
                }),
        );
        stations
    }

    pub fn noise(&self) -> NoiseParams {
        NoiseParams {
            psd_dbm_per_hz: self.noise_psd_dbm_per_hz,
            noise_figure_db: self.noise_figure_db,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AssociationScheme {
    MaxPower,
    MaxSnr,
    MaxMetric,
}

impl AssociationScheme {
    pub const ALL: [AssociationScheme; 3] = [Self::MaxPower, Self::MaxSnr, Self::MaxMetric];

    pub fn name(&self) -> &'static str {
        match self {
            Self::MaxPower => "max_power",
            Self::MaxSnr => "max_snr",
            Self::MaxMetric => "max_metric",
        }
    }
}

impl FromStr for AssociationScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::invalid("scheme", format!("unknown association scheme `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AssociationResult {
    pub stations: Vec<BaseStation>,
    /// UEs per base station, indexed by id.
    pub counts: Vec<u64>,
    /// Chosen base station per UE.
    pub choices: Vec<usize>,
    /// `β·log₂(1 + SNR)` seen by each UE at its chosen station when it chose.
    pub metrics: Vec<f64>,
    pub ue_positions: Vec<(f64, f64)>,
}

impl AssociationResult {
    /// Population standard deviation of the per-station counts.
    pub fn count_std(&self) -> f64 {
        count_std(&self.counts)
    }
}

pub fn count_std(counts: &[u64]) -> f64 {
    let n = counts.len() as f64;
    let mean = counts.iter().sum::<u64>() as f64 / n;
    (counts
        .iter()
        .map(|&c| (c as f64 - mean).powi(2))
        .sum::<f64>()
        / n)
        .sqrt()
}

/// Drops `n_ues` UEs and lets them select a station one at a time.
///
/// Each UE draws its `x`, `y`, then one shadowing value per station in id
/// order, all from [`RngStream::two_tier`]`(seed, realization)`. Ties go to the
/// lowest station id.
pub fn associate(
    config: &TwoTierConfig,
    scheme: AssociationScheme,
    seed: u64,
    realization: u64,
) -> Result<AssociationResult> {
    config.validate()?;
    let mut stations = config.base_stations();
    let noise = config.noise();
    let alpha = config.pathloss_exponent;
    let h = config.field_half_width_m;
    let mut rng = RngStream::two_tier(seed, realization).rng();
    let n = config.n_ues as usize;
    let mut choices = Vec::with_capacity(n);
    let mut metrics = Vec::with_capacity(n);
    let mut positions = Vec::with_capacity(n);

    for _ in 0..n {
        let ue = (rng.random_range(-h..=h), rng.random_range(-h..=h));
        let links: Vec<(f64, f64)> = stations
            .iter()
            .map(|bs| {
                let shadow = config.shadow_sigma_db * rng.sample::<f64, _>(StandardNormal);
                let d = bs.distance_to(ue).max(config.min_distance_m);
                let power = received_power_dbm(bs, d, shadow, alpha);
                (power, power - noise.floor_dbm(bs.bandwidth_hz))
            })
            .collect();
        let score = |i: usize| match scheme {
            AssociationScheme::MaxPower => links[i].0,
            AssociationScheme::MaxSnr => links[i].1,
            AssociationScheme::MaxMetric => {
                selection_metric(stations[i].beta(), db_to_linear(links[i].1))
            }
        };
        let best =
            (1..stations.len()).fold(0, |best, i| if score(i) > score(best) { i } else { best });
        metrics.push(selection_metric(
            stations[best].beta(),
            db_to_linear(links[best].1),
        ));
        stations[best].active_ues += 1;
        choices.push(best);
        positions.push(ue);
    }

    Ok(AssociationResult {
        counts: stations.iter().map(|s| s.active_ues).collect(),
        stations,
        choices,
        metrics,
        ue_positions: positions,
    })
}

/// Associations for realizations `0..n_realizations`, computed in parallel.
pub fn associate_many(
    config: &TwoTierConfig,
    scheme: AssociationScheme,
    seed: u64,
    n_realizations: u64,
) -> Result<Vec<AssociationResult>> {
    (0..n_realizations)
        .into_par_iter()
        .map(|r| associate(config, scheme, seed, r))
        .collect()
}

/// A cell search strategy in the scheme comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Strategy {
    FixedScan {
        criterion: ScanCriterion,
        cells: u64,
    },
    OptimalStopping,
}

impl Strategy {
    pub fn name(&self) -> &'static str {
        match self {
            Strategy::FixedScan { criterion, .. } => criterion.name(),
            Strategy::OptimalStopping => "optimal_stopping",
        }
    }

    pub fn scan_cells(&self) -> Option<u64> {
        match self {
            Strategy::FixedScan { cells, .. } => Some(*cells),
            Strategy::OptimalStopping => None,
        }
    }

    /// The five strategies of the standard comparison.
    pub fn standard_set() -> Vec<Strategy> {
        let mut v = Vec::new();
        for criterion in [ScanCriterion::MaxPower, ScanCriterion::MaxMetric] {
            for cells in [10, 30] {
                v.push(Strategy::FixedScan { criterion, cells });
            }
        }
        v.push(Strategy::OptimalStopping);
        v
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Strategy::FixedScan { criterion, cells } => write!(f, "{}:{cells}", criterion.name()),
            Strategy::OptimalStopping => f.write_str("optimal_stopping"),
        }
    }
}

impl FromStr for Strategy {
    type Err = Error;

    /// `max_power:N`, `max_metric:N` or `optimal_stopping`.
    fn from_str(s: &str) -> Result<Self> {
        if s == "optimal_stopping" {
            return Ok(Strategy::OptimalStopping);
        }
        let (name, cells) = s
            .split_once(':')
            .ok_or_else(|| Error::invalid("strategy", format!("unknown strategy `{s}`")))?;
        let criterion: ScanCriterion = name.parse()?;
        let cells: u64 = cells
            .parse()
            .map_err(|_| Error::invalid("strategy", format!("bad scan length in `{s}`")))?;
        if cells == 0 {
            return Err(Error::invalid("strategy", "scan length must be at least 1"));
        }
        Ok(Strategy::FixedScan { criterion, cells })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StrategyThroughput {
    pub strategy: Strategy,
    pub estimate: ThroughputEstimate,
}

/// Throughput of each strategy over the same `n_periods` period streams.
///
/// `mu_star` is the threshold used by [`Strategy::OptimalStopping`].
#[allow(clippy::too_many_arguments)]
pub fn compare_schemes(
    params: &SystemParams,
    channel: &ChannelModel,
    load: &LoadModel,
    strategies: &[Strategy],
    mu_star: f64,
    n_periods: u64,
    seed: u64,
    max_cells: u64,
) -> Result<Vec<StrategyThroughput>> {
    strategies
        .iter()
        .map(|&strategy| {
            let policy = match strategy {
                Strategy::FixedScan { criterion, cells } => Policy::FixedScan { cells, criterion },
                Strategy::OptimalStopping => Policy::Threshold { mu: mu_star },
            };
            let estimate =
                estimate_policy(params, channel, load, policy, n_periods, seed, max_cells)?;
            Ok(StrategyThroughput { strategy, estimate })
        })
        .collect()
}
