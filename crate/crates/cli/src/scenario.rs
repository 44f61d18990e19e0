//! Scenario files: one JSON document holding every experiment input.
//!
//! Every section and key is optional and falls back to the reference
//! operating point. Unknown keys are rejected. Errors name the offending key
//! as a dotted path, e.g. `system.t_syn_s`.

use std::fs;
use std::path::Path;

use anyhow::{anyhow, Context};
use cellsel::analytic::BinaryMetricModel;
use cellsel::model::db_to_linear;
use cellsel::sim::DEFAULT_MAX_CELLS;
use cellsel::solver::{DEFAULT_BISECTION_REL_TOL, DEFAULT_ITERATION_REL_TOL, DEFAULT_MAX_ITER};
use cellsel::twotier::TwoTierConfig;
use cellsel::{ActiveUeCount, ChannelModel, Error, LoadModel, SystemParams};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioFile {
    pub system: SystemSection,
    pub channel: ChannelSection,
    pub load: LoadSection,
    /// When present, `solve` uses this two-valued metric instead of sampling.
    pub binary_metric: Option<BinarySection>,
    pub solver: SolverSection,
    pub simulation: SimulationSection,
    pub two_tier: TwoTierConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SystemSection {
    pub t_syn_s: f64,
    pub t_sib_s: f64,
    pub t_ra_s: f64,
    pub t_data_s: f64,
    pub beam_pairs: u32,
    pub bandwidth_hz: f64,
    /// `null` admits every cell.
    pub snr_threshold_db: Option<f64>,
}

impl Default for SystemSection {
    fn default() -> Self {
        Self {
            t_syn_s: 0.005,
            t_sib_s: 0.01,
            t_ra_s: 0.02,
            t_data_s: 10.0,
            beam_pairs: 64,
            bandwidth_hz: 1e9,
            snr_threshold_db: Some(-10.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChannelSection {
    pub snr_avg_db: f64,
    pub shadow_sigma_db: f64,
}

impl Default for ChannelSection {
    fn default() -> Self {
        Self {
            snr_avg_db: -10.0,
            shadow_sigma_db: 7.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case", deny_unknown_fields)]
pub enum LoadSection {
    Poisson { mean_active_ues: f64 },
    Fixed { active_ues: u32 },
    TwoPoint { low: u32, high: u32, p_low: f64 },
}

impl Default for LoadSection {
    fn default() -> Self {
        LoadSection::Poisson {
            mean_active_ues: 10.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BinarySection {
    pub q: f64,
    pub r_max_bps_hz: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSection {
    /// Cells drawn to build the empirical reward distribution.
    pub samples: usize,
    pub sample_seed: u64,
    pub bisection_rel_tol: f64,
    pub iteration_rel_tol: f64,
    pub max_iter: usize,
    /// Starting point of the fixed-point iteration; defaults to the
    /// always-stop throughput.
    pub initial_lambda_bps: Option<f64>,
}

impl Default for SolverSection {
    fn default() -> Self {
        Self {
            samples: 1_000_000,
            sample_seed: 1,
            bisection_rel_tol: DEFAULT_BISECTION_REL_TOL,
            iteration_rel_tol: DEFAULT_ITERATION_REL_TOL,
            max_iter: DEFAULT_MAX_ITER,
            initial_lambda_bps: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulationSection {
    pub periods: u64,
    pub max_cells: u64,
}

impl Default for SimulationSection {
    fn default() -> Self {
        Self {
            periods: 100_000,
            max_cells: DEFAULT_MAX_CELLS,
        }
    }
}

/// Command-line replacements for individual scenario values.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Overrides {
    pub beam_pairs: Option<u32>,
    pub t_data_s: Option<f64>,
    pub mean_active_ues: Option<f64>,
}

/// A scenario converted to validated model types.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub params: SystemParams,
    pub channel: ChannelModel,
    pub load: LoadModel,
    pub binary: Option<BinaryMetricModel>,
    pub solver: SolverSection,
    pub simulation: SimulationSection,
    pub two_tier: TwoTierConfig,
}

pub fn parse(text: &str) -> anyhow::Result<ScenarioFile> {
    let mut de = serde_json::Deserializer::from_str(text);
    let file: ScenarioFile = serde_path_to_error::deserialize(&mut de).map_err(|e| {
        let path = e.path().to_string();
        anyhow!("{path}: {}", e.into_inner())
    })?;
    de.end()
        .context("trailing characters after scenario document")?;
    Ok(file)
}

pub fn load(path: &Path) -> anyhow::Result<ScenarioFile> {
    let text =
        fs::read_to_string(path).with_context(|| format!("reading scenario {}", path.display()))?;
    parse(&text).with_context(|| format!("invalid scenario {}", path.display()))
}

/// Maps a core error's parameter name onto the scenario key it came from.
fn located(section: &str, keys: &[(&str, &str)], err: Error) -> anyhow::Error {
    match &err {
        Error::InvalidParameter { name, reason } => {
            let key = keys
                .iter()
                .find(|(n, _)| n == name)
                .map_or(*name, |(_, k)| *k);
            anyhow!("{section}.{key}: {reason}")
        }
        _ => anyhow!("{section}: {err}"),
    }
}

impl ScenarioFile {
    pub fn apply(&mut self, overrides: &Overrides) {
        if let Some(l) = overrides.beam_pairs {
            self.system.beam_pairs = l;
        }
        if let Some(t) = overrides.t_data_s {
            self.system.t_data_s = t;
        }
        if let Some(m) = overrides.mean_active_ues {
            self.load = LoadSection::Poisson { mean_active_ues: m };
        }
    }

    pub fn validate(&self) -> anyhow::Result<Scenario> {
        let s = &self.system;
        let threshold = s.snr_threshold_db.map_or(f64::NEG_INFINITY, db_to_linear);
        let params = SystemParams::new(
            s.t_syn_s,
            s.t_sib_s,
            s.t_ra_s,
            s.t_data_s,
            s.beam_pairs,
            s.bandwidth_hz,
            threshold,
        )
        .map_err(|e| {
            located(
                "system",
                &[
                    ("t_syn", "t_syn_s"),
                    ("t_sib", "t_sib_s"),
                    ("t_ra", "t_ra_s"),
                    ("t_data", "t_data_s"),
                    ("snr_threshold", "snr_threshold_db"),
                ],
                e,
            )
        })?;

        if !self.channel.snr_avg_db.is_finite() {
            return Err(anyhow!("channel.snr_avg_db: must be finite"));
        }
        let channel = ChannelModel::from_db(self.channel.snr_avg_db, self.channel.shadow_sigma_db)
            .map_err(|e| located("channel", &[("snr_avg", "snr_avg_db")], e))?;

        let counts = match self.load {
            LoadSection::Poisson { mean_active_ues } => ActiveUeCount::Poisson {
                mean: mean_active_ues,
            },
            LoadSection::Fixed { active_ues } => ActiveUeCount::Fixed { count: active_ues },
            LoadSection::TwoPoint { low, high, p_low } => {
                ActiveUeCount::TwoPoint { low, high, p_low }
            }
        };
        let load = LoadModel::new(counts).map_err(|e| located("load", &[], e))?;

        let binary = self
            .binary_metric
            .as_ref()
            .map(|b| BinaryMetricModel::new(b.q, b.r_max_bps_hz))
            .transpose()
            .map_err(|e| located("binary_metric", &[("r_max", "r_max_bps_hz")], e))?;

        let sv = &self.solver;
        if sv.samples == 0 {
            return Err(anyhow!("solver.samples: must be at least 1"));
        }
        for (key, tol) in [
            ("bisection_rel_tol", sv.bisection_rel_tol),
            ("iteration_rel_tol", sv.iteration_rel_tol),
        ] {
            if !(tol.is_finite() && tol > 0.0) {
                return Err(anyhow!("solver.{key}: must be positive, got {tol}"));
            }
        }
        if sv.max_iter == 0 {
            return Err(anyhow!("solver.max_iter: must be at least 1"));
        }
        if let Some(l) = sv.initial_lambda_bps {
            if !(l.is_finite() && l > 0.0) {
                return Err(anyhow!(
                    "solver.initial_lambda_bps: must be positive, got {l}"
                ));
            }
        }
        if self.simulation.periods == 0 {
            return Err(anyhow!("simulation.periods: must be at least 1"));
        }
        if self.simulation.max_cells == 0 {
            return Err(anyhow!("simulation.max_cells: must be at least 1"));
        }
        self.two_tier
            .validate()
            .map_err(|e| located("two_tier", &[], e))?;

        Ok(Scenario {
            params,
            channel,
            load,
            binary,
            solver: sv.clone(),
            simulation: self.simulation.clone(),
            two_tier: self.two_tier.clone(),
        })
    }
}
