//! Monte Carlo simulation of communication periods.
//!
//! A period examines cells one after another. Each cell costs a sync delay
//! `Y` plus `(L − 1)·T_syn` for the rest of the beam sweep, and, if its SNR
//! clears `Γ`, a SIB wait `Z` before `β` is read. Once a cell is selected the
//! period ends with `T_ra + T_data` of random access and data.
//!
//! Every period `k` draws from [`RngStream::period`]`(seed, k)` in the fixed
//! order `Y, SNR, [Z, β]` per cell, whatever the policy. Two policies run with
//! the same seed therefore see the same cells (common random numbers), and
//! [`threshold_sweep`] can evaluate a whole grid of thresholds in one walk.
//!
//! Periods are reduced in fixed batches of [`PERIOD_BATCH`]; batch partials
//! are merged in batch order, so results are bit-identical for any number of
//! worker threads.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{
    observe_with_snr, sample_sib_delay, sample_snr, sample_sync_delay, CellObservation,
    ChannelModel, LoadModel, SystemParams,
};
use crate::rng::{RngStream, StreamRng};

pub const DEFAULT_MAX_CELLS: u64 = 1_000_000;
pub const PERIOD_BATCH: u64 = 1024;

/// One examined cell and the search time it cost.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExaminedCell {
    pub search_time_s: f64,
    pub observation: CellObservation,
}

/// Examines the next cell, drawing `Y`, the SNR, and (if admitted) `Z` and `β`.
pub fn examine_cell<R: Rng + ?Sized>(
    params: &SystemParams,
    channel: &ChannelModel,
    load: &LoadModel,
    rng: &mut R,
) -> ExaminedCell {
    let mut t =
        sample_sync_delay(params, rng) + f64::from(params.beam_pairs() - 1) * params.t_syn();
    let snr = sample_snr(channel, params, rng);
    if params.admits(snr) {
        t += sample_sib_delay(params, rng);
    }
    ExaminedCell {
        search_time_s: t,
        observation: observe_with_snr(params, load, snr, rng),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PeriodOutcome {
    pub cells_searched: u64,
    /// Search time plus `T_ra + T_data`.
    pub duration_s: f64,
    /// `W·T_data·R` of the selected cell.
    pub bits: f64,
    pub selected_snr: f64,
    /// `None` if the selected cell was never admitted (fixed scans only).
    pub selected_beta: Option<f64>,
}

impl PeriodOutcome {
    fn select(
        params: &SystemParams,
        cells: u64,
        search_time_s: f64,
        cell: &CellObservation,
    ) -> Self {
        Self {
            cells_searched: cells,
            duration_s: search_time_s + params.theta(),
            bits: cell.reward_bits,
            selected_snr: cell.snr,
            selected_beta: cell.beta,
        }
    }
}

/// Stops at the first admitted cell with `β·log₂(1 + SNR) ≥ mu`.
pub fn simulate_period<R: Rng + ?Sized>(
    params: &SystemParams,
    channel: &ChannelModel,
    load: &LoadModel,
    mu: f64,
    rng: &mut R,
    max_cells: u64,
) -> Result<PeriodOutcome> {
    check_mu(mu)?;
    let mut elapsed = 0.0;
    for n in 1..=max_cells {
        let cell = examine_cell(params, channel, load, rng);
        elapsed += cell.search_time_s;
        let obs = cell.observation;
        if obs.admitted && obs.metric >= mu {
            return Ok(PeriodOutcome::select(params, n, elapsed, &obs));
        }
    }
    Err(Error::MaxCellsExceeded { max_cells, mu })
}

/// What a fixed-length scan maximizes when it picks a cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ScanCriterion {
    /// Strongest received signal. Every cell shares one noise floor here, so
    /// this is the largest SNR.
    MaxPower,
    /// Largest `β·log₂(1 + SNR)` among admitted cells.
    MaxMetric,
}

impl ScanCriterion {
    pub fn name(&self) -> &'static str {
        match self {
            ScanCriterion::MaxPower => "max_power",
            ScanCriterion::MaxMetric => "max_metric",
        }
    }
}

/// Examines exactly `n_cells` cells, then selects the best by `criterion`
/// (earliest cell on ties).
pub fn scan_fixed<R: Rng + ?Sized>(
    params: &SystemParams,
    channel: &ChannelModel,
    load: &LoadModel,
    n_cells: u64,
    criterion: ScanCriterion,
    rng: &mut R,
) -> Result<PeriodOutcome> {
    if n_cells == 0 {
        return Err(Error::invalid(
            "n_cells",
            "a fixed scan examines at least one cell",
        ));
    }
    let mut elapsed = 0.0;
    let mut best: Option<CellObservation> = None;
    for _ in 0..n_cells {
        let cell = examine_cell(params, channel, load, rng);
        elapsed += cell.search_time_s;
        let obs = cell.observation;
        let better = match (&best, criterion) {
            (None, _) => true,
            (Some(b), ScanCriterion::MaxPower) => obs.snr > b.snr,
            (Some(b), ScanCriterion::MaxMetric) => obs.metric > b.metric,
        };
        if better {
            best = Some(obs);
        }
    }
    let best = best.expect("at least one cell examined");
    Ok(PeriodOutcome::select(params, n_cells, elapsed, &best))
}

/// A cell search and selection rule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Policy {
    Threshold {
        mu: f64,
    },
    FixedScan {
        cells: u64,
        criterion: ScanCriterion,
    },
}

impl Policy {
    pub fn run<R: Rng + ?Sized>(
        &self,
        params: &SystemParams,
        channel: &ChannelModel,
        load: &LoadModel,
        rng: &mut R,
        max_cells: u64,
    ) -> Result<PeriodOutcome> {
        match *self {
            Policy::Threshold { mu } => simulate_period(params, channel, load, mu, rng, max_cells),
            Policy::FixedScan { cells, criterion } => {
                scan_fixed(params, channel, load, cells, criterion, rng)
            }
        }
    }
}

impl fmt::Display for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Policy::Threshold { mu } => write!(f, "threshold:{mu}"),
            Policy::FixedScan { cells, criterion } => write!(f, "{}:{cells}", criterion.name()),
        }
    }
}

impl FromStr for ScanCriterion {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "max_power" => Ok(ScanCriterion::MaxPower),
            "max_metric" => Ok(ScanCriterion::MaxMetric),
            other => Err(Error::invalid(
                "criterion",
                format!("unknown scan criterion `{other}`"),
            )),
        }
    }
}

fn check_mu(mu: f64) -> Result<()> {
    if mu.is_nan() || mu < 0.0 {
        return Err(Error::invalid(
            "mu",
            format!("must be nonnegative, got {mu}"),
        ));
    }
    Ok(())
}

/// Running sums for the ratio estimator `ΣU / ΣT`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RatioStats {
    pub periods: u64,
    pub sum_bits: f64,
    pub sum_time: f64,
    pub sum_bits_sq: f64,
    pub sum_time_sq: f64,
    pub sum_bits_time: f64,
    pub sum_cells: f64,
}

impl RatioStats {
    pub fn push(&mut self, outcome: &PeriodOutcome) {
        let (u, t) = (outcome.bits, outcome.duration_s);
        self.periods += 1;
        self.sum_bits += u;
        self.sum_time += t;
        self.sum_bits_sq += u * u;
        self.sum_time_sq += t * t;
        self.sum_bits_time += u * t;
        self.sum_cells += outcome.cells_searched as f64;
    }

    pub fn merge(&mut self, other: &RatioStats) {
        self.periods += other.periods;
        self.sum_bits += other.sum_bits;
        self.sum_time += other.sum_time;
        self.sum_bits_sq += other.sum_bits_sq;
        self.sum_time_sq += other.sum_time_sq;
        self.sum_bits_time += other.sum_bits_time;
        self.sum_cells += other.sum_cells;
    }

    /// Ratio estimate with a delta-method standard error:
    /// `se² = Σ(U − r·T)² / (n(n − 1)·T̄²)`.
    pub fn estimate(&self) -> ThroughputEstimate {
        let n = self.periods as f64;
        let r = self.sum_bits / self.sum_time;
        let std_err = if self.periods > 1 {
            let ss = self.sum_bits_sq - 2.0 * r * self.sum_bits_time + r * r * self.sum_time_sq;
            let mean_t = self.sum_time / n;
            (ss.max(0.0) / (n * (n - 1.0))).sqrt() / mean_t
        } else {
            0.0
        };
        ThroughputEstimate {
            throughput_bps: r,
            std_err_bps: std_err,
            mean_cells: self.sum_cells / n,
            mean_duration_s: self.sum_time / n,
            periods: self.periods,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThroughputEstimate {
    pub throughput_bps: f64,
    pub std_err_bps: f64,
    pub mean_cells: f64,
    pub mean_duration_s: f64,
    pub periods: u64,
}

/// Runs `n_periods` periods, feeding each period's stream to `period`, and
/// reduces `width` parallel accumulators in fixed batches.
fn reduce_periods<F>(
    n_periods: u64,
    seed: u64,
    width: usize,
    batch: u64,
    period: F,
) -> Result<Vec<RatioStats>>
where
    F: Fn(&mut StreamRng, &mut [RatioStats]) -> Result<()> + Sync,
{
    let batches = n_periods.div_ceil(batch);
    let partials: Vec<Vec<RatioStats>> = (0..batches)
        .into_par_iter()
        .map(|b| {
            let mut stats = vec![RatioStats::default(); width];
            for k in b * batch..((b + 1) * batch).min(n_periods) {
                let mut rng = RngStream::period(seed, k).rng();
                period(&mut rng, &mut stats)?;
            }
            Ok(stats)
        })
        .collect::<Result<_>>()?;
    let mut total = vec![RatioStats::default(); width];
    for part in &partials {
        for (acc, p) in total.iter_mut().zip(part) {
            acc.merge(p);
        }
    }
    Ok(total)
}

fn check_periods(n_periods: u64) -> Result<()> {
    if n_periods == 0 {
        return Err(Error::invalid("n_periods", "must be at least 1"));
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn estimate_policy_batched(
    params: &SystemParams,
    channel: &ChannelModel,
    load: &LoadModel,
    policy: Policy,
    n_periods: u64,
    seed: u64,
    max_cells: u64,
    batch: u64,
) -> Result<ThroughputEstimate> {
    check_periods(n_periods)?;
    let stats = reduce_periods(n_periods, seed, 1, batch, |rng, stats| {
        stats[0].push(&policy.run(params, channel, load, rng, max_cells)?);
        Ok(())
    })?;
    Ok(stats[0].estimate())
}

/// Ergodic throughput `ΣU/ΣT` of `policy` over `n_periods` periods.
pub fn estimate_policy(
    params: &SystemParams,
    channel: &ChannelModel,
    load: &LoadModel,
    policy: Policy,
    n_periods: u64,
    seed: u64,
    max_cells: u64,
) -> Result<ThroughputEstimate> {
    estimate_policy_batched(
        params,
        channel,
        load,
        policy,
        n_periods,
        seed,
        max_cells,
        PERIOD_BATCH,
    )
}

/// Ergodic throughput of the threshold policy at `mu`.
pub fn estimate_throughput(
    params: &SystemParams,
    channel: &ChannelModel,
    load: &LoadModel,
    mu: f64,
    n_periods: u64,
    seed: u64,
    max_cells: u64,
) -> Result<ThroughputEstimate> {
    check_mu(mu)?;
    estimate_policy(
        params,
        channel,
        load,
        Policy::Threshold { mu },
        n_periods,
        seed,
        max_cells,
    )
}

/// Every period outcome in period order.
pub fn simulate_periods(
    params: &SystemParams,
    channel: &ChannelModel,
    load: &LoadModel,
    policy: Policy,
    n_periods: u64,
    seed: u64,
    max_cells: u64,
) -> Result<Vec<PeriodOutcome>> {
    (0..n_periods)
        .into_par_iter()
        .map(|k| {
            let mut rng = RngStream::period(seed, k).rng();
            policy.run(params, channel, load, &mut rng, max_cells)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepPoint {
    pub mu: f64,
    pub throughput_bps: f64,
    pub std_err_bps: f64,
    pub mean_cells: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    pub points: Vec<SweepPoint>,
}

impl SweepResult {
    /// Grid point with the largest estimated throughput.
    pub fn peak(&self) -> &SweepPoint {
        self.points
            .iter()
            .reduce(|best, p| {
                if p.throughput_bps > best.throughput_bps {
                    p
                } else {
                    best
                }
            })
            .expect("sweep grid is nonempty")
    }
}

fn check_grid(mu_grid: &[f64]) -> Result<()> {
    if mu_grid.is_empty() {
        return Err(Error::invalid(
            "mu_grid",
            "must contain at least one threshold",
        ));
    }
    for &mu in mu_grid {
        if !mu.is_finite() {
            return Err(Error::invalid(
                "mu_grid",
                format!("thresholds must be finite, got {mu}"),
            ));
        }
        check_mu(mu)?;
    }
    if mu_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid(
            "mu_grid",
            "thresholds must be strictly increasing",
        ));
    }
    Ok(())
}

/// Throughput of the threshold policy at every `mu` in an increasing grid.
///
/// All grid points use the same period streams. Because a period stops later
/// for a larger threshold, one walk through the cells of a period yields the
/// outcome for every grid point; the results equal separate
/// [`estimate_throughput`] calls with the same seed.
pub fn threshold_sweep(
    params: &SystemParams,
    channel: &ChannelModel,
    load: &LoadModel,
    mu_grid: &[f64],
    n_periods: u64,
    seed: u64,
    max_cells: u64,
) -> Result<SweepResult> {
    check_grid(mu_grid)?;
    check_periods(n_periods)?;
    let stats = reduce_periods(
        n_periods,
        seed,
        mu_grid.len(),
        PERIOD_BATCH,
        |rng, stats| {
            let mut next = 0;
            let mut elapsed = 0.0;
            for n in 1..=max_cells {
                let cell = examine_cell(params, channel, load, rng);
                elapsed += cell.search_time_s;
                let obs = cell.observation;
                if !obs.admitted {
                    continue;
                }
                while next < mu_grid.len() && obs.metric >= mu_grid[next] {
                    stats[next].push(&PeriodOutcome::select(params, n, elapsed, &obs));
                    next += 1;
                }
                if next == mu_grid.len() {
                    return Ok(());
                }
            }
            Err(Error::MaxCellsExceeded {
                max_cells,
                mu: mu_grid[next],
            })
        },
    )?;
    Ok(SweepResult {
        points: mu_grid
            .iter()
            .zip(&stats)
            .map(|(&mu, s)| {
                let e = s.estimate();
                SweepPoint {
                    mu,
                    throughput_bps: e.throughput_bps,
                    std_err_bps: e.std_err_bps,
                    mean_cells: e.mean_cells,
                }
            })
            .collect(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TracePoint {
    pub n: u64,
    /// Cumulative search time after `n` cells (no random access or data).
    pub search_time_s: f64,
    /// `U_n`: best reward among the first `n` cells.
    pub best_bits: f64,
}

/// One search of exactly `n_cells` cells without stopping.
pub fn sample_trace<R: Rng + ?Sized>(
    params: &SystemParams,
    channel: &ChannelModel,
    load: &LoadModel,
    n_cells: u64,
    rng: &mut R,
) -> Vec<TracePoint> {
    let mut elapsed = 0.0;
    let mut best = 0.0f64;
    (1..=n_cells)
        .map(|n| {
            let cell = examine_cell(params, channel, load, rng);
            elapsed += cell.search_time_s;
            best = best.max(cell.observation.reward_bits);
            TracePoint {
                n,
                search_time_s: elapsed,
                best_bits: best,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::expected_period_duration;
    use crate::model::ActiveUeCount;

    fn open_params() -> SystemParams {
        SystemParams::reference()
            .with_snr_threshold(f64::NEG_INFINITY)
            .unwrap()
    }

    #[test]
    fn zero_threshold_stops_at_first_cell() {
        let params = open_params();
        let channel = ChannelModel::reference();
        let load = LoadModel::reference();
        for k in 0..1000 {
            let mut rng = RngStream::period(1, k).rng();
            let out = simulate_period(&params, &channel, &load, 0.0, &mut rng, 10).unwrap();
            assert_eq!(out.cells_searched, 1);

            // replay the same draws by hand
            let mut rng = RngStream::period(1, k).rng();
            let y = sample_sync_delay(&params, &mut rng);
            let snr = sample_snr(&channel, &params, &mut rng);
            let z = sample_sib_delay(&params, &mut rng);
            let expected = y + 63.0 * params.t_syn() + z + params.theta();
            assert_eq!(out.selected_snr, snr);
            assert!((out.duration_s - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_threshold_mean_duration_matches_expectation() {
        let params = open_params();
        let est = estimate_throughput(
            &params,
            &ChannelModel::reference(),
            &LoadModel::reference(),
            0.0,
            100_000,
            2,
            10,
        )
        .unwrap();
        let oracle = expected_period_duration(&params, 1.0, 1);
        assert!((est.mean_duration_s / oracle - 1.0).abs() < 0.005);
        assert_eq!(est.mean_cells, 1.0);
    }

    #[test]
    fn binary_load_gives_geometric_search_length() {
        // β ∈ {1, 1/1001} with probability ½ each and a flat channel: the
        // metric is two-valued, so any μ between the values stops w.p. ½.
        let params = open_params();
        let channel = ChannelModel::new(0.1, 0.0).unwrap();
        let load = LoadModel::new(ActiveUeCount::TwoPoint {
            low: 0,
            high: 1000,
            p_low: 0.5,
        })
        .unwrap();
        let est = estimate_throughput(&params, &channel, &load, 1.0, 100_000, 3, 1000).unwrap();
        assert!(
            (est.mean_cells / 2.0 - 1.0).abs() < 0.02,
            "{}",
            est.mean_cells
        );
    }

    #[test]
    fn stopped_cells_meet_threshold() {
        let params = SystemParams::reference();
        let channel = ChannelModel::reference();
        let load = LoadModel::reference();
        let mu = 0.6;
        let outcomes = simulate_periods(
            &params,
            &channel,
            &load,
            Policy::Threshold { mu },
            5000,
            4,
            DEFAULT_MAX_CELLS,
        )
        .unwrap();
        for o in outcomes {
            assert!(o.bits >= params.bits_per_metric() * mu * (1.0 - 1e-15));
            assert!(params.admits(o.selected_snr));
            let floor = o.cells_searched as f64 * 63.0 * params.t_syn() + params.theta();
            assert!(o.duration_s >= floor - 1e-9);
        }
    }

    #[test]
    fn max_cells_is_reported() {
        let params = SystemParams::reference();
        let mut rng = RngStream::period(5, 0).rng();
        let err = simulate_period(
            &params,
            &ChannelModel::reference(),
            &LoadModel::reference(),
            1e6,
            &mut rng,
            50,
        )
        .unwrap_err();
        assert_eq!(
            err,
            Error::MaxCellsExceeded {
                max_cells: 50,
                mu: 1e6
            }
        );
        let err = threshold_sweep(
            &params,
            &ChannelModel::reference(),
            &LoadModel::reference(),
            &[0.0, 1e6],
            10,
            5,
            50,
        );
        assert!(matches!(err, Err(Error::MaxCellsExceeded { .. })));
    }

    #[test]
    fn deterministic_reward_matches_renewal_ratio() {
        // Flat channel, fixed load: R̂ ≡ B, every period stops at cell one.
        let params = SystemParams::reference();
        let channel = ChannelModel::new(0.1, 0.0).unwrap();
        let load = LoadModel::new(ActiveUeCount::Fixed { count: 4 }).unwrap();
        let est = estimate_throughput(&params, &channel, &load, 0.1, 100_000, 6, 10).unwrap();
        let b = params.bits_per_metric() * 0.2 * (1.0f64 + 6.4).log2();
        let oracle = b / expected_period_duration(&params, 1.0, 1);
        assert!((est.throughput_bps / oracle - 1.0).abs() < 0.005);
    }

    #[test]
    fn doubling_bandwidth_doubles_throughput() {
        let params = SystemParams::reference();
        let wide = params.with_bandwidth(2.0 * params.bandwidth_hz()).unwrap();
        let (c, l) = (ChannelModel::reference(), LoadModel::reference());
        let a = estimate_throughput(&params, &c, &l, 0.5, 2000, 7, DEFAULT_MAX_CELLS).unwrap();
        let b = estimate_throughput(&wide, &c, &l, 0.5, 2000, 7, DEFAULT_MAX_CELLS).unwrap();
        assert_eq!(b.throughput_bps, 2.0 * a.throughput_bps);
        assert_eq!(b.mean_cells, a.mean_cells);
    }

    #[test]
    fn sweep_equals_pointwise_estimates() {
        let params = SystemParams::reference();
        let (c, l) = (ChannelModel::reference(), LoadModel::reference());
        let grid = [0.0, 0.3, 0.6, 0.9];
        let sweep = threshold_sweep(&params, &c, &l, &grid, 3000, 8, DEFAULT_MAX_CELLS).unwrap();
        for (p, &mu) in sweep.points.iter().zip(&grid) {
            let e = estimate_throughput(&params, &c, &l, mu, 3000, 8, DEFAULT_MAX_CELLS).unwrap();
            assert_eq!(p.throughput_bps, e.throughput_bps);
            assert_eq!(p.std_err_bps, e.std_err_bps);
            assert_eq!(p.mean_cells, e.mean_cells);
        }
    }

    #[test]
    fn single_point_sweep_is_always_stop() {
        let params = open_params();
        let (c, l) = (ChannelModel::reference(), LoadModel::reference());
        let sweep = threshold_sweep(&params, &c, &l, &[0.0], 2000, 9, 10).unwrap();
        assert_eq!(sweep.points.len(), 1);
        let first = estimate_policy(
            &params,
            &c,
            &l,
            Policy::FixedScan {
                cells: 1,
                criterion: ScanCriterion::MaxMetric,
            },
            2000,
            9,
            10,
        )
        .unwrap();
        assert_eq!(sweep.points[0].throughput_bps, first.throughput_bps);
    }

    #[test]
    fn grid_validation() {
        let params = SystemParams::reference();
        let (c, l) = (ChannelModel::reference(), LoadModel::reference());
        for bad in [
            &[][..],
            &[0.5, 0.5][..],
            &[0.6, 0.5][..],
            &[-0.1][..],
            &[f64::NAN][..],
        ] {
            assert!(threshold_sweep(&params, &c, &l, bad, 10, 1, 10).is_err());
        }
        assert!(estimate_throughput(&params, &c, &l, 0.1, 0, 1, 10).is_err());
    }

    #[test]
    fn thread_count_does_not_change_results() {
        let params = SystemParams::reference();
        let (c, l) = (ChannelModel::reference(), LoadModel::reference());
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| {
                    estimate_throughput(&params, &c, &l, 0.6, 5000, 10, DEFAULT_MAX_CELLS).unwrap()
                })
        };
        assert_eq!(run(1), run(4));
    }

    #[test]
    fn batching_changes_only_rounding() {
        let params = SystemParams::reference();
        let (c, l) = (ChannelModel::reference(), LoadModel::reference());
        let policy = Policy::Threshold { mu: 0.6 };
        let a = estimate_policy_batched(&params, &c, &l, policy, 5000, 11, DEFAULT_MAX_CELLS, 1024)
            .unwrap();
        let b = estimate_policy_batched(&params, &c, &l, policy, 5000, 11, DEFAULT_MAX_CELLS, 7)
            .unwrap();
        assert!((a.throughput_bps / b.throughput_bps - 1.0).abs() < 5000.0 * f64::EPSILON);
        assert_eq!(a.mean_cells, b.mean_cells);
    }

    #[test]
    fn trace_properties() {
        let params = SystemParams::reference();
        let (c, l) = (ChannelModel::reference(), LoadModel::reference());
        let mut rng = RngStream::period(12, 0).rng();
        let one = sample_trace(&params, &c, &l, 1, &mut rng);
        let mut rng = RngStream::period(12, 0).rng();
        let first = examine_cell(&params, &c, &l, &mut rng);
        assert_eq!(one.len(), 1);
        assert_eq!(one[0].best_bits, first.observation.reward_bits);

        for seed in 0..50 {
            let trace = sample_trace(&params, &c, &l, 40, &mut RngStream::period(seed, 0).rng());
            assert_eq!(trace.len(), 40);
            assert!(trace.windows(2).all(|w| w[1].best_bits >= w[0].best_bits));
            assert!(trace
                .windows(2)
                .all(|w| w[1].search_time_s > w[0].search_time_s));
        }
    }

    #[test]
    fn trace_mean_time_matches_expectation() {
        let params = SystemParams::reference();
        let (c, l) = (ChannelModel::reference(), LoadModel::reference());
        let p_gamma = c.admission_probability(&params);
        let n = 10_000;
        let total: f64 = (0..n)
            .map(|k| {
                sample_trace(&params, &c, &l, 20, &mut RngStream::period(13, k).rng())[19]
                    .search_time_s
            })
            .sum();
        let oracle = expected_period_duration(&params, p_gamma, 20) - params.theta();
        assert!((total / n as f64 / oracle - 1.0).abs() < 0.005);
    }

    #[test]
    fn fixed_scan_selection() {
        let params = SystemParams::reference();
        let (c, l) = (ChannelModel::reference(), LoadModel::reference());
        for k in 0..200 {
            let cells: Vec<ExaminedCell> = {
                let mut rng = RngStream::period(14, k).rng();
                (0..10)
                    .map(|_| examine_cell(&params, &c, &l, &mut rng))
                    .collect()
            };
            let time: f64 = cells.iter().map(|x| x.search_time_s).sum::<f64>() + params.theta();
            let max_snr = cells
                .iter()
                .map(|x| x.observation.snr)
                .fold(f64::MIN, f64::max);
            let max_bits = cells
                .iter()
                .map(|x| x.observation.reward_bits)
                .fold(0.0, f64::max);

            let mut rng = RngStream::period(14, k).rng();
            let p = scan_fixed(&params, &c, &l, 10, ScanCriterion::MaxPower, &mut rng).unwrap();
            assert_eq!(p.selected_snr, max_snr);
            assert!((p.duration_s - time).abs() < 1e-9);

            let mut rng = RngStream::period(14, k).rng();
            let m = scan_fixed(&params, &c, &l, 10, ScanCriterion::MaxMetric, &mut rng).unwrap();
            assert_eq!(m.bits, max_bits);
            assert!(m.bits >= p.bits);
        }
        let mut rng = RngStream::period(14, 0).rng();
        assert!(scan_fixed(&params, &c, &l, 0, ScanCriterion::MaxMetric, &mut rng).is_err());
    }

    #[test]
    fn policy_parsing() {
        assert_eq!(
            "max_power".parse::<ScanCriterion>().unwrap(),
            ScanCriterion::MaxPower
        );
        assert!("max_snr".parse::<ScanCriterion>().is_err());
        assert_eq!(
            Policy::FixedScan {
                cells: 10,
                criterion: ScanCriterion::MaxMetric
            }
            .to_string(),
            "max_metric:10"
        );
    }
}
