//! The experiment behind each subcommand. Every function returns the bytes
//! to write.

use anyhow::{anyhow, bail, Context};
use cellsel::analytic::{binary_optimal_throughput, ordinary_value};
use cellsel::sim::{sample_trace, threshold_sweep};
use cellsel::solver::{default_initial_value, solve_bisection, solve_iterative};
use cellsel::twotier::{associate_many, compare_schemes, AssociationScheme, Strategy};
use cellsel::{MetricDistribution, RngStream, StoppingSolution};
use serde::Serialize;

use crate::scenario::{self, Scenario};
use crate::{Common, CompareArgs, SolveArgs, SweepArgs, TraceArgs, TwoTierArgs};

fn open(common: &Common) -> anyhow::Result<Scenario> {
    let mut file = scenario::load(&common.scenario)?;
    file.apply(&common.overrides());
    file.validate()
        .with_context(|| format!("invalid scenario {}", common.scenario.display()))
}

#[derive(Debug, Serialize)]
struct TracePoint {
    iteration: usize,
    lambda_bps: f64,
}

#[derive(Debug, Serialize)]
struct SolverReport {
    lambda_star_bps: f64,
    residual_bits: f64,
    iterations: usize,
    trace: Vec<TracePoint>,
}

impl From<&StoppingSolution> for SolverReport {
    fn from(s: &StoppingSolution) -> Self {
        Self {
            lambda_star_bps: s.lambda_star,
            residual_bits: s.residual,
            iterations: s.iterations(),
            trace: s
                .trace
                .iter()
                .map(|&(iteration, lambda_bps)| TracePoint {
                    iteration,
                    lambda_bps,
                })
                .collect(),
        }
    }
}

#[derive(Debug, Serialize)]
struct DistributionReport {
    source: &'static str,
    samples: Option<usize>,
    seed: Option<u64>,
}

#[derive(Debug, Serialize)]
struct SolveReport {
    lambda_star_bps: f64,
    mu_bps_hz: f64,
    reward_threshold_bits: f64,
    p_gamma: f64,
    expected_cells: f64,
    distribution: DistributionReport,
    bisection: SolverReport,
    iteration: SolverReport,
    cross_solver_rel_delta: f64,
    ordinary_value_bits: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    closed_form_lambda_star_bps: Option<f64>,
}

/// The reward distribution and its bisection solution.
pub struct Solved {
    pub dist: MetricDistribution,
    pub solution: StoppingSolution,
    source: DistributionReport,
}

pub fn solve_scenario(sc: &Scenario, seed: u64) -> anyhow::Result<Solved> {
    let (dist, source) = match &sc.binary {
        Some(model) => (
            model.distribution(&sc.params)?,
            DistributionReport {
                source: "binary",
                samples: None,
                seed: None,
            },
        ),
        None => (
            MetricDistribution::sample(&sc.params, &sc.channel, &sc.load, sc.solver.samples, seed)?,
            DistributionReport {
                source: "sampled",
                samples: Some(sc.solver.samples),
                seed: Some(seed),
            },
        ),
    };
    let solution = solve_bisection(&dist, &sc.params, sc.solver.bisection_rel_tol)
        .context("bisection solver")?;
    Ok(Solved {
        dist,
        solution,
        source,
    })
}

pub fn solve(args: &SolveArgs) -> anyhow::Result<Vec<u8>> {
    let sc = open(&args.common)?;
    let Solved {
        dist,
        solution,
        source,
    } = solve_scenario(&sc, args.seed.unwrap_or(sc.solver.sample_seed))?;
    let lambda0 = sc
        .solver
        .initial_lambda_bps
        .unwrap_or_else(|| default_initial_value(&dist, &sc.params));
    let iterative = solve_iterative(
        &dist,
        &sc.params,
        lambda0,
        sc.solver.iteration_rel_tol,
        sc.solver.max_iter,
    )
    .context("fixed-point iteration")?;
    let closed_form = match &sc.binary {
        Some(model) => Some(binary_optimal_throughput(&sc.params, model)?),
        None => None,
    };
    let report = SolveReport {
        lambda_star_bps: solution.lambda_star,
        mu_bps_hz: solution.mu,
        reward_threshold_bits: solution.reward_threshold,
        p_gamma: dist.p_gamma(),
        expected_cells: 1.0 / dist.tail_probability(solution.reward_threshold),
        distribution: source,
        cross_solver_rel_delta: (iterative.lambda_star - solution.lambda_star).abs()
            / solution.lambda_star,
        ordinary_value_bits: ordinary_value(&dist, &sc.params, solution.lambda_star)?,
        bisection: (&solution).into(),
        iteration: (&iterative).into(),
        closed_form_lambda_star_bps: closed_form,
    };
    let mut out = serde_json::to_vec_pretty(&report)?;
    out.push(b'\n');
    Ok(out)
}

/// `lo:hi:count` (evenly spaced, ends included) or `a,b,c`.
pub fn parse_grid(spec: &str) -> anyhow::Result<Vec<f64>> {
    let number = |s: &str| {
        s.trim()
            .parse::<f64>()
            .map_err(|_| anyhow!("grid: `{}` is not a number", s.trim()))
    };
    let parts: Vec<&str> = spec.split(':').collect();
    match parts.as_slice() {
        [lo, hi, count] => {
            let (lo, hi) = (number(lo)?, number(hi)?);
            let count: usize = count.trim().parse().map_err(|_| {
                anyhow!(
                    "grid: point count `{}` is not a positive integer",
                    count.trim()
                )
            })?;
            match count {
                0 => bail!("grid: point count must be at least 1"),
                1 => Ok(vec![lo]),
                _ => Ok((0..count)
                    .map(|i| lo + (hi - lo) * i as f64 / (count - 1) as f64)
                    .collect()),
            }
        }
        [list] => list.split(',').map(number).collect(),
        _ => bail!("grid: expected `lo:hi:count` or a comma-separated list, got `{spec}`"),
    }
}

#[derive(Debug, Serialize)]
struct SweepRow {
    mu: f64,
    throughput_bps: f64,
    std_err_bps: f64,
    mean_cells: f64,
}

fn to_csv<T: Serialize>(rows: impl IntoIterator<Item = T>) -> anyhow::Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.serialize(row)?;
    }
    w.into_inner().map_err(|e| anyhow!("{}", e.error()))
}

pub fn sweep(args: &SweepArgs) -> anyhow::Result<Vec<u8>> {
    let sc = open(&args.common)?;
    let grid = parse_grid(&args.grid)?;
    let periods = args.periods.unwrap_or(sc.simulation.periods);
    let result = threshold_sweep(
        &sc.params,
        &sc.channel,
        &sc.load,
        &grid,
        periods,
        args.seed,
        sc.simulation.max_cells,
    )?;
    to_csv(result.points.iter().map(|p| SweepRow {
        mu: p.mu,
        throughput_bps: p.throughput_bps,
        std_err_bps: p.std_err_bps,
        mean_cells: p.mean_cells,
    }))
}

#[derive(Debug, Serialize)]
struct TraceRow {
    n: u64,
    #[serde(rename = "T_n_s")]
    t_n_s: f64,
    #[serde(rename = "U_n_bits")]
    u_n_bits: f64,
}

pub fn trace(args: &TraceArgs) -> anyhow::Result<Vec<u8>> {
    let sc = open(&args.common)?;
    if args.cells == 0 {
        bail!("--cells must be at least 1");
    }
    let mut rng = RngStream::period(args.seed, 0).rng();
    let points = sample_trace(&sc.params, &sc.channel, &sc.load, args.cells, &mut rng);
    to_csv(points.iter().map(|p| TraceRow {
        n: p.n,
        t_n_s: p.search_time_s,
        u_n_bits: p.best_bits,
    }))
}

#[derive(Debug, Serialize)]
struct CompareRow {
    scheme: &'static str,
    n_scan: Option<u64>,
    throughput_bps: f64,
    std_err_bps: f64,
}

pub fn compare(args: &CompareArgs) -> anyhow::Result<Vec<u8>> {
    let sc = open(&args.common)?;
    let strategies = match &args.strategies {
        Some(list) => list
            .split(',')
            .map(|s| s.trim().parse::<Strategy>())
            .collect::<Result<Vec<_>, _>>()?,
        None => Strategy::standard_set(),
    };
    let mu = if strategies.contains(&Strategy::OptimalStopping) {
        solve_scenario(&sc, sc.solver.sample_seed)?.solution.mu
    } else {
        0.0
    };
    let rows = compare_schemes(
        &sc.params,
        &sc.channel,
        &sc.load,
        &strategies,
        mu,
        args.periods.unwrap_or(sc.simulation.periods),
        args.seed,
        sc.simulation.max_cells,
    )?;
    to_csv(rows.iter().map(|r| CompareRow {
        scheme: r.strategy.name(),
        n_scan: r.strategy.scan_cells(),
        throughput_bps: r.estimate.throughput_bps,
        std_err_bps: r.estimate.std_err_bps,
    }))
}

#[derive(Debug, Serialize)]
struct TwoTierRow {
    realization: String,
    bs_id: Option<usize>,
    tier: Option<&'static str>,
    x_m: Option<f64>,
    y_m: Option<f64>,
    ue_count: Option<u64>,
    count_std: f64,
}

pub fn twotier(args: &TwoTierArgs) -> anyhow::Result<Vec<u8>> {
    let sc = open(&args.common)?;
    let scheme: AssociationScheme = args.scheme.parse()?;
    if args.realizations == 0 {
        bail!("--realizations must be at least 1");
    }
    let runs = associate_many(&sc.two_tier, scheme, args.seed, args.realizations)?;
    let mut rows = Vec::new();
    for (r, run) in runs.iter().enumerate() {
        let std = run.count_std();
        rows.extend(run.stations.iter().map(|bs| TwoTierRow {
            realization: r.to_string(),
            bs_id: Some(bs.id),
            tier: Some(bs.tier.name()),
            x_m: Some(bs.position.0),
            y_m: Some(bs.position.1),
            ue_count: Some(bs.active_ues),
            count_std: std,
        }));
    }
    rows.push(TwoTierRow {
        realization: "mean".into(),
        bs_id: None,
        tier: None,
        x_m: None,
        y_m: None,
        ue_count: None,
        count_std: runs.iter().map(|r| r.count_std()).sum::<f64>() / runs.len() as f64,
    });
    to_csv(rows)
}
