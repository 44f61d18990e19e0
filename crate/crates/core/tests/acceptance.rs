//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits nonzero if any fails.

use std::process::ExitCode;
use std::time::Instant;

use cellsel::analytic::{
    binary_optimal_throughput, expected_period_duration, ordinary_value, stopped_value_cdf,
};
use cellsel::sim::{
    estimate_policy, estimate_throughput, simulate_periods, threshold_sweep, Policy, ScanCriterion,
    DEFAULT_MAX_CELLS,
};
use cellsel::solver::{
    default_initial_value, solve_bisection, solve_iterative, DEFAULT_BISECTION_REL_TOL,
};
use cellsel::stats::{geometric_chi_square, ks_one_sample};
use cellsel::twotier::{
    associate_many, compare_schemes, AssociationScheme, Strategy, TwoTierConfig,
};
use cellsel::{
    BinaryMetricModel, ChannelModel, LoadModel, MetricDistribution, RngStream, StoppingSolution,
    SystemParams,
};
use rand::Rng;

const SAMPLES: usize = 1_000_000;
const PERIODS: u64 = 100_000;

struct Solved {
    params: SystemParams,
    channel: ChannelModel,
    load: LoadModel,
    dist: MetricDistribution,
    solution: StoppingSolution,
}

fn solve(params: SystemParams, mean_load: f64, seed: u64) -> Solved {
    let channel = ChannelModel::reference();
    let load = LoadModel::poisson(mean_load).unwrap();
    let dist = MetricDistribution::sample(&params, &channel, &load, SAMPLES, seed).unwrap();
    let solution = solve_bisection(&dist, &params, DEFAULT_BISECTION_REL_TOL).unwrap();
    Solved {
        params,
        channel,
        load,
        dist,
        solution,
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn pooled(a: f64, b: f64) -> f64 {
    a.hypot(b)
}

type Check<'a> = Box<dyn Fn() -> Outcome + 'a>;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn closed_form_agreement() -> Outcome {
    let params = SystemParams::reference();
    let mut rng = RngStream::new(101, 0).rng();
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let model =
            BinaryMetricModel::new(rng.random_range(0.05..=1.0), rng.random_range(0.1..=10.0))
                .unwrap();
        let dist = model.distribution(&params).unwrap();
        let lambda = solve_bisection(&dist, &params, 1e-12).unwrap().lambda_star;
        worst = worst.max(rel(
            lambda,
            binary_optimal_throughput(&params, &model).unwrap(),
        ));
    }
    outcome(
        worst < 1e-8,
        format!("worst relative error {worst:.2e} over 50 models"),
    )
}

fn cross_solver(reference: &Solved) -> Outcome {
    let it = solve_iterative(
        &reference.dist,
        &reference.params,
        default_initial_value(&reference.dist, &reference.params),
        1e-10,
        500,
    )
    .unwrap();
    let delta = rel(it.lambda_star, reference.solution.lambda_star);
    outcome(
        delta < 1e-6,
        format!(
            "bisection {:.6e} bit/s, iteration {:.6e} bit/s, relative gap {delta:.2e}",
            reference.solution.lambda_star, it.lambda_star
        ),
    )
}

fn iteration_properties(reference: &Solved) -> Outcome {
    let lambda_star = reference.solution.lambda_star;
    let mut rng = RngStream::new(103, 0).rng();
    let mut max_iters = 0;
    for k in 0..100 {
        let lambda0 = if k == 0 {
            10.0 * lambda_star
        } else {
            10.0 * lambda_star * (1.0 - rng.random::<f64>())
        };
        let sol = match solve_iterative(&reference.dist, &reference.params, lambda0, 1e-8, 200) {
            Ok(s) => s,
            Err(e) => return outcome(false, format!("λ0 = {lambda0:.4e}: {e}")),
        };
        let tail: Vec<f64> = sol.trace.iter().skip(1).map(|&(_, l)| l).collect();
        if let Some(w) = tail.windows(2).find(|w| w[1] < w[0]) {
            return outcome(
                false,
                format!("λ0 = {lambda0:.4e}: iterate fell from {} to {}", w[0], w[1]),
            );
        }
        if let Some(l) = tail.iter().find(|&&l| l > lambda_star * (1.0 + 1e-8)) {
            return outcome(false, format!("λ0 = {lambda0:.4e}: iterate {l} above λ*"));
        }
        max_iters = max_iters.max(sol.trace.len() - 1);
    }
    outcome(true, format!("100 starts, at most {max_iters} iterations"))
}

fn expected_duration() -> Outcome {
    let params = SystemParams::reference();
    let channel = ChannelModel::reference();
    let policy = Policy::FixedScan {
        cells: 5,
        criterion: ScanCriterion::MaxMetric,
    };
    let est = estimate_policy(
        &params,
        &channel,
        &LoadModel::reference(),
        policy,
        PERIODS,
        104,
        5,
    )
    .unwrap();
    let oracle = expected_period_duration(&params, channel.admission_probability(&params), 5);
    let err = rel(est.mean_duration_s, oracle);
    outcome(
        err < 0.005,
        format!(
            "mean {:.6} s vs {oracle:.6} s, relative error {err:.2e}",
            est.mean_duration_s
        ),
    )
}

fn optimality(reference: &Solved) -> Outcome {
    let Solved {
        params,
        channel,
        load,
        solution,
        ..
    } = reference;
    let mu = solution.mu;
    let at_mu =
        estimate_throughput(params, channel, load, mu, PERIODS, 105, DEFAULT_MAX_CELLS).unwrap();
    let err = rel(at_mu.throughput_bps, solution.lambda_star);
    let grid: Vec<f64> = (0..41).map(|i| 3.0 * mu * i as f64 / 40.0).collect();
    let sweep = threshold_sweep(
        params,
        channel,
        load,
        &grid,
        PERIODS,
        105,
        DEFAULT_MAX_CELLS,
    )
    .unwrap();
    let worst = sweep
        .points
        .iter()
        .map(|p| {
            (p.throughput_bps - at_mu.throughput_bps) / pooled(p.std_err_bps, at_mu.std_err_bps)
        })
        .fold(f64::MIN, f64::max);
    outcome(
        err < 0.02 && worst <= 3.0,
        format!(
            "simulated {:.4e} vs λ* {:.4e} bit/s ({:.2}%), best grid point {worst:+.2} pooled SE above μ*",
            at_mu.throughput_bps,
            solution.lambda_star,
            100.0 * err
        ),
    )
}

fn stopped_laws(reference: &Solved) -> Outcome {
    let Solved {
        params,
        channel,
        load,
        dist,
        solution,
    } = reference;
    let stopped = stopped_value_cdf(dist, solution.lambda_star, params).unwrap();
    let law = stopped.stopping_law();
    let policy = Policy::Threshold { mu: solution.mu };
    let outcomes = simulate_periods(
        params,
        channel,
        load,
        policy,
        PERIODS,
        106,
        DEFAULT_MAX_CELLS,
    )
    .unwrap();
    let cells: Vec<u64> = outcomes.iter().map(|o| o.cells_searched).collect();
    let bits: Vec<f64> = outcomes.iter().map(|o| o.bits).collect();
    let chi = geometric_chi_square(&cells, &law).unwrap();
    let ks = ks_one_sample(&bits, |x| stopped.cdf(x)).unwrap();
    let mean_n = cells.iter().sum::<u64>() as f64 / cells.len() as f64;
    let err = rel(mean_n, law.mean());
    outcome(
        chi.p_value > 0.01 && ks.p_value > 0.01 && err < 0.02,
        format!(
            "chi-square p = {:.3}, KS p = {:.3}, E[N*] {mean_n:.3} vs {:.3}",
            chi.p_value,
            ks.p_value,
            law.mean()
        ),
    )
}

fn value_consistency(solved: &[&Solved]) -> Outcome {
    let mut worst = 0.0f64;
    for s in solved {
        let v = ordinary_value(&s.dist, &s.params, s.solution.lambda_star).unwrap();
        worst = worst.max(v.abs() / (s.solution.lambda_star * s.params.theta()));
    }
    outcome(
        worst < 1e-6,
        format!(
            "worst |V(λ*)|/(λ*θ) = {worst:.2e} over {} scenarios",
            solved.len()
        ),
    )
}

fn parameter_trends(grid: &[[[Solved; 4]; 2]; 2]) -> Outcome {
    // grid[load][t_data][beam] with load ∈ {5, 10}, T_data ∈ {10, 40}, L ∈ {4, 16, 64, 256}
    let lam = |load: usize, t: usize, l: usize| grid[load][t][l].solution.lambda_star;
    let mu = |load: usize, t: usize, l: usize| grid[load][t][l].solution.mu;
    let mut failures = Vec::new();
    if !(lam(1, 0, 2) > lam(1, 0, 0) && lam(1, 0, 2) > lam(1, 0, 3)) {
        failures.push("beam pairs: L=64 is not the peak".to_string());
    }
    for l in 0..4 {
        if !(lam(1, 1, l) > lam(1, 0, l) && mu(1, 1, l) > mu(1, 0, l)) {
            failures.push(format!("data time: no gain at L index {l}"));
        }
        if lam(0, 0, l) <= lam(1, 0, l) {
            failures.push(format!("load: lighter load not better at L index {l}"));
        }
    }
    let summary = format!(
        "λ*(L=4,16,64,256) = {:.4e}, {:.4e}, {:.4e}, {:.4e} bit/s",
        lam(1, 0, 0),
        lam(1, 0, 1),
        lam(1, 0, 2),
        lam(1, 0, 3)
    );
    if failures.is_empty() {
        outcome(true, summary)
    } else {
        outcome(false, format!("{summary}; {}", failures.join("; ")))
    }
}

fn scheme_ordering(reference: &Solved) -> Outcome {
    let rows = compare_schemes(
        &reference.params,
        &reference.channel,
        &reference.load,
        &Strategy::standard_set(),
        reference.solution.mu,
        PERIODS,
        109,
        DEFAULT_MAX_CELLS,
    )
    .unwrap();
    let find = |s: &str| {
        rows.iter()
            .find(|r| r.strategy.to_string() == s)
            .unwrap()
            .estimate
    };
    let opt = find("optimal_stopping");
    let mut gaps = Vec::new();
    let mut pass = true;
    for n in [10, 30] {
        let metric = find(&format!("max_metric:{n}"));
        let power = find(&format!("max_power:{n}"));
        let g1 = (opt.throughput_bps - metric.throughput_bps)
            / pooled(opt.std_err_bps, metric.std_err_bps);
        let g2 = (metric.throughput_bps - power.throughput_bps)
            / pooled(metric.std_err_bps, power.std_err_bps);
        pass &= g1 > 3.0 && g2 > 3.0;
        gaps.push(format!("n={n}: {g1:.1} and {g2:.1} SE"));
    }
    outcome(pass, format!("gaps {}", gaps.join(", ")))
}

fn load_balancing() -> Outcome {
    let config = TwoTierConfig::default();
    let mean_std = |scheme| {
        let runs = associate_many(&config, scheme, 110, 100).unwrap();
        runs.iter().map(|r| r.count_std()).sum::<f64>() / runs.len() as f64
    };
    let metric = mean_std(AssociationScheme::MaxMetric);
    let power = mean_std(AssociationScheme::MaxPower);
    let snr = mean_std(AssociationScheme::MaxSnr);
    outcome(
        metric < power && power <= snr,
        format!("mean count std: max_metric {metric:.2}, max_power {power:.2}, max_snr {snr:.2}"),
    )
}

fn main() -> ExitCode {
    let start = Instant::now();
    let reference = solve(SystemParams::reference(), 10.0, 100);

    let beams = [4, 16, 64, 256];
    let trends: [[[Solved; 4]; 2]; 2] = [5.0, 10.0].map(|mean_load| {
        [10.0, 40.0].map(|t_data| {
            beams.map(|l| {
                let params = SystemParams::reference()
                    .with_beam_pairs(l)
                    .and_then(|p| p.with_t_data(t_data))
                    .unwrap();
                solve(params, mean_load, 108)
            })
        })
    });
    let mut all: Vec<&Solved> = vec![&reference];
    all.extend(trends.iter().flatten().flatten());

    let checks: Vec<(&str, Check)> = vec![
        ("closed-form agreement", Box::new(closed_form_agreement)),
        (
            "cross-solver agreement",
            Box::new(|| cross_solver(&reference)),
        ),
        (
            "iteration convergence",
            Box::new(|| iteration_properties(&reference)),
        ),
        ("expected period duration", Box::new(expected_duration)),
        (
            "optimality of the threshold",
            Box::new(|| optimality(&reference)),
        ),
        (
            "stopping-time and stopped-reward laws",
            Box::new(|| stopped_laws(&reference)),
        ),
        (
            "value-function consistency",
            Box::new(|| value_consistency(&all)),
        ),
        ("parameter trends", Box::new(|| parameter_trends(&trends))),
        ("scheme ordering", Box::new(|| scheme_ordering(&reference))),
        ("two-tier load balancing", Box::new(load_balancing)),
    ];

    let mut failed = 0;
    for (i, (name, check)) in checks.iter().enumerate() {
        let t = Instant::now();
        let o = check();
        failed += usize::from(!o.pass);
        println!(
            "criterion {:>2} {}: {name}: {} ({:.1} s)",
            i + 1,
            if o.pass { "PASS" } else { "FAIL" },
            o.detail,
            t.elapsed().as_secs_f64()
        );
    }
    println!(
        "{} of {} criteria passed in {:.1} s",
        checks.len() - failed,
        checks.len(),
        start.elapsed().as_secs_f64()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
