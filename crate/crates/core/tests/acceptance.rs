//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

mod common;

use std::fmt::Write as _;
use std::time::Instant;

use common::*;
use osbm::experiment::{run_experiment, ExperimentPlan, DEFAULT_B_VALUES};
use osbm::instance::{generate_synthetic, ingest_ratings, ArrivalSampler, RatingsParams, Recipe, RecipeKind};
use osbm::lp::{self, LpStatus};
use osbm::offline::{continuous_greedy, expected_opt, pipage_round, solve_offline, GreedyConfig, OptMode, SolverKind};
use osbm::online::{
    compute_benchmark, run_trial, simulate, AlgorithmKind, AlgorithmOptions, BenchmarkKind, BenchmarkValue, MmpAlg,
    RunMetrics, SimConfig,
};
use osbm::rounding::dependent_round_stars;
use osbm::stats::Moments;
use osbm::submodular::{eval, multilinear_exact};
use osbm::{rng_for, streams, Instance, Objective, ObjectiveKind, Result};
use rand::seq::index;
use rand::Rng;

const E: f64 = std::f64::consts::E;

struct Verdict {
    pass: bool,
    detail: String,
}

fn sim(
    algorithm: AlgorithmKind,
    trials: usize,
    seed: u64,
    inst: &Instance,
    f: &Objective,
    x: &[f64],
    benchmark: BenchmarkValue,
) -> Result<RunMetrics> {
    let cfg = SimConfig {
        algorithm,
        trials,
        seed,
        workers: 0,
        options: AlgorithmOptions::default(),
    };
    simulate(&cfg, inst, f, Some(x), benchmark)
}

fn ratio_se(m: &RunMetrics) -> f64 {
    m.std_error / m.benchmark.value
}

fn perfect_matching_tightness() -> Result<Verdict> {
    let n = 100;
    let edges: Vec<(usize, usize)> = (0..n).map(|i| (i, i)).collect();
    let inst = Instance::from_lists(&vec![1; n], &vec![1.0; n], &edges, n as u32, 1);
    let f = Objective::linear(vec![1.0; n])?;
    let x = solve_offline(&f, &inst, SolverKind::Lp, &GreedyConfig::default())?.x;
    let bench = compute_benchmark(BenchmarkKind::Lp, &inst, &f, Some(&x), 1)?;
    let m = sim(AlgorithmKind::Mmp, 10_000, 1, &inst, &f, &x, bench)?;
    let target = 1.0 - 0.99f64.powi(100);
    Ok(Verdict {
        pass: (m.ratio - target).abs() <= 0.015,
        detail: format!(
            "MMP ratio {:.4} vs {target:.4} ± 0.015 (se {:.4})",
            m.ratio,
            ratio_se(&m)
        ),
    })
}

/// Runs `alg` against exact `E[OPT]` on the random suite and reports the
/// smallest margin `ratio − bound + 3·se`.
fn bound_suite(alg: AlgorithmKind, integral: bool, bound: f64, trials: usize, seed0: u64) -> Result<Verdict> {
    let mut worst = f64::INFINITY;
    let mut worst_at = String::new();
    let mut failures = 0;
    for i in 0..20u64 {
        let mut rng = rng_for(seed0 + i, 0);
        let inst = if integral {
            let nu = rng.random_range(2..=6);
            let nv = rng.random_range(2..=8);
            random_instance(&mut rng, nu, nv, 3, 0, true)
        } else {
            let nu = rng.random_range(2..=4);
            let nv = rng.random_range(2..=6);
            random_instance(&mut rng, nu, nv, 3, 200, false)
        };
        for kind in KINDS {
            let f = random_objective(&mut rng, kind, &inst);
            let cfg = GreedyConfig {
                seed: seed0 + i,
                ..GreedyConfig::default()
            };
            let x = continuous_greedy(&f, &inst, &cfg)?.x;
            let opt = expected_opt(&inst, &f, OptMode::Exact)?.estimate;
            let bench = BenchmarkValue {
                kind: BenchmarkKind::Brute,
                value: opt,
            };
            let m = sim(alg, trials, seed0 + i, &inst, &f, &x, bench)?;
            let margin = m.ratio - bound + 3.0 * ratio_se(&m);
            if margin < 0.0 {
                failures += 1;
            }
            if margin < worst {
                worst = margin;
                worst_at = format!("instance {i} {kind}: ratio {:.4} se {:.4}", m.ratio, ratio_se(&m));
            }
        }
    }
    Ok(Verdict {
        pass: failures == 0,
        detail: format!("bound {bound:.4}, {failures}/60 below; tightest {worst_at}"),
    })
}

fn greedy_guarantee() -> Result<Verdict> {
    let kinds = [
        ObjectiveKind::Linear,
        ObjectiveKind::Coverage,
        ObjectiveKind::BudgetAdditive,
        ObjectiveKind::PerUserCoverage,
    ];
    let mut worst = f64::INFINITY;
    let mut failures = 0;
    let mut i = 0u64;
    let mut done = 0;
    while done < 20 {
        i += 1;
        let mut rng = rng_for(4000 + i, 0);
        let nu = rng.random_range(2..=4);
        let nv = rng.random_range(2..=5);
        let horizon = rng.random_range(2..=4);
        let inst = random_instance(&mut rng, nu, nv, 3, horizon, false);
        if inst.num_edges() > 12 {
            continue;
        }
        let f = random_objective(&mut rng, kinds[done % kinds.len()], &inst);
        let cfg = GreedyConfig {
            seed: i,
            ..GreedyConfig::default()
        };
        let x = continuous_greedy(&f, &inst, &cfg)?.x;
        let value = multilinear_exact(&f, &x)?;
        let opt = expected_opt(&inst, &f, OptMode::Exact)?.estimate;
        let r = value / opt;
        worst = worst.min(r);
        if value < (1.0 - 1.0 / E - 0.05) * opt {
            failures += 1;
        }
        done += 1;
    }
    Ok(Verdict {
        pass: failures == 0,
        detail: format!(
            "F(x*)/E[OPT] minimum {worst:.4} vs {:.4}, {failures}/20 below",
            1.0 - 1.0 / E - 0.05
        ),
    })
}

fn plan(algorithms: Vec<AlgorithmKind>, allow_fractional_cr: bool) -> ExperimentPlan {
    ExperimentPlan {
        algorithms,
        b_values: DEFAULT_B_VALUES.to_vec(),
        etas: vec![1],
        trials: 500,
        seed: 1,
        benchmark: BenchmarkKind::Lp,
        workers: 0,
        solver: SolverKind::Lp,
        greedy: GreedyConfig::default(),
        options: AlgorithmOptions { allow_fractional_cr },
    }
}

fn cell(metrics: &[&RunMetrics], alg: AlgorithmKind, b: u32) -> RunMetrics {
    metrics
        .iter()
        .find(|m| m.algorithm == alg && m.b == Some(b))
        .map(|m| (*m).clone())
        .expect("cell present")
}

fn combined_se(a: &RunMetrics, b: &RunMetrics) -> f64 {
    ratio_se(a).hypot(ratio_se(b))
}

fn budget_sweep() -> Result<Verdict> {
    let problem = generate_synthetic(Recipe {
        kind: RecipeKind::BudgetAdditive,
        seed: 1,
    })?;
    let report = run_experiment(&plan(AlgorithmKind::ALL.to_vec(), true), &problem)?;
    let metrics: Vec<&RunMetrics> = report.metrics().collect();
    let mut good = 0;
    let mut detail = String::new();
    for b in DEFAULT_B_VALUES {
        let [mmp, cr, greedy, neg] = [
            AlgorithmKind::Mmp,
            AlgorithmKind::Cr,
            AlgorithmKind::Greedy,
            AlgorithmKind::NegCr,
        ]
        .map(|a| cell(&metrics, a, b));
        let ok = [&mmp, &cr].iter().all(|ours| {
            ours.ratio > 0.63
                && [&greedy, &neg]
                    .iter()
                    .all(|base| ours.ratio - base.ratio >= 3.0 * combined_se(ours, base))
        });
        good += ok as usize;
        let _ = write!(
            detail,
            " b={b}: mmp {:.3} cr {:.3} greedy {:.3} neg-cr {:.3};",
            mmp.ratio, cr.ratio, greedy.ratio, neg.ratio
        );
    }
    Ok(Verdict {
        pass: good >= 5,
        detail: format!("{good}/6 b-values satisfied;{detail}"),
    })
}

fn coverage_sweep() -> Result<Verdict> {
    let problem = generate_synthetic(Recipe {
        kind: RecipeKind::Coverage,
        seed: 1,
    })?;
    let report = run_experiment(&plan(vec![AlgorithmKind::Mmp, AlgorithmKind::Greedy], false), &problem)?;
    let metrics: Vec<&RunMetrics> = report.metrics().collect();
    let mut pass = true;
    let mut detail = String::new();
    for b in DEFAULT_B_VALUES {
        let mmp = cell(&metrics, AlgorithmKind::Mmp, b);
        let greedy = cell(&metrics, AlgorithmKind::Greedy, b);
        let gap = (mmp.ratio - greedy.ratio) / combined_se(&mmp, &greedy);
        let ok = if b == 1 {
            greedy.ratio >= mmp.ratio
        } else if b >= 3 {
            gap.abs() <= 3.0
        } else {
            true
        };
        pass &= ok;
        let _ = write!(
            detail,
            " b={b}: mmp {:.3} greedy {:.3} ({gap:+.1} se){};",
            mmp.ratio,
            greedy.ratio,
            if ok { "" } else { " x" }
        );
    }
    Ok(Verdict {
        pass,
        detail: detail.trim_start().to_string(),
    })
}

fn rounding_suite() -> Result<Verdict> {
    const RUNS: usize = 10_000;
    let mut marginal_misses = 0;
    let mut marginal_checks = 0;
    let mut worst_z = 0.0f64;
    let mut chi2 = 0.0f64;
    let mut dof = 0usize;
    let mut degree_misses = 0;
    let mut value_misses = 0;
    for i in 0..5u64 {
        let mut rng = rng_for(7000 + i, 0);
        let inst = random_instance(&mut rng, 3, 5, 3, 3, false);
        let x = random_feasible_x(&mut rng, &inst);
        let mut hits = vec![0usize; x.len()];
        for _ in 0..RUNS {
            let out = dependent_round_stars(&x, &inst, &mut rng)?;
            for u in 0..inst.num_offline() {
                let star = inst.edges_at_u(u);
                let total: f64 = star.iter().map(|&e| x[e]).sum();
                let deg = star.iter().filter(|&&e| out[e]).count() as f64;
                if deg < (total - 1e-9).floor() || deg > (total + 1e-9).ceil() {
                    degree_misses += 1;
                }
            }
            for (h, &o) in hits.iter_mut().zip(&out) {
                *h += o as usize;
            }
        }
        for (e, &h) in hits.iter().enumerate() {
            marginal_checks += 1;
            let dev = (h as f64 / RUNS as f64 - x[e]).abs();
            let sigma = bernoulli_sigma(x[e], RUNS);
            if sigma > 0.0 {
                worst_z = worst_z.max(dev / sigma);
                chi2 += (dev / sigma).powi(2);
                dof += 1;
            }
            if dev > 3.0 * sigma + 1e-12 {
                marginal_misses += 1;
            }
        }
    }
    for i in 0..5u64 {
        let mut rng = rng_for(7100 + i, 0);
        let inst = loop {
            let inst = random_instance(&mut rng, 3, 5, 3, 3, false);
            if inst.num_edges() <= 12 {
                break inst;
            }
        };
        let f = random_objective(&mut rng, KINDS[i as usize % KINDS.len()], &inst);
        let x = random_feasible_x(&mut rng, &inst);
        let exact = multilinear_exact(&f, &x)?;
        let mut hits = vec![0usize; x.len()];
        let mut values = Moments::new();
        for _ in 0..RUNS {
            let out = pipage_round(&x, &inst, &mut rng)?;
            let set: Vec<usize> = (0..out.len()).filter(|&e| out[e]).collect();
            values.push(eval(&f, &set)?);
            for (h, &o) in hits.iter_mut().zip(&out) {
                *h += o as usize;
            }
        }
        for (e, &h) in hits.iter().enumerate() {
            marginal_checks += 1;
            let dev = (h as f64 / RUNS as f64 - x[e]).abs();
            let sigma = bernoulli_sigma(x[e], RUNS);
            if sigma > 0.0 {
                worst_z = worst_z.max(dev / sigma);
                chi2 += (dev / sigma).powi(2);
                dof += 1;
            }
            if dev > 3.0 * sigma + 1e-12 {
                marginal_misses += 1;
            }
        }
        if values.mean() < exact - 3.0 * values.std_error() {
            value_misses += 1;
        }
    }
    Ok(Verdict {
        pass: marginal_misses == 0 && degree_misses == 0 && value_misses == 0,
        detail: format!(
            "{marginal_misses}/{marginal_checks} marginals outside 3σ (largest {worst_z:.2}σ, Σz² = {chi2:.1} on {dof} dof), {degree_misses} degree violations, \
             {value_misses}/5 pipage means below F(x) − 3σ"
        ),
    })
}

fn unmatched_probability() -> Result<Verdict> {
    const TRIALS: usize = 20_000;
    let cases: [(&[f64], &[f64]); 3] = [
        (&[0.5, 1.0, 0.9], &[0.2, 0.3, 0.3]),
        (&[0.2, 0.4], &[0.2, 0.4]),
        (&[1.0, 0.8, 0.5, 0.7], &[0.3, 0.4, 0.1, 0.2]),
    ];
    let mut misses = 0;
    let mut checks = 0;
    let mut detail = String::new();
    for (c, (rates, x)) in cases.iter().enumerate() {
        let edges: Vec<(usize, usize)> = (0..rates.len()).map(|v| (0, v)).collect();
        let inst = Instance::from_lists(&[1], rates, &edges, 500, 1);
        let f = Objective::linear(vec![1.0; rates.len()])?;
        let sampler = ArrivalSampler::new(&inst);
        let mut unmatched = 0usize;
        let mut by_edge = vec![0usize; x.len()];
        for t in 0..TRIALS as u64 {
            let seq = sampler.sample(&mut rng_for(c as u64 * 1_000_000 + t, streams::ARRIVALS));
            let mut alg = MmpAlg::prepare(&inst, x, t)?;
            let (_, state) = run_trial(&inst, &f, &seq, &mut alg)?;
            match state.matched() {
                [] => unmatched += 1,
                [e] => by_edge[*e] += 1,
                _ => unreachable!("unit capacity"),
            }
        }
        let x_u: f64 = x.iter().sum();
        let p = (-x_u).exp();
        let freq = unmatched as f64 / TRIALS as f64;
        checks += 1;
        if (freq - p).abs() > 3.0 * bernoulli_sigma(p, TRIALS) {
            misses += 1;
        }
        let matched = TRIALS - unmatched;
        for (e, &k) in by_edge.iter().enumerate() {
            let share = x[e] / x_u;
            checks += 1;
            if (k as f64 / matched as f64 - share).abs() > 3.0 * bernoulli_sigma(share, matched) {
                misses += 1;
            }
        }
        let _ = write!(detail, " x_u={x_u}: unmatched {freq:.4} vs {p:.4};");
    }
    Ok(Verdict {
        pass: misses == 0,
        detail: format!("{misses}/{checks} outside 3σ;{detail}"),
    })
}

fn solver_exactness() -> Result<Verdict> {
    let mut rng = rng_for(9, 0);
    let mut mismatches = 0;
    let mut worst = 0.0f64;
    let mut unbounded = 0;
    for _ in 0..1000 {
        let prog = random_lp(&mut rng);
        let ours = lp::solve(&prog)?;
        match rational_simplex(&prog) {
            RationalOutcome::Unbounded => {
                unbounded += 1;
                mismatches += (ours.status != LpStatus::Unbounded) as usize;
            }
            RationalOutcome::Optimal(q) => {
                let reference = to_f64(&q);
                let rel = (ours.objective - reference).abs() / reference.abs().max(1.0);
                worst = worst.max(rel);
                if ours.status != LpStatus::Optimal || rel > 1e-9 {
                    mismatches += 1;
                }
            }
        }
    }
    Ok(Verdict {
        pass: mismatches == 0,
        detail: format!("{mismatches}/1000 mismatches ({unbounded} unbounded), worst relative error {worst:.2e}"),
    })
}

/// Completed ratings for `users × movies`: each user has a handful of
/// predicted (unobserved) entries; everything else is observed.
fn ratings_fixture(users: usize, movies: usize, seed: u64) -> (String, String) {
    let mut rng = rng_for(seed, 0);
    let mut ratings = String::from("user,movie,rating,observed\n");
    for u in 0..users {
        let k = rng.random_range(4..=8);
        let open: Vec<usize> = index::sample(&mut rng, movies, k).into_vec();
        for m in 0..movies {
            let r = rng.random_range(1..=5);
            let observed = !open.contains(&m) as u8;
            let _ = writeln!(ratings, "user{u},movie{m},{r},{observed}");
        }
    }
    let mut genres = String::new();
    for m in 0..movies {
        let k = rng.random_range(1..=3);
        for g in index::sample(&mut rng, 8, k) {
            let _ = writeln!(genres, "movie{m},genre{g}");
        }
    }
    (ratings, genres)
}

fn ratings_integral() -> Result<Verdict> {
    let (ratings, genres) = ratings_fixture(200, 120, 11);
    let problem = ingest_ratings(
        ratings.as_bytes(),
        genres.as_bytes(),
        RatingsParams {
            num_users: 200,
            num_movies: 100,
            seed: 11,
            integral_rates: true,
        },
    )?;
    let (inst, f) = (&problem.instance, &problem.objective);
    let x = solve_offline(f, inst, SolverKind::Lp, &GreedyConfig::default())?.x;
    let bench = compute_benchmark(BenchmarkKind::Lp, inst, f, Some(&x), 1)?;
    let cr = sim(AlgorithmKind::Cr, 500, 1, inst, f, &x, bench)?;
    let greedy = sim(AlgorithmKind::Greedy, 500, 1, inst, f, &x, bench)?;
    let gap = (cr.ratio - greedy.ratio) / combined_se(&cr, &greedy);
    Ok(Verdict {
        pass: gap >= -3.0,
        detail: format!(
            "{} edges: cr {:.4} greedy {:.4} ({gap:+.1} se)",
            inst.num_edges(),
            cr.ratio,
            greedy.ratio
        ),
    })
}

type Criterion = (&'static str, Box<dyn Fn() -> Result<Verdict>>);

fn main() {
    let criteria: Vec<Criterion> = vec![
        ("1 perfect-matching tightness", Box::new(perfect_matching_tightness)),
        (
            "2 CR bound, integral rates",
            Box::new(|| {
                let bound = 0.5 * (1.0 - (-0.5f64).exp()) * (1.0 - 1.0 / E);
                bound_suite(AlgorithmKind::Cr, true, bound, 4000, 2000)
            }),
        ),
        (
            "3 MMP bound, fractional rates",
            Box::new(|| bound_suite(AlgorithmKind::Mmp, false, (1.0 - 1.0 / E).powi(2), 2000, 3000)),
        ),
        ("4 continuous greedy guarantee", Box::new(greedy_guarantee)),
        ("5 budget-additive sweep", Box::new(budget_sweep)),
        ("6 coverage sweep", Box::new(coverage_sweep)),
        ("7 rounding suite", Box::new(rounding_suite)),
        ("8 unmatched probability", Box::new(unmatched_probability)),
        ("9 solver exactness", Box::new(solver_exactness)),
        ("ratings fixture, CR vs greedy", Box::new(ratings_integral)),
    ];
    let mut failed = 0;
    for (name, check) in &criteria {
        let start = Instant::now();
        let verdict = check().unwrap_or_else(|e| Verdict {
            pass: false,
            detail: format!("error: {e}"),
        });
        failed += !verdict.pass as usize;
        println!(
            "{} {name}: {} [{:.1}s]",
            if verdict.pass { "PASS" } else { "FAIL" },
            verdict.detail,
            start.elapsed().as_secs_f64()
        );
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
