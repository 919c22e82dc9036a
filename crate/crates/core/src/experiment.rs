//! Sweeps over offline capacity `b` and per-arrival budget `η`.

use std::fmt::Write as _;

use crate::offline::{solve_offline, GreedyConfig, SolverKind};
use crate::online::{
    compute_benchmark, simulate, AlgorithmKind, AlgorithmOptions, BenchmarkKind, RunMetrics, SimConfig, CSV_HEADER,
    HISTOGRAM_BUCKETS,
};
use crate::{Error, Problem, Result};

/// Reference ratios printed at the top of every report.
pub const REFERENCE_LINES: [(&str, f64); 2] = [("mmp", 0.63), ("cr", 0.20)];

/// The `b` values swept by default.
pub const DEFAULT_B_VALUES: [u32; 6] = [1, 2, 3, 5, 10, 15];

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentPlan {
    pub algorithms: Vec<AlgorithmKind>,
    pub b_values: Vec<u32>,
    pub etas: Vec<u32>,
    pub trials: usize,
    pub seed: u64,
    pub benchmark: BenchmarkKind,
    pub workers: usize,
    pub solver: SolverKind,
    /// Steps and gradient samples for continuous greedy; its seed is ignored
    /// in favour of [`ExperimentPlan::seed`].
    pub greedy: GreedyConfig,
    pub options: AlgorithmOptions,
}

impl ExperimentPlan {
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::InvalidArgument("trials must be at least 1".into()));
        }
        if self.algorithms.is_empty() || self.b_values.is_empty() || self.etas.is_empty() {
            return Err(Error::InvalidArgument(
                "algorithms, b values and eta values must be non-empty".into(),
            ));
        }
        if self.b_values.contains(&0) || self.etas.contains(&0) {
            return Err(Error::InvalidArgument("b and eta values must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum CellOutcome {
    Done(RunMetrics),
    Failed {
        algorithm: AlgorithmKind,
        b: u32,
        eta: u32,
        message: String,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub cells: Vec<CellOutcome>,
}

impl ExperimentReport {
    pub fn metrics(&self) -> impl Iterator<Item = &RunMetrics> {
        self.cells.iter().filter_map(|c| match c {
            CellOutcome::Done(m) => Some(m),
            CellOutcome::Failed { .. } => None,
        })
    }

    /// CSV with one row per successful cell; reference ratios and failed
    /// cells appear as `#` comment lines.
    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        for (alg, r) in REFERENCE_LINES {
            let _ = writeln!(s, "# reference {alg} {r:.2}");
        }
        let _ = writeln!(s, "{CSV_HEADER}");
        for cell in &self.cells {
            match cell {
                CellOutcome::Done(m) => {
                    let _ = writeln!(s, "{}", m.csv_row());
                }
                CellOutcome::Failed {
                    algorithm,
                    b,
                    eta,
                    message,
                } => {
                    let _ = writeln!(s, "# failed {algorithm},{b},{eta}: {message}");
                }
            }
        }
        s
    }

    /// Per-user coverage histogram for coverage-type objectives, or `None`
    /// when no cell has one.
    pub fn histogram_csv(&self) -> Option<String> {
        let mut s = String::from("algorithm,b,eta,bucket_low,bucket_high,users\n");
        let mut any = false;
        for m in self.metrics() {
            let Some(h) = &m.coverage_histogram else {
                continue;
            };
            any = true;
            for (i, users) in h.iter().enumerate() {
                let lo = i * 100 / HISTOGRAM_BUCKETS;
                let hi = (i + 1) * 100 / HISTOGRAM_BUCKETS;
                let b = m.b.map_or_else(|| "mixed".into(), |b| b.to_string());
                let _ = writeln!(s, "{},{b},{},{lo},{hi},{users}", m.algorithm, m.eta);
            }
        }
        any.then_some(s)
    }
}

/// Runs every `(b, η, algorithm)` cell. The offline solution is recomputed
/// for each `(b, η)`; all cells share the plan seed, so every algorithm sees
/// the same arrival sequences. Failures are recorded and the sweep goes on.
pub fn run_experiment(plan: &ExperimentPlan, problem: &Problem) -> Result<ExperimentReport> {
    plan.validate()?;
    problem.instance.ensure_valid()?;
    problem.objective.check_compatible(&problem.instance)?;
    let f = &problem.objective;
    let mut cells = Vec::new();
    for &eta in &plan.etas {
        for &b in &plan.b_values {
            let instance = problem.instance.with_uniform_capacity(b).with_eta(eta);
            let greedy = GreedyConfig {
                seed: plan.seed,
                ..plan.greedy
            };
            let prepared = solve_offline(f, &instance, plan.solver, &greedy).and_then(|sol| {
                let bench = compute_benchmark(plan.benchmark, &instance, f, Some(&sol.x), plan.seed)?;
                Ok((sol, bench))
            });
            for &algorithm in &plan.algorithms {
                let outcome = prepared.as_ref().map_err(|e| e.to_string()).and_then(|(sol, bench)| {
                    let cfg = SimConfig {
                        algorithm,
                        trials: plan.trials,
                        seed: plan.seed,
                        workers: plan.workers,
                        options: plan.options,
                    };
                    simulate(&cfg, &instance, f, Some(&sol.x), *bench).map_err(|e| e.to_string())
                });
                cells.push(match outcome {
                    Ok(m) => CellOutcome::Done(m),
                    Err(message) => CellOutcome::Failed {
                        algorithm,
                        b,
                        eta,
                        message,
                    },
                });
            }
        }
    }
    Ok(ExperimentReport { cells })
}
