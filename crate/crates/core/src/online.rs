//! Online algorithms and the trial simulator.

use std::fmt;
use std::str::FromStr;

use rand::seq::index;
use rand::Rng;
use rayon::prelude::*;

use crate::instance::ArrivalSampler;
use crate::lp::{check_matching_feasible, FEASIBILITY_TOLERANCE};
use crate::offline::{expected_opt, solve_special_lp, OptMode};
use crate::rounding::{dependent_round_stars, SampledSupport};
use crate::stats::Moments;
use crate::submodular::{eval, multilinear_value, Objective, ObjectiveKind, ObjectiveState};
use crate::{rng_for, streams, ArrivalSequence, Error, Instance, Result, SimRng};

/// Availability and matched edges during one run.
#[derive(Debug, Clone, PartialEq)]
pub struct MatchState {
    remaining: Vec<u32>,
    matched: Vec<usize>,
    clock: usize,
}

impl MatchState {
    pub fn new(instance: &Instance) -> Self {
        MatchState {
            remaining: (0..instance.num_offline()).map(|u| instance.capacity(u)).collect(),
            matched: Vec::new(),
            clock: 0,
        }
    }

    pub fn remaining(&self, u: usize) -> u32 {
        self.remaining[u]
    }

    pub fn is_available(&self, u: usize) -> bool {
        self.remaining[u] > 0
    }

    /// Matched edges in commit order; an edge appears once per match.
    pub fn matched(&self) -> &[usize] {
        &self.matched
    }

    pub fn clock(&self) -> usize {
        self.clock
    }

    /// Irrevocably matches `edges` to the arrival of `v` in the current slot.
    pub fn commit(&mut self, instance: &Instance, v: usize, edges: &[usize]) -> Result<()> {
        if edges.len() > instance.eta() as usize {
            return Err(Error::InvalidDecision(format!(
                "{} edges for one arrival with eta = {}",
                edges.len(),
                instance.eta()
            )));
        }
        for (i, &e) in edges.iter().enumerate() {
            if e >= instance.num_edges() || instance.edge(e).v != v {
                return Err(Error::InvalidDecision(format!("edge {e} is not incident to type {v}")));
            }
            let u = instance.edge(e).u;
            if edges[..i].iter().any(|&p| instance.edge(p).u == u) {
                return Err(Error::InvalidDecision(format!("offline vertex {u} picked twice")));
            }
            if self.remaining[u] == 0 {
                return Err(Error::InvalidDecision(format!(
                    "offline vertex {u} has no capacity left"
                )));
            }
        }
        for &e in edges {
            self.remaining[instance.edge(e).u] -= 1;
            self.matched.push(e);
        }
        Ok(())
    }

    fn tick(&mut self) {
        self.clock += 1;
    }
}

/// An online policy for one run. Decisions are final once returned.
pub trait OnlineAlgorithm {
    /// Edges to match for an arrival of `v` at slot `t`: incident to `v`,
    /// at most `η`, distinct offline endpoints, each with capacity left.
    fn on_arrival(&mut self, v: usize, t: usize, state: &MatchState) -> Vec<usize>;
}

fn check_x_star(instance: &Instance, x_star: &[f64]) -> Result<()> {
    check_matching_feasible(instance, x_star, FEASIBILITY_TOLERANCE)
}

/// Samples edge `e` of `δ(v)` with probability `x*_e / (η·r_v)`, `η` times
/// per arrival, and keeps the draws whose offline vertex is still free.
pub struct MmpAlg<'a> {
    instance: &'a Instance,
    /// Per type: `(edge, cumulative probability)`.
    menus: Vec<Vec<(usize, f64)>>,
    rng: SimRng,
}

impl<'a> MmpAlg<'a> {
    pub fn prepare(instance: &'a Instance, x_star: &[f64], seed: u64) -> Result<Self> {
        check_x_star(instance, x_star)?;
        let eta = instance.eta() as f64;
        let menus = (0..instance.num_online())
            .map(|v| {
                let scale = eta * instance.rate(v);
                let mut acc = 0.0;
                instance
                    .edges_at_v(v)
                    .iter()
                    .filter(|&&e| x_star[e] > 0.0)
                    .map(|&e| {
                        acc += x_star[e] / scale;
                        (e, acc)
                    })
                    .collect()
            })
            .collect();
        Ok(MmpAlg {
            instance,
            menus,
            rng: rng_for(seed, streams::ALGORITHM),
        })
    }
}

impl OnlineAlgorithm for MmpAlg<'_> {
    fn on_arrival(&mut self, v: usize, _t: usize, state: &MatchState) -> Vec<usize> {
        let menu = &self.menus[v];
        let mut picks: Vec<usize> = Vec::new();
        for _ in 0..self.instance.eta() {
            let r: f64 = self.rng.random();
            let idx = menu.partition_point(|&(_, c)| c <= r);
            let Some(&(e, _)) = menu.get(idx) else {
                continue;
            };
            let u = self.instance.edge(e).u;
            if state.is_available(u) && !picks.iter().any(|&p| self.instance.edge(p).u == u) {
                picks.push(e);
            }
        }
        picks
    }
}

/// Contention-resolution algorithm: `X` and `Y` are drawn once per run; an
/// arrival of `v` picks a uniform edge of `E_X(v)` and matches it when its
/// `Y` bit is set and the offline vertex is free.
pub struct CrAlg<'a> {
    instance: &'a Instance,
    support: SampledSupport,
    rng: SimRng,
}

impl<'a> CrAlg<'a> {
    /// Fails on non-integral rates unless `allow_fractional` is set, in
    /// which case `X` is still sampled with probabilities `x*_e`.
    pub fn prepare(instance: &'a Instance, x_star: &[f64], seed: u64, allow_fractional: bool) -> Result<Self> {
        check_x_star(instance, x_star)?;
        if !allow_fractional && !instance.has_integral_rates() {
            return Err(Error::NonIntegralRates(
                "the contention-resolution algorithm needs r_v = 1 and |V| = T".into(),
            ));
        }
        let mut rng = rng_for(seed, streams::ALGORITHM);
        let support = SampledSupport::draw(x_star, instance, &mut rng);
        Ok(CrAlg { instance, support, rng })
    }

    pub fn support(&self) -> &SampledSupport {
        &self.support
    }
}

impl OnlineAlgorithm for CrAlg<'_> {
    fn on_arrival(&mut self, v: usize, _t: usize, state: &MatchState) -> Vec<usize> {
        let menu = &self.support.by_v[v];
        if menu.is_empty() {
            return Vec::new();
        }
        let k = (self.instance.eta() as usize).min(menu.len());
        index::sample(&mut self.rng, menu.len(), k)
            .into_iter()
            .map(|i| menu[i])
            .filter(|&e| self.support.y[e] && state.is_available(self.instance.edge(e).u))
            .collect()
    }
}

/// Picks up to `η` free neighbours by repeated argmax of the marginal gain;
/// ties go to the lowest offline index, and zero gains still match.
pub struct GreedyAlg<'a> {
    instance: &'a Instance,
    state: ObjectiveState<'a>,
}

impl<'a> GreedyAlg<'a> {
    pub fn prepare(instance: &'a Instance, f: &'a Objective) -> Result<Self> {
        f.check_compatible(instance)?;
        Ok(GreedyAlg {
            instance,
            state: f.state(),
        })
    }
}

impl OnlineAlgorithm for GreedyAlg<'_> {
    fn on_arrival(&mut self, v: usize, _t: usize, state: &MatchState) -> Vec<usize> {
        let mut picks: Vec<usize> = Vec::new();
        for _ in 0..self.instance.eta() {
            let mut best: Option<(usize, usize, f64)> = None;
            for &e in self.instance.edges_at_v(v) {
                let u = self.instance.edge(e).u;
                if !state.is_available(u) || picks.iter().any(|&p| self.instance.edge(p).u == u) {
                    continue;
                }
                let gain = self.state.gain(e);
                let better = match best {
                    None => true,
                    Some((_, bu, bg)) => gain > bg || (gain == bg && u < bu),
                };
                if better {
                    best = Some((e, u, gain));
                }
            }
            let Some((e, _, _)) = best else {
                break;
            };
            self.state.add(e);
            picks.push(e);
        }
        picks
    }
}

/// Dependent rounding at each star yields a semi-matching `M1`; an arrival
/// of `v` picks uniformly among its `M1` neighbours that are still free.
pub struct NegCrAlg<'a> {
    instance: &'a Instance,
    m1: Vec<bool>,
    rng: SimRng,
}

impl<'a> NegCrAlg<'a> {
    pub fn prepare(instance: &'a Instance, x_star: &[f64], seed: u64) -> Result<Self> {
        check_x_star(instance, x_star)?;
        let mut rng = rng_for(seed, streams::ALGORITHM);
        let m1 = dependent_round_stars(x_star, instance, &mut rng)?;
        Ok(NegCrAlg { instance, m1, rng })
    }

    pub fn semi_matching(&self) -> &[bool] {
        &self.m1
    }
}

impl OnlineAlgorithm for NegCrAlg<'_> {
    fn on_arrival(&mut self, v: usize, _t: usize, state: &MatchState) -> Vec<usize> {
        let menu: Vec<usize> = self
            .instance
            .edges_at_v(v)
            .iter()
            .copied()
            .filter(|&e| self.m1[e] && state.is_available(self.instance.edge(e).u))
            .collect();
        let k = (self.instance.eta() as usize).min(menu.len());
        if k == 0 {
            return Vec::new();
        }
        index::sample(&mut self.rng, menu.len(), k)
            .into_iter()
            .map(|i| menu[i])
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AlgorithmKind {
    Mmp,
    Cr,
    Greedy,
    NegCr,
}

impl AlgorithmKind {
    pub const ALL: [AlgorithmKind; 4] = [
        AlgorithmKind::Mmp,
        AlgorithmKind::Cr,
        AlgorithmKind::Greedy,
        AlgorithmKind::NegCr,
    ];

    pub fn name(self) -> &'static str {
        match self {
            AlgorithmKind::Mmp => "mmp",
            AlgorithmKind::Cr => "cr",
            AlgorithmKind::Greedy => "greedy",
            AlgorithmKind::NegCr => "neg-cr",
        }
    }

    pub fn needs_x_star(self) -> bool {
        self != AlgorithmKind::Greedy
    }
}

impl fmt::Display for AlgorithmKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AlgorithmKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "mmp" | "mmp-alg" => Ok(AlgorithmKind::Mmp),
            "cr" | "cr-alg" => Ok(AlgorithmKind::Cr),
            "greedy" => Ok(AlgorithmKind::Greedy),
            "neg-cr" | "negcr" => Ok(AlgorithmKind::NegCr),
            other => Err(Error::InvalidArgument(format!("unknown algorithm {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct AlgorithmOptions {
    /// Run the contention-resolution algorithm on non-integral rates.
    pub allow_fractional_cr: bool,
}

/// Builds a fresh algorithm for one run.
pub fn prepare<'a>(
    kind: AlgorithmKind,
    instance: &'a Instance,
    f: &'a Objective,
    x_star: Option<&[f64]>,
    seed: u64,
    opts: AlgorithmOptions,
) -> Result<Box<dyn OnlineAlgorithm + 'a>> {
    let need = || x_star.ok_or_else(|| Error::InvalidArgument(format!("algorithm {kind} needs an offline solution")));
    Ok(match kind {
        AlgorithmKind::Mmp => Box::new(MmpAlg::prepare(instance, need()?, seed)?),
        AlgorithmKind::Cr => Box::new(CrAlg::prepare(instance, need()?, seed, opts.allow_fractional_cr)?),
        AlgorithmKind::Greedy => Box::new(GreedyAlg::prepare(instance, f)?),
        AlgorithmKind::NegCr => Box::new(NegCrAlg::prepare(instance, need()?, seed)?),
    })
}

/// Replays `seq` through `alg`, committing every decision.
pub fn run_trial(
    instance: &Instance,
    f: &Objective,
    seq: &ArrivalSequence,
    alg: &mut dyn OnlineAlgorithm,
) -> Result<(f64, MatchState)> {
    let mut state = MatchState::new(instance);
    for (t, slot) in seq.slots.iter().enumerate() {
        if let Some(v) = *slot {
            let picks = alg.on_arrival(v, t, &state);
            state.commit(instance, v, &picks)?;
        }
        state.tick();
    }
    let value = eval(f, state.matched())?;
    Ok((value, state))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BenchmarkKind {
    /// Optimum of the epigraph LP, an upper bound on `E[OPT]`.
    Lp,
    /// Exact `E[OPT]` (tiny instances only).
    Brute,
    /// `F(x*)·e/(e−1)`, an upper bound on `E[OPT]` when `x*` carries the
    /// continuous-greedy guarantee.
    FStarScaled,
}

impl BenchmarkKind {
    pub fn name(self) -> &'static str {
        match self {
            BenchmarkKind::Lp => "lp",
            BenchmarkKind::Brute => "brute",
            BenchmarkKind::FStarScaled => "f_star_scaled",
        }
    }
}

impl fmt::Display for BenchmarkKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BenchmarkKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.replace('-', "_").as_str() {
            "lp" => Ok(BenchmarkKind::Lp),
            "brute" => Ok(BenchmarkKind::Brute),
            "f_star_scaled" => Ok(BenchmarkKind::FStarScaled),
            other => Err(Error::InvalidArgument(format!("unknown benchmark {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BenchmarkValue {
    pub kind: BenchmarkKind,
    pub value: f64,
}

/// Samples used to estimate `F(x*)` for the scaled benchmark when `m` is
/// too large for exact enumeration.
const F_STAR_SAMPLES: usize = 10_000;

pub fn compute_benchmark(
    kind: BenchmarkKind,
    instance: &Instance,
    f: &Objective,
    x_star: Option<&[f64]>,
    seed: u64,
) -> Result<BenchmarkValue> {
    let value = match kind {
        BenchmarkKind::Lp => solve_special_lp(f, instance)?.value,
        BenchmarkKind::Brute => match expected_opt(instance, f, OptMode::Exact) {
            Ok(e) => e.estimate,
            Err(Error::SearchSpaceTooLarge { .. }) => {
                return Err(Error::BenchmarkUnavailable(
                    "exact E[OPT] is too large to enumerate".into(),
                ))
            }
            Err(e) => return Err(e),
        },
        BenchmarkKind::FStarScaled => {
            let x = x_star
                .ok_or_else(|| Error::BenchmarkUnavailable("the scaled benchmark needs an offline solution".into()))?;
            let mut rng = rng_for(seed, streams::ESTIMATION);
            let e = std::f64::consts::E;
            multilinear_value(f, x, F_STAR_SAMPLES, &mut rng)?.estimate * e / (e - 1.0)
        }
    };
    Ok(BenchmarkValue { kind, value })
}

/// Per-user coverage buckets reported for coverage-type objectives.
pub const HISTOGRAM_BUCKETS: usize = 10;

#[derive(Debug, Clone, PartialEq)]
pub struct RunMetrics {
    pub algorithm: AlgorithmKind,
    pub objective: ObjectiveKind,
    /// Common offline capacity, if all capacities agree.
    pub b: Option<u32>,
    pub eta: u32,
    pub values: Vec<f64>,
    pub mean: f64,
    pub std: f64,
    pub std_error: f64,
    pub benchmark: BenchmarkValue,
    pub ratio: f64,
    /// Average number of arrived users per decile of covered weight.
    pub coverage_histogram: Option<Vec<f64>>,
}

pub const CSV_HEADER: &str = "algorithm,objective,b,eta,trials,mean,std_error,benchmark_kind,benchmark_value,ratio";

impl RunMetrics {
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{}",
            self.algorithm,
            self.objective,
            self.b.map_or_else(|| "mixed".to_string(), |b| b.to_string()),
            self.eta,
            self.values.len(),
            self.mean,
            self.std_error,
            self.benchmark.kind,
            self.benchmark.value,
            self.ratio
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SimConfig {
    pub algorithm: AlgorithmKind,
    pub trials: usize,
    pub seed: u64,
    /// Worker threads; zero uses the default pool.
    pub workers: usize,
    pub options: AlgorithmOptions,
}

fn uniform_capacity(instance: &Instance) -> Option<u32> {
    let first = instance.offline().first()?.capacity;
    instance.offline().iter().all(|u| u.capacity == first).then_some(first)
}

/// Share of each arrived user's reachable feature weight that its matched
/// edges cover, bucketed by decile.
fn coverage_buckets(instance: &Instance, f: &Objective, seq: &ArrivalSequence, matched: &[usize]) -> Option<Vec<f64>> {
    let cov = f.coverage_view()?;
    let w = cov.feature_weights();
    let mut by_v: Vec<Vec<usize>> = vec![Vec::new(); instance.num_online()];
    for &e in matched {
        by_v[instance.edge(e).v].push(e);
    }
    let mut hist = vec![0.0; HISTOGRAM_BUCKETS];
    let counts = seq.counts(instance.num_online());
    let mut feats: Vec<u32> = Vec::new();
    for v in (0..instance.num_online()).filter(|&v| counts[v] > 0) {
        let weight_of = |edges: &[usize], feats: &mut Vec<u32>| {
            feats.clear();
            for &e in edges {
                feats.extend_from_slice(&cov.edge_features()[e]);
            }
            feats.sort_unstable();
            feats.dedup();
            feats.iter().map(|&z| w[z as usize]).sum::<f64>()
        };
        let reachable = weight_of(instance.edges_at_v(v), &mut feats);
        if reachable <= 0.0 {
            continue;
        }
        let share = weight_of(&by_v[v], &mut feats) / reachable;
        let bucket = ((share * HISTOGRAM_BUCKETS as f64) as usize).min(HISTOGRAM_BUCKETS - 1);
        hist[bucket] += 1.0;
    }
    Some(hist)
}

/// Runs `cfg.trials` independent trials. Trial `t` draws its arrivals from
/// seed `cfg.seed + t` (arrival stream) and its algorithm randomness from the
/// same seed (algorithm stream), so every algorithm sees the same arrival
/// sequences and results do not depend on the worker count.
pub fn simulate(
    cfg: &SimConfig,
    instance: &Instance,
    f: &Objective,
    x_star: Option<&[f64]>,
    benchmark: BenchmarkValue,
) -> Result<RunMetrics> {
    if cfg.trials == 0 {
        return Err(Error::InvalidArgument("trials must be at least 1".into()));
    }
    instance.ensure_valid()?;
    f.check_compatible(instance)?;
    let sampler = ArrivalSampler::new(instance);
    // Fail fast on precondition errors before spawning trials.
    prepare(cfg.algorithm, instance, f, x_star, cfg.seed, cfg.options)?;
    let run = |t: u64| -> Result<(f64, Option<Vec<f64>>)> {
        let trial_seed = cfg.seed.wrapping_add(t);
        let seq = sampler.sample(&mut rng_for(trial_seed, streams::ARRIVALS));
        let mut alg = prepare(cfg.algorithm, instance, f, x_star, trial_seed, cfg.options)?;
        let (value, state) = run_trial(instance, f, &seq, alg.as_mut())?;
        Ok((value, coverage_buckets(instance, f, &seq, state.matched())))
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| Error::InvalidArgument(format!("cannot build worker pool: {e}")))?;
    let results = pool.install(|| {
        (0..cfg.trials as u64)
            .into_par_iter()
            .map(run)
            .collect::<Result<Vec<_>>>()
    })?;
    let values: Vec<f64> = results.iter().map(|(v, _)| *v).collect();
    let moments: Moments = values.iter().copied().collect();
    let coverage_histogram = f.coverage_view().map(|_| {
        let mut total = [0.0; HISTOGRAM_BUCKETS];
        for h in results.iter().filter_map(|(_, h)| h.as_ref()) {
            for (t, x) in total.iter_mut().zip(h) {
                *t += x;
            }
        }
        total.iter().map(|t| t / cfg.trials as f64).collect()
    });
    let ratio = if benchmark.value > 0.0 {
        moments.mean() / benchmark.value
    } else {
        f64::NAN
    };
    Ok(RunMetrics {
        algorithm: cfg.algorithm,
        objective: f.kind(),
        b: uniform_capacity(instance),
        eta: instance.eta(),
        mean: moments.mean(),
        std: moments.std_dev(),
        std_error: moments.std_error(),
        values,
        benchmark,
        ratio,
        coverage_histogram,
    })
}
