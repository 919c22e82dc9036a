//! The offline phase: continuous greedy over the matching polytope, exact
//! LP solutions for special-case objectives, pipage rounding and hindsight
//! optima for small instances.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rayon::prelude::*;

use crate::instance::{ArrivalSampler, ArrivalSequence};
use crate::lp::{self, build_matching_lmo, build_special_lp, LpStatus};
use crate::stats::{Estimate, Moments};
use crate::submodular::{gradient_estimate, multilinear_value, Objective};
use crate::{rng_for, streams, Error, Instance, Result};

pub const DEFAULT_STEPS: usize = 100;
pub const DEFAULT_GRAD_SAMPLES: usize = 100;
/// Scale applied to the final point so sampling probabilities stay below one.
const SHRINK: f64 = 1.0 - 1e-9;
/// Largest branch-and-bound search space accepted by [`hindsight_optimal`].
pub const HINDSIGHT_LIMIT: f64 = 1e7;
/// Largest state count accepted by exact [`expected_opt`].
pub const EXACT_OPT_LIMIT: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SolverKind {
    #[default]
    ContinuousGreedy,
    /// Exact epigraph LP (special-case objectives only).
    Lp,
}

impl fmt::Display for SolverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SolverKind::ContinuousGreedy => "cg",
            SolverKind::Lp => "lp",
        })
    }
}

impl FromStr for SolverKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cg" | "continuous-greedy" | "continuous_greedy" => Ok(SolverKind::ContinuousGreedy),
            "lp" => Ok(SolverKind::Lp),
            other => Err(Error::InvalidArgument(format!("unknown solver {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Diagnostics {
    pub solver: SolverKind,
    pub steps: usize,
    pub grad_samples: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OfflineSolution {
    pub x: Vec<f64>,
    /// `F(x)` for continuous greedy, the LP optimum for the LP solver.
    pub value: f64,
    pub diagnostics: Diagnostics,
    /// Estimated `F` at the start of every step, then at the final point.
    pub trajectory: Vec<Estimate>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GreedyConfig {
    pub steps: usize,
    pub grad_samples: usize,
    pub seed: u64,
}

impl Default for GreedyConfig {
    fn default() -> Self {
        GreedyConfig {
            steps: DEFAULT_STEPS,
            grad_samples: DEFAULT_GRAD_SAMPLES,
            seed: 0,
        }
    }
}

/// Pulls `x` back into the matching polytope: scales by `1 − 1e−9`, rescales
/// every row that still exceeds its right-hand side, then clips to `[0, 1]`.
pub fn restore_feasibility(instance: &Instance, x: &mut [f64]) {
    for xe in x.iter_mut() {
        *xe = (*xe * SHRINK).clamp(0.0, 1.0);
    }
    let eta = instance.eta() as f64;
    let rows = (0..instance.num_online())
        .map(|v| (instance.edges_at_v(v), eta * instance.rate(v)))
        .chain((0..instance.num_offline()).map(|u| (instance.edges_at_u(u), instance.capacity(u) as f64)));
    for (edges, rhs) in rows {
        let total: f64 = edges.iter().map(|&e| x[e]).sum();
        if total > rhs {
            let scale = rhs / total * SHRINK;
            for &e in edges {
                x[e] *= scale;
            }
        }
    }
}

/// Continuous greedy: `steps` moves of size `1/steps` towards the LMO
/// solution for a sampled gradient of `F`.
pub fn continuous_greedy(f: &Objective, instance: &Instance, cfg: &GreedyConfig) -> Result<OfflineSolution> {
    f.check_compatible(instance)?;
    if cfg.steps == 0 || cfg.grad_samples == 0 {
        return Err(Error::InvalidArgument("steps and grad_samples must be positive".into()));
    }
    let mut rng = rng_for(cfg.seed, streams::OFFLINE);
    let m = instance.num_edges();
    let mut x = vec![0.0; m];
    let mut trajectory = Vec::with_capacity(cfg.steps + 1);
    let delta = 1.0 / cfg.steps as f64;
    for _ in 0..cfg.steps {
        let batch = gradient_estimate(f, &x, cfg.grad_samples, &mut rng)?;
        trajectory.push(batch.value);
        let sol = lp::solve(&build_matching_lmo(instance, &batch.gradient))?;
        if sol.status != LpStatus::Optimal {
            return Err(Error::Lp(format!("linear maximization step ended {:?}", sol.status)));
        }
        for (xe, d) in x.iter_mut().zip(&sol.x) {
            *xe = (*xe + delta * d).min(1.0);
        }
    }
    restore_feasibility(instance, &mut x);
    let mut est_rng = rng_for(cfg.seed, streams::ESTIMATION);
    let value = multilinear_value(f, &x, 10 * cfg.grad_samples, &mut est_rng)?;
    trajectory.push(value);
    Ok(OfflineSolution {
        x,
        value: value.estimate,
        diagnostics: Diagnostics {
            solver: SolverKind::ContinuousGreedy,
            steps: cfg.steps,
            grad_samples: cfg.grad_samples,
            seed: cfg.seed,
        },
        trajectory,
    })
}

/// Optimal solution of the epigraph LP; `value` is the LP optimum, which
/// upper-bounds `E[OPT]`.
pub fn solve_special_lp(f: &Objective, instance: &Instance) -> Result<OfflineSolution> {
    let special = build_special_lp(instance, f)?;
    let sol = lp::solve(&special.lp)?;
    if sol.status != LpStatus::Optimal {
        return Err(Error::Lp(format!("offline LP ended {:?}", sol.status)));
    }
    let mut x = special.edge_values(&sol.x).to_vec();
    restore_feasibility(instance, &mut x);
    Ok(OfflineSolution {
        x,
        value: sol.objective,
        diagnostics: Diagnostics {
            solver: SolverKind::Lp,
            ..Diagnostics::default()
        },
        trajectory: Vec::new(),
    })
}

/// Runs the requested offline solver.
pub fn solve_offline(
    f: &Objective,
    instance: &Instance,
    solver: SolverKind,
    cfg: &GreedyConfig,
) -> Result<OfflineSolution> {
    instance.ensure_valid()?;
    match solver {
        SolverKind::ContinuousGreedy => continuous_greedy(f, instance, cfg),
        SolverKind::Lp => solve_special_lp(f, instance),
    }
}

const INTEGRAL_TOL: f64 = 1e-12;

fn snap(v: f64) -> f64 {
    if v <= INTEGRAL_TOL {
        0.0
    } else if v >= 1.0 - INTEGRAL_TOL {
        1.0
    } else {
        v
    }
}

/// Finds a cycle or maximal path of fractional edges. Nodes are
/// `0..|U|` for offline vertices and `|U|..` for online types.
fn fractional_walk(instance: &Instance, adj: &[Vec<usize>], x: &[f64], start: usize) -> Vec<usize> {
    let nu = instance.num_offline();
    let other = |e: usize, node: usize| {
        let edge = instance.edge(e);
        if node < nu {
            nu + edge.v
        } else {
            edge.u
        }
    };
    let mut visited_at = std::collections::HashMap::new();
    let mut path: Vec<usize> = Vec::new();
    let mut node = start;
    visited_at.insert(node, 0usize);
    loop {
        let came_from = path.last().copied();
        let next = adj[node]
            .iter()
            .copied()
            .find(|&e| Some(e) != came_from && x[e] > 0.0 && x[e] < 1.0);
        let Some(e) = next else {
            return path;
        };
        path.push(e);
        node = other(e, node);
        if let Some(&pos) = visited_at.get(&node) {
            return path.split_off(pos);
        }
        visited_at.insert(node, path.len());
    }
}

/// Randomized pipage (dependent) rounding of a fractional matching.
///
/// Each round alternately raises and lowers the edges of a fractional cycle
/// or maximal path by the largest amount that keeps them in `[0, 1]`, in the
/// direction chosen so every marginal is preserved. Degrees at interior
/// vertices are unchanged; every vertex degree ends at the floor or ceiling
/// of its fractional degree.
pub fn pipage_round<R: Rng + ?Sized>(x: &[f64], instance: &Instance, rng: &mut R) -> Result<Vec<bool>> {
    if x.len() != instance.num_edges() {
        return Err(Error::InfeasibleSolution(format!(
            "{} values for {} edges",
            x.len(),
            instance.num_edges()
        )));
    }
    if let Some(e) = x.iter().position(|v| !(0.0..=1.0).contains(v)) {
        return Err(Error::InfeasibleSolution(format!("x[{e}] = {} outside [0, 1]", x[e])));
    }
    let nu = instance.num_offline();
    let mut x: Vec<f64> = x.iter().map(|&v| snap(v)).collect();
    let mut adj: Vec<Vec<usize>> = (0..nu)
        .map(|u| instance.edges_at_u(u).to_vec())
        .chain((0..instance.num_online()).map(|v| instance.edges_at_v(v).to_vec()))
        .collect();
    let is_frac = |v: f64| v > 0.0 && v < 1.0;
    loop {
        for list in adj.iter_mut() {
            list.retain(|&e| is_frac(x[e]));
        }
        let Some(first) = (0..x.len()).find(|&e| is_frac(x[e])) else {
            break;
        };
        // Start from a path end when one exists so walks are maximal.
        let start = (0..adj.len())
            .find(|&n| adj[n].len() == 1)
            .unwrap_or(instance.edge(first).u);
        let walk = fractional_walk(instance, &adj, &x, start);
        debug_assert!(!walk.is_empty());
        let (mut up, mut down) = (f64::INFINITY, f64::INFINITY);
        for (i, &e) in walk.iter().enumerate() {
            if i % 2 == 0 {
                up = up.min(1.0 - x[e]);
                down = down.min(x[e]);
            } else {
                up = up.min(x[e]);
                down = down.min(1.0 - x[e]);
            }
        }
        let shift = if rng.random::<f64>() * (up + down) < down {
            up
        } else {
            -down
        };
        for (i, &e) in walk.iter().enumerate() {
            let s = if i % 2 == 0 { shift } else { -shift };
            x[e] = snap(x[e] + s);
        }
    }
    Ok(x.iter().map(|&v| v == 1.0).collect())
}

/// Best matching in hindsight.
#[derive(Debug, Clone, PartialEq)]
pub struct Hindsight {
    pub value: f64,
    /// Edges matched at every slot of the sequence.
    pub assignment: Vec<Vec<usize>>,
}

/// Exact optimum over per-edge multiplicities for the given arrival counts.
struct CountSearch<'a> {
    f: &'a Objective,
    instance: &'a Instance,
    edges: Vec<usize>,
    max_mult: Vec<u32>,
    rem_u: Vec<u32>,
    rem_v: Vec<u32>,
    counts: &'a [u32],
    current: Vec<u32>,
    best: Vec<u32>,
    best_value: f64,
}

impl CountSearch<'_> {
    fn feasible_mult(&self, i: usize) -> u32 {
        let e = self.instance.edge(self.edges[i]);
        self.max_mult[i].min(self.rem_u[e.u]).min(self.rem_v[e.v])
    }

    fn bound(&self, i: usize, state: &crate::submodular::ObjectiveState<'_>) -> f64 {
        let mut b = state.value();
        for j in i..self.edges.len() {
            let k = self.feasible_mult(j);
            if k > 0 {
                b += k as f64 * state.gain(self.edges[j]);
            }
        }
        if let Objective::BudgetAdditive { budget, .. } = self.f {
            b = b.min(*budget);
        }
        b
    }

    fn dfs(&mut self, i: usize, state: &mut crate::submodular::ObjectiveState<'_>) {
        let value = state.value();
        if value > self.best_value + 1e-12 {
            self.best_value = value;
            self.best.clone_from(&self.current);
        }
        if i == self.edges.len() || self.bound(i, state) <= self.best_value + 1e-12 {
            return;
        }
        let e = self.edges[i];
        let (u, v) = (self.instance.edge(e).u, self.instance.edge(e).v);
        let top = self.feasible_mult(i);
        for _ in 0..top {
            state.add(e);
        }
        for k in (0..=top).rev() {
            self.current[i] = k;
            self.rem_u[u] -= k;
            self.rem_v[v] -= k;
            self.dfs(i + 1, state);
            self.rem_u[u] += k;
            self.rem_v[v] += k;
            if k > 0 {
                state.remove(e);
            }
        }
        self.current[i] = 0;
    }
}

/// Size of the multiplicity search space for the given counts.
fn search_space(instance: &Instance, counts: &[u32]) -> f64 {
    instance
        .edges()
        .iter()
        .filter(|e| counts[e.v] > 0)
        .map(|e| (counts[e.v].min(instance.capacity(e.u)) + 1) as f64)
        .product()
}

/// Optimal multiplicity per edge when type `v` arrives `counts[v]` times.
/// Every arrival takes at most `η` distinct offline vertices, so an edge is
/// used at most `counts[v]` times and `v` at most `η·counts[v]` times.
pub fn optimum_for_counts(instance: &Instance, f: &Objective, counts: &[u32]) -> Result<(f64, Vec<u32>)> {
    f.check_compatible(instance)?;
    let size = search_space(instance, counts);
    if size > HINDSIGHT_LIMIT {
        return Err(Error::SearchSpaceTooLarge {
            size,
            limit: HINDSIGHT_LIMIT,
        });
    }
    let edges: Vec<usize> = (0..instance.num_edges())
        .filter(|&e| counts[instance.edge(e).v] > 0)
        .collect();
    let max_mult = edges
        .iter()
        .map(|&e| {
            let edge = instance.edge(e);
            counts[edge.v].min(instance.capacity(edge.u))
        })
        .collect();
    let mut search = CountSearch {
        f,
        instance,
        current: vec![0; edges.len()],
        best: vec![0; edges.len()],
        edges,
        max_mult,
        rem_u: (0..instance.num_offline()).map(|u| instance.capacity(u)).collect(),
        rem_v: counts.iter().map(|&k| k.saturating_mul(instance.eta())).collect(),
        counts,
        best_value: 0.0,
    };
    let mut state = f.state();
    search.dfs(0, &mut state);
    debug_assert_eq!(search.counts.len(), instance.num_online());
    let mut mult = vec![0u32; instance.num_edges()];
    for (i, &e) in search.edges.iter().enumerate() {
        mult[e] = search.best[i];
    }
    Ok((search.best_value, mult))
}

/// Best hindsight matching for a realised sequence.
pub fn hindsight_optimal(instance: &Instance, seq: &ArrivalSequence, f: &Objective) -> Result<Hindsight> {
    let counts = seq.counts(instance.num_online());
    let (value, mult) = optimum_for_counts(instance, f, &counts)?;
    let mut assignment = vec![Vec::new(); seq.len()];
    for v in 0..instance.num_online() {
        let slots = seq.arrival_slots(v);
        if slots.is_empty() {
            continue;
        }
        // Deal copies round-robin so no arrival gets the same u twice.
        let mut next = 0usize;
        for &e in instance.edges_at_v(v) {
            for _ in 0..mult[e] {
                assignment[slots[next % slots.len()]].push(e);
                next += 1;
            }
        }
    }
    Ok(Hindsight { value, assignment })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OptMode {
    /// Exact expectation over all arrival-count vectors.
    Exact,
    /// Average of hindsight optima over `trials` sampled sequences; trial
    /// `t` uses seed `seed + t`.
    MonteCarlo { trials: usize, seed: u64 },
}

fn ln_factorials(n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n + 1];
    for k in 1..=n {
        out[k] = out[k - 1] + (k as f64).ln();
    }
    out
}

/// Capped count vectors with their probabilities.
type CountDistribution = Vec<(Vec<u32>, f64)>;

/// Distribution of capped arrival-count vectors. Counts of type `v` are
/// capped at the total capacity around `v` (further arrivals cannot be
/// matched); types without neighbours are folded into "no arrival".
fn capped_count_distribution(instance: &Instance) -> Result<(Vec<usize>, CountDistribution)> {
    let horizon = instance.horizon() as usize;
    let relevant: Vec<usize> = (0..instance.num_online())
        .filter(|&v| !instance.edges_at_v(v).is_empty())
        .collect();
    let caps: Vec<usize> = relevant
        .iter()
        .map(|&v| {
            let around: u64 = instance
                .edges_at_v(v)
                .iter()
                .map(|&e| instance.capacity(instance.edge(e).u) as u64)
                .sum();
            (around as usize).min(horizon)
        })
        .collect();
    let vectors: f64 = caps.iter().map(|&c| (c + 1) as f64).product();
    let states = vectors * (horizon + 1) as f64;
    if states > EXACT_OPT_LIMIT * 10.0 || vectors > EXACT_OPT_LIMIT {
        return Err(Error::SearchSpaceTooLarge {
            size: vectors,
            limit: EXACT_OPT_LIMIT,
        });
    }
    let lf = ln_factorials(horizon);
    let probs: Vec<f64> = relevant.iter().map(|&v| instance.arrival_probability(v)).collect();
    let mut tail_mass = 1.0f64;
    // (capped prefix, distribution over remaining slots)
    let mut layer: Vec<(Vec<u32>, Vec<f64>)> = vec![(Vec::new(), {
        let mut d = vec![0.0; horizon + 1];
        d[horizon] = 1.0;
        d
    })];
    for (i, &p) in probs.iter().enumerate() {
        let q = if tail_mass > 0.0 {
            (p / tail_mass).clamp(0.0, 1.0)
        } else {
            0.0
        };
        tail_mass -= p;
        let mut next: std::collections::BTreeMap<Vec<u32>, Vec<f64>> = std::collections::BTreeMap::new();
        for (prefix, dist) in &layer {
            for (rem, &pr) in dist.iter().enumerate() {
                if pr == 0.0 {
                    continue;
                }
                for c in 0..=rem {
                    let binom = if q == 0.0 {
                        if c == 0 {
                            1.0
                        } else {
                            0.0
                        }
                    } else if q == 1.0 {
                        if c == rem {
                            1.0
                        } else {
                            0.0
                        }
                    } else {
                        (lf[rem] - lf[c] - lf[rem - c] + c as f64 * q.ln() + (rem - c) as f64 * (1.0 - q).ln()).exp()
                    };
                    if binom == 0.0 {
                        continue;
                    }
                    let mut key = prefix.clone();
                    key.push(c.min(caps[i]) as u32);
                    next.entry(key).or_insert_with(|| vec![0.0; horizon + 1])[rem - c] += pr * binom;
                }
            }
        }
        layer = next.into_iter().collect();
    }
    let out = layer
        .into_iter()
        .map(|(k, dist)| (k, dist.iter().sum::<f64>()))
        .filter(|(_, p)| *p > 0.0)
        .collect();
    Ok((relevant, out))
}

/// `E[OPT]`, the expected hindsight optimum over the arrival distribution.
pub fn expected_opt(instance: &Instance, f: &Objective, mode: OptMode) -> Result<Estimate> {
    f.check_compatible(instance)?;
    match mode {
        OptMode::Exact => {
            let (relevant, dist) = capped_count_distribution(instance)?;
            let values = dist
                .par_iter()
                .map(|(capped, p)| {
                    let mut counts = vec![0u32; instance.num_online()];
                    for (&v, &k) in relevant.iter().zip(capped) {
                        counts[v] = k;
                    }
                    optimum_for_counts(instance, f, &counts).map(|(val, _)| p * val)
                })
                .collect::<Result<Vec<f64>>>()?;
            Ok(Estimate::exact(values.iter().sum()))
        }
        OptMode::MonteCarlo { trials, seed } => {
            if trials == 0 {
                return Err(Error::InvalidArgument("trials must be at least 1".into()));
            }
            let sampler = ArrivalSampler::new(instance);
            let values = (0..trials as u64)
                .into_par_iter()
                .map(|t| {
                    let mut rng = rng_for(seed.wrapping_add(t), streams::ARRIVALS);
                    let seq = sampler.sample(&mut rng);
                    optimum_for_counts(instance, f, &seq.counts(instance.num_online())).map(|(v, _)| v)
                })
                .collect::<Result<Vec<f64>>>()?;
            Ok(values.into_iter().collect::<Moments>().estimate())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lp::check_matching_feasible;
    use crate::submodular::{eval, multilinear_exact};

    fn star(weights: &[f64], rate: f64, horizon: u32) -> (Instance, Objective) {
        let edges: Vec<(usize, usize)> = (0..weights.len()).map(|u| (u, 0)).collect();
        let inst = Instance::from_lists(&vec![1; weights.len()], &[rate], &edges, horizon, 1);
        (inst, Objective::linear(weights.to_vec()).unwrap())
    }

    #[test]
    fn hindsight_examples() {
        let (inst, f) = star(&[2.0, 3.0], 1.0, 1);
        let empty = ArrivalSequence { slots: vec![None] };
        assert_eq!(hindsight_optimal(&inst, &empty, &f).unwrap().value, 0.0);
        let one = ArrivalSequence { slots: vec![Some(0)] };
        let h = hindsight_optimal(&inst, &one, &f).unwrap();
        assert_eq!(h.value, 3.0);
        assert_eq!(h.assignment, vec![vec![1]]);

        let inst = Instance::from_lists(&[1], &[1.0], &[(0, 0)], 2, 1);
        let f = Objective::linear(vec![1.0]).unwrap();
        let two = ArrivalSequence {
            slots: vec![Some(0), Some(0)],
        };
        assert_eq!(hindsight_optimal(&inst, &two, &f).unwrap().value, 1.0);
    }

    #[test]
    fn hindsight_respects_eta_and_capacity() {
        // v arrives twice; u0 has capacity 2, u1 capacity 1; eta 2.
        let inst = Instance::from_lists(&[2, 1], &[1.0], &[(0, 0), (1, 0)], 2, 2);
        let f = Objective::linear(vec![1.0, 5.0]).unwrap();
        let seq = ArrivalSequence {
            slots: vec![Some(0), Some(0)],
        };
        let h = hindsight_optimal(&inst, &seq, &f).unwrap();
        assert_eq!(h.value, 7.0);
        for slot in &h.assignment {
            assert!(slot.len() <= 2);
            let mut s = slot.clone();
            s.dedup();
            assert_eq!(s.len(), slot.len());
        }
    }

    #[test]
    fn expected_opt_examples() {
        let (inst, f) = star(&[2.0, 3.0], 1.0, 1);
        assert!((expected_opt(&inst, &f, OptMode::Exact).unwrap().estimate - 3.0).abs() < 1e-12);

        let inst = Instance::from_lists(&[1], &[1.0], &[(0, 0)], 2, 1);
        let f = Objective::linear(vec![1.0]).unwrap();
        let exact = expected_opt(&inst, &f, OptMode::Exact).unwrap().estimate;
        assert!((exact - 0.75).abs() < 1e-12);
        let mc = expected_opt(
            &inst,
            &f,
            OptMode::MonteCarlo {
                trials: 100_000,
                seed: 5,
            },
        )
        .unwrap();
        assert!((mc.estimate - 0.75).abs() <= 3.0 * mc.std_error);
    }

    #[test]
    fn exact_opt_matches_sequence_enumeration() {
        let inst = Instance::from_lists(&[1, 2], &[0.5, 1.0, 0.7], &[(0, 0), (1, 0), (0, 1), (1, 2)], 3, 1);
        let f = Objective::coverage(vec![vec![0, 1], vec![1], vec![2], vec![0, 2]], vec![1.0, 0.5, 2.0]).unwrap();
        let exact = expected_opt(&inst, &f, OptMode::Exact).unwrap().estimate;
        let mut brute = 0.0;
        let outcomes = [None, Some(0), Some(1), Some(2)];
        let prob = |s: Option<usize>| match s {
            None => 1.0 - inst.total_rate() / 3.0,
            Some(v) => inst.arrival_probability(v),
        };
        for &a in &outcomes {
            for &b in &outcomes {
                for &c in &outcomes {
                    let seq = ArrivalSequence { slots: vec![a, b, c] };
                    let p = prob(a) * prob(b) * prob(c);
                    brute += p * hindsight_optimal(&inst, &seq, &f).unwrap().value;
                }
            }
        }
        assert!((exact - brute).abs() < 1e-12, "{exact} vs {brute}");
    }

    #[test]
    fn oversized_search_is_rejected() {
        let edges: Vec<(usize, usize)> = (0..30).map(|u| (u, 0)).collect();
        let inst = Instance::from_lists(&[1; 30], &[1.0], &edges, 30, 1);
        let f = Objective::linear(vec![1.0; 30]).unwrap();
        let mut counts = [0];
        counts[0] = 30;
        assert!(matches!(
            optimum_for_counts(&inst, &f, &counts),
            Err(Error::SearchSpaceTooLarge { .. })
        ));
    }

    #[test]
    fn continuous_greedy_linear_matches_lp() {
        let inst = Instance::from_lists(&[1, 1], &[0.5, 1.0], &[(0, 0), (1, 0), (1, 1)], 2, 1);
        let f = Objective::linear(vec![2.0, 1.0, 3.0]).unwrap();
        let cg = continuous_greedy(
            &f,
            &inst,
            &GreedyConfig {
                steps: 20,
                grad_samples: 5,
                seed: 1,
            },
        )
        .unwrap();
        let lp = solve_special_lp(&f, &inst).unwrap();
        assert!((cg.value - lp.value).abs() < 1e-6);
        check_matching_feasible(&inst, &cg.x, 1e-9).unwrap();
    }

    #[test]
    fn single_step_is_one_lmo_solution() {
        let (inst, f) = star(&[1.0, 4.0], 1.0, 1);
        let cg = continuous_greedy(
            &f,
            &inst,
            &GreedyConfig {
                steps: 1,
                grad_samples: 1,
                seed: 0,
            },
        )
        .unwrap();
        assert!((cg.x[1] - 1.0).abs() < 1e-8 && cg.x[0] == 0.0);
    }

    #[test]
    fn greedy_is_deterministic() {
        let inst = Instance::from_lists(&[1, 1], &[1.0, 1.0], &[(0, 0), (1, 0), (0, 1)], 2, 1);
        let f = Objective::coverage(vec![vec![0], vec![0, 1], vec![1]], vec![1.0, 1.0]).unwrap();
        let cfg = GreedyConfig {
            steps: 10,
            grad_samples: 7,
            seed: 3,
        };
        assert_eq!(
            continuous_greedy(&f, &inst, &cfg).unwrap(),
            continuous_greedy(&f, &inst, &cfg).unwrap()
        );
    }

    #[test]
    fn pipage_fixed_point_and_star() {
        let inst = Instance::from_lists(&[1], &[1.0, 1.0], &[(0, 0), (0, 1)], 2, 1);
        let mut rng = rng_for(1, 0);
        assert_eq!(pipage_round(&[1.0, 0.0], &inst, &mut rng).unwrap(), vec![true, false]);
        let mut first = 0;
        let runs = 10_000;
        for _ in 0..runs {
            let r = pipage_round(&[0.5, 0.5], &inst, &mut rng).unwrap();
            assert_eq!(r.iter().filter(|b| **b).count(), 1);
            first += r[0] as usize;
        }
        let freq = first as f64 / runs as f64;
        assert!((freq - 0.5).abs() < 3.0 * (0.25 / runs as f64).sqrt());
    }

    #[test]
    fn pipage_on_a_cycle_keeps_degrees() {
        // 4-cycle u0-v0-u1-v1 at one half: a perfect matching every time.
        let inst = Instance::from_lists(&[1, 1], &[1.0, 1.0], &[(0, 0), (1, 0), (1, 1), (0, 1)], 2, 1);
        let x = [0.5; 4];
        let mut rng = rng_for(2, 0);
        for _ in 0..200 {
            let r = pipage_round(&x, &inst, &mut rng).unwrap();
            assert_eq!(r.iter().filter(|b| **b).count(), 2);
            assert!(r[0] == r[2] && r[1] == r[3] && r[0] != r[1]);
        }
    }

    #[test]
    fn pipage_value_not_below_extension() {
        let inst = Instance::from_lists(&[1, 1, 1], &[0.9, 0.8], &[(0, 0), (1, 0), (1, 1), (2, 1)], 2, 1);
        let f = Objective::coverage(vec![vec![0], vec![1], vec![1, 2], vec![2]], vec![1.0, 2.0, 1.0]).unwrap();
        let x = [0.4, 0.5, 0.3, 0.5];
        let target = multilinear_exact(&f, &x).unwrap();
        let mut rng = rng_for(3, 0);
        let mut m = Moments::new();
        for _ in 0..10_000 {
            let r = pipage_round(&x, &inst, &mut rng).unwrap();
            let set: Vec<usize> = (0..4).filter(|&e| r[e]).collect();
            m.push(eval(&f, &set).unwrap());
        }
        assert!(m.mean() >= target - 3.0 * m.std_error());
    }
}
