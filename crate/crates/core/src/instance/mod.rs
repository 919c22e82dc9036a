//! Bipartite instances, arrival sampling and instance generators.

mod ratings;
mod synthetic;

pub use ratings::{ingest_ratings, RatingsParams};
pub use synthetic::{generate_synthetic, Recipe, RecipeKind};

use std::collections::HashSet;
use std::fmt;

use rand::Rng;

use crate::submodular::Objective;
use crate::{Error, Result};

/// An instance together with the objective defined over its edges.
#[derive(Debug, Clone, PartialEq)]
pub struct Problem {
    pub instance: Instance,
    pub objective: Objective,
}

/// Relative slack allowed when checking `Σ r_v ≤ T`.
const RATE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct OfflineVertex {
    pub id: String,
    pub capacity: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OnlineType {
    pub id: String,
    /// Expected number of arrivals over the horizon, `T · p_v`.
    pub rate: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    pub id: String,
    /// Offline endpoint (index into [`Instance::offline`]).
    pub u: usize,
    /// Online endpoint (index into [`Instance::online`]).
    pub v: usize,
}

/// A bipartite graph between offline vertices `U` and online types `V`
/// together with the arrival model.
///
/// Instances are immutable once built. Construction never fails; call
/// [`Instance::validate`] to get the list of invariant violations.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    offline: Vec<OfflineVertex>,
    online: Vec<OnlineType>,
    edges: Vec<Edge>,
    horizon: u32,
    eta: u32,
    at_u: Vec<Vec<usize>>,
    at_v: Vec<Vec<usize>>,
}

/// A single invariant violation reported by [`Instance::validate`].
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    RatesExceedHorizon { total: f64, horizon: u32 },
    RateOutOfRange { v: usize, rate: f64 },
    ZeroCapacity { u: usize },
    ZeroHorizon,
    ZeroEta,
    DanglingEndpoint { edge: usize },
    DuplicateEdge { u: usize, v: usize },
    DuplicateId(String),
    MalformedId(String),
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::RatesExceedHorizon { total, horizon } => {
                write!(f, "rates exceed horizon: sum of rates {total} > T = {horizon}")
            }
            Violation::RateOutOfRange { v, rate } => {
                write!(f, "rate of online type {v} is {rate}, outside (0, 1]")
            }
            Violation::ZeroCapacity { u } => write!(f, "offline vertex {u} has zero capacity"),
            Violation::ZeroHorizon => write!(f, "horizon must be positive"),
            Violation::ZeroEta => write!(f, "eta must be positive"),
            Violation::DanglingEndpoint { edge } => {
                write!(f, "dangling endpoint: edge {edge} references a missing vertex")
            }
            Violation::DuplicateEdge { u, v } => write!(f, "duplicate edge ({u}, {v})"),
            Violation::DuplicateId(id) => write!(f, "duplicate id {id:?}"),
            Violation::MalformedId(id) => write!(f, "malformed id {id:?}"),
        }
    }
}

impl Instance {
    pub fn new(offline: Vec<OfflineVertex>, online: Vec<OnlineType>, edges: Vec<Edge>, horizon: u32, eta: u32) -> Self {
        let mut at_u = vec![Vec::new(); offline.len()];
        let mut at_v = vec![Vec::new(); online.len()];
        for (idx, e) in edges.iter().enumerate() {
            if e.u < offline.len() && e.v < online.len() {
                at_u[e.u].push(idx);
                at_v[e.v].push(idx);
            }
        }
        Instance {
            offline,
            online,
            edges,
            horizon,
            eta,
            at_u,
            at_v,
        }
    }

    /// Convenience constructor with generated ids (`u0`, `v0`, `e0`, ...).
    pub fn from_lists(capacities: &[u32], rates: &[f64], edges: &[(usize, usize)], horizon: u32, eta: u32) -> Self {
        let offline = capacities
            .iter()
            .enumerate()
            .map(|(i, &capacity)| OfflineVertex {
                id: format!("u{i}"),
                capacity,
            })
            .collect();
        let online = rates
            .iter()
            .enumerate()
            .map(|(i, &rate)| OnlineType {
                id: format!("v{i}"),
                rate,
            })
            .collect();
        let edges = edges
            .iter()
            .enumerate()
            .map(|(i, &(u, v))| Edge {
                id: format!("e{i}"),
                u,
                v,
            })
            .collect();
        Instance::new(offline, online, edges, horizon, eta)
    }

    pub fn offline(&self) -> &[OfflineVertex] {
        &self.offline
    }

    pub fn online(&self) -> &[OnlineType] {
        &self.online
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, e: usize) -> &Edge {
        &self.edges[e]
    }

    pub fn num_offline(&self) -> usize {
        self.offline.len()
    }

    pub fn num_online(&self) -> usize {
        self.online.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn horizon(&self) -> u32 {
        self.horizon
    }

    pub fn eta(&self) -> u32 {
        self.eta
    }

    pub fn capacity(&self, u: usize) -> u32 {
        self.offline[u].capacity
    }

    pub fn rate(&self, v: usize) -> f64 {
        self.online[v].rate
    }

    /// Per-slot arrival probability `p_v = r_v / T`.
    pub fn arrival_probability(&self, v: usize) -> f64 {
        self.online[v].rate / self.horizon as f64
    }

    pub fn edges_at_u(&self, u: usize) -> &[usize] {
        &self.at_u[u]
    }

    pub fn edges_at_v(&self, v: usize) -> &[usize] {
        &self.at_v[v]
    }

    pub fn total_rate(&self) -> f64 {
        self.online.iter().map(|t| t.rate).sum()
    }

    /// True when every type has rate 1 and `|V| = T`.
    pub fn has_integral_rates(&self) -> bool {
        self.online.len() == self.horizon as usize && self.online.iter().all(|t| (t.rate - 1.0).abs() <= 1e-12)
    }

    /// Same graph with every offline capacity set to `b`.
    pub fn with_uniform_capacity(&self, b: u32) -> Instance {
        let mut offline = self.offline.clone();
        for u in &mut offline {
            u.capacity = b;
        }
        Instance::new(offline, self.online.clone(), self.edges.clone(), self.horizon, self.eta)
    }

    pub fn with_eta(&self, eta: u32) -> Instance {
        let mut out = self.clone();
        out.eta = eta;
        out
    }

    /// Same graph with new rates and horizon.
    pub fn with_rates(&self, rates: &[f64], horizon: u32) -> Instance {
        assert_eq!(rates.len(), self.online.len(), "one rate per online type");
        let mut online = self.online.clone();
        for (t, &r) in online.iter_mut().zip(rates) {
            t.rate = r;
        }
        Instance::new(self.offline.clone(), online, self.edges.clone(), horizon, self.eta)
    }

    /// Returns every invariant violation; an empty list means the instance is valid.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        if self.horizon == 0 {
            out.push(Violation::ZeroHorizon);
        }
        if self.eta == 0 {
            out.push(Violation::ZeroEta);
        }
        for (u, vert) in self.offline.iter().enumerate() {
            if vert.capacity == 0 {
                out.push(Violation::ZeroCapacity { u });
            }
        }
        for (v, t) in self.online.iter().enumerate() {
            if !(t.rate > 0.0 && t.rate <= 1.0) {
                out.push(Violation::RateOutOfRange { v, rate: t.rate });
            }
        }
        let total = self.total_rate();
        let horizon = self.horizon as f64;
        if total > horizon * (1.0 + RATE_TOLERANCE) {
            out.push(Violation::RatesExceedHorizon {
                total,
                horizon: self.horizon,
            });
        }
        let mut pairs = HashSet::new();
        for (idx, e) in self.edges.iter().enumerate() {
            if e.u >= self.offline.len() || e.v >= self.online.len() {
                out.push(Violation::DanglingEndpoint { edge: idx });
            } else if !pairs.insert((e.u, e.v)) {
                out.push(Violation::DuplicateEdge { u: e.u, v: e.v });
            }
        }
        let ids = self
            .offline
            .iter()
            .map(|x| &x.id)
            .chain(self.online.iter().map(|x| &x.id));
        check_ids(ids, &mut out);
        check_ids(self.edges.iter().map(|e| &e.id), &mut out);
        out
    }

    /// Fails with [`Error::InvalidInstance`] listing all violations.
    pub fn ensure_valid(&self) -> Result<()> {
        let violations = self.validate();
        if violations.is_empty() {
            Ok(())
        } else {
            let msg = violations.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; ");
            Err(Error::InvalidInstance(msg))
        }
    }
}

fn check_ids<'a>(ids: impl Iterator<Item = &'a String>, out: &mut Vec<Violation>) {
    let mut seen = HashSet::new();
    for id in ids {
        if id.is_empty() || id.chars().any(char::is_whitespace) {
            out.push(Violation::MalformedId(id.clone()));
        }
        if !seen.insert(id.as_str()) {
            out.push(Violation::DuplicateId(id.clone()));
        }
    }
}

/// One realised arrival stream: `slots[t]` is the online type arriving in
/// slot `t`, or `None` when nobody arrives.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ArrivalSequence {
    pub slots: Vec<Option<usize>>,
}

impl ArrivalSequence {
    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    /// Number of arrivals of each online type.
    pub fn counts(&self, num_online: usize) -> Vec<u32> {
        let mut counts = vec![0u32; num_online];
        for v in self.slots.iter().flatten() {
            counts[*v] += 1;
        }
        counts
    }

    /// Indices of the slots where `v` arrived.
    pub fn arrival_slots(&self, v: usize) -> Vec<usize> {
        self.slots
            .iter()
            .enumerate()
            .filter(|(_, s)| **s == Some(v))
            .map(|(t, _)| t)
            .collect()
    }
}

/// Precomputed cumulative arrival distribution of an instance.
#[derive(Debug, Clone)]
pub struct ArrivalSampler {
    cumulative: Vec<f64>,
    horizon: usize,
}

impl ArrivalSampler {
    pub fn new(instance: &Instance) -> Self {
        let mut acc = 0.0;
        let cumulative = (0..instance.num_online())
            .map(|v| {
                acc += instance.arrival_probability(v);
                acc
            })
            .collect();
        ArrivalSampler {
            cumulative,
            horizon: instance.horizon() as usize,
        }
    }

    /// Draws the type arriving in one slot.
    pub fn sample_slot<R: Rng + ?Sized>(&self, rng: &mut R) -> Option<usize> {
        let u: f64 = rng.random();
        let idx = self.cumulative.partition_point(|&c| c <= u);
        (idx < self.cumulative.len()).then_some(idx)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> ArrivalSequence {
        ArrivalSequence {
            slots: (0..self.horizon).map(|_| self.sample_slot(rng)).collect(),
        }
    }
}

/// Samples a full arrival sequence, deterministically for a given seed.
pub fn sample_arrivals(instance: &Instance, seed: u64) -> ArrivalSequence {
    let mut rng = crate::rng_for(seed, crate::streams::ARRIVALS);
    ArrivalSampler::new(instance).sample(&mut rng)
}
