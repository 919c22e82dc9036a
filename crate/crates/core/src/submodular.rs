//! Monotone submodular objectives over matched edges and their multilinear
//! extension.
//!
//! Objectives are value oracles on *multisets* of edge ids: when an offline
//! vertex with capacity `C_u > 1` is matched to repeated arrivals of the same
//! online type, the edge appears several times. This is the set function on
//! the graph where `u` is replaced by `C_u` identical copies: additive terms
//! count every copy, while a covered feature is only counted once.

use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::stats::{Estimate, Moments};
use crate::{Error, Instance, Result};

/// Largest edge count accepted by [`multilinear_exact`].
pub const EXACT_EDGE_LIMIT: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ObjectiveKind {
    Linear,
    Coverage,
    BudgetAdditive,
    PerUserCoverage,
}

impl ObjectiveKind {
    pub fn name(self) -> &'static str {
        match self {
            ObjectiveKind::Linear => "linear",
            ObjectiveKind::Coverage => "coverage",
            ObjectiveKind::BudgetAdditive => "budget-additive",
            ObjectiveKind::PerUserCoverage => "per-user-coverage",
        }
    }
}

impl fmt::Display for ObjectiveKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ObjectiveKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.replace('_', "-").as_str() {
            "linear" => Ok(ObjectiveKind::Linear),
            "coverage" => Ok(ObjectiveKind::Coverage),
            "budget-additive" => Ok(ObjectiveKind::BudgetAdditive),
            "per-user-coverage" => Ok(ObjectiveKind::PerUserCoverage),
            other => Err(Error::InvalidArgument(format!("unknown objective kind {other:?}"))),
        }
    }
}

/// Weighted coverage: `f(S) = Σ_z w_z · [z ∈ ∪_{e∈S} q_e]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Coverage {
    edge_features: Vec<Vec<u32>>,
    feature_weights: Vec<f64>,
}

impl Coverage {
    pub fn new(edge_features: Vec<Vec<u32>>, feature_weights: Vec<f64>) -> Result<Self> {
        check_weights(&feature_weights, "feature weight")?;
        let mut edge_features = edge_features;
        for (e, feats) in edge_features.iter_mut().enumerate() {
            feats.sort_unstable();
            feats.dedup();
            if let Some(&z) = feats.iter().find(|&&z| z as usize >= feature_weights.len()) {
                return Err(Error::InvalidArgument(format!(
                    "edge {e} has feature {z} outside [0, {})",
                    feature_weights.len()
                )));
            }
        }
        Ok(Coverage {
            edge_features,
            feature_weights,
        })
    }

    pub fn edge_features(&self) -> &[Vec<u32>] {
        &self.edge_features
    }

    pub fn feature_weights(&self) -> &[f64] {
        &self.feature_weights
    }
}

/// Sum over online types of a weighted coverage function on that type's own
/// matched edges (genres of recommended movies, weighted per user).
#[derive(Debug, Clone, PartialEq)]
pub struct PerUserCoverage {
    edge_genres: Vec<Vec<u32>>,
    edge_user: Vec<usize>,
    user_weights: Vec<Vec<f64>>,
    keyed: Coverage,
}

impl PerUserCoverage {
    /// `edge_genres[e]` are the genres of edge `e`, `edge_user[e]` its online
    /// endpoint and `user_weights[v][z]` the weight of genre `z` for user `v`.
    pub fn new(edge_genres: Vec<Vec<u32>>, edge_user: Vec<usize>, user_weights: Vec<Vec<f64>>) -> Result<Self> {
        if edge_genres.len() != edge_user.len() {
            return Err(Error::InvalidArgument(
                "edge_genres and edge_user differ in length".into(),
            ));
        }
        let mut offsets = Vec::with_capacity(user_weights.len());
        let mut flat = Vec::new();
        for w in &user_weights {
            check_weights(w, "genre weight")?;
            offsets.push(flat.len() as u32);
            flat.extend_from_slice(w);
        }
        let mut keyed_features = Vec::with_capacity(edge_genres.len());
        for (e, (genres, &v)) in edge_genres.iter().zip(&edge_user).enumerate() {
            let Some(weights) = user_weights.get(v) else {
                return Err(Error::InvalidArgument(format!("edge {e} references unknown user {v}")));
            };
            let mut keys = Vec::with_capacity(genres.len());
            for &z in genres {
                if z as usize >= weights.len() {
                    return Err(Error::InvalidArgument(format!(
                        "edge {e} has genre {z} without a weight for user {v}"
                    )));
                }
                keys.push(offsets[v] + z);
            }
            keyed_features.push(keys);
        }
        let keyed = Coverage::new(keyed_features, flat)?;
        Ok(PerUserCoverage {
            edge_genres,
            edge_user,
            user_weights,
            keyed,
        })
    }

    pub fn edge_genres(&self) -> &[Vec<u32>] {
        &self.edge_genres
    }

    pub fn edge_user(&self) -> &[usize] {
        &self.edge_user
    }

    pub fn user_weights(&self) -> &[Vec<f64>] {
        &self.user_weights
    }

    /// The equivalent single coverage function over `(user, genre)` keys.
    pub fn as_coverage(&self) -> &Coverage {
        &self.keyed
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Objective {
    Linear { weights: Vec<f64> },
    BudgetAdditive { weights: Vec<f64>, budget: f64 },
    Coverage(Coverage),
    PerUserCoverage(PerUserCoverage),
}

fn check_weights(w: &[f64], what: &str) -> Result<()> {
    match w.iter().position(|x| !x.is_finite() || *x < 0.0) {
        Some(i) => Err(Error::InvalidArgument(format!(
            "{what} {i} is {} (must be finite and nonnegative)",
            w[i]
        ))),
        None => Ok(()),
    }
}

impl Objective {
    pub fn linear(weights: Vec<f64>) -> Result<Self> {
        check_weights(&weights, "edge weight")?;
        Ok(Objective::Linear { weights })
    }

    pub fn budget_additive(weights: Vec<f64>, budget: f64) -> Result<Self> {
        check_weights(&weights, "edge weight")?;
        if budget.is_nan() || budget < 0.0 {
            return Err(Error::InvalidArgument(format!("budget {budget} is negative")));
        }
        Ok(Objective::BudgetAdditive { weights, budget })
    }

    pub fn coverage(edge_features: Vec<Vec<u32>>, feature_weights: Vec<f64>) -> Result<Self> {
        Coverage::new(edge_features, feature_weights).map(Objective::Coverage)
    }

    pub fn kind(&self) -> ObjectiveKind {
        match self {
            Objective::Linear { .. } => ObjectiveKind::Linear,
            Objective::BudgetAdditive { .. } => ObjectiveKind::BudgetAdditive,
            Objective::Coverage(_) => ObjectiveKind::Coverage,
            Objective::PerUserCoverage(_) => ObjectiveKind::PerUserCoverage,
        }
    }

    /// Size of the ground set.
    pub fn num_edges(&self) -> usize {
        match self {
            Objective::Linear { weights } | Objective::BudgetAdditive { weights, .. } => weights.len(),
            Objective::Coverage(c) => c.edge_features.len(),
            Objective::PerUserCoverage(p) => p.edge_user.len(),
        }
    }

    /// Checks that the objective is defined over the edges of `instance`.
    pub fn check_compatible(&self, instance: &Instance) -> Result<()> {
        if self.num_edges() != instance.num_edges() {
            return Err(Error::ObjectiveMismatch(format!(
                "objective has {} edges, instance has {}",
                self.num_edges(),
                instance.num_edges()
            )));
        }
        if let Objective::PerUserCoverage(p) = self {
            if p.user_weights.len() != instance.num_online() {
                return Err(Error::ObjectiveMismatch(format!(
                    "{} user weight vectors for {} online types",
                    p.user_weights.len(),
                    instance.num_online()
                )));
            }
            if let Some(e) = (0..instance.num_edges()).find(|&e| p.edge_user[e] != instance.edge(e).v) {
                return Err(Error::ObjectiveMismatch(format!(
                    "edge {e} is keyed to user {} but its online endpoint is {}",
                    p.edge_user[e],
                    instance.edge(e).v
                )));
            }
        }
        Ok(())
    }

    /// Per-edge weights for additive objectives.
    pub fn weights(&self) -> Option<&[f64]> {
        match self {
            Objective::Linear { weights } | Objective::BudgetAdditive { weights, .. } => Some(weights),
            _ => None,
        }
    }

    /// The coverage structure behind coverage-type objectives.
    pub fn coverage_view(&self) -> Option<&Coverage> {
        match self {
            Objective::Coverage(c) => Some(c),
            Objective::PerUserCoverage(p) => Some(&p.keyed),
            _ => None,
        }
    }

    pub fn state(&self) -> ObjectiveState<'_> {
        ObjectiveState::new(self)
    }

    /// `F(x)` in closed form when the objective is modular.
    pub fn multilinear_closed_form(&self, x: &[f64]) -> Option<f64> {
        match self {
            Objective::Linear { weights } => Some(weights.iter().zip(x).map(|(w, x)| w * x).sum()),
            _ => None,
        }
    }
}

/// Incremental evaluation state for a multiset of edges.
///
/// Gains and losses are answered in `O(|q_e|)` for coverage objectives and
/// `O(1)` for additive ones, which is what greedy and the gradient estimator
/// need for their repeated marginal queries.
#[derive(Debug, Clone)]
pub struct ObjectiveState<'a> {
    f: &'a Objective,
    inner: StateInner,
}

#[derive(Debug, Clone)]
enum StateInner {
    Sum {
        sum: f64,
    },
    Cover {
        counts: Vec<u32>,
        value: f64,
        touched: Vec<u32>,
    },
}

impl<'a> ObjectiveState<'a> {
    pub fn new(f: &'a Objective) -> Self {
        let inner = match f.coverage_view() {
            Some(c) => StateInner::Cover {
                counts: vec![0; c.feature_weights.len()],
                value: 0.0,
                touched: Vec::new(),
            },
            None => StateInner::Sum { sum: 0.0 },
        };
        ObjectiveState { f, inner }
    }

    pub fn objective(&self) -> &'a Objective {
        self.f
    }

    pub fn value(&self) -> f64 {
        match (&self.inner, self.f) {
            (StateInner::Sum { sum }, Objective::BudgetAdditive { budget, .. }) => sum.min(*budget),
            (StateInner::Sum { sum }, _) => *sum,
            (StateInner::Cover { value, .. }, _) => *value,
        }
    }

    /// `f(S + e) − f(S)`.
    pub fn gain(&self, e: usize) -> f64 {
        match (&self.inner, self.f) {
            (_, Objective::Linear { weights }) => weights[e],
            (StateInner::Sum { sum }, Objective::BudgetAdditive { weights, budget }) => {
                ((sum + weights[e]).min(*budget) - sum.min(*budget)).max(0.0)
            }
            (StateInner::Cover { counts, .. }, f) => {
                let c = f.coverage_view().expect("coverage state");
                c.edge_features[e]
                    .iter()
                    .filter(|&&z| counts[z as usize] == 0)
                    .map(|&z| c.feature_weights[z as usize])
                    .sum()
            }
            _ => unreachable!("state kind matches objective kind"),
        }
    }

    /// `f(S) − f(S − e)` for one copy of an edge already in `S`.
    pub fn loss(&self, e: usize) -> f64 {
        match (&self.inner, self.f) {
            (_, Objective::Linear { weights }) => weights[e],
            (StateInner::Sum { sum }, Objective::BudgetAdditive { weights, budget }) => {
                (sum.min(*budget) - (sum - weights[e]).min(*budget)).max(0.0)
            }
            (StateInner::Cover { counts, .. }, f) => {
                let c = f.coverage_view().expect("coverage state");
                c.edge_features[e]
                    .iter()
                    .filter(|&&z| counts[z as usize] == 1)
                    .map(|&z| c.feature_weights[z as usize])
                    .sum()
            }
            _ => unreachable!("state kind matches objective kind"),
        }
    }

    pub fn add(&mut self, e: usize) {
        let f = self.f;
        match &mut self.inner {
            StateInner::Sum { sum } => *sum += f.weights().expect("additive")[e],
            StateInner::Cover { counts, value, touched } => {
                let c = f.coverage_view().expect("coverage state");
                for &z in &c.edge_features[e] {
                    let slot = &mut counts[z as usize];
                    if *slot == 0 {
                        *value += c.feature_weights[z as usize];
                        touched.push(z);
                    }
                    *slot += 1;
                }
            }
        }
    }

    /// Removes one copy of `e`; the caller guarantees it is present.
    pub fn remove(&mut self, e: usize) {
        let f = self.f;
        match &mut self.inner {
            StateInner::Sum { sum } => *sum -= f.weights().expect("additive")[e],
            StateInner::Cover { counts, value, .. } => {
                let c = f.coverage_view().expect("coverage state");
                for &z in &c.edge_features[e] {
                    let slot = &mut counts[z as usize];
                    debug_assert!(*slot > 0, "removing an edge that is not present");
                    *slot -= 1;
                    if *slot == 0 {
                        *value -= c.feature_weights[z as usize];
                    }
                }
            }
        }
    }

    /// Back to the empty set.
    pub fn clear(&mut self) {
        match &mut self.inner {
            StateInner::Sum { sum } => *sum = 0.0,
            StateInner::Cover { counts, value, touched } => {
                for z in touched.drain(..) {
                    counts[z as usize] = 0;
                }
                *value = 0.0;
            }
        }
    }

    /// Number of copies covering feature `z` (coverage objectives only).
    pub fn feature_count(&self, z: usize) -> u32 {
        match &self.inner {
            StateInner::Cover { counts, .. } => counts[z],
            StateInner::Sum { .. } => 0,
        }
    }
}

fn check_ids(f: &Objective, set: &[usize]) -> Result<()> {
    match set.iter().find(|&&e| e >= f.num_edges()) {
        Some(&e) => Err(Error::UnknownEdge(e)),
        None => Ok(()),
    }
}

fn check_point(f: &Objective, x: &[f64]) -> Result<()> {
    if x.len() != f.num_edges() {
        return Err(Error::InvalidArgument(format!(
            "point has {} coordinates, objective has {} edges",
            x.len(),
            f.num_edges()
        )));
    }
    if let Some(i) = x.iter().position(|v| !(0.0..=1.0).contains(v)) {
        return Err(Error::InvalidArgument(format!(
            "coordinate {i} is {} (must lie in [0, 1])",
            x[i]
        )));
    }
    Ok(())
}

/// Exact value of `f` on a multiset of edge ids.
pub fn eval(f: &Objective, set: &[usize]) -> Result<f64> {
    check_ids(f, set)?;
    let mut state = f.state();
    for &e in set {
        state.add(e);
    }
    Ok(state.value())
}

/// `f(S ∪ {e}) − f(S)` for `e ∉ S`.
pub fn marginal_gain(f: &Objective, set: &[usize], e: usize) -> Result<f64> {
    check_ids(f, set)?;
    check_ids(f, &[e])?;
    if set.contains(&e) {
        return Err(Error::EdgeAlreadyPresent(e));
    }
    let mut state = f.state();
    for &s in set {
        state.add(s);
    }
    Ok(state.gain(e))
}

/// Multilinear extension by enumerating all `2^m` subsets.
pub fn multilinear_exact(f: &Objective, x: &[f64]) -> Result<f64> {
    check_point(f, x)?;
    let m = x.len();
    if m > EXACT_EDGE_LIMIT {
        return Err(Error::TooManyEdges {
            got: m,
            limit: EXACT_EDGE_LIMIT,
        });
    }
    let mut state = f.state();
    let mut total = 0.0;
    for mask in 0u32..(1u32 << m) {
        let mut prob = 1.0;
        for (e, &xe) in x.iter().enumerate() {
            prob *= if mask >> e & 1 == 1 { xe } else { 1.0 - xe };
            if prob == 0.0 {
                break;
            }
        }
        if prob == 0.0 {
            continue;
        }
        state.clear();
        for e in 0..m {
            if mask >> e & 1 == 1 {
                state.add(e);
            }
        }
        total += prob * state.value();
    }
    Ok(total)
}

/// Fills `state` with an independent draw `R_x`.
fn draw_into<R: Rng + ?Sized>(state: &mut ObjectiveState<'_>, x: &[f64], rng: &mut R, mark: &mut [bool]) {
    state.clear();
    for (e, &xe) in x.iter().enumerate() {
        let hit = rng.random::<f64>() < xe;
        mark[e] = hit;
        if hit {
            state.add(e);
        }
    }
}

/// Monte Carlo estimate of `F(x) = E[f(R_x)]`.
pub fn multilinear_mc<R: Rng + ?Sized>(f: &Objective, x: &[f64], samples: usize, rng: &mut R) -> Result<Estimate> {
    check_point(f, x)?;
    if samples == 0 {
        return Err(Error::InvalidArgument("samples must be at least 1".into()));
    }
    let mut state = f.state();
    let mut mark = vec![false; x.len()];
    let mut moments = Moments::new();
    for _ in 0..samples {
        draw_into(&mut state, x, rng, &mut mark);
        moments.push(state.value());
    }
    Ok(moments.estimate())
}

/// Estimate of `∂F/∂x_e = E[f(R ∪ {e}) − f(R)]` where `R` is drawn on the
/// other coordinates; both terms share the draw.
pub fn partial_derivative<R: Rng + ?Sized>(
    f: &Objective,
    x: &[f64],
    e: usize,
    samples: usize,
    rng: &mut R,
) -> Result<Estimate> {
    check_point(f, x)?;
    check_ids(f, &[e])?;
    if samples == 0 {
        return Err(Error::InvalidArgument("samples must be at least 1".into()));
    }
    let mut state = f.state();
    let mut moments = Moments::new();
    for _ in 0..samples {
        state.clear();
        for (k, &xk) in x.iter().enumerate() {
            // Coordinate e still consumes a draw so streams stay aligned across e.
            let hit = rng.random::<f64>() < xk;
            if hit && k != e {
                state.add(k);
            }
        }
        moments.push(state.gain(e));
    }
    Ok(moments.estimate())
}

/// Gradient of `F` at `x` from one shared batch of draws.
#[derive(Debug, Clone)]
pub struct GradientBatch {
    pub gradient: Vec<f64>,
    /// `F(x)` estimated from the same draws.
    pub value: Estimate,
}

/// Estimates every partial derivative from the same `samples` draws of `R_x`:
/// for each draw, coordinate `e` contributes `f(R ∪ {e}) − f(R − {e})`.
pub fn gradient_estimate<R: Rng + ?Sized>(
    f: &Objective,
    x: &[f64],
    samples: usize,
    rng: &mut R,
) -> Result<GradientBatch> {
    check_point(f, x)?;
    if samples == 0 {
        return Err(Error::InvalidArgument("samples must be at least 1".into()));
    }
    let m = x.len();
    let mut gradient = vec![0.0; m];
    if let Objective::Linear { weights } = f {
        gradient.copy_from_slice(weights);
        let value = f.multilinear_closed_form(x).expect("linear");
        return Ok(GradientBatch {
            gradient,
            value: Estimate::exact(value),
        });
    }
    let mut state = f.state();
    let mut mark = vec![false; m];
    let mut moments = Moments::new();
    for _ in 0..samples {
        draw_into(&mut state, x, rng, &mut mark);
        moments.push(state.value());
        for e in 0..m {
            gradient[e] += if mark[e] { state.loss(e) } else { state.gain(e) };
        }
    }
    for g in &mut gradient {
        *g /= samples as f64;
    }
    Ok(GradientBatch {
        gradient,
        value: moments.estimate(),
    })
}

/// `F(x)`: closed form for linear objectives, exact enumeration up to 16
/// edges, Monte Carlo with `samples` draws otherwise.
pub fn multilinear_value<R: Rng + ?Sized>(f: &Objective, x: &[f64], samples: usize, rng: &mut R) -> Result<Estimate> {
    check_point(f, x)?;
    if let Some(v) = f.multilinear_closed_form(x) {
        return Ok(Estimate::exact(v));
    }
    if x.len() <= 16 {
        return multilinear_exact(f, x).map(Estimate::exact);
    }
    multilinear_mc(f, x, samples, rng)
}
