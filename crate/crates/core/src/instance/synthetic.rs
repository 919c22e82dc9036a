//! Random instances following the synthetic experiment recipes.

use std::fmt;
use std::str::FromStr;

use rand::seq::index;
use rand::Rng;

use super::{Edge, Instance, OfflineVertex, OnlineType, Problem};
use crate::submodular::Objective;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RecipeKind {
    /// 40 offline vertices, 200 online types, `T = 1000`, weighted coverage
    /// over 1000 features.
    Coverage,
    /// 100 offline vertices, 200 online types, `T = 200`, budget `B = 50`.
    BudgetAdditive,
}

impl FromStr for RecipeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.replace('_', "-").as_str() {
            "coverage" => Ok(RecipeKind::Coverage),
            "budget-additive" => Ok(RecipeKind::BudgetAdditive),
            other => Err(Error::InvalidArgument(format!("unknown recipe kind {other:?}"))),
        }
    }
}

impl fmt::Display for RecipeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RecipeKind::Coverage => "coverage",
            RecipeKind::BudgetAdditive => "budget-additive",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Recipe {
    pub kind: RecipeKind,
    pub seed: u64,
}

pub const COVERAGE_OFFLINE: usize = 40;
pub const COVERAGE_ONLINE: usize = 200;
pub const COVERAGE_HORIZON: u32 = 1000;
pub const COVERAGE_FEATURES: usize = 1000;
pub const BUDGET_OFFLINE: usize = 100;
pub const BUDGET_ONLINE: usize = 200;
pub const BUDGET_HORIZON: u32 = 200;
pub const BUDGET: f64 = 50.0;
/// Upper bound on neighbours per online type and on features per vertex.
pub const MAX_SUBSET: usize = 10;

/// Uniform in `(0, 1]`.
fn unit_open_closed<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    1.0 - rng.random::<f64>()
}

/// A uniformly random subset of `0..n` whose size is uniform in `1..=max`.
fn random_subset<R: Rng + ?Sized>(rng: &mut R, n: usize, max: usize) -> Vec<usize> {
    let k = rng.random_range(1..=max.min(n));
    let mut picked = index::sample(rng, n, k).into_vec();
    picked.sort_unstable();
    picked
}

/// Graph skeleton shared by both recipes: rates uniform in `(0, 1]` and a
/// random neighbourhood of at most ten offline vertices per online type.
fn skeleton<R: Rng + ?Sized>(rng: &mut R, num_u: usize, num_v: usize, horizon: u32) -> Instance {
    let offline = (0..num_u)
        .map(|u| OfflineVertex {
            id: format!("u{u}"),
            capacity: 1,
        })
        .collect();
    let online = (0..num_v)
        .map(|v| OnlineType {
            id: format!("v{v}"),
            rate: unit_open_closed(rng),
        })
        .collect();
    let mut edges = Vec::new();
    for v in 0..num_v {
        for u in random_subset(rng, num_u, MAX_SUBSET) {
            edges.push(Edge {
                id: format!("e{}", edges.len()),
                u,
                v,
            });
        }
    }
    Instance::new(offline, online, edges, horizon, 1)
}

pub fn generate_synthetic(recipe: Recipe) -> Result<Problem> {
    let mut rng = crate::rng_for(recipe.seed, 0);
    match recipe.kind {
        RecipeKind::BudgetAdditive => {
            let instance = skeleton(&mut rng, BUDGET_OFFLINE, BUDGET_ONLINE, BUDGET_HORIZON);
            let weights = (0..instance.num_edges()).map(|_| rng.random::<f64>()).collect();
            let objective = Objective::budget_additive(weights, BUDGET)?;
            Ok(Problem { instance, objective })
        }
        RecipeKind::Coverage => {
            let instance = skeleton(&mut rng, COVERAGE_OFFLINE, COVERAGE_ONLINE, COVERAGE_HORIZON);
            let u_feats: Vec<Vec<usize>> = (0..instance.num_offline())
                .map(|_| random_subset(&mut rng, COVERAGE_FEATURES, MAX_SUBSET))
                .collect();
            let v_feats: Vec<Vec<usize>> = (0..instance.num_online())
                .map(|_| random_subset(&mut rng, COVERAGE_FEATURES, MAX_SUBSET))
                .collect();
            let feature_weights = (0..COVERAGE_FEATURES).map(|_| rng.random::<f64>()).collect();
            let edge_features = instance
                .edges()
                .iter()
                .map(|e| {
                    let mut q: Vec<u32> = u_feats[e.u].iter().chain(&v_feats[e.v]).map(|&z| z as u32).collect();
                    q.sort_unstable();
                    q.dedup();
                    q
                })
                .collect();
            let objective = Objective::coverage(edge_features, feature_weights)?;
            Ok(Problem { instance, objective })
        }
    }
}
