#![allow(dead_code)]

use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use osbm::lp::LinearProgram;
use osbm::submodular::PerUserCoverage;
use osbm::{Instance, Objective, ObjectiveKind};
use rand::seq::index;
use rand::Rng;

/// Random bipartite instance. Every online type gets `1..=max_deg` distinct
/// neighbours. With `integral` set, `|V| = T` and every rate is 1; otherwise
/// rates are uniform in (0, 1], scaled down if they would exceed `T` in total.
pub fn random_instance<R: Rng>(
    rng: &mut R,
    nu: usize,
    nv: usize,
    max_deg: usize,
    horizon: u32,
    integral: bool,
) -> Instance {
    random_general_instance(rng, nu, nv, max_deg, horizon, integral, 1, 1)
}

/// Like [`random_instance`] with capacities drawn from `1..=max_cap` and a
/// fixed per-arrival budget `eta`.
#[allow(clippy::too_many_arguments)]
pub fn random_general_instance<R: Rng>(
    rng: &mut R,
    nu: usize,
    nv: usize,
    max_deg: usize,
    horizon: u32,
    integral: bool,
    max_cap: u32,
    eta: u32,
) -> Instance {
    let caps: Vec<u32> = (0..nu).map(|_| rng.random_range(1..=max_cap)).collect();
    let mut edges = Vec::new();
    for v in 0..nv {
        let deg = rng.random_range(1..=max_deg.min(nu));
        let mut us: Vec<usize> = index::sample(rng, nu, deg).into_iter().collect();
        us.sort_unstable();
        edges.extend(us.into_iter().map(|u| (u, v)));
    }
    let (rates, horizon) = if integral {
        (vec![1.0; nv], nv as u32)
    } else {
        let r: Vec<f64> = (0..nv).map(|_| 1.0 - rng.random::<f64>()).collect();
        let scale = (horizon as f64 / r.iter().sum::<f64>()).min(1.0);
        (r.iter().map(|x| x * scale).collect(), horizon)
    };
    Instance::from_lists(&caps, &rates, &edges, horizon, eta)
}

pub const KINDS: [ObjectiveKind; 3] = [
    ObjectiveKind::Linear,
    ObjectiveKind::Coverage,
    ObjectiveKind::BudgetAdditive,
];

/// Random objective of the given kind over `instance`'s edges.
pub fn random_objective<R: Rng>(rng: &mut R, kind: ObjectiveKind, instance: &Instance) -> Objective {
    let m = instance.num_edges();
    match kind {
        ObjectiveKind::Linear => Objective::linear((0..m).map(|_| rng.random::<f64>()).collect()).unwrap(),
        ObjectiveKind::BudgetAdditive => {
            let w: Vec<f64> = (0..m).map(|_| rng.random::<f64>()).collect();
            let budget = 0.4 * w.iter().sum::<f64>();
            Objective::budget_additive(w, budget).unwrap()
        }
        ObjectiveKind::Coverage => {
            let g = 6;
            let feats = (0..m)
                .map(|_| {
                    let k = rng.random_range(1..=3);
                    index::sample(rng, g, k).into_iter().map(|z| z as u32).collect()
                })
                .collect();
            let w = (0..g).map(|_| rng.random::<f64>()).collect();
            Objective::coverage(feats, w).unwrap()
        }
        ObjectiveKind::PerUserCoverage => {
            let g = 4;
            let feats = (0..m)
                .map(|_| {
                    let k = rng.random_range(1..=2);
                    index::sample(rng, g, k).into_iter().map(|z| z as u32).collect()
                })
                .collect();
            let users = instance.edges().iter().map(|e| e.v).collect();
            let weights = (0..instance.num_online())
                .map(|_| (0..g).map(|_| rng.random::<f64>()).collect())
                .collect();
            Objective::PerUserCoverage(PerUserCoverage::new(feats, users, weights).unwrap())
        }
    }
}

/// A feasible fractional point: uniform values scaled into the polytope.
pub fn random_feasible_x<R: Rng>(rng: &mut R, instance: &Instance) -> Vec<f64> {
    let mut x: Vec<f64> = (0..instance.num_edges()).map(|_| rng.random::<f64>()).collect();
    osbm::offline::restore_feasibility(instance, &mut x);
    x
}

/// Standard error of a Bernoulli frequency estimate.
pub fn bernoulli_sigma(p: f64, n: usize) -> f64 {
    (p * (1.0 - p) / n as f64).sqrt()
}

/// Outcome of the rational reference solver.
#[derive(Debug, Clone, PartialEq)]
pub enum RationalOutcome {
    Optimal(BigRational),
    Unbounded,
}

fn exact(v: f64) -> BigRational {
    BigRational::from_float(v).expect("finite coefficient")
}

/// Textbook two-column-block tableau simplex in exact arithmetic with
/// Bland's rule. Upper bounds become explicit rows. Requires `rhs ≥ 0` so
/// the slack basis is feasible.
pub fn rational_simplex(lp: &LinearProgram) -> RationalOutcome {
    let n = lp.num_vars();
    let mut rows: Vec<(Vec<BigRational>, BigRational)> = Vec::new();
    for r in &lp.rows {
        let mut a = vec![BigRational::zero(); n];
        for &(j, c) in &r.coeffs {
            a[j] += exact(c);
        }
        assert!(r.rhs >= 0.0, "reference solver needs a feasible origin");
        rows.push((a, exact(r.rhs)));
    }
    for (j, &ub) in lp.upper.iter().enumerate() {
        if ub.is_finite() {
            let mut a = vec![BigRational::zero(); n];
            a[j] = BigRational::one();
            rows.push((a, exact(ub)));
        }
    }
    let m = rows.len();
    let width = n + m;
    let mut t: Vec<Vec<BigRational>> = rows
        .into_iter()
        .enumerate()
        .map(|(i, (a, b))| {
            let mut row = a;
            row.extend((0..m).map(|k| {
                if k == i {
                    BigRational::one()
                } else {
                    BigRational::zero()
                }
            }));
            row.push(b);
            row
        })
        .collect();
    let mut basis: Vec<usize> = (n..width).collect();
    // Reduced costs c_j − z_j, objective value in the last slot.
    let mut obj: Vec<BigRational> = lp.objective.iter().map(|&c| exact(c)).collect();
    obj.extend((0..=m).map(|_| BigRational::zero()));
    loop {
        let Some(enter) = (0..width).find(|&j| obj[j].is_positive()) else {
            return RationalOutcome::Optimal(-obj[width].clone());
        };
        let mut leave: Option<(usize, BigRational)> = None;
        for i in 0..m {
            if t[i][enter].is_positive() {
                let ratio = &t[i][width] / &t[i][enter];
                let better = match &leave {
                    None => true,
                    Some((l, best)) => ratio < *best || (ratio == *best && basis[i] < basis[*l]),
                };
                if better {
                    leave = Some((i, ratio));
                }
            }
        }
        let Some((r, _)) = leave else {
            return RationalOutcome::Unbounded;
        };
        let piv = t[r][enter].clone();
        for v in t[r].iter_mut() {
            *v /= &piv;
        }
        let pivot_row = t[r].clone();
        for (i, row) in t.iter_mut().enumerate() {
            if i != r && !row[enter].is_zero() {
                let f = row[enter].clone();
                for (v, p) in row.iter_mut().zip(&pivot_row) {
                    *v -= &f * p;
                }
            }
        }
        let f = obj[enter].clone();
        for (v, p) in obj.iter_mut().zip(&pivot_row) {
            *v -= &f * p;
        }
        basis[r] = enter;
    }
}

pub fn to_f64(q: &BigRational) -> f64 {
    num_traits::ToPrimitive::to_f64(q).expect("representable")
}

/// Small random LP with integer-valued data, `rhs ≥ 0`, some infinite
/// bounds and occasionally unbounded directions.
pub fn random_lp<R: Rng>(rng: &mut R) -> LinearProgram {
    let n = rng.random_range(1..=5);
    let rows = rng.random_range(1..=5);
    let mut lp = LinearProgram::new(n);
    for c in lp.objective.iter_mut() {
        *c = rng.random_range(-3..=5) as f64;
    }
    for ub in lp.upper.iter_mut() {
        if rng.random_bool(0.5) {
            *ub = rng.random_range(1..=4) as f64;
        }
    }
    for _ in 0..rows {
        let mut coeffs = Vec::new();
        for j in 0..n {
            if rng.random_bool(0.7) {
                coeffs.push((j, rng.random_range(-4..=6) as f64 / 2.0));
            }
        }
        lp.add_row(coeffs, rng.random_range(0..=10) as f64);
    }
    lp
}
