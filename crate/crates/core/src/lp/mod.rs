//! Linear programs over the bipartite b-matching polytope.
//!
//! One exact dense simplex ([`solve`]) serves both the linear maximisation
//! step of continuous greedy ([`build_matching_lmo`]) and the epigraph
//! programs for the special-case objectives ([`build_special_lp`]).

mod mps;
mod simplex;

pub use mps::write_mps;

use crate::submodular::{Coverage, Objective};
use crate::{Error, Instance, Result};

/// Feasibility tolerance used by solution audits.
pub const FEASIBILITY_TOLERANCE: f64 = 1e-9;

/// A `≤` constraint with sparse coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub coeffs: Vec<(usize, f64)>,
    pub rhs: f64,
}

/// `maximize c·x  s.t.  A x ≤ b,  0 ≤ x ≤ ub` (`ub` may be `+∞`).
#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    pub objective: Vec<f64>,
    pub rows: Vec<Constraint>,
    pub upper: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub status: LpStatus,
    pub x: Vec<f64>,
    pub objective: f64,
    /// Shadow price of each row (nonnegative for a maximisation).
    pub duals: Vec<f64>,
    pub pivots: usize,
}

impl LinearProgram {
    /// `n` variables with zero objective and no upper bounds.
    pub fn new(n: usize) -> Self {
        LinearProgram {
            objective: vec![0.0; n],
            rows: Vec::new(),
            upper: vec![f64::INFINITY; n],
        }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn add_row(&mut self, coeffs: Vec<(usize, f64)>, rhs: f64) {
        self.rows.push(Constraint { coeffs, rhs });
    }

    pub fn evaluate(&self, x: &[f64]) -> f64 {
        self.objective.iter().zip(x).map(|(c, x)| c * x).sum()
    }

    /// Largest violation of any row or bound at `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let rows = self.rows.iter().map(|r| {
            let lhs: f64 = r.coeffs.iter().map(|&(j, a)| a * x[j]).sum();
            lhs - r.rhs
        });
        let bounds = x.iter().zip(&self.upper).map(|(&x, &ub)| (-x).max(x - ub));
        rows.chain(bounds).fold(0.0, f64::max)
    }
}

/// Solves the program exactly (up to floating point) with a deterministic
/// pivot rule.
pub fn solve(lp: &LinearProgram) -> Result<LpSolution> {
    simplex::solve(lp)
}

fn add_matching_rows(lp: &mut LinearProgram, instance: &Instance) {
    let eta = instance.eta() as f64;
    for v in 0..instance.num_online() {
        let coeffs = instance.edges_at_v(v).iter().map(|&e| (e, 1.0)).collect();
        lp.add_row(coeffs, eta * instance.rate(v));
    }
    for u in 0..instance.num_offline() {
        let coeffs = instance.edges_at_u(u).iter().map(|&e| (e, 1.0)).collect();
        lp.add_row(coeffs, instance.capacity(u) as f64);
    }
    for e in 0..instance.num_edges() {
        lp.upper[e] = 1.0;
    }
}

/// `max Σ w_e x_e` over the matching polytope: one row per online type with
/// rhs `η·r_v`, one per offline vertex with rhs `C_u`, and `0 ≤ x_e ≤ 1`.
///
/// Negative weights are kept; the zero lower bound handles them.
pub fn build_matching_lmo(instance: &Instance, weights: &[f64]) -> LinearProgram {
    assert_eq!(weights.len(), instance.num_edges(), "one weight per edge");
    let mut lp = LinearProgram::new(instance.num_edges());
    lp.objective.copy_from_slice(weights);
    add_matching_rows(&mut lp, instance);
    lp
}

/// An epigraph LP whose first `num_edges` variables are the edge variables.
#[derive(Debug, Clone)]
pub struct SpecialLp {
    pub lp: LinearProgram,
    pub num_edges: usize,
}

impl SpecialLp {
    /// Edge part of a solution vector.
    pub fn edge_values<'a>(&self, x: &'a [f64]) -> &'a [f64] {
        &x[..self.num_edges]
    }
}

fn add_coverage_part(lp: &mut LinearProgram, cov: &Coverage, m: usize) {
    let weights = cov.feature_weights();
    let mut covering: Vec<Vec<usize>> = vec![Vec::new(); weights.len()];
    for (e, feats) in cov.edge_features().iter().enumerate() {
        for &z in feats {
            covering[z as usize].push(e);
        }
    }
    for (z, edges) in covering.iter().enumerate() {
        if edges.is_empty() || weights[z] == 0.0 {
            continue;
        }
        let gamma = lp.num_vars();
        lp.objective.push(weights[z]);
        lp.upper.push(1.0);
        let mut coeffs = vec![(gamma, 1.0)];
        coeffs.extend(edges.iter().map(|&e| (e, -1.0)));
        lp.add_row(coeffs, 0.0);
    }
    debug_assert!(lp.num_vars() >= m);
}

/// Epigraph LP for a special-case objective on `instance`:
///
/// - budget-additive: `max γ` with `γ ≤ Σ w_e x_e` and `γ ≤ B`;
/// - coverage / per-user coverage: `max Σ w_z γ_z` with
///   `γ_z ≤ Σ_{e: z ∈ q_e} x_e` and `γ_z ≤ 1`;
/// - linear: the plain matching LP.
///
/// Matching constraints are those of [`build_matching_lmo`]. Features that
/// no edge covers, or with zero weight, get no variable.
pub fn build_special_lp(instance: &Instance, objective: &Objective) -> Result<SpecialLp> {
    objective.check_compatible(instance)?;
    let m = instance.num_edges();
    let mut lp = LinearProgram::new(m);
    add_matching_rows(&mut lp, instance);
    match objective {
        Objective::Linear { weights } => lp.objective.copy_from_slice(weights),
        Objective::BudgetAdditive { weights, budget } => {
            let gamma = lp.num_vars();
            lp.objective.push(1.0);
            lp.upper.push(*budget);
            let mut coeffs = vec![(gamma, 1.0)];
            coeffs.extend(
                weights
                    .iter()
                    .enumerate()
                    .filter(|(_, &w)| w != 0.0)
                    .map(|(e, &w)| (e, -w)),
            );
            lp.add_row(coeffs, 0.0);
        }
        Objective::Coverage(cov) => add_coverage_part(&mut lp, cov, m),
        Objective::PerUserCoverage(p) => add_coverage_part(&mut lp, p.as_coverage(), m),
    }
    Ok(SpecialLp { lp, num_edges: m })
}

/// Checks `x` against the matching polytope of `instance`.
pub fn check_matching_feasible(instance: &Instance, x: &[f64], tol: f64) -> Result<()> {
    if x.len() != instance.num_edges() {
        return Err(Error::InfeasibleSolution(format!(
            "{} values for {} edges",
            x.len(),
            instance.num_edges()
        )));
    }
    if let Some(e) = x.iter().position(|&v| !(v >= -tol && v <= 1.0 + tol)) {
        return Err(Error::InfeasibleSolution(format!("x[{e}] = {} outside [0, 1]", x[e])));
    }
    let eta = instance.eta() as f64;
    for v in 0..instance.num_online() {
        let load: f64 = instance.edges_at_v(v).iter().map(|&e| x[e]).sum();
        let rhs = eta * instance.rate(v);
        if load > rhs + tol {
            return Err(Error::InfeasibleSolution(format!(
                "online type {v} has load {load} > {rhs}"
            )));
        }
    }
    for u in 0..instance.num_offline() {
        let load: f64 = instance.edges_at_u(u).iter().map(|&e| x[e]).sum();
        let rhs = instance.capacity(u) as f64;
        if load > rhs + tol {
            return Err(Error::InfeasibleSolution(format!(
                "offline vertex {u} has load {load} > {rhs}"
            )));
        }
    }
    Ok(())
}
