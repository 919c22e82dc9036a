//! Dense bounded-variable primal simplex on a compact (Tucker) tableau.
//!
//! Rows hold the basic variables, columns the nonbasic ones:
//!
//! ```text
//! x_B(i) = beta_i − Σ_k T[i][k] · y_k        z = z0 + Σ_k d_k · y_k
//! ```
//!
//! Every nonbasic `y_k` sits at zero. A variable with a finite upper bound
//! may be stored complemented (`ub − x`), which is how nonbasic variables at
//! their upper bound and basic variables leaving at their upper bound are
//! represented.

use super::{LinearProgram, LpSolution, LpStatus};
use crate::{Error, Result};

const PIVOT_TOL: f64 = 1e-11;
const COST_TOL: f64 = 1e-10;
const FEAS_TOL: f64 = 1e-9;
/// Consecutive degenerate pivots before switching to Bland's rule.
const DEGENERATE_STREAK: usize = 50;

struct Tableau {
    rows: usize,
    cols: usize,
    t: Vec<f64>,
    beta: Vec<f64>,
    d: Vec<f64>,
    z0: f64,
    basic: Vec<usize>,
    nonbasic: Vec<usize>,
    /// Position of each variable: `Ok(row)` if basic, `Err(col)` if nonbasic.
    position: Vec<std::result::Result<usize, usize>>,
    flipped: Vec<bool>,
    ub: Vec<f64>,
    /// Variables never allowed to enter.
    frozen: Vec<bool>,
    pivots: usize,
}

enum Outcome {
    Optimal,
    Unbounded,
}

impl Tableau {
    fn at(&self, i: usize, k: usize) -> f64 {
        self.t[i * self.cols + k]
    }

    /// Reduced costs for a cost vector indexed by variable.
    fn set_objective(&mut self, cost: &[f64]) {
        self.z0 = 0.0;
        self.d.iter_mut().for_each(|d| *d = 0.0);
        for (j, &c) in cost.iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            match self.position[j] {
                Err(k) => {
                    if self.flipped[j] {
                        self.z0 += c * self.ub[j];
                        self.d[k] -= c;
                    } else {
                        self.d[k] += c;
                    }
                }
                Ok(i) => {
                    let row = &self.t[i * self.cols..(i + 1) * self.cols];
                    if self.flipped[j] {
                        self.z0 += c * (self.ub[j] - self.beta[i]);
                        for (d, &a) in self.d.iter_mut().zip(row) {
                            *d += c * a;
                        }
                    } else {
                        self.z0 += c * self.beta[i];
                        for (d, &a) in self.d.iter_mut().zip(row) {
                            *d -= c * a;
                        }
                    }
                }
            }
        }
    }

    fn choose_entering(&self, bland: bool) -> Option<usize> {
        let mut best: Option<usize> = None;
        for k in 0..self.cols {
            let var = self.nonbasic[k];
            if self.frozen[var] || self.d[k] <= COST_TOL {
                continue;
            }
            best = match best {
                None => Some(k),
                Some(b) => {
                    let better = if bland {
                        var < self.nonbasic[b]
                    } else {
                        self.d[k] > self.d[b] || (self.d[k] == self.d[b] && var < self.nonbasic[b])
                    };
                    if better {
                        Some(k)
                    } else {
                        Some(b)
                    }
                }
            };
        }
        best
    }

    /// Ratio test; returns `(row, leaves_at_upper, step)`.
    fn choose_leaving(&self, k: usize, bland: bool) -> Option<(usize, bool, f64)> {
        let mut best: Option<(usize, bool, f64, f64)> = None;
        for i in 0..self.rows {
            let a = self.at(i, k);
            if a.abs() <= PIVOT_TOL {
                continue;
            }
            let (limit, at_upper) = if a > 0.0 {
                (self.beta[i].max(0.0) / a, false)
            } else {
                let ub = self.ub[self.basic[i]];
                if !ub.is_finite() {
                    continue;
                }
                ((ub - self.beta[i]).max(0.0) / -a, true)
            };
            let replace = match best {
                None => true,
                Some((r, _, step, mag)) => {
                    if limit < step - 1e-12 {
                        true
                    } else if limit <= step + 1e-12 {
                        if bland {
                            self.basic[i] < self.basic[r]
                        } else {
                            a.abs() > mag || (a.abs() == mag && self.basic[i] < self.basic[r])
                        }
                    } else {
                        false
                    }
                }
            };
            if replace {
                best = Some((i, at_upper, limit, a.abs()));
            }
        }
        best.map(|(r, up, step, _)| (r, up, step))
    }

    /// Replaces nonbasic column `k` by its complement.
    fn flip_column(&mut self, k: usize) {
        let var = self.nonbasic[k];
        let ub = self.ub[var];
        for i in 0..self.rows {
            let idx = i * self.cols + k;
            let a = self.t[idx];
            if a != 0.0 {
                self.beta[i] -= a * ub;
                self.t[idx] = -a;
            }
        }
        self.z0 += self.d[k] * ub;
        self.d[k] = -self.d[k];
        self.flipped[var] = !self.flipped[var];
    }

    /// Replaces basic row `r` by its complement.
    fn flip_row(&mut self, r: usize) {
        let var = self.basic[r];
        self.beta[r] = self.ub[var] - self.beta[r];
        for a in &mut self.t[r * self.cols..(r + 1) * self.cols] {
            *a = -*a;
        }
        self.flipped[var] = !self.flipped[var];
    }

    fn pivot(&mut self, r: usize, k: usize) {
        let cols = self.cols;
        let p = self.at(r, k);
        let inv = 1.0 / p;
        {
            let row = &mut self.t[r * cols..(r + 1) * cols];
            for a in row.iter_mut() {
                *a *= inv;
            }
            row[k] = inv;
        }
        self.beta[r] *= inv;
        let pivot_row: Vec<f64> = self.t[r * cols..(r + 1) * cols].to_vec();
        let beta_r = self.beta[r];
        for i in 0..self.rows {
            if i == r {
                continue;
            }
            let factor = self.t[i * cols + k];
            if factor == 0.0 {
                continue;
            }
            let row = &mut self.t[i * cols..(i + 1) * cols];
            for (a, &pr) in row.iter_mut().zip(&pivot_row) {
                *a -= factor * pr;
            }
            row[k] = -factor * inv;
            self.beta[i] -= factor * beta_r;
            if self.beta[i].abs() < 1e-14 {
                self.beta[i] = 0.0;
            }
        }
        let dk = self.d[k];
        if dk != 0.0 {
            for (d, &pr) in self.d.iter_mut().zip(&pivot_row) {
                *d -= dk * pr;
            }
            self.d[k] = -dk * inv;
            self.z0 += dk * beta_r;
        }
        let entering = self.nonbasic[k];
        let leaving = self.basic[r];
        self.basic[r] = entering;
        self.nonbasic[k] = leaving;
        self.position[entering] = Ok(r);
        self.position[leaving] = Err(k);
        self.pivots += 1;
    }

    fn run(&mut self, max_iter: usize) -> Result<Outcome> {
        let mut streak = 0usize;
        for _ in 0..max_iter {
            let bland = streak >= DEGENERATE_STREAK;
            let Some(k) = self.choose_entering(bland) else {
                return Ok(Outcome::Optimal);
            };
            let own_bound = self.ub[self.nonbasic[k]];
            let leaving = self.choose_leaving(k, bland);
            match leaving {
                None if !own_bound.is_finite() => return Ok(Outcome::Unbounded),
                Some((_, _, step)) if own_bound.is_finite() && own_bound < step - 1e-12 => {
                    self.flip_column(k);
                    streak = 0;
                }
                None => {
                    self.flip_column(k);
                    streak = 0;
                }
                Some((r, at_upper, step)) => {
                    if at_upper {
                        self.flip_row(r);
                    }
                    self.pivot(r, k);
                    if step <= 1e-12 {
                        streak += 1;
                    } else {
                        streak = 0;
                    }
                }
            }
        }
        Err(Error::Lp(format!(
            "iteration limit of {max_iter} reached without convergence"
        )))
    }

    fn value_of(&self, j: usize) -> f64 {
        let raw = match self.position[j] {
            Err(_) => 0.0,
            Ok(i) => self.beta[i],
        };
        if self.flipped[j] {
            self.ub[j] - raw
        } else {
            raw
        }
    }
}

fn check(lp: &LinearProgram) -> Result<()> {
    let n = lp.num_vars();
    if lp.upper.len() != n {
        return Err(Error::Lp("one upper bound per variable required".into()));
    }
    if let Some(c) = lp.objective.iter().find(|c| !c.is_finite()) {
        return Err(Error::Lp(format!("objective coefficient {c} is not finite")));
    }
    if let Some(u) = lp.upper.iter().find(|u| u.is_nan() || **u < 0.0) {
        return Err(Error::Lp(format!("upper bound {u} is negative or NaN")));
    }
    for (i, row) in lp.rows.iter().enumerate() {
        if !row.rhs.is_finite() {
            return Err(Error::Lp(format!("row {i} has non-finite rhs")));
        }
        for &(j, a) in &row.coeffs {
            if j >= n || !a.is_finite() {
                return Err(Error::Lp(format!("row {i} has a bad coefficient at {j}")));
            }
        }
    }
    Ok(())
}

pub(super) fn solve(lp: &LinearProgram) -> Result<LpSolution> {
    check(lp)?;
    let n = lp.num_vars();
    let m = lp.rows.len();
    let needs_phase_one = lp.rows.iter().any(|r| r.rhs < 0.0);
    let artificial = n + m;
    let num_vars = n + m + usize::from(needs_phase_one);
    let cols = n + usize::from(needs_phase_one);

    let mut t = vec![0.0; m * cols];
    for (i, row) in lp.rows.iter().enumerate() {
        for &(j, a) in &row.coeffs {
            t[i * cols + j] += a;
        }
        if needs_phase_one && row.rhs < 0.0 {
            t[i * cols + n] = -1.0;
        }
    }
    let mut ub = lp.upper.clone();
    ub.extend(std::iter::repeat_n(f64::INFINITY, m));
    if needs_phase_one {
        ub.push(f64::INFINITY);
    }
    let mut position = Vec::with_capacity(num_vars);
    position.extend((0..n).map(Err));
    position.extend((0..m).map(Ok));
    if needs_phase_one {
        position.push(Err(n));
    }
    let mut tab = Tableau {
        rows: m,
        cols,
        t,
        beta: lp.rows.iter().map(|r| r.rhs).collect(),
        d: vec![0.0; cols],
        z0: 0.0,
        basic: (n..n + m).collect(),
        nonbasic: (0..n).chain(needs_phase_one.then_some(artificial)).collect(),
        position,
        flipped: vec![false; num_vars],
        ub,
        frozen: vec![false; num_vars],
        pivots: 0,
    };
    let max_iter = 50 * (m + n) + 1000;

    // Variables fixed at zero never need to enter.
    for j in 0..n {
        if tab.ub[j] == 0.0 {
            tab.frozen[j] = true;
        }
    }

    if needs_phase_one {
        let r = (0..m)
            .min_by(|&a, &b| tab.beta[a].partial_cmp(&tab.beta[b]).unwrap().then(a.cmp(&b)))
            .expect("some row has negative rhs");
        tab.pivot(r, n);
        let mut cost = vec![0.0; num_vars];
        cost[artificial] = -1.0;
        tab.set_objective(&cost);
        tab.run(max_iter)?;
        if tab.value_of(artificial) > FEAS_TOL {
            return Ok(LpSolution {
                status: LpStatus::Infeasible,
                x: vec![0.0; n],
                objective: f64::NAN,
                duals: vec![0.0; m],
                pivots: tab.pivots,
            });
        }
        tab.ub[artificial] = 0.0;
        tab.frozen[artificial] = true;
        if let Ok(i) = tab.position[artificial] {
            tab.beta[i] = 0.0;
            tab.flipped[artificial] = false;
        }
    }

    let mut cost = vec![0.0; num_vars];
    cost[..n].copy_from_slice(&lp.objective);
    tab.set_objective(&cost);
    let status = match tab.run(max_iter)? {
        Outcome::Optimal => LpStatus::Optimal,
        Outcome::Unbounded => LpStatus::Unbounded,
    };

    let x: Vec<f64> = (0..n).map(|j| tab.value_of(j).clamp(0.0, lp.upper[j])).collect();
    let duals = (0..m)
        .map(|i| match tab.position[n + i] {
            Err(k) => (-tab.d[k]).max(0.0),
            Ok(_) => 0.0,
        })
        .collect();
    let objective = match status {
        LpStatus::Optimal => lp.objective.iter().zip(&x).map(|(c, x)| c * x).sum(),
        LpStatus::Unbounded => f64::INFINITY,
        LpStatus::Infeasible => f64::NAN,
    };
    Ok(LpSolution {
        status,
        x,
        objective,
        duals,
        pivots: tab.pivots,
    })
}
