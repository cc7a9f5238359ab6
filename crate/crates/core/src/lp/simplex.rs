//! Bounded-variable primal simplex, dense tableau, two phases.
//!
//! Variables live between optional bounds, so box constraints never become
//! tableau rows. Every row gets one slack (`<=`: slack in [0, inf), `>=`:
//! slack in (-inf, 0], `=`: slack fixed at 0); an artificial column is added
//! only where the initial point cannot absorb the residual into the slack.
//! Phase one minimizes the sum of artificials; phase two fixes artificials at
//! zero and minimizes the real objective. Entering and leaving choices follow
//! Bland's rule (lowest eligible index), which makes the solver deterministic
//! and immune to cycling, and a nonbasic variable whose own opposite bound is
//! reached before any basic limit simply flips bounds without a pivot.

use super::{Cmp, LinearProgram, Solution, Status};
use crate::error::{Error, Result};
use crate::scalar::Scalar;


#[derive(Debug, Clone, PartialEq)]
enum VStat {
    Basic(usize),
    AtLower,
    AtUpper,
    /// Nonbasic with no finite bound, resting at zero.
    Resting,
}

struct Tableau<S> {
    /// Dense rows over all columns (structural, slack, artificial).
    rows: Vec<Vec<S>>,
    lower: Vec<Option<S>>,
    upper: Vec<Option<S>>,
    value: Vec<S>,
    stat: Vec<VStat>,
    basis: Vec<usize>,
    cost: Vec<S>,
}

/// Solve `lp` with per-variable bound overrides `(id, lower, upper)` applied
/// on top (used by branch-and-bound to fix binaries). `iteration_limit` of 0
/// scales with problem size.
pub(crate) fn solve<S: Scalar>(
    lp: &LinearProgram<S>,
    overrides: &[(usize, S, S)],
    iteration_limit: usize,
) -> Result<Solution<S>> {
    let n = lp.variables.len();
    let m = lp.constraints.len();

    let mut lower: Vec<Option<S>> = lp.variables.iter().map(|v| v.lower.clone()).collect();
    let mut upper: Vec<Option<S>> = lp.variables.iter().map(|v| v.upper.clone()).collect();
    for (id, lo, up) in overrides {
        lower[*id] = Some(lo.clone());
        upper[*id] = Some(up.clone());
    }
    // Slack bounds are filled in per row below.
    lower.resize(n + m, None);
    upper.resize(n + m, None);

    // Structural + slack columns first; artificials appended as discovered.
    let total = n + m;
    let mut t = Tableau {
        rows: vec![vec![S::zero(); total]; m],
        lower,
        upper,
        value: vec![S::zero(); total],
        stat: vec![VStat::Resting; total],
        basis: vec![0; m],
        cost: vec![S::zero(); total],
    };

    for (i, c) in lp.constraints.iter().enumerate() {
        for (id, coef) in &c.coeffs {
            t.rows[i][*id] = t.rows[i][*id].clone() + coef.clone();
        }
        let s = n + i;
        t.rows[i][s] = S::one();
        let (slo, sup) = match c.cmp {
            Cmp::Le => (Some(S::zero()), None),
            Cmp::Ge => (None, Some(S::zero())),
            Cmp::Eq => (Some(S::zero()), Some(S::zero())),
        };
        t.lower[s] = slo;
        t.upper[s] = sup;
    }

    // Start every structural variable at its finite bound nearest zero.
    for j in 0..n {
        let (v, st) = start_point(&t.lower[j], &t.upper[j]);
        t.value[j] = v;
        t.stat[j] = st;
    }

    // Seed the basis: the slack absorbs the row residual when its bounds
    // allow, otherwise an artificial column carries it. Basic columns must
    // read +1 in their own row (the rest of the solver relies on that), so a
    // row with a negative leftover residual is negated before the artificial
    // goes in — scaling an equation does not change the system.
    let mut artificial = Vec::new();
    for (i, c) in lp.constraints.iter().enumerate() {
        let mut r = c.rhs.clone();
        for (id, coef) in &c.coeffs {
            r = r - coef.clone() * t.value[*id].clone();
        }
        let s = n + i;
        let fits = t.lower[s].as_ref().map_or(true, |lo| *lo <= r)
            && t.upper[s].as_ref().map_or(true, |up| r <= *up);
        if fits {
            t.value[s] = r;
            t.stat[s] = VStat::Basic(i);
            t.basis[i] = s;
        } else {
            // Slack bounds always include 0, so it rests there.
            t.value[s] = S::zero();
            t.stat[s] = match c.cmp {
                Cmp::Ge => VStat::AtUpper,
                _ => VStat::AtLower,
            };
            if r < S::zero() {
                for x in t.rows[i].iter_mut() {
                    if !x.is_zero() {
                        *x = -x.clone();
                    }
                }
                r = -r;
            }
            let a = t.push_column(Some(S::zero()), None);
            t.rows[i][a] = S::one();
            t.value[a] = r;
            t.stat[a] = VStat::Basic(i);
            t.basis[i] = a;
            artificial.push(a);
        }
    }

    let limit = if iteration_limit == 0 { 10_000 + 100 * (m + t.rows.first().map_or(n, Vec::len)) } else { iteration_limit };

    if !artificial.is_empty() {
        for &a in &artificial {
            t.cost[a] = S::one();
        }
        match t.run(limit)? {
            LoopExit::Optimal => {}
            LoopExit::IterationLimit => return Ok(Solution::verdict(Status::IterationLimit)),
            LoopExit::Unbounded => {
                return Err(Error::Internal("phase-one objective unbounded".into()))
            }
        }
        let mut infeas = S::zero();
        for &a in &artificial {
            infeas = infeas + t.value[a].clone();
        }
        if infeas > S::tol() * S::from_int(1 + m as i64) {
            return Ok(Solution::verdict(Status::Infeasible));
        }
        // Lock artificials at zero for phase two.
        for &a in &artificial {
            t.lower[a] = Some(S::zero());
            t.upper[a] = Some(S::zero());
            t.value[a] = S::zero();
        }
        for c in t.cost.iter_mut() {
            *c = S::zero();
        }
    }

    for (id, coef) in &lp.objective {
        t.cost[*id] = t.cost[*id].clone() + coef.clone();
    }
    match t.run(limit)? {
        LoopExit::Optimal => {}
        LoopExit::IterationLimit => return Ok(Solution::verdict(Status::IterationLimit)),
        LoopExit::Unbounded => return Ok(Solution::verdict(Status::Unbounded)),
    }

    let mut objective_value = S::zero();
    for (id, coef) in &lp.objective {
        objective_value = objective_value + coef.clone() * t.value[*id].clone();
    }
    Ok(Solution { status: Status::Optimal, assignment: t.value[..n].to_vec(), objective_value })
}

fn start_point<S: Scalar>(lower: &Option<S>, upper: &Option<S>) -> (S, VStat) {
    match (lower, upper) {
        (None, None) => (S::zero(), VStat::Resting),
        (Some(lo), None) => (lo.clone(), VStat::AtLower),
        (None, Some(up)) => (up.clone(), VStat::AtUpper),
        (Some(lo), Some(up)) => {
            if lo.abs() <= up.abs() {
                (lo.clone(), VStat::AtLower)
            } else {
                (up.clone(), VStat::AtUpper)
            }
        }
    }
}

enum LoopExit {
    Optimal,
    Unbounded,
    IterationLimit,
}

/// What stops the entering variable first.
enum Blocker<S> {
    /// A basic variable in this row hits the given bound after `t`.
    Row { t: S, row: usize, to_upper: bool },
    /// The entering variable reaches its own opposite bound after `t`.
    OwnBound { t: S },
    /// Nothing blocks: the objective is unbounded along this ray.
    None,
}

impl<S: Scalar> Tableau<S> {
    fn push_column(&mut self, lo: Option<S>, up: Option<S>) -> usize {
        for row in &mut self.rows {
            row.push(S::zero());
        }
        self.lower.push(lo);
        self.upper.push(up);
        self.value.push(S::zero());
        self.stat.push(VStat::Resting);
        self.cost.push(S::zero());
        self.lower.len() - 1
    }

    /// Reduced cost of column `j`: c_j minus the basic costs through the
    /// current (already inverted) tableau column.
    fn reduced_cost(&self, j: usize) -> S {
        let mut d = self.cost[j].clone();
        for (i, &b) in self.basis.iter().enumerate() {
            if !self.cost[b].is_zero() && !self.rows[i][j].is_zero() {
                d = d - self.cost[b].clone() * self.rows[i][j].clone();
            }
        }
        d
    }

    /// Bland entering choice: the lowest-indexed nonbasic column whose
    /// reduced cost improves the objective in its feasible direction.
    /// Returns (column, direction) where direction +1 increases the variable.
    fn entering(&self) -> Option<(usize, bool)> {
        let tol = S::tol();
        for j in 0..self.value.len() {
            match self.stat[j] {
                VStat::Basic(_) => continue,
                VStat::AtLower | VStat::AtUpper | VStat::Resting => {}
            }
            if let (Some(lo), Some(up)) = (&self.lower[j], &self.upper[j]) {
                if lo == up {
                    continue; // fixed column, never moves
                }
            }
            let d = self.reduced_cost(j);
            let can_increase = !matches!(self.stat[j], VStat::AtUpper);
            let can_decrease = !matches!(self.stat[j], VStat::AtLower);
            if can_increase && d < -tol.clone() {
                return Some((j, true));
            }
            if can_decrease && d > tol {
                return Some((j, false));
            }
        }
        None
    }

    /// Ratio test along column `j` moving in `increase` direction. Ties on
    /// the step length are broken toward the lowest basic variable index
    /// (Bland), and the entering variable's own opposite bound competes with
    /// the rows (preferring a bound flip on equal steps, which avoids a
    /// pivot).
    fn blocker(&self, j: usize, increase: bool) -> Blocker<S> {
        let tol = S::tol();
        let mut best: Option<(S, usize, bool)> = None;
        for (i, &b) in self.basis.iter().enumerate() {
            let coef = self.rows[i][j].clone();
            if coef.abs() <= tol {
                continue;
            }
            // Basic value moves at rate -coef per unit of increase.
            let rate = if increase { -coef } else { coef };
            let (limit, to_upper) = if rate > S::zero() {
                match &self.upper[b] {
                    Some(up) => ((up.clone() - self.value[b].clone()) / rate, true),
                    None => continue,
                }
            } else {
                match &self.lower[b] {
                    Some(lo) => ((self.value[b].clone() - lo.clone()) / -rate, false),
                    None => continue,
                }
            };
            let step = if limit < S::zero() { S::zero() } else { limit };
            let better = match &best {
                None => true,
                Some((bt, brow, _)) => {
                    step < *bt || (step == *bt && b < self.basis[*brow])
                }
            };
            if better {
                best = Some((step, i, to_upper));
            }
        }
        // Distance to the entering variable's opposite bound, if finite in
        // the travel direction (the variable sits exactly on one bound, so
        // the distance is the same either way).
        let own = match (&self.lower[j], &self.upper[j]) {
            (Some(lo), Some(up)) => Some(up.clone() - lo.clone()),
            _ => None,
        };
        match (own, best) {
            (Some(t_own), Some((t_row, _, _))) if t_own <= t_row => Blocker::OwnBound { t: t_own },
            (Some(t_own), None) => Blocker::OwnBound { t: t_own },
            (_, Some((t, row, to_upper))) => Blocker::Row { t, row, to_upper },
            (None, None) => Blocker::None,
        }
    }

    /// Add `step` (signed by direction) of column `j` to the current point,
    /// updating every basic value through the tableau column.
    fn shift(&mut self, j: usize, increase: bool, step: &S) {
        if step.is_zero() {
            return;
        }
        let signed = if increase { step.clone() } else { -step.clone() };
        for i in 0..self.basis.len() {
            let coef = self.rows[i][j].clone();
            if coef.is_zero() {
                continue;
            }
            let b = self.basis[i];
            self.value[b] = self.value[b].clone() - coef * signed.clone();
        }
        self.value[j] = self.value[j].clone() + signed;
    }

    fn pivot(&mut self, row: usize, j: usize) {
        let piv = self.rows[row][j].clone();
        let inv = S::one() / piv;
        for x in self.rows[row].iter_mut() {
            if !x.is_zero() {
                *x = x.clone() * inv.clone();
            }
        }
        let pivot_row = self.rows[row].clone();
        for (i, r) in self.rows.iter_mut().enumerate() {
            if i == row {
                continue;
            }
            let f = r[j].clone();
            if f.is_zero() {
                continue;
            }
            for (x, p) in r.iter_mut().zip(pivot_row.iter()) {
                if !p.is_zero() {
                    *x = x.clone() - f.clone() * p.clone();
                }
            }
        }
        self.basis[row] = j;
        self.stat[j] = VStat::Basic(row);
    }

    fn run(&mut self, limit: usize) -> Result<LoopExit> {
        for _ in 0..limit {
            let Some((j, increase)) = self.entering() else {
                return Ok(LoopExit::Optimal);
            };
            match self.blocker(j, increase) {
                Blocker::None => return Ok(LoopExit::Unbounded),
                Blocker::OwnBound { t } => {
                    self.shift(j, increase, &t);
                    if increase {
                        self.value[j] = self.upper[j].clone().ok_or_else(bad_flip)?;
                        self.stat[j] = VStat::AtUpper;
                    } else {
                        self.value[j] = self.lower[j].clone().ok_or_else(bad_flip)?;
                        self.stat[j] = VStat::AtLower;
                    }
                }
                Blocker::Row { t, row, to_upper } => {
                    self.shift(j, increase, &t);
                    let leaving = self.basis[row];
                    // Snap the leaving variable exactly onto its bound to
                    // stop floating-point drift from accumulating.
                    if to_upper {
                        self.value[leaving] = self.upper[leaving].clone().ok_or_else(bad_flip)?;
                        self.stat[leaving] = VStat::AtUpper;
                    } else {
                        self.value[leaving] = self.lower[leaving].clone().ok_or_else(bad_flip)?;
                        self.stat[leaving] = VStat::AtLower;
                    }
                    self.pivot(row, j);
                }
            }
        }
        Ok(LoopExit::IterationLimit)
    }
}

fn bad_flip() -> Error {
    Error::Internal("simplex moved a variable onto a bound it does not have".into())
}
