//! Branch-and-bound over binary variables.
//!
//! Nodes carry bound overrides that pin a subset of binaries to 0 or 1; each
//! node's LP relaxation is solved by the bounded simplex. Exploration is
//! best-bound (the node with the smallest relaxation objective first, FIFO on
//! ties), branching picks the binary whose relaxed value is closest to 1/2
//! (lowest index on ties), and a node is pruned as soon as its bound cannot
//! beat the incumbent. Everything is deterministic.

use super::{simplex, LinearProgram, Simplex, Solution, Status, VarKind};
use crate::error::Result;
use crate::scalar::{smin, Scalar};

use std::cmp::Ordering;
use std::collections::BinaryHeap;

struct Node<S> {
    bound: S,
    seq: u64,
    fixes: Vec<(usize, S, S)>,
    relaxed: Vec<S>,
}

impl<S: Scalar> PartialEq for Node<S> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl<S: Scalar> Eq for Node<S> {}

impl<S: Scalar> Ord for Node<S> {
    fn cmp(&self, other: &Self) -> Ordering {
        // BinaryHeap is a max-heap; reverse so the smallest bound pops first,
        // then oldest node (smallest sequence number) on equal bounds.
        let by_bound = self
            .bound
            .partial_cmp(&other.bound)
            .expect("node bounds are finite");
        by_bound.reverse().then(other.seq.cmp(&self.seq))
    }
}
impl<S: Scalar> PartialOrd for Node<S> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

pub(crate) fn solve<S: Scalar>(lp: &LinearProgram<S>, cfg: &Simplex) -> Result<Solution<S>> {
    let binaries: Vec<usize> = lp
        .variables
        .iter()
        .enumerate()
        .filter(|(_, v)| v.kind == VarKind::Binary)
        .map(|(i, _)| i)
        .collect();
    if binaries.is_empty() {
        return simplex::solve(lp, &[], cfg.iteration_limit);
    }

    let mut heap: BinaryHeap<Node<S>> = BinaryHeap::new();
    let mut seq: u64 = 0;
    let mut incumbent: Option<Solution<S>> = None;
    let mut expanded: usize = 0;

    let root = simplex::solve(lp, &[], cfg.iteration_limit)?;
    match root.status {
        Status::Optimal => {}
        // With all binaries boxed in [0,1], an unbounded relaxation means the
        // continuous part recedes regardless of how binaries are fixed.
        Status::Unbounded => return Ok(Solution::verdict(Status::Unbounded)),
        Status::Infeasible => return Ok(Solution::verdict(Status::Infeasible)),
        Status::IterationLimit => return Ok(Solution::verdict(Status::IterationLimit)),
    }
    heap.push(Node {
        bound: root.objective_value.clone(),
        seq,
        fixes: Vec::new(),
        relaxed: root.assignment,
    });

    while let Some(node) = heap.pop() {
        if let Some(best) = &incumbent {
            // Best-bound order: once the tightest bound cannot improve on
            // the incumbent, no open node can.
            if node.bound >= best.objective_value {
                break;
            }
        }
        expanded += 1;
        if expanded > cfg.node_limit {
            return Ok(match incumbent {
                Some(best) => Solution { status: Status::IterationLimit, ..best },
                None => Solution::verdict(Status::IterationLimit),
            });
        }

        match fractional_binary(&binaries, &node.relaxed) {
            None => {
                // Integral within tolerance. Under exact arithmetic the
                // assignment is already clean; under floats, snap binaries
                // and re-solve the continuous part against the snapped
                // values so the reported point satisfies the rows.
                let candidate = integral_candidate(lp, cfg, &node)?;
                if let Some(c) = candidate {
                    let better = match &incumbent {
                        None => true,
                        Some(best) => c.objective_value < best.objective_value,
                    };
                    if better {
                        incumbent = Some(c);
                    }
                }
            }
            Some(var) => {
                for bit in 0..2u8 {
                    let val = S::from_int(bit as i64);
                    let mut fixes = node.fixes.clone();
                    fixes.push((var, val.clone(), val));
                    let child = simplex::solve(lp, &fixes, cfg.iteration_limit)?;
                    match child.status {
                        Status::Optimal => {
                            let dominated = incumbent
                                .as_ref()
                                .map(|best| child.objective_value >= best.objective_value)
                                .unwrap_or(false);
                            if !dominated {
                                seq += 1;
                                heap.push(Node {
                                    bound: child.objective_value.clone(),
                                    seq,
                                    fixes,
                                    relaxed: child.assignment,
                                });
                            }
                        }
                        Status::Infeasible => {}
                        Status::Unbounded | Status::IterationLimit => {
                            return Ok(Solution::verdict(Status::IterationLimit));
                        }
                    }
                }
            }
        }
    }

    Ok(match incumbent {
        Some(best) => best,
        None => Solution::verdict(Status::Infeasible),
    })
}

/// The binary whose relaxed value sits farthest inside (0, 1) — i.e. closest
/// to 1/2 — or `None` when all are integral within tolerance. Ties pick the
/// lowest variable index.
fn fractional_binary<S: Scalar>(binaries: &[usize], relaxed: &[S]) -> Option<usize> {
    let tol = S::tol();
    let half = S::ratio(1, 2);
    let mut best: Option<(S, usize)> = None;
    for &b in binaries {
        let v = relaxed[b].clone();
        let dist_int = smin(v.clone().abs(), (S::from_int(1) - v.clone()).abs());
        if dist_int <= tol {
            continue;
        }
        let from_half = (v - half.clone()).abs();
        match &best {
            Some((bd, _)) if *bd <= from_half => {}
            _ => best = Some((from_half, b)),
        }
    }
    best.map(|(_, b)| b)
}

/// Turn a relaxation solution with (near-)integral binaries into a clean
/// incumbent: binaries snapped to exact 0/1 and, if snapping moved anything,
/// the continuous variables re-optimized with the binaries pinned.
fn integral_candidate<S: Scalar>(
    lp: &LinearProgram<S>,
    cfg: &Simplex,
    node: &Node<S>,
) -> Result<Option<Solution<S>>> {
    let mut fixes = node.fixes.clone();
    let mut moved = false;
    for (i, v) in lp.variables.iter().enumerate() {
        if v.kind != VarKind::Binary {
            continue;
        }
        if fixes.iter().any(|(id, _, _)| *id == i) {
            continue;
        }
        let rounded = if node.relaxed[i] < S::ratio(1, 2) { S::zero() } else { S::from_int(1) };
        if rounded != node.relaxed[i] {
            moved = true;
        }
        fixes.push((i, rounded.clone(), rounded));
    }
    if !moved {
        return Ok(Some(Solution {
            status: Status::Optimal,
            assignment: node.relaxed.clone(),
            objective_value: objective_of(lp, &node.relaxed),
        }));
    }
    let fixed = simplex::solve(lp, &fixes, cfg.iteration_limit)?;
    Ok(match fixed.status {
        Status::Optimal => Some(fixed),
        _ => None,
    })
}

fn objective_of<S: Scalar>(lp: &LinearProgram<S>, assignment: &[S]) -> S {
    let mut total = S::zero();
    for (id, c) in &lp.objective {
        total = total + c.clone() * assignment[*id].clone();
    }
    total
}

#[cfg(test)]
mod tests {
    use super::super::{Cmp, LinearProgram, LpBackend, Simplex, Status};
    use crate::scalar::{Rational, Scalar};

    fn r(p: i64, q: i64) -> Rational {
        Rational::ratio(p, q)
    }

    /// Knapsack-style toy with a known optimum, checked against brute force
    /// over all binary patterns.
    #[test]
    fn small_knapsack_matches_enumeration() {
        // maximize 5a + 4b + 3c (minimize negation) s.t. 2a + 3b + c <= 4.
        let mut lp = LinearProgram::<Rational>::new();
        let a = lp.add_binary();
        let b = lp.add_binary();
        let c = lp.add_binary();
        lp.constrain(vec![(a, r(2, 1)), (b, r(3, 1)), (c, r(1, 1))], Cmp::Le, r(4, 1));
        lp.set_objective(vec![(a, r(-5, 1)), (b, r(-4, 1)), (c, r(-3, 1))]);
        let sol = Simplex::default().solve_milp(&lp).unwrap();
        assert_eq!(sol.status, Status::Optimal);

        let mut best = r(0, 1);
        for pat in 0..8u8 {
            let (va, vb, vc) = (pat & 1, (pat >> 1) & 1, (pat >> 2) & 1);
            if 2 * va + 3 * vb + vc <= 4 {
                let value = r(-(5 * va as i64 + 4 * vb as i64 + 3 * vc as i64), 1);
                if value < best {
                    best = value;
                }
            }
        }
        assert_eq!(sol.objective_value, best); // a + c: -8
        assert_eq!(sol.assignment[a], r(1, 1));
        assert_eq!(sol.assignment[b], r(0, 1));
        assert_eq!(sol.assignment[c], r(1, 1));
    }

    /// Continuous variables coupled to binaries through indicator-style rows:
    /// z_p can move only where its gate is open, and gates are what's counted.
    #[test]
    fn gated_moves_need_two_gates() {
        // z1 + z2 = -7/8, -z1 + 2 z2 <= -1/2, |z_p| <= 1/2 gated by m_p:
        // z_p - (1/2) m_p <= 0 and z_p + (1/2) m_p >= 0. Minimize m1 + m2.
        // Any feasible z needs both coordinates nonzero, so the optimum is 2.
        let mut lp = LinearProgram::<Rational>::new();
        let z1 = lp.add_var(Some(r(-1, 2)), Some(r(1, 2)));
        let z2 = lp.add_var(Some(r(-1, 2)), Some(r(1, 2)));
        let m1 = lp.add_binary();
        let m2 = lp.add_binary();
        lp.constrain(vec![(z1, r(1, 1)), (z2, r(1, 1))], Cmp::Eq, r(-7, 8));
        lp.constrain(vec![(z1, r(-1, 1)), (z2, r(2, 1))], Cmp::Le, r(-1, 2));
        lp.constrain(vec![(z1, r(1, 1)), (m1, r(-1, 2))], Cmp::Le, r(0, 1));
        lp.constrain(vec![(z1, r(1, 1)), (m1, r(1, 2))], Cmp::Ge, r(0, 1));
        lp.constrain(vec![(z2, r(1, 1)), (m2, r(-1, 2))], Cmp::Le, r(0, 1));
        lp.constrain(vec![(z2, r(1, 1)), (m2, r(1, 2))], Cmp::Ge, r(0, 1));
        lp.set_objective(vec![(m1, r(1, 1)), (m2, r(1, 1))]);
        let sol = Simplex::default().solve_milp(&lp).unwrap();
        assert_eq!(sol.status, Status::Optimal);
        assert_eq!(sol.objective_value, r(2, 1));

        // Brute-force oracle over the four gate patterns: a closed gate pins
        // z_p = 0; with z2 = 0, z1 = -7/8 violates |z1| <= 1/2; with z1 = 0,
        // z2 = -7/8 likewise; with both closed the sum row fails. Only both
        // gates open admits a solution (e.g. z = (-3/8, -1/2)).
        let feasible = |g1: bool, g2: bool| -> bool {
            // z must satisfy z1 + z2 = -7/8 with z_p = 0 where the gate is
            // closed and |z_p| <= 1/2 where open; check the corner reachable.
            match (g1, g2) {
                (false, false) => false,
                (false, true) | (true, false) => false, // single coord can't reach -7/8
                (true, true) => true,
            }
        };
        let mut best: Option<i64> = None;
        for pat in 0..4u8 {
            let (g1, g2) = (pat & 1 == 1, pat & 2 == 2);
            if feasible(g1, g2) {
                let count = g1 as i64 + g2 as i64;
                if best.map_or(true, |b| count < b) {
                    best = Some(count);
                }
            }
        }
        assert_eq!(sol.objective_value, r(best.unwrap(), 1));
    }

    /// A row that forces a binary to 1 through implication.
    #[test]
    fn forcing_row_pins_binary() {
        // x >= 3/4 and x <= m: m must be 1. Minimize m.
        let mut lp = LinearProgram::<Rational>::new();
        let x = lp.add_var(Some(r(0, 1)), Some(r(1, 1)));
        let m = lp.add_binary();
        lp.constrain(vec![(x, r(1, 1))], Cmp::Ge, r(3, 4));
        lp.constrain(vec![(x, r(1, 1)), (m, r(-1, 1))], Cmp::Le, r(0, 1));
        lp.set_objective(vec![(m, r(1, 1))]);
        let sol = Simplex::default().solve_milp(&lp).unwrap();
        assert_eq!(sol.status, Status::Optimal);
        assert_eq!(sol.assignment[m], r(1, 1));
        assert_eq!(sol.objective_value, r(1, 1));
    }

    /// All binaries can rest at zero when nothing forces them up.
    #[test]
    fn idle_binaries_stay_zero() {
        let mut lp = LinearProgram::<Rational>::new();
        let m1 = lp.add_binary();
        let m2 = lp.add_binary();
        lp.constrain(vec![(m1, r(1, 1)), (m2, r(1, 1))], Cmp::Le, r(2, 1));
        lp.set_objective(vec![(m1, r(1, 1)), (m2, r(1, 1))]);
        let sol = Simplex::default().solve_milp(&lp).unwrap();
        assert_eq!(sol.status, Status::Optimal);
        assert_eq!(sol.assignment, vec![r(0, 1), r(0, 1)]);
        assert_eq!(sol.objective_value, r(0, 1));
    }

    /// Infeasible integer program (feasible relaxation) is detected.
    #[test]
    fn fractional_only_feasibility_is_infeasible() {
        // m1 + m2 = 1 and m1 = m2 has only the fractional solution 1/2, 1/2.
        let mut lp = LinearProgram::<Rational>::new();
        let m1 = lp.add_binary();
        let m2 = lp.add_binary();
        lp.constrain(vec![(m1, r(1, 1)), (m2, r(1, 1))], Cmp::Eq, r(1, 1));
        lp.constrain(vec![(m1, r(1, 1)), (m2, r(-1, 1))], Cmp::Eq, r(0, 1));
        lp.set_objective(vec![(m1, r(1, 1))]);
        let sol = Simplex::default().solve_milp(&lp).unwrap();
        assert_eq!(sol.status, Status::Infeasible);
    }

    /// Float arithmetic lands on exact 0/1 binaries after snapping.
    #[test]
    fn float_binaries_snap_clean() {
        let mut lp = LinearProgram::<f64>::new();
        let x = lp.add_var(Some(0.0), Some(10.0));
        let m = lp.add_binary();
        lp.constrain(vec![(x, 1.0)], Cmp::Ge, 2.5);
        lp.constrain(vec![(x, 1.0), (m, -10.0)], Cmp::Le, 0.0);
        lp.set_objective(vec![(x, 1.0), (m, 5.0)]);
        let sol = Simplex::default().solve_milp(&lp).unwrap();
        assert_eq!(sol.status, Status::Optimal);
        assert_eq!(sol.assignment[m], 1.0);
        assert!((sol.assignment[x] - 2.5).abs() < 1e-9);
        assert!((sol.objective_value - 7.5).abs() < 1e-9);
    }

    /// Node cap reports IterationLimit rather than hanging. The knapsack
    /// relaxation is fractional at the root, so the search must branch, and
    /// a one-node budget runs out before any leaf is reached.
    #[test]
    fn node_cap_reports_limit() {
        let mut lp = LinearProgram::<Rational>::new();
        let a = lp.add_binary();
        let b = lp.add_binary();
        let c = lp.add_binary();
        lp.constrain(vec![(a, r(2, 1)), (b, r(3, 1)), (c, r(1, 1))], Cmp::Le, r(4, 1));
        lp.set_objective(vec![(a, r(-5, 1)), (b, r(-4, 1)), (c, r(-3, 1))]);
        let solver = Simplex { node_limit: 1, ..Simplex::default() };
        let sol = solver.solve_milp(&lp).unwrap();
        assert_eq!(sol.status, Status::IterationLimit);
    }
}
