//! Linear and mixed-integer programming types plus the bundled solver.
//!
//! The solver is deliberately simple: a dense bounded-variable simplex with
//! Bland's rule (two-phase, so no big-M constants) and a best-bound
//! branch-and-bound for binaries. It is deterministic, exact under rational
//! arithmetic, and adequate at desk scale — a few thousand variables. The
//! patch engine only depends on the [`LpBackend`] trait, so an industrial
//! solver can be swapped in behind the same interface.
//!
//! Objectives are always **minimized**.

mod branch;
mod simplex;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Comparison in a linear constraint (non-strict only; the callers encode
/// strict goals by adding a margin to the right-hand side).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cmp {
    Le,
    Eq,
    Ge,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarKind {
    Continuous,
    Binary,
}

/// One decision variable. `None` bounds mean unbounded on that side.
#[derive(Debug, Clone)]
pub struct Variable<S> {
    pub lower: Option<S>,
    pub upper: Option<S>,
    pub kind: VarKind,
    pub name: Option<String>,
}

/// `coeffs . x CMP rhs`, with sparse coefficients `(variable id, value)`.
#[derive(Debug, Clone)]
pub struct LinConstraint<S> {
    pub coeffs: Vec<(usize, S)>,
    pub cmp: Cmp,
    pub rhs: S,
}

/// A linear (or, with binary variables, mixed-integer) program.
#[derive(Debug, Clone, Default)]
pub struct LinearProgram<S> {
    pub variables: Vec<Variable<S>>,
    pub constraints: Vec<LinConstraint<S>>,
    /// Sparse objective to minimize.
    pub objective: Vec<(usize, S)>,
}

impl<S: Scalar> LinearProgram<S> {
    pub fn new() -> Self {
        LinearProgram { variables: Vec::new(), constraints: Vec::new(), objective: Vec::new() }
    }

    pub fn add_var(&mut self, lower: Option<S>, upper: Option<S>) -> usize {
        self.variables.push(Variable { lower, upper, kind: VarKind::Continuous, name: None });
        self.variables.len() - 1
    }

    pub fn add_named_var(
        &mut self,
        name: impl Into<String>,
        lower: Option<S>,
        upper: Option<S>,
    ) -> usize {
        let id = self.add_var(lower, upper);
        self.variables[id].name = Some(name.into());
        id
    }

    /// A 0/1 decision variable.
    pub fn add_binary(&mut self) -> usize {
        self.variables.push(Variable {
            lower: Some(S::zero()),
            upper: Some(S::from_int(1)),
            kind: VarKind::Binary,
            name: None,
        });
        self.variables.len() - 1
    }

    pub fn constrain(&mut self, coeffs: Vec<(usize, S)>, cmp: Cmp, rhs: S) {
        self.constraints.push(LinConstraint { coeffs, cmp, rhs });
    }

    pub fn set_objective(&mut self, objective: Vec<(usize, S)>) {
        self.objective = objective;
    }

    pub fn has_binaries(&self) -> bool {
        self.variables.iter().any(|v| v.kind == VarKind::Binary)
    }

    /// Structural validation: ids in range, finite numbers, coherent bounds,
    /// binaries confined to [0, 1].
    pub fn validate(&self) -> Result<()> {
        for (i, v) in self.variables.iter().enumerate() {
            for b in [&v.lower, &v.upper].into_iter().flatten() {
                if !b.is_finite_value() {
                    return Err(Error::NonFinite(format!("bound of variable {i}")));
                }
            }
            if let (Some(lo), Some(up)) = (&v.lower, &v.upper) {
                if lo > up {
                    return Err(Error::Shape(format!("variable {i} has lower > upper")));
                }
            }
            if v.kind == VarKind::Binary {
                let lo_ok = v.lower.as_ref().is_some_and(|lo| *lo >= S::zero());
                let up_ok = v.upper.as_ref().is_some_and(|up| *up <= S::from_int(1));
                if !lo_ok || !up_ok {
                    return Err(Error::Shape(format!("binary variable {i} must stay within [0,1]")));
                }
            }
        }
        let check_terms = |terms: &[(usize, S)], what: &str| -> Result<()> {
            for (id, c) in terms {
                if *id >= self.variables.len() {
                    return Err(Error::Index(format!("{what} references variable {id}")));
                }
                if !c.is_finite_value() {
                    return Err(Error::NonFinite(format!("{what} coefficient")));
                }
            }
            Ok(())
        };
        for (i, c) in self.constraints.iter().enumerate() {
            check_terms(&c.coeffs, &format!("constraint {i}"))?;
            if !c.rhs.is_finite_value() {
                return Err(Error::NonFinite(format!("constraint {i} rhs")));
            }
        }
        check_terms(&self.objective, "objective")?;
        Ok(())
    }

    fn var_name(&self, id: usize) -> String {
        match &self.variables[id].name {
            Some(n) => n.clone(),
            None => format!("x{id}"),
        }
    }

    /// Debug dump in the conventional LP text format (numbers rendered as
    /// decimals, so exactness is not preserved — this is for offline
    /// inspection, not round-tripping).
    pub fn to_lp_format(&self) -> String {
        use std::fmt::Write as _;
        let mut out = String::new();
        let term_string = |terms: &[(usize, S)]| -> String {
            if terms.is_empty() {
                return "0 x0".to_string();
            }
            let mut s = String::new();
            for (i, (id, c)) in terms.iter().enumerate() {
                let cf = c.to_f64();
                if i == 0 {
                    let _ = write!(s, "{} {}", cf, self.var_name(*id));
                } else if cf < 0.0 {
                    let _ = write!(s, " - {} {}", -cf, self.var_name(*id));
                } else {
                    let _ = write!(s, " + {} {}", cf, self.var_name(*id));
                }
            }
            s
        };
        writeln!(out, "Minimize").unwrap();
        writeln!(out, " obj: {}", term_string(&self.objective)).unwrap();
        writeln!(out, "Subject To").unwrap();
        for (i, c) in self.constraints.iter().enumerate() {
            let op = match c.cmp {
                Cmp::Le => "<=",
                Cmp::Eq => "=",
                Cmp::Ge => ">=",
            };
            writeln!(out, " c{i}: {} {op} {}", term_string(&c.coeffs), c.rhs.to_f64()).unwrap();
        }
        writeln!(out, "Bounds").unwrap();
        for (i, v) in self.variables.iter().enumerate() {
            let name = self.var_name(i);
            match (&v.lower, &v.upper) {
                (None, None) => writeln!(out, " {name} free").unwrap(),
                (Some(lo), None) => writeln!(out, " {} <= {name}", lo.to_f64()).unwrap(),
                (None, Some(up)) => {
                    writeln!(out, " -inf <= {name} <= {}", up.to_f64()).unwrap()
                }
                (Some(lo), Some(up)) => {
                    writeln!(out, " {} <= {name} <= {}", lo.to_f64(), up.to_f64()).unwrap()
                }
            }
        }
        if self.has_binaries() {
            writeln!(out, "Binaries").unwrap();
            for (i, v) in self.variables.iter().enumerate() {
                if v.kind == VarKind::Binary {
                    writeln!(out, " {}", self.var_name(i)).unwrap();
                }
            }
        }
        writeln!(out, "End").unwrap();
        out
    }
}

/// Solver verdict. `IterationLimit` covers any resource cap (pivot count,
/// node count); it is a "gave up", never a mathematical claim.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
}

/// Solver answer. `assignment` holds one value per variable when `status` is
/// `Optimal` (and the best feasible incumbent, when one exists, on
/// `IterationLimit`); otherwise it is empty.
#[derive(Debug, Clone, PartialEq)]
pub struct Solution<S> {
    pub status: Status,
    pub assignment: Vec<S>,
    pub objective_value: S,
}

impl<S: Scalar> Solution<S> {
    pub(crate) fn verdict(status: Status) -> Self {
        Solution { status, assignment: Vec::new(), objective_value: S::zero() }
    }

    pub fn is_optimal(&self) -> bool {
        self.status == Status::Optimal
    }
}

/// Abstract solve interface the patch engine talks to. Implement this to
/// substitute a different optimizer.
pub trait LpBackend<S: Scalar> {
    /// Solve a pure LP. Binary variables are rejected.
    fn solve_lp(&self, lp: &LinearProgram<S>) -> Result<Solution<S>>;

    /// Solve a program that may contain binary variables.
    fn solve_milp(&self, lp: &LinearProgram<S>) -> Result<Solution<S>>;
}

/// The bundled solver: bounded-variable two-phase simplex with Bland's rule,
/// plus best-bound branch-and-bound over binaries.
#[derive(Debug, Clone)]
pub struct Simplex {
    /// Pivot cap per LP solve; 0 means "scale with problem size".
    pub iteration_limit: usize,
    /// Branch-and-bound node cap.
    pub node_limit: usize,
}

impl Default for Simplex {
    fn default() -> Self {
        Simplex { iteration_limit: 0, node_limit: 200_000 }
    }
}

impl<S: Scalar> LpBackend<S> for Simplex {
    fn solve_lp(&self, lp: &LinearProgram<S>) -> Result<Solution<S>> {
        lp.validate()?;
        if lp.has_binaries() {
            return Err(Error::Internal("solve_lp called on a program with binaries".into()));
        }
        simplex::solve(lp, &[], self.iteration_limit)
    }

    fn solve_milp(&self, lp: &LinearProgram<S>) -> Result<Solution<S>> {
        lp.validate()?;
        branch::solve(lp, self)
    }
}
