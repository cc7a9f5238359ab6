//! Seeded random instances and brute-force oracles.
//!
//! Everything here exists to validate the rest of the crate from the
//! outside: networks and inputs drawn from a fixed-seed generator, plus two
//! slow-but-trustworthy optimizers — vertex enumeration over boxed linear
//! programs (exact Gaussian elimination over every potential active set) and
//! exhaustive binary-pattern search for mixed programs. They share no code
//! with the simplex, which is the point.

use crate::error::{Error, Result};
use crate::lp::{Cmp, LinearProgram, VarKind};
use crate::network::{Activation, Layer, Mat, Network};
use crate::scalar::{Rational, Scalar};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The deterministic generator used throughout the test suites.
pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A rational with numerator drawn from `[-span, span]` over the given
/// denominator — small exact values that keep hand-checking feasible.
pub fn random_rational(rng: &mut ChaCha8Rng, span: i64, denom: i64) -> Rational {
    Rational::ratio(rng.gen_range(-span..=span), denom)
}

/// Random layer widths: `layers` entries, each in `[min_width, max_width]`.
pub fn random_widths(
    rng: &mut ChaCha8Rng,
    layers: usize,
    min_width: usize,
    max_width: usize,
) -> Vec<usize> {
    (0..layers).map(|_| rng.gen_range(min_width..=max_width)).collect()
}

/// A fully-connected network with the given widths, rectified hidden layers,
/// and small rational weights and biases.
pub fn random_network(rng: &mut ChaCha8Rng, name: &str, widths: &[usize]) -> Result<Network<Rational>> {
    if widths.len() < 2 {
        return Err(Error::Shape("a network needs at least two layers".into()));
    }
    let mut layers = Vec::new();
    let mut edges = Vec::new();
    for (i, &w) in widths.iter().enumerate() {
        let activation =
            if i == 0 || i + 1 == widths.len() { Activation::Identity } else { Activation::Relu };
        let biases = if i == 0 {
            vec![Rational::from_int(0); w]
        } else {
            (0..w).map(|_| random_rational(rng, 8, 4)).collect()
        };
        layers.push(Layer { width: w, activation, biases });
        if i > 0 {
            let rows: Vec<Vec<Rational>> = (0..w)
                .map(|_| (0..widths[i - 1]).map(|_| random_rational(rng, 8, 4)).collect())
                .collect();
            edges.push(Mat::from_rows(rows)?);
        }
    }
    Network::new(name, layers, edges)
}

/// A random input vector with entries in `[-span/denom, span/denom]`.
pub fn random_input(rng: &mut ChaCha8Rng, width: usize, span: i64, denom: i64) -> Vec<Rational> {
    (0..width).map(|_| random_rational(rng, span, denom)).collect()
}

/// A random linear program whose variables are all finitely boxed (so its
/// feasible set, when nonempty, is a polytope with vertices — exactly the
/// precondition [`lp_oracle`] needs).
pub fn random_boxed_lp(rng: &mut ChaCha8Rng, vars: usize, rows: usize) -> LinearProgram<Rational> {
    let mut lp = LinearProgram::new();
    for _ in 0..vars {
        let a = random_rational(rng, 8, 2);
        let b = random_rational(rng, 8, 2);
        let (lo, up) = if a <= b { (a, b) } else { (b, a) };
        lp.add_var(Some(lo), Some(up));
    }
    for _ in 0..rows {
        let coeffs: Vec<(usize, Rational)> =
            (0..vars).map(|v| (v, random_rational(rng, 4, 2))).collect();
        let cmp = match rng.gen_range(0..6u8) {
            0 => Cmp::Eq, // equalities kept rarer: they often empty the box
            1 | 2 => Cmp::Ge,
            _ => Cmp::Le,
        };
        lp.constrain(coeffs, cmp, random_rational(rng, 6, 1));
    }
    lp.set_objective((0..vars).map(|v| (v, random_rational(rng, 5, 2))).collect());
    lp
}

/// Exact solve of a square rational system by Gaussian elimination; `None`
/// when the matrix is singular.
pub fn solve_square(mut a: Vec<Vec<Rational>>, mut b: Vec<Rational>) -> Option<Vec<Rational>> {
    let n = b.len();
    for (row, cols) in a.iter().enumerate() {
        debug_assert_eq!(cols.len(), n, "square system expected (row {row})");
    }
    let zero = Rational::from_int(0);
    for col in 0..n {
        let pivot_row = (col..n).find(|&r| a[r][col] != zero)?;
        a.swap(col, pivot_row);
        b.swap(col, pivot_row);
        let piv = a[col][col].clone();
        for r in 0..n {
            if r == col || a[r][col] == zero {
                continue;
            }
            let f = a[r][col].clone() / piv.clone();
            for c in col..n {
                let sub = f.clone() * a[col][c].clone();
                a[r][c] = a[r][c].clone() - sub;
            }
            let sub = f * b[col].clone();
            b[r] = b[r].clone() - sub;
        }
    }
    Some((0..n).map(|i| b[i].clone() / a[i][i].clone()).collect())
}

/// Dense row representation of every affine condition in the program: the
/// constraint rows plus both bounds of every variable.
fn condition_pool(lp: &LinearProgram<Rational>) -> Vec<(Vec<Rational>, Cmp, Rational)> {
    let n = lp.variables.len();
    let zero = Rational::from_int(0);
    let mut pool = Vec::new();
    for c in &lp.constraints {
        let mut row = vec![zero.clone(); n];
        for (id, coef) in &c.coeffs {
            row[*id] = row[*id].clone() + coef.clone();
        }
        pool.push((row, c.cmp, c.rhs.clone()));
    }
    for (i, v) in lp.variables.iter().enumerate() {
        let mut row = vec![zero.clone(); n];
        row[i] = Rational::from_int(1);
        if let Some(lo) = &v.lower {
            pool.push((row.clone(), Cmp::Ge, lo.clone()));
        }
        if let Some(up) = &v.upper {
            pool.push((row, Cmp::Le, up.clone()));
        }
    }
    pool
}

fn satisfies(pool: &[(Vec<Rational>, Cmp, Rational)], x: &[Rational]) -> bool {
    pool.iter().all(|(row, cmp, rhs)| {
        let mut lhs = Rational::from_int(0);
        for (c, v) in row.iter().zip(x) {
            lhs = lhs + c.clone() * v.clone();
        }
        match cmp {
            Cmp::Le => lhs <= *rhs,
            Cmp::Eq => lhs == *rhs,
            Cmp::Ge => lhs >= *rhs,
        }
    })
}

/// Visit every size-`k` index combination of `0..pool`.
fn for_each_combination(pool: usize, k: usize, mut visit: impl FnMut(&[usize])) {
    if k > pool {
        return;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        visit(&idx);
        // Advance the rightmost index that can still move.
        let mut i = k;
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            if idx[i] != i + pool - k {
                break;
            }
            if i == 0 {
                return;
            }
        }
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// Brute-force minimum of a boxed linear program by enumerating every
/// potential vertex: each choice of `n` conditions made active, solved
/// exactly, kept when it satisfies everything. Returns the optimum and one
/// argmin, or `None` when no feasible vertex exists (for boxed programs that
/// means infeasible). Exponential — test scale only.
pub fn lp_oracle(lp: &LinearProgram<Rational>) -> Result<Option<(Rational, Vec<Rational>)>> {
    lp.validate()?;
    let n = lp.variables.len();
    for v in &lp.variables {
        if v.lower.is_none() || v.upper.is_none() {
            return Err(Error::Shape("vertex enumeration needs every variable boxed".into()));
        }
    }
    let pool = condition_pool(lp);
    let mut best: Option<(Rational, Vec<Rational>)> = None;
    for_each_combination(pool.len(), n, |combo| {
        let a: Vec<Vec<Rational>> = combo.iter().map(|&i| pool[i].0.clone()).collect();
        let b: Vec<Rational> = combo.iter().map(|&i| pool[i].2.clone()).collect();
        let Some(x) = solve_square(a, b) else { return };
        if !satisfies(&pool, &x) {
            return;
        }
        let mut obj = Rational::from_int(0);
        for (id, c) in &lp.objective {
            obj = obj + c.clone() * x[*id].clone();
        }
        match &best {
            Some((bo, _)) if *bo <= obj => {}
            _ => best = Some((obj, x)),
        }
    });
    Ok(best)
}

/// Brute-force minimum of a boxed program with binaries: every 0/1 pattern
/// is substituted into the program and the continuous remainder goes through
/// [`lp_oracle`]. Substituting (rather than pinning bounds) keeps the vertex
/// enumeration over the continuous variables only, so ten binaries cost a
/// thousand small enumerations instead of one astronomically large one.
pub fn milp_oracle(lp: &LinearProgram<Rational>) -> Result<Option<Rational>> {
    lp.validate()?;
    let binaries: Vec<usize> = lp
        .variables
        .iter()
        .enumerate()
        .filter(|(_, v)| v.kind == VarKind::Binary)
        .map(|(i, _)| i)
        .collect();
    if binaries.len() > 16 {
        return Err(Error::Shape("binary pattern enumeration capped at 16".into()));
    }
    // Old id -> id in the reduced, continuous-only program.
    let mut remap = vec![usize::MAX; lp.variables.len()];
    let mut reduced_vars = Vec::new();
    for (i, v) in lp.variables.iter().enumerate() {
        if v.kind != VarKind::Binary {
            remap[i] = reduced_vars.len();
            reduced_vars.push(v.clone());
        }
    }
    let zero = Rational::from_int(0);
    let mut best: Option<Rational> = None;
    for pattern in 0..(1u32 << binaries.len()) {
        let bit = |id: usize| -> Rational {
            let pos = binaries.iter().position(|&b| b == id).unwrap();
            Rational::from_int(((pattern >> pos) & 1) as i64)
        };
        let mut reduced = LinearProgram::new();
        reduced.variables = reduced_vars.clone();
        let mut pattern_feasible = true;
        for c in &lp.constraints {
            let mut coeffs = Vec::new();
            let mut rhs = c.rhs.clone();
            for (id, coef) in &c.coeffs {
                if remap[*id] == usize::MAX {
                    rhs = rhs - coef.clone() * bit(*id);
                } else {
                    coeffs.push((remap[*id], coef.clone()));
                }
            }
            if coeffs.is_empty() {
                // Fully substituted row: a plain 0-vs-rhs check.
                let ok = match c.cmp {
                    Cmp::Le => zero <= rhs,
                    Cmp::Eq => zero == rhs,
                    Cmp::Ge => zero >= rhs,
                };
                if !ok {
                    pattern_feasible = false;
                    break;
                }
            } else {
                reduced.constrain(coeffs, c.cmp, rhs);
            }
        }
        if !pattern_feasible {
            continue;
        }
        let mut constant = Rational::from_int(0);
        let mut objective = Vec::new();
        for (id, coef) in &lp.objective {
            if remap[*id] == usize::MAX {
                constant = constant + coef.clone() * bit(*id);
            } else {
                objective.push((remap[*id], coef.clone()));
            }
        }
        reduced.set_objective(objective);
        if let Some((obj, _)) = lp_oracle(&reduced)? {
            let total = obj + constant;
            match &best {
                Some(bo) if *bo <= total => {}
                _ => best = Some(total),
            }
        }
    }
    Ok(best)
}
