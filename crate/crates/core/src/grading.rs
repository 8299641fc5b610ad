//! Positive rational gradings compatible with a fixed basis.
//!
//! Every nonzero structure constant alpha_{ij}^k forces the linear equation
//! alpha_i + alpha_j = alpha_k on the unknown degrees. Exact Gaussian
//! elimination yields the solution space of the equality system; strict
//! positivity over that space is decided by Fourier-Motzkin elimination.
//! If a system of linear (in-)equalities with rational coefficients has a
//! real solution it has a rational one, so the procedure is complete.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::error::CoreError;
use crate::lie::LieAlgebraSpec;
use crate::linalg;
use crate::scalar::{s_int, Scalar};

#[derive(Clone, Debug)]
pub struct GradingProblem {
    pub algebra: LieAlgebraSpec,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Feasibility {
    Feasible,
    Infeasible,
}

#[derive(Clone, Debug)]
pub struct GradingSolution {
    pub kind: Feasibility,
    /// Canonical positive integer degrees when feasible: minimal maximum
    /// degree, lexicographically smallest tie-break, coprime.
    pub degrees: Option<Vec<u32>>,
    /// Rational basis of the solution space of the equality system.
    pub kernel_basis: Vec<Vec<Scalar>>,
    /// One rational solution of the equality system (positive when feasible).
    pub particular: Vec<Scalar>,
}

impl GradingProblem {
    pub fn new(algebra: LieAlgebraSpec) -> Self {
        GradingProblem { algebra }
    }

    /// The constraint triples (i, j, k), zero-based: alpha_i + alpha_j = alpha_k.
    pub fn constraints(&self) -> Vec<[usize; 3]> {
        let mut out = Vec::new();
        for (&(i, j), targets) in &self.algebra.brackets {
            for (k, _) in targets {
                out.push([i, j, *k]);
            }
        }
        out
    }

    fn constraint_rows(&self) -> Vec<Vec<Scalar>> {
        let d = self.algebra.dim;
        self.constraints()
            .iter()
            .map(|&[i, j, k]| {
                let mut row = vec![Scalar::zero(); d];
                row[i] += s_int(1);
                row[j] += s_int(1);
                row[k] -= s_int(1);
                row
            })
            .collect()
    }

    /// Rational basis of the homogeneous solution space of the equality
    /// system (the elimination stage of the solver, exposed for testing).
    pub fn kernel(&self) -> Vec<Vec<Scalar>> {
        linalg::kernel_basis(self.constraint_rows(), self.algebra.dim)
    }
}

/// Decides strict feasibility of `rows * t > 0` (every row) by
/// Fourier-Motzkin elimination and returns a rational witness when feasible.
/// All rows are homogeneous; a surviving empty row reads `0 > 0`.
pub fn fourier_motzkin_strict(rows: Vec<Vec<Scalar>>, nvars: usize) -> Option<Vec<Scalar>> {
    fn normalize(mut row: Vec<Scalar>) -> Vec<Scalar> {
        if let Some(first) = row.iter().find(|x| !x.is_zero()) {
            let f = first.abs();
            for x in row.iter_mut() {
                *x /= &f;
            }
        }
        row
    }

    fn solve(rows: Vec<Vec<Scalar>>, nvars: usize) -> Option<Vec<Scalar>> {
        if nvars == 0 {
            // every remaining row is the false inequality 0 > 0
            return if rows.is_empty() { Some(vec![]) } else { None };
        }
        let v = nvars - 1;
        let mut zero_rows: Vec<Vec<Scalar>> = Vec::new();
        let mut lower: Vec<Vec<Scalar>> = Vec::new(); // coeff > 0
        let mut upper: Vec<Vec<Scalar>> = Vec::new(); // coeff < 0
        for row in rows {
            if row[v].is_zero() {
                if row[..v].iter().all(|x| x.is_zero()) {
                    return None; // 0 > 0
                }
                zero_rows.push(row[..v].to_vec());
            } else if row[v].is_positive() {
                lower.push(row);
            } else {
                upper.push(row);
            }
        }
        let mut reduced = zero_rows;
        for p in &lower {
            for n in &upper {
                // c_p * rest_n + (-c_n) * rest_p > 0
                let cp = &p[v];
                let cn_neg = -n[v].clone();
                let mut row: Vec<Scalar> = (0..v)
                    .map(|j| cp * &n[j] + &cn_neg * &p[j])
                    .collect();
                if row.iter().all(|x| x.is_zero()) {
                    return None;
                }
                row = normalize(row);
                if !reduced.contains(&row) {
                    reduced.push(row);
                }
            }
        }
        let sub = solve(reduced, v)?;
        // back-substitute a value for t_v between the bounds
        let eval_rest = |row: &[Scalar]| -> Scalar {
            (0..v).map(|j| &row[j] * &sub[j]).sum()
        };
        let lo = lower
            .iter()
            .map(|r| -eval_rest(r) / &r[v])
            .max();
        let hi = upper
            .iter()
            .map(|r| eval_rest(r) / -r[v].clone())
            .min();
        let t = match (lo, hi) {
            (Some(l), Some(h)) => (&l + &h) / s_int(2),
            (Some(l), None) => l + s_int(1),
            (None, Some(h)) => h - s_int(1),
            (None, None) => Scalar::zero(),
        };
        let mut point = sub;
        point.push(t);
        Some(point)
    }

    let rows = rows.into_iter().map(normalize).collect();
    solve(rows, nvars)
}

/// True iff all degrees are positive and every nonzero bracket satisfies
/// alpha_i + alpha_j = alpha_k.
pub fn verify_grading(algebra: &LieAlgebraSpec, degrees: &[u32]) -> bool {
    if degrees.len() != algebra.dim || degrees.iter().any(|&a| a == 0) {
        return false;
    }
    GradingProblem::new(algebra.clone())
        .constraints()
        .iter()
        .all(|&[i, j, k]| degrees[i] as u64 + degrees[j] as u64 == degrees[k] as u64)
}

/// Lexicographically smallest integer solution in {1..max}^d, or None.
fn lex_search(constraints: &[[usize; 3]], d: usize, max: u32) -> Option<Vec<u32>> {
    // constraints indexed by their largest variable, so each is checked as
    // soon as all three entries are assigned
    let mut by_last: Vec<Vec<[usize; 3]>> = vec![Vec::new(); d];
    for &c in constraints {
        let last = c[0].max(c[1]).max(c[2]);
        by_last[last].push(c);
    }
    let mut alpha = vec![0u32; d];

    fn forced_value(c: &[usize; 3], idx: usize, alpha: &[u32]) -> Option<i64> {
        let [i, j, k] = *c;
        let a = |v: usize| alpha[v] as i64;
        if k == idx && i != idx && j != idx {
            Some(a(i) + a(j))
        } else if i == idx && j != idx && k != idx {
            Some(a(k) - a(j))
        } else if j == idx && i != idx && k != idx {
            Some(a(k) - a(i))
        } else if i == idx && j == idx && k != idx {
            // 2 alpha_idx = alpha_k
            let t = a(k);
            if t % 2 == 0 {
                Some(t / 2)
            } else {
                Some(-1) // unreachable value forces a conflict
            }
        } else {
            None // constraint involves idx in several places with k == idx
        }
    }

    fn ok(c: &[usize; 3], alpha: &[u32]) -> bool {
        alpha[c[0]] as i64 + alpha[c[1]] as i64 == alpha[c[2]] as i64
    }

    fn dfs(
        idx: usize,
        d: usize,
        max: u32,
        alpha: &mut Vec<u32>,
        by_last: &Vec<Vec<[usize; 3]>>,
    ) -> bool {
        if idx == d {
            return true;
        }
        // intersect any values forced by constraints completed at idx
        let mut forced: Option<i64> = None;
        let mut contradictory = false;
        for c in &by_last[idx] {
            if let Some(v) = forced_value(c, idx, alpha) {
                match forced {
                    None => forced = Some(v),
                    Some(f) if f != v => contradictory = true,
                    _ => {}
                }
            }
        }
        if contradictory {
            return false;
        }
        let candidates: Vec<u32> = match forced {
            Some(v) if v >= 1 && v <= max as i64 => vec![v as u32],
            Some(_) => vec![],
            None => (1..=max).collect(),
        };
        for v in candidates {
            alpha[idx] = v;
            if by_last[idx].iter().all(|c| ok(c, alpha)) && dfs(idx + 1, d, max, alpha, by_last) {
                return true;
            }
        }
        alpha[idx] = 0;
        false
    }

    if dfs(0, d, max, &mut alpha, &by_last) {
        Some(alpha)
    } else {
        None
    }
}

/// Solves the grading feasibility problem. Infeasibility is a valid result,
/// not an error.
pub fn solve_grading(problem: &GradingProblem) -> Result<GradingSolution, CoreError> {
    let d = problem.algebra.dim;
    let kernel = problem.kernel();
    let zero = vec![Scalar::zero(); d];
    if kernel.is_empty() {
        return Ok(GradingSolution {
            kind: Feasibility::Infeasible,
            degrees: None,
            kernel_basis: kernel,
            particular: zero,
        });
    }

    // positivity: for each coordinate i, sum_j t_j * kernel[j][i] > 0
    let m = kernel.len();
    let pos_rows: Vec<Vec<Scalar>> = (0..d)
        .map(|i| (0..m).map(|j| kernel[j][i].clone()).collect())
        .collect();
    let Some(t) = fourier_motzkin_strict(pos_rows, m) else {
        return Ok(GradingSolution {
            kind: Feasibility::Infeasible,
            degrees: None,
            kernel_basis: kernel,
            particular: zero,
        });
    };

    // rational positive solution -> coprime positive integer vector
    let mut alpha: Vec<Scalar> = (0..d)
        .map(|i| (0..m).map(|j| &t[j] * &kernel[j][i]).sum())
        .collect();
    let lcm_den = alpha
        .iter()
        .fold(BigInt::one(), |acc, x| acc.lcm(x.denom()));
    for x in alpha.iter_mut() {
        *x *= Scalar::from_integer(lcm_den.clone());
    }
    let mut ints: Vec<BigInt> = alpha.iter().map(|x| x.numer().clone()).collect();
    let gcd = ints.iter().fold(BigInt::zero(), |acc, x| acc.gcd(x));
    if !gcd.is_zero() && !gcd.is_one() {
        for x in ints.iter_mut() {
            *x /= &gcd;
        }
    }
    debug_assert!(ints.iter().all(|x| x.is_positive()));
    let bound: u32 = ints
        .iter()
        .map(|x| u32::try_from(x.clone()).unwrap_or(u32::MAX))
        .max()
        .unwrap();

    // canonicalize: minimize the maximum degree, then lexicographically
    // smallest; the scaled witness bounds the search
    let constraints = problem.constraints();
    let mut canonical = None;
    for max in 1..=bound {
        if let Some(sol) = lex_search(&constraints, d, max) {
            canonical = Some(sol);
            break;
        }
    }
    let degrees = canonical.expect("feasible system must have an integer point below the witness");
    debug_assert!(verify_grading(&problem.algebra, &degrees));
    let particular: Vec<Scalar> = degrees.iter().map(|&x| s_int(x as i64)).collect();

    Ok(GradingSolution {
        kind: Feasibility::Feasible,
        degrees: Some(degrees),
        kernel_basis: kernel,
        particular,
    })
}
