//! Lie algebras given by rational structure constants.

use std::collections::BTreeMap;

use num_traits::Zero;

use crate::error::CoreError;
use crate::linalg;
use crate::scalar::{format_scalar, s_frac, s_int, Scalar};

/// A finite-dimensional rational Lie algebra presented by structure
/// constants on a fixed basis X_1..X_d: for i < j,
/// `[X_i, X_j] = sum_k alpha_{ij}^k X_k`. Unlisted brackets are zero;
/// antisymmetry is implied.
#[derive(Clone, Debug, PartialEq)]
pub struct LieAlgebraSpec {
    pub dim: usize,
    /// (i, j) with i < j, zero-based -> sparse list of (k, alpha) with alpha != 0
    pub brackets: BTreeMap<(usize, usize), Vec<(usize, Scalar)>>,
}

impl LieAlgebraSpec {
    pub fn new(dim: usize) -> Self {
        LieAlgebraSpec {
            dim,
            brackets: BTreeMap::new(),
        }
    }

    /// Adds `[X_i, X_j] += c X_k` (1-based indices, i != j).
    pub fn add_bracket(&mut self, i: usize, j: usize, k: usize, c: Scalar) {
        assert!(i >= 1 && j >= 1 && k >= 1 && i <= self.dim && j <= self.dim && k <= self.dim);
        assert!(i != j, "bracket [X_i, X_i] is zero");
        if c.is_zero() {
            return;
        }
        let (i0, j0, c) = if i < j { (i - 1, j - 1, c) } else { (j - 1, i - 1, -c) };
        let entry = self.brackets.entry((i0, j0)).or_default();
        if let Some(pos) = entry.iter().position(|(t, _)| *t == k - 1) {
            entry[pos].1 += c;
            if entry[pos].1.is_zero() {
                entry.remove(pos);
            }
        } else {
            entry.push((k - 1, c));
            entry.sort_by_key(|(t, _)| *t);
        }
        if entry.is_empty() {
            self.brackets.remove(&(i0, j0));
        }
    }

    /// Bracket of two coordinate vectors, as a coordinate vector.
    pub fn bracket(&self, u: &[Scalar], v: &[Scalar]) -> Vec<Scalar> {
        assert_eq!(u.len(), self.dim);
        assert_eq!(v.len(), self.dim);
        let mut out = vec![Scalar::zero(); self.dim];
        for (&(i, j), targets) in &self.brackets {
            // u_i v_j - u_j v_i multiplies [X_i, X_j]
            let c = &u[i] * &v[j] - &u[j] * &v[i];
            if c.is_zero() {
                continue;
            }
            for (k, alpha) in targets {
                out[*k] += &c * alpha;
            }
        }
        out
    }

    /// Checks the Jacobi identity exactly by expanding all basis triples.
    pub fn check_jacobi(&self) -> Result<(), CoreError> {
        let d = self.dim;
        let basis = |i: usize| -> Vec<Scalar> {
            let mut v = vec![Scalar::zero(); d];
            v[i] = s_int(1);
            v
        };
        for i in 0..d {
            for j in (i + 1)..d {
                for k in (j + 1)..d {
                    let xi = basis(i);
                    let xj = basis(j);
                    let xk = basis(k);
                    let mut total = self.bracket(&self.bracket(&xi, &xj), &xk);
                    for (idx, t) in self.bracket(&self.bracket(&xj, &xk), &xi).into_iter().enumerate() {
                        total[idx] += t;
                    }
                    for (idx, t) in self.bracket(&self.bracket(&xk, &xi), &xj).into_iter().enumerate() {
                        total[idx] += t;
                    }
                    if total.iter().any(|x| !x.is_zero()) {
                        return Err(CoreError::Invalid(format!(
                            "Jacobi identity fails on basis triple (X{}, X{}, X{}): residue ({})",
                            i + 1,
                            j + 1,
                            k + 1,
                            total.iter().map(format_scalar).collect::<Vec<_>>().join(", ")
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// Dimensions of the lower central series L^0 = g, L^{k+1} = [g, L^k],
    /// until it vanishes.
    pub fn lower_central_series(&self) -> Vec<usize> {
        let d = self.dim;
        let mut dims = vec![d];
        // current: basis of L^k as row vectors
        let mut current: Vec<Vec<Scalar>> = (0..d)
            .map(|i| {
                let mut v = vec![Scalar::zero(); d];
                v[i] = s_int(1);
                v
            })
            .collect();
        loop {
            let mut next: Vec<Vec<Scalar>> = Vec::new();
            for i in 0..d {
                let mut xi = vec![Scalar::zero(); d];
                xi[i] = s_int(1);
                for w in &current {
                    let b = self.bracket(&xi, w);
                    if b.iter().any(|x| !x.is_zero()) {
                        next.push(b);
                    }
                }
            }
            let mut mat = next.clone();
            linalg::rref(&mut mat);
            let dim_next = mat.len();
            dims.push(dim_next);
            if dim_next == 0 {
                break;
            }
            if dims.len() > d + 1 {
                // series does not terminate: not nilpotent
                break;
            }
            current = mat;
        }
        dims
    }

    /// Nilpotency step s (least s with L^s = 0), or an error if the series
    /// does not terminate within d steps.
    pub fn nilpotency_step(&self) -> Result<usize, CoreError> {
        let dims = self.lower_central_series();
        if *dims.last().unwrap() != 0 {
            return Err(CoreError::Invalid(
                "Lie algebra is not nilpotent: lower central series does not terminate".into(),
            ));
        }
        Ok(dims.len() - 1)
    }

    /// Heisenberg algebra: [X1, X2] = X3.
    pub fn heisenberg() -> Self {
        let mut a = LieAlgebraSpec::new(3);
        a.add_bracket(1, 2, 3, s_int(1));
        a
    }

    /// The one-parameter family 147E: [X1,X2]=X4, [X1,X3]=-X6, [X1,X5]=-X7,
    /// [X2,X3]=X5, [X2,X6]=mu X7, [X3,X4]=(1-mu) X7.
    pub fn family_147e(mu: Scalar) -> Self {
        let mut a = LieAlgebraSpec::new(7);
        a.add_bracket(1, 2, 4, s_int(1));
        a.add_bracket(1, 3, 6, s_int(-1));
        a.add_bracket(1, 5, 7, s_int(-1));
        a.add_bracket(2, 3, 5, s_int(1));
        a.add_bracket(2, 6, 7, mu.clone());
        a.add_bracket(3, 4, 7, s_int(1) - mu);
        a
    }

    /// The algebra 257G: [X1,X2]=X3, [X1,X3]=X6, [X1,X5]=X7, [X2,X4]=X7,
    /// [X4,X5]=X6.
    pub fn algebra_257g() -> Self {
        let mut a = LieAlgebraSpec::new(7);
        a.add_bracket(1, 2, 3, s_int(1));
        a.add_bracket(1, 3, 6, s_int(1));
        a.add_bracket(1, 5, 7, s_int(1));
        a.add_bracket(2, 4, 7, s_int(1));
        a.add_bracket(4, 5, 6, s_int(1));
        a
    }

    /// 4-dimensional 3-step filiform algebra: [X1,X2]=X3, [X1,X3]=X4.
    /// Used as a small higher-step test case.
    pub fn filiform4() -> Self {
        let mut a = LieAlgebraSpec::new(4);
        a.add_bracket(1, 2, 3, s_int(1));
        a.add_bracket(1, 3, 4, s_int(1));
        a
    }
}

/// Default rational parameter used by the bundled G_mu data.
pub fn default_mu() -> Scalar {
    s_frac(1, 2)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn heisenberg_series() {
        let a = LieAlgebraSpec::heisenberg();
        a.check_jacobi().unwrap();
        assert_eq!(a.lower_central_series(), vec![3, 1, 0]);
        assert_eq!(a.nilpotency_step().unwrap(), 2);
    }

    #[test]
    fn family_147e_is_three_step() {
        let a = LieAlgebraSpec::family_147e(default_mu());
        a.check_jacobi().unwrap();
        assert_eq!(a.nilpotency_step().unwrap(), 3);
    }

    #[test]
    fn algebra_257g_jacobi_and_step() {
        let a = LieAlgebraSpec::algebra_257g();
        a.check_jacobi().unwrap();
        assert_eq!(a.nilpotency_step().unwrap(), 3);
    }

    #[test]
    fn antisymmetry_normalization() {
        let mut a = LieAlgebraSpec::new(3);
        a.add_bracket(2, 1, 3, s_int(1)); // [X2,X1] = X3  =>  [X1,X2] = -X3
        let x1 = vec![s_int(1), s_int(0), s_int(0)];
        let x2 = vec![s_int(0), s_int(1), s_int(0)];
        assert_eq!(a.bracket(&x1, &x2)[2], s_int(-1));
    }

    #[test]
    fn non_nilpotent_detected() {
        // [X1, X2] = X2 is solvable but not nilpotent
        let mut a = LieAlgebraSpec::new(2);
        a.add_bracket(1, 2, 2, s_int(1));
        assert!(a.nilpotency_step().is_err());
    }

    #[test]
    fn jacobi_failure_detected() {
        // [X1,X2]=X3, [X1,X3]=X1: the Jacobi sum on (X1,X2,X3) is -X3 != 0.
        let mut a = LieAlgebraSpec::new(3);
        a.add_bracket(1, 2, 3, s_int(1));
        a.add_bracket(1, 3, 1, s_int(1));
        assert!(a.check_jacobi().is_err());
    }
}
