//! Baker-Campbell-Hausdorff multiplication for nilpotent Lie algebras.
//!
//! The product is computed symbolically from Dynkin's series
//!
//! ```text
//! X * Y = X + sum_{k,m >= 0, p_i+q_i > 0}
//!         (-1)^k / ((k+1)(q_1+...+q_k+1))
//!         * ad(X)^p1 ad(Y)^q1 ... ad(X)^pk ad(Y)^qk ad(X)^m (Y)
//!           / (p1! q1! ... pk! qk! m!)
//! ```
//!
//! truncated at the nilpotency step: for an s-step algebra every bracket
//! word of length > s vanishes, so only operator chains applying at most
//! s - 1 brackets survive. Coefficients are exact rationals throughout.

use num_bigint::BigInt;

use crate::error::CoreError;
use crate::lie::LieAlgebraSpec;
use crate::poly::Polynomial;
use crate::scalar::Scalar;

/// Largest nilpotency step supported by the symbolic expansion.
pub const MAX_STEP: usize = 6;

fn factorial(n: u32) -> BigInt {
    let mut acc = BigInt::from(1);
    for i in 2..=n {
        acc *= i;
    }
    acc
}

/// Vector with polynomial coordinates; nvars = 2d.
type PolyVec = Vec<Polynomial>;

fn ad(algebra: &LieAlgebraSpec, u: &PolyVec, w: &PolyVec) -> PolyVec {
    let d = algebra.dim;
    let nvars = 2 * d;
    let mut out = vec![Polynomial::zero(nvars); d];
    for (&(i, j), targets) in &algebra.brackets {
        let c = u[i].mul(&w[j]).sub(&u[j].mul(&w[i]));
        if c.is_zero() {
            continue;
        }
        for (k, alpha) in targets {
            out[*k] = out[*k].add(&c.scale(alpha));
        }
    }
    out
}

fn is_zero_vec(v: &PolyVec) -> bool {
    v.iter().all(|p| p.is_zero())
}

/// All sequences ((p_1,q_1),...,(p_k,q_k)) with p_i + q_i >= 1 and total
/// weight exactly `weight`.
fn block_sequences(weight: u32) -> Vec<Vec<(u32, u32)>> {
    if weight == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for first in 1..=weight {
        for p in 0..=first {
            let q = first - p;
            for rest in block_sequences(weight - first) {
                let mut seq = vec![(p, q)];
                seq.extend(rest);
                out.push(seq);
            }
        }
    }
    out
}

/// The BCH group law as one polynomial per coordinate, in the 2d variables
/// x1..xd, y1..yd.
pub fn bch_law(algebra: &LieAlgebraSpec) -> Result<Vec<Polynomial>, CoreError> {
    let step = algebra.nilpotency_step()?;
    if step > MAX_STEP {
        return Err(CoreError::Invalid(format!(
            "nilpotency step {step} exceeds supported bound {MAX_STEP}"
        )));
    }
    let d = algebra.dim;
    let nvars = 2 * d;
    let x: PolyVec = (0..d).map(|i| Polynomial::var(nvars, i)).collect();
    let y: PolyVec = (0..d).map(|i| Polynomial::var(nvars, d + i)).collect();

    // Z = X + sum of operator-chain terms applied to Y (the m = 0, k = 0
    // chain is the identity and contributes Y itself).
    let mut z = x.clone();

    let max_ops = (step - 1) as u32;
    for total in 0..=max_ops {
        for m in 0..=total {
            let rest = total - m;
            for blocks in block_sequences(rest) {
                // apply right-to-left: ad(X)^m first, then the blocks from
                // last to first
                let mut w = y.clone();
                for _ in 0..m {
                    w = ad(algebra, &x, &w);
                    if is_zero_vec(&w) {
                        break;
                    }
                }
                if is_zero_vec(&w) {
                    continue;
                }
                let mut dead = false;
                for &(p, q) in blocks.iter().rev() {
                    for _ in 0..q {
                        w = ad(algebra, &y, &w);
                    }
                    for _ in 0..p {
                        w = ad(algebra, &x, &w);
                    }
                    if is_zero_vec(&w) {
                        dead = true;
                        break;
                    }
                }
                if dead || is_zero_vec(&w) {
                    continue;
                }
                let k = blocks.len() as u32;
                let qsum: u32 = blocks.iter().map(|&(_, q)| q).sum();
                let mut denom = BigInt::from(k + 1) * BigInt::from(qsum + 1) * factorial(m);
                for &(p, q) in &blocks {
                    denom *= factorial(p) * factorial(q);
                }
                let sign = if k % 2 == 0 { 1 } else { -1 };
                let coeff = Scalar::new(BigInt::from(sign), denom);
                for i in 0..d {
                    z[i] = z[i].add(&w[i].scale(&coeff));
                }
            }
        }
    }
    Ok(z)
}
