//! Exact rational scalars.
//!
//! Every quantity in this crate (coordinates, structure constants, stretch
//! factors, box endpoints) is an exact rational number. No floating point is
//! used anywhere in the arithmetic core; decimal literals are rejected by the
//! parser.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use std::cmp::Ordering;

use crate::error::CoreError;

/// Exact rational scalar: reduced fraction with positive denominator.
/// `BigRational` maintains that canonical form on construction.
pub type Scalar = BigRational;

pub fn s_zero() -> Scalar {
    Scalar::zero()
}

pub fn s_one() -> Scalar {
    Scalar::one()
}

pub fn s_int(n: i64) -> Scalar {
    Scalar::from_integer(BigInt::from(n))
}

pub fn s_frac(num: i64, den: i64) -> Scalar {
    assert!(den != 0, "zero denominator");
    Scalar::new(BigInt::from(num), BigInt::from(den))
}

/// λ^k for non-negative integer k.
pub fn s_pow(base: &Scalar, exp: u32) -> Scalar {
    let mut acc = s_one();
    for _ in 0..exp {
        acc *= base;
    }
    acc
}

pub fn is_integer(x: &Scalar) -> bool {
    x.denom().is_one()
}

/// Exact integer part of an integral scalar.
pub fn to_bigint(x: &Scalar) -> Option<BigInt> {
    if is_integer(x) {
        Some(x.numer().clone())
    } else {
        None
    }
}

/// Largest integer `n` with `n <= x`.
pub fn floor_bigint(x: &Scalar) -> BigInt {
    x.floor().numer().clone()
}

/// Smallest integer `n` with `n >= x`.
pub fn ceil_bigint(x: &Scalar) -> BigInt {
    x.ceil().numer().clone()
}

/// Parse an exact fraction literal: `p`, `-p`, `p/q`. Decimal points are a
/// hard error; files carry exact data only.
pub fn parse_scalar(text: &str) -> Result<Scalar, String> {
    let t = text.trim();
    if t.is_empty() {
        return Err("empty scalar".to_string());
    }
    if t.contains('.') {
        return Err(format!("decimal literal `{t}` rejected; write an exact fraction p/q"));
    }
    if let Some((num, den)) = t.split_once('/') {
        let n: BigInt = num.trim().parse().map_err(|_| format!("bad numerator `{num}`"))?;
        let d: BigInt = den.trim().parse().map_err(|_| format!("bad denominator `{den}`"))?;
        if d.is_zero() {
            return Err(format!("zero denominator in `{t}`"));
        }
        Ok(Scalar::new(n, d))
    } else {
        let n: BigInt = t.parse().map_err(|_| format!("bad integer `{t}`"))?;
        Ok(Scalar::from_integer(n))
    }
}

/// Canonical rendering: `p` for integers, `p/q` otherwise (q > 0, reduced).
pub fn format_scalar(x: &Scalar) -> String {
    if is_integer(x) {
        x.numer().to_string()
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}

/// An exact positive real of the form `base^(1/root)` with rational
/// `base > 0`. Quasinorm values and box radii are numbers of this shape;
/// keeping the root unevaluated lets every comparison stay exact.
#[derive(Clone, Debug)]
pub struct Root {
    pub base: Scalar,
    pub root: u32,
}

impl Root {
    pub fn new(base: Scalar, root: u32) -> Result<Self, CoreError> {
        if base.is_negative() {
            return Err(CoreError::Invalid(format!(
                "negative radicand {}",
                format_scalar(&base)
            )));
        }
        assert!(root >= 1);
        Ok(Root { base, root })
    }

    pub fn rational(x: Scalar) -> Self {
        Root { base: x, root: 1 }
    }

    /// Compare `a^(1/p)` with `b^(1/q)` by raising both to `lcm(p, q)`.
    pub fn cmp_root(&self, other: &Root) -> Ordering {
        let l = (self.root as u64).lcm(&(other.root as u64)) as u32;
        let lhs = s_pow(&self.base, l / self.root);
        let rhs = s_pow(&other.base, l / other.root);
        lhs.cmp(&rhs)
    }

    pub fn cmp_scalar(&self, x: &Scalar) -> Ordering {
        if x.is_negative() {
            return Ordering::Greater;
        }
        self.cmp_root(&Root::rational(x.clone()))
    }

    /// `c * self` for rational `c >= 0`.
    pub fn scale(&self, c: &Scalar) -> Root {
        Root {
            base: s_pow(c, self.root) * &self.base,
            root: self.root,
        }
    }

    /// Decimal approximation, for reports only (never stored or compared).
    pub fn approx(&self) -> f64 {
        let b = self.base.numer().to_string().parse::<f64>().unwrap_or(f64::MAX)
            / self.base.denom().to_string().parse::<f64>().unwrap_or(1.0);
        b.powf(1.0 / self.root as f64)
    }
}

/// Integer square root of a non-negative i128 (largest s with s*s <= n).
pub fn isqrt_i128(n: i128) -> i128 {
    assert!(n >= 0);
    if n < 2 {
        return n;
    }
    let mut x = (n as f64).sqrt() as i128 + 2;
    while x * x > n {
        x -= 1;
    }
    x
}
