//! Sparse multivariate polynomials over the rationals.
//!
//! Group laws are stored as one polynomial per output coordinate in the 2d
//! variables `x1..xd, y1..yd` (left factor then right factor). Variable `i`
//! with `i < d` is `x_{i+1}`; variable `d + i` is `y_{i+1}`.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::Zero;

use crate::scalar::{format_scalar, Scalar};

/// Exponent vector, one entry per variable.
pub type Monomial = Vec<u32>;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Polynomial {
    pub nvars: usize,
    /// monomial -> nonzero coefficient
    pub terms: BTreeMap<Monomial, Scalar>,
}

impl Polynomial {
    pub fn zero(nvars: usize) -> Self {
        Polynomial {
            nvars,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(nvars: usize, c: Scalar) -> Self {
        let mut p = Polynomial::zero(nvars);
        if !c.is_zero() {
            p.terms.insert(vec![0; nvars], c);
        }
        p
    }

    pub fn var(nvars: usize, idx: usize) -> Self {
        let mut exps = vec![0u32; nvars];
        exps[idx] = 1;
        let mut p = Polynomial::zero(nvars);
        p.terms.insert(exps, Scalar::from_integer(1.into()));
        p
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add_term(&mut self, mono: Monomial, coeff: Scalar) {
        if coeff.is_zero() {
            return;
        }
        let entry = self.terms.entry(mono).or_insert_with(Scalar::zero);
        *entry += coeff;
        // drop cancelled terms
        self.terms.retain(|_, c| !c.is_zero());
    }

    pub fn add(&self, other: &Polynomial) -> Polynomial {
        assert_eq!(self.nvars, other.nvars);
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), c.clone());
        }
        out
    }

    pub fn sub(&self, other: &Polynomial) -> Polynomial {
        self.add(&other.scale(&Scalar::from_integer((-1).into())))
    }

    pub fn scale(&self, c: &Scalar) -> Polynomial {
        if c.is_zero() {
            return Polynomial::zero(self.nvars);
        }
        Polynomial {
            nvars: self.nvars,
            terms: self
                .terms
                .iter()
                .map(|(m, k)| (m.clone(), k * c))
                .collect(),
        }
    }

    pub fn mul(&self, other: &Polynomial) -> Polynomial {
        assert_eq!(self.nvars, other.nvars);
        let mut out = Polynomial::zero(self.nvars);
        for (m1, c1) in &self.terms {
            for (m2, c2) in &other.terms {
                let mono: Monomial = m1.iter().zip(m2).map(|(a, b)| a + b).collect();
                out.add_term(mono, c1 * c2);
            }
        }
        out
    }

    /// Exact evaluation at a point.
    pub fn eval(&self, point: &[Scalar]) -> Scalar {
        assert_eq!(point.len(), self.nvars);
        let mut acc = Scalar::zero();
        for (mono, coeff) in &self.terms {
            let mut term = coeff.clone();
            for (i, &e) in mono.iter().enumerate() {
                for _ in 0..e {
                    term *= &point[i];
                }
            }
            acc += term;
        }
        acc
    }
}

/// Renders with variables named `x1..xd, y1..yd` for `nvars = 2d`.
impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let d = self.nvars / 2;
        let mut ordered: Vec<(&Monomial, &Scalar)> = self.terms.iter().collect();
        ordered.sort_by(|(m1, _), (m2, _)| {
            let d1: u32 = m1.iter().sum();
            let d2: u32 = m2.iter().sum();
            d1.cmp(&d2).then_with(|| m2.cmp(m1))
        });
        let mut first = true;
        for (mono, coeff) in ordered {
            let neg = coeff < &Scalar::zero();
            let abs = if neg { -coeff.clone() } else { coeff.clone() };
            if first {
                if neg {
                    write!(f, "-")?;
                }
                first = false;
            } else if neg {
                write!(f, " - ")?;
            } else {
                write!(f, " + ")?;
            }
            let is_const = mono.iter().all(|&e| e == 0);
            let one = abs == Scalar::from_integer(1.into());
            if !one || is_const {
                write!(f, "{}", format_scalar(&abs))?;
            }
            let mut wrote_var = false;
            for (i, &e) in mono.iter().enumerate() {
                if e == 0 {
                    continue;
                }
                if wrote_var || !one {
                    write!(f, " ")?;
                }
                let name = if i < d {
                    format!("x{}", i + 1)
                } else {
                    format!("y{}", i + 1 - d)
                };
                if e == 1 {
                    write!(f, "{name}")?;
                } else {
                    write!(f, "{name}^{e}")?;
                }
                wrote_var = true;
            }
        }
        Ok(())
    }
}
