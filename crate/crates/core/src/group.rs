//! Graded nilpotent groups with exact polynomial multiplication laws.
//!
//! A group is R^d with a unipotent polynomial law in graded coordinates:
//! coordinate i of g*h is g_i + h_i + p_i(g, h) where p_i only involves
//! coordinates of strictly lower degree and is weighted-homogeneous of
//! degree mu_i. The dilation D_lambda scales coordinate i by lambda^{mu_i}
//! and is an automorphism exactly when these structural conditions hold.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::bch::bch_law;
use crate::error::CoreError;
use crate::lie::LieAlgebraSpec;
use crate::poly::Polynomial;
use crate::scalar::{format_scalar, s_int, s_pow, Scalar};
use num_traits::{Signed, Zero};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Provenance {
    /// Law derived from structure constants via the BCH series.
    Bch,
    /// Law given directly as polynomials (cocycle-tower coordinates).
    Explicit,
}

#[derive(Clone, Debug)]
pub struct GradedGroup {
    pub dim: usize,
    /// Positive integer degrees, nondecreasing.
    pub degrees: Vec<u32>,
    /// One polynomial per coordinate in the 2d variables x1..xd, y1..yd.
    pub law: Vec<Polynomial>,
    pub provenance: Provenance,
}

/// A single failed check with an exact witness.
#[derive(Clone, Debug)]
pub struct ValidationFailure {
    pub axiom: String,
    pub witness: String,
}

#[derive(Clone, Debug, Default)]
pub struct ValidationReport {
    pub checks_run: usize,
    pub failures: Vec<ValidationFailure>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

pub fn format_point(p: &[Scalar]) -> String {
    format!(
        "({})",
        p.iter().map(format_scalar).collect::<Vec<_>>().join(", ")
    )
}

impl GradedGroup {
    /// Builds a group from an explicit polynomial law, enforcing the
    /// structural conditions (unit linear part, mixed lower-degree
    /// correction terms, weighted homogeneity).
    pub fn explicit(degrees: Vec<u32>, law: Vec<Polynomial>) -> Result<Self, CoreError> {
        let g = GradedGroup {
            dim: degrees.len(),
            degrees,
            law,
            provenance: Provenance::Explicit,
        };
        g.check_structure()?;
        Ok(g)
    }

    /// Builds the BCH group of a nilpotent Lie algebra with a compatible
    /// positive grading. Incompatible degrees fail the structural checks.
    pub fn from_bch(algebra: &LieAlgebraSpec, degrees: Vec<u32>) -> Result<Self, CoreError> {
        if degrees.len() != algebra.dim {
            return Err(CoreError::DimensionMismatch {
                expected: algebra.dim,
                got: degrees.len(),
            });
        }
        let law = bch_law(algebra)?;
        let g = GradedGroup {
            dim: algebra.dim,
            degrees,
            law,
            provenance: Provenance::Bch,
        };
        g.check_structure()?;
        Ok(g)
    }

    fn check_structure(&self) -> Result<(), CoreError> {
        let d = self.dim;
        if self.degrees.len() != d || self.law.len() != d {
            return Err(CoreError::DimensionMismatch {
                expected: d,
                got: self.law.len(),
            });
        }
        if self.degrees.iter().any(|&m| m == 0) {
            return Err(CoreError::Invalid("degrees must be positive".into()));
        }
        if self.degrees.windows(2).any(|w| w[0] > w[1]) {
            return Err(CoreError::Invalid(
                "degrees must be nondecreasing in coordinate order".into(),
            ));
        }
        for (i, p) in self.law.iter().enumerate() {
            if p.nvars != 2 * d {
                return Err(CoreError::Invalid(format!(
                    "law coordinate {} has {} variables, expected {}",
                    i + 1,
                    p.nvars,
                    2 * d
                )));
            }
            // strip x_i + y_i, then inspect the correction polynomial
            let mut xi = vec![0u32; 2 * d];
            xi[i] = 1;
            let mut yi = vec![0u32; 2 * d];
            yi[d + i] = 1;
            let one = s_int(1);
            if p.terms.get(&xi) != Some(&one) || p.terms.get(&yi) != Some(&one) {
                return Err(CoreError::Invalid(format!(
                    "law coordinate {} must have linear part x{} + y{}",
                    i + 1,
                    i + 1,
                    i + 1
                )));
            }
            for (mono, _) in &p.terms {
                if mono == &xi || mono == &yi {
                    continue;
                }
                let mut has_x = false;
                let mut has_y = false;
                let mut weight = 0u64;
                for (v, &e) in mono.iter().enumerate() {
                    if e == 0 {
                        continue;
                    }
                    let coord = if v < d { v } else { v - d };
                    if v < d {
                        has_x = true;
                    } else {
                        has_y = true;
                    }
                    if self.degrees[coord] >= self.degrees[i] {
                        return Err(CoreError::Invalid(format!(
                            "law coordinate {} uses coordinate {} of degree >= its own (not triangular)",
                            i + 1,
                            coord + 1
                        )));
                    }
                    weight += e as u64 * self.degrees[coord] as u64;
                }
                if !has_x || !has_y {
                    return Err(CoreError::Invalid(format!(
                        "law coordinate {} has a correction term not mixing both factors (identity axiom fails)",
                        i + 1
                    )));
                }
                if weight != self.degrees[i] as u64 {
                    return Err(CoreError::Invalid(format!(
                        "law coordinate {} has a correction term of weighted degree {} != {} (dilations not automorphisms)",
                        i + 1,
                        weight,
                        self.degrees[i]
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn identity(&self) -> Vec<Scalar> {
        vec![Scalar::zero(); self.dim]
    }

    /// Sum of the degrees; ball volumes grow like r^kappa.
    pub fn homogeneous_dimension(&self) -> u64 {
        self.degrees.iter().map(|&m| m as u64).sum()
    }

    fn check_dim(&self, g: &[Scalar]) -> Result<(), CoreError> {
        if g.len() != self.dim {
            return Err(CoreError::DimensionMismatch {
                expected: self.dim,
                got: g.len(),
            });
        }
        Ok(())
    }

    /// Evaluates the stored polynomial law.
    pub fn multiply(&self, g: &[Scalar], h: &[Scalar]) -> Result<Vec<Scalar>, CoreError> {
        self.check_dim(g)?;
        self.check_dim(h)?;
        let mut point = Vec::with_capacity(2 * self.dim);
        point.extend_from_slice(g);
        point.extend_from_slice(h);
        Ok(self.law.iter().map(|p| p.eval(&point)).collect())
    }

    /// Solves g * x = e degree by degree. For BCH-provenance groups this
    /// equals coordinate-wise negation.
    pub fn inverse(&self, g: &[Scalar]) -> Result<Vec<Scalar>, CoreError> {
        self.check_dim(g)?;
        let d = self.dim;
        let mut x = vec![Scalar::zero(); d];
        for i in 0..d {
            // law[i](g, x) = g_i + x_i + p_i(g, x) with p_i independent of
            // x_j for degrees >= mu_i, all of which are still zero here
            let mut point = Vec::with_capacity(2 * d);
            point.extend_from_slice(g);
            point.extend_from_slice(&x);
            let residue = self.law[i].eval(&point);
            x[i] = -residue;
        }
        Ok(x)
    }

    /// D_lambda: coordinate i scaled by lambda^{mu_i}. Requires lambda > 0.
    pub fn dilate(&self, g: &[Scalar], lambda: &Scalar) -> Result<Vec<Scalar>, CoreError> {
        self.check_dim(g)?;
        if !lambda.is_positive() {
            return Err(CoreError::Invalid(format!(
                "dilation parameter must be positive, got {}",
                format_scalar(lambda)
            )));
        }
        Ok(g.iter()
            .zip(&self.degrees)
            .map(|(c, &m)| c * s_pow(lambda, m))
            .collect())
    }

    /// Seeded probabilistic-exact validation: random rational samples,
    /// exact evaluation. A failure is a certain counterexample; a pass is
    /// high-confidence polynomial identity testing.
    pub fn validate(&self, samples: u32, seed: u64) -> ValidationReport {
        let mut report = ValidationReport::default();
        if let Err(e) = self.check_structure() {
            report.checks_run += 1;
            report.failures.push(ValidationFailure {
                axiom: "structure".into(),
                witness: e.to_string(),
            });
            return report;
        }
        report.checks_run += 1;

        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rand_scalar = |rng: &mut ChaCha8Rng| -> Scalar {
            let num = rng.gen_range(-9i64..=9);
            let den = rng.gen_range(1i64..=4);
            Scalar::new(num.into(), den.into())
        };
        let rand_point = |rng: &mut ChaCha8Rng| -> Vec<Scalar> {
            (0..self.dim).map(|_| rand_scalar(rng)).collect()
        };

        for _ in 0..samples {
            let g = rand_point(&mut rng);
            let h = rand_point(&mut rng);
            let k = rand_point(&mut rng);

            // associativity
            report.checks_run += 1;
            let gh = self.multiply(&g, &h).unwrap();
            let hk = self.multiply(&h, &k).unwrap();
            let lhs = self.multiply(&gh, &k).unwrap();
            let rhs = self.multiply(&g, &hk).unwrap();
            if lhs != rhs {
                report.failures.push(ValidationFailure {
                    axiom: "associativity".into(),
                    witness: format!(
                        "g={} h={} k={}",
                        format_point(&g),
                        format_point(&h),
                        format_point(&k)
                    ),
                });
            }

            // identity
            report.checks_run += 1;
            let e = self.identity();
            if self.multiply(&g, &e).unwrap() != g || self.multiply(&e, &g).unwrap() != g {
                report.failures.push(ValidationFailure {
                    axiom: "identity".into(),
                    witness: format_point(&g),
                });
            }

            // inverse
            report.checks_run += 1;
            let inv = self.inverse(&g).unwrap();
            if self.multiply(&g, &inv).unwrap() != e || self.multiply(&inv, &g).unwrap() != e {
                report.failures.push(ValidationFailure {
                    axiom: "inverse".into(),
                    witness: format_point(&g),
                });
            }

            // dilation is an automorphism, and a one-parameter group
            report.checks_run += 1;
            let lambda = {
                let num = rng.gen_range(1i64..=9);
                let den = rng.gen_range(1i64..=4);
                Scalar::new(num.into(), den.into())
            };
            let sigma = {
                let num = rng.gen_range(1i64..=9);
                let den = rng.gen_range(1i64..=4);
                Scalar::new(num.into(), den.into())
            };
            let dl = self.dilate(&gh, &lambda).unwrap();
            let dg = self.dilate(&g, &lambda).unwrap();
            let dh = self.dilate(&h, &lambda).unwrap();
            if dl != self.multiply(&dg, &dh).unwrap() {
                report.failures.push(ValidationFailure {
                    axiom: "dilation automorphism".into(),
                    witness: format!(
                        "lambda={} g={} h={}",
                        format_scalar(&lambda),
                        format_point(&g),
                        format_point(&h)
                    ),
                });
            }
            report.checks_run += 1;
            let ds = self.dilate(&self.dilate(&g, &sigma).unwrap(), &lambda).unwrap();
            let prod = &lambda * &sigma;
            if ds != self.dilate(&g, &prod).unwrap() {
                report.failures.push(ValidationFailure {
                    axiom: "dilation one-parameter group".into(),
                    witness: format!(
                        "lambda={} sigma={} g={}",
                        format_scalar(&lambda),
                        format_scalar(&sigma),
                        format_point(&g)
                    ),
                });
            }
        }
        report
    }
}
