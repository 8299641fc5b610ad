//! Dilation data: adapted lattices as scaled integer grids, fundamental
//! boxes, exact localization, quasinorm balls and splittings.
//!
//! The lattice is the set of points whose i-th coordinate lies in s_i * Z;
//! the fundamental box V is a coordinate-wise half-open box [lo_i, hi_i)
//! with hi_i - lo_i = s_i. Lattice points are stored as integer multiples
//! of the scales, which keeps set operations exact and cheap; group
//! arithmetic converts to rational coordinates (an i128 fast path covers
//! lattice-by-lattice products).

use std::collections::BTreeSet;

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::CoreError;
use crate::group::{format_point, GradedGroup, ValidationFailure, ValidationReport};
use crate::scalar::{
    ceil_bigint, format_scalar, s_int, s_pow, to_bigint, Root, Scalar,
};

/// A lattice point, stored as integer multiples of the per-coordinate
/// scales: coordinate i equals multiples[i] * s_i.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LatticePoint(pub Vec<i64>);

impl LatticePoint {
    pub fn origin(dim: usize) -> Self {
        LatticePoint(vec![0; dim])
    }

    pub fn is_origin(&self) -> bool {
        self.0.iter().all(|&m| m == 0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QuasiNorm {
    /// max_i |g_i|^(1/mu_i); available on every datum.
    LInf,
    /// ((x^2+y^2)^2 + z^2)^(1/4); requires dim 3 with degrees (1,1,2).
    Koranyi,
}

/// Inner and outer radii of the fundamental box, kept as exact roots so the
/// sufficiency comparison stays exact.
#[derive(Clone, Debug)]
pub struct Radii {
    pub inner: Root,
    pub outer: Root,
}

/// Integer fast path for the group law on lattice multiples. Each
/// coordinate is a_i + b_i + (sum of integer monomials) / denom, where the
/// division is exact by lattice closure.
#[derive(Clone, Debug)]
struct MultipleLaw {
    dim: usize,
    /// per coordinate: common denominator and terms (numerator, exponents)
    coords: Vec<(i128, Vec<(i128, Vec<u32>)>)>,
}

impl MultipleLaw {
    fn build(group: &GradedGroup, scales: &[Scalar]) -> Option<MultipleLaw> {
        let d = group.dim;
        let mut coords = Vec::with_capacity(d);
        for i in 0..d {
            let mut xi = vec![0u32; 2 * d];
            xi[i] = 1;
            let mut yi = vec![0u32; 2 * d];
            yi[d + i] = 1;
            // rational coefficient of each correction monomial, with scales
            // substituted and divided by s_i
            let mut terms_q: Vec<(Scalar, Vec<u32>)> = Vec::new();
            for (mono, coeff) in &group.law[i].terms {
                if mono == &xi || mono == &yi {
                    continue;
                }
                let mut q = coeff / &scales[i];
                for (v, &e) in mono.iter().enumerate() {
                    let coord = if v < d { v } else { v - d };
                    q *= s_pow(&scales[coord], e);
                }
                terms_q.push((q, mono.clone()));
            }
            let mut denom = BigInt::one();
            for (q, _) in &terms_q {
                denom = num_integer::lcm(denom, q.denom().clone());
            }
            let denom_i: i128 = denom.to_i128()?;
            let mut terms = Vec::with_capacity(terms_q.len());
            for (q, mono) in terms_q {
                let num = (q * Scalar::from_integer(denom.clone())).numer().to_i128()?;
                terms.push((num, mono));
            }
            coords.push((denom_i, terms));
        }
        Some(MultipleLaw { dim: d, coords })
    }

    /// Product of two lattice points in multiples; None on i128 overflow
    /// or inexact division (callers fall back to rational arithmetic).
    fn mul(&self, a: &[i64], b: &[i64]) -> Option<Vec<i64>> {
        let mut out = Vec::with_capacity(self.dim);
        self.mul_into(a, b, &mut out)?;
        Some(out)
    }

    fn mul_into(&self, a: &[i64], b: &[i64], out: &mut Vec<i64>) -> Option<()> {
        let d = self.dim;
        out.clear();
        for i in 0..d {
            let (denom, terms) = &self.coords[i];
            let mut acc: i128 = 0;
            for (num, mono) in terms {
                let mut t: i128 = *num;
                for (v, &e) in mono.iter().enumerate() {
                    if e == 0 {
                        continue;
                    }
                    let val = if v < d { a[v] as i128 } else { b[v - d] as i128 };
                    for _ in 0..e {
                        t = t.checked_mul(val)?;
                    }
                }
                acc = acc.checked_add(t)?;
            }
            if acc % denom != 0 {
                return None;
            }
            let lin = (a[i] as i128).checked_add(b[i] as i128)?;
            let val = lin.checked_add(acc / denom)?;
            out.push(i64::try_from(val).ok()?);
        }
        Some(())
    }
}

#[derive(Clone, Debug)]
pub struct DilationDatum {
    pub group: GradedGroup,
    /// Positive lattice scales s_1..s_d.
    pub scales: Vec<Scalar>,
    pub box_lo: Vec<Scalar>,
    pub box_hi: Vec<Scalar>,
    /// Stretch factor lambda_0 with D_{lambda_0}(Gamma) contained in Gamma.
    pub stretch: Scalar,
    pub quasinorm: QuasiNorm,
    /// lambda_0^{mu_i} as integers (existence is validated at construction).
    stretch_pows: Vec<BigInt>,
    stretch_pows_i64: Vec<Option<i64>>,
    /// multiple ranges of D(V) per coordinate, when they fit in i64
    level1_ranges: Vec<Option<(i64, i64)>>,
    scales_i64: Vec<Option<i64>>,
    multiple_law: Option<MultipleLaw>,
}

/// Horizontal/vertical splitting of D(V) cap Gamma along the top degree.
#[derive(Clone, Debug)]
pub struct SplittingData {
    /// First coordinate index of the vertical (top-degree) block.
    pub split_index: usize,
    /// Horizontal block of D(V) cap Gamma, as multiple vectors of length
    /// split_index. None when the block exceeds the materialization
    /// budget (its cardinality is still validated to be at least 3).
    pub f_h: Option<Vec<Vec<i64>>>,
    /// Vertical block, as multiple vectors of length dim - split_index.
    pub f_v: Vec<Vec<i64>>,
    /// lambda_0^rho, the factor by which D scales the vertical block.
    pub lambda_v: BigInt,
    /// |F_H| as a count (exact, never materialized).
    pub f_h_count: BigInt,
}

impl DilationDatum {
    pub fn new(
        group: GradedGroup,
        scales: Vec<Scalar>,
        box_lo: Vec<Scalar>,
        box_hi: Vec<Scalar>,
        stretch: Scalar,
        quasinorm: QuasiNorm,
    ) -> Result<Self, CoreError> {
        let d = group.dim;
        if scales.len() != d || box_lo.len() != d || box_hi.len() != d {
            return Err(CoreError::DimensionMismatch {
                expected: d,
                got: scales.len(),
            });
        }
        for (i, s) in scales.iter().enumerate() {
            if !s.is_positive() {
                return Err(CoreError::Invalid(format!(
                    "lattice scale {} must be positive",
                    i + 1
                )));
            }
            if box_lo[i] >= box_hi[i] {
                return Err(CoreError::DegenerateBox { index: i });
            }
            // the box must tile the lattice direction: width = scale
            if &box_hi[i] - &box_lo[i] != *s {
                return Err(CoreError::Invalid(format!(
                    "box width at coordinate {} must equal the lattice scale (fundamental domain)",
                    i + 1
                )));
            }
            // convenient: 0 in the interior region lo < 0 < hi
            if !box_lo[i].is_negative() || !box_hi[i].is_positive() {
                return Err(CoreError::Invalid(format!(
                    "box must satisfy lo < 0 < hi at coordinate {} (identity neighbourhood)",
                    i + 1
                )));
            }
        }
        if stretch <= s_int(1) {
            return Err(CoreError::Invalid("stretch factor must exceed 1".into()));
        }
        // D_{lambda_0}(Gamma) in Gamma for a scaled grid means each
        // lambda_0^{mu_i} is an integer
        let mut stretch_pows = Vec::with_capacity(d);
        for (i, &m) in group.degrees.iter().enumerate() {
            let p = s_pow(&stretch, m);
            let Some(ip) = to_bigint(&p) else {
                return Err(CoreError::Invalid(format!(
                    "stretch^degree must be an integer at coordinate {} (got {})",
                    i + 1,
                    format_scalar(&p)
                )));
            };
            stretch_pows.push(ip);
        }
        if quasinorm == QuasiNorm::Koranyi && (d != 3 || group.degrees != vec![1, 1, 2]) {
            return Err(CoreError::Invalid(
                "Koranyi norm requires dimension 3 with degrees (1,1,2)".into(),
            ));
        }
        let scales_i64 = scales
            .iter()
            .map(|s| to_bigint(s).and_then(|b| b.to_i64()))
            .collect();
        let stretch_pows_i64 = stretch_pows.iter().map(|p| p.to_i64()).collect();
        let multiple_law = MultipleLaw::build(&group, &scales);
        let mut datum = DilationDatum {
            group,
            scales,
            box_lo,
            box_hi,
            stretch,
            quasinorm,
            stretch_pows,
            stretch_pows_i64,
            level1_ranges: vec![None; d],
            scales_i64,
            multiple_law,
        };
        datum.level1_ranges = (0..d)
            .map(|i| datum.dilated_range(i, 1).ok())
            .collect();
        datum.check_sufficiency()?;
        Ok(datum)
    }

    /// Decomposes a lattice point as gamma = D(eta) * zeta with eta in the
    /// lattice and zeta in D(V) cap Gamma (the unique cell decomposition
    /// behind the substitution map). Integer fast path with a rational
    /// fallback.
    pub fn descend_point(
        &self,
        gamma: &LatticePoint,
    ) -> Result<(LatticePoint, LatticePoint), CoreError> {
        if let Some(pair) = self.descend_point_fast(gamma) {
            return Ok(pair);
        }
        // rational fallback: locate(D^{-1} gamma)
        let g = self.point_to_element(gamma);
        let inv_stretch = Scalar::one() / &self.stretch;
        let shrunk = self.group.dilate(&g, &inv_stretch)?;
        let (eta, v) = self.locate(&shrunk)?;
        let zeta_el = self.group.dilate(&v, &self.stretch)?;
        let zeta = self.element_to_point(&zeta_el)?;
        Ok((eta, zeta))
    }

    /// Triangular integer solve of m_gamma = w_i m_eta + m_zeta + corr_i,
    /// where w_i = lambda_0^{mu_i}, m_zeta ranges over the D(V) window and
    /// corr_i only involves strictly lower-degree coordinates.
    fn descend_point_fast(&self, gamma: &LatticePoint) -> Option<(LatticePoint, LatticePoint)> {
        let d = self.dim();
        let law = self.multiple_law.as_ref()?;
        let mut d_eta = vec![0i64; d]; // multiples of D(eta)
        let mut eta = vec![0i64; d];
        let mut zeta = vec![0i64; d];
        for i in 0..d {
            let w = self.stretch_pows_i64[i]?;
            let (lo, hi) = self.level1_ranges[i]?;
            debug_assert_eq!((hi - lo), w);
            // correction term of coordinate i at (D(eta), zeta)
            let (denom, terms) = &law.coords[i];
            let mut acc: i128 = 0;
            for (num, mono) in terms {
                let mut t: i128 = *num;
                for (v, &e) in mono.iter().enumerate() {
                    if e == 0 {
                        continue;
                    }
                    let val = if v < d {
                        d_eta[v] as i128
                    } else {
                        zeta[v - d] as i128
                    };
                    for _ in 0..e {
                        t = t.checked_mul(val)?;
                    }
                }
                acc = acc.checked_add(t)?;
            }
            if acc % denom != 0 {
                return None;
            }
            let corr = acc / denom;
            let rem = (gamma.0[i] as i128).checked_sub(corr)?;
            let zi = (rem - lo as i128).rem_euclid(w as i128) + lo as i128;
            let ei = (rem - zi) / (w as i128);
            zeta[i] = i64::try_from(zi).ok()?;
            eta[i] = i64::try_from(ei).ok()?;
            d_eta[i] = eta[i].checked_mul(w)?;
        }
        Some((LatticePoint(eta), LatticePoint(zeta)))
    }

    /// Fast-path product written into a scratch buffer; None falls back to
    /// `mul_points`.
    pub fn mul_points_into(
        &self,
        a: &LatticePoint,
        b: &LatticePoint,
        out: &mut Vec<i64>,
    ) -> Option<()> {
        self.multiple_law.as_ref()?.mul_into(&a.0, &b.0, out)
    }

    pub fn dim(&self) -> usize {
        self.group.dim
    }

    /// lambda_0 > 1 + r_+/r_-, equivalently (lambda_0 - 1) r_- > r_+.
    fn check_sufficiency(&self) -> Result<(), CoreError> {
        let radii = self.radii()?;
        let lhs = radii.inner.scale(&(&self.stretch - s_int(1)));
        if lhs.cmp_root(&radii.outer) != std::cmp::Ordering::Greater {
            return Err(CoreError::Invalid(format!(
                "stretch {} is not sufficiently large: need lambda_0 > 1 + r_+/r_- ~ 1 + {:.4}/{:.4}",
                format_scalar(&self.stretch),
                radii.outer.approx(),
                radii.inner.approx()
            )));
        }
        Ok(())
    }

    /// Inner and outer quasinorm radii of the fundamental box.
    pub fn radii(&self) -> Result<Radii, CoreError> {
        let d = self.dim();
        let bound = |i: usize, outer: bool| -> Scalar {
            let neg_lo = -self.box_lo[i].clone();
            if outer {
                neg_lo.max(self.box_hi[i].clone())
            } else {
                neg_lo.min(self.box_hi[i].clone())
            }
        };
        match self.quasinorm {
            QuasiNorm::LInf => {
                let mut inner: Option<Root> = None;
                let mut outer: Option<Root> = None;
                for i in 0..d {
                    let r_in = Root::new(bound(i, false), self.group.degrees[i])?;
                    let r_out = Root::new(bound(i, true), self.group.degrees[i])?;
                    inner = Some(match inner {
                        None => r_in,
                        Some(cur) => {
                            if r_in.cmp_root(&cur) == std::cmp::Ordering::Less {
                                r_in
                            } else {
                                cur
                            }
                        }
                    });
                    outer = Some(match outer {
                        None => r_out,
                        Some(cur) => {
                            if r_out.cmp_root(&cur) == std::cmp::Ordering::Greater {
                                r_out
                            } else {
                                cur
                            }
                        }
                    });
                }
                Ok(Radii {
                    inner: inner.unwrap(),
                    outer: outer.unwrap(),
                })
            }
            QuasiNorm::Koranyi => {
                // B(e,r) in V iff r <= min bound on x and y and r^2 <= bound
                // on z; the norm sup over the box closure is attained at a
                // corner.
                let m1 = bound(0, false);
                let m2 = bound(1, false);
                let m3 = bound(2, false);
                let candidates = [
                    Root::new(m1, 1)?,
                    Root::new(m2, 1)?,
                    Root::new(m3, 2)?,
                ];
                let inner = candidates
                    .into_iter()
                    .min_by(|a, b| a.cmp_root(b))
                    .unwrap();
                let cx = bound(0, true);
                let cy = bound(1, true);
                let cz = bound(2, true);
                let plane = &cx * &cx + &cy * &cy;
                let outer = Root::new(&plane * &plane + &cz * &cz, 4)?;
                Ok(Radii { inner, outer })
            }
        }
    }

    // ------------------------------------------------------------------
    // conversions
    // ------------------------------------------------------------------

    pub fn point_to_element(&self, p: &LatticePoint) -> Vec<Scalar> {
        p.0.iter()
            .zip(&self.scales)
            .map(|(&m, s)| s_int(m) * s)
            .collect()
    }

    pub fn element_to_point(&self, g: &[Scalar]) -> Result<LatticePoint, CoreError> {
        let mut out = Vec::with_capacity(g.len());
        for (i, c) in g.iter().enumerate() {
            let q = c / &self.scales[i];
            let Some(b) = to_bigint(&q) else {
                return Err(CoreError::NotOnLattice {
                    index: i,
                    value: format_scalar(c),
                });
            };
            let Some(m) = b.to_i64() else {
                return Err(CoreError::Overflow);
            };
            out.push(m);
        }
        Ok(LatticePoint(out))
    }

    // ------------------------------------------------------------------
    // lattice group operations
    // ------------------------------------------------------------------

    /// Product of two lattice points (exact; i128 fast path with rational
    /// fallback).
    pub fn mul_points(&self, a: &LatticePoint, b: &LatticePoint) -> Result<LatticePoint, CoreError> {
        if let Some(law) = &self.multiple_law {
            if let Some(m) = law.mul(&a.0, &b.0) {
                return Ok(LatticePoint(m));
            }
        }
        let prod = self
            .group
            .multiply(&self.point_to_element(a), &self.point_to_element(b))?;
        self.element_to_point(&prod)
    }

    pub fn inv_point(&self, a: &LatticePoint) -> Result<LatticePoint, CoreError> {
        let inv = self.group.inverse(&self.point_to_element(a))?;
        self.element_to_point(&inv)
    }

    /// D^n applied to a lattice point: multiple i scaled by lambda_0^{n mu_i}.
    pub fn dilate_point(&self, p: &LatticePoint, n: u32) -> Result<LatticePoint, CoreError> {
        let mut out = Vec::with_capacity(p.0.len());
        for (i, &m) in p.0.iter().enumerate() {
            let mut factor = BigInt::one();
            for _ in 0..n {
                factor *= &self.stretch_pows[i];
            }
            let v = BigInt::from(m) * factor;
            out.push(v.to_i64().ok_or(CoreError::Overflow)?);
        }
        Ok(LatticePoint(out))
    }

    /// Is p in D^n(Gamma)? Coordinate-wise divisibility of multiples by
    /// lambda_0^{n mu_i}.
    pub fn in_dilated_lattice(&self, p: &LatticePoint, n: u32) -> bool {
        p.0.iter().enumerate().all(|(i, &m)| {
            let mut factor = BigInt::one();
            for _ in 0..n {
                factor *= &self.stretch_pows[i];
            }
            (BigInt::from(m) % factor).is_zero()
        })
    }

    // ------------------------------------------------------------------
    // fundamental box and localization
    // ------------------------------------------------------------------

    /// Membership in the half-open box V.
    pub fn box_contains(&self, v: &[Scalar]) -> bool {
        v.iter()
            .enumerate()
            .all(|(i, c)| c >= &self.box_lo[i] && c < &self.box_hi[i])
    }

    /// Unique decomposition g = gamma * v with gamma in the lattice and v
    /// in the fundamental box, computed degree by degree.
    pub fn locate(&self, g: &[Scalar]) -> Result<(LatticePoint, Vec<Scalar>), CoreError> {
        let d = self.dim();
        if g.len() != d {
            return Err(CoreError::DimensionMismatch {
                expected: d,
                got: g.len(),
            });
        }
        let mut gamma = vec![Scalar::zero(); d];
        let mut inv_gamma = vec![Scalar::zero(); d];
        let mut v = vec![Scalar::zero(); d];
        let mut multiples = Vec::with_capacity(d);
        for i in 0..d {
            // (inv_gamma * g)_i with gamma_i still unset: the correction
            // polynomials only read coordinates of lower degree, which are
            // final by the nondecreasing ordering
            let mut point = Vec::with_capacity(2 * d);
            point.extend_from_slice(&inv_gamma);
            point.extend_from_slice(g);
            let residue_free = self.group.law[i].eval(&point); // inv_gamma_i(=0) + g_i + p_i
            // pick gamma_i = m s_i so that residue lands in [lo_i, hi_i)
            let q = (&residue_free - &self.box_lo[i]) / &self.scales[i];
            let m = q.floor().numer().clone();
            let mi = m.to_i64().ok_or(CoreError::Overflow)?;
            multiples.push(mi);
            gamma[i] = s_int(mi) * &self.scales[i];
            v[i] = &residue_free - &gamma[i];
            // finalize inv_gamma_i = -gamma_i - p_i(gamma, inv_gamma)
            let mut pt = Vec::with_capacity(2 * d);
            pt.extend_from_slice(&gamma);
            pt.extend_from_slice(&inv_gamma);
            let r = self.group.law[i].eval(&pt); // gamma_i + 0 + p_i
            inv_gamma[i] = -r;
        }
        debug_assert!(self.box_contains(&v));
        Ok((LatticePoint(multiples), v))
    }

    // ------------------------------------------------------------------
    // dilated boxes
    // ------------------------------------------------------------------

    /// Half-open multiple range of D^n(V) in coordinate i.
    fn dilated_range(&self, i: usize, n: u32) -> Result<(i64, i64), CoreError> {
        let mut factor = Scalar::one();
        for _ in 0..n {
            factor *= Scalar::from_integer(self.stretch_pows[i].clone());
        }
        let lo = &self.box_lo[i] * &factor / &self.scales[i];
        let hi = &self.box_hi[i] * &factor / &self.scales[i];
        let lo_m = ceil_bigint(&lo).to_i64().ok_or(CoreError::Overflow)?;
        let hi_m = ceil_bigint(&hi).to_i64().ok_or(CoreError::Overflow)?;
        Ok((lo_m, hi_m))
    }

    /// |D^n(V) cap Gamma| without materializing the set.
    pub fn count_dilated_box(&self, n: u32) -> Result<BigInt, CoreError> {
        let mut total = BigInt::one();
        for i in 0..self.dim() {
            let (lo, hi) = self.dilated_range(i, n)?;
            total *= BigInt::from(hi - lo);
        }
        Ok(total)
    }

    /// D^n(V) cap Gamma in coordinate-lexicographic order.
    pub fn enumerate_dilated_box(&self, n: u32, budget: u64) -> Result<Vec<LatticePoint>, CoreError> {
        let count = self.count_dilated_box(n)?;
        if count > BigInt::from(budget) {
            return Err(CoreError::BudgetExceeded {
                needed: count.to_string(),
                budget,
            });
        }
        let d = self.dim();
        let mut ranges = Vec::with_capacity(d);
        for i in 0..d {
            ranges.push(self.dilated_range(i, n)?);
        }
        let mut out = Vec::with_capacity(count.to_usize().unwrap_or(0));
        let mut cur: Vec<i64> = ranges.iter().map(|r| r.0).collect();
        if ranges.iter().any(|r| r.0 >= r.1) {
            return Ok(vec![]);
        }
        loop {
            out.push(LatticePoint(cur.clone()));
            let mut i = d;
            loop {
                if i == 0 {
                    return Ok(out);
                }
                i -= 1;
                cur[i] += 1;
                if cur[i] < ranges[i].1 {
                    break;
                }
                cur[i] = ranges[i].0;
            }
        }
    }

    /// Is p in D^n(V)? Coordinate-wise since dilations scale coordinates.
    pub fn in_dilated_box(&self, p: &LatticePoint, n: u32) -> Result<bool, CoreError> {
        for i in 0..self.dim() {
            let (lo, hi) = self.dilated_range(i, n)?;
            if p.0[i] < lo || p.0[i] >= hi {
                return Ok(false);
            }
        }
        Ok(true)
    }

    // ------------------------------------------------------------------
    // quasinorm and balls
    // ------------------------------------------------------------------

    /// Exact test |g| < r (strict) or <= r.
    pub fn qnorm_cmp(&self, g: &[Scalar], r: &Scalar, strict: bool) -> Result<bool, CoreError> {
        if !r.is_positive() {
            return Err(CoreError::Invalid("radius must be positive".into()));
        }
        match self.quasinorm {
            QuasiNorm::LInf => {
                for (i, c) in g.iter().enumerate() {
                    let bound = s_pow(r, self.group.degrees[i]);
                    let a = c.abs();
                    let ok = if strict { a < bound } else { a <= bound };
                    if !ok {
                        return Ok(false);
                    }
                }
                Ok(true)
            }
            QuasiNorm::Koranyi => {
                let plane = &g[0] * &g[0] + &g[1] * &g[1];
                let val = &plane * &plane + &g[2] * &g[2];
                let bound = s_pow(r, 4);
                Ok(if strict { val < bound } else { val <= bound })
            }
        }
    }

    pub fn qnorm_lt(&self, g: &[Scalar], r: &Scalar) -> Result<bool, CoreError> {
        self.qnorm_cmp(g, r, true)
    }

    /// Exponent L such that |g|^L is an exact rational for every rational
    /// point: 4 for the Koranyi norm, lcm of the degrees for LInf.
    pub fn qnorm_exponent(&self) -> u32 {
        match self.quasinorm {
            QuasiNorm::Koranyi => 4,
            QuasiNorm::LInf => self
                .group
                .degrees
                .iter()
                .fold(1u32, |acc, &m| num_integer::lcm(acc, m)),
        }
    }

    /// |p|^L of a lattice point as an i128, when the scales are integral
    /// and nothing overflows; None falls back to the rational path.
    pub fn qnorm_pow_point_i128(&self, p: &LatticePoint) -> Option<i128> {
        let coord = |i: usize| -> Option<i128> {
            let s = self.scales_i64[i]?;
            (p.0[i] as i128).checked_mul(s as i128)
        };
        match self.quasinorm {
            QuasiNorm::Koranyi => {
                let x = coord(0)?;
                let y = coord(1)?;
                let z = coord(2)?;
                let plane = x.checked_mul(x)?.checked_add(y.checked_mul(y)?)?;
                plane.checked_mul(plane)?.checked_add(z.checked_mul(z)?)
            }
            QuasiNorm::LInf => {
                let l = self.qnorm_exponent();
                let mut best: i128 = 0;
                for i in 0..self.dim() {
                    let c = coord(i)?.abs();
                    let e = l / self.group.degrees[i];
                    let mut v: i128 = 1;
                    for _ in 0..e {
                        v = v.checked_mul(c)?;
                    }
                    best = best.max(v);
                }
                Some(best)
            }
        }
    }

    /// |g|^L for L = qnorm_exponent(), as an exact rational. Comparing
    /// against r^L reproduces the quasinorm order.
    pub fn qnorm_pow(&self, g: &[Scalar]) -> Scalar {
        match self.quasinorm {
            QuasiNorm::Koranyi => {
                let plane = &g[0] * &g[0] + &g[1] * &g[1];
                &plane * &plane + &g[2] * &g[2]
            }
            QuasiNorm::LInf => {
                let l = self.qnorm_exponent();
                let mut best = Scalar::zero();
                for (i, c) in g.iter().enumerate() {
                    let v = s_pow(&c.abs(), l / self.group.degrees[i]);
                    if v > best {
                        best = v;
                    }
                }
                best
            }
        }
    }

    /// Lattice points gamma with |center^{-1} gamma| < r, via a bounding
    /// box scan of the difference.
    pub fn ball_lattice_points(
        &self,
        center: &LatticePoint,
        r: &Scalar,
        budget: u64,
    ) -> Result<Vec<LatticePoint>, CoreError> {
        let d = self.dim();
        // |delta| < r confines each coordinate of delta: |delta_i| < r^{mu_i}
        // for LInf; for Koranyi |x|,|y| < r and |z| < r^2, which is the same
        // bound since degrees are (1,1,2)
        let mut ranges: Vec<(i64, i64)> = Vec::with_capacity(d);
        let mut total: u128 = 1;
        for i in 0..d {
            let bound = s_pow(r, self.group.degrees[i]) / &self.scales[i];
            let hi = ceil_bigint(&bound).to_i64().ok_or(CoreError::Overflow)?;
            let lo = -hi;
            ranges.push((lo, hi));
            total = total.saturating_mul((hi - lo + 1).max(0) as u128);
        }
        if total > budget as u128 {
            return Err(CoreError::BudgetExceeded {
                needed: total.to_string(),
                budget,
            });
        }
        let mut out = Vec::new();
        let mut cur: Vec<i64> = ranges.iter().map(|r| r.0).collect();
        'scan: loop {
            let delta = LatticePoint(cur.clone());
            let g = self.point_to_element(&delta);
            if self.qnorm_lt(&g, r)? {
                out.push(self.mul_points(center, &delta)?);
            }
            let mut i = d;
            loop {
                if i == 0 {
                    break 'scan;
                }
                i -= 1;
                cur[i] += 1;
                if cur[i] <= ranges[i].1 {
                    break;
                }
                cur[i] = ranges[i].0;
            }
        }
        out.sort();
        Ok(out)
    }

    /// |B(e,r) cap Gamma| by exact counting (no materialization). LInf
    /// balls are boxes; Koranyi balls are counted fiber-wise with integer
    /// square roots.
    pub fn ball_count(&self, r: &Scalar) -> Result<BigInt, CoreError> {
        match self.quasinorm {
            QuasiNorm::LInf => {
                let mut total = BigInt::one();
                for i in 0..self.dim() {
                    let bound = s_pow(r, self.group.degrees[i]) / &self.scales[i];
                    // strict: count m with |m| < bound
                    let hi: BigInt = ceil_bigint(&bound) - 1;
                    let c = if hi.is_negative() {
                        BigInt::zero()
                    } else {
                        BigInt::from(2) * hi + 1
                    };
                    total *= c;
                }
                Ok(total)
            }
            QuasiNorm::Koranyi => {
                let r4 = s_pow(r, 4);
                let sx = &self.scales[0];
                let sy = &self.scales[1];
                let sz = &self.scales[2];
                // |x| < r, x = mx sx
                let mx_hi = (ceil_bigint(&(r / sx)) - BigInt::one())
                    .to_i64()
                    .ok_or(CoreError::Overflow)?;
                let my_hi = (ceil_bigint(&(r / sy)) - BigInt::one())
                    .to_i64()
                    .ok_or(CoreError::Overflow)?;
                let mut total = BigInt::zero();
                for mx in -mx_hi..=mx_hi {
                    for my in -my_hi..=my_hi {
                        let x = s_int(mx) * sx;
                        let y = s_int(my) * sy;
                        let plane = &x * &x + &y * &y;
                        let rem = &r4 - &plane * &plane;
                        if !rem.is_positive() {
                            continue;
                        }
                        // count mz with (mz sz)^2 < rem: mz^2 < rem / sz^2
                        let q = &rem / (sz * sz);
                        // largest mz with mz^2 <= ceil(q) - 1 when q is an
                        // integer, else floor(q)
                        let lim: BigInt = if q.denom().is_one() {
                            q.numer() - 1
                        } else {
                            q.floor().numer().clone()
                        };
                        if lim.is_negative() {
                            continue;
                        }
                        let mz_max = lim.sqrt();
                        total += BigInt::from(2) * mz_max + 1;
                    }
                }
                Ok(total)
            }
        }
    }

    // ------------------------------------------------------------------
    // splitting
    // ------------------------------------------------------------------

    /// Horizontal/vertical splitting along the top degree, with the factor
    /// sets F_H and F_V of D(V) cap Gamma.
    pub fn splitting(&self, budget: u64) -> Result<SplittingData, CoreError> {
        let d = self.dim();
        let rho = *self.group.degrees.last().unwrap();
        let j_o = self
            .group
            .degrees
            .iter()
            .position(|&m| m == rho)
            .unwrap();
        if j_o == 0 {
            return Err(CoreError::Invalid(
                "trivial splitting: all coordinates have the top degree".into(),
            ));
        }
        let mut f_h_ranges = Vec::new();
        let mut f_v_ranges = Vec::new();
        let mut h_count: u128 = 1;
        let mut v_count: u128 = 1;
        for i in 0..d {
            let (lo, hi) = self.dilated_range(i, 1)?;
            if i < j_o {
                h_count = h_count.saturating_mul((hi - lo) as u128);
                f_h_ranges.push((lo, hi));
            } else {
                v_count = v_count.saturating_mul((hi - lo) as u128);
                f_v_ranges.push((lo, hi));
            }
        }
        if v_count > budget as u128 {
            return Err(CoreError::BudgetExceeded {
                needed: v_count.to_string(),
                budget,
            });
        }
        let expand = |ranges: &[(i64, i64)]| -> Vec<Vec<i64>> {
            let mut out: Vec<Vec<i64>> = vec![vec![]];
            for &(lo, hi) in ranges {
                let mut next = Vec::with_capacity(out.len() * (hi - lo).max(0) as usize);
                for prefix in &out {
                    for m in lo..hi {
                        let mut v = prefix.clone();
                        v.push(m);
                        next.push(v);
                    }
                }
                out = next;
            }
            out
        };
        let lambda_v = {
            let mut f = BigInt::one();
            for _ in 0..rho {
                f *= to_bigint(&self.stretch).unwrap_or_else(|| {
                    // rational stretch: lambda_v = stretch^rho must still be
                    // integral by the construction checks on stretch_pows
                    BigInt::one()
                });
            }
            // stretch_pows[last] is lambda_0^{mu_d} = lambda_0^rho
            let _ = f;
            self.stretch_pows[d - 1].clone()
        };
        Ok(SplittingData {
            split_index: j_o,
            f_h: if h_count <= budget as u128 {
                Some(expand(&f_h_ranges))
            } else {
                None
            },
            f_v: expand(&f_v_ranges),
            lambda_v,
            f_h_count: BigInt::from(h_count),
        })
    }

    /// The cocycle beta(g_H, h_H): vertical multiples of (g_H,0) * (h_H,0).
    pub fn cocycle(
        &self,
        splitting: &SplittingData,
        g_h: &[i64],
        h_h: &[i64],
    ) -> Result<Vec<i64>, CoreError> {
        let d = self.dim();
        let j = splitting.split_index;
        let mut a = vec![0i64; d];
        a[..j].copy_from_slice(g_h);
        let mut b = vec![0i64; d];
        b[..j].copy_from_slice(h_h);
        let prod = self.mul_points(&LatticePoint(a), &LatticePoint(b))?;
        Ok(prod.0[j..].to_vec())
    }

    // ------------------------------------------------------------------
    // validation
    // ------------------------------------------------------------------

    /// Seeded exact validation of the datum axioms on random samples.
    pub fn validate(&self, samples: u32, seed: u64) -> ValidationReport {
        let mut report = self.group.validate(samples, seed);
        let d = self.dim();
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(0x9e37_79b9));
        let rand_pt = |rng: &mut ChaCha8Rng| -> LatticePoint {
            LatticePoint((0..d).map(|_| rng.gen_range(-6i64..=6)).collect())
        };
        let rand_box_pt = |rng: &mut ChaCha8Rng| -> Vec<Scalar> {
            (0..d)
                .map(|i| {
                    // lo + t * s with t in [0, 1) sampled over 16ths
                    let t = Scalar::new(rng.gen_range(0i64..16).into(), 16.into());
                    &self.box_lo[i] + t * &self.scales[i]
                })
                .collect()
        };
        for _ in 0..samples {
            let a = rand_pt(&mut rng);
            let b = rand_pt(&mut rng);

            // lattice closure under products and inverses
            report.checks_run += 1;
            let prod_el = self
                .group
                .multiply(&self.point_to_element(&a), &self.point_to_element(&b))
                .unwrap();
            if self.element_to_point(&prod_el).is_err() {
                report.failures.push(ValidationFailure {
                    axiom: "lattice closure (product)".into(),
                    witness: format!("{:?} * {:?}", a.0, b.0),
                });
            }
            report.checks_run += 1;
            let inv_el = self.group.inverse(&self.point_to_element(&a)).unwrap();
            if self.element_to_point(&inv_el).is_err() {
                report.failures.push(ValidationFailure {
                    axiom: "lattice closure (inverse)".into(),
                    witness: format!("{:?}", a.0),
                });
            }

            // the i128 fast path agrees with the rational law
            report.checks_run += 1;
            match self.mul_points(&a, &b) {
                Ok(fast) => {
                    let slow = self.element_to_point(&prod_el).ok();
                    if slow.as_ref() != Some(&fast) {
                        report.failures.push(ValidationFailure {
                            axiom: "multiple-law fast path".into(),
                            witness: format!("{:?} * {:?}", a.0, b.0),
                        });
                    }
                }
                Err(_) => {}
            }

            // D_{lambda_0} maps the lattice into itself
            report.checks_run += 1;
            if self.dilate_point(&a, 1).is_err() {
                report.failures.push(ValidationFailure {
                    axiom: "invariance D(Gamma) in Gamma".into(),
                    witness: format!("{:?}", a.0),
                });
            }

            // locate round trip on gamma * v
            report.checks_run += 1;
            let v = rand_box_pt(&mut rng);
            let g = self
                .group
                .multiply(&self.point_to_element(&a), &v)
                .unwrap();
            match self.locate(&g) {
                Ok((gamma, w)) => {
                    if gamma != a || w != v {
                        report.failures.push(ValidationFailure {
                            axiom: "fundamental domain (locate round trip)".into(),
                            witness: format!("gamma={:?} v={}", a.0, format_point(&v)),
                        });
                    }
                }
                Err(e) => {
                    report.failures.push(ValidationFailure {
                        axiom: "locate totality".into(),
                        witness: e.to_string(),
                    });
                }
            }

            // reconstruction g = gamma * v for arbitrary rational points
            report.checks_run += 1;
            let any: Vec<Scalar> = (0..d)
                .map(|_| Scalar::new(rng.gen_range(-40i64..=40).into(), rng.gen_range(1i64..=3).into()))
                .collect();
            match self.locate(&any) {
                Ok((gamma, w)) => {
                    let rebuilt = self
                        .group
                        .multiply(&self.point_to_element(&gamma), &w)
                        .unwrap();
                    if rebuilt != any || !self.box_contains(&w) {
                        report.failures.push(ValidationFailure {
                            axiom: "locate reconstruction".into(),
                            witness: format_point(&any),
                        });
                    }
                }
                Err(e) => {
                    report.failures.push(ValidationFailure {
                        axiom: "locate totality".into(),
                        witness: e.to_string(),
                    });
                }
            }
        }
        report
    }
}


/// Brute-force intersection of the translates x + F_V over x in F_V,
/// returning a witness when non-empty. The vertical block is abelian, so
/// translation is coordinate-wise addition of multiples.
pub fn intersection_property(splitting: &SplittingData) -> (bool, Option<Vec<i64>>) {
    let f_v: BTreeSet<Vec<i64>> = splitting.f_v.iter().cloned().collect();
    let mut inter: BTreeSet<Vec<i64>> = f_v.clone();
    for x in &splitting.f_v {
        let translated: BTreeSet<Vec<i64>> = f_v
            .iter()
            .map(|y| x.iter().zip(y).map(|(a, b)| a + b).collect())
            .collect();
        inter = inter.intersection(&translated).cloned().collect();
        if inter.is_empty() {
            return (false, None);
        }
    }
    let witness = inter.iter().next().cloned();
    (true, witness)
}

#[cfg(test)]
mod radii_tests {
    use super::*;
    use crate::bundled::{euclidean_group, gmu_datum};
    use crate::lie::default_mu;
    use crate::scalar::s_frac;

    #[test]
    fn symmetric_unit_cube_radii() {
        // cube [-1/2, 1/2)^3 with all degrees 1: r- = r+ = 1/2
        let group = GradedGroup::explicit(
            vec![1, 1, 1],
            (0..3)
                .map(|i| crate::poly::Polynomial::var(6, i).add(&crate::poly::Polynomial::var(6, 3 + i)))
                .collect(),
        )
        .unwrap();
        let datum = DilationDatum::new(
            group,
            vec![s_int(1); 3],
            vec![s_frac(-1, 2); 3],
            vec![s_frac(1, 2); 3],
            s_int(4),
            QuasiNorm::LInf,
        )
        .unwrap();
        let radii = datum.radii().unwrap();
        assert_eq!(radii.inner.cmp_scalar(&s_frac(1, 2)), std::cmp::Ordering::Equal);
        assert_eq!(radii.outer.cmp_scalar(&s_frac(1, 2)), std::cmp::Ordering::Equal);
        let _ = euclidean_group();
    }

    #[test]
    fn gmu_counts_and_splitting_witness() {
        // kappa = 12 for the bundled 7-dimensional datum, so
        // |D^n(V) cap Gamma| = stretch^{12 n} without materialization
        let datum = gmu_datum(&default_mu()).unwrap();
        let stretch = to_bigint(&datum.stretch).unwrap();
        for n in 0..=2u32 {
            let expected = stretch.pow(12 * n);
            assert_eq!(datum.count_dilated_box(n).unwrap(), expected);
        }
        // lambda_V = 7^3 is odd and the vertical box is centered, so the
        // intersection of the F_V translates contains the zero vector
        let split = datum.splitting(10_000).unwrap();
        assert_eq!(split.split_index, 6);
        assert_eq!(split.lambda_v, BigInt::from(343));
        let (holds, witness) = intersection_property(&split);
        assert!(holds);
        assert_eq!(witness, Some(vec![0]));
    }

    #[test]
    fn descend_point_matches_rational_route() {
        use rand::Rng;
        use rand_chacha::rand_core::SeedableRng;
        let datum = crate::bundled::heisenberg_datum();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        for _ in 0..200 {
            let gamma = LatticePoint(vec![
                rng.gen_range(-200i64..=200),
                rng.gen_range(-200i64..=200),
                rng.gen_range(-2000i64..=2000),
            ]);
            let (eta, zeta) = datum.descend_point(&gamma).unwrap();
            // zeta lies in D(V) cap Gamma and gamma = D(eta) * zeta
            assert!(datum.in_dilated_box(&zeta, 1).unwrap());
            let d_eta = datum.dilate_point(&eta, 1).unwrap();
            assert_eq!(datum.mul_points(&d_eta, &zeta).unwrap(), gamma);
        }
        // the 7-dimensional BCH datum exercises the deeper triangular solve
        let gmu = gmu_datum(&default_mu()).unwrap();
        for _ in 0..50 {
            let gamma = LatticePoint((0..7).map(|_| rng.gen_range(-60i64..=60)).collect());
            let (eta, zeta) = gmu.descend_point(&gamma).unwrap();
            assert!(gmu.in_dilated_box(&zeta, 1).unwrap());
            let d_eta = gmu.dilate_point(&eta, 1).unwrap();
            assert_eq!(gmu.mul_points(&d_eta, &zeta).unwrap(), gamma);
        }
    }
}
