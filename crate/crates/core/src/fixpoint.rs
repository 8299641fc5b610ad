//! Lazy evaluation of substitution fixpoints.
//!
//! The letter map f(a) = S_0(a)(e) eventually cycles; a cycle letter c of
//! length k seeds an S^k-fixpoint whose restriction to V(nk) cap Gamma
//! equals S^{nk}(P_c). Pointwise values are computed by localizing
//! D^{-1}(gamma) one level down and descending until the identity, with the
//! whole S-orbit of the fixpoint memoized (one table per orbit element).

use std::collections::HashMap;


use crate::error::CoreError;
use crate::lattice::{DilationDatum, LatticePoint};
use crate::patch::Patch;
use crate::scalar::Scalar;
use crate::substitution::{iterate, support_vn, SubstitutionDatum};

/// Handle to an S^k-fixpoint, evaluated lazily with memoization.
#[derive(Debug)]
pub struct FixpointHandle {
    /// Letter the evaluation chain terminates in at the identity.
    pub cycle_letter: u8,
    /// Pre-period of the letter map before entering the cycle.
    pub preperiod: u32,
    /// Cycle length k: the handle represents an S^k-fixpoint.
    pub period: u32,
    /// memo[j] caches values of S^j(omega) for j in 0..k.
    memos: Vec<HashMap<LatticePoint, u8>>,
}

/// Cycle data of the letter map a -> S_0(a)(e) starting from `start`.
pub fn letter_cycle(subst: &SubstitutionDatum, dim: usize, start: u8) -> (u32, u32, u8) {
    let origin = LatticePoint::origin(dim);
    let step = |l: u8| -> u8 {
        subst.table[l as usize]
            .get(&origin)
            .expect("table rows contain the identity")
    };
    let mut seen: Vec<u8> = vec![start];
    let mut cur = start;
    loop {
        cur = step(cur);
        if let Some(pos) = seen.iter().position(|&l| l == cur) {
            let preperiod = pos as u32;
            let period = (seen.len() - pos) as u32;
            return (preperiod, period, cur);
        }
        seen.push(cur);
    }
}

impl FixpointHandle {
    /// Builds the fixpoint handle seeded from the given start letter.
    pub fn new(datum: &DilationDatum, subst: &SubstitutionDatum, start: u8) -> Self {
        let (preperiod, period, cycle_letter) = letter_cycle(subst, datum.dim(), start);
        FixpointHandle {
            cycle_letter,
            preperiod,
            period,
            memos: (0..period).map(|_| HashMap::new()).collect(),
        }
    }

    /// Letter of S^j(omega) at the identity: f^j(c).
    pub(crate) fn cycle_value_pub(&self, subst: &SubstitutionDatum, dim: usize, j: u32) -> u8 {
        self.cycle_value(subst, dim, j)
    }

    fn cycle_value(&self, subst: &SubstitutionDatum, dim: usize, j: u32) -> u8 {
        let origin = LatticePoint::origin(dim);
        let mut l = self.cycle_letter;
        for _ in 0..j {
            l = subst.table[l as usize].get(&origin).unwrap();
        }
        l
    }

    /// omega(gamma) for the S^k-fixpoint omega.
    pub fn eval(
        &mut self,
        datum: &DilationDatum,
        subst: &SubstitutionDatum,
        gamma: &LatticePoint,
    ) -> Result<u8, CoreError> {
        self.eval_orbit(datum, subst, 0, gamma)
    }

    /// Value of S^j(omega) at gamma; descending one substitution level
    /// moves from orbit index j to j-1 (mod k).
    fn eval_orbit(
        &mut self,
        datum: &DilationDatum,
        subst: &SubstitutionDatum,
        orbit: u32,
        gamma: &LatticePoint,
    ) -> Result<u8, CoreError> {
        let k = self.period;
        let dim = datum.dim();
        // descend: stack of (orbit index, point, cell offset used to climb
        // back up)
        let mut stack: Vec<(u32, LatticePoint, LatticePoint)> = Vec::new();
        let mut j = orbit;
        let mut cur = gamma.clone();
        let base_letter = loop {
            if let Some(&l) = self.memos[j as usize].get(&cur) {
                break l;
            }
            if cur.is_origin() {
                break self.cycle_value(subst, dim, j);
            }
            let (eta, zeta) = datum.descend_point(&cur)?;
            stack.push((j, cur.clone(), zeta));
            j = (j + k - 1) % k;
            cur = eta;
        };
        // climb back up, applying the table row of the level below
        let mut letter = base_letter;
        while let Some((level, point, zeta)) = stack.pop() {
            letter = subst.table[letter as usize]
                .get(&zeta)
                .ok_or_else(|| {
                    CoreError::Invalid(
                        "internal consistency violation: descent offset outside D(V) cap Gamma"
                            .into(),
                    )
                })?;
            self.memos[level as usize].insert(point, letter);
        }
        Ok(letter)
    }

    /// The fixpoint restricted to a point set, as a patch.
    pub fn eval_patch(
        &mut self,
        datum: &DilationDatum,
        subst: &SubstitutionDatum,
        points: &[LatticePoint],
    ) -> Result<Patch, CoreError> {
        let mut pairs = Vec::with_capacity(points.len());
        for p in points {
            pairs.push((p.clone(), self.eval(datum, subst, p)?));
        }
        Patch::from_pairs(pairs)
    }

    /// Checks the defining window identity: omega restricted to
    /// V(nk) cap Gamma equals S^{nk}(P_c).
    pub fn window_identity(
        &mut self,
        datum: &DilationDatum,
        subst: &SubstitutionDatum,
        n: u32,
        budget: u64,
    ) -> Result<bool, CoreError> {
        let steps = n * self.period;
        let expected = iterate(datum, subst, self.cycle_letter, steps, budget)?;
        let window = support_vn(
            datum,
            &[LatticePoint::origin(datum.dim())],
            steps,
            budget,
        )?;
        if expected.support() != window.as_slice() {
            return Ok(false);
        }
        let actual = self.eval_patch(datum, subst, &window)?;
        Ok(actual == expected)
    }
}

/// Dense letter storage over the multiples bounding box of a ball window.
/// The grid itself serves as the evaluation memo, so windows of millions
/// of points cost one byte each. Chain points outside the box and the
/// intermediate fixpoint orbits (period > 1) spill into small side maps.
#[derive(Clone, Debug)]
pub struct DenseWindow {
    pub radius: Scalar,
    lo: Vec<i64>,
    extents: Vec<usize>,
    data: Vec<u8>,
    /// number of lattice points inside the ball
    pub ball_count: usize,
}

const UNKNOWN: u8 = u8::MAX;

impl DenseWindow {
    /// Evaluates the fixpoint on all lattice points of the quasinorm ball
    /// B(e, radius). The handle provides the cycle data; its hash memo is
    /// bypassed in favour of the dense grid.
    pub fn evaluate(
        handle: &mut FixpointHandle,
        datum: &DilationDatum,
        subst: &SubstitutionDatum,
        radius: &Scalar,
        budget: u64,
    ) -> Result<DenseWindow, CoreError> {
        let d = datum.dim();
        // bounding multiple ranges of the ball: |g_i| < radius^{mu_i}
        let mut lo = Vec::with_capacity(d);
        let mut extents = Vec::with_capacity(d);
        let mut volume: u128 = 1;
        for i in 0..d {
            let bound = crate::scalar::s_pow(radius, datum.group.degrees[i]) / &datum.scales[i];
            let hi = crate::scalar::ceil_bigint(&bound);
            let hi: i64 = num_traits::ToPrimitive::to_i64(&hi).ok_or(CoreError::Overflow)?;
            lo.push(-hi);
            extents.push((2 * hi + 1) as usize);
            volume = volume.saturating_mul((2 * hi + 1) as u128);
        }
        if volume > (budget as u128) * 8 {
            return Err(CoreError::BudgetExceeded {
                needed: volume.to_string(),
                budget,
            });
        }
        let mut win = DenseWindow {
            radius: radius.clone(),
            lo,
            extents,
            data: vec![UNKNOWN; volume as usize],
            ball_count: 0,
        };

        let k = handle.period;
        // side memos for intermediate orbits and points outside the box
        let mut side: Vec<std::collections::HashMap<LatticePoint, u8>> =
            (0..k).map(|_| std::collections::HashMap::new()).collect();

        let l_exp = datum.qnorm_exponent();
        let bound_pow = crate::scalar::s_pow(radius, l_exp);
        let bound_i128 = scalar_to_i128(&bound_pow);

        let mut count = 0usize;
        let mut cursor = vec![0usize; d];
        let mut point = LatticePoint(win.lo.clone());
        loop {
            // ball membership, strict
            let inside = match (bound_i128, datum.qnorm_pow_point_i128(&point)) {
                (Some(b), Some(npow)) => npow < b,
                _ => {
                    let g = datum.point_to_element(&point);
                    datum.qnorm_pow(&g) < bound_pow
                }
            };
            if inside {
                count += 1;
                // descend with the dense grid as the orbit-0 memo
                let mut stack: Vec<(u32, LatticePoint, LatticePoint)> = Vec::new();
                let mut j = 0u32;
                let mut cur = point.clone();
                let base = loop {
                    if cur.is_origin() {
                        break handle.cycle_value_pub(subst, d, j);
                    }
                    let known = if j == 0 {
                        win.get(&cur.0)
                    } else {
                        side[j as usize].get(&cur).copied()
                    };
                    if let Some(l) = known {
                        break l;
                    }
                    let (eta, zeta) = datum.descend_point(&cur)?;
                    stack.push((j, cur.clone(), zeta));
                    j = (j + k - 1) % k;
                    cur = eta;
                };
                let mut letter = base;
                while let Some((level, p, zeta)) = stack.pop() {
                    letter = subst.table[letter as usize].get(&zeta).ok_or_else(|| {
                        CoreError::Invalid(
                            "internal consistency violation: descent offset outside D(V) cap Gamma"
                                .into(),
                        )
                    })?;
                    if level == 0 {
                        if let Some(idx) = Self::offset(&win.lo, &win.extents, &p.0) {
                            win.data[idx] = letter;
                        } else {
                            side[0].insert(p, letter);
                        }
                    } else {
                        side[level as usize].insert(p, letter);
                    }
                }
                // ensure the queried point itself is stored
                if let Some(idx) = Self::offset(&win.lo, &win.extents, &point.0) {
                    if win.data[idx] == UNKNOWN {
                        win.data[idx] = letter;
                    }
                }
            }
            // advance the grid cursor
            let mut i = d;
            let done = loop {
                if i == 0 {
                    break true;
                }
                i -= 1;
                cursor[i] += 1;
                point.0[i] += 1;
                if cursor[i] < win.extents[i] {
                    break false;
                }
                cursor[i] = 0;
                point.0[i] = win.lo[i];
            };
            if done {
                break;
            }
        }
        win.ball_count = count;
        Ok(win)
    }

    fn offset(lo: &[i64], extents: &[usize], m: &[i64]) -> Option<usize> {
        let mut idx = 0usize;
        for i in 0..lo.len() {
            let rel = m[i].checked_sub(lo[i])?;
            if rel < 0 || rel as usize >= extents[i] {
                return None;
            }
            idx = idx * extents[i] + rel as usize;
        }
        Some(idx)
    }

    pub fn get(&self, m: &[i64]) -> Option<u8> {
        let idx = Self::offset(&self.lo, &self.extents, m)?;
        match self.data[idx] {
            UNKNOWN => None,
            l => Some(l),
        }
    }

    /// Visits every lattice point of the ball in multiples-lexicographic
    /// order with its letter.
    pub fn for_each_ball_point<F: FnMut(&[i64], u8)>(
        &self,
        datum: &DilationDatum,
        mut f: F,
    ) {
        let d = self.lo.len();
        let l_exp = datum.qnorm_exponent();
        let bound_pow = crate::scalar::s_pow(&self.radius, l_exp);
        let bound_i128 = scalar_to_i128(&bound_pow);
        let mut cursor = vec![0usize; d];
        let mut point = LatticePoint(self.lo.clone());
        loop {
            let inside = match (bound_i128, datum.qnorm_pow_point_i128(&point)) {
                (Some(b), Some(npow)) => npow < b,
                _ => {
                    let g = datum.point_to_element(&point);
                    datum.qnorm_pow(&g) < bound_pow
                }
            };
            if inside {
                if let Some(l) = self.get(&point.0) {
                    f(&point.0, l);
                }
            }
            let mut i = d;
            let done = loop {
                if i == 0 {
                    break true;
                }
                i -= 1;
                cursor[i] += 1;
                point.0[i] += 1;
                if cursor[i] < self.extents[i] {
                    break false;
                }
                cursor[i] = 0;
                point.0[i] = self.lo[i];
            };
            if done {
                return;
            }
        }
    }
}

fn scalar_to_i128(x: &Scalar) -> Option<i128> {
    use num_traits::ToPrimitive;
    if num_traits::One::is_one(x.denom()) {
        x.numer().to_i128()
    } else {
        None
    }
}
