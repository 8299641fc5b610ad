//! Empirical dynamical analysis on fixpoint windows: repetitivity
//! profiles, aperiodicity certificates, patch statistics and weighted
//! Delone export.
//!
//! All statistics are window-based; every report carries the window radius
//! and the number of positions actually tested. Nothing here claims a
//! limit, only monitored behaviour on the stated window.

use std::collections::HashMap;

use crate::error::CoreError;
use crate::fixpoint::{DenseWindow, FixpointHandle};
use crate::lattice::{DilationDatum, LatticePoint};
use crate::patch::Patch;
use crate::scalar::{s_int, s_pow, Scalar};
use crate::substitution::{support_vn, SubstitutionDatum};
use num_traits::{Signed, Zero};

fn scalar_as_i128(x: &Scalar) -> Option<i128> {
    use num_traits::{One, ToPrimitive};
    if x.denom().is_one() {
        x.numer().to_i128()
    } else {
        None
    }
}

/// Canonical r-patch of the fixpoint at position x: the patch on the fixed
/// domain B(e,r) cap Gamma with letters gamma -> omega(x * gamma). Two
/// positions carry Gamma-equivalent patches exactly when their canonical
/// patches coincide.
pub fn patch_at(
    handle: &mut FixpointHandle,
    datum: &DilationDatum,
    subst: &SubstitutionDatum,
    x: &LatticePoint,
    r: &Scalar,
    budget: u64,
) -> Result<Patch, CoreError> {
    let domain = datum.ball_lattice_points(&LatticePoint::origin(datum.dim()), r, budget)?;
    let mut pairs = Vec::with_capacity(domain.len());
    for gamma in &domain {
        let moved = datum.mul_points(x, gamma)?;
        pairs.push((gamma.clone(), handle.eval(datum, subst, &moved)?));
    }
    Patch::from_pairs(pairs)
}

#[derive(Clone, Debug)]
pub enum RowStatus {
    /// Least tested radius R such that every r-patch of the window occurs
    /// in every R-ball of the window.
    Bounded { big_r: Scalar },
    /// No tested radius certifies coverage inside this window.
    UnboundedWithinWindow,
}

#[derive(Clone, Debug)]
pub struct RepetitivityRow {
    pub r: Scalar,
    pub status: RowStatus,
    pub classes: usize,
    pub positions_tested: usize,
    pub centers_tested: usize,
    pub position_stride: usize,
    pub center_stride: usize,
}

#[derive(Clone, Debug)]
pub struct RepetitivityProfile {
    pub window: Scalar,
    pub grid_step: Scalar,
    pub rows: Vec<RepetitivityRow>,
}

/// Budgets for the profile computation; strides are derived so the tested
/// position and center sets stay under the caps (documented in the rows).
#[derive(Clone, Debug)]
pub struct ProfileBudget {
    pub positions: usize,
    pub centers: usize,
    pub points: u64,
}

impl Default for ProfileBudget {
    fn default() -> Self {
        ProfileBudget {
            positions: 40_000,
            centers: 1_500,
            points: crate::substitution::DEFAULT_BUDGET,
        }
    }
}

fn strided<T: Clone>(items: &[T], cap: usize) -> (Vec<T>, usize) {
    if items.len() <= cap || cap == 0 {
        return (items.to_vec(), 1);
    }
    let stride = items.len().div_ceil(cap);
    (
        items.iter().step_by(stride).cloned().collect(),
        stride,
    )
}

/// Repetitivity profile over a fixpoint window: for each patch radius r,
/// the least grid radius R such that every canonical r-patch collected
/// from the window occurs in every tested R-ball contained in the window.
pub fn repetitivity_profile(
    handle: &mut FixpointHandle,
    datum: &DilationDatum,
    subst: &SubstitutionDatum,
    radii: &[Scalar],
    window_radius: &Scalar,
    grid_step: &Scalar,
    budget: &ProfileBudget,
) -> Result<RepetitivityProfile, CoreError> {
    let window = DenseWindow::evaluate(handle, datum, subst, window_radius, budget.points)?;
    let l_exp = datum.qnorm_exponent();
    let mut rows = Vec::new();

    for r in radii {
        if r >= window_radius {
            rows.push(RepetitivityRow {
                r: r.clone(),
                status: RowStatus::UnboundedWithinWindow,
                classes: 0,
                positions_tested: 0,
                centers_tested: 0,
                position_stride: 1,
                center_stride: 1,
            });
            continue;
        }
        let domain =
            datum.ball_lattice_points(&LatticePoint::origin(datum.dim()), r, budget.points)?;
        // positions whose whole r-patch lies inside the window: |x| <= W - r
        let margin = s_pow(&(window_radius - r), l_exp);
        let margin_i128 = scalar_as_i128(&margin);
        let is_eligible = |p: &LatticePoint| -> bool {
            match (margin_i128, datum.qnorm_pow_point_i128(p)) {
                (Some(mb), Some(npow)) => npow <= mb,
                _ => datum.qnorm_pow(&datum.point_to_element(p)) <= margin,
            }
        };
        let mut eligible_count = 0usize;
        {
            let mut scratch = LatticePoint(vec![0; datum.dim()]);
            window.for_each_ball_point(datum, |m, _| {
                scratch.0.clear();
                scratch.0.extend_from_slice(m);
                if is_eligible(&scratch) {
                    eligible_count += 1;
                }
            });
        }
        if eligible_count == 0 {
            rows.push(RepetitivityRow {
                r: r.clone(),
                status: RowStatus::UnboundedWithinWindow,
                classes: 0,
                positions_tested: 0,
                centers_tested: 0,
                position_stride: 1,
                center_stride: 1,
            });
            continue;
        }
        let position_stride = eligible_count.div_ceil(budget.positions.max(1)).max(1);
        let mut positions: Vec<LatticePoint> = Vec::with_capacity(
            eligible_count / position_stride + 1,
        );
        let mut position_norm_pows: Vec<Scalar> = Vec::with_capacity(positions.capacity());
        {
            let mut idx = 0usize;
            let mut scratch = LatticePoint(vec![0; datum.dim()]);
            window.for_each_ball_point(datum, |m, _| {
                scratch.0.clear();
                scratch.0.extend_from_slice(m);
                if is_eligible(&scratch) {
                    if idx % position_stride == 0 {
                        let p = scratch.clone();
                        let npow = match datum.qnorm_pow_point_i128(&p) {
                            Some(v) => Scalar::from_integer(v.into()),
                            None => datum.qnorm_pow(&datum.point_to_element(&p)),
                        };
                        positions.push(p);
                        position_norm_pows.push(npow);
                    }
                    idx += 1;
                }
            });
        }

        // canonical patch fingerprints and class ids
        let mut class_ids: HashMap<Vec<u8>, u16> = HashMap::new();
        let mut pos_class: Vec<u16> = Vec::with_capacity(positions.len());
        let mut scratch: Vec<i64> = Vec::with_capacity(datum.dim());
        for x in &positions {
            let mut letters = Vec::with_capacity(domain.len());
            for gamma in &domain {
                let letter = if datum.mul_points_into(x, gamma, &mut scratch).is_some() {
                    match window.get(&scratch) {
                        Some(l) => l,
                        None => handle.eval(datum, subst, &LatticePoint(scratch.clone()))?,
                    }
                } else {
                    let moved = datum.mul_points(x, gamma)?;
                    match window.get(&moved.0) {
                        Some(l) => l,
                        None => handle.eval(datum, subst, &moved)?,
                    }
                };
                letters.push(letter);
            }
            let next = class_ids.len() as u16;
            let id = *class_ids.entry(letters).or_insert(next);
            pos_class.push(id);
        }
        let n_classes = class_ids.len();

        let center_indices: Vec<usize> = (0..positions.len()).collect();
        let (centers, center_stride) = strided(&center_indices, budget.centers);

        // per center: g(y) = max over classes of min over positions of the
        // grid bucket of |y^{-1} x|
        let grid_count: u32 = {
            // largest g with r + g*step <= window_radius
            let mut g = 0u32;
            while &(r + s_int((g + 1) as i64) * grid_step) <= window_radius {
                g += 1;
                if g > 4096 {
                    break;
                }
            }
            g
        };
        // grid bounds (g * step)^L, precomputed once; an i128 mirror makes
        // the inner distance loop allocation-free when everything is
        // integral
        let grid_bounds: Vec<Scalar> = (0..=grid_count)
            .map(|g| s_pow(&(s_int(g as i64) * grid_step), l_exp))
            .collect();
        let grid_bounds_i128: Option<Vec<i128>> = grid_bounds
            .iter()
            .map(|b| {
                use num_traits::ToPrimitive;
                if b.denom() == &num_bigint::BigInt::from(1) {
                    b.numer().to_i128()
                } else {
                    None
                }
            })
            .collect();
        // g(y) = max over classes of the least grid bucket reaching the
        // class from y; u32::MAX marks a class unreachable inside the
        // window, which forces the grid scan to exclude the center before
        // accepting an R
        let mut center_reqs: Vec<(Scalar, u32)> = Vec::with_capacity(centers.len());
        let mut delta = LatticePoint(vec![0; datum.dim()]);
        for &ci in &centers {
            let y = &positions[ci];
            let inv_y = datum.inv_point(y)?;
            let mut class_min: Vec<Option<u32>> = vec![None; n_classes];
            for (k, x) in positions.iter().enumerate() {
                if datum.mul_points_into(&inv_y, x, &mut delta.0).is_none() {
                    delta = datum.mul_points(&inv_y, x)?;
                }
                // least bucket g with |delta| <= g * step
                let fast = match (&grid_bounds_i128, datum.qnorm_pow_point_i128(&delta)) {
                    (Some(bounds), Some(npow)) => {
                        if npow > bounds[grid_count as usize] {
                            continue; // occurrence out of reach in-window
                        }
                        Some(bounds.partition_point(|b| *b < npow) as u32)
                    }
                    _ => None,
                };
                let lo = match fast {
                    Some(g) => g,
                    None => {
                        let npow = datum.qnorm_pow(&datum.point_to_element(&delta));
                        if npow > grid_bounds[grid_count as usize] {
                            continue;
                        }
                        grid_bounds.partition_point(|b| *b < npow) as u32
                    }
                };
                let cls = pos_class[k] as usize;
                class_min[cls] = Some(match class_min[cls] {
                    None => lo,
                    Some(cur) => cur.min(lo),
                });
            }
            let g_y = class_min
                .iter()
                .map(|c| c.unwrap_or(u32::MAX))
                .max()
                .unwrap_or(0);
            center_reqs.push((position_norm_pows[ci].clone(), g_y));
        }

        let status = {
            // least grid R = r + g*step such that every center y with
            // |y| <= window - R satisfies g(y) <= g
            let mut found = None;
            'grid: for g in 0..=grid_count {
                let big_r = r + s_int(g as i64) * grid_step;
                let y_bound = s_pow(&(window_radius - &big_r), l_exp);
                for (norm_pow, g_y) in &center_reqs {
                    if *norm_pow <= y_bound && *g_y > g {
                        continue 'grid;
                    }
                }
                found = Some(big_r);
                break;
            }
            match found {
                Some(big_r) => RowStatus::Bounded { big_r },
                None => RowStatus::UnboundedWithinWindow,
            }
        };
        rows.push(RepetitivityRow {
            r: r.clone(),
            status,
            classes: n_classes,
            positions_tested: positions.len(),
            centers_tested: centers.len(),
            position_stride,
            center_stride,
        });
    }
    Ok(RepetitivityProfile {
        window: window_radius.clone(),
        grid_step: grid_step.clone(),
        rows,
    })
}

/// One certified translation: the least exponent expelling gamma from
/// D^n(Gamma) and a window point witnessing gamma^{-1} omega != omega.
#[derive(Clone, Debug)]
pub struct CertificateEntry {
    pub gamma: LatticePoint,
    pub exponent: u32,
    pub witness: Option<(LatticePoint, u8, u8)>,
}

#[derive(Clone, Debug)]
pub struct AperiodicityCertificate {
    pub radius: Scalar,
    pub entries: Vec<CertificateEntry>,
}

impl AperiodicityCertificate {
    /// True when every tested translation received a difference witness.
    pub fn complete(&self) -> bool {
        self.entries.iter().all(|e| e.witness.is_some())
    }
}

/// Certifies the trivial stabilizer property on a ball: every nontrivial
/// gamma with |gamma| <= radius gets the least n (multiple of the
/// fixpoint period) with gamma outside D^n(Gamma), and a point zeta of
/// V(n) cap Gamma with omega(gamma zeta) != omega(zeta). Missing witnesses
/// are reported, not raised.
pub fn aperiodicity_certificate(
    handle: &mut FixpointHandle,
    datum: &DilationDatum,
    subst: &SubstitutionDatum,
    radius: &Scalar,
    budget: u64,
) -> Result<AperiodicityCertificate, CoreError> {
    let e = LatticePoint::origin(datum.dim());
    let mut ball = datum.ball_lattice_points(&e, radius, budget)?;
    // include the closed ball: the certificate is stated for norm <= radius
    {
        let open_count = ball.len();
        let closed: Vec<LatticePoint> = datum
            .ball_lattice_points(&e, &(radius + s_int(1)), budget)?
            .into_iter()
            .filter(|p| {
                let g = datum.point_to_element(p);
                let npow = datum.qnorm_pow(&g);
                npow <= s_pow(radius, datum.qnorm_exponent())
            })
            .collect();
        if closed.len() > open_count {
            ball = closed;
        }
    }
    let k = handle.period;
    let mut entries = Vec::new();
    for gamma in &ball {
        if gamma.is_origin() {
            continue;
        }
        let mut exponent = None;
        for m in 1..=64u32 {
            let n = m * k;
            if !datum.in_dilated_lattice(gamma, n) {
                exponent = Some(n);
                break;
            }
        }
        let Some(n) = exponent else {
            entries.push(CertificateEntry {
                gamma: gamma.clone(),
                exponent: 0,
                witness: None,
            });
            continue;
        };
        let window = support_vn(datum, &[e.clone()], n, budget)?;
        let mut witness = None;
        for zeta in &window {
            let moved = datum.mul_points(gamma, zeta)?;
            let a = handle.eval(datum, subst, &moved)?;
            let b = handle.eval(datum, subst, zeta)?;
            if a != b {
                witness = Some((zeta.clone(), a, b));
                break;
            }
        }
        entries.push(CertificateEntry {
            gamma: gamma.clone(),
            exponent: n,
            witness,
        });
    }
    Ok(AperiodicityCertificate {
        radius: radius.clone(),
        entries,
    })
}

#[derive(Clone, Debug)]
pub struct FrequencyRow {
    pub r: Scalar,
    pub counts: Vec<u64>,
    pub total: u64,
}

impl FrequencyRow {
    pub fn frequency(&self, letter: usize) -> Scalar {
        if self.total == 0 {
            return Scalar::zero();
        }
        Scalar::new(
            (self.counts[letter] as i64).into(),
            (self.total as i64).into(),
        )
    }
}

#[derive(Clone, Debug)]
pub struct FrequencyTable {
    pub rows: Vec<FrequencyRow>,
}

/// Exact letter counts of the fixpoint over the balls B(e, r) cap Gamma.
pub fn letter_frequencies(
    handle: &mut FixpointHandle,
    datum: &DilationDatum,
    subst: &SubstitutionDatum,
    radii: &[Scalar],
    budget: u64,
) -> Result<FrequencyTable, CoreError> {
    let mut sorted: Vec<Scalar> = radii.to_vec();
    sorted.sort();
    let Some(max_r) = sorted.last().cloned() else {
        return Ok(FrequencyTable { rows: vec![] });
    };
    let window = DenseWindow::evaluate(handle, datum, subst, &max_r, budget)?;
    let l_exp = datum.qnorm_exponent();
    let k = subst.alphabet.len();
    // one streaming pass bins every window point into the radius buckets
    let bounds: Vec<Scalar> = radii.iter().map(|r| s_pow(r, l_exp)).collect();
    let bounds_i128: Option<Vec<i128>> = bounds.iter().map(scalar_as_i128).collect();
    let mut counts = vec![vec![0u64; k]; radii.len()];
    let mut totals = vec![0u64; radii.len()];
    let mut scratch = LatticePoint(vec![0; datum.dim()]);
    window.for_each_ball_point(datum, |m, letter| {
        scratch.0.clear();
        scratch.0.extend_from_slice(m);
        match (&bounds_i128, datum.qnorm_pow_point_i128(&scratch)) {
            (Some(bs), Some(npow)) => {
                for (bi, b) in bs.iter().enumerate() {
                    if npow < *b {
                        counts[bi][letter as usize] += 1;
                        totals[bi] += 1;
                    }
                }
            }
            _ => {
                let npow = datum.qnorm_pow(&datum.point_to_element(&scratch));
                for (bi, bound) in bounds.iter().enumerate() {
                    if &npow < bound {
                        counts[bi][letter as usize] += 1;
                        totals[bi] += 1;
                    }
                }
            }
        }
    });
    let rows = radii
        .iter()
        .enumerate()
        .map(|(bi, r)| FrequencyRow {
            r: r.clone(),
            counts: counts[bi].clone(),
            total: totals[bi],
        })
        .collect();
    Ok(FrequencyTable { rows })
}

/// Weighted Delone export: each window point paired with the weight of its
/// letter. The letter-to-weight map must be injective with positive
/// weights.
pub fn export_weighted_delone(
    datum: &DilationDatum,
    patch: &Patch,
    weights: &[Scalar],
) -> Result<Vec<(Vec<Scalar>, Scalar)>, CoreError> {
    for (i, w) in weights.iter().enumerate() {
        if !w.is_positive() {
            return Err(CoreError::Invalid(format!(
                "weight for letter index {i} must be positive"
            )));
        }
        for (j, w2) in weights.iter().enumerate().skip(i + 1) {
            if w == w2 {
                return Err(CoreError::Invalid(format!(
                    "weights for letter indices {i} and {j} coincide (map must be injective)"
                )));
            }
        }
    }
    let mut out = Vec::with_capacity(patch.len());
    for (p, l) in patch.iter() {
        let coords = datum.point_to_element(p);
        let Some(w) = weights.get(l as usize) else {
            return Err(CoreError::Invalid(format!(
                "no weight for letter index {l}"
            )));
        };
        out.push((coords, w.clone()));
    }
    Ok(out)
}
