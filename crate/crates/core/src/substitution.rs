//! The substitution map and its combinatorial checkers.
//!
//! A substitution datum assigns to each letter a patch supported exactly on
//! D(V) cap Gamma. The induced map S on patches is the unique extension
//! that sends one-letter patches to their table rows, commutes with the
//! dilation on translations and is locally defined on unions. Two
//! independent implementations are kept: per-input-cell stamping (the fast
//! path) and per-output-point localization; tests and the acceptance suite
//! cross-validate them.

use std::collections::BTreeSet;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::CoreError;
use crate::lattice::{intersection_property, DilationDatum, LatticePoint};
use crate::patch::{Alphabet, Patch};

/// Default cap on materialized patch sizes; CLI flags and callers override.
pub const DEFAULT_BUDGET: u64 = 4_000_000;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SubstitutionDatum {
    pub alphabet: Alphabet,
    /// One patch per letter, each supported exactly on D(V) cap Gamma.
    pub table: Vec<Patch>,
}

impl SubstitutionDatum {
    pub fn new(alphabet: Alphabet, table: Vec<Patch>) -> Result<Self, CoreError> {
        if table.len() != alphabet.len() {
            return Err(CoreError::DimensionMismatch {
                expected: alphabet.len(),
                got: table.len(),
            });
        }
        Ok(SubstitutionDatum { alphabet, table })
    }

    /// Checks the support condition against the dilation datum: every
    /// table row lives exactly on D(V) cap Gamma.
    pub fn validate(&self, datum: &DilationDatum, budget: u64) -> Result<(), CoreError> {
        let cell = datum.enumerate_dilated_box(1, budget)?;
        for (idx, patch) in self.table.iter().enumerate() {
            if patch.support() != cell.as_slice() {
                return Err(CoreError::Invalid(format!(
                    "table row for letter `{}` is not supported exactly on D(V) cap Gamma",
                    self.alphabet.name(idx as u8)
                )));
            }
        }
        Ok(())
    }
}

/// supp(S^n(P)) for supports M in Gamma: W_0 = M and
/// W_{k+1} = union over eta in W_k of D(eta) (D(V) cap Gamma), a disjoint
/// union. Returned sorted.
pub fn support_vn(
    datum: &DilationDatum,
    m: &[LatticePoint],
    n: u32,
    budget: u64,
) -> Result<Vec<LatticePoint>, CoreError> {
    let cell = datum.enumerate_dilated_box(1, budget)?;
    let mut current: Vec<LatticePoint> = {
        let set: BTreeSet<LatticePoint> = m.iter().cloned().collect();
        set.into_iter().collect()
    };
    for _ in 0..n {
        let needed = current.len() as u128 * cell.len() as u128;
        if needed > budget as u128 {
            return Err(CoreError::BudgetExceeded {
                needed: needed.to_string(),
                budget,
            });
        }
        let mut next = Vec::with_capacity(needed as usize);
        for eta in &current {
            let d_eta = datum.dilate_point(eta, 1)?;
            for zeta in &cell {
                next.push(datum.mul_points(&d_eta, zeta)?);
            }
        }
        next.sort();
        next.dedup();
        current = next;
    }
    Ok(current)
}

/// Fast substitution: stamp the table row of each input cell onto its
/// dilated block D(eta)(D(V) cap Gamma); the blocks are pairwise disjoint.
pub fn substitute_stamp(
    datum: &DilationDatum,
    subst: &SubstitutionDatum,
    patch: &Patch,
    budget: u64,
) -> Result<Patch, CoreError> {
    let cell = datum.enumerate_dilated_box(1, budget)?;
    let needed = patch.len() as u128 * cell.len() as u128;
    if needed > budget as u128 {
        return Err(CoreError::BudgetExceeded {
            needed: needed.to_string(),
            budget,
        });
    }
    let mut pairs = Vec::with_capacity(needed as usize);
    for (eta, letter) in patch.iter() {
        let d_eta = datum.dilate_point(eta, 1)?;
        let row = &subst.table[letter as usize];
        debug_assert_eq!(row.support(), cell.as_slice());
        for (zeta, out_letter) in row.iter() {
            pairs.push((datum.mul_points(&d_eta, zeta)?, out_letter));
        }
    }
    Patch::from_pairs(pairs)
}

/// Independent substitution: computes the same support, then derives each
/// output letter by localizing D^{-1}(gamma) back into an input cell.
pub fn substitute_locate(
    datum: &DilationDatum,
    subst: &SubstitutionDatum,
    patch: &Patch,
    budget: u64,
) -> Result<Patch, CoreError> {
    let cell = datum.enumerate_dilated_box(1, budget)?;
    let needed = patch.len() as u128 * cell.len() as u128;
    if needed > budget as u128 {
        return Err(CoreError::BudgetExceeded {
            needed: needed.to_string(),
            budget,
        });
    }
    // candidate output points
    let mut points = Vec::with_capacity(needed as usize);
    for (eta, _) in patch.iter() {
        let d_eta = datum.dilate_point(eta, 1)?;
        for zeta in &cell {
            points.push(datum.mul_points(&d_eta, zeta)?);
        }
    }
    points.sort();
    let mut pairs = Vec::with_capacity(points.len());
    let inv_stretch = {
        use num_traits::One;
        let one = crate::scalar::Scalar::one();
        one / &datum.stretch
    };
    for gamma in points {
        let g = datum.point_to_element(&gamma);
        let shrunk = datum.group.dilate(&g, &inv_stretch)?;
        let (eta, v) = datum.locate(&shrunk)?;
        let Some(p_letter) = patch.get(&eta) else {
            return Err(CoreError::Invalid(format!(
                "internal consistency violation: output point {:?} localizes outside the input support",
                gamma.0
            )));
        };
        let zeta_el = datum.group.dilate(&v, &datum.stretch)?;
        let zeta = datum.element_to_point(&zeta_el)?;
        let Some(letter) = subst.table[p_letter as usize].get(&zeta) else {
            return Err(CoreError::Invalid(
                "internal consistency violation: localized cell offset outside D(V) cap Gamma".into(),
            ));
        };
        pairs.push((gamma, letter));
    }
    Patch::from_pairs(pairs)
}

/// S^n applied to the one-letter patch P_a.
pub fn iterate(
    datum: &DilationDatum,
    subst: &SubstitutionDatum,
    letter: u8,
    n: u32,
    budget: u64,
) -> Result<Patch, CoreError> {
    iterate_jobs(datum, subst, letter, n, budget, 1)
}

/// S^n(P_a) with the stamping pass of each step split across a worker
/// pool. Output order is canonical regardless of the job count: the
/// stamped blocks are disjoint, and the final patch is sorted.
pub fn iterate_jobs(
    datum: &DilationDatum,
    subst: &SubstitutionDatum,
    letter: u8,
    n: u32,
    budget: u64,
    jobs: usize,
) -> Result<Patch, CoreError> {
    let jobs = jobs.max(1);
    let mut patch = Patch::single(datum.dim(), letter);
    for _ in 0..n {
        patch = if jobs == 1 || patch.len() < 4 * jobs {
            substitute_stamp(datum, subst, &patch, budget)?
        } else {
            let cell = datum.enumerate_dilated_box(1, budget)?;
            let needed = patch.len() as u128 * cell.len() as u128;
            if needed > budget as u128 {
                return Err(CoreError::BudgetExceeded {
                    needed: needed.to_string(),
                    budget,
                });
            }
            let pairs: Vec<(LatticePoint, u8)> = patch.iter().map(|(p, l)| (p.clone(), l)).collect();
            let chunk = pairs.len().div_ceil(jobs);
            let results: Vec<Result<Vec<(LatticePoint, u8)>, CoreError>> =
                std::thread::scope(|scope| {
                    let handles: Vec<_> = pairs
                        .chunks(chunk)
                        .map(|slice| {
                            let cell = &cell;
                            scope.spawn(move || -> Result<Vec<(LatticePoint, u8)>, CoreError> {
                                let mut out = Vec::with_capacity(slice.len() * cell.len());
                                for (eta, letter) in slice {
                                    let d_eta = datum.dilate_point(eta, 1)?;
                                    let row = &subst.table[*letter as usize];
                                    for (zeta, out_letter) in row.iter() {
                                        out.push((datum.mul_points(&d_eta, zeta)?, out_letter));
                                    }
                                }
                                Ok(out)
                            })
                        })
                        .collect();
                    handles.into_iter().map(|h| h.join().unwrap()).collect()
                });
            let mut all = Vec::with_capacity(needed as usize);
            for r in results {
                all.extend(r?);
            }
            Patch::from_pairs(all)?
        };
    }
    Ok(patch)
}

/// Legality certificate: the least (n, letter, translation) with
/// P occurring in S^n(P_a) at that translation, searched up to n_max.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LegalityWitness {
    pub n: u32,
    pub letter: u8,
    pub translation: LatticePoint,
}

/// Searches n <= n_max and all letters for an occurrence of `patch` inside
/// S^n(P_a) up to lattice translation. Legality is semi-decidable; the
/// bound turns the search into a certificate search.
pub fn is_legal(
    datum: &DilationDatum,
    subst: &SubstitutionDatum,
    patch: &Patch,
    n_max: u32,
    budget: u64,
) -> Result<Option<LegalityWitness>, CoreError> {
    if patch.is_empty() {
        return Ok(Some(LegalityWitness {
            n: 0,
            letter: 0,
            translation: LatticePoint::origin(datum.dim()),
        }));
    }
    // anchor the first support point: each candidate position q in the big
    // patch determines the unique translation moving the anchor onto q
    let anchor = &patch.support()[0];
    let anchor_inv = datum.inv_point(anchor)?;
    for n in 0..=n_max {
        for letter in 0..subst.alphabet.len() as u8 {
            let big = iterate(datum, subst, letter, n, budget)?;
            'candidate: for q in big.support() {
                let gamma = datum.mul_points(q, &anchor_inv)?;
                for (p, l) in patch.iter() {
                    let moved = datum.mul_points(&gamma, p)?;
                    if big.get(&moved) != Some(l) {
                        continue 'candidate;
                    }
                }
                return Ok(Some(LegalityWitness {
                    n,
                    letter,
                    translation: gamma,
                }));
            }
        }
    }
    Ok(None)
}

/// Incidence matrix M[a][b] = number of occurrences of letter a in S(P_b).
pub fn incidence_matrix(subst: &SubstitutionDatum) -> Vec<Vec<u64>> {
    let k = subst.alphabet.len();
    let mut m = vec![vec![0u64; k]; k];
    for (b, row) in subst.table.iter().enumerate() {
        for count_pair in row.letter_counts(k).iter().enumerate() {
            m[count_pair.0][b] = *count_pair.1;
        }
    }
    m
}

/// Least L with M^L entrywise positive, bounded by the Wielandt number
/// |A|^2 - 2|A| + 2; None when no such power exists.
pub fn is_primitive(subst: &SubstitutionDatum) -> Option<u32> {
    let k = subst.alphabet.len();
    let m = incidence_matrix(subst);
    let bound = (k * k).saturating_sub(2 * k) + 2;
    // boolean reachability powers suffice for positivity
    let mut reach: Vec<Vec<bool>> = m
        .iter()
        .map(|row| row.iter().map(|&x| x > 0).collect())
        .collect();
    let base = reach.clone();
    for l in 1..=bound as u32 {
        if reach.iter().all(|row| row.iter().all(|&x| x)) {
            return Some(l);
        }
        // reach = base * reach
        let mut next = vec![vec![false; k]; k];
        for i in 0..k {
            for j in 0..k {
                for t in 0..k {
                    if base[i][t] && reach[t][j] {
                        next[i][j] = true;
                        break;
                    }
                }
            }
        }
        reach = next;
    }
    None
}

/// Result of the non-periodicity check of a substitution datum: S_0 must
/// be injective and every nontrivial translate of a one-letter image must
/// differ from every one-letter image on the overlap window.
#[derive(Clone, Debug)]
pub struct NonPeriodicityReport {
    pub injective: bool,
    /// Letter pairs with identical table rows.
    pub injectivity_collisions: Vec<(u8, u8)>,
    /// Triples (gamma, a, b) with no difference witness on the window;
    /// empty overlap windows are failures (the inequality cannot hold on
    /// an empty domain) and carry `empty_window = true`.
    pub failures: Vec<NonPeriodicityFailure>,
}

#[derive(Clone, Debug)]
pub struct NonPeriodicityFailure {
    pub gamma: LatticePoint,
    pub letter_a: u8,
    pub letter_b: u8,
    pub empty_window: bool,
}

impl NonPeriodicityReport {
    pub fn non_periodic(&self) -> bool {
        self.injective && self.failures.is_empty()
    }
}

/// Checks Definition-style non-periodicity by brute force over the cell.
pub fn is_nonperiodic(
    datum: &DilationDatum,
    subst: &SubstitutionDatum,
    budget: u64,
) -> Result<NonPeriodicityReport, CoreError> {
    let k = subst.alphabet.len() as u8;
    let mut collisions = Vec::new();
    for a in 0..k {
        for b in (a + 1)..k {
            if subst.table[a as usize] == subst.table[b as usize] {
                collisions.push((a, b));
            }
        }
    }
    let cell = datum.enumerate_dilated_box(1, budget)?;
    let mut failures = Vec::new();
    for gamma in &cell {
        if gamma.is_origin() {
            continue;
        }
        // overlap window: zeta in D(V) cap Gamma with gamma * zeta in D(V)
        let mut window = Vec::new();
        for zeta in &cell {
            let moved = datum.mul_points(gamma, zeta)?;
            if datum.in_dilated_box(&moved, 1)? {
                window.push((zeta.clone(), moved));
            }
        }
        for a in 0..k {
            for b in 0..k {
                if window.is_empty() {
                    failures.push(NonPeriodicityFailure {
                        gamma: gamma.clone(),
                        letter_a: a,
                        letter_b: b,
                        empty_window: true,
                    });
                    continue;
                }
                let found = window.iter().any(|(zeta, moved)| {
                    subst.table[a as usize].get(moved) != subst.table[b as usize].get(zeta)
                });
                if !found {
                    failures.push(NonPeriodicityFailure {
                        gamma: gamma.clone(),
                        letter_a: a,
                        letter_b: b,
                        empty_window: false,
                    });
                }
            }
        }
    }
    Ok(NonPeriodicityReport {
        injective: collisions.is_empty(),
        injectivity_collisions: collisions,
        failures,
    })
}

/// Cell-filling policy for the unconstrained entries of a good
/// substitution rule.
#[derive(Clone, Debug)]
pub enum FillPolicy {
    /// Every free cell receives the given letter.
    Constant(u8),
    /// Free cells receive seeded uniform letters.
    Seeded(u64),
}

/// Explicit choices for the good-substitution construction; `None` fields
/// are picked deterministically.
#[derive(Clone, Debug, Default)]
pub struct GoodChoices {
    /// Two distinct nontrivial horizontal multiples (length split_index).
    pub gamma1: Option<Vec<i64>>,
    pub gamma2: Option<Vec<i64>>,
    /// Vertical multiples (length dim - split_index).
    pub x1: Option<Vec<i64>>,
    pub x2: Option<Vec<i64>>,
    /// One distinct vertical point per letter other than the base letter.
    pub x_letters: Option<Vec<Vec<i64>>>,
}

/// Builds a good substitution rule over the datum's splitting: the base
/// letter fills Xi_a, every Xi_o cell avoids the base letter, the column
/// over gamma2 encodes every letter once, and the (gamma2, x2) cell carries
/// the image letter itself. The construction yields a primitive and
/// non-periodic datum.
pub fn build_good(
    datum: &DilationDatum,
    alphabet: &Alphabet,
    fill: &FillPolicy,
    choices: &GoodChoices,
    budget: u64,
) -> Result<SubstitutionDatum, CoreError> {
    let k = alphabet.len();
    if k < 2 {
        return Err(CoreError::Invalid(
            "good substitution needs at least 2 letters".into(),
        ));
    }
    let split = datum.splitting(budget)?;
    let j = split.split_index;
    let dim = datum.dim();
    let Some(f_h) = &split.f_h else {
        return Err(CoreError::BudgetExceeded {
            needed: split.f_h_count.to_string(),
            budget,
        });
    };
    if f_h.len() < 3 {
        return Err(CoreError::Invalid(format!(
            "|F_H| = {} < 3: stretch factor too small for the good construction",
            f_h.len()
        )));
    }
    if split.f_v.len() < k + 1 {
        return Err(CoreError::Invalid(format!(
            "|F_V| = {} < |alphabet| + 1 = {}",
            split.f_v.len(),
            k + 1
        )));
    }
    let (holds, witness) = intersection_property(&split);
    if !holds {
        return Err(CoreError::Invalid(
            "intersection property fails for F_V".into(),
        ));
    }

    let zero_h = vec![0i64; j];
    let nontrivial_h: Vec<Vec<i64>> = f_h.iter().filter(|h| **h != zero_h).cloned().collect();
    let gamma1 = choices
        .gamma1
        .clone()
        .unwrap_or_else(|| nontrivial_h[0].clone());
    let gamma2 = choices
        .gamma2
        .clone()
        .unwrap_or_else(|| nontrivial_h.iter().find(|h| **h != gamma1).unwrap().clone());
    if gamma1 == zero_h || gamma2 == zero_h || gamma1 == gamma2 {
        return Err(CoreError::Invalid(
            "gamma1, gamma2 must be distinct nontrivial horizontal points".into(),
        ));
    }
    if !f_h.contains(&gamma1) || !f_h.contains(&gamma2) {
        return Err(CoreError::Invalid("gamma1, gamma2 must lie in F_H".into()));
    }
    let x1 = match choices.x1.clone() {
        Some(x) => x,
        None => witness.unwrap(),
    };
    // x1 must lie in the intersection of all translates x + F_V
    {
        let f_v_set: BTreeSet<&Vec<i64>> = split.f_v.iter().collect();
        for x in &split.f_v {
            let shifted: Vec<i64> = x1.iter().zip(x).map(|(a, b)| a - b).collect();
            if !f_v_set.contains(&shifted) {
                return Err(CoreError::Invalid(
                    "x1 is not in the intersection of the F_V translates".into(),
                ));
            }
        }
    }
    let x2 = match choices.x2.clone() {
        Some(x) => x,
        None => split.f_v.iter().find(|v| **v != x1).unwrap().clone(),
    };
    if x2 == x1 || !split.f_v.contains(&x2) {
        return Err(CoreError::Invalid("x2 must lie in F_V \\ {x1}".into()));
    }
    let x_letters: Vec<Vec<i64>> = match choices.x_letters.clone() {
        Some(xs) => xs,
        None => split
            .f_v
            .iter()
            .filter(|v| **v != x1 && **v != x2)
            .take(k - 1)
            .cloned()
            .collect(),
    };
    if x_letters.len() != k - 1 {
        return Err(CoreError::Invalid(format!(
            "need {} distinct carrier points x_c, got {}",
            k - 1,
            x_letters.len()
        )));
    }
    {
        let mut all = x_letters.clone();
        all.push(x1.clone());
        all.push(x2.clone());
        let set: BTreeSet<_> = all.iter().collect();
        if set.len() != all.len() || x_letters.iter().any(|x| !split.f_v.contains(x)) {
            return Err(CoreError::Invalid(
                "carrier points x_c must be distinct elements of F_V \\ {x1, x2}".into(),
            ));
        }
    }

    // base letter a is letter 0; the remaining letters get the carrier
    // points in index order
    let base: u8 = 0;
    let _ = dim;
    let cell = datum.enumerate_dilated_box(1, budget)?;
    let mut rng = match fill {
        FillPolicy::Seeded(seed) => Some(ChaCha8Rng::seed_from_u64(*seed)),
        FillPolicy::Constant(_) => None,
    };

    let mut table = Vec::with_capacity(k);
    for c in 0..k as u8 {
        let mut pairs: Vec<(LatticePoint, u8)> = Vec::with_capacity(cell.len());
        for point in &cell {
            let h = &point.0[..j];
            let v = &point.0[j..];
            let in_xi_a = (h == zero_h.as_slice())
                || (h == gamma1.as_slice() && v != x1.as_slice());
            let in_xi_o = h != zero_h.as_slice() && v == x1.as_slice();
            let letter = if in_xi_a {
                base
            } else if in_xi_o {
                // any letter other than the base one
                match (&mut rng, fill) {
                    (Some(r), _) => 1 + (r.gen_range(0..(k - 1) as u32) as u8),
                    (None, FillPolicy::Constant(l)) => {
                        if *l == base {
                            1
                        } else {
                            *l
                        }
                    }
                    _ => unreachable!(),
                }
            } else if h == gamma2.as_slice() && v == x2.as_slice() {
                c
            } else if h == gamma2.as_slice()
                && x_letters.iter().any(|x| v == x.as_slice())
            {
                let pos = x_letters.iter().position(|x| v == x.as_slice()).unwrap();
                (pos + 1) as u8
            } else {
                match (&mut rng, fill) {
                    (Some(r), _) => r.gen_range(0..k as u32) as u8,
                    (None, FillPolicy::Constant(l)) => *l,
                    _ => unreachable!(),
                }
            };
            pairs.push((point.clone(), letter));
        }
        table.push(Patch::from_pairs(pairs)?);
    }
    SubstitutionDatum::new(alphabet.clone(), table)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bundled::{
        bundled_alphabet, bundled_substitution, euclidean_datum, heisenberg_datum,
        heisenberg_good_choices,
    };

    const BUDGET: u64 = 1_000_000;

    #[test]
    fn substitution_datum_validates() {
        let datum = heisenberg_datum();
        let subst = bundled_substitution(&datum);
        subst.validate(&datum, BUDGET).unwrap();
        assert_eq!(subst.table[0].len(), 81);
    }

    #[test]
    fn good_rule_matches_worked_example_skeleton() {
        // gamma1 = (0,2), gamma2 = (0,-2), x1 = 0, x2 = 4, x_b = 8
        let datum = heisenberg_datum();
        let subst = bundled_substitution(&datum);
        let get = |letter: usize, x: i64, y: i64, z: i64| {
            subst.table[letter]
                .get(&LatticePoint(vec![x / 2, y / 2, z / 2]))
                .unwrap()
        };
        for letter in 0..2 {
            // Xi_a: the column over e and over gamma1 minus (gamma1, x1)
            for z in (-8..=8).step_by(2) {
                assert_eq!(get(letter, 0, 0, z), 0, "Xi_a column over e");
                if z != 0 {
                    assert_eq!(get(letter, 0, 2, z), 0, "Xi_a column over gamma1");
                }
            }
            // Xi_o: x1-slice over nontrivial horizontal points avoids `a`
            for (hx, hy) in [(-2, -2), (-2, 0), (-2, 2), (0, -2), (0, 2), (2, -2), (2, 0), (2, 2)]
            {
                assert_eq!(get(letter, hx, hy, 0), 1, "Xi_o");
            }
            // carrier of b: S0(letter)(gamma2, x_b) = b
            assert_eq!(get(letter, 0, -2, 8), 1);
        }
        // marker cell: S0(c)(gamma2, x2) = c
        assert_eq!(get(0, 0, -2, 4), 0);
        assert_eq!(get(1, 0, -2, 4), 1);
    }

    #[test]
    fn substitute_support_and_identity_cases() {
        let datum = heisenberg_datum();
        let subst = bundled_substitution(&datum);
        // (E1): S(P_a) = S0(a)
        let image = substitute_stamp(&datum, &subst, &Patch::single(3, 0), BUDGET).unwrap();
        assert_eq!(image, subst.table[0]);
        assert_eq!(image.len(), 81);
    }

    #[test]
    fn equivariance_example() {
        // S(gamma P) = D(gamma) S(P) for gamma = (2,0,0)
        let datum = heisenberg_datum();
        let subst = bundled_substitution(&datum);
        let gamma = LatticePoint(vec![1, 0, 0]);
        let p = Patch::single(3, 1);
        let lhs = substitute_stamp(
            &datum,
            &subst,
            &p.translate(&datum, &gamma).unwrap(),
            BUDGET,
        )
        .unwrap();
        let d_gamma = datum.dilate_point(&gamma, 1).unwrap();
        let rhs = substitute_stamp(&datum, &subst, &p, BUDGET)
            .unwrap()
            .translate(&datum, &d_gamma)
            .unwrap();
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn locality_on_two_point_support() {
        // (E3): the image of a union restricts to the images of the parts
        let datum = heisenberg_datum();
        let subst = bundled_substitution(&datum);
        let m1 = LatticePoint(vec![0, 0, 0]);
        let m2 = LatticePoint(vec![1, 1, -2]);
        let p = Patch::from_pairs(vec![(m1.clone(), 0), (m2.clone(), 1)]).unwrap();
        let whole = substitute_stamp(&datum, &subst, &p, BUDGET).unwrap();
        for part in [
            Patch::from_pairs(vec![(m1.clone(), 0)]).unwrap(),
            Patch::from_pairs(vec![(m2.clone(), 1)]).unwrap(),
        ] {
            let img = substitute_stamp(&datum, &subst, &part, BUDGET).unwrap();
            for (q, l) in img.iter() {
                assert_eq!(whole.get(q), Some(l));
            }
        }
    }

    #[test]
    fn stamp_and_locate_agree() {
        let datum = heisenberg_datum();
        let subst = bundled_substitution(&datum);
        let p = Patch::from_pairs(vec![
            (LatticePoint(vec![0, 0, 0]), 0),
            (LatticePoint(vec![1, 0, -1]), 1),
            (LatticePoint(vec![-1, 2, 3]), 1),
        ])
        .unwrap();
        let a = substitute_stamp(&datum, &subst, &p, BUDGET).unwrap();
        let b = substitute_locate(&datum, &subst, &p, BUDGET).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn iterate_cardinalities() {
        let datum = heisenberg_datum();
        let subst = bundled_substitution(&datum);
        assert_eq!(iterate(&datum, &subst, 0, 1, BUDGET).unwrap().len(), 81);
        assert_eq!(iterate(&datum, &subst, 0, 2, BUDGET).unwrap().len(), 6561);
        // budget refusal comes with the exact requirement
        match iterate(&datum, &subst, 0, 3, 10_000) {
            Err(CoreError::BudgetExceeded { needed, .. }) => {
                assert_eq!(needed, "531441");
            }
            other => panic!("expected budget error, got {other:?}"),
        }
    }

    #[test]
    fn euclidean_iterate_is_a_cube() {
        let datum = euclidean_datum();
        let subst = bundled_substitution(&heisenberg_datum());
        // the same table is a valid substitution over the Euclidean datum
        subst.validate(&datum, BUDGET).unwrap();
        for n in 1..=2u32 {
            let patch = iterate(&datum, &subst, 0, n, BUDGET).unwrap();
            let cube = datum.enumerate_dilated_box(n, BUDGET).unwrap();
            assert_eq!(patch.support(), cube.as_slice());
        }
    }

    #[test]
    fn support_vn_consistency() {
        let datum = heisenberg_datum();
        let subst = bundled_substitution(&datum);
        // V(1, {e}) cap Gamma = D(V) cap Gamma
        let v1 = support_vn(&datum, &[LatticePoint::origin(3)], 1, BUDGET).unwrap();
        assert_eq!(v1, datum.enumerate_dilated_box(1, BUDGET).unwrap());
        // against iterate on a 2-point support
        let m = vec![LatticePoint(vec![0, 0, 0]), LatticePoint(vec![1, -1, 2])];
        let p = Patch::from_pairs(m.iter().map(|q| (q.clone(), 0)).collect()).unwrap();
        for n in 0..=2u32 {
            let vn = support_vn(&datum, &m, n, BUDGET).unwrap();
            let mut image = p.clone();
            for _ in 0..n {
                image = substitute_stamp(&datum, &subst, &image, BUDGET).unwrap();
            }
            assert_eq!(vn, image.support());
        }
        // translation covariance: V(n, gamma M) = D^n(gamma) V(n, M)
        let gamma = LatticePoint(vec![1, 1, 0]);
        let translated: Vec<LatticePoint> = m
            .iter()
            .map(|q| datum.mul_points(&gamma, q).unwrap())
            .collect();
        for n in 1..=2u32 {
            let lhs = support_vn(&datum, &translated, n, BUDGET).unwrap();
            let dg = datum.dilate_point(&gamma, n).unwrap();
            let mut rhs: Vec<LatticePoint> = support_vn(&datum, &m, n, BUDGET)
                .unwrap()
                .iter()
                .map(|q| datum.mul_points(&dg, q).unwrap())
                .collect();
            rhs.sort();
            assert_eq!(lhs, rhs);
        }
    }

    #[test]
    fn legality_search() {
        let datum = heisenberg_datum();
        let subst = bundled_substitution(&datum);
        // single letters occur in S(P_b)
        for letter in 0..2u8 {
            let w = is_legal(&datum, &subst, &Patch::single(3, letter), 2, BUDGET)
                .unwrap()
                .expect("single letters are legal");
            assert!(w.n <= 1);
        }
        // a restriction of S^2(P_a) is legal with witness n <= 2
        let big = iterate(&datum, &subst, 0, 2, BUDGET).unwrap();
        let sub: Vec<LatticePoint> = big.support()[40..46].to_vec();
        let patch = big.restrict(&sub);
        let w = is_legal(&datum, &subst, &patch, 2, BUDGET).unwrap().unwrap();
        assert!(w.n <= 2);
        // the all-b cell patch is not legal within n <= 2: Xi_a cells are
        // always a, so any full-cell image contains an a
        let cell = datum.enumerate_dilated_box(1, BUDGET).unwrap();
        let all_b = Patch::from_pairs(cell.into_iter().map(|p| (p, 1)).collect()).unwrap();
        assert!(is_legal(&datum, &subst, &all_b, 2, BUDGET).unwrap().is_none());
    }

    #[test]
    fn primitivity_cases() {
        let datum = heisenberg_datum();
        let subst = bundled_substitution(&datum);
        assert_eq!(is_primitive(&subst), Some(1));

        // constant substitution: b never occurs
        let cell = datum.enumerate_dilated_box(1, BUDGET).unwrap();
        let all_a = Patch::from_pairs(cell.iter().map(|p| (p.clone(), 0)).collect()).unwrap();
        let constant =
            SubstitutionDatum::new(bundled_alphabet(), vec![all_a.clone(), all_a.clone()])
                .unwrap();
        assert_eq!(is_primitive(&constant), None);

        // swap rule: S(P_a) all b, S(P_b) all a. The incidence matrix is a
        // period-2 permutation pattern, so no power is entrywise positive:
        // S^L(P_b) is monochrome for every L and the rule is not primitive.
        let all_b = Patch::from_pairs(cell.iter().map(|p| (p.clone(), 1)).collect()).unwrap();
        let swap = SubstitutionDatum::new(bundled_alphabet(), vec![all_b.clone(), all_a]).unwrap();
        assert_eq!(is_primitive(&swap), None);
        // brute-force cross-check on the patch level: S^2(P_b) contains no a
        let datum = heisenberg_datum();
        let twice = iterate(&datum, &swap, 1, 2, BUDGET).unwrap();
        assert!(twice.letters().iter().all(|&l| l == 1));

        // a rule mixing both letters in every image is primitive with L = 1
        let mixed_row = |flip: bool| {
            Patch::from_pairs(
                cell.iter()
                    .enumerate()
                    .map(|(i, p)| (p.clone(), ((i % 2 == 0) ^ flip) as u8))
                    .collect(),
            )
            .unwrap()
        };
        let mixed =
            SubstitutionDatum::new(bundled_alphabet(), vec![mixed_row(false), mixed_row(true)])
                .unwrap();
        assert_eq!(is_primitive(&mixed), Some(1));
    }

    #[test]
    fn non_periodicity_cases() {
        let datum = heisenberg_datum();
        let subst = bundled_substitution(&datum);
        let report = is_nonperiodic(&datum, &subst, BUDGET).unwrap();
        assert!(report.non_periodic(), "failures: {:?}", report.failures.len());

        // constant substitution fails injectivity
        let cell = datum.enumerate_dilated_box(1, BUDGET).unwrap();
        let all_a = Patch::from_pairs(cell.iter().map(|p| (p.clone(), 0)).collect()).unwrap();
        let constant =
            SubstitutionDatum::new(bundled_alphabet(), vec![all_a.clone(), all_a]).unwrap();
        let r = is_nonperiodic(&datum, &constant, BUDGET).unwrap();
        assert!(!r.injective);
        assert!(!r.non_periodic());
    }

    #[test]
    fn build_good_outputs_pass_checkers() {
        let datum = heisenberg_datum();
        for seed in 0..5u64 {
            let subst = build_good(
                &datum,
                &bundled_alphabet(),
                &FillPolicy::Seeded(seed),
                &GoodChoices::default(),
                BUDGET,
            )
            .unwrap();
            subst.validate(&datum, BUDGET).unwrap();
            assert_eq!(is_primitive(&subst), Some(1), "seed {seed}");
            assert!(
                is_nonperiodic(&datum, &subst, BUDGET).unwrap().non_periodic(),
                "seed {seed}"
            );
        }
    }

    #[test]
    fn build_good_two_letter_xi_o_forced() {
        // with |A| = 2 every Xi_o cell is forced to b
        let datum = heisenberg_datum();
        let subst = build_good(
            &datum,
            &bundled_alphabet(),
            &FillPolicy::Seeded(9),
            &heisenberg_good_choices(),
            BUDGET,
        )
        .unwrap();
        for letter in 0..2usize {
            for (hx, hy) in [(-1i64, -1i64), (-1, 0), (-1, 1), (0, -1), (0, 1), (1, -1), (1, 0), (1, 1)] {
                assert_eq!(
                    subst.table[letter].get(&LatticePoint(vec![hx, hy, 0])),
                    Some(1)
                );
            }
        }
    }

    #[test]
    fn build_good_precondition_errors() {
        let datum = heisenberg_datum();
        let single = Alphabet::of(&["a"]);
        assert!(build_good(&datum, &single, &FillPolicy::Constant(0), &GoodChoices::default(), BUDGET).is_err());
        // alphabet larger than |F_V| - 1 = 8 is rejected
        let names: Vec<String> = (0..9).map(|i| format!("l{i}")).collect();
        let too_big = Alphabet::new(names).unwrap();
        assert!(build_good(&datum, &too_big, &FillPolicy::Constant(0), &GoodChoices::default(), BUDGET).is_err());
    }
}

#[cfg(test)]
mod parallel_tests {
    use super::*;
    use crate::bundled::{bundled_substitution, heisenberg_datum};

    #[test]
    fn parallel_iterate_matches_sequential() {
        let datum = heisenberg_datum();
        let subst = bundled_substitution(&datum);
        let seq = iterate(&datum, &subst, 0, 2, 1_000_000).unwrap();
        for jobs in [2, 3, 7] {
            let par = iterate_jobs(&datum, &subst, 0, 2, 1_000_000, jobs).unwrap();
            assert_eq!(par, seq, "jobs = {jobs}");
        }
    }
}
