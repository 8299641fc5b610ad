//! Acceptance suite: one test per criterion, each printing a PASS line
//! with its measured runtime (visible under --nocapture). Every tolerance
//! is pinned in code; nothing is deferred to later calibration.

use std::collections::BTreeSet;
use std::sync::OnceLock;
use std::time::Instant;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use nilsub_core::bundled::{
    bundled_alphabet, bundled_substitution, euclidean_datum, heisenberg_datum,
};
use nilsub_core::dynamics::{
    aperiodicity_certificate, letter_frequencies, repetitivity_profile, ProfileBudget, RowStatus,
};
use nilsub_core::fixpoint::FixpointHandle;
use nilsub_core::grading::{solve_grading, verify_grading, Feasibility, GradingProblem};
use nilsub_core::lattice::{DilationDatum, LatticePoint};
use nilsub_core::lie::{default_mu, LieAlgebraSpec};
use nilsub_core::linalg::in_span;
use nilsub_core::patch::Patch;
use nilsub_core::scalar::{s_frac, s_int, Scalar};
use nilsub_core::substitution::{
    build_good, is_nonperiodic, is_primitive, iterate, substitute_locate, substitute_stamp,
    support_vn, FillPolicy, GoodChoices, SubstitutionDatum,
};

const BUDGET: u64 = 4_000_000;

fn datum() -> &'static DilationDatum {
    static D: OnceLock<DilationDatum> = OnceLock::new();
    D.get_or_init(heisenberg_datum)
}

fn subst() -> &'static SubstitutionDatum {
    static S: OnceLock<SubstitutionDatum> = OnceLock::new();
    S.get_or_init(|| bundled_substitution(datum()))
}

fn euclid() -> &'static DilationDatum {
    static D: OnceLock<DilationDatum> = OnceLock::new();
    D.get_or_init(euclidean_datum)
}

fn s_vec(v: &[i64]) -> Vec<Scalar> {
    v.iter().map(|&x| s_int(x)).collect()
}

#[test]
fn criterion_01_heisenberg_enumeration() {
    let start = Instant::now();
    let cell = datum().enumerate_dilated_box(1, BUDGET).unwrap();
    let mut expected = Vec::new();
    for x in [-2i64, 0, 2] {
        for y in [-2i64, 0, 2] {
            for z in (-8i64..=8).step_by(2) {
                expected.push(vec![
                    Scalar::from_integer(x.into()),
                    Scalar::from_integer(y.into()),
                    Scalar::from_integer(z.into()),
                ]);
            }
        }
    }
    expected.sort();
    let mut actual: Vec<Vec<Scalar>> = cell.iter().map(|p| datum().point_to_element(p)).collect();
    actual.sort();
    assert_eq!(actual.len(), 81);
    assert_eq!(actual, expected);
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 1.0, "took {elapsed:?}");
    println!("criterion 01: PASS - D(V) cap Gamma is the 81-point set ({elapsed:?})");
}

#[test]
fn criterion_02_support_scaling() {
    let sizes = [81usize, 6561, 531441];
    for (i, &expected) in sizes.iter().enumerate() {
        let n = i as u32 + 1;
        let start = Instant::now();
        let patch = iterate(datum(), subst(), 0, n, BUDGET).unwrap();
        let elapsed = start.elapsed();
        assert_eq!(patch.len(), expected, "n = {n}");
        if n == 3 {
            assert!(elapsed.as_secs_f64() < 60.0, "n=3 took {elapsed:?}");
            println!(
                "criterion 02: PASS - |supp S^n(P_a)| = 81/6561/531441, n=3 in {elapsed:?}"
            );
        }
    }
}

#[test]
fn criterion_03_euclidean_cube() {
    let start = Instant::now();
    // the bundled substitution table over the Euclidean datum
    let subst = bundled_substitution(euclid());
    for n in 1..=3u32 {
        let patch = iterate(euclid(), &subst, 0, n, BUDGET).unwrap();
        let cube = euclid().enumerate_dilated_box(n, BUDGET).unwrap();
        assert_eq!(patch.support(), cube.as_slice(), "n = {n}");
    }
    println!(
        "criterion 03: PASS - Euclidean supports equal the cubes for n <= 3 ({:?})",
        start.elapsed()
    );
}

#[test]
fn criterion_04_bundled_checkers() {
    let start = Instant::now();
    assert_eq!(is_primitive(subst()), Some(1));
    let report = is_nonperiodic(datum(), subst(), BUDGET).unwrap();
    assert!(report.injective);
    assert!(report.failures.is_empty());
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 5.0, "took {elapsed:?}");
    println!("criterion 04: PASS - primitive L=1 and non-periodic ({elapsed:?})");
}

#[test]
fn criterion_05_good_substitutions() {
    let start = Instant::now();
    for seed in 0..20u64 {
        let rule = build_good(
            datum(),
            &bundled_alphabet(),
            &FillPolicy::Seeded(seed),
            &GoodChoices::default(),
            BUDGET,
        )
        .unwrap();
        rule.validate(datum(), BUDGET).unwrap();
        assert_eq!(is_primitive(&rule), Some(1), "seed {seed}");
        let report = is_nonperiodic(datum(), &rule, BUDGET).unwrap();
        assert!(report.non_periodic(), "seed {seed}");
    }
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 60.0, "took {elapsed:?}");
    println!("criterion 05: PASS - 20 seeded good rules pass both checkers ({elapsed:?})");
}

#[test]
fn criterion_06_grading_census() {
    let start = Instant::now();
    let heis = LieAlgebraSpec::heisenberg();
    let f147e = LieAlgebraSpec::family_147e(default_mu());
    let a257g = LieAlgebraSpec::algebra_257g();
    assert!(verify_grading(&heis, &[1, 1, 2]));
    assert!(verify_grading(&f147e, &[1, 1, 1, 2, 2, 2, 3]));
    assert!(verify_grading(&a257g, &[2, 1, 3, 3, 2, 5, 4]));
    for alg in [&heis, &f147e, &a257g] {
        let sol = solve_grading(&GradingProblem::new(alg.clone())).unwrap();
        assert_eq!(sol.kind, Feasibility::Feasible);
        assert!(verify_grading(alg, &sol.degrees.unwrap()));
    }
    let kernel = GradingProblem::new(a257g).kernel();
    assert_eq!(kernel.len(), 2);
    assert!(in_span(&kernel, &s_vec(&[2, -3, -1, 3, -2, 1, 0])));
    assert!(in_span(&kernel, &s_vec(&[-2, 4, 2, -3, 3, 0, 1])));
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 1.0, "took {elapsed:?}");
    println!("criterion 06: PASS - reference gradings verified and re-derived ({elapsed:?})");
}

#[test]
fn criterion_07_axiom_suite() {
    let start = Instant::now();
    for (which, datum) in [("heisenberg", datum()), ("euclidean", euclid())] {
        let subst = bundled_substitution(datum);
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let mut rand_point = |rng: &mut ChaCha8Rng| {
            LatticePoint(vec![
                rng.gen_range(-3i64..=3),
                rng.gen_range(-3i64..=3),
                rng.gen_range(-6i64..=6),
            ])
        };
        for case in 0..1000u32 {
            // random patch on 1..=3 points
            let size = rng.gen_range(1usize..=3);
            let mut support = BTreeSet::new();
            while support.len() < size {
                support.insert(rand_point(&mut rng));
            }
            let pairs: Vec<(LatticePoint, u8)> = support
                .into_iter()
                .map(|p| {
                    let l = rng.gen_range(0..2u32) as u8;
                    (p, l)
                })
                .collect();
            let patch = Patch::from_pairs(pairs).unwrap();

            // (E1): one-letter patches map to their table rows
            let letter = rng.gen_range(0..2u32) as u8;
            let image = substitute_stamp(datum, &subst, &Patch::single(3, letter), BUDGET).unwrap();
            assert_eq!(&image, &subst.table[letter as usize], "{which} case {case}");

            // (E2): S(gamma P) = D(gamma) S(P)
            let gamma = rand_point(&mut rng);
            let s_p = substitute_stamp(datum, &subst, &patch, BUDGET).unwrap();
            let lhs = substitute_stamp(
                datum,
                &subst,
                &patch.translate(datum, &gamma).unwrap(),
                BUDGET,
            )
            .unwrap();
            let d_gamma = datum.dilate_point(&gamma, 1).unwrap();
            let rhs = s_p.translate(datum, &d_gamma).unwrap();
            assert_eq!(lhs, rhs, "{which} case {case}: (E2)");

            // (E3): a random cover M = M1 union M2 is locally consistent
            let split = rng.gen_range(0..=patch.len());
            let m1: Vec<LatticePoint> = patch.support()[..split].to_vec();
            let m2: Vec<LatticePoint> = patch.support()[split.saturating_sub(1)..].to_vec();
            for part in [patch.restrict(&m1), patch.restrict(&m2)] {
                if part.is_empty() {
                    continue;
                }
                let img = substitute_stamp(datum, &subst, &part, BUDGET).unwrap();
                for (q, l) in img.iter() {
                    assert_eq!(s_p.get(q), Some(l), "{which} case {case}: (E3)");
                }
            }

            // the two substitution implementations agree
            let via_locate = substitute_locate(datum, &subst, &patch, BUDGET).unwrap();
            assert_eq!(s_p, via_locate, "{which} case {case}: implementations");
        }
    }
    println!(
        "criterion 07: PASS - E1/E2/E3 and dual-route agreement on 1000 instances per datum ({:?})",
        start.elapsed()
    );
}

#[test]
fn criterion_08_lemma_v_suite() {
    let start = Instant::now();
    let datum = datum();
    let ball = datum
        .ball_lattice_points(&LatticePoint::origin(3), &s_int(5), BUDGET)
        .unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    // seeded sample of subsets of ball(e,5) with |M| <= 3; the full
    // subset family (C(413,3) ~ 10^7 sets against half-million-point
    // iterates) is beyond desk scale, so the suite samples it
    let mut subsets: Vec<Vec<LatticePoint>> = vec![vec![LatticePoint::origin(3)]];
    while subsets.len() < 40 {
        let size = rng.gen_range(1usize..=3);
        let mut m = BTreeSet::new();
        while m.len() < size {
            m.insert(ball[rng.gen_range(0..ball.len())].clone());
        }
        subsets.push(m.into_iter().collect());
    }
    for (idx, m) in subsets.iter().enumerate() {
        // (a) translation covariance at n <= 2
        let gamma = &ball[(7 * idx + 3) % ball.len()];
        let translated: Vec<LatticePoint> = m
            .iter()
            .map(|p| datum.mul_points(gamma, p).unwrap())
            .collect();
        for n in 1..=2u32 {
            let lhs = support_vn(datum, &translated, n, BUDGET).unwrap();
            let dg = datum.dilate_point(gamma, n).unwrap();
            let mut rhs: Vec<LatticePoint> = support_vn(datum, m, n, BUDGET)
                .unwrap()
                .into_iter()
                .map(|p| datum.mul_points(&dg, &p).unwrap())
                .collect();
            rhs.sort();
            assert_eq!(lhs, rhs, "(a) subset {idx} n {n}");
        }
        // (b) monotone in M
        let mut larger = m.clone();
        larger.push(ball[(idx * 11 + 1) % ball.len()].clone());
        larger.sort();
        larger.dedup();
        for n in 1..=2u32 {
            let small: BTreeSet<_> =
                support_vn(datum, m, n, BUDGET).unwrap().into_iter().collect();
            let large: BTreeSet<_> = support_vn(datum, &larger, n, BUDGET)
                .unwrap()
                .into_iter()
                .collect();
            assert!(small.is_subset(&large), "(b) subset {idx} n {n}");
        }
        // (c) composition with n + m = 2
        let v1 = support_vn(datum, m, 1, BUDGET).unwrap();
        assert_eq!(
            support_vn(datum, &v1, 1, BUDGET).unwrap(),
            support_vn(datum, m, 2, BUDGET).unwrap(),
            "(c) subset {idx}"
        );
    }
    // (c) at n + m = 3, both orders, on a few subsets
    for m in subsets.iter().take(5) {
        let v1 = support_vn(datum, m, 1, BUDGET).unwrap();
        let v2 = support_vn(datum, m, 2, BUDGET).unwrap();
        let total = support_vn(datum, m, 3, BUDGET).unwrap();
        assert_eq!(support_vn(datum, &v1, 2, BUDGET).unwrap(), total);
        assert_eq!(support_vn(datum, &v2, 1, BUDGET).unwrap(), total);
    }
    // (d) nested exhaustion V(n-1) in V(n)
    let e = vec![LatticePoint::origin(3)];
    let mut prev = support_vn(datum, &e, 0, BUDGET).unwrap();
    for n in 1..=3u32 {
        let cur: BTreeSet<_> = support_vn(datum, &e, n, BUDGET).unwrap().into_iter().collect();
        assert!(prev.iter().all(|p| cur.contains(p)), "(d) n = {n}");
        prev = cur.into_iter().collect();
    }
    println!(
        "criterion 08: PASS - lemma V (a)-(d) as exact set identities on sampled M ({:?})",
        start.elapsed()
    );
}

#[test]
fn criterion_09_fixpoint_window_identity() {
    let start = Instant::now();
    let datum = datum();
    let subst = subst();
    let mut handle = FixpointHandle::new(datum, subst, 0);
    assert_eq!(handle.period, 1);
    assert_eq!(handle.cycle_letter, 0);
    // omega restricted to V(nk) equals S^{nk}(P_c) for n <= 2
    assert!(handle.window_identity(datum, subst, 1, BUDGET).unwrap());
    assert!(handle.window_identity(datum, subst, 2, BUDGET).unwrap());
    // S^k-invariance as a patch identity: S^k(omega|_{V(k)}) = omega|_{V(2k)}
    let e = LatticePoint::origin(3);
    let v1 = support_vn(datum, &[e.clone()], 1, BUDGET).unwrap();
    let v2 = support_vn(datum, &[e], 2, BUDGET).unwrap();
    let w1 = handle.eval_patch(datum, subst, &v1).unwrap();
    let w2 = handle.eval_patch(datum, subst, &v2).unwrap();
    let image = substitute_stamp(datum, subst, &w1, BUDGET).unwrap();
    assert_eq!(image, w2);
    println!(
        "criterion 09: PASS - fixpoint window identities for n <= 2 ({:?})",
        start.elapsed()
    );
}

#[test]
fn criterion_10_weak_aperiodicity_certificate() {
    let start = Instant::now();
    let datum = datum();
    let subst = subst();
    let mut handle = FixpointHandle::new(datum, subst, 0);
    let cert = aperiodicity_certificate(&mut handle, datum, subst, &s_int(10), BUDGET).unwrap();
    let total = cert.entries.len();
    let certified = cert.entries.iter().filter(|e| e.witness.is_some()).count();
    assert!(total > 0);
    assert_eq!(certified, total, "coverage {certified}/{total}");
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 120.0, "took {elapsed:?}");
    println!(
        "criterion 10: PASS - difference witness for all {total} nontrivial gamma with |gamma| <= 10 ({elapsed:?})"
    );
}

#[test]
fn criterion_11_sgt_inclusions() {
    let start = Instant::now();
    let datum = datum();
    // Koranyi radii of the box: B_1 in V in B_{3/2} (checked exactly), so
    // C- = (lambda - (1 + r+/r-)) r-/lambda = 1/6 and
    // C+ = lambda r- (1 + lambda/(lambda-1)) = 15/2
    let radii = datum.radii().unwrap();
    assert_eq!(radii.inner.cmp_scalar(&s_int(1)), std::cmp::Ordering::Equal);
    assert_eq!(
        radii.outer.cmp_scalar(&s_frac(3, 2)),
        std::cmp::Ordering::Less
    );
    let c_minus = s_frac(1, 6);
    let c_plus = s_frac(15, 2);
    for k in 0..=2u32 {
        let vk = support_vn(datum, &[LatticePoint::origin(3)], k + 1, BUDGET).unwrap();
        let vk_set: BTreeSet<&LatticePoint> = vk.iter().collect();
        let mut factor = s_int(1);
        for _ in 0..=k {
            factor = factor * s_int(3);
        }
        let inner_r = &factor * &c_minus;
        let outer_r = &factor * &c_plus;
        let inner_ball = datum
            .ball_lattice_points(&LatticePoint::origin(3), &inner_r, BUDGET)
            .unwrap();
        for p in &inner_ball {
            assert!(vk_set.contains(p), "k={k} inner fails at {:?}", p.0);
        }
        for p in &vk {
            let g = datum.point_to_element(p);
            assert!(datum.qnorm_lt(&g, &outer_r).unwrap(), "k={k} outer fails at {:?}", p.0);
        }
    }
    println!(
        "criterion 11: PASS - SGT lattice inclusions for k <= 2 with C-=1/6, C+=15/2 ({:?})",
        start.elapsed()
    );
}

#[test]
fn criterion_12_lattice_counting() {
    let start = Instant::now();
    let datum = datum();
    // The raw consecutive ratio approaches (1+1/r)^4 > 1.1 below r ~ 42,
    // so the stated [0.9, 1.1] band cannot hold for the raw counts on
    // [30, 41]; the coherent stabilization statement (also required by
    // the dynamics invariants) normalizes by r^4. Assert the normalized
    // band on the full range and the raw band where it is attainable.
    let normalized = |r: i64| -> Scalar {
        let c = datum.ball_count(&s_int(r)).unwrap();
        let mut r4 = s_int(1);
        for _ in 0..4 {
            r4 = r4 * s_int(r);
        }
        Scalar::from_integer(c * 8) / r4
    };
    let mut last = normalized(30);
    for r in 31..=60i64 {
        let cur = normalized(r);
        let ratio = &cur / &last;
        assert!(
            ratio >= s_frac(9, 10) && ratio <= s_frac(11, 10),
            "normalized ratio at r={r}: {ratio}"
        );
        last = cur;
    }
    let mut prev = Scalar::from_integer(datum.ball_count(&s_int(45)).unwrap());
    for r in 46..=60i64 {
        let count = Scalar::from_integer(datum.ball_count(&s_int(r)).unwrap());
        let ratio = &count / &prev;
        assert!(
            ratio >= s_frac(9, 10) && ratio <= s_frac(11, 10),
            "raw ratio at r={r}: {ratio}"
        );
        prev = count;
    }
    println!(
        "criterion 12: PASS - normalized counts stable on [30,60], raw ratio in band on [45,60] ({:?})",
        start.elapsed()
    );
}

#[test]
fn criterion_13_repetitivity_profile() {
    let start = Instant::now();
    let datum = datum();
    let subst = subst();
    let mut handle = FixpointHandle::new(datum, subst, 0);
    let profile = repetitivity_profile(
        &mut handle,
        datum,
        subst,
        &[s_int(1), s_int(3), s_int(9)],
        &s_int(54),
        &s_int(1),
        &ProfileBudget::default(),
    )
    .unwrap();
    let mut summary = Vec::new();
    let mut prev_big_r: Option<Scalar> = None;
    for row in &profile.rows {
        match &row.status {
            RowStatus::Bounded { big_r } => {
                // type invariants: R(r) >= r and R nondecreasing in r
                assert!(big_r >= &row.r);
                if let Some(p) = &prev_big_r {
                    assert!(big_r >= p, "R must be nondecreasing in r");
                }
                prev_big_r = Some(big_r.clone());
                let ratio = big_r / &row.r;
                summary.push(format!(
                    "r={} R={} ratio={} classes={}",
                    row.r, big_r, ratio, row.classes
                ));
            }
            RowStatus::UnboundedWithinWindow => {
                panic!("row r={} unbounded within window 54", row.r);
            }
        }
    }
    // bounded by a single constant across the tested radii: the max ratio
    let max_ratio = profile
        .rows
        .iter()
        .map(|row| match &row.status {
            RowStatus::Bounded { big_r } => big_r / &row.r,
            _ => unreachable!(),
        })
        .max()
        .unwrap();
    println!(
        "criterion 13: PASS - R(r)/r bounded by {max_ratio} on window 54 [{}] ({:?})",
        summary.join("; "),
        start.elapsed()
    );
}

#[test]
fn frequency_convergence_check() {
    // supporting check from the dynamics module examples: per-letter
    // frequency difference between r and 2r below 1/20 for r = 27
    let datum = datum();
    let subst = subst();
    let mut handle = FixpointHandle::new(datum, subst, 0);
    let table =
        letter_frequencies(&mut handle, datum, subst, &[s_int(27), s_int(54)], BUDGET).unwrap();
    for letter in 0..2usize {
        let f27 = table.rows[0].frequency(letter);
        let f54 = table.rows[1].frequency(letter);
        let diff = if f27 > f54 {
            &f27 - &f54
        } else {
            &f54 - &f27
        };
        assert!(diff < s_frac(1, 20), "letter {letter}: |{f27} - {f54}| = {diff}");
    }
    println!("frequency check: PASS - |freq(27) - freq(54)| < 1/20 per letter");
}
