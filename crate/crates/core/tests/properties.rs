//! Property tests for the algebraic core: group axioms on random exact
//! rationals, grading round trips, localization, and serialization.

use std::sync::OnceLock;

use proptest::prelude::*;

use nilsub_core::bundled::{bundled_substitution, gmu_group, heisenberg_datum};
use nilsub_core::grading::{solve_grading, verify_grading, Feasibility, GradingProblem};
use nilsub_core::lattice::LatticePoint;
use nilsub_core::lie::LieAlgebraSpec;
use nilsub_core::patch::Patch;
use nilsub_core::scalar::{s_int, Scalar};
use nilsub_core::specfile::{parse_polynomial, SpecFile};

fn cached_heisenberg() -> &'static nilsub_core::lattice::DilationDatum {
    static DATUM: OnceLock<nilsub_core::lattice::DilationDatum> = OnceLock::new();
    DATUM.get_or_init(heisenberg_datum)
}

fn cached_gmu() -> &'static nilsub_core::group::GradedGroup {
    static GROUP: OnceLock<nilsub_core::group::GradedGroup> = OnceLock::new();
    GROUP.get_or_init(|| gmu_group(&Scalar::new(1.into(), 2.into())))
}

fn scalar_strategy() -> impl Strategy<Value = Scalar> {
    (-40i64..=40, 1i64..=6).prop_map(|(n, d)| Scalar::new(n.into(), d.into()))
}

fn point3() -> impl Strategy<Value = Vec<Scalar>> {
    proptest::collection::vec(scalar_strategy(), 3)
}

fn point7() -> impl Strategy<Value = Vec<Scalar>> {
    proptest::collection::vec(scalar_strategy(), 7)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn heisenberg_group_axioms(g in point3(), h in point3(), k in point3()) {
        let grp = &cached_heisenberg().group;
        let gh = grp.multiply(&g, &h).unwrap();
        let hk = grp.multiply(&h, &k).unwrap();
        prop_assert_eq!(grp.multiply(&gh, &k).unwrap(), grp.multiply(&g, &hk).unwrap());
        let e = grp.identity();
        prop_assert_eq!(grp.multiply(&g, &e).unwrap(), g.clone());
        let inv = grp.inverse(&g).unwrap();
        prop_assert_eq!(grp.multiply(&g, &inv).unwrap(), e);
    }

    #[test]
    fn gmu_bch_group_axioms(g in point7(), h in point7(), k in point7()) {
        let grp = cached_gmu();
        let gh = grp.multiply(&g, &h).unwrap();
        let hk = grp.multiply(&h, &k).unwrap();
        prop_assert_eq!(grp.multiply(&gh, &k).unwrap(), grp.multiply(&g, &hk).unwrap());
        // bch provenance: inverse is coordinate-wise negation
        let neg: Vec<Scalar> = g.iter().map(|c| -c.clone()).collect();
        prop_assert_eq!(grp.inverse(&g).unwrap(), neg);
    }

    #[test]
    fn dilation_one_parameter_group(
        g in point3(),
        ln in 1i64..=9, ld in 1i64..=4,
        sn in 1i64..=9, sd in 1i64..=4,
    ) {
        let grp = &cached_heisenberg().group;
        let lambda = Scalar::new(ln.into(), ld.into());
        let sigma = Scalar::new(sn.into(), sd.into());
        let a = grp.dilate(&grp.dilate(&g, &sigma).unwrap(), &lambda).unwrap();
        let b = grp.dilate(&g, &(&lambda * &sigma)).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn two_step_bch_is_half_bracket(u in point3(), v in point3()) {
        // for bch provenance 2-step groups the product is
        // g + h + [g,h]/2 coordinate-wise, straight from the constants
        let alg = LieAlgebraSpec::heisenberg();
        let grp = nilsub_core::group::GradedGroup::from_bch(&alg, vec![1, 1, 2]).unwrap();
        let prod = grp.multiply(&u, &v).unwrap();
        let bracket = alg.bracket(&u, &v);
        let expected: Vec<Scalar> = (0..3)
            .map(|i| &u[i] + &v[i] + &bracket[i] / s_int(2))
            .collect();
        prop_assert_eq!(prod, expected);
    }

    #[test]
    fn locate_round_trip(g in point3()) {
        let datum = cached_heisenberg();
        let (gamma, v) = datum.locate(&g).unwrap();
        prop_assert!(datum.box_contains(&v));
        let rebuilt = datum
            .group
            .multiply(&datum.point_to_element(&gamma), &v)
            .unwrap();
        prop_assert_eq!(rebuilt, g);
    }

    #[test]
    fn random_gradings_round_trip(
        dim in 2usize..=5,
        picks in proptest::collection::vec((0usize..5, 0usize..5, 0usize..5), 1..4)
    ) {
        let mut alg = LieAlgebraSpec::new(dim);
        for (i, j, k) in picks {
            let i = 1 + i % dim;
            let mut j = 1 + j % dim;
            if i == j {
                j = if j == dim { 1 } else { j + 1 };
            }
            let k = 1 + k % dim;
            alg.add_bracket(i, j, k, s_int(1));
        }
        let sol = solve_grading(&GradingProblem::new(alg.clone())).unwrap();
        if sol.kind == Feasibility::Feasible {
            let degrees = sol.degrees.unwrap();
            prop_assert!(verify_grading(&alg, &degrees));
            // scaling invariance
            let scaled: Vec<u32> = degrees.iter().map(|&x| 3 * x).collect();
            prop_assert!(verify_grading(&alg, &scaled));
        }
    }

    #[test]
    fn patch_translation_is_left_action(
        ms in proptest::collection::vec((-4i64..=4, -4i64..=4, -8i64..=8), 1..6),
        g in (-3i64..=3, -3i64..=3, -6i64..=6),
    ) {
        let datum = cached_heisenberg();
        let mut pairs: Vec<(LatticePoint, u8)> = ms
            .iter()
            .enumerate()
            .map(|(i, &(a, b, c))| (LatticePoint(vec![a, b, c]), (i % 2) as u8))
            .collect();
        pairs.sort();
        pairs.dedup_by(|a, b| a.0 == b.0);
        let patch = Patch::from_pairs(pairs).unwrap();
        let gamma = LatticePoint(vec![g.0, g.1, g.2]);
        let translated = patch.translate(&datum, &gamma).unwrap();
        // (gamma . P)(gamma * x) = P(x)
        for (p, l) in patch.iter() {
            let moved = datum.mul_points(&gamma, p).unwrap();
            prop_assert_eq!(translated.get(&moved), Some(l));
        }
        // translating back is the identity
        let inv = datum.inv_point(&gamma).unwrap();
        prop_assert_eq!(translated.translate(&datum, &inv).unwrap(), patch);
    }

    #[test]
    fn scalar_format_parse_round_trip(n in -999i64..=999, d in 1i64..=99) {
        let x = Scalar::new(n.into(), d.into());
        let text = nilsub_core::scalar::format_scalar(&x);
        let back = nilsub_core::scalar::parse_scalar(&text).unwrap();
        prop_assert_eq!(back, x);
    }

    #[test]
    fn polynomial_render_parse_round_trip(
        terms in proptest::collection::vec(
            ((-9i64..=9).prop_filter("nonzero", |x| *x != 0), 1i64..=4,
             proptest::collection::vec(0u32..=2, 6)),
            1..5
        )
    ) {
        let mut p = nilsub_core::poly::Polynomial::zero(6);
        for (n, d, mono) in terms {
            p.add_term(mono, Scalar::new(n.into(), d.into()));
        }
        if !p.is_zero() {
            let text = p.to_string();
            let back = parse_polynomial(&text, 3).unwrap();
            prop_assert_eq!(back, p);
        }
    }
}

#[test]
fn enumerate_matches_brute_force_filter() {
    // D^n(V) cap Gamma equals the brute-force filter of a bounding grid by
    // membership, n <= 2
    let datum = cached_heisenberg();
    for n in 0..=2u32 {
        let fast = datum.enumerate_dilated_box(n, 1_000_000).unwrap();
        // generous bounding grid: D^2(V) reaches multiples 9^2/2 = 40.5
        let mut brute = Vec::new();
        for x in -50i64..=50 {
            for y in -50i64..=50 {
                for z in -50i64..=50 {
                    let p = LatticePoint(vec![x, y, z]);
                    if datum.in_dilated_box(&p, n).unwrap() {
                        brute.push(p);
                    }
                }
            }
        }
        assert_eq!(fast, brute, "n = {n}");
    }
}

#[test]
fn substitution_spec_round_trip_via_datum() {
    // parse(render(x)) = x for the full bundled experiment description
    let datum = heisenberg_datum();
    let subst = bundled_substitution(&datum);
    let section = SpecFile::substitution_section(&datum, &subst);
    let spec = SpecFile {
        substitution: Some(section),
        ..Default::default()
    };
    let text = spec.render();
    let back = SpecFile::parse(&text).unwrap();
    assert_eq!(back, spec);
}
