//! Bundled groups, dilation data and substitution rules.
//!
//! These are the concrete examples the test suite and the shipped spec
//! files are built from: the 3-dimensional Heisenberg group with the
//! Koranyi norm, the Euclidean comparison datum on the same lattice, and
//! the 3-step family G_mu on R^7.

use crate::error::CoreError;
use crate::group::GradedGroup;
use crate::lattice::{DilationDatum, QuasiNorm};
use crate::lie::LieAlgebraSpec;
use crate::patch::Alphabet;
use crate::poly::Polynomial;
use crate::scalar::{s_frac, s_int, Scalar};
use crate::substitution::{build_good, FillPolicy, GoodChoices, SubstitutionDatum};

/// Heisenberg group: (x,y,z)*(x',y',z') = (x+x', y+y', z+z' + (x y' - y x')/2).
pub fn heisenberg_group() -> GradedGroup {
    let nv = 6;
    let x1 = Polynomial::var(nv, 0);
    let x2 = Polynomial::var(nv, 1);
    let y1 = Polynomial::var(nv, 3);
    let y2 = Polynomial::var(nv, 4);
    let law = vec![
        x1.add(&y1),
        x2.add(&y2),
        Polynomial::var(nv, 2)
            .add(&Polynomial::var(nv, 5))
            .add(&x1.mul(&y2).sub(&x2.mul(&y1)).scale(&s_frac(1, 2))),
    ];
    GradedGroup::explicit(vec![1, 1, 2], law).unwrap()
}

/// Abelian group on R^3 with degrees (1,1,2).
pub fn euclidean_group() -> GradedGroup {
    let nv = 6;
    let law = (0..3)
        .map(|i| Polynomial::var(nv, i).add(&Polynomial::var(nv, 3 + i)))
        .collect();
    GradedGroup::explicit(vec![1, 1, 2], law).unwrap()
}

/// A bilinear cocycle-tower form of the G_mu law that is sometimes
/// written down for this family. It is NOT associative: the seventh
/// coordinate's bilinear twist is not a cocycle over the non-abelian
/// lower block (it drops the cubic BCH corrections), and `validate`
/// produces exact witnesses. Kept as a demonstration of the validator
/// catching a broken law; the usable G_mu model is `gmu_group`, built
/// from the structure constants via the BCH series.
pub fn gmu_printed_law(mu: &Scalar) -> GradedGroup {
    let nv = 14;
    let x = |i: usize| Polynomial::var(nv, i - 1);
    let y = |i: usize| Polynomial::var(nv, 6 + i);
    let half = s_frac(1, 2);
    let comm = |i: usize, j: usize| x(i).mul(&y(j)).sub(&x(j).mul(&y(i)));
    let mut law: Vec<Polynomial> = Vec::with_capacity(7);
    for i in 1..=3 {
        law.push(x(i).add(&y(i)));
    }
    law.push(x(4).add(&y(4)).add(&comm(1, 2).scale(&half)));
    law.push(x(5).add(&y(5)).add(&comm(2, 3).scale(&half)));
    law.push(x(6).add(&y(6)).sub(&comm(1, 3).scale(&half)));
    let mu_half = mu / s_int(2);
    let one_minus_mu_half = (s_int(1) - mu) / s_int(2);
    law.push(
        x(7).add(&y(7))
            .add(&comm(2, 6).scale(&mu_half))
            .add(&comm(3, 4).scale(&one_minus_mu_half)),
    );
    GradedGroup::explicit(vec![1, 1, 1, 2, 2, 2, 3], law).unwrap()
}

/// G_mu as the BCH group of the 147E structure constants, graded by
/// (1,1,1,2,2,2,3).
pub fn gmu_group(mu: &Scalar) -> GradedGroup {
    GradedGroup::from_bch(
        &LieAlgebraSpec::family_147e(mu.clone()),
        vec![1, 1, 1, 2, 2, 2, 3],
    )
    .unwrap()
}

/// Heisenberg dilation datum: Gamma = (2Z)^3, V = [-1,1)^3, stretch 3,
/// Koranyi norm.
pub fn heisenberg_datum() -> DilationDatum {
    DilationDatum::new(
        heisenberg_group(),
        vec![s_int(2); 3],
        vec![s_int(-1); 3],
        vec![s_int(1); 3],
        s_int(3),
        QuasiNorm::Koranyi,
    )
    .unwrap()
}

/// Euclidean comparison datum on the same lattice and box.
pub fn euclidean_datum() -> DilationDatum {
    DilationDatum::new(
        euclidean_group(),
        vec![s_int(2); 3],
        vec![s_int(-1); 3],
        vec![s_int(1); 3],
        s_int(3),
        QuasiNorm::LInf,
    )
    .unwrap()
}

/// G_mu dilation datum for mu = p/q. The adapted lattice rescales the 147E
/// basis by 12q so every structure constant becomes a multiple of the BCH
/// denominators (2 and 12 at step 3); the lattice is then the grid
/// (12q Z)^7 in exponential coordinates with the centered fundamental box.
/// The stretch is the smallest integer satisfying the sufficiency bound.
pub fn gmu_datum(mu: &Scalar) -> Result<DilationDatum, CoreError> {
    let group = gmu_group(mu);
    let scale = Scalar::from_integer(12 * mu.denom());
    let half_scale = &scale / s_int(2);
    let scales = vec![scale; 7];
    let box_hi = vec![half_scale.clone(); 7];
    let box_lo: Vec<Scalar> = box_hi.iter().map(|h| -h.clone()).collect();
    // smallest integer lambda_0 with lambda_0 > 1 + r_+/r_-,
    // r_- = (6q)^(1/3), r_+ = 6q
    let mut stretch = s_int(2);
    loop {
        match DilationDatum::new(
            group.clone(),
            scales.clone(),
            box_lo.clone(),
            box_hi.clone(),
            stretch.clone(),
            QuasiNorm::LInf,
        ) {
            Ok(datum) => return Ok(datum),
            Err(CoreError::Invalid(msg)) if msg.contains("sufficiently large") => {
                stretch += s_int(1);
                if stretch > s_int(1000) {
                    return Err(CoreError::Invalid(
                        "no sufficiently large stretch below 1000".into(),
                    ));
                }
            }
            Err(e) => return Err(e),
        }
    }
}

/// The two-letter alphabet used by the bundled substitution.
pub fn bundled_alphabet() -> Alphabet {
    Alphabet::of(&["a", "b"])
}

/// A concrete choice set over the Heisenberg datum: gamma1 = (0,2),
/// gamma2 = (0,-2), x1 = 0, x2 = 4, x_b = 8 (in coordinates; multiples of
/// the scale 2 below).
pub fn heisenberg_good_choices() -> GoodChoices {
    GoodChoices {
        gamma1: Some(vec![0, 1]),
        gamma2: Some(vec![0, -1]),
        x1: Some(vec![0]),
        x2: Some(vec![2]),
        x_letters: Some(vec![vec![4]]),
    }
}

/// The bundled two-letter substitution over the Heisenberg datum: the good
/// rule with the choices above and the constant-base fill.
pub fn bundled_substitution(datum: &DilationDatum) -> SubstitutionDatum {
    build_good(
        datum,
        &bundled_alphabet(),
        &FillPolicy::Constant(0),
        &heisenberg_good_choices(),
        1_000_000,
    )
    .unwrap()
}


/// The spec-file models shipped in the repository's `specs/` directory.
pub fn spec_files() -> Vec<(&'static str, crate::specfile::SpecFile)> {
    use crate::specfile::*;

    let lie_section = |alg: &LieAlgebraSpec| -> LieAlgebraSection {
        let mut brackets = Vec::new();
        for (&(i, j), targets) in &alg.brackets {
            for (k, c) in targets {
                brackets.push((i + 1, j + 1, k + 1, c.clone()));
            }
        }
        LieAlgebraSection {
            dimension: alg.dim,
            brackets,
        }
    };
    let lattice_section = |d: &DilationDatum| -> LatticeSection {
        LatticeSection {
            scales: d.scales.clone(),
            box_lo: d.box_lo.clone(),
            box_hi: d.box_hi.clone(),
            stretch: d.stretch.clone(),
            quasinorm: d.quasinorm,
        }
    };
    let analysis = AnalysisSection {
        seed: Some(0),
        budget: Some(4_000_000),
        window: Some(s_int(54)),
        radii: vec![s_int(1), s_int(3), s_int(9)],
        weights: vec![("a".into(), s_int(1)), ("b".into(), s_int(2))],
    };

    let h_datum = heisenberg_datum();
    let subst = bundled_substitution(&h_datum);
    let heisenberg = SpecFile {
        lie_algebra: None,
        group: Some(GroupSection {
            degrees: vec![1, 1, 2],
            law: LawKind::Explicit(h_datum.group.law.clone()),
        }),
        lattice: Some(lattice_section(&h_datum)),
        substitution: Some(SpecFile::substitution_section(&h_datum, &subst)),
        analysis: Some(analysis.clone()),
    };

    let e_datum = euclidean_datum();
    let euclidean = SpecFile {
        lie_algebra: None,
        group: Some(GroupSection {
            degrees: vec![1, 1, 2],
            law: LawKind::Explicit(e_datum.group.law.clone()),
        }),
        lattice: Some(lattice_section(&e_datum)),
        substitution: Some(SpecFile::substitution_section(&e_datum, &subst)),
        analysis: Some(analysis.clone()),
    };

    let mu = crate::lie::default_mu();
    let gmu_alg = LieAlgebraSpec::family_147e(mu.clone());
    let g_datum = gmu_datum(&mu).unwrap();
    let gmu = SpecFile {
        lie_algebra: Some(lie_section(&gmu_alg)),
        group: Some(GroupSection {
            degrees: vec![1, 1, 1, 2, 2, 2, 3],
            law: LawKind::Bch,
        }),
        lattice: Some(lattice_section(&g_datum)),
        substitution: None,
        analysis: Some(AnalysisSection {
            seed: Some(0),
            budget: Some(4_000_000),
            ..Default::default()
        }),
    };

    let lie_257g = SpecFile {
        lie_algebra: Some(lie_section(&LieAlgebraSpec::algebra_257g())),
        ..Default::default()
    };
    let lie_147e = SpecFile {
        lie_algebra: Some(lie_section(&gmu_alg)),
        ..Default::default()
    };

    vec![
        ("heisenberg.spec", heisenberg),
        ("euclidean-z3.spec", euclidean),
        ("gmu.spec", gmu),
        ("lie-257g.spec", lie_257g),
        ("lie-147e.spec", lie_147e),
    ]
}
