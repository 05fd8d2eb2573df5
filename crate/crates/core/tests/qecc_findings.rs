use std::collections::HashSet;
use std::f64::consts::PI;

use holozeno::pauli::Letter;
use holozeno::qecc::{
    ancilla_requirement, augment_code, kl_check, prop7_check, rotated_kl_residual, search_x, theorem4_check,
    CorrectableSet, SearchConstraints,
};
use holozeno::{builtin_code, HolonomicPath, PauliOperator, StabilizerCode};
use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;

fn p(s: &str) -> PauliOperator {
    s.parse().unwrap()
}

/// Letter-level syndrome: a generator anticommutes with P when they differ on an
/// odd number of qubits where both act nontrivially.
fn letter_syndrome(code: &StabilizerCode, e: &[Letter]) -> Vec<bool> {
    code.generators()
        .iter()
        .map(|g| {
            g.letters()
                .iter()
                .zip(e)
                .filter(|(a, b)| **a != Letter::I && **b != Letter::I && a != b)
                .count()
                % 2
                == 1
        })
        .collect()
}

fn letter_product(a: &[Letter], b: &[Letter]) -> Vec<Letter> {
    a.iter()
        .zip(b)
        .map(|(&x, &y)| match (x, y) {
            (Letter::I, l) | (l, Letter::I) => l,
            (l, m) if l == m => Letter::I,
            (l, m) => *[Letter::X, Letter::Y, Letter::Z].iter().find(|&&k| k != l && k != m).unwrap(),
        })
        .collect()
}

#[test]
fn syndrome_counts_match_hash_set_oracle() {
    for (name, d_e, d_e2) in [("shor9", 22, 148), ("steane7", 22, 64), ("perfect5", 16, 16)] {
        let code = builtin_code(name).unwrap();
        let e = CorrectableSet::weight_one(code.n());
        let letters: Vec<Vec<Letter>> = e.errors.iter().map(|p| p.letters()).collect();
        let singles: HashSet<Vec<bool>> = letters.iter().map(|l| letter_syndrome(&code, l)).collect();
        let pairs: HashSet<Vec<bool>> = letters
            .iter()
            .flat_map(|a| letters.iter().map(move |b| letter_product(a, b)))
            .map(|l| letter_syndrome(&code, &l))
            .collect();
        let r = ancilla_requirement(&code, &e);
        assert_eq!((r.d_e, r.d_e2), (singles.len(), pairs.len()), "{name}");
        assert_eq!((r.d_e, r.d_e2), (d_e, d_e2), "{name}");
    }
}

#[test]
fn ancilla_requirements_of_builtin_codes() {
    let s: Vec<usize> = ["shor9", "steane7", "perfect5"]
        .iter()
        .map(|n| {
            let code = builtin_code(n).unwrap();
            ancilla_requirement(&code, &CorrectableSet::weight_one(code.n())).s
        })
        .collect();
    assert_eq!(s, vec![0, 1, 2]);
}

#[test]
fn search_finds_shor_rotation_and_nothing_for_steane_or_perfect() {
    let shor = builtin_code("shor9").unwrap();
    let r = search_x(&shor, &p("ZIIZIIZII"), &CorrectableSet::weight_one(9), SearchConstraints::default()).unwrap();
    assert!(!r.truncated);
    assert!(r.found.contains(&p("XIIXIIXII")), "{} found", r.found.len());
    assert!(r.found.iter().all(|x| x.weight() >= 3 && x.is_hermitian()));

    for (name, h) in [("steane7", "ZZZZZZZ"), ("perfect5", "ZZZZZ")] {
        let code = builtin_code(name).unwrap();
        let r = search_x(&code, &p(h), &CorrectableSet::weight_one(code.n()), SearchConstraints::default()).unwrap();
        assert!(!r.truncated && r.found.is_empty(), "{name}: {:?}", r.found);
    }
}

#[test]
fn search_respects_result_cap_and_order() {
    let shor = builtin_code("shor9").unwrap();
    let e = CorrectableSet::weight_one(9);
    let h = p("ZIIZIIZII");
    let all = search_x(&shor, &h, &e, SearchConstraints::default()).unwrap();
    let capped = search_x(
        &shor,
        &h,
        &e,
        SearchConstraints {
            max_results: Some(3),
            ..Default::default()
        },
    )
    .unwrap();
    assert_eq!(capped.found, all.found[..3].to_vec());
    let weights: Vec<usize> = all.found.iter().map(|x| x.weight()).collect();
    assert!(weights.windows(2).all(|w| w[0] <= w[1]));
    let tiny = search_x(
        &shor,
        &h,
        &e,
        SearchConstraints {
            max_candidates: 10,
            ..Default::default()
        },
    )
    .unwrap();
    assert!(tiny.truncated && tiny.enumerated == 10);
}

#[test]
fn shor_rotation_satisfies_sufficient_conditions_and_prop7() {
    let shor = builtin_code("shor9").unwrap();
    let e = CorrectableSet::weight_one(9);
    let (h, x) = (p("ZIIZIIZII"), p("XIIXIIXII"));
    assert!(theorem4_check(&shor, &h, &x, &e).unwrap().passed);
    assert!(prop7_check(&shor, &h, &x, &e).unwrap().passed);
    let path = HolonomicPath::new(shor, h, x, PI / 3.0).unwrap();
    let r = rotated_kl_residual(&path, &e, 7).unwrap();
    assert!(r.max_residual < 1e-9, "{r:?}");
}

#[test]
fn augmented_constructions_pass_rotated_kl() {
    let cases = [("steane7", 1, "ZZZZZZZ", "XZIIIII"), ("perfect5", 2, "ZZZZZ", "XIIII")];
    for (name, s, h, x) in cases {
        let code = builtin_code(name).unwrap();
        let (aug, hb, xb) = augment_code(&code, s, &p(h), &p(x)).unwrap();
        assert_eq!((aug.n(), aug.generators().len()), (code.n() + s, code.generators().len() + s));
        let e = CorrectableSet::weight_one(aug.n());
        assert!(kl_check(&aug, &e).unwrap().passed(), "{name}");
        assert!(theorem4_check(&aug, &hb, &xb, &e).unwrap().passed, "{name}");
        let path = HolonomicPath::new(aug, hb, xb, PI / 4.0).unwrap();
        let r = rotated_kl_residual(&path, &e, 7).unwrap();
        assert!(r.max_residual < 1e-9, "{name}: {r:?}");
    }
}

#[test]
fn unaugmented_steane_rotation_breaks_kl_along_the_loop() {
    let code = builtin_code("steane7").unwrap();
    let e = CorrectableSet::weight_one(7);
    let (h, x) = (p("ZZZZZZZ"), p("XZIIIII"));
    assert!(!theorem4_check(&code, &h, &x, &e).unwrap().passed);
    let path = HolonomicPath::new(code, h, x, PI / 4.0).unwrap();
    assert!(rotated_kl_residual(&path, &e, 7).unwrap().max_residual > 1e-3);
}

fn compress(code: &StabilizerCode, a: &PauliOperator) -> DMatrix<Complex64> {
    let b = code.code_basis().unwrap();
    let mut ab = b.clone();
    for (j, col) in b.column_iter().enumerate() {
        let mut s = holozeno::StateVector::from_dvector(&col.into_owned()).unwrap();
        s.apply_pauli(a).unwrap();
        ab.set_column(j, &s.to_dvector());
    }
    b.adjoint() * ab
}

fn is_multiple_of_identity(m: &DMatrix<Complex64>) -> Option<Complex64> {
    let g = m[(0, 0)];
    let d = m.nrows();
    let r = (m - DMatrix::<Complex64>::identity(d, d) * g).norm();
    (r < 1e-12).then_some(g)
}

#[test]
fn lemma3_on_stabilizer_and_logical_elements() {
    for name in ["bitflip3", "shor9", "steane7", "perfect5"] {
        let code = builtin_code(name).unwrap();
        for s in code.stabilizer_group() {
            let g = is_multiple_of_identity(&compress(&code, &s)).expect("stabilizer acts as a scalar");
            assert!((g.norm() - 1.0).abs() < 1e-12 && g.im.abs() < 1e-12, "{name}: {s}");
        }
        for l in code.logical_x().iter().chain(code.logical_z()) {
            assert!(is_multiple_of_identity(&compress(&code, l)).is_none(), "{name}: {l}");
        }
    }
    // Dense projector form on a small code.
    let code = builtin_code("bitflip3").unwrap();
    let p0 = code.code_projector().unwrap();
    let a = p("XII").to_dense().unwrap();
    assert!((&p0 * a * &p0).norm() < 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn lemma3_nonzero_syndrome_vanishes(name in prop::sample::select(vec!["bitflip3", "shor9", "steane7", "perfect5"]), seed in any::<u64>()) {
        let code = builtin_code(name).unwrap();
        let letters: Vec<Letter> = (0..code.n()).map(|q| Letter::ALL[((seed >> (2 * q)) & 3) as usize]).collect();
        let a = PauliOperator::from_letters(&letters);
        prop_assume!(!code.syndrome(&a).unwrap().is_zero());
        prop_assert!(compress(&code, &a).norm() < 1e-12);
    }
}
