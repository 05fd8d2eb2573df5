use std::f64::consts::PI;

use holozeno::densesim::{UnitaryProgram, UnitaryStep};
use holozeno::discrete::postselected_state;
use holozeno::holonomy::small_rotation_overlap;
use holozeno::{builtin_code, fidelity, HolonomicPath, PauliOperator, StateVector, Target};
use nalgebra::DMatrix;
use num_complex::Complex64;

fn path(code: &str, h: &str, x: &str, theta: f64) -> HolonomicPath {
    HolonomicPath::new(builtin_code(code).unwrap(), h.parse().unwrap(), x.parse().unwrap(), theta).unwrap()
}

fn valid_paths() -> Vec<HolonomicPath> {
    vec![
        path("bitflip3", "XXX", "XIZ", PI / 6.0),
        path("shor9", "ZIIZIIZII", "XIIXIIXII", PI / 3.0),
        path("steane7", "XXXXXXX", "ZIIIIII", PI / 5.0),
        path("perfect5", "XXXXX", "ZIIII", PI / 4.0),
    ]
}

/// `B† U B` for the isometry B whose columns span the code space.
fn compress(path: &HolonomicPath, prog: &UnitaryProgram) -> DMatrix<Complex64> {
    let b = path.code().code_basis().unwrap();
    let mut ub = b.clone();
    for (j, col) in b.column_iter().enumerate() {
        let mut s = StateVector::from_dvector(&col.into_owned()).unwrap();
        prog.apply(&mut s).unwrap();
        ub.set_column(j, &s.to_dvector());
    }
    b.adjoint() * ub
}

fn dense(prog: &UnitaryProgram, n: usize) -> DMatrix<Complex64> {
    prog.to_dense(n).unwrap()
}

#[test]
fn lemma1_overlap_on_every_builtin_code() {
    for p in valid_paths() {
        for dphi in [1e-2, 1e-3] {
            let steps = (2.0 * PI / dphi).ceil() as usize;
            let stride = if p.code().n() > 5 { 7 } else { 1 };
            let mut worst: f64 = 0.0;
            for l in (0..=steps).step_by(stride) {
                let phi = (l as f64 * dphi).min(2.0 * PI);
                let m = compress(&p, &p.v(phi - dphi).then(p.v_dagger(phi)));
                let (c, xi) = small_rotation_overlap(p.theta(), phi, dphi);
                let rot = UnitaryProgram::new(vec![UnitaryStep::Rotate {
                    op: p.h().clone(),
                    angle: -xi,
                }]);
                let expected = compress(&p, &rot) * Complex64::new(c, 0.0);
                worst = worst.max((m - expected).norm());
            }
            assert!(worst < 1e-9, "{} δφ={dphi}: {worst:e}", p.code().name());
        }
    }
}

#[test]
fn instantaneous_state_is_stabilized_by_rotated_generators() {
    for p in valid_paths() {
        let psi_bar = p.code().logical_basis_state(0).unwrap();
        for j in 0..=24 {
            let phi = 2.0 * PI * j as f64 / 24.0;
            let mut back = p.instantaneous_code_state(phi, &psi_bar).unwrap();
            p.v_dagger(phi).apply(&mut back).unwrap();
            for g in p.code().generators() {
                let e = back.expectation(g).unwrap();
                assert!((e.re - 1.0).abs() < 1e-10 && e.im.abs() < 1e-10, "{} φ={phi}: {g}", p.code().name());
            }
        }
    }
}

#[test]
fn bitflip_rotated_generators_match_closed_form() {
    let theta = PI / 6.0;
    let p = path("bitflip3", "XXX", "XIZ", theta);
    let (h, x) = (p.h().to_dense().unwrap(), p.x().to_dense().unwrap());
    let i = Complex64::new(0.0, 1.0);
    for j in 0..=40 {
        let phi = 2.0 * PI * j as f64 / 40.0;
        let v = dense(&p.v(phi), 3);
        for g in p.code().generators() {
            let gd = g.to_dense().unwrap();
            let rotated = &v * &gd * v.adjoint();
            let expected = if g.commutes_with(p.x()) {
                gd.clone()
            } else {
                let (s2, c2) = (2.0 * phi).sin_cos();
                let a = theta * phi / PI;
                &gd * Complex64::new(c2, 0.0) - &h * &x * &gd * Complex64::new(s2 * a.sin(), 0.0)
                    + &x * &gd * (i * s2 * a.cos())
            };
            assert!((rotated - expected).norm() < 1e-10, "φ={phi} g={g}");
        }
    }
}

#[test]
fn correction_final_unitary_matches_closed_form() {
    for p in [path("bitflip3", "XXX", "XIZ", PI / 6.0), path("perfect5", "XXXXX", "ZIIII", PI / 4.0)] {
        let n = p.code().n();
        for target in [Target::CodeSpace, Target::ErrorSpace] {
            for j in 0..=12 {
                let zeta = 2.0 * PI * j as f64 / 12.0;
                let cp = p.correction_path(zeta, target).unwrap();
                let direct = dense(&cp.w(cp.final_angle), n);
                let closed = dense(&cp.final_unitary_closed_form(), n);
                assert!((direct - closed).norm() < 1e-10, "{target:?} ζ={zeta}");
                let w0 = dense(&cp.w(0.0), n);
                let d = w0.nrows();
                assert!((w0 - DMatrix::<Complex64>::identity(d, d)).norm() < 1e-10);
            }
        }
    }
}

#[test]
fn error_operator_maps_instantaneous_state_to_rotated_error_state() {
    for p in valid_paths() {
        let psi_bar = p.code().logical_basis_state(0).unwrap();
        for j in 0..=16 {
            let zeta = 2.0 * PI * j as f64 / 16.0;
            let e = p.error_operator(zeta).unwrap();
            let got = e.apply(&p.instantaneous_code_state(zeta, &psi_bar).unwrap()).unwrap();
            let mut want = psi_bar.clone();
            want.apply_pauli(p.x()).unwrap();
            want.pauli_rotation(p.h(), e.theta_err).unwrap();
            want.apply_frame(p.h(), p.x(), p.angles(zeta)).unwrap();
            assert!(fidelity(&got, &want).unwrap() > 1.0 - 1e-12, "{} ζ={zeta}", p.code().name());
        }
    }
}

#[test]
fn error_operator_example_angles() {
    let p = path("bitflip3", "XXX", "XIZ", PI / 6.0);
    let e = p.error_operator(PI / 4.0).unwrap();
    assert!((e.theta_err - (1.0 / 24.0 + (1.0f64 / 12.0).atan())).abs() < 1e-12);
    assert!((e.theta_err - 0.12481).abs() < 1e-5);
    let e = p.error_operator(PI / 2.0).unwrap();
    assert!(e.chi.abs() < 1e-15 && e.theta_err.abs() < 1e-15);
    assert!(p.error_operator(7.0).is_err());
}

/// Closed-form instantaneous state and error operator against the projective simulation.
#[test]
fn prop3_prop4_match_trajectory_simulation() {
    let dphi = 1e-3;
    let tol = 10.0 * dphi;
    for p in [path("bitflip3", "XXX", "XIZ", PI / 6.0), path("perfect5", "XXXXX", "ZIIII", PI / 4.0)] {
        let psi_bar = p.code().logical_basis_state(0).unwrap();
        for j in 1..=8 {
            let steps = (j as f64 * (2.0 * PI / dphi) / 8.0).round() as usize;
            let phi = steps as f64 * dphi;
            let sim = postselected_state(&p, dphi, steps, false).unwrap();
            let closed = p.instantaneous_code_state(phi.min(2.0 * PI), &psi_bar).unwrap();
            let f = fidelity(&sim, &closed).unwrap();
            assert!(1.0 - f <= tol, "Prop 3 {} φ={phi}: {f}", p.code().name());

            let jumped = postselected_state(&p, dphi, steps, true).unwrap();
            let zeta = phi.min(2.0 * PI);
            let expected = p.error_operator(zeta).unwrap().apply(&closed).unwrap();
            let f = fidelity(&jumped, &expected).unwrap();
            assert!(1.0 - f <= tol, "Prop 4 {} ζ={zeta}: {f}", p.code().name());
        }
    }
}

#[test]
fn path_rejects_invalid_rotation_operators() {
    let code = builtin_code("bitflip3").unwrap();
    let h: PauliOperator = "XXX".parse().unwrap();
    assert!(HolonomicPath::new(code.clone(), h.clone(), "YII".parse().unwrap(), 1.0).is_ok());
    assert!(HolonomicPath::new(code.clone(), h.clone(), "IIZ".parse().unwrap(), 1.0).is_err());
    assert!(HolonomicPath::new(code.clone(), h.clone(), "XII".parse().unwrap(), 1.0).is_err());
    assert!(HolonomicPath::new(code, "XII".parse().unwrap(), "XIZ".parse().unwrap(), 1.0).is_err());
}
