use std::f64::consts::PI;

use holozeno::continuous::lindblad::integrate_rotating_lindblad;
use holozeno::continuous::{
    confinement_probability, jump_probability_ode, lemma2_symmetry_check, run_sse_ensemble,
    theta_derivative_after_loop, ContinuousRunConfig, GeneratorChoice, SseOptions,
};
use holozeno::{builtin_code, HolonomicPath, PauliOperator, StateVector};
use nalgebra::DMatrix;
use num_complex::Complex64;

fn bitflip(theta: f64, gens: Option<[&str; 2]>) -> HolonomicPath {
    let mut code = builtin_code("bitflip3").unwrap();
    if let Some(g) = gens {
        code = code.with_generators(g.iter().map(|s| s.parse().unwrap()).collect()).unwrap();
    }
    HolonomicPath::new(code, "XXX".parse().unwrap(), "XIZ".parse().unwrap(), theta).unwrap()
}

#[test]
fn anticommuting_generators_evolve_symmetrically() {
    let mut cfg = ContinuousRunConfig::new(bitflip(PI / 2.0, Some(["ZZI", "ZIZ"])), 1.0, 0.1);
    cfg.generators = GeneratorChoice::Code;
    cfg.trajectories = 400;
    cfg.master_seed = 3;
    let r = lemma2_symmetry_check(&cfg, 10).unwrap();
    assert_eq!(r.observables.len(), 3);
    assert_eq!(r.anticommuting.iter().filter(|&&a| a).count(), 2);
    assert!(r.passed, "z = {}, commuting deviation {}", r.max_pair_z, r.max_commuting_deviation);
    assert!(r.max_commuting_deviation < 1e-9);
    // The anticommuting pair does decay, so the comparison is not vacuous.
    let last = r.means.last().unwrap();
    let decayed = r.anticommuting.iter().zip(last).any(|(&a, &m)| a && m < 0.9);
    assert!(decayed, "{last:?}");
}

fn relative_formula_error(r: f64) -> f64 {
    let theta = PI / 2.0;
    let ode = 1.0 - jump_probability_ode(theta, r, 1.0).unwrap();
    ((confinement_probability(theta, r, 1.0) - ode) / ode).abs()
}

fn log_log_slope(rs: &[f64], errs: &[f64]) -> f64 {
    let (lx, ly): (Vec<f64>, Vec<f64>) = rs.iter().zip(errs).map(|(r, e)| (r.ln(), e.ln())).unzip();
    let n = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>() / lx.iter().map(|x| (x - mx).powi(2)).sum::<f64>()
}

#[test]
fn formula_error_scales_quadratically() {
    let small = [1e-3, 2e-3, 5e-3, 1e-2];
    let errs: Vec<f64> = small.iter().map(|&r| relative_formula_error(r)).collect();
    let slope = log_log_slope(&small, &errs);
    assert!((slope - 2.0).abs() < 0.15, "slope {slope}, errors {errs:?}");
    // Across the whole range the error stays below C·(ω/κ)²; higher orders in
    // 4πω/κ flatten the curve towards 5e-2.
    for r in [1e-3, 2e-3, 5e-3, 1e-2, 2e-2, 5e-2] {
        let e = relative_formula_error(r);
        assert!(e <= 0.6 * r * r, "ω/κ={r}: {e}");
    }
}

#[test]
fn first_order_theta_correction_vanishes() {
    for r in [0.005, 0.02, 0.05] {
        let d = theta_derivative_after_loop(0.0, r, 1.0).unwrap();
        assert!(d.norm() < 1e-8, "ω/κ={r}: {d}");
    }
    // Away from θ = 0 the sensitivity agrees with a central difference.
    let (theta, r, eps) = (1.0, 0.05, 1e-3);
    let d = theta_derivative_after_loop(theta, r, 1.0).unwrap().re;
    let g = |th: f64| 1.0 - 2.0 * jump_probability_ode(th, r, 1.0).unwrap();
    let fd = (g(theta + eps) - g(theta - eps)) / (2.0 * eps);
    assert!(d.abs() > 1e-3 && (d - fd).abs() < 1e-5 * d.abs().max(1.0), "{d} vs {fd}");
}

fn trace_distance(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> f64 {
    let diff = a - b;
    let eig = diff.symmetric_eigen();
    0.5 * eig.eigenvalues.iter().map(|v| v.abs()).sum::<f64>()
}

#[test]
fn ensemble_average_matches_master_equation() {
    let mut cfg = ContinuousRunConfig::new(bitflip(PI / 2.0, None), 1.0, 0.05);
    cfg.trajectories = 400;
    cfg.master_seed = 17;
    let runs = run_sse_ensemble(&cfg, &SseOptions::default()).unwrap();
    let d = 8;
    let mut rho_ens = DMatrix::<Complex64>::zeros(d, d);
    for r in &runs {
        let v = r.final_state.to_dvector();
        rho_ens += &v * v.adjoint();
    }
    rho_ens /= Complex64::new(runs.len() as f64, 0.0);

    let sol = integrate_rotating_lindblad(&cfg, &[], cfg.total_time(), 1).unwrap();
    // Lab frame at the end of the loop: F(T) = exp(iθH).
    let g = {
        let h: PauliOperator = "XXX".parse().unwrap();
        let mut cols = DMatrix::<Complex64>::zeros(d, d);
        for j in 0..d {
            let mut s = StateVector::basis(3, j);
            s.pauli_rotation(&h, PI / 2.0).unwrap();
            cols.set_column(j, &s.to_dvector());
        }
        cols
    };
    let rho_lab = &g * &sol.rho * g.adjoint();
    let dist = trace_distance(&rho_ens, &rho_lab);
    let bound = 3.0 / (runs.len() as f64).sqrt();
    assert!(dist <= bound, "trace distance {dist} > {bound}");
    // The ensemble really is mixed: a pure-state comparison would fail.
    assert!((rho_lab.trace().re - 1.0).abs() < 1e-9);
    assert!((&rho_lab * &rho_lab).trace().re < 0.99);
}
