//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any failure.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fs;
use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use holozeno::codes::builtin_code;
use holozeno::continuous::fokker_planck::{ks_against_density, sample_sde, SdeSampling, StationaryDensity};
use holozeno::continuous::martingale::{supermartingale_check, MartingaleConfig};
use holozeno::continuous::{
    confinement_probability, jump_probability_ode, run_sse_ensemble, summarize_sse, ContinuousRunConfig, SseOptions,
};
use holozeno::discrete::{
    forced_correction_fidelity, monte_carlo_no_fault, postselected_state, run_forced_trajectory, CorrectionPolicy,
    DiscreteRunConfig,
};
use holozeno::holonomy::discrete_no_jump_probability;
use holozeno::pauli::PauliOperator;
use holozeno::qecc::{
    ancilla_requirement, augment_code, kl_check, rotated_kl_residual, search_x, theorem4_check, CorrectableSet,
    SearchConstraints,
};
use holozeno::rng::{derive_seed, stream_rng};
use holozeno::{fidelity, HolonomicPath, Target};

type Outcome = (bool, String);
type Criterion = (&'static str, fn() -> Outcome);

fn path(code: &str, h: &str, x: &str, theta: f64) -> HolonomicPath {
    HolonomicPath::new(builtin_code(code).unwrap(), h.parse().unwrap(), x.parse().unwrap(), theta).unwrap()
}

fn bitflip(theta: f64) -> HolonomicPath {
    path("bitflip3", "XXX", "XIZ", theta)
}

fn all_codes() -> Vec<HolonomicPath> {
    vec![
        bitflip(PI / 6.0),
        path("perfect5", "XXXXX", "ZIIII", PI / 4.0),
        path("steane7", "XXXXXXX", "ZIIIIII", PI / 3.0),
        path("shor9", "ZIIZIIZII", "XIIXIIXII", PI / 5.0),
    ]
}

fn secs(d: Duration) -> String {
    format!("{:.1}s", d.as_secs_f64())
}

fn theorem1() -> Outcome {
    let theta = PI / 6.0;
    let mut ok = true;
    let mut notes = Vec::new();
    for (i, m) in [400.0, 800.0].into_iter().enumerate() {
        let dphi = 2.0 * PI / m;
        let cfg = DiscreteRunConfig {
            policy: CorrectionPolicy::None,
            trajectories: 10_000,
            master_seed: derive_seed(1, i as u64),
            ..DiscreteRunConfig::new(bitflip(theta), dphi)
        };
        let start = Instant::now();
        let s = monte_carlo_no_fault(&cfg).unwrap();
        let elapsed = start.elapsed();
        let p = discrete_no_jump_probability(theta, dphi);
        let sigma = (p * (1.0 - p) / s.trajectories as f64).sqrt();
        let z = (s.p_no_jump - p) / sigma;
        ok &= z.abs() <= 3.0 && elapsed <= Duration::from_secs(120);
        notes.push(format!("dphi=2pi/{m}: MC {} vs {p:.5}, z={z:.2}, {}", s.p_no_jump, secs(elapsed)));
    }
    (ok, notes.join("; "))
}

fn holonomy() -> Outcome {
    let mut worst = f64::INFINITY;
    for p in all_codes() {
        let cfg = DiscreteRunConfig::new(p, 1e-3);
        worst = worst.min(run_forced_trajectory(&cfg, None).unwrap().final_fidelity);
    }
    (worst >= 1.0 - 1e-6, format!("min no-jump fidelity over 4 codes at dphi=1e-3: 1 - {:.2e}", 1.0 - worst))
}

fn theorem2() -> Outcome {
    let dphis = [1e-2, 5e-3, 2.5e-3];
    let mut worst = f64::INFINITY;
    let mut at = String::new();
    for p in [bitflip(PI / 6.0), path("perfect5", "XXXXX", "ZIIII", PI / 4.0)] {
        for zeta in [PI / 6.0, PI / 3.0, PI / 2.0, 2.0 * PI / 3.0] {
            for target in [Target::CodeSpace, Target::ErrorSpace] {
                let r = forced_correction_fidelity(&p, zeta, target, &dphis).unwrap();
                if r.extrapolated < worst {
                    worst = r.extrapolated;
                    at = format!("{} zeta={zeta:.4} {target:?}", p.code().name());
                }
            }
        }
    }
    (worst >= 0.999, format!("min extrapolated fidelity {worst:.6} ({at})"))
}

fn theorem3_fig5() -> Outcome {
    let (theta, kappa) = (FRAC_PI_2, 1.0);
    let mut ok = true;
    let mut worst_rel: f64 = 0.0;
    for i in 0..=20 {
        let r = 10f64.powf(-3.0 + i as f64 * (0.02f64.log10() + 3.0) / 20.0);
        let ode = 1.0 - jump_probability_ode(theta, r * kappa, kappa).unwrap();
        let formula = confinement_probability(theta, r * kappa, kappa);
        worst_rel = worst_rel.max(((ode - formula) / formula).abs());
    }
    ok &= worst_rel <= 0.02;
    let mut notes = vec![format!("ODE vs formula max rel {worst_rel:.2e} on [1e-3, 0.02]")];
    let start = Instant::now();
    for (i, r) in [0.005, 0.02, 0.05].into_iter().enumerate() {
        let cfg = ContinuousRunConfig {
            dt: 1e-3 / kappa,
            trajectories: 1000,
            master_seed: derive_seed(2, i as u64),
            ..ContinuousRunConfig::new(bitflip(theta), kappa, r * kappa)
        };
        let s = summarize_sse(&run_sse_ensemble(&cfg, &SseOptions::default()).unwrap());
        let ode = jump_probability_ode(theta, r * kappa, kappa).unwrap();
        let z = (s.p_jump - ode) / s.se_p_jump;
        ok &= z.abs() <= 3.0;
        notes.push(format!("r={r}: SSE {:.4} vs ODE {ode:.4}, z={z:.2}", s.p_jump));
    }
    let elapsed = start.elapsed();
    ok &= elapsed <= Duration::from_secs(30 * 60);
    notes.push(format!("SSE {}", secs(elapsed)));
    (ok, notes.join("; "))
}

fn prop3_prop4() -> Outcome {
    let dphi = 1e-3;
    let mut worst: f64 = 0.0;
    for p in all_codes() {
        let psi_bar = p.code().logical_basis_state(0).unwrap();
        for j in 1..=8 {
            let steps = (j as f64 * (2.0 * PI / dphi) / 8.0).round() as usize;
            let phi = (steps as f64 * dphi).min(2.0 * PI);
            let closed = p.instantaneous_code_state(phi, &psi_bar).unwrap();
            let sim = postselected_state(&p, dphi, steps, false).unwrap();
            worst = worst.max(1.0 - fidelity(&sim, &closed).unwrap());
            let jumped = postselected_state(&p, dphi, steps, true).unwrap();
            let expected = p.error_operator(phi).unwrap().apply(&closed).unwrap();
            worst = worst.max(1.0 - fidelity(&jumped, &expected).unwrap());
        }
    }
    (worst <= 10.0 * dphi, format!("max fidelity error {worst:.2e} (bound {:.0e})", 10.0 * dphi))
}

fn appendix_b() -> Outcome {
    let r = supermartingale_check(&MartingaleConfig::plus_state(1.0)).unwrap();
    (
        r.non_increasing && r.drift_ok,
        format!(
            "max z {:.2} vs critical {:.2} over {} tests; drift {:.3} +- {:.3} vs {:.3}",
            r.max_z, r.critical_z, r.tests, r.initial_drift, r.initial_drift_se, r.expected_drift
        ),
    )
}

fn appendix_c() -> Outcome {
    let r = 0.01;
    let density = StationaryDensity::new(r, 1.0, 0.0).unwrap();
    let norm = density.normalization().unwrap();
    let samples = sample_sde(&SdeSampling::standard(r, 1.0), &mut stream_rng(3, 0)).unwrap();
    let ks = ks_against_density(&density, &samples).unwrap();
    let peaks = density.peaks().unwrap();
    let offset = peaks
        .iter()
        .map(|x| {
            let m = x.rem_euclid(FRAC_PI_2);
            m.min(FRAC_PI_2 - m)
        })
        .fold(0.0, f64::max);
    let classes: Vec<i64> = peaks.iter().map(|x| (x / FRAC_PI_2).round() as i64 % 2).collect();
    let table = density.table(2000);
    let n = table.len();
    let maxima = (0..n)
        .filter(|&i| {
            let p = table[i].1;
            p > table[(i + n - 1) % n].1 && p > table[(i + 1) % n].1
        })
        .count();
    let contrast = peaks.iter().map(|&x| density.density(x)).fold(f64::INFINITY, f64::min)
        / density.density(PI / 4.0).max(density.density(3.0 * PI / 4.0));
    let ok = (norm - 1.0).abs() <= 1e-6
        && ks.p_value > 0.01
        && offset < r
        && classes.contains(&0)
        && classes.contains(&1)
        && maxima == 2
        && contrast > 10.0;
    (
        ok,
        format!(
            "norm-1 {:.1e}; KS D={:.4} n={} p={:.3}; peaks {:.5}, {:.5} (offset {offset:.2e}); {maxima} maxima, contrast {contrast:.0}",
            norm - 1.0,
            ks.statistic,
            ks.n,
            ks.p_value,
            peaks[0],
            peaks[1]
        ),
    )
}

fn qec_findings() -> Outcome {
    let start = Instant::now();
    let mut ok = true;
    let mut notes = Vec::new();
    let codes = [
        ("shor9", "ZIIZIIZII", ""),
        ("steane7", "ZZZZZZZ", "XZIIIII"),
        ("perfect5", "ZZZZZ", "XIIII"),
    ];
    let mut ancillas = Vec::new();
    for (name, h, aug_x) in codes {
        let code = builtin_code(name).unwrap();
        let h: PauliOperator = h.parse().unwrap();
        let e = CorrectableSet::weight_one(code.n());
        let found = search_x(&code, &h, &e, SearchConstraints::default()).unwrap();
        let s = ancilla_requirement(&code, &e).s;
        ancillas.push(s);
        if name == "shor9" {
            let target: PauliOperator = "XIIXIIXII".parse().unwrap();
            let has = found.found.contains(&target);
            ok &= has && !found.truncated;
            notes.push(format!("shor9: {} valid X, contains XIIXIIXII: {has}", found.found.len()));
        } else {
            ok &= found.found.is_empty() && !found.truncated;
            notes.push(format!("{name}: {} valid X", found.found.len()));
            let (aug, ha, xa) = augment_code(&code, s, &h, &aug_x.parse().unwrap()).unwrap();
            let ea = CorrectableSet::weight_one(aug.n());
            let p = HolonomicPath::new(aug.clone(), ha.clone(), xa.clone(), PI / 4.0).unwrap();
            let kl = rotated_kl_residual(&p, &ea, 7).unwrap();
            let base_ok = kl_check(&aug, &ea).unwrap().passed() && theorem4_check(&aug, &ha, &xa, &ea).unwrap().passed;
            ok &= base_ok && kl.max_residual < 1e-9;
            notes.push(format!("{}: rotated KL residual {:.1e}", aug.name(), kl.max_residual));
        }
    }
    ok &= ancillas == [0, 1, 2];
    let elapsed = start.elapsed();
    ok &= elapsed <= Duration::from_secs(300);
    notes.push(format!("ancillas {ancillas:?}, {}", secs(elapsed)));
    (ok, notes.join("; "))
}

fn run_all(dir: &Path, out: &str) {
    let configs = [
        ("discrete-sweep", "trajectories = 300\ndphi = [\"2*pi/200\", \"2*pi/50\"]\nmaster_seed = 9\n"),
        (
            "continuous-sweep",
            "trajectories = 30\nsse_omega_over_kappa = [0.05]\nomega_over_kappa = [0.01]\nmaster_seed = 9\n",
        ),
        ("detector-calib", "trials = 200\nmaster_seed = 9\n"),
        ("fokker-planck", "kappa_t_end = 100\npoints = 200\nmaster_seed = 9\n"),
        ("qec-report", "max_listed = 5\n"),
        (
            "single-run",
            "protocol = \"continuous\"\nomega_over_kappa = 0.05\ndetector = true\ncorrection = \"code-space\"\nmaster_seed = 9\n",
        ),
    ];
    for (cmd, text) in configs {
        let cfg = dir.join(format!("{cmd}.toml"));
        fs::write(&cfg, text).unwrap();
        let status = Command::new(env!("CARGO_BIN_EXE_holozeno"))
            .args([cmd, "--config", cfg.to_str().unwrap(), "--out", &dir.join(out).join(cmd).display().to_string()])
            .output()
            .unwrap()
            .status;
        assert!(status.success(), "{cmd} failed");
    }
}

fn files(root: &Path) -> Vec<std::path::PathBuf> {
    let mut out = Vec::new();
    for entry in fs::read_dir(root).unwrap() {
        let p = entry.unwrap().path();
        if p.is_dir() {
            out.extend(files(&p));
        } else {
            out.push(p);
        }
    }
    out.sort();
    out
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    run_all(dir.path(), "a");
    run_all(dir.path(), "b");
    let a = files(&dir.path().join("a"));
    let b = files(&dir.path().join("b"));
    let mut ok = a.len() == b.len() && !a.is_empty();
    let mut differing = Vec::new();
    for (x, y) in a.iter().zip(&b) {
        if fs::read(x).unwrap() != fs::read(y).unwrap() {
            ok = false;
            differing.push(x.display().to_string());
        }
    }
    (ok, format!("{} CSV/JSON files compared, {} differ {differing:?}", a.len(), differing.len()))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("Theorem 1 no-jump probability", theorem1),
        ("Holonomy without jumps", holonomy),
        ("Theorem 2 single-jump correction", theorem2),
        ("Theorem 3 / Fig. 5 jump probability", theorem3_fig5),
        ("Prop. 3 / Prop. 4 closed forms", prop3_prop4),
        ("Appendix B variance supermartingale", appendix_b),
        ("Appendix C stationary density", appendix_c),
        ("Section 4 code findings", qec_findings),
        ("Determinism", determinism),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let start = Instant::now();
        let (ok, detail) = check();
        if !ok {
            failed += 1;
        }
        println!("{} {name}: {detail} [{}]", if ok { "PASS" } else { "FAIL" }, secs(start.elapsed()));
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
