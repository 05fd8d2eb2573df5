//! Weak measurement of a fixed observable: the quantum variance is a
//! supermartingale with initial drift `−4κ⟨ΔO²⟩²`.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::sse::{MaskedPauli, Measured};
use crate::densesim::StateVector;
use crate::error::{Error, Result};
use crate::pauli::PauliOperator;
use crate::rng::stream_rng;
use crate::stats::{mean_and_se, normal_quantile};

#[derive(Clone, Debug)]
pub struct MartingaleConfig {
    pub observable: PauliOperator,
    pub initial: StateVector,
    pub kappa: f64,
    pub t_end: f64,
    pub dt: f64,
    /// Number of equal intervals of the observation grid.
    pub grid: usize,
    /// Quantile bins of the conditioning variance.
    pub bins: usize,
    pub trajectories: usize,
    pub master_seed: u64,
    /// Family-wise significance level of the one-sided tests.
    pub alpha: f64,
}

impl MartingaleConfig {
    /// Measuring Z on |+⟩ for `2/κ`, observed every `0.1/κ`.
    pub fn plus_state(kappa: f64) -> Self {
        let plus = StateVector::from_amplitudes(vec![Complex64::new(1.0, 0.0); 2]).expect("nonzero");
        MartingaleConfig {
            observable: "Z".parse().expect("valid Pauli"),
            initial: plus,
            kappa,
            t_end: 2.0 / kappa,
            dt: 1e-3 / kappa,
            grid: 20,
            bins: 4,
            trajectories: 1000,
            master_seed: 0,
            alpha: 0.01,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SupermartingaleReport {
    pub times: Vec<f64>,
    pub mean_variance: Vec<f64>,
    pub se_variance: Vec<f64>,
    /// Number of one-sided tests in the family.
    pub tests: usize,
    /// Per-test critical value after the Bonferroni split of `alpha`.
    pub critical_z: f64,
    /// Largest standardized increase `mean(ΔV)/se` over all tests.
    pub max_z: f64,
    pub non_increasing: bool,
    /// Ensemble slope of the variance over the first step.
    pub initial_drift: f64,
    pub initial_drift_se: f64,
    /// `−4κ⟨ΔO²⟩(0)²`.
    pub expected_drift: f64,
    pub drift_ok: bool,
}

struct Path {
    variances: Vec<f64>,
    first_step: f64,
}

fn variance(o: &MaskedPauli, psi: &[Complex64]) -> f64 {
    let m = o.expect(psi);
    (1.0 - m * m).max(0.0)
}

fn simulate(cfg: &MartingaleConfig, index: u64) -> Result<Path> {
    let mut rng = stream_rng(cfg.master_seed, index);
    let ops = [cfg.observable.clone()];
    let mut meas = Measured::new(&ops);
    let o = MaskedPauli::new(&cfg.observable);
    let mut psi = cfg.initial.amplitudes().to_vec();
    let steps_per_cell = ((cfg.t_end / (cfg.grid as f64 * cfg.dt)).round() as usize).max(1);
    let h = cfg.t_end / (cfg.grid * steps_per_cell) as f64;
    let mut variances = vec![variance(&o, &psi)];
    let mut first_step = f64::NAN;
    for _ in 0..cfg.grid {
        for _ in 0..steps_per_cell {
            meas.step(&mut psi, cfg.kappa, h, &mut rng)?;
            if first_step.is_nan() {
                first_step = (variance(&o, &psi) - variances[0]) / h;
            }
        }
        variances.push(variance(&o, &psi));
    }
    Ok(Path { variances, first_step })
}

/// `(mean, se)` pairs of `V(t) − V(s)`, overall and within quantile bins of `V(s)`.
fn increments(paths: &[Path], s: usize, bins: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    let diffs: Vec<f64> = paths.iter().map(|p| p.variances[s + 1] - p.variances[s]).collect();
    out.push(mean_and_se(&diffs));
    let mut order: Vec<usize> = (0..paths.len()).collect();
    order.sort_by(|&a, &b| paths[a].variances[s].total_cmp(&paths[b].variances[s]));
    let per = paths.len() / bins.max(1);
    if per >= 10 {
        for chunk in order.chunks(per) {
            if chunk.len() < 10 {
                continue;
            }
            let d: Vec<f64> = chunk.iter().map(|&i| diffs[i]).collect();
            out.push(mean_and_se(&d));
        }
    }
    out
}

pub fn supermartingale_check(cfg: &MartingaleConfig) -> Result<SupermartingaleReport> {
    if !cfg.observable.is_hermitian() || cfg.observable.n() != cfg.initial.n() {
        return Err(Error::InvalidParameter("observable must be a Hermitian Pauli on the state's qubits".into()));
    }
    if !(cfg.kappa > 0.0 && cfg.t_end > 0.0 && cfg.dt > 0.0) || cfg.grid == 0 || cfg.trajectories < 2 {
        return Err(Error::InvalidParameter("need κ, T, dt > 0, a non-empty grid and ≥ 2 trajectories".into()));
    }
    let paths: Vec<Path> = (0..cfg.trajectories as u64)
        .into_par_iter()
        .map(|i| simulate(cfg, i))
        .collect::<Result<_>>()?;
    let times: Vec<f64> = (0..=cfg.grid).map(|i| cfg.t_end * i as f64 / cfg.grid as f64).collect();
    let (mean_variance, se_variance): (Vec<f64>, Vec<f64>) = (0..=cfg.grid)
        .map(|i| mean_and_se(&paths.iter().map(|p| p.variances[i]).collect::<Vec<_>>()))
        .unzip();

    let all: Vec<(f64, f64)> = (0..cfg.grid).flat_map(|s| increments(&paths, s, cfg.bins)).collect();
    let tests = all.len();
    let critical_z = normal_quantile(1.0 - cfg.alpha / tests as f64);
    let mut max_z = f64::NEG_INFINITY;
    let mut non_increasing = true;
    for &(m, se) in &all {
        let z = if se > 0.0 {
            m / se
        } else if m > 0.0 {
            f64::INFINITY
        } else {
            0.0
        };
        max_z = max_z.max(z);
        non_increasing &= z <= critical_z;
    }

    let slopes: Vec<f64> = paths.iter().map(|p| p.first_step).collect();
    let (initial_drift, initial_drift_se) = mean_and_se(&slopes);
    let v0 = mean_variance[0];
    let expected_drift = -4.0 * cfg.kappa * v0 * v0;
    let drift_ok = (initial_drift - expected_drift).abs() <= 3.0 * initial_drift_se.max(1e-12);
    Ok(SupermartingaleReport {
        times,
        mean_variance,
        se_variance,
        tests,
        critical_z,
        max_z,
        non_increasing,
        initial_drift,
        initial_drift_se,
        expected_drift,
        drift_ok,
    })
}
