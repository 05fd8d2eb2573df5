//! Ensemble check that generators anticommuting with X evolve identically and
//! those commuting with X stay at 1.

use serde::{Deserialize, Serialize};

use super::sse::{run_sse_ensemble, SseOptions};
use super::ContinuousRunConfig;
use crate::error::Result;
use crate::pauli::PauliOperator;
use crate::stats::mean_and_se;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SymmetryReport {
    /// Nontrivial stabilizer elements that were tracked.
    pub observables: Vec<PauliOperator>,
    pub anticommuting: Vec<bool>,
    pub times: Vec<f64>,
    /// Ensemble mean and standard error per time, per observable.
    pub means: Vec<Vec<f64>>,
    pub errors: Vec<Vec<f64>>,
    /// Largest `|mean(⟨a⟩ − ⟨b⟩)|/se` over anticommuting pairs and times.
    pub max_pair_z: f64,
    /// Largest `|mean − 1|` of commuting elements, with its standard error.
    pub max_commuting_deviation: f64,
    pub commuting_se: f64,
    pub passed: bool,
}

/// Tracks every nontrivial stabilizer element along `samples` times of the loop.
pub fn lemma2_symmetry_check(config: &ContinuousRunConfig, samples: usize) -> Result<SymmetryReport> {
    let code = config.path.code();
    let observables: Vec<PauliOperator> = code
        .stabilizer_group()
        .into_iter()
        .filter(|p| !p.is_identity_up_to_phase())
        .collect();
    let x = config.path.x();
    let anticommuting: Vec<bool> = observables.iter().map(|o| o.anticommutes_with(x)).collect();
    let opts = SseOptions {
        record_currents: false,
        observables: observables.clone(),
        samples,
    };
    let runs = run_sse_ensemble(config, &opts)?;
    let n_times = runs.iter().map(|r| r.samples.len()).min().unwrap_or(0);
    let times: Vec<f64> = runs[0].samples[..n_times].iter().map(|s| s.0).collect();
    let value = |r: usize, t: usize, o: usize| runs[r].samples[t].1[o];

    let mut means = Vec::new();
    let mut errors = Vec::new();
    let mut max_pair_z: f64 = 0.0;
    let mut max_dev: f64 = 0.0;
    let mut dev_se: f64 = 0.0;
    let mut passed = true;
    for t in 0..n_times {
        let (m, e): (Vec<f64>, Vec<f64>) = (0..observables.len())
            .map(|o| mean_and_se(&(0..runs.len()).map(|r| value(r, t, o)).collect::<Vec<_>>()))
            .unzip();
        for a in 0..observables.len() {
            if !anticommuting[a] {
                let dev = (m[a] - 1.0).abs();
                if dev > max_dev {
                    max_dev = dev;
                    dev_se = e[a];
                }
                passed &= dev <= (3.0 * e[a]).max(1e-9);
                continue;
            }
            for b in a + 1..observables.len() {
                if !anticommuting[b] {
                    continue;
                }
                let d: Vec<f64> = (0..runs.len()).map(|r| value(r, t, a) - value(r, t, b)).collect();
                let (dm, dse) = mean_and_se(&d);
                let z = if dse > 0.0 { dm.abs() / dse } else if dm.abs() > 1e-12 { f64::INFINITY } else { 0.0 };
                max_pair_z = max_pair_z.max(z);
                passed &= z <= 3.0;
            }
        }
        means.push(m);
        errors.push(e);
    }
    Ok(SymmetryReport {
        observables,
        anticommuting,
        times,
        means,
        errors,
        max_pair_z,
        max_commuting_deviation: max_dev,
        commuting_se: dev_se,
        passed,
    })
}
