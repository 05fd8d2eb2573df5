//! CUSUM change detection on windowed measurement currents.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::stream_rng;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    /// 1-based index of the window at which `S_k − m_k ≥ h` first held.
    pub window: usize,
    /// `k·Δt`.
    pub time: f64,
    /// Window index of the running minimum at detection, the change-point estimate.
    pub change_window: usize,
    pub change_time: f64,
}

/// Online CUSUM: `S_n = −8κΔt Σ y_k`, `m_k = min(0, S_1, …, S_k)`.
#[derive(Clone, Debug)]
pub struct Cusum {
    gain: f64,
    window: f64,
    threshold: f64,
    s: f64,
    m: f64,
    k: usize,
    argmin: usize,
}

impl Cusum {
    pub fn new(kappa: f64, window: f64, threshold: f64) -> Result<Self> {
        if !(kappa > 0.0 && window > 0.0 && threshold > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "detector needs κ, Δt, h > 0 (got {kappa}, {window}, {threshold})"
            )));
        }
        Ok(Cusum {
            gain: -8.0 * kappa * window,
            window,
            threshold,
            s: 0.0,
            m: 0.0,
            k: 0,
            argmin: 0,
        })
    }

    pub fn statistic(&self) -> f64 {
        self.s
    }

    pub fn running_min(&self) -> f64 {
        self.m
    }

    /// Feeds the next window average; returns the detection if this window triggers.
    pub fn push(&mut self, y: f64) -> Option<Detection> {
        self.k += 1;
        self.s += self.gain * y;
        if self.s < self.m {
            self.m = self.s;
            self.argmin = self.k;
        }
        (self.s - self.m >= self.threshold).then(|| Detection {
            window: self.k,
            time: self.k as f64 * self.window,
            change_window: self.argmin,
            change_time: self.argmin as f64 * self.window,
        })
    }
}

/// First detection in a sequence of window averages.
pub fn detect_jump(y: &[f64], window: f64, kappa: f64, threshold: f64) -> Result<Option<Detection>> {
    let mut c = Cusum::new(kappa, window, threshold)?;
    Ok(y.iter().find_map(|&v| c.push(v)))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub t: f64,
    pub y: f64,
    pub s: f64,
    pub s_minus_m: f64,
}

/// `(t, y, S, S − m)` for every window.
pub fn detector_trace(y: &[f64], window: f64, kappa: f64) -> Result<Vec<TraceRow>> {
    let mut c = Cusum::new(kappa, window, f64::INFINITY)?;
    Ok(y
        .iter()
        .enumerate()
        .map(|(k, &v)| {
            c.push(v);
            TraceRow {
                t: (k + 1) as f64 * window,
                y: v,
                s: c.statistic(),
                s_minus_m: c.statistic() - c.running_min(),
            }
        })
        .collect())
}

/// Window averages of a noisy current whose mean steps from +1 to −1 after window `k0`.
pub fn synthetic_step_current<R: Rng + ?Sized>(kappa_window: f64, k0: usize, windows: usize, rng: &mut R) -> Vec<f64> {
    let noise = Normal::new(0.0, (1.0 / (4.0 * kappa_window)).sqrt()).expect("positive width");
    (1..=windows)
        .map(|k| if k <= k0 { 1.0 } else { -1.0 } + noise.sample(rng))
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub kappa_window: f64,
    pub threshold: f64,
    pub step_window: usize,
    pub trials: usize,
    /// Detected in windows `k0+1 ..= k0+5`.
    pub within_five: f64,
    /// Detected at or before the step.
    pub early: f64,
    pub missed: f64,
    pub mean_delay_windows: f64,
}

/// Monte Carlo response of the detector to a synthetic +1 → −1 step after window `k0`.
pub fn calibrate(kappa_window: f64, threshold: f64, k0: usize, trials: usize, seed: u64) -> Result<Calibration> {
    if trials == 0 || !(kappa_window > 0.0) {
        return Err(Error::InvalidParameter("calibration needs trials ≥ 1 and κΔt > 0".into()));
    }
    let windows = k0 + 40;
    let hits: Vec<Option<usize>> = (0..trials as u64)
        .into_par_iter()
        .map(|i| {
            let y = synthetic_step_current(kappa_window, k0, windows, &mut stream_rng(seed, i));
            detect_jump(&y, kappa_window, 1.0, threshold).map(|d| d.map(|d| d.window))
        })
        .collect::<Result<_>>()?;
    let n = trials as f64;
    let within = hits.iter().filter(|h| matches!(h, Some(k) if *k > k0 && *k <= k0 + 5)).count();
    let early = hits.iter().filter(|h| matches!(h, Some(k) if *k <= k0)).count();
    let missed = hits.iter().filter(|h| h.is_none()).count();
    let late: Vec<f64> = hits.iter().flatten().filter(|&&k| k > k0).map(|&k| (k - k0) as f64).collect();
    Ok(Calibration {
        kappa_window,
        threshold,
        step_window: k0,
        trials,
        within_five: within as f64 / n,
        early: early as f64 / n,
        missed: missed as f64 / n,
        mean_delay_windows: late.iter().sum::<f64>() / late.len().max(1) as f64,
    })
}
