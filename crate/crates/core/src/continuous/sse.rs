//! Euler–Maruyama integration of the stochastic Schrödinger equation for
//! weak measurement of the rotating generators.
//!
//! The state is propagated in the frame that co-rotates with the generators,
//! `ψ̃ = V†(t)ψ`, where the measured operators are the fixed `g_j`. Each step
//! applies the measurement update, renormalizes, then the exact frame change
//! `V†(t+dt)V(t)`.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::detector::{Cusum, Detection};
use super::ContinuousRunConfig;
use crate::densesim::{fidelity, StateVector};
use crate::error::{Error, Result};
use crate::holonomy::{CorrectionPath, FrameAngles, Target};
use crate::pauli::PauliOperator;
use crate::rng::stream_rng;
use crate::stats::{mean_and_se, normal_quantile};

/// Squared norm below which a step counts as a collapse (norm 1e-8).
const COLLAPSE_NORM_SQR: f64 = 1e-16;

/// A Pauli stored as `(Pψ)[k] = coef[k]·ψ[k ⊕ xm]`.
#[derive(Clone, Debug)]
pub(crate) struct MaskedPauli {
    xm: usize,
    coef: Vec<Complex64>,
}

impl MaskedPauli {
    pub(crate) fn new(p: &PauliOperator) -> Self {
        let (xm, zm) = p.index_masks();
        let f = p.phase_factor();
        let coef = (0..1usize << p.n())
            .map(|k| if ((k ^ xm) & zm).count_ones() % 2 == 1 { -f } else { f })
            .collect();
        MaskedPauli { xm, coef }
    }

    pub(crate) fn parts(&self) -> (usize, &[Complex64]) {
        (self.xm, &self.coef)
    }

    /// `Re⟨ψ|P|ψ⟩` (exact for Hermitian P).
    pub(crate) fn expect(&self, psi: &[Complex64]) -> f64 {
        psi.iter()
            .enumerate()
            .map(|(k, a)| (a.conj() * self.coef[k] * psi[k ^ self.xm]).re)
            .sum()
    }

    pub(crate) fn apply_into(&self, psi: &[Complex64], out: &mut [Complex64]) {
        for (k, o) in out.iter_mut().enumerate() {
            *o = self.coef[k] * psi[k ^ self.xm];
        }
    }

    /// `ψ ← exp(i·angle·P)ψ`.
    pub(crate) fn rotate(&self, psi: &mut [Complex64], angle: f64, scratch: &mut [Complex64]) {
        if angle == 0.0 {
            return;
        }
        let (s, c) = angle.sin_cos();
        let is = Complex64::new(0.0, s);
        self.apply_into(psi, scratch);
        for (a, b) in psi.iter_mut().zip(scratch.iter()) {
            *a = *a * c + is * b;
        }
    }
}

/// Work buffers and channels for one measurement update.
pub(crate) struct Measured {
    channels: Vec<MaskedPauli>,
    applied: Vec<Vec<Complex64>>,
    pub(crate) means: Vec<f64>,
    pub(crate) noise: Vec<f64>,
}

impl Measured {
    pub(crate) fn new(ops: &[PauliOperator]) -> Self {
        let dim = 1usize << ops[0].n();
        Measured {
            channels: ops.iter().map(MaskedPauli::new).collect(),
            applied: vec![vec![Complex64::new(0.0, 0.0); dim]; ops.len()],
            means: vec![0.0; ops.len()],
            noise: vec![0.0; ops.len()],
        }
    }

    /// One Euler–Maruyama step of `dψ = Σ_j[−κ/2 (g_j−m_j)² dt + √κ (g_j−m_j) dW_j]ψ`
    /// followed by renormalization. Fills `means` with the pre-step expectations and
    /// `noise` with the Wiener increments; returns the squared norm before renormalizing.
    pub(crate) fn step<R: Rng + ?Sized>(&mut self, psi: &mut [Complex64], kappa: f64, h: f64, rng: &mut R) -> Result<f64> {
        let sh = h.sqrt();
        for dw in self.noise.iter_mut() {
            let z: f64 = rng.sample(StandardNormal);
            *dw = z * sh;
        }
        self.step_with_noise(psi, kappa, h)
    }

    /// The same update with the increments already stored in `noise`.
    pub(crate) fn step_with_noise(&mut self, psi: &mut [Complex64], kappa: f64, h: f64) -> Result<f64> {
        let sk = kappa.sqrt();
        let mut a = 0.0;
        for (j, ch) in self.channels.iter().enumerate() {
            ch.apply_into(psi, &mut self.applied[j]);
            let m = ch.expect(psi);
            self.means[j] = m;
            a += -0.5 * kappa * (1.0 + m * m) * h - sk * m * self.noise[j];
        }
        for x in psi.iter_mut() {
            *x *= 1.0 + a;
        }
        for (j, gp) in self.applied.iter().enumerate() {
            let b = kappa * self.means[j] * h + sk * self.noise[j];
            for (x, y) in psi.iter_mut().zip(gp) {
                *x += b * y;
            }
        }
        let n2: f64 = psi.iter().map(|x| x.norm_sqr()).sum();
        if !(n2 > COLLAPSE_NORM_SQR) || !n2.is_finite() {
            return Err(Error::NormCollapse(n2.sqrt()));
        }
        let inv = 1.0 / n2.sqrt();
        for x in psi.iter_mut() {
            *x *= inv;
        }
        Ok(n2)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SseOptions {
    /// Keep the windowed current of every channel.
    pub record_currents: bool,
    /// Observables whose frame expectations are sampled at evenly spaced times of the loop.
    #[serde(skip)]
    pub observables: Vec<PauliOperator>,
    /// Number of sampling intervals over `[0, 2π/ω]` (0 disables sampling).
    pub samples: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SseTrajectory {
    /// Final state in the lab frame.
    pub final_state: StateVector,
    /// `⟨g_j(t)⟩` of the measured generators at the end.
    pub final_expectations: Vec<f64>,
    /// Index of the channel watched by the detector.
    pub watched: usize,
    pub fidelity: f64,
    pub target: Target,
    pub detection: Option<Detection>,
    /// Window averages per channel, present when requested.
    pub currents: Vec<Vec<f64>>,
    /// Window length actually used for the currents.
    pub window: f64,
    /// `(t, ⟨O⟩)` for the requested observables.
    pub samples: Vec<(f64, Vec<f64>)>,
    pub dt: f64,
    pub steps: usize,
    /// Largest `|‖ψ‖² − 1|` seen before renormalization.
    pub max_norm_drift: f64,
}

enum Stage {
    Loop,
    Correcting { path: CorrectionPath, start: f64 },
}

struct Frame<'a> {
    h: MaskedPauli,
    x: MaskedPauli,
    config: &'a ContinuousRunConfig,
}

impl Frame<'_> {
    fn angles(&self, stage: &Stage, t: f64) -> FrameAngles {
        match stage {
            Stage::Loop => self.config.path.angles(self.config.omega * t),
            Stage::Correcting { path, start } => path.angles(self.config.omega * (t - start)),
        }
    }

    /// `ψ̃ ← V†(b)V(a)ψ̃`.
    fn advance(&self, psi: &mut [Complex64], a: FrameAngles, b: FrameAngles, scratch: &mut [Complex64]) {
        self.x.rotate(psi, a.x, scratch);
        self.h.rotate(psi, a.h - b.h, scratch);
        self.x.rotate(psi, -b.x, scratch);
    }
}

fn run_once<R: Rng + ?Sized>(config: &ContinuousRunConfig, opts: &SseOptions, dt: f64, rng: &mut R) -> Result<SseTrajectory> {
    let path = &config.path;
    let (gens, watched) = config.measured_generators()?;
    let psi_bar = path.code().logical_basis_state(config.initial_logical)?;
    let mut psi: Vec<Complex64> = psi_bar.amplitudes().to_vec();
    let mut scratch = psi.clone();
    let mut meas = Measured::new(&gens);
    let frame = Frame {
        h: MaskedPauli::new(path.h()),
        x: MaskedPauli::new(path.x()),
        config,
    };
    let observables: Vec<MaskedPauli> = opts.observables.iter().map(MaskedPauli::new).collect();
    let loop_time = config.total_time();

    let window_steps = ((config.detector.kappa_window / (config.kappa * dt)).round() as usize).max(1);
    let window = window_steps as f64 * dt;
    let mut acc = vec![0.0; gens.len()];
    let mut in_window = 0;
    let mut currents = vec![Vec::new(); if opts.record_currents { gens.len() } else { 0 }];
    let mut cusum = if config.detector.enabled {
        Some(Cusum::new(config.kappa, window, config.detector.threshold)?)
    } else {
        None
    };
    let mut detection = None;

    let sample_every = if opts.samples > 0 {
        ((loop_time / (opts.samples as f64 * dt)).round() as usize).max(1)
    } else {
        usize::MAX
    };
    let mut samples = Vec::new();
    if opts.samples > 0 {
        samples.push((0.0, observables.iter().map(|o| o.expect(&psi)).collect()));
    }

    let mut stage = Stage::Loop;
    let mut t_end = loop_time;
    let mut t = 0.0;
    let mut steps = 0;
    let mut drift: f64 = 0.0;
    let noise_scale = 0.5 / config.kappa.sqrt();
    while t_end - t > 1e-12 * dt {
        let h = dt.min(t_end - t);
        let n2 = meas.step(&mut psi, config.kappa, h, rng)?;
        drift = drift.max((n2 - 1.0).abs());
        let a = frame.angles(&stage, t);
        let t_next = t + h;
        let b = frame.angles(&stage, t_next);
        frame.advance(&mut psi, a, b, &mut scratch);
        t = t_next;
        steps += 1;

        for (j, s) in acc.iter_mut().enumerate() {
            *s += meas.means[j] * h + meas.noise[j] * noise_scale;
        }
        in_window += 1;
        if in_window == window_steps {
            for (j, s) in acc.iter_mut().enumerate() {
                if opts.record_currents {
                    currents[j].push(*s / window);
                }
                if j == watched {
                    if let Some(d) = cusum.as_mut().and_then(|c| c.push(*s / window)) {
                        detection = Some(d);
                        cusum = None;
                        if let (Some(target), Stage::Loop) = (config.correction, &stage) {
                            let zeta = (config.omega * t).min(2.0 * std::f64::consts::PI);
                            let cp = path.correction_path(zeta, target)?;
                            t_end = t + cp.final_angle / config.omega;
                            stage = Stage::Correcting { path: cp, start: t };
                        }
                    }
                }
                *s = 0.0;
            }
            in_window = 0;
        }
        if steps % sample_every == 0 && t <= loop_time + 1e-9 * dt {
            samples.push((t, observables.iter().map(|o| o.expect(&psi)).collect()));
        }
    }

    let final_expectations = meas.channels.iter().map(|c| c.expect(&psi)).collect();
    let last = frame.angles(&stage, t);
    frame.x.rotate(&mut psi, last.x, &mut scratch);
    frame.h.rotate(&mut psi, last.h, &mut scratch);
    let final_state = StateVector::from_amplitudes(psi)?;
    let (target, want) = match &stage {
        Stage::Loop => (Target::CodeSpace, path.gate(&psi_bar)?),
        Stage::Correcting { path: cp, .. } => (cp.target, cp.target_state(&psi_bar)?),
    };
    Ok(SseTrajectory {
        fidelity: fidelity(&final_state, &want)?,
        final_state,
        final_expectations,
        watched,
        target,
        detection,
        currents,
        window,
        samples,
        dt,
        steps,
        max_norm_drift: drift,
    })
}

/// One trajectory over the loop (plus the correction path if the detector fires).
/// A norm collapse triggers a single retry at half the step.
pub fn integrate_sse<R: Rng + Clone>(config: &ContinuousRunConfig, opts: &SseOptions, rng: &mut R) -> Result<SseTrajectory> {
    config.validate()?;
    let saved = rng.clone();
    match run_once(config, opts, config.dt, rng) {
        Err(Error::NormCollapse(_)) => {
            *rng = saved;
            run_once(config, opts, 0.5 * config.dt, rng)
        }
        other => other,
    }
}

/// All trajectories, each on its own random stream, in index order.
pub fn run_sse_ensemble(config: &ContinuousRunConfig, opts: &SseOptions) -> Result<Vec<SseTrajectory>> {
    config.validate()?;
    (0..config.trajectories as u64)
        .into_par_iter()
        .map(|i| integrate_sse(config, opts, &mut stream_rng(config.master_seed, i)))
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SseSummary {
    pub trajectories: usize,
    /// Ensemble mean of the watched generator's expectation at the end.
    pub mean_g: f64,
    pub se_g: f64,
    /// `(1 − mean_g)/2`.
    pub p_jump: f64,
    pub se_p_jump: f64,
    pub ci95: f64,
    pub mean_fidelity: f64,
    pub se_fidelity: f64,
    pub detections: usize,
}

pub fn summarize_sse(records: &[SseTrajectory]) -> SseSummary {
    let g: Vec<f64> = records.iter().map(|r| r.final_expectations[r.watched]).collect();
    let f: Vec<f64> = records.iter().map(|r| r.fidelity).collect();
    let (mean_g, se_g) = mean_and_se(&g);
    let (mean_fidelity, se_fidelity) = mean_and_se(&f);
    SseSummary {
        trajectories: records.len(),
        mean_g,
        se_g,
        p_jump: (1.0 - mean_g) / 2.0,
        se_p_jump: se_g / 2.0,
        ci95: normal_quantile(0.975) * se_g / 2.0,
        mean_fidelity,
        se_fidelity,
        detections: records.iter().filter(|r| r.detection.is_some()).count(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codes::builtin_code;
    use crate::holonomy::HolonomicPath;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn config(omega: f64) -> ContinuousRunConfig {
        let path = HolonomicPath::new(
            builtin_code("bitflip3").unwrap(),
            "XXX".parse().unwrap(),
            "XIZ".parse().unwrap(),
            PI / 2.0,
        )
        .unwrap();
        ContinuousRunConfig::new(path, 1.0, omega)
    }

    /// Pre-renormalization drift averaged exactly over the Wiener increment with
    /// three-point Gauss–Hermite nodes (the squared norm is quartic in dW).
    #[test]
    fn mean_norm_drift_is_second_order() {
        let z: PauliOperator = "Z".parse().unwrap();
        let mut meas = Measured::new(std::slice::from_ref(&z));
        let kappa = 2.0;
        let mean_drift = |meas: &mut Measured, alpha: f64, h: f64| {
            let nodes = [(-(3.0 * h).sqrt(), 1.0 / 6.0), (0.0, 2.0 / 3.0), ((3.0 * h).sqrt(), 1.0 / 6.0)];
            nodes
                .iter()
                .map(|&(u, w)| {
                    let mut psi = vec![Complex64::new(alpha.cos(), 0.0), Complex64::new(alpha.sin(), 0.0)];
                    meas.noise[0] = u;
                    w * (meas.step_with_noise(&mut psi, kappa, h).unwrap() - 1.0)
                })
                .sum::<f64>()
        };
        for alpha in [PI / 4.0, 0.3, 0.1] {
            let m = (2.0 * alpha).cos();
            for h in [1e-3, 1e-4] {
                let want = (kappa * h).powi(2) * ((1.0 + m * m).powi(2) / 4.0 - m.powi(4));
                let got = mean_drift(&mut meas, alpha, h);
                assert!((got - want).abs() < 1e-12 * (kappa * h), "α={alpha} h={h}: {got} vs {want}");
            }
            let ratio = mean_drift(&mut meas, alpha, 1e-3) / mean_drift(&mut meas, alpha, 1e-4);
            assert!((ratio - 100.0).abs() < 1e-3, "{ratio}");
        }
    }

    #[test]
    fn masked_pauli_matches_dense_application() {
        for s in ["XIZ", "YZX", "IIZ", "-iXYI"] {
            let p: PauliOperator = s.parse().unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(3);
            let amps: Vec<Complex64> = (0..8)
                .map(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
                .collect();
            let psi = StateVector::from_amplitudes(amps).unwrap();
            let mut want = psi.clone();
            want.apply_pauli(&p).unwrap();
            let mut got = vec![Complex64::new(0.0, 0.0); 8];
            MaskedPauli::new(&p).apply_into(psi.amplitudes(), &mut got);
            for (a, b) in got.iter().zip(want.amplitudes()) {
                assert!((a - b).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn noise_free_eigenstate_is_stationary() {
        let gens: Vec<PauliOperator> = vec!["ZZI".parse().unwrap()];
        let mut m = Measured::new(&gens);
        let mut psi = StateVector::basis(3, 0).amplitudes().to_vec();

        for _ in 0..100 {
            m.step_with_noise(&mut psi, 1.0, 1e-3).unwrap();
        }
        assert!((psi[0].norm() - 1.0).abs() < 1e-12);
        assert!((m.means[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn fast_measurement_tracks_the_gate() {
        let mut c = config(0.002);
        c.dt = 1e-2;
        let r = integrate_sse(&c, &SseOptions::default(), &mut stream_rng(5, 0)).unwrap();
        assert!(r.max_norm_drift < 1e-2);
        assert!((r.final_state.norm() - 1.0).abs() < 1e-12);
        assert!(r.fidelity > 0.0 && r.fidelity <= 1.0);
        assert_eq!(r.steps, (c.total_time() / c.dt - 1e-9).ceil() as usize);
    }

    #[test]
    fn currents_have_expected_window_count() {
        let mut c = config(0.05);
        c.dt = 1e-2;
        let opts = SseOptions {
            record_currents: true,
            ..SseOptions::default()
        };
        let r = integrate_sse(&c, &opts, &mut stream_rng(1, 2)).unwrap();
        assert_eq!(r.currents.len(), 2);
        assert_eq!(r.currents[0].len(), (c.total_time() / r.window).floor() as usize);
    }

    #[test]
    fn ensemble_is_deterministic() {
        let mut c = config(0.05);
        c.dt = 1e-2;
        c.trajectories = 8;
        c.master_seed = 77;
        let a = run_sse_ensemble(&c, &SseOptions::default()).unwrap();
        let b = run_sse_ensemble(&c, &SseOptions::default()).unwrap();
        assert_eq!(a, b);
    }
}
