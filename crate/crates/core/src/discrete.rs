//! Discrete protocol: a loop of rotated-projector measurements, with optional
//! path correction after a jump.

use std::f64::consts::PI;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::densesim::{
    measure_projector, measure_projector_forced, Measurement, ProgramStep, Projector, ProjectorProgram,
    StateVector,
};
use crate::error::{Error, Result};
use crate::holonomy::{loop_angles, FrameAngles, HolonomicPath, Target};
use crate::pauli::PauliOperator;
use crate::qecc::transform_generators;
use crate::rng::stream_rng;
use crate::stats::wald_ci95;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CorrectionPolicy {
    None,
    CorrectToCode,
    CorrectToError,
}

impl CorrectionPolicy {
    pub fn target(self) -> Option<Target> {
        match self {
            CorrectionPolicy::None => None,
            CorrectionPolicy::CorrectToCode => Some(Target::CodeSpace),
            CorrectionPolicy::CorrectToError => Some(Target::ErrorSpace),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            CorrectionPolicy::None => "none",
            CorrectionPolicy::CorrectToCode => "correct-to-code",
            CorrectionPolicy::CorrectToError => "correct-to-error",
        }
    }
}

/// Which generators are measured in the rotated frame.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MeasurementMode {
    /// Every generator is conjugated by the frame.
    Full,
    /// Only the single generator that anticommutes with X is rotated.
    SingleGenerator,
}

#[derive(Clone, Debug)]
pub struct DiscreteRunConfig {
    pub path: HolonomicPath,
    pub dphi: f64,
    pub policy: CorrectionPolicy,
    pub trajectories: usize,
    pub master_seed: u64,
    /// Final fidelity at or above this counts as fault free.
    pub success_threshold: f64,
    /// Logical basis index of the initial code state.
    pub initial_logical: usize,
    pub mode: MeasurementMode,
}

impl DiscreteRunConfig {
    pub fn new(path: HolonomicPath, dphi: f64) -> Self {
        DiscreteRunConfig {
            path,
            dphi,
            policy: CorrectionPolicy::None,
            trajectories: 2000,
            master_seed: 0,
            success_threshold: 0.99,
            initial_logical: 0,
            mode: MeasurementMode::Full,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dphi > 0.0 && self.dphi < PI / 4.0) {
            return Err(Error::InvalidParameter(format!("δφ = {} outside (0, π/4)", self.dphi)));
        }
        if self.trajectories == 0 {
            return Err(Error::InvalidParameter("trajectories must be at least 1".into()));
        }
        if !(self.success_threshold > 0.0 && self.success_threshold <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "success threshold {} outside (0, 1]",
                self.success_threshold
            )));
        }
        if self.initial_logical >= 1 << self.path.code().k() {
            return Err(Error::InvalidParameter(format!(
                "initial logical index {} out of range",
                self.initial_logical
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JumpEvent {
    /// 1-based index of the measurement within its stage.
    pub step: usize,
    /// Path angle at which the jump was recorded.
    pub angle: f64,
    /// True when the jump happened while following a correction path.
    pub during_correction: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub jump_events: Vec<JumpEvent>,
    pub final_fidelity: f64,
    pub fault_free: bool,
    pub steps: usize,
    /// Target space the final state was compared against.
    pub target: Target,
    /// Product of the Born probabilities of the realized outcomes.
    pub path_probability: f64,
}

/// `F P₀' F†` restricted to the generators that actually move, times the fixed ones.
struct FrameProjector<'a> {
    rotated: &'a [PauliOperator],
    fixed: &'a [PauliOperator],
    h: &'a PauliOperator,
    x: &'a PauliOperator,
    angles: FrameAngles,
}

impl Projector for FrameProjector<'_> {
    fn project(&self, psi: &mut StateVector) -> Result<()> {
        for g in self.fixed {
            psi.project_plus(g)?;
        }
        psi.apply_frame_inverse(self.h, self.x, self.angles)?;
        for g in self.rotated {
            psi.project_plus(g)?;
        }
        psi.apply_frame(self.h, self.x, self.angles)
    }
}

struct Generators {
    rotated: Vec<PauliOperator>,
    fixed: Vec<PauliOperator>,
}

fn generators_for(path: &HolonomicPath, mode: MeasurementMode) -> Result<Generators> {
    match mode {
        MeasurementMode::Full => Ok(Generators {
            rotated: path.code().generators().to_vec(),
            fixed: Vec::new(),
        }),
        MeasurementMode::SingleGenerator => {
            let (gens, idx) = transform_generators(path.code().generators(), path.x())?;
            let mut fixed = gens.clone();
            let single = fixed.remove(idx);
            Ok(Generators {
                rotated: vec![single],
                fixed,
            })
        }
    }
}

/// Projector onto the rotated code space at φ, rotating only the single
/// generator that anticommutes with X.
pub fn single_generator_projector(path: &HolonomicPath, phi: f64) -> Result<ProjectorProgram> {
    let gens = generators_for(path, MeasurementMode::SingleGenerator)?;
    let f = path.angles(phi);
    let mut prog = ProjectorProgram::new(gens.fixed.into_iter().map(ProgramStep::ProjectPlus).collect());
    for step in ProjectorProgram::rotated(&gens.rotated, path.h(), path.x(), f).steps() {
        prog.push(step.clone());
    }
    Ok(prog)
}

/// The fully rotated projector `V(φ)P₀V†(φ)`.
pub fn rotated_projector(path: &HolonomicPath, phi: f64) -> ProjectorProgram {
    ProjectorProgram::rotated(path.code().generators(), path.h(), path.x(), path.angles(phi))
}

enum Driver<'a, R: Rng + ?Sized> {
    Sampled(&'a mut R),
    /// Postselect the no-jump outcome everywhere except a jump at the given base-loop step.
    Forced(Option<usize>),
}

impl<R: Rng + ?Sized> Driver<'_, R> {
    fn measure(
        &mut self,
        p: &FrameProjector<'_>,
        psi: &mut StateVector,
        stay: u8,
        base_step: Option<usize>,
    ) -> Result<Measurement> {
        match self {
            Driver::Sampled(rng) => measure_projector(p, psi, *rng),
            Driver::Forced(jump) => {
                let outcome = if base_step.is_some() && base_step == *jump { 1 - stay } else { stay };
                measure_projector_forced(p, psi, outcome)
            }
        }
    }
}

/// Measurement angles `δφ, 2δφ, …` up to `end`, the last one clipped.
fn stage_angles(dphi: f64, end: f64) -> Vec<f64> {
    let steps = (end / dphi - 1e-9).ceil().max(1.0) as usize;
    (1..=steps).map(|l| (l as f64 * dphi).min(end)).collect()
}

fn simulate<R: Rng + ?Sized>(config: &DiscreteRunConfig, mut driver: Driver<'_, R>) -> Result<TrajectoryRecord> {
    config.validate()?;
    let path = &config.path;
    let gens = generators_for(path, config.mode)?;
    let psi_bar = path.code().logical_basis_state(config.initial_logical)?;
    let mut psi = psi_bar.clone();
    let mut events = Vec::new();
    let mut steps = 0;
    let mut prob = 1.0;
    let mut correction = None;
    // Outcome that keeps the state where it is: 1 while in the code space, 0 after a jump.
    let mut stay = 1u8;

    for (l, &phi) in loop_angles(config.dphi).iter().enumerate() {
        let proj = FrameProjector {
            rotated: &gens.rotated,
            fixed: &gens.fixed,
            h: path.h(),
            x: path.x(),
            angles: path.angles(phi),
        };
        let m = driver.measure(&proj, &mut psi, stay, Some(l + 1))?;
        steps += 1;
        prob *= m.probability;
        if m.outcome != stay {
            events.push(JumpEvent {
                step: l + 1,
                angle: phi,
                during_correction: false,
            });
            stay = 1 - stay;
            if let Some(target) = config.policy.target() {
                correction = Some(path.correction_path(phi, target)?);
                break;
            }
        }
    }

    let target = match &correction {
        None => Target::CodeSpace,
        Some(cp) => {
            // After the jump the state sits in the rotated error space; staying there is outcome 0.
            let mut stay = 0u8;
            for (l, &phi) in stage_angles(config.dphi, cp.final_angle).iter().enumerate() {
                let proj = FrameProjector {
                    rotated: &gens.rotated,
                    fixed: &gens.fixed,
                    h: path.h(),
                    x: path.x(),
                    angles: cp.angles(phi),
                };
                let m = driver.measure(&proj, &mut psi, stay, None)?;
                steps += 1;
                prob *= m.probability;
                if m.outcome != stay {
                    events.push(JumpEvent {
                        step: l + 1,
                        angle: phi,
                        during_correction: true,
                    });
                    stay = 1 - stay;
                }
            }
            cp.target
        }
    };

    let mut want = path.gate(&psi_bar)?;
    if target == Target::ErrorSpace {
        want.apply_pauli(path.x())?;
    }
    let final_fidelity = crate::densesim::fidelity(&psi, &want)?;
    Ok(TrajectoryRecord {
        jump_events: events,
        final_fidelity,
        fault_free: final_fidelity >= config.success_threshold,
        steps,
        target,
        path_probability: prob,
    })
}

/// One sampled trajectory.
pub fn run_discrete_trajectory<R: Rng + ?Sized>(config: &DiscreteRunConfig, rng: &mut R) -> Result<TrajectoryRecord> {
    simulate(config, Driver::Sampled(rng))
}

/// One postselected trajectory: no jumps except a forced one at base-loop step `jump_step` (1-based).
pub fn run_forced_trajectory(config: &DiscreteRunConfig, jump_step: Option<usize>) -> Result<TrajectoryRecord> {
    simulate::<rand_chacha::ChaCha8Rng>(config, Driver::Forced(jump_step))
}

/// Base-loop step whose measurement angle is closest to ζ.
pub fn forced_jump_step(zeta: f64, dphi: f64) -> usize {
    ((zeta / dphi).round() as usize).max(1)
}

/// State after the first `steps` postselected no-jump measurements, or after a forced
/// jump at the last of them.
pub fn postselected_state(path: &HolonomicPath, dphi: f64, steps: usize, jump_last: bool) -> Result<StateVector> {
    let psi_bar = path.code().logical_basis_state(0)?;
    let mut psi = psi_bar;
    let gens = path.code().generators();
    for (l, &phi) in loop_angles(dphi).iter().take(steps).enumerate() {
        let proj = FrameProjector {
            rotated: gens,
            fixed: &[],
            h: path.h(),
            x: path.x(),
            angles: path.angles(phi),
        };
        let outcome = if jump_last && l + 1 == steps { 0 } else { 1 };
        measure_projector_forced(&proj, &mut psi, outcome)?;
    }
    Ok(psi)
}

/// Fidelities of a forced single-jump correction at several step sizes and their
/// polynomial extrapolation to δφ → 0.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ForcedCorrection {
    pub zeta: f64,
    pub target: Target,
    pub dphis: Vec<f64>,
    pub fidelities: Vec<f64>,
    pub extrapolated: f64,
}

/// Lagrange interpolation of `(x_i, y_i)` evaluated at 0.
pub fn extrapolate_to_zero(xs: &[f64], ys: &[f64]) -> f64 {
    let mut total = 0.0;
    for (i, (&xi, &yi)) in xs.iter().zip(ys).enumerate() {
        let mut w = 1.0;
        for (j, &xj) in xs.iter().enumerate() {
            if i != j {
                w *= xj / (xj - xi);
            }
        }
        total += w * yi;
    }
    total
}

/// Forces the first jump at the step nearest ζ, follows the correction path to
/// `target`, and extrapolates the final fidelity over `dphis`.
pub fn forced_correction_fidelity(
    path: &HolonomicPath,
    zeta: f64,
    target: Target,
    dphis: &[f64],
) -> Result<ForcedCorrection> {
    if dphis.is_empty() {
        return Err(Error::InvalidParameter("need at least one step size".into()));
    }
    let policy = match target {
        Target::CodeSpace => CorrectionPolicy::CorrectToCode,
        Target::ErrorSpace => CorrectionPolicy::CorrectToError,
    };
    let fidelities = dphis
        .iter()
        .map(|&dphi| {
            let mut cfg = DiscreteRunConfig::new(path.clone(), dphi);
            cfg.policy = policy;
            Ok(run_forced_trajectory(&cfg, Some(forced_jump_step(zeta, dphi)))?.final_fidelity)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(ForcedCorrection {
        zeta,
        target,
        dphis: dphis.to_vec(),
        extrapolated: extrapolate_to_zero(dphis, &fidelities),
        fidelities,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloSummary {
    pub dphi: f64,
    pub policy: CorrectionPolicy,
    pub trajectories: usize,
    pub fault_free: usize,
    pub p_no_fault: f64,
    pub ci95: f64,
    pub no_jump: usize,
    pub p_no_jump: f64,
    pub mean_final_fidelity: f64,
}

/// Runs every trajectory on its own random stream and collects the records in index order.
pub fn run_ensemble(config: &DiscreteRunConfig) -> Result<Vec<TrajectoryRecord>> {
    config.validate()?;
    (0..config.trajectories as u64)
        .into_par_iter()
        .map(|i| run_discrete_trajectory(config, &mut stream_rng(config.master_seed, i)))
        .collect()
}

pub fn summarize(config: &DiscreteRunConfig, records: &[TrajectoryRecord]) -> MonteCarloSummary {
    let n = records.len();
    let fault_free = records.iter().filter(|r| r.fault_free).count();
    let no_jump = records.iter().filter(|r| r.jump_events.is_empty()).count();
    let p = fault_free as f64 / n as f64;
    MonteCarloSummary {
        dphi: config.dphi,
        policy: config.policy,
        trajectories: n,
        fault_free,
        p_no_fault: p,
        ci95: wald_ci95(p, n),
        no_jump,
        p_no_jump: no_jump as f64 / n as f64,
        mean_final_fidelity: records.iter().map(|r| r.final_fidelity).sum::<f64>() / n as f64,
    }
}

/// Fraction of fault-free trajectories with its Wald 95% half-width.
pub fn monte_carlo_no_fault(config: &DiscreteRunConfig) -> Result<MonteCarloSummary> {
    if config.trajectories < 100 {
        return Err(Error::InvalidParameter(format!(
            "need at least 100 trajectories, got {}",
            config.trajectories
        )));
    }
    let records = run_ensemble(config)?;
    Ok(summarize(config, &records))
}
