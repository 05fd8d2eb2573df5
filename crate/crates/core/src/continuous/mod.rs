//! Continuous weak measurement of the rotating generators: stochastic
//! trajectories, deterministic moment and master equations, the jump
//! detector and the single-qubit diffusion checks.

pub mod detector;
pub mod fokker_planck;
pub mod lindblad;
pub mod martingale;
pub mod moments;
mod ode;
pub mod sse;
pub mod symmetry;

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::holonomy::{HolonomicPath, Target};
use crate::pauli::PauliOperator;
use crate::qecc::transform_generators;

pub use detector::{detect_jump, Cusum, Detection};
pub use moments::{
    confinement_probability, integrate_moment_ode, jump_probability_ode, theta_derivative_after_loop, MomentVector,
};
pub use sse::{integrate_sse, run_sse_ensemble, summarize_sse, SseOptions, SseSummary, SseTrajectory};
pub use symmetry::lemma2_symmetry_check;

/// Which generating set is weakly measured.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GeneratorChoice {
    /// The code's generators as given.
    Code,
    /// The equivalent set in which a single generator anticommutes with X.
    SingleAnticommuting,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetectorConfig {
    pub enabled: bool,
    /// Window length in units of 1/κ.
    pub kappa_window: f64,
    /// CUSUM threshold h.
    pub threshold: f64,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        DetectorConfig {
            enabled: false,
            kappa_window: 0.5,
            threshold: 12.0,
        }
    }
}

#[derive(Clone, Debug)]
pub struct ContinuousRunConfig {
    pub path: HolonomicPath,
    /// Measurement strength (1/time).
    pub kappa: f64,
    /// Rotation rate dφ/dt.
    pub omega: f64,
    pub dt: f64,
    pub trajectories: usize,
    pub master_seed: u64,
    pub generators: GeneratorChoice,
    pub detector: DetectorConfig,
    /// Correction path to follow once the detector fires.
    pub correction: Option<Target>,
    pub initial_logical: usize,
}

impl ContinuousRunConfig {
    pub fn new(path: HolonomicPath, kappa: f64, omega: f64) -> Self {
        ContinuousRunConfig {
            path,
            kappa,
            omega,
            dt: 1e-3 / kappa,
            trajectories: 1000,
            master_seed: 0,
            generators: GeneratorChoice::SingleAnticommuting,
            detector: DetectorConfig::default(),
            correction: None,
            initial_logical: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.kappa > 0.0 && self.kappa.is_finite()) {
            return Err(Error::InvalidParameter(format!("κ must be positive, got {}", self.kappa)));
        }
        if !(self.omega > 0.0 && self.omega.is_finite()) {
            return Err(Error::InvalidParameter(format!("ω must be positive, got {}", self.omega)));
        }
        if !(self.dt > 0.0 && self.kappa * self.dt <= 1e-2 + 1e-15) {
            return Err(Error::InvalidParameter(format!(
                "need 0 < κ·dt ≤ 1e-2, got {}",
                self.kappa * self.dt
            )));
        }
        if self.trajectories == 0 {
            return Err(Error::InvalidParameter("trajectories must be at least 1".into()));
        }
        if self.detector.enabled && !(self.detector.kappa_window > 0.0 && self.detector.threshold > 0.0) {
            return Err(Error::InvalidParameter("detector window and threshold must be positive".into()));
        }
        if self.correction.is_some() && !self.detector.enabled {
            return Err(Error::InvalidParameter("a correction target needs the detector enabled".into()));
        }
        if self.initial_logical >= 1 << self.path.code().k() {
            return Err(Error::InvalidParameter(format!(
                "initial logical index {} out of range",
                self.initial_logical
            )));
        }
        Ok(())
    }

    /// Duration of one loop, `2π/ω`.
    pub fn total_time(&self) -> f64 {
        2.0 * PI / self.omega
    }

    /// Measured generators and the index of the channel watched by the detector.
    pub fn measured_generators(&self) -> Result<(Vec<PauliOperator>, usize)> {
        let gens = self.path.code().generators();
        match self.generators {
            GeneratorChoice::SingleAnticommuting => transform_generators(gens, self.path.x()),
            GeneratorChoice::Code => {
                let idx = gens
                    .iter()
                    .position(|g| g.anticommutes_with(self.path.x()))
                    .ok_or_else(|| Error::InvalidPath("X commutes with every generator".into()))?;
                Ok((gens.to_vec(), idx))
            }
        }
    }
}
