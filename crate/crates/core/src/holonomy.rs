//! Holonomic paths and their closed-form properties.
//!
//! Every frame unitary in this crate has the form `exp(i h H) exp(i x X)` for
//! the path's fixed pair (H, X); only the two angles change along a path.
//! The base path uses `h = θφ/2π, x = φ`. A correction path started after a
//! jump at ζ uses `h = (θ(φ+ζ) − θ̃φ)/2π, x = φ+ζ`, which is the frame of
//! `W(φ)V(ζ)`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::codes::StabilizerCode;
use crate::densesim::{StateVector, UnitaryProgram, UnitaryStep};
use crate::error::{Error, Result};
use crate::pauli::PauliOperator;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrameAngles {
    /// Angle multiplying H.
    pub h: f64,
    /// Angle multiplying X.
    pub x: f64,
}

#[derive(Clone, Debug)]
pub struct HolonomicPath {
    code: StabilizerCode,
    h: PauliOperator,
    x: PauliOperator,
    theta: f64,
}

impl HolonomicPath {
    pub fn new(code: StabilizerCode, h: PauliOperator, x: PauliOperator, theta: f64) -> Result<Self> {
        for op in [&h, &x] {
            if op.n() != code.n() {
                return Err(Error::DimensionMismatch {
                    expected: code.n(),
                    found: op.n(),
                });
            }
            if !op.is_hermitian() {
                return Err(Error::NonHermitian(op.to_string()));
            }
        }
        if !code.generators().iter().any(|g| x.anticommutes_with(g)) {
            return Err(Error::InvalidPath(format!(
                "X = {x} commutes with every generator"
            )));
        }
        if x.commutes_with(&h) {
            return Err(Error::InvalidPath(format!("X = {x} commutes with H = {h}")));
        }
        if let Some(g) = code.generators().iter().find(|g| !h.commutes_with(g)) {
            return Err(Error::InvalidPath(format!(
                "H = {h} anticommutes with generator {g}"
            )));
        }
        if !(theta > -PI && theta <= PI) {
            return Err(Error::InvalidPath(format!("θ = {theta} outside (−π, π]")));
        }
        Ok(HolonomicPath { code, h, x, theta })
    }

    pub fn code(&self) -> &StabilizerCode {
        &self.code
    }

    pub fn h(&self) -> &PauliOperator {
        &self.h
    }

    pub fn x(&self) -> &PauliOperator {
        &self.x
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    /// Frame angles of `V(φ)`.
    pub fn angles(&self, phi: f64) -> FrameAngles {
        FrameAngles {
            h: self.theta * phi / (2.0 * PI),
            x: phi,
        }
    }

    pub fn v(&self, phi: f64) -> UnitaryProgram {
        UnitaryProgram::frame(&self.h, &self.x, self.angles(phi))
    }

    pub fn v_dagger(&self, phi: f64) -> UnitaryProgram {
        UnitaryProgram::frame_inverse(&self.h, &self.x, self.angles(phi))
    }

    /// `G ψ̄ = exp(iθH) ψ̄`.
    pub fn gate(&self, psi: &StateVector) -> Result<StateVector> {
        let mut out = psi.clone();
        out.pauli_rotation(&self.h, self.theta)?;
        Ok(out)
    }

    /// `V(φ) exp(−i(θ/4π) sin 2φ H) ψ̄`.
    pub fn instantaneous_code_state(&self, phi: f64, psi_bar: &StateVector) -> Result<StateVector> {
        let w = self.code.code_space_weight(psi_bar)?;
        if w < 1.0 - 1e-8 {
            return Err(Error::NotInCodeSpace(w));
        }
        let mut out = psi_bar.clone();
        out.pauli_rotation(&self.h, -self.theta / (4.0 * PI) * (2.0 * phi).sin())?;
        out.apply_frame(&self.h, &self.x, self.angles(phi))?;
        Ok(out)
    }

    pub fn small_rotation_overlap(&self, phi: f64, dphi: f64) -> (f64, f64) {
        small_rotation_overlap(self.theta, phi, dphi)
    }

    pub fn error_operator(&self, zeta: f64) -> Result<ErrorOperator> {
        if !(0.0..=2.0 * PI).contains(&zeta) {
            return Err(Error::InvalidParameter(format!("ζ = {zeta} outside [0, 2π]")));
        }
        let chi = chi(self.theta, zeta);
        let program = self
            .v_dagger(zeta)
            .then(UnitaryProgram::new(vec![
                UnitaryStep::Pauli(self.x.clone()),
                UnitaryStep::Rotate {
                    op: self.h.clone(),
                    angle: chi,
                },
            ]))
            .then(self.v(zeta));
        Ok(ErrorOperator {
            zeta,
            chi,
            theta_err: theta_err(self.theta, zeta),
            program,
        })
    }

    pub fn correction_path(&self, zeta: f64, target: Target) -> Result<CorrectionPath> {
        if !(0.0..=2.0 * PI).contains(&zeta) {
            return Err(Error::InvalidParameter(format!("ζ = {zeta} outside [0, 2π]")));
        }
        Ok(CorrectionPath {
            base: self.clone(),
            zeta,
            theta_tilde: theta_tilde(self.theta, zeta, target),
            target,
            final_angle: target.final_angle(zeta),
        })
    }
}

/// `E(ζ) = V(ζ) exp(iχH) X V†(ζ)` with its angles.
#[derive(Clone, Debug)]
pub struct ErrorOperator {
    pub zeta: f64,
    pub chi: f64,
    pub theta_err: f64,
    pub program: UnitaryProgram,
}

impl ErrorOperator {
    pub fn apply(&self, psi: &StateVector) -> Result<StateVector> {
        let mut out = psi.clone();
        self.program.apply(&mut out)?;
        Ok(out)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Target {
    CodeSpace,
    ErrorSpace,
}

impl Target {
    pub fn final_angle(self, zeta: f64) -> f64 {
        match self {
            Target::CodeSpace => 3.5 * PI - zeta,
            Target::ErrorSpace => 4.0 * PI - zeta,
        }
    }
}

#[derive(Clone, Debug)]
pub struct CorrectionPath {
    pub base: HolonomicPath,
    pub zeta: f64,
    pub theta_tilde: f64,
    pub target: Target,
    pub final_angle: f64,
}

impl CorrectionPath {
    /// Frame angles of `W(φ)V(ζ) = exp(−iθ̃φ/2π H) V(φ+ζ)`.
    pub fn angles(&self, phi: f64) -> FrameAngles {
        let theta = self.base.theta;
        FrameAngles {
            h: (theta * (phi + self.zeta) - self.theta_tilde * phi) / (2.0 * PI),
            x: phi + self.zeta,
        }
    }

    /// `W(φ) = exp(−iθ̃φ/2π H) V(φ+ζ) V†(ζ)`.
    pub fn w(&self, phi: f64) -> UnitaryProgram {
        let b = &self.base;
        b.v_dagger(self.zeta)
            .then(UnitaryProgram::frame(b.h(), b.x(), self.angles(phi)))
    }

    /// `W(final_angle)` in the simplified closed form of the correction theorem.
    pub fn final_unitary_closed_form(&self) -> UnitaryProgram {
        let b = &self.base;
        let (theta, tt, zeta) = (b.theta, self.theta_tilde, self.zeta);
        let tail = match self.target {
            Target::CodeSpace => UnitaryProgram::new(vec![
                UnitaryStep::Pauli(b.x.clone()),
                UnitaryStep::Rotate {
                    op: b.h.clone(),
                    angle: 1.75 * (theta - tt) + tt * zeta / (2.0 * PI),
                },
                UnitaryStep::Phase(Complex64::new(0.0, -1.0)),
            ]),
            Target::ErrorSpace => UnitaryProgram::new(vec![
                UnitaryStep::Rotate {
                    op: b.h.clone(),
                    angle: 2.0 * theta,
                },
                UnitaryStep::Rotate {
                    op: b.h.clone(),
                    angle: -tt * (4.0 * PI - zeta) / (2.0 * PI),
                },
            ]),
        };
        b.v_dagger(zeta).then(tail)
    }

    /// The state the correction should deliver: `G ψ̄` or `X G ψ̄`.
    pub fn target_state(&self, psi_bar: &StateVector) -> Result<StateVector> {
        let mut out = self.base.gate(psi_bar)?;
        if self.target == Target::ErrorSpace {
            out.apply_pauli(&self.base.x)?;
        }
        Ok(out)
    }
}

/// `(c_φ, ξ_φ)` with `P₀V†(φ)V(φ−δφ)P₀ = c e^{−iξH} P₀`, exact trigonometric form.
pub fn small_rotation_overlap(theta: f64, phi: f64, dphi: f64) -> (f64, f64) {
    let a = theta * dphi / (2.0 * PI);
    let (sa, ca) = a.sin_cos();
    let cd = dphi.cos();
    let c2p = (2.0 * phi - dphi).cos();
    let c = ((ca * cd).powi(2) + (sa * c2p).powi(2)).sqrt();
    let xi = (sa * c2p / (ca * cd)).atan();
    (c, xi)
}

/// Closed-form loop survival `exp[−(δφ/2π)(θ²/2 + 4π²)]`.
pub fn discrete_no_jump_probability(theta: f64, dphi: f64) -> f64 {
    (-(dphi / (2.0 * PI)) * (theta * theta / 2.0 + 4.0 * PI * PI)).exp()
}

/// Measurement angles `δφ, 2δφ, …, 2π` of one loop (the last one clipped to 2π).
pub fn loop_angles(dphi: f64) -> Vec<f64> {
    let steps = (2.0 * PI / dphi - 1e-9).ceil() as usize;
    (1..=steps).map(|l| (l as f64 * dphi).min(2.0 * PI)).collect()
}

/// Exact per-step survival product `Π c²` over one loop.
pub fn exact_no_jump_probability(theta: f64, dphi: f64) -> f64 {
    let mut prev = 0.0;
    let mut p = 1.0;
    for phi in loop_angles(dphi) {
        let c = small_rotation_overlap(theta, phi, phi - prev).0;
        p *= c * c;
        prev = phi;
    }
    p
}

/// Exact law of the first jump: entry l−1 is the probability that the first
/// jump happens at the l-th measurement; the final entry is the no-jump probability.
pub fn first_jump_distribution(theta: f64, dphi: f64) -> Vec<f64> {
    let mut out = Vec::new();
    let mut prev = 0.0;
    let mut survive = 1.0;
    for phi in loop_angles(dphi) {
        let c = small_rotation_overlap(theta, phi, phi - prev).0;
        out.push(survive * (1.0 - c * c));
        survive *= c * c;
        prev = phi;
    }
    out.push(survive);
    out
}

/// `Σ_l ξ_{lδφ}` over `l = 1..⌈2π/δφ⌉`.
pub fn loop_phase_sum(theta: f64, dphi: f64) -> f64 {
    loop_angles(dphi)
        .into_iter()
        .map(|phi| small_rotation_overlap(theta, phi, dphi).1)
        .sum()
}

/// `χ(ζ) = arctan((θ/2π) sin 2ζ)`.
pub fn chi(theta: f64, zeta: f64) -> f64 {
    (theta / (2.0 * PI) * (2.0 * zeta).sin()).atan()
}

/// `θ_err(ζ) = (θ/4π) sin 2ζ + χ(ζ)`.
pub fn theta_err(theta: f64, zeta: f64) -> f64 {
    theta / (4.0 * PI) * (2.0 * zeta).sin() + chi(theta, zeta)
}

/// Modified rotation angle θ̃ of the correction path.
pub fn theta_tilde(theta: f64, zeta: f64, target: Target) -> f64 {
    let s = (2.0 * zeta).sin();
    let te = theta_err(theta, zeta);
    match target {
        Target::CodeSpace => (3.0 * PI * theta - 4.0 * PI * te - theta * s) / (7.0 * PI - 2.0 * zeta - s),
        Target::ErrorSpace => {
            (12.0 * PI * theta + 4.0 * PI * te + theta * s) / (8.0 * PI - 2.0 * zeta + s)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codes::builtin_code;
    use crate::densesim::fidelity;

    fn bitflip_path(theta: f64) -> HolonomicPath {
        HolonomicPath::new(
            builtin_code("bitflip3").unwrap(),
            "XXX".parse().unwrap(),
            "XIZ".parse().unwrap(),
            theta,
        )
        .unwrap()
    }

    #[test]
    fn path_validation() {
        let code = builtin_code("bitflip3").unwrap();
        let p = |s: &str| s.parse::<PauliOperator>().unwrap();
        assert!(HolonomicPath::new(code.clone(), p("XXX"), p("ZII"), 0.1).is_err());
        assert!(HolonomicPath::new(code.clone(), p("XXX"), p("IIZ"), 0.1).is_err());
        assert!(HolonomicPath::new(code.clone(), p("XII"), p("XIZ"), 0.1).is_err());
        assert!(HolonomicPath::new(code.clone(), p("XXX"), p("XIZ"), 4.0).is_err());
        assert!(HolonomicPath::new(code, p("XXX"), p("XIZ"), PI).is_ok());
    }

    #[test]
    fn overlap_trivial_cases() {
        assert_eq!(small_rotation_overlap(0.5, 1.0, 0.0), (1.0, 0.0));
        let d = 1e-3;
        let (_, xi) = small_rotation_overlap(PI / 6.0, PI / 4.0, d);
        assert!(xi.abs() < d * d);
    }

    #[test]
    fn no_jump_closed_form_values() {
        assert!((discrete_no_jump_probability(PI / 6.0, 2.0 * PI / 100.0) - 0.6729).abs() < 1e-4);
        let v = discrete_no_jump_probability(0.0, 2.0 * PI / 1000.0);
        assert!((v - (-4.0 * PI * PI / 1000.0).exp()).abs() < 1e-15);
        assert!((v - 0.9613).abs() < 1e-4);
        assert!((discrete_no_jump_probability(1.0, 1e-12) - 1.0).abs() < 1e-10);
    }

    #[test]
    fn phase_sums_vanish() {
        let dphi = 2.0 * PI / 200.0;
        assert!(loop_phase_sum(PI / 6.0, dphi).abs() < 1e-9 * 200.0);
        assert_eq!(loop_phase_sum(0.0, dphi), 0.0);
        let half: f64 = loop_angles(dphi)
            .into_iter()
            .filter(|&p| p <= PI + 1e-12)
            .map(|p| small_rotation_overlap(PI / 6.0, p, dphi).1)
            .sum();
        assert!(half.abs() < 1e-9 * 100.0);
    }

    #[test]
    fn first_jump_law_sums_to_one() {
        let d = first_jump_distribution(PI / 6.0, 2.0 * PI / 64.0);
        assert_eq!(d.len(), 65);
        assert!((d.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let exact = exact_no_jump_probability(PI / 6.0, 2.0 * PI / 400.0);
        let closed = discrete_no_jump_probability(PI / 6.0, 2.0 * PI / 400.0);
        assert!((exact - closed).abs() < 1e-4);
    }

    #[test]
    fn error_angles() {
        let op = bitflip_path(PI / 6.0).error_operator(PI / 2.0).unwrap();
        assert!(op.chi.abs() < 1e-15 && op.theta_err.abs() < 1e-15);
        let te = theta_err(PI / 6.0, PI / 4.0);
        assert!((te - (1.0 / 24.0 + (1.0f64 / 12.0).atan())).abs() < 1e-14);
        assert!((te - 0.12481).abs() < 1e-5);
        assert!(bitflip_path(0.1).error_operator(7.0).is_err());
    }

    #[test]
    fn correction_angles_at_zero() {
        let th = PI / 6.0;
        assert!((theta_tilde(th, 0.0, Target::CodeSpace) - 3.0 * th / 7.0).abs() < 1e-15);
        assert!((theta_tilde(th, 0.0, Target::ErrorSpace) - 1.5 * th).abs() < 1e-15);
        let cp = bitflip_path(th).correction_path(0.4, Target::CodeSpace).unwrap();
        assert!((cp.final_angle - (3.5 * PI - 0.4)).abs() < 1e-15);
    }

    #[test]
    fn w_starts_at_identity() {
        let cp = bitflip_path(PI / 6.0).correction_path(1.1, Target::ErrorSpace).unwrap();
        let w0 = cp.w(0.0).to_dense(3).unwrap();
        assert!((w0 - nalgebra::DMatrix::<Complex64>::identity(8, 8)).norm() < 1e-14);
    }

    #[test]
    fn instantaneous_state_endpoints() {
        let path = bitflip_path(PI / 6.0);
        let psi = StateVector::zero(3);
        let s0 = path.instantaneous_code_state(0.0, &psi).unwrap();
        assert!((fidelity(&s0, &psi).unwrap() - 1.0).abs() < 1e-14);
        let s2 = path.instantaneous_code_state(2.0 * PI, &psi).unwrap();
        assert!((s2.inner(&path.gate(&psi).unwrap()) - Complex64::new(1.0, 0.0)).norm() < 1e-12);
        let bad = StateVector::basis(3, 1);
        assert!(matches!(
            path.instantaneous_code_state(0.3, &bad),
            Err(Error::NotInCodeSpace(_))
        ));
    }
}
