//! Deterministic moment equations of the rotating-frame dynamics and the
//! perturbative confinement formula.

use std::f64::consts::PI;

use num_complex::Complex64;
use super::ode::{integrate, OdeOptions};
use crate::error::{Error, Result};

/// `(⟨g⟩, ⟨gX⟩, ⟨gXH⟩)` of the single measured generator that anticommutes with X.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MomentVector {
    pub g: Complex64,
    pub gx: Complex64,
    pub gxh: Complex64,
}

impl MomentVector {
    /// Code-space start: every stabilizer expectation equals 1.
    pub fn code_space() -> Self {
        MomentVector {
            g: Complex64::new(1.0, 0.0),
            gx: Complex64::new(0.0, 0.0),
            gxh: Complex64::new(0.0, 0.0),
        }
    }

    fn to_array(self) -> [Complex64; 3] {
        [self.g, self.gx, self.gxh]
    }

    fn from_slice(x: &[Complex64]) -> Self {
        MomentVector {
            g: x[0],
            gx: x[1],
            gxh: x[2],
        }
    }
}

/// Tolerance of the step-doubling error estimate.
pub const MOMENT_TOL: f64 = 1e-9;

fn rhs(theta: f64, omega: f64, kappa: f64) -> impl FnMut(f64, &[Complex64], &mut [Complex64]) {
    let wx = omega;
    let wh = theta * omega / (2.0 * PI);
    let i = Complex64::new(0.0, 1.0);
    move |t, x, d| {
        let (s, c) = (2.0 * wx * t).sin_cos();
        d[0] = -2.0 * i * wx * x[1] - 2.0 * wh * s * x[2];
        d[1] = -2.0 * i * wx * x[0] - 2.0 * kappa * x[1] - 2.0 * i * wh * c * x[2];
        d[2] = 2.0 * wh * s * x[0] - 2.0 * i * wh * c * x[1] - 2.0 * kappa * x[2];
    }
}

fn check(omega: f64, kappa: f64) -> Result<()> {
    if !(kappa > 0.0) || !(omega >= 0.0) || !omega.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "need κ > 0 and ω ≥ 0, got κ = {kappa}, ω = {omega}"
        )));
    }
    Ok(())
}

fn nominal_step(omega: f64, kappa: f64) -> f64 {
    if omega > 0.0 {
        1e-4 / omega
    } else {
        1e-2 / kappa
    }
}

/// Moments at `t = t_end·i/samples` for `i = 0..=samples`, starting in the code space.
pub fn integrate_moment_ode(
    theta: f64,
    omega: f64,
    kappa: f64,
    t_end: f64,
    samples: usize,
) -> Result<Vec<(f64, MomentVector)>> {
    check(omega, kappa)?;
    let samples = samples.max(1);
    let opts = OdeOptions {
        h: nominal_step(omega, kappa),
        tol: MOMENT_TOL,
    };
    let mut x = MomentVector::code_space().to_array();
    let mut out = vec![(0.0, MomentVector::code_space())];
    let mut f = rhs(theta, omega, kappa);
    for i in 1..=samples {
        let t0 = t_end * (i - 1) as f64 / samples as f64;
        let t1 = t_end * i as f64 / samples as f64;
        integrate(&mut f, &mut x, t0, t1, opts)?;
        out.push((t1, MomentVector::from_slice(&x)));
    }
    Ok(out)
}

/// Moments after one loop, `T = 2π/ω`.
pub fn moments_after_loop(theta: f64, omega: f64, kappa: f64) -> Result<MomentVector> {
    if !(omega > 0.0) {
        return Err(Error::InvalidParameter(format!("ω must be positive, got {omega}")));
    }
    Ok(integrate_moment_ode(theta, omega, kappa, 2.0 * PI / omega, 1)?[1].1)
}

/// Jump probability `(1 − Re⟨g⟩(T))/2` from the moment equations.
pub fn jump_probability_ode(theta: f64, omega: f64, kappa: f64) -> Result<f64> {
    Ok((1.0 - moments_after_loop(theta, omega, kappa)?.g.re) / 2.0)
}

/// `∂⟨g⟩(T)/∂θ` after one loop, from the forward sensitivity equations
/// `ṡ = A(θ)s + (∂A/∂θ)x` integrated alongside the moments.
pub fn theta_derivative_after_loop(theta: f64, omega: f64, kappa: f64) -> Result<Complex64> {
    check(omega, kappa)?;
    if !(omega > 0.0) {
        return Err(Error::InvalidParameter(format!("ω must be positive, got {omega}")));
    }
    let mut base = rhs(theta, omega, kappa);
    let dwh = omega / (2.0 * PI);
    let i = Complex64::new(0.0, 1.0);
    let mut f = move |t: f64, y: &[Complex64], d: &mut [Complex64]| {
        base(t, &y[..3], &mut d[..3]);
        let mut ds = [Complex64::new(0.0, 0.0); 3];
        base(t, &y[3..], &mut ds);
        let (s, c) = (2.0 * omega * t).sin_cos();
        let x = &y[..3];
        d[3] = ds[0] - 2.0 * dwh * s * x[2];
        d[4] = ds[1] - 2.0 * i * dwh * c * x[2];
        d[5] = ds[2] + 2.0 * dwh * s * x[0] - 2.0 * i * dwh * c * x[1];
    };
    let mut y = [Complex64::new(0.0, 0.0); 6];
    y[..3].copy_from_slice(&MomentVector::code_space().to_array());
    let opts = OdeOptions {
        h: nominal_step(omega, kappa),
        tol: MOMENT_TOL,
    };
    integrate(&mut f, &mut y, 0.0, 2.0 * PI / omega, opts)?;
    Ok(y[3])
}

/// No-jump probability `½[1 + (1 − ωθ²/2πκ)·exp(−4πω/κ)]`, valid for small ω/κ.
pub fn confinement_probability(theta: f64, omega: f64, kappa: f64) -> f64 {
    let r = omega / kappa;
    0.5 * (1.0 + (1.0 - r * theta * theta / (2.0 * PI)) * (-4.0 * PI * r).exp())
}
