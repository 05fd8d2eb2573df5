//! Dense master equation in the co-rotating frame,
//! `dρ̃/dt = −i[ωX + ω_H(cos 2ωt H + sin 2ωt K), ρ̃] + κ Σ_j (g_j ρ̃ g_j − ρ̃)` with `K = −iXH`.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::moments::integrate_moment_ode;
use super::ode::{integrate, OdeOptions};
use super::sse::MaskedPauli;
use super::ContinuousRunConfig;
use crate::error::{Error, Result};
use crate::pauli::PauliOperator;

/// Largest register handled by the dense master equation.
pub const LINDBLAD_QUBIT_LIMIT: usize = 6;

const LINDBLAD_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LindbladSample {
    pub t: f64,
    pub expectations: Vec<f64>,
    pub purity: f64,
}

#[derive(Clone, Debug)]
pub struct LindbladSolution {
    pub samples: Vec<LindbladSample>,
    /// `ρ̃` at the final time.
    pub rho: DMatrix<Complex64>,
}

/// `(Pρ)[a,b] = c[a] ρ[a⊕m, b]` and `(ρP)[a,b] = ρ[a, b⊕m] c[b⊕m]`, row-major ρ.
struct Ops {
    d: usize,
    x: MaskedPauli,
    h: MaskedPauli,
    k: MaskedPauli,
    gens: Vec<MaskedPauli>,
}

impl MaskedPauli {
    fn left(&self, d: usize, rho: &[Complex64], a: usize, b: usize) -> Complex64 {
        let (xm, c) = self.parts();
        c[a] * rho[(a ^ xm) * d + b]
    }

    fn right(&self, d: usize, rho: &[Complex64], a: usize, b: usize) -> Complex64 {
        let (xm, c) = self.parts();
        rho[a * d + (b ^ xm)] * c[b ^ xm]
    }

    /// `(PρP†)[a,b]` for Hermitian P.
    fn sandwich(&self, d: usize, rho: &[Complex64], a: usize, b: usize) -> Complex64 {
        let (xm, c) = self.parts();
        c[a] * rho[(a ^ xm) * d + (b ^ xm)] * c[b].conj()
    }
}

fn expectation(p: &MaskedPauli, d: usize, rho: &[Complex64]) -> f64 {
    (0..d).map(|a| p.right(d, rho, a, a)).sum::<Complex64>().re
}

fn purity(d: usize, rho: &[Complex64]) -> f64 {
    let mut s = 0.0;
    for a in 0..d {
        for b in 0..d {
            s += (rho[a * d + b] * rho[b * d + a]).re;
        }
    }
    s
}

/// Integrates the rotating-frame master equation from the initial code state over `[0, t_end]`.
pub fn integrate_rotating_lindblad(
    config: &ContinuousRunConfig,
    observables: &[PauliOperator],
    t_end: f64,
    samples: usize,
) -> Result<LindbladSolution> {
    config.validate()?;
    let path = &config.path;
    let n = path.code().n();
    if n > LINDBLAD_QUBIT_LIMIT {
        return Err(Error::DenseLimit {
            n,
            limit: LINDBLAD_QUBIT_LIMIT,
        });
    }
    let d = 1usize << n;
    let (gens, _) = config.measured_generators()?;
    let k_op = (path.x() * path.h()).times_i_pow(3);
    let ops = Ops {
        d,
        x: MaskedPauli::new(path.x()),
        h: MaskedPauli::new(path.h()),
        k: MaskedPauli::new(&k_op),
        gens: gens.iter().map(MaskedPauli::new).collect(),
    };
    let obs: Vec<MaskedPauli> = observables.iter().map(MaskedPauli::new).collect();
    let (omega, kappa) = (config.omega, config.kappa);
    let wh = path.theta() * omega / (2.0 * PI);
    let i = Complex64::new(0.0, 1.0);
    let rhs = |t: f64, rho: &[Complex64], out: &mut [Complex64]| {
        let (s, c) = (2.0 * omega * t).sin_cos();
        let terms = [(omega, &ops.x), (wh * c, &ops.h), (wh * s, &ops.k)];
        for a in 0..ops.d {
            for b in 0..ops.d {
                let mut comm = Complex64::new(0.0, 0.0);
                for (w, p) in terms {
                    comm += w * (p.left(ops.d, rho, a, b) - p.right(ops.d, rho, a, b));
                }
                let mut diss = Complex64::new(0.0, 0.0);
                for g in &ops.gens {
                    diss += g.sandwich(ops.d, rho, a, b) - rho[a * ops.d + b];
                }
                out[a * ops.d + b] = -i * comm + kappa * diss;
            }
        }
    };

    let psi = path.code().logical_basis_state(config.initial_logical)?;
    let amps = psi.amplitudes();
    let mut rho: Vec<Complex64> = (0..d * d).map(|idx| amps[idx / d] * amps[idx % d].conj()).collect();
    let sample = |t: f64, rho: &[Complex64]| LindbladSample {
        t,
        expectations: obs.iter().map(|o| expectation(o, d, rho)).collect(),
        purity: purity(d, rho),
    };
    let opts = OdeOptions {
        h: (1e-4 / omega).min(1e-2 / kappa),
        tol: LINDBLAD_TOL,
    };
    let samples_n = samples.max(1);
    let mut out = vec![sample(0.0, &rho)];
    let mut f = rhs;
    for j in 1..=samples_n {
        let t0 = t_end * (j - 1) as f64 / samples_n as f64;
        let t1 = t_end * j as f64 / samples_n as f64;
        integrate(&mut f, &mut rho, t0, t1, opts)?;
        out.push(sample(t1, &rho));
    }
    Ok(LindbladSolution {
        samples: out,
        rho: DMatrix::from_row_slice(d, d, &rho),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyReport {
    pub times: Vec<f64>,
    /// `⟨g⟩` of the watched generator from the master equation.
    pub lindblad: Vec<f64>,
    /// `Re⟨g⟩` from the moment equations.
    pub moments: Vec<f64>,
    pub max_deviation: f64,
    pub purity: Vec<f64>,
    pub purity_non_increasing: bool,
    /// All measured generators have expectation 1 at t = 0.
    pub initial_ok: bool,
}

/// Compares the watched generator's expectation from the master equation with the
/// moment equations over one loop, and checks that purity never increases.
pub fn rotating_frame_consistency(config: &ContinuousRunConfig, samples: usize) -> Result<ConsistencyReport> {
    let (gens, watched) = config.measured_generators()?;
    let t_end = config.total_time();
    let sol = integrate_rotating_lindblad(config, &gens, t_end, samples)?;
    let ode = integrate_moment_ode(config.path.theta(), config.omega, config.kappa, t_end, samples)?;
    let times: Vec<f64> = sol.samples.iter().map(|s| s.t).collect();
    let lindblad: Vec<f64> = sol.samples.iter().map(|s| s.expectations[watched]).collect();
    let moments: Vec<f64> = ode.iter().map(|(_, m)| m.g.re).collect();
    let max_deviation = lindblad
        .iter()
        .zip(&moments)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let purity: Vec<f64> = sol.samples.iter().map(|s| s.purity).collect();
    let purity_non_increasing = purity.windows(2).all(|w| w[1] <= w[0] + 1e-12);
    let initial_ok = sol.samples[0].expectations.iter().all(|e| (e - 1.0).abs() < 1e-12);
    Ok(ConsistencyReport {
        times,
        lindblad,
        moments,
        max_deviation,
        purity,
        purity_non_increasing,
        initial_ok,
    })
}
