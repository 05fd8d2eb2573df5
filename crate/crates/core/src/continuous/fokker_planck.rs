//! Stationary law of the single-qubit angle diffusion
//! `dx = −(ω + (κ/2) sin 4x) dt − √κ sin 2x dW`.
//!
//! With `r = ω/κ` and `c = cot 2x` the unnormalized stationary density is
//! `p̂ = ½ J(c)`, `J(c) = ∫₀^∞ exp(−ru) ((1+c²)/(1+(c+u)²))^{3/2} du`, which is
//! smooth through the poles `sin 2x = 0` where it tends to `1/(2r)`. Each
//! half-period carries mass `Z = ∫ J/(4(1+c²)) dc`, so `p(x) = J(cot 2x)/(4Z)`
//! on `[0, π)`.

use std::f64::consts::{FRAC_PI_2, PI};

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{integrate, integrate_pieces, QuadOptions};
use crate::stats::{ks_test_sorted, KsResult};

const INNER: QuadOptions = QuadOptions {
    abs_tol: 0.0,
    rel_tol: 1e-12,
    max_intervals: 2000,
};

/// Beyond this |cot 2x| the pole limit is used.
const POLE_C: f64 = 1e12;

#[derive(Clone, Debug)]
pub struct StationaryDensity {
    omega: f64,
    kappa: f64,
    r: f64,
    half_mass: f64,
}

impl StationaryDensity {
    /// `x0` is the lower limit of the flux integral; only the poles `x0 ∈ (π/2)ℤ`
    /// give a normalizable solution.
    pub fn new(omega: f64, kappa: f64, x0: f64) -> Result<Self> {
        if !(kappa > 0.0 && kappa.is_finite()) {
            return Err(Error::InvalidParameter(format!("κ must be positive, got {kappa}")));
        }
        if !(omega > 0.0 && omega.is_finite()) {
            return Err(Error::InvalidParameter(format!("ω must be positive, got {omega}")));
        }
        let k = x0 / FRAC_PI_2;
        if (k - k.round()).abs() > 1e-12 {
            return Err(Error::NonNormalizable(format!(
                "x0 = {x0} is not a multiple of π/2; the flux integral diverges at the next pole"
            )));
        }
        let mut d = StationaryDensity {
            omega,
            kappa,
            r: omega / kappa,
            half_mass: 1.0,
        };
        d.half_mass = d.mass_between(f64::NEG_INFINITY, f64::INFINITY)?;
        if !(d.half_mass.is_finite() && d.half_mass > 0.0) {
            return Err(Error::NonNormalizable(format!("half-period mass {}", d.half_mass)));
        }
        Ok(d)
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    /// `∫ J/(4(1+c²)) dc` over one half-period (unnormalized).
    pub fn half_mass(&self) -> f64 {
        self.half_mass
    }

    /// `J(c)`.
    pub fn flux_integral(&self, c: f64) -> f64 {
        if !c.is_finite() || c.abs() > POLE_C {
            return 1.0 / self.r;
        }
        let r = self.r;
        let lnum = (1.0 + c * c).ln();
        let f = |u: f64| (-r * u + 1.5 * (lnum - (1.0 + (c + u) * (c + u)).ln())).exp();
        let mut points = vec![0.0];
        if c < 0.0 {
            for p in [-c - 20.0, -c, -c + 20.0] {
                if p > *points.last().expect("non-empty") {
                    points.push(p);
                }
            }
        }
        let tail_start = *points.last().expect("non-empty");
        let mut total = integrate_pieces(f, &points, INNER).map(|q| q.value).unwrap_or(f64::NAN);
        total += integrate(f, tail_start, f64::INFINITY, INNER)
            .map(|q| q.value)
            .unwrap_or(f64::NAN);
        total
    }

    /// Unnormalized density `p̂(x) = ½J(cot 2x)`.
    pub fn unnormalized(&self, x: f64) -> f64 {
        0.5 * self.flux_integral(cot2(x))
    }

    /// Normalized density on `[0, π)` (π-periodic).
    pub fn density(&self, x: f64) -> f64 {
        self.flux_integral(cot2(x)) / (4.0 * self.half_mass)
    }

    fn weight(&self, c: f64) -> f64 {
        self.flux_integral(c) / (4.0 * (1.0 + c * c))
    }

    fn mass_between(&self, lo: f64, hi: f64) -> Result<f64> {
        let r = self.r;
        let mut points = vec![lo];
        for p in [-20.0 / r, -6.0 / r, -3.0 / r, -1.0 / r, 0.0] {
            if p > lo && p < hi {
                points.push(p);
            }
        }
        points.push(hi);
        let opts = QuadOptions {
            abs_tol: 0.0,
            rel_tol: 1e-11,
            max_intervals: 4000,
        };
        let mut total = 0.0;
        for w in points.windows(2) {
            total += integrate(|c| self.weight(c), w[0], w[1], opts)?.value;
        }
        if total.is_nan() {
            return Err(Error::Integration("flux integral failed to converge".into()));
        }
        Ok(total)
    }

    /// CDF of `x mod π/2` at ascending points of `[0, π/2)`.
    pub fn folded_cdf_sorted(&self, ys: &[f64]) -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(ys.len());
        let mut acc = 0.0;
        let mut prev = f64::INFINITY;
        for &y in ys {
            if !(0.0..FRAC_PI_2).contains(&y) {
                return Err(Error::InvalidParameter(format!("{y} outside [0, π/2)")));
            }
            let c = cot2(y);
            if c < prev {
                acc += self.mass_between(c, prev)?;
                prev = c;
            }
            out.push((acc / self.half_mass).clamp(0.0, 1.0));
        }
        Ok(out)
    }

    /// CDF on `[0, π)`.
    pub fn cdf(&self, x: f64) -> Result<f64> {
        let x = x.rem_euclid(PI);
        let half = (x / FRAC_PI_2).floor();
        let y = x - half * FRAC_PI_2;
        let f = self.folded_cdf_sorted(&[y.min(FRAC_PI_2 * (1.0 - 1e-16))])?[0];
        Ok(0.5 * (f + half))
    }

    /// `∫₀^π p(x) dx` by direct quadrature in x.
    pub fn normalization(&self) -> Result<f64> {
        let peak = self.peaks()?[0];
        let mut points = Vec::new();
        for base in [0.0, FRAC_PI_2] {
            points.push(base);
            let p = base + peak;
            let w = (FRAC_PI_2 - peak).max(1e-6);
            for q in [p - 20.0 * w, p - 4.0 * w, p - w, p, p + 0.5 * w] {
                if q > *points.last().expect("non-empty") && q < base + FRAC_PI_2 {
                    points.push(q);
                }
            }
        }
        points.push(PI);
        let opts = QuadOptions {
            abs_tol: 1e-12,
            rel_tol: 1e-11,
            max_intervals: 4000,
        };
        Ok(integrate_pieces(|x| self.density(x), &points, opts)?.value)
    }

    /// Locations of the two maxima in `[0, π)`.
    pub fn peaks(&self) -> Result<Vec<f64>> {
        let r = self.r;
        // p̂ has one maximum per half-period, near c = −3/r; search over log|c|.
        let f = |s: f64| self.flux_integral(-s.exp());
        let (mut a, mut b) = ((0.05 / r).ln(), (50.0 / r).ln());
        let g = (5f64.sqrt() - 1.0) / 2.0;
        let mut x1 = b - g * (b - a);
        let mut x2 = a + g * (b - a);
        let (mut f1, mut f2) = (f(x1), f(x2));
        for _ in 0..200 {
            if b - a < 1e-12 {
                break;
            }
            if f1 < f2 {
                a = x1;
                x1 = x2;
                f1 = f2;
                x2 = a + g * (b - a);
                f2 = f(x2);
            } else {
                b = x2;
                x2 = x1;
                f2 = f1;
                x1 = b - g * (b - a);
                f1 = f(x1);
            }
        }
        let c = -(0.5 * (a + b)).exp();
        let x = 0.5 * 1f64.atan2(c);
        if !x.is_finite() {
            return Err(Error::Integration("peak search failed".into()));
        }
        Ok(vec![x, x + FRAC_PI_2])
    }

    /// `(x, p(x))` on `n` evenly spaced points of `[0, π)`.
    pub fn table(&self, n: usize) -> Vec<(f64, f64)> {
        (0..n)
            .map(|i| {
                let x = PI * i as f64 / n as f64;
                (x, self.density(x))
            })
            .collect()
    }
}

/// `cot 2x`, infinite at the poles.
fn cot2(x: f64) -> f64 {
    let (s, c) = (2.0 * x).sin_cos();
    if s == 0.0 {
        f64::INFINITY
    } else {
        c / s
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SdeSampling {
    pub omega: f64,
    pub kappa: f64,
    pub dt: f64,
    pub t_end: f64,
    pub burn_in: f64,
    /// Time between retained samples.
    pub thin: f64,
    pub x0: f64,
}

impl SdeSampling {
    /// `κdt = 1e-4`, `T = 10³/κ`, burn-in `10/κ`, one sample per `2/κ`.
    pub fn standard(omega: f64, kappa: f64) -> Self {
        SdeSampling {
            omega,
            kappa,
            dt: 1e-4 / kappa,
            t_end: 1e3 / kappa,
            burn_in: 10.0 / kappa,
            thin: 2.0 / kappa,
            x0: 0.0,
        }
    }
}

/// Euler–Maruyama path of the angle SDE; retained samples folded into `[0, π/2)`.
pub fn sample_sde<R: Rng + ?Sized>(cfg: &SdeSampling, rng: &mut R) -> Result<Vec<f64>> {
    if !(cfg.kappa > 0.0 && cfg.dt > 0.0 && cfg.thin > 0.0 && cfg.t_end > cfg.burn_in) {
        return Err(Error::InvalidParameter("invalid SDE sampling parameters".into()));
    }
    let steps = (cfg.t_end / cfg.dt).round() as usize;
    let burn = (cfg.burn_in / cfg.dt).round() as usize;
    let thin = ((cfg.thin / cfg.dt).round() as usize).max(1);
    let sk = cfg.kappa.sqrt() * cfg.dt.sqrt();
    let mut x = cfg.x0;
    let mut out = Vec::with_capacity((steps - burn) / thin + 1);
    for n in 1..=steps {
        let z: f64 = rng.sample(StandardNormal);
        x += -(cfg.omega + 0.5 * cfg.kappa * (4.0 * x).sin()) * cfg.dt - sk * (2.0 * x).sin() * z;
        x = x.rem_euclid(FRAC_PI_2);
        if n > burn && (n - burn).is_multiple_of(thin) {
            out.push(x);
        }
    }
    Ok(out)
}

/// One-sample KS test of folded SDE samples against the stationary law.
pub fn ks_against_density(density: &StationaryDensity, samples: &[f64]) -> Result<KsResult> {
    let mut ys = samples.to_vec();
    ys.sort_by(f64::total_cmp);
    let cdf = density.folded_cdf_sorted(&ys)?;
    Ok(ks_test_sorted(&cdf))
}
