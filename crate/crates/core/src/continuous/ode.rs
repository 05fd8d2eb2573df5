//! Classic RK4 with step-doubling error control for complex linear systems.

use num_complex::Complex64;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OdeOptions {
    /// Nominal (largest) step.
    pub h: f64,
    /// Largest accepted max-norm difference between one full step and two half steps.
    pub tol: f64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct OdeStats {
    pub accepted: usize,
    pub rejected: usize,
}

struct Rk4 {
    k1: Vec<Complex64>,
    k2: Vec<Complex64>,
    k3: Vec<Complex64>,
    k4: Vec<Complex64>,
    tmp: Vec<Complex64>,
}

impl Rk4 {
    fn new(n: usize) -> Self {
        let z = vec![Complex64::new(0.0, 0.0); n];
        Rk4 {
            k1: z.clone(),
            k2: z.clone(),
            k3: z.clone(),
            k4: z.clone(),
            tmp: z,
        }
    }

    fn step<F: FnMut(f64, &[Complex64], &mut [Complex64])>(
        &mut self,
        rhs: &mut F,
        t: f64,
        h: f64,
        x: &[Complex64],
        out: &mut [Complex64],
    ) {
        rhs(t, x, &mut self.k1);
        for i in 0..x.len() {
            self.tmp[i] = x[i] + 0.5 * h * self.k1[i];
        }
        rhs(t + 0.5 * h, &self.tmp, &mut self.k2);
        for i in 0..x.len() {
            self.tmp[i] = x[i] + 0.5 * h * self.k2[i];
        }
        rhs(t + 0.5 * h, &self.tmp, &mut self.k3);
        for i in 0..x.len() {
            self.tmp[i] = x[i] + h * self.k3[i];
        }
        rhs(t + h, &self.tmp, &mut self.k4);
        for i in 0..x.len() {
            out[i] = x[i] + h / 6.0 * (self.k1[i] + 2.0 * self.k2[i] + 2.0 * self.k3[i] + self.k4[i]);
        }
    }
}

/// Integrates `dx/dt = rhs(t, x)` from `t0` to `t1` in place. A step whose
/// full-step and two-half-step results differ by more than `tol` is halved;
/// the finer result is kept and the step grows back towards the nominal value.
pub fn integrate<F>(mut rhs: F, x: &mut [Complex64], t0: f64, t1: f64, opts: OdeOptions) -> Result<OdeStats>
where
    F: FnMut(f64, &[Complex64], &mut [Complex64]),
{
    let n = x.len();
    let mut rk = Rk4::new(n);
    let mut full = vec![Complex64::new(0.0, 0.0); n];
    let mut mid = full.clone();
    let mut fine = full.clone();
    let mut stats = OdeStats::default();
    let min_h = opts.h * 1e-8;
    let mut h = opts.h;
    let mut t = t0;
    while t < t1 {
        let step = h.min(t1 - t);
        rk.step(&mut rhs, t, step, x, &mut full);
        rk.step(&mut rhs, t, 0.5 * step, x, &mut mid);
        rk.step(&mut rhs, t + 0.5 * step, 0.5 * step, &mid, &mut fine);
        let err = full.iter().zip(&fine).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        if !err.is_finite() {
            return Err(Error::Integration(format!("non-finite state at t = {t}")));
        }
        if err > opts.tol {
            if step < min_h {
                return Err(Error::Integration(format!(
                    "step size underflow at t = {t} (error {err:.3e})"
                )));
            }
            h = 0.5 * step;
            stats.rejected += 1;
            continue;
        }
        x.copy_from_slice(&fine);
        t = if step == t1 - t { t1 } else { t + step };
        stats.accepted += 1;
        if err < opts.tol / 64.0 {
            h = (2.0 * h).min(opts.h);
        }
    }
    Ok(stats)
}
