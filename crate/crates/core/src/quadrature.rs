//! Adaptive Gauss–Kronrod (7/15) quadrature on finite and infinite intervals.

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        QuadOptions {
            abs_tol: 1e-13,
            rel_tol: 1e-11,
            max_intervals: 2000,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub error: f64,
    pub evaluations: usize,
}

fn gk15<F: Fn(f64) -> f64 + ?Sized>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        kron += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    (kron * h, ((kron - gauss) * h).abs())
}

fn adaptive<F: Fn(f64) -> f64 + ?Sized>(f: &F, a: f64, b: f64, opts: QuadOptions) -> Result<QuadResult> {
    let (v, e) = gk15(f, a, b);
    let mut parts = vec![(a, b, v, e)];
    let mut evals = 15;
    loop {
        let value: f64 = parts.iter().map(|p| p.2).sum();
        let error: f64 = parts.iter().map(|p| p.3).sum();
        if error <= opts.abs_tol.max(opts.rel_tol * value.abs()) {
            return Ok(QuadResult {
                value,
                error,
                evaluations: evals,
            });
        }
        if parts.len() >= opts.max_intervals {
            return Err(Error::Integration(format!(
                "no convergence on [{a}, {b}] after {} subintervals (error {error:.3e}, value {value:.6e})",
                parts.len()
            )));
        }
        let (worst, _) = parts
            .iter()
            .enumerate()
            .fold((0, -1.0), |acc, (i, p)| if p.3 > acc.1 { (i, p.3) } else { acc });
        let (lo, hi, _, _) = parts.swap_remove(worst);
        let mid = 0.5 * (lo + hi);
        let (v1, e1) = gk15(f, lo, mid);
        let (v2, e2) = gk15(f, mid, hi);
        evals += 30;
        parts.push((lo, mid, v1, e1));
        parts.push((mid, hi, v2, e2));
    }
}

/// `∫_a^b f`, where either limit may be infinite.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, opts: QuadOptions) -> Result<QuadResult> {
    integrate_dyn(&f, a, b, opts)
}

fn integrate_dyn(f: &dyn Fn(f64) -> f64, a: f64, b: f64, opts: QuadOptions) -> Result<QuadResult> {
    if a == b {
        return Ok(QuadResult {
            value: 0.0,
            error: 0.0,
            evaluations: 0,
        });
    }
    if a > b {
        let r = integrate_dyn(f, b, a, opts)?;
        return Ok(QuadResult {
            value: -r.value,
            ..r
        });
    }
    match (a.is_finite(), b.is_finite()) {
        (true, true) => adaptive(f, a, b, opts),
        (true, false) => {
            // x = a + t/(1−t)
            let g = |t: f64| {
                let u = 1.0 - t;
                f(a + t / u) / (u * u)
            };
            adaptive(&g, 0.0, 1.0, opts)
        }
        (false, true) => {
            let g = |t: f64| {
                let u = 1.0 - t;
                f(b - t / u) / (u * u)
            };
            adaptive(&g, 0.0, 1.0, opts)
        }
        (false, false) => {
            let left = integrate_dyn(f, f64::NEG_INFINITY, 0.0, opts)?;
            let right = integrate_dyn(f, 0.0, f64::INFINITY, opts)?;
            Ok(QuadResult {
                value: left.value + right.value,
                error: left.error + right.error,
                evaluations: left.evaluations + right.evaluations,
            })
        }
    }
}

/// Sum of integrals over consecutive breakpoints (which must be increasing).
pub fn integrate_pieces<F: Fn(f64) -> f64>(f: F, points: &[f64], opts: QuadOptions) -> Result<QuadResult> {
    let mut total = QuadResult {
        value: 0.0,
        error: 0.0,
        evaluations: 0,
    };
    for w in points.windows(2) {
        let r = integrate(&f, w[0], w[1], opts)?;
        total.value += r.value;
        total.error += r.error;
        total.evaluations += r.evaluations;
    }
    Ok(total)
}
