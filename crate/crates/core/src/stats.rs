//! Small statistics helpers used by the Monte Carlo harnesses.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};

/// Sample mean and standard error of the mean.
pub fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

/// Binomial standard deviation of a proportion estimate.
pub fn binomial_sigma(p: f64, n: usize) -> f64 {
    (p * (1.0 - p) / n as f64).sqrt()
}

/// Half-width of the Wald 95% interval.
pub fn wald_ci95(p_hat: f64, n: usize) -> f64 {
    normal_quantile(0.975) * binomial_sigma(p_hat, n)
}

pub fn normal_quantile(p: f64) -> f64 {
    Normal::standard().inverse_cdf(p)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ChiSquareResult {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
}

/// Pearson goodness-of-fit test. Adjacent bins are pooled until every pooled
/// expected count reaches `min_expected`.
pub fn chi_square_test(observed: &[u64], probs: &[f64], min_expected: f64) -> ChiSquareResult {
    assert_eq!(observed.len(), probs.len());
    let total: u64 = observed.iter().sum();
    let mut pooled: Vec<(f64, f64)> = Vec::new();
    let (mut o, mut e) = (0.0, 0.0);
    for (&ob, &p) in observed.iter().zip(probs) {
        o += ob as f64;
        e += p * total as f64;
        if e >= min_expected {
            pooled.push((o, e));
            o = 0.0;
            e = 0.0;
        }
    }
    if e > 0.0 || o > 0.0 {
        match pooled.last_mut() {
            Some(last) => {
                last.0 += o;
                last.1 += e;
            }
            None => pooled.push((o, e)),
        }
    }
    let statistic: f64 = pooled.iter().map(|(o, e)| (o - e).powi(2) / e).sum();
    let dof = pooled.len().saturating_sub(1);
    let p_value = if dof == 0 {
        1.0
    } else {
        1.0 - ChiSquared::new(dof as f64).expect("positive dof").cdf(statistic)
    };
    ChiSquareResult {
        statistic,
        dof,
        p_value,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KsResult {
    pub statistic: f64,
    pub n: usize,
    pub p_value: f64,
}

/// One-sample Kolmogorov–Smirnov test; `cdf_sorted[i]` is the model CDF at the i-th smallest sample.
pub fn ks_test_sorted(cdf_sorted: &[f64]) -> KsResult {
    let n = cdf_sorted.len();
    let nf = n as f64;
    let mut d: f64 = 0.0;
    for (i, &f) in cdf_sorted.iter().enumerate() {
        d = d.max((i as f64 + 1.0) / nf - f).max(f - i as f64 / nf);
    }
    KsResult {
        statistic: d,
        n,
        p_value: kolmogorov_p_value(d, n),
    }
}

/// Asymptotic Kolmogorov tail with the usual small-sample correction of the argument.
pub fn kolmogorov_p_value(d: f64, n: usize) -> f64 {
    let sn = (n as f64).sqrt();
    let lambda = (sn + 0.12 + 0.11 / sn) * d;
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * lambda * lambda).exp();
        sum += if k % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}
