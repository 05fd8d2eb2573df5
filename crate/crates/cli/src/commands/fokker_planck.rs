use std::f64::consts::FRAC_PI_2;
use std::path::{Path, PathBuf};

use holozeno::continuous::fokker_planck::{ks_against_density, sample_sde, SdeSampling, StationaryDensity};
use holozeno::rng::stream_rng;
use holozeno::stats::KsResult;
use serde::Serialize;

use crate::config::FokkerPlanckConfig;
use crate::error::Result;
use crate::output::{num, write_json, Csv, Report};

#[derive(Serialize)]
struct Results {
    r: f64,
    normalization: f64,
    peaks: Vec<f64>,
    half_mass: f64,
    sde_samples: Option<usize>,
    ks: Option<KsResult>,
}

pub fn run(cfg: &FokkerPlanckConfig, out: &Path) -> Result<Vec<PathBuf>> {
    cfg.validate()?;
    let kappa = cfg.kappa;
    let omega = cfg.omega_over_kappa * kappa;
    let density = StationaryDensity::new(omega, kappa, cfg.x0.0)?;
    let header = format!(
        "stationary angle density on [0, pi); omega/kappa={} kappa={} x0={}",
        num(cfg.omega_over_kappa),
        num(kappa),
        num(cfg.x0.0)
    );
    let mut table = Csv::new(&["x", "p"]).comment(header.clone());
    for (x, p) in density.table(cfg.points) {
        table.push(vec![num(x), num(p)]);
    }
    let mut written = vec![table.write(out, "density.csv")?];

    let mut results = Results {
        r: cfg.omega_over_kappa,
        normalization: density.normalization()?,
        peaks: density.peaks()?,
        half_mass: density.half_mass(),
        sde_samples: None,
        ks: None,
    };
    if cfg.sde {
        let sampling = SdeSampling {
            omega,
            kappa,
            dt: cfg.kappa_dt / kappa,
            t_end: cfg.kappa_t_end / kappa,
            burn_in: cfg.kappa_burn_in / kappa,
            thin: cfg.kappa_thin / kappa,
            x0: 0.0,
        };
        let samples = sample_sde(&sampling, &mut stream_rng(cfg.master_seed, 0))?;
        let bins = cfg.histogram_bins;
        let width = FRAC_PI_2 / bins as f64;
        let mut counts = vec![0usize; bins];
        for &x in &samples {
            counts[((x / width) as usize).min(bins - 1)] += 1;
        }
        let edges: Vec<f64> = (0..=bins).map(|i| i as f64 * width).collect();
        let mut cdf = density.folded_cdf_sorted(&edges[..bins])?;
        cdf.push(1.0);
        let n = samples.len() as f64;
        let mut hist = Csv::new(&["bin_left", "bin_right", "count", "density_sde", "density_exact"])
            .comment(format!(
                "{header}; SDE samples folded into [0, pi/2); kappa_dt={} seed={}",
                num(cfg.kappa_dt),
                cfg.master_seed
            ))
            .comment("densities are per unit angle of the folded variable");
        for i in 0..bins {
            hist.push(vec![
                num(edges[i]),
                num(edges[i + 1]),
                counts[i].to_string(),
                num(counts[i] as f64 / (n * width)),
                num((cdf[i + 1] - cdf[i]) / width),
            ]);
        }
        written.push(hist.write(out, "fp_histogram.csv")?);
        results.ks = Some(ks_against_density(&density, &samples)?);
        results.sde_samples = Some(samples.len());
    }
    written.push(write_json(
        out,
        "fokker_planck.json",
        &Report::new("fokker-planck", cfg.master_seed, cfg, &results),
    )?);
    Ok(written)
}
