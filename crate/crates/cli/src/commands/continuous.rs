use std::path::{Path, PathBuf};

use holozeno::continuous::{
    confinement_probability, jump_probability_ode, run_sse_ensemble, summarize_sse, ContinuousRunConfig,
    SseOptions, SseSummary,
};
use holozeno::rng::derive_seed;
use serde::Serialize;

use crate::config::ContinuousSweepConfig;
use crate::error::Result;
use crate::output::{num, write_json, Csv, Report};

#[derive(Serialize)]
struct CurvePoint {
    omega_over_kappa: f64,
    p_jump_formula: f64,
    p_jump_ode: f64,
}

#[derive(Serialize)]
struct SsePoint {
    #[serde(flatten)]
    curve: CurvePoint,
    sse: SseSummary,
}

fn curve_point(theta: f64, kappa: f64, r: f64) -> Result<CurvePoint> {
    Ok(CurvePoint {
        omega_over_kappa: r,
        p_jump_formula: 1.0 - confinement_probability(theta, r * kappa, kappa),
        p_jump_ode: jump_probability_ode(theta, r * kappa, kappa)?,
    })
}

pub fn run(cfg: &ContinuousSweepConfig, out: &Path) -> Result<Vec<PathBuf>> {
    cfg.validate()?;
    let path = cfg.path.build()?;
    let theta = path.theta();
    let curve = cfg
        .omega_over_kappa
        .values()
        .into_iter()
        .map(|r| curve_point(theta, cfg.kappa, r))
        .collect::<Result<Vec<_>>>()?;

    let mut points = Vec::new();
    for (i, r) in cfg.sse_omega_over_kappa.values().into_iter().enumerate() {
        let run = ContinuousRunConfig {
            dt: cfg.kappa_dt / cfg.kappa,
            trajectories: cfg.trajectories,
            master_seed: derive_seed(cfg.master_seed, i as u64),
            generators: cfg.generators,
            ..ContinuousRunConfig::new(path.clone(), cfg.kappa, r * cfg.kappa)
        };
        let records = run_sse_ensemble(&run, &SseOptions::default())?;
        points.push(SsePoint {
            curve: curve_point(theta, cfg.kappa, r)?,
            sse: summarize_sse(&records),
        });
    }

    let header = format!(
        "jump probability over one loop; code={} H={} X={} theta={} kappa={} kappa_dt={} seed={}",
        cfg.path.code,
        cfg.path.h,
        cfg.path.x,
        num(theta),
        num(cfg.kappa),
        num(cfg.kappa_dt),
        cfg.master_seed
    );
    let mut fig5 = Csv::new(&[
        "omega_over_kappa",
        "p_jump_formula",
        "p_jump_ode",
        "p_jump_sse",
        "ci95",
        "se_p_jump",
        "mean_fidelity",
        "se_fidelity",
        "trajectories",
    ])
    .comment(header.clone())
    .comment("p_jump_sse = (1 - mean <g>(T))/2 over the ensemble; ci95 = 1.96 * se_p_jump; mean_fidelity is with the target gate state");
    for p in &points {
        fig5.push(vec![
            num(p.curve.omega_over_kappa),
            num(p.curve.p_jump_formula),
            num(p.curve.p_jump_ode),
            num(p.sse.p_jump),
            num(p.sse.ci95),
            num(p.sse.se_p_jump),
            num(p.sse.mean_fidelity),
            num(p.sse.se_fidelity),
            p.sse.trajectories.to_string(),
        ]);
    }
    let mut curve_csv = Csv::new(&["omega_over_kappa", "p_jump_formula", "p_jump_ode"])
        .comment(header)
        .comment("p_jump_formula = 1 - (1/2)[1 + (1 - omega theta^2/(2 pi kappa)) exp(-4 pi omega/kappa)]");
    for c in &curve {
        curve_csv.push(vec![num(c.omega_over_kappa), num(c.p_jump_formula), num(c.p_jump_ode)]);
    }

    #[derive(Serialize)]
    struct Results<'a> {
        curve: &'a [CurvePoint],
        sse: &'a [SsePoint],
    }
    Ok(vec![
        fig5.write(out, "fig5.csv")?,
        curve_csv.write(out, "fig5_curve.csv")?,
        write_json(
            out,
            "continuous_sweep.json",
            &Report::new(
                "continuous-sweep",
                cfg.master_seed,
                cfg,
                Results {
                    curve: &curve,
                    sse: &points,
                },
            ),
        )?,
    ])
}
