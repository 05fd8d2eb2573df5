use std::path::{Path, PathBuf};

use holozeno::continuous::detector::detector_trace;
use holozeno::continuous::{integrate_sse, ContinuousRunConfig, DetectorConfig, Detection, SseOptions};
use holozeno::discrete::{
    forced_jump_step, run_discrete_trajectory, run_forced_trajectory, CorrectionPolicy, DiscreteRunConfig,
    TrajectoryRecord,
};
use holozeno::rng::stream_rng;
use holozeno::Target;
use serde::Serialize;

use crate::config::{SingleContinuous, SingleDiscrete, SingleRunConfig};
use crate::error::Result;
use crate::output::{num, write_json, Csv, Report};

#[derive(Serialize)]
struct ContinuousResult {
    fidelity: f64,
    target: Target,
    final_expectations: Vec<f64>,
    watched: usize,
    detection: Option<Detection>,
    window: f64,
    dt: f64,
    steps: usize,
    max_norm_drift: f64,
}

pub fn run(cfg: &SingleRunConfig, out: &Path) -> Result<Vec<PathBuf>> {
    match cfg {
        SingleRunConfig::Discrete(d) => discrete(cfg, d, out),
        SingleRunConfig::Continuous(c) => continuous(cfg, c, out),
    }
}

fn discrete(cfg: &SingleRunConfig, d: &SingleDiscrete, out: &Path) -> Result<Vec<PathBuf>> {
    let run = DiscreteRunConfig {
        policy: d.policy.unwrap_or(CorrectionPolicy::None),
        trajectories: 1,
        master_seed: d.master_seed,
        ..DiscreteRunConfig::new(d.path.build()?, d.dphi.0)
    };
    run.validate()?;
    let record: TrajectoryRecord = match d.forced_jump_angle {
        Some(zeta) => run_forced_trajectory(&run, Some(forced_jump_step(zeta.0, d.dphi.0)))?,
        None => run_discrete_trajectory(&run, &mut stream_rng(d.master_seed, 0))?,
    };
    Ok(vec![write_json(
        out,
        "single_run.json",
        &Report::new("single-run", d.master_seed, cfg, &record),
    )?])
}

fn continuous(cfg: &SingleRunConfig, c: &SingleContinuous, out: &Path) -> Result<Vec<PathBuf>> {
    let run = ContinuousRunConfig {
        dt: c.kappa_dt / c.kappa,
        trajectories: 1,
        master_seed: c.master_seed,
        detector: DetectorConfig {
            enabled: c.detector,
            kappa_window: c.kappa_window,
            threshold: c.threshold,
        },
        correction: c.correction,
        ..ContinuousRunConfig::new(c.path.build()?, c.kappa, c.omega_over_kappa * c.kappa)
    };
    let opts = SseOptions {
        record_currents: true,
        ..SseOptions::default()
    };
    let r = integrate_sse(&run, &opts, &mut stream_rng(c.master_seed, 0))?;

    let header = format!(
        "single SSE trajectory; omega/kappa={} kappa={} kappa_dt={} window={} seed={}",
        num(c.omega_over_kappa),
        num(c.kappa),
        num(c.kappa_dt),
        num(r.window),
        c.master_seed
    );
    let mut columns = vec!["t".to_string()];
    columns.extend((0..r.currents.len()).map(|j| format!("current_{j}")));
    let column_refs: Vec<&str> = columns.iter().map(String::as_str).collect();
    let mut currents = Csv::new(&column_refs)
        .comment(header.clone())
        .comment(format!("window-averaged currents per measured generator; channel {} is watched", r.watched));
    let windows = r.currents.first().map_or(0, Vec::len);
    for k in 0..windows {
        let mut row = vec![num((k + 1) as f64 * r.window)];
        row.extend(r.currents.iter().map(|ch| num(ch[k])));
        currents.push(row);
    }
    let mut trace = Csv::new(&["t", "y", "s", "s_minus_m"]).comment(header);
    for row in detector_trace(&r.currents[r.watched], r.window, c.kappa)? {
        trace.push(vec![num(row.t), num(row.y), num(row.s), num(row.s_minus_m)]);
    }

    let result = ContinuousResult {
        fidelity: r.fidelity,
        target: r.target,
        final_expectations: r.final_expectations,
        watched: r.watched,
        detection: r.detection,
        window: r.window,
        dt: r.dt,
        steps: r.steps,
        max_norm_drift: r.max_norm_drift,
    };
    Ok(vec![
        currents.write(out, "currents.csv")?,
        trace.write(out, "detector_trace.csv")?,
        write_json(out, "single_run.json", &Report::new("single-run", c.master_seed, cfg, &result))?,
    ])
}
