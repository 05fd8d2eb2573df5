//! TOML run configurations. Every field has a default matching the reference
//! experiments; unknown keys are rejected.

use std::f64::consts::PI;
use std::fmt;
use std::path::Path;

use holozeno::discrete::{CorrectionPolicy, MeasurementMode};
use holozeno::{builtin_code, HolonomicPath, StabilizerCode, Target};
use serde::de::{self, Deserializer, Visitor};
use serde::{Deserialize, Serialize, Serializer};

use crate::error::{CliError, Result};

/// A real number written either as a literal or as an expression in π such as
/// `"pi/6"`, `"2*pi/400"` or `"3.5pi"`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Angle(pub f64);

pub fn parse_angle(text: &str) -> std::result::Result<f64, String> {
    let s: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    let (num, den) = match s.split_once('/') {
        Some((n, d)) => (n, Some(d)),
        None => (s.as_str(), None),
    };
    let factor = |f: &str| -> std::result::Result<f64, String> {
        let (sign, body) = match f.strip_prefix('-') {
            Some(rest) => (-1.0, rest),
            None => (1.0, f),
        };
        let value = if body == "pi" || body == "π" {
            PI
        } else if let Some(k) = body.strip_suffix("pi").or_else(|| body.strip_suffix('π')) {
            k.parse::<f64>().map_err(|_| format!("cannot parse {text:?}"))? * PI
        } else {
            body.parse::<f64>().map_err(|_| format!("cannot parse {text:?}"))?
        };
        Ok(sign * value)
    };
    if num.is_empty() {
        return Err(format!("cannot parse {text:?}"));
    }
    let mut value = 1.0;
    for f in num.split('*') {
        value *= factor(f)?;
    }
    if let Some(d) = den {
        let d = factor(d)?;
        if d == 0.0 {
            return Err(format!("division by zero in {text:?}"));
        }
        value /= d;
    }
    if !value.is_finite() {
        return Err(format!("{text:?} is not finite"));
    }
    Ok(value)
}

impl<'de> Deserialize<'de> for Angle {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct V;
        impl Visitor<'_> for V {
            type Value = Angle;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a number or an expression such as \"pi/6\"")
            }
            fn visit_f64<E: de::Error>(self, v: f64) -> std::result::Result<Angle, E> {
                Ok(Angle(v))
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<Angle, E> {
                Ok(Angle(v as f64))
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<Angle, E> {
                Ok(Angle(v as f64))
            }
            fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<Angle, E> {
                parse_angle(v).map(Angle).map_err(E::custom)
            }
        }
        d.deserialize_any(V)
    }
}

impl Serialize for Angle {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_f64(self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    Linear,
    Log,
}

/// Either an explicit list or `points` values spaced between `start` and `stop`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Grid {
    List(Vec<Angle>),
    Range {
        start: Angle,
        stop: Angle,
        points: usize,
        scale: Scale,
    },
}

impl Grid {
    pub fn values(&self) -> Vec<f64> {
        match self {
            Grid::List(v) => v.iter().map(|a| a.0).collect(),
            Grid::Range {
                start,
                stop,
                points,
                scale,
            } => {
                let (a, b, n) = (start.0, stop.0, *points);
                (0..n)
                    .map(|i| {
                        if i == 0 {
                            return a;
                        }
                        if i + 1 == n {
                            return b;
                        }
                        let t = i as f64 / (n - 1) as f64;
                        match scale {
                            Scale::Linear => a + t * (b - a),
                            Scale::Log => 10f64.powf(a.log10() + t * (b.log10() - a.log10())),
                        }
                    })
                    .collect()
            }
        }
    }

    fn validate(&self, field: &str) -> std::result::Result<(), String> {
        let v = self.values();
        if v.is_empty() {
            return Err(format!("{field}: grid is empty"));
        }
        if let Grid::Range { start, stop, scale: Scale::Log, .. } = self {
            if !(start.0 > 0.0 && stop.0 > 0.0) {
                return Err(format!("{field}: a log grid needs positive endpoints"));
            }
        }
        if v.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
            return Err(format!("{field}: all values must be positive"));
        }
        Ok(())
    }
}

/// Code, rotation operators and loop angle shared by the protocol commands.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathConfig {
    /// Builtin code name.
    pub code: String,
    /// JSON code definition that replaces the builtin code when set.
    #[serde(default)]
    pub code_file: Option<String>,
    pub h: String,
    pub x: String,
    pub theta: Angle,
}

impl PathConfig {
    fn defaults(theta: f64) -> Self {
        PathConfig {
            code: "bitflip3".into(),
            code_file: None,
            h: "XXX".into(),
            x: "XIZ".into(),
            theta: Angle(theta),
        }
    }

    pub fn load_code(&self) -> Result<StabilizerCode> {
        match &self.code_file {
            Some(file) => {
                let text = std::fs::read_to_string(file).map_err(|source| CliError::Read {
                    path: file.into(),
                    source,
                })?;
                Ok(StabilizerCode::from_json(&self.code, &text)?)
            }
            None => Ok(builtin_code(&self.code)?),
        }
    }

    pub fn build(&self) -> Result<HolonomicPath> {
        let code = self.load_code()?;
        let h = self.h.parse()?;
        let x = self.x.parse()?;
        Ok(HolonomicPath::new(code, h, x, self.theta.0)?)
    }
}

fn default_discrete_path() -> PathConfig {
    PathConfig::defaults(PI / 6.0)
}

fn default_continuous_path() -> PathConfig {
    PathConfig::defaults(PI / 2.0)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DiscreteSweepConfig {
    pub path: PathConfig,
    /// Measurement increments δφ.
    pub dphi: Grid,
    pub policies: Vec<CorrectionPolicy>,
    pub trajectories: usize,
    pub success_threshold: f64,
    pub mode: MeasurementMode,
    pub initial_logical: usize,
    pub master_seed: u64,
}

impl Default for DiscreteSweepConfig {
    fn default() -> Self {
        DiscreteSweepConfig {
            path: default_discrete_path(),
            dphi: Grid::List(
                [800, 400, 200, 100, 50, 25]
                    .iter()
                    .map(|&n| Angle(2.0 * PI / n as f64))
                    .collect(),
            ),
            policies: vec![CorrectionPolicy::None, CorrectionPolicy::CorrectToCode],
            trajectories: 2000,
            success_threshold: 0.99,
            mode: MeasurementMode::Full,
            initial_logical: 0,
            master_seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ContinuousSweepConfig {
    pub path: PathConfig,
    pub kappa: f64,
    /// ω/κ values of the deterministic curve (formula and moment equations).
    pub omega_over_kappa: Grid,
    /// ω/κ values simulated with the stochastic ensemble.
    pub sse_omega_over_kappa: Grid,
    pub trajectories: usize,
    pub kappa_dt: f64,
    pub generators: holozeno::continuous::GeneratorChoice,
    pub master_seed: u64,
}

impl Default for ContinuousSweepConfig {
    fn default() -> Self {
        ContinuousSweepConfig {
            path: default_continuous_path(),
            kappa: 1.0,
            omega_over_kappa: Grid::Range {
                start: Angle(1e-3),
                stop: Angle(1e-1),
                points: 21,
                scale: Scale::Log,
            },
            sse_omega_over_kappa: Grid::List(vec![Angle(0.005), Angle(0.02), Angle(0.05)]),
            trajectories: 1000,
            kappa_dt: 1e-3,
            generators: holozeno::continuous::GeneratorChoice::SingleAnticommuting,
            master_seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DetectorCalibConfig {
    /// Window lengths κΔt.
    pub kappa_window: Vec<f64>,
    pub thresholds: Vec<f64>,
    /// Window after which the synthetic current steps from +1 to −1.
    pub step_window: usize,
    pub trials: usize,
    /// Windows in the exported example trace.
    pub trace_windows: usize,
    pub master_seed: u64,
}

impl Default for DetectorCalibConfig {
    fn default() -> Self {
        DetectorCalibConfig {
            kappa_window: vec![0.25, 0.5, 1.0],
            thresholds: vec![4.0, 8.0, 12.0],
            step_window: 200,
            trials: 2000,
            trace_windows: 240,
            master_seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QecCodeConfig {
    pub code: String,
    /// Logical operator H for the search.
    pub h: String,
    /// X used for the ancilla construction when the code needs ancillas.
    #[serde(default)]
    pub augment_x: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QecReportConfig {
    pub codes: Vec<QecCodeConfig>,
    /// Largest error weight of the correctable set.
    pub max_error_weight: usize,
    pub max_candidates: usize,
    /// Valid X listed per code (the search itself is exhaustive up to `max_candidates`).
    pub max_listed: usize,
    /// Loop samples of the rotated Knill–Laflamme check.
    pub rotated_kl_samples: usize,
    pub theta: Angle,
}

impl Default for QecReportConfig {
    fn default() -> Self {
        let entry = |code: &str, h: &str, x: Option<&str>| QecCodeConfig {
            code: code.into(),
            h: h.into(),
            augment_x: x.map(Into::into),
        };
        QecReportConfig {
            codes: vec![
                entry("shor9", "ZIIZIIZII", None),
                entry("steane7", "ZZZZZZZ", Some("XZIIIII")),
                entry("perfect5", "ZZZZZ", Some("XIIII")),
            ],
            max_error_weight: 1,
            max_candidates: 1_000_000,
            max_listed: 20,
            rotated_kl_samples: 7,
            theta: Angle(PI / 4.0),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FokkerPlanckConfig {
    pub omega_over_kappa: f64,
    pub kappa: f64,
    /// Pole of the deterministic drift used as the lower flux limit.
    pub x0: Angle,
    /// Points of the density table over [0, π).
    pub points: usize,
    pub sde: bool,
    pub kappa_dt: f64,
    /// Simulated time in units of 1/κ.
    pub kappa_t_end: f64,
    pub kappa_burn_in: f64,
    pub kappa_thin: f64,
    pub histogram_bins: usize,
    pub master_seed: u64,
}

impl Default for FokkerPlanckConfig {
    fn default() -> Self {
        FokkerPlanckConfig {
            omega_over_kappa: 0.01,
            kappa: 1.0,
            x0: Angle(0.0),
            points: 2000,
            sde: true,
            kappa_dt: 1e-4,
            kappa_t_end: 1e3,
            kappa_burn_in: 10.0,
            kappa_thin: 2.0,
            histogram_bins: 50,
            master_seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SingleDiscrete {
    #[serde(default = "default_discrete_path")]
    pub path: PathConfig,
    pub dphi: Angle,
    #[serde(default)]
    pub policy: Option<CorrectionPolicy>,
    #[serde(default)]
    pub forced_jump_angle: Option<Angle>,
    #[serde(default)]
    pub master_seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SingleContinuous {
    #[serde(default = "default_continuous_path")]
    pub path: PathConfig,
    #[serde(default = "one")]
    pub kappa: f64,
    pub omega_over_kappa: f64,
    #[serde(default = "default_kappa_dt")]
    pub kappa_dt: f64,
    #[serde(default)]
    pub detector: bool,
    #[serde(default = "default_kappa_window")]
    pub kappa_window: f64,
    #[serde(default = "default_threshold")]
    pub threshold: f64,
    #[serde(default)]
    pub correction: Option<Target>,
    #[serde(default)]
    pub master_seed: u64,
}

fn one() -> f64 {
    1.0
}

fn default_kappa_dt() -> f64 {
    1e-3
}

fn default_kappa_window() -> f64 {
    0.5
}

fn default_threshold() -> f64 {
    12.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "protocol", rename_all = "kebab-case")]
pub enum SingleRunConfig {
    Discrete(SingleDiscrete),
    Continuous(SingleContinuous),
}

/// Reads a TOML file, or returns the defaults when no file is given.
pub fn load<T: for<'de> Deserialize<'de> + Default>(path: Option<&Path>) -> Result<T> {
    match path {
        None => Ok(T::default()),
        Some(p) => parse_file(p),
    }
}

pub fn parse_file<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Read {
        path: path.into(),
        source,
    })?;
    parse_str(&text, &path.display().to_string())
}

pub fn parse_str<T: for<'de> Deserialize<'de>>(text: &str, origin: &str) -> Result<T> {
    toml::from_str(text).map_err(|e| CliError::Config {
        path: origin.into(),
        message: e.to_string().trim_end().to_string(),
    })
}

fn bad(field: &str, why: impl fmt::Display) -> CliError {
    CliError::Parameter(format!("{field}: {why}"))
}

fn positive(field: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(bad(field, format!("must be positive, got {v}")))
    }
}

impl DiscreteSweepConfig {
    pub fn validate(&self) -> Result<()> {
        self.dphi.validate("dphi").map_err(CliError::Parameter)?;
        if self.policies.is_empty() {
            return Err(bad("policies", "at least one policy is required"));
        }
        if self.trajectories < 100 {
            return Err(bad("trajectories", "need at least 100"));
        }
        Ok(())
    }
}

impl ContinuousSweepConfig {
    pub fn validate(&self) -> Result<()> {
        positive("kappa", self.kappa)?;
        positive("kappa_dt", self.kappa_dt)?;
        self.omega_over_kappa.validate("omega_over_kappa").map_err(CliError::Parameter)?;
        self.sse_omega_over_kappa
            .validate("sse_omega_over_kappa")
            .map_err(CliError::Parameter)?;
        if self.trajectories < 2 {
            return Err(bad("trajectories", "need at least 2"));
        }
        Ok(())
    }
}

impl DetectorCalibConfig {
    pub fn validate(&self) -> Result<()> {
        if self.kappa_window.is_empty() || self.thresholds.is_empty() {
            return Err(bad("kappa_window/thresholds", "grids must be non-empty"));
        }
        for &w in &self.kappa_window {
            positive("kappa_window", w)?;
        }
        for &h in &self.thresholds {
            positive("thresholds", h)?;
        }
        if self.trials == 0 || self.trace_windows == 0 {
            return Err(bad("trials/trace_windows", "must be at least 1"));
        }
        Ok(())
    }
}

impl QecReportConfig {
    pub fn validate(&self) -> Result<()> {
        if self.codes.is_empty() {
            return Err(bad("codes", "at least one code is required"));
        }
        if self.rotated_kl_samples == 0 {
            return Err(bad("rotated_kl_samples", "must be at least 1"));
        }
        Ok(())
    }
}

impl FokkerPlanckConfig {
    pub fn validate(&self) -> Result<()> {
        positive("omega_over_kappa", self.omega_over_kappa)?;
        positive("kappa", self.kappa)?;
        positive("kappa_dt", self.kappa_dt)?;
        positive("kappa_thin", self.kappa_thin)?;
        if !(self.kappa_t_end > self.kappa_burn_in && self.kappa_burn_in >= 0.0) {
            return Err(bad("kappa_t_end", "must exceed kappa_burn_in"));
        }
        if self.points == 0 || self.histogram_bins == 0 {
            return Err(bad("points/histogram_bins", "must be at least 1"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn angle_expressions() {
        let close = |s: &str, v: f64| assert!((parse_angle(s).unwrap() - v).abs() < 1e-15, "{s}");
        close("pi/6", PI / 6.0);
        close("2*pi/400", 2.0 * PI / 400.0);
        close("3.5pi", 3.5 * PI);
        close("-pi / 4", -PI / 4.0);
        close("0.25", 0.25);
        close("π", PI);
        assert!(parse_angle("pie").is_err());
        assert!(parse_angle("pi/0").is_err());
        assert!(parse_angle("").is_err());
    }

    #[test]
    fn grids() {
        let g = Grid::Range {
            start: Angle(1e-3),
            stop: Angle(1e-1),
            points: 3,
            scale: Scale::Log,
        };
        let v = g.values();
        assert!((v[1] - 1e-2).abs() < 1e-15 && (v[2] - 1e-1).abs() < 1e-15);
        assert!(Grid::List(vec![]).validate("dphi").is_err());
    }

    #[test]
    fn defaults_follow_reference_experiments() {
        let d = DiscreteSweepConfig::default();
        assert_eq!(d.trajectories, 2000);
        assert_eq!((d.path.code.as_str(), d.path.h.as_str(), d.path.x.as_str()), ("bitflip3", "XXX", "XIZ"));
        assert!((d.path.theta.0 - PI / 6.0).abs() < 1e-15);
        let c = ContinuousSweepConfig::default();
        assert_eq!((c.kappa, c.trajectories), (1.0, 1000));
        assert!(d.validate().is_ok() && c.validate().is_ok());
    }

    #[test]
    fn toml_parsing_and_diagnostics() {
        let c: DiscreteSweepConfig = parse_str(
            "trajectories = 500\ndphi = [\"2*pi/400\", 0.01]\npolicies = [\"correct-to-error\"]\n[path]\ncode = \"bitflip3\"\nh = \"XXX\"\nx = \"XIZ\"\ntheta = \"pi/3\"\n",
            "t.toml",
        )
        .unwrap();
        assert_eq!(c.trajectories, 500);
        assert_eq!(c.policies, vec![CorrectionPolicy::CorrectToError]);
        assert!((c.dphi.values()[0] - 2.0 * PI / 400.0).abs() < 1e-15);

        let e = parse_str::<DiscreteSweepConfig>("trajectorys = 5\n", "t.toml").unwrap_err();
        let msg = e.to_string();
        assert!(msg.contains("trajectorys") && msg.contains("line 1"), "{msg}");
        assert_eq!(e.exit_code(), 2);

        let e = parse_str::<DiscreteSweepConfig>("dphi = []\n", "t.toml").unwrap();
        assert!(e.validate().is_err());

        let r = parse_str::<DiscreteSweepConfig>("[path]\nh = \"XXX\"\nx = \"XIZ\"\ntheta = 1\n", "t.toml");
        assert!(r.unwrap_err().to_string().contains("code"));
    }

    #[test]
    fn single_run_is_tagged_by_protocol() {
        let c: SingleRunConfig = parse_str("protocol = \"continuous\"\nomega_over_kappa = 0.02\n", "s.toml").unwrap();
        assert!(matches!(c, SingleRunConfig::Continuous(ref s) if s.kappa == 1.0 && s.threshold == 12.0));
        assert!(parse_str::<SingleRunConfig>("protocol = \"discrete\"\ndphi = 0.01\nbogus = 1\n", "s.toml").is_err());
    }
}
