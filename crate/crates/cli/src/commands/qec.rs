use std::path::{Path, PathBuf};

use holozeno::codes::StabilizerCode;
use holozeno::holonomy::HolonomicPath;
use holozeno::pauli::PauliOperator;
use holozeno::qecc::{
    ancilla_requirement, augment_code, kl_check, prop7_check, rotated_kl_residual, search_x, theorem4_check,
    AncillaReport, ConditionReport, CorrectableSet, RotatedKlReport, SearchConstraints,
};
use serde::Serialize;

use crate::config::{QecCodeConfig, QecReportConfig};
use crate::error::{CliError, Result};
use crate::output::{write_json, Report};

#[derive(Serialize)]
struct SearchSummary {
    count: usize,
    listed: Vec<PauliOperator>,
    enumerated: usize,
    truncated: bool,
}

#[derive(Serialize)]
struct PathChecks {
    h: PauliOperator,
    x: PauliOperator,
    theorem4: ConditionReport,
    prop7_passed: bool,
    rotated_kl: RotatedKlReport,
}

#[derive(Serialize)]
struct Augmented {
    n: usize,
    generators: Vec<PauliOperator>,
    kl_passed: bool,
    checks: PathChecks,
}

#[derive(Serialize)]
struct CodeReport {
    code: String,
    n: usize,
    k: usize,
    d: usize,
    correctable_errors: usize,
    ancillas: AncillaReport,
    h: PauliOperator,
    search: SearchSummary,
    first_found: Option<PathChecks>,
    augmented: Option<Augmented>,
}

fn checks(
    code: &StabilizerCode,
    h: &PauliOperator,
    x: &PauliOperator,
    e: &CorrectableSet,
    cfg: &QecReportConfig,
) -> Result<PathChecks> {
    let path = HolonomicPath::new(code.clone(), h.clone(), x.clone(), cfg.theta.0)?;
    Ok(PathChecks {
        h: h.clone(),
        x: x.clone(),
        theorem4: theorem4_check(code, h, x, e)?,
        prop7_passed: prop7_check(code, h, x, e)?.passed,
        rotated_kl: rotated_kl_residual(&path, e, cfg.rotated_kl_samples)?,
    })
}

fn report(entry: &QecCodeConfig, cfg: &QecReportConfig) -> Result<CodeReport> {
    let code = holozeno::codes::builtin_code(&entry.code)?;
    let h: PauliOperator = entry.h.parse()?;
    let e = CorrectableSet::up_to_weight(code.n(), cfg.max_error_weight);
    let ancillas = ancilla_requirement(&code, &e);
    let result = search_x(
        &code,
        &h,
        &e,
        SearchConstraints {
            max_candidates: cfg.max_candidates,
            ..SearchConstraints::default()
        },
    )?;
    let first_found = match result.found.first() {
        Some(x) => Some(checks(&code, &h, x, &e, cfg)?),
        None => None,
    };
    let augmented = match (ancillas.s, &entry.augment_x) {
        (0, _) => None,
        (_, None) => {
            return Err(CliError::Parameter(format!(
                "code {} needs {} ancillas; set augment_x",
                entry.code, ancillas.s
            )))
        }
        (s, Some(x)) => {
            let (aug, ha, xa) = augment_code(&code, s, &h, &x.parse()?)?;
            let ea = CorrectableSet::up_to_weight(aug.n(), cfg.max_error_weight);
            Some(Augmented {
                n: aug.n(),
                generators: aug.generators().to_vec(),
                kl_passed: kl_check(&aug, &ea)?.passed(),
                checks: checks(&aug, &ha, &xa, &ea, cfg)?,
            })
        }
    };
    Ok(CodeReport {
        code: entry.code.clone(),
        n: code.n(),
        k: code.k(),
        d: code.d(),
        correctable_errors: e.len(),
        ancillas,
        h,
        search: SearchSummary {
            count: result.found.len(),
            listed: result.found.iter().take(cfg.max_listed).cloned().collect(),
            enumerated: result.enumerated,
            truncated: result.truncated,
        },
        first_found,
        augmented,
    })
}

pub fn run(cfg: &QecReportConfig, out: &Path) -> Result<Vec<PathBuf>> {
    cfg.validate()?;
    let reports = cfg.codes.iter().map(|c| report(c, cfg)).collect::<Result<Vec<_>>>()?;
    Ok(vec![write_json(
        out,
        "qec_report.json",
        &Report::new("qec-report", 0, cfg, &reports),
    )?])
}
