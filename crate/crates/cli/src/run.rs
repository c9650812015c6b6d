//! `steklov-lab run <config>`.

use std::fs;
use std::io;
use std::path::Path;

use steklov_core::bounds::{effective_kappa, BoundReport, BOUNDARY_RICCI};
use steklov_core::error::Error;
use steklov_core::spaceform::CurvatureCase;

use crate::config::{CaseSpec, Check, ConfigError, Geometry, Method, Param, RunConfig};
use crate::pipeline::{self, CheckOutput, IdentityRow, Prepared};
use crate::report::{self, CaseSummary, CheckSummary, Status, Summary};

/// Files produced by a run, in write order, with the summary.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub files: Vec<(&'static str, String)>,
    pub summary: Summary,
}

impl RunOutcome {
    pub fn exit_code(&self) -> i32 {
        match self.summary.status {
            Status::Pass => 0,
            Status::Fail | Status::Failed => 1,
        }
    }

    pub fn file(&self, name: &str) -> Option<&str> {
        self.files.iter().find(|(n, _)| *n == name).map(|(_, s)| s.as_str())
    }

    pub fn write(&self, dir: &Path) -> io::Result<()> {
        fs::create_dir_all(dir)?;
        for (name, contents) in &self.files {
            fs::write(dir.join(name), contents)?;
        }
        fs::write(dir.join(report::SUMMARY_FILE), self.summary.to_json())
    }
}

fn input_error(line: Option<usize>, message: impl Into<String>) -> ConfigError {
    ConfigError {
        line,
        message: message.into(),
    }
}

fn method_name(m: &Method) -> String {
    match m {
        Method::Exact => "exact".into(),
        Method::Fem { refinement, mass } => format!("fem(refinement={refinement}, mass={mass:?})").to_lowercase(),
    }
}

fn prepare(config: &RunConfig) -> Result<Prepared, Error> {
    match (&config.geometry, &config.method) {
        (Geometry::Ball(b), _) => pipeline::prepare_ball(b, config.count),
        (Geometry::Planar { curve, metric }, Method::Fem { refinement, mass }) => {
            pipeline::prepare_fem(curve.build(metric)?, *metric, *refinement, *mass, config.count)
        }
        (Geometry::Planar { .. }, Method::Exact) => {
            Err(Error::InvalidArgument("exact method requires ball geometry".into()))
        }
    }
}

/// Case from the `[case]` overrides, filling `auto` entries from the domain.
pub fn resolve_case(spec: &CaseSpec, p: &Prepared) -> Result<CurvatureCase, ConfigError> {
    let explicit = spec.id.is_some()
        && [spec.a, spec.kappa_minus, spec.kappa_plus]
            .iter()
            .all(|x| matches!(x, Param::Value(_)));
    let base = if explicit {
        None
    } else {
        Some(pipeline::automatic_case(p).map_err(|e| input_error(spec.line, e.to_string()))?)
    };
    let pick = |x: Param, auto: fn(&CurvatureCase) -> f64| match (x, &base) {
        (Param::Value(v), _) => v,
        (Param::Auto, Some(b)) => auto(b),
        (Param::Auto, None) => unreachable!("explicit cases have no auto entries"),
    };
    let id = spec.id.unwrap_or_else(|| base.as_ref().expect("auto id").case_id);
    let case = CurvatureCase::new(
        id,
        pick(spec.a, |c| c.a),
        pick(spec.kappa_minus, |c| c.kappa_minus),
        pick(spec.kappa_plus, |c| c.kappa_plus),
        p.n,
    );
    case.map_err(|e| input_error(spec.line, e.to_string()))
}

struct Collected {
    checks: Vec<CheckSummary>,
    bounds: Vec<BoundReport>,
    identities: Vec<IdentityRow>,
    weyl: Option<Vec<(usize, f64)>>,
}

fn run_check(
    check: Check,
    config: &RunConfig,
    tolerance: Option<f64>,
    case: &CurvatureCase,
    p: &Prepared,
    checklist: &steklov_core::bounds::HypothesisChecklist,
) -> Result<CheckOutput, Error> {
    let bound_tol = pipeline::bound_tolerance(p, case, tolerance.or(config.tolerance));
    match check {
        Check::Theorem1 => {
            let j = config.j_max.unwrap_or_else(|| pipeline::default_j_max(p));
            pipeline::theorem1(case, p, j, bound_tol)
        }
        Check::Weyl => pipeline::weyl(p, config.j_max.unwrap_or(p.max_index())),
        Check::Corollary1 => pipeline::corollary1(case, checklist, p, config.j_max.unwrap_or(p.max_index())),
        Check::Buser => pipeline::buser(checklist, p, config.j_max.unwrap_or(p.max_index())),
        Check::Pohozaev => pipeline::pohozaev(case, p),
        Check::Proposition1 => {
            let j = config.j_max.unwrap_or_else(|| pipeline::default_j_max(p));
            pipeline::proposition1(case, p, j, bound_tol)
        }
        Check::QBounds => pipeline::q_bounds(case, p),
    }
}

/// Runs a validated configuration. Input errors found while resolving the
/// case or its hypotheses are returned as `Err`; runtime failures yield a
/// `FAILED` outcome with the outputs produced so far.
pub fn execute(config: &RunConfig, tolerance: Option<f64>) -> Result<RunOutcome, ConfigError> {
    let mut summary = Summary {
        status: Status::Pass,
        geometry: config.geometry.describe(),
        method: method_name(&config.method),
        count: config.count,
        case: None,
        checks: Vec::new(),
        passed: 0,
        failed: 0,
        error: None,
    };
    let failed = |mut summary: Summary, files, e: Error| {
        summary.status = Status::Failed;
        summary.error = Some(e.to_string());
        Ok(RunOutcome { files, summary })
    };

    let p = match prepare(config) {
        Ok(p) => p,
        Err(e @ Error::InvalidArgument(_)) => return Err(input_error(None, e.to_string())),
        Err(e) => return failed(summary, Vec::new(), e),
    };
    let mut files = vec![
        (report::STEKLOV_FILE, report::spectrum_csv(&p.sigma, config.count)),
        (report::LAPLACIAN_FILE, report::spectrum_csv(&p.lambda, config.count)),
    ];
    if config.checks.is_empty() {
        return Ok(RunOutcome { files, summary });
    }

    let case = resolve_case(&config.case, &p)?;
    summary.case = Some(CaseSummary {
        id: case.case_id.to_string(),
        a: case.a,
        kappa_minus: case.kappa_minus,
        kappa_plus: case.kappa_plus,
        kappa_tilde: effective_kappa(&case).kappa_tilde,
    });
    let checklist = pipeline::hypotheses(&p, &case);
    let needs_ricci = config.checks.contains(&Check::Buser);
    if let Some(c) = checklist
        .clauses
        .iter()
        .find(|c| !c.holds && (c.name != BOUNDARY_RICCI || needs_ricci))
    {
        return Err(input_error(
            config.case.line,
            format!("hypothesis {} violated: {}", c.name, c.detail),
        ));
    }

    let mut out = Collected {
        checks: Vec::new(),
        bounds: Vec::new(),
        identities: Vec::new(),
        weyl: None,
    };
    let mut error = None;
    for &check in &config.checks {
        match run_check(check, config, tolerance, &case, &p, &checklist) {
            Ok(r) => {
                out.checks.push(CheckSummary {
                    name: check.name().into(),
                    pass: r.pass,
                    detail: r.detail,
                });
                out.bounds.extend(r.bounds);
                out.identities.extend(r.identities);
                if check == Check::Weyl {
                    out.weyl = Some(r.weyl);
                }
            }
            Err(e) => {
                error = Some(e);
                break;
            }
        }
    }

    files.push((report::BOUNDS_FILE, report::bounds_csv(&out.bounds)));
    if !out.identities.is_empty() {
        let label = config.geometry.describe().replace(',', ";");
        files.push((
            report::IDENTITIES_FILE,
            report::identities_csv(out.identities.iter().map(|r| (label.as_str(), r))),
        ));
    }
    if let Some(w) = &out.weyl {
        files.push((report::WEYL_FILE, report::weyl_dat(w)));
    }
    summary.passed = out.checks.iter().filter(|c| c.pass).count();
    summary.failed = out.checks.len() - summary.passed;
    summary.checks = out.checks;
    if let Some(e) = error {
        return failed(summary, files, e);
    }
    if summary.failed > 0 {
        summary.status = Status::Fail;
    }
    Ok(RunOutcome { files, summary })
}
