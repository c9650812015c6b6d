//! Spectra and check suites shared by `run` and `matrix`.

use std::f64::consts::PI;

use steklov_core::bounds::{
    auto_case, check_buser, check_corollary1, check_theorem1, effective_kappa, validate_hypotheses, weyl_ratio,
    BoundReport, DomainDescriptor, FitReport, HypothesisChecklist, BOUNDARY_RICCI, EXACT_TOLERANCE,
    FEM_SLACK_FRACTION,
};
use steklov_core::error::{Error, Result};
use steklov_core::exact::{boundary_area, boundary_laplacian_spectrum, steklov_ball_spectrum, BallDomain};
use steklov_core::fem::{
    boundary_laplacian_spectrum_curve, build_mesh, harmonic_extension, solve_steklov, BoundaryCurve, ConformalMetric, MassMode, Mesh,
    SteklovSolution,
};
use steklov_core::identity::{
    build_f_field, distance_to_boundary, eta_field, pohozaev_residual, position_field, proposition1_check,
    q_integral_check, DistanceScheme,
};
use steklov_core::spaceform::{max_tube_width, CurvatureCase};
use steklov_core::spectrum::SpectrumTable;

/// Samples used to estimate the curvature range of a smooth curve.
pub const CURVATURE_SAMPLES: usize = 4096;
/// Default largest index for theorem1 and proposition1 on finite element spectra.
pub const FEM_J_MAX: usize = 20;
/// Relative band around `2π` for the Weyl ratio.
pub const WEYL_BAND: f64 = 0.1;
/// Largest admissible drift of a fitted constant.
pub const DRIFT_LIMIT: f64 = 0.05;
/// `C <= (1 + CROSS_MARGIN) √c` between the corollary and Buser fits.
pub const CROSS_MARGIN: f64 = 0.1;
/// Bound on `|residual| / |I₄|` for the position field.
pub const POSITION_RESIDUAL_LIMIT: f64 = 1e-3;
/// Bound on `|residual| / |I₄|` for the truncated field.
pub const TRUNCATED_RESIDUAL_LIMIT: f64 = 1e-2;
/// Truncated field width as a fraction of the admissible width.
pub const TRUNCATED_WIDTH_FRACTION: f64 = 0.5;
/// Relative agreement of the quadrature and eigenrelation normal energies.
pub const FLUX_LIMIT: f64 = 0.02;
/// Tube widths of the Q-form sweep, as fractions of the admissible width.
pub const Q_SWEEP: [f64; 4] = [0.25, 0.5, 0.75, 0.95];
/// Eigenfunctions used by the Q-form sweep.
pub const Q_MODES: [usize; 3] = [1, 2, 3];

pub struct FemData {
    pub curve: BoundaryCurve,
    pub mesh: Mesh,
    pub metric: ConformalMetric,
    pub solution: SteklovSolution,
    pub refinement: u32,
}

/// Spectra of one domain together with what the checks need.
pub struct Prepared {
    /// Number of flattened eigenvalues requested.
    pub count: usize,
    pub n: usize,
    pub area: f64,
    pub sigma: SpectrumTable,
    pub lambda: SpectrumTable,
    /// Certified curvature data; `None` for polygons.
    pub domain: Option<DomainDescriptor>,
    pub fem: Option<FemData>,
}

impl Prepared {
    /// Largest index requested and available in both tables.
    pub fn max_index(&self) -> usize {
        self.count.min(self.sigma.flat_len()).min(self.lambda.flat_len()) - 1
    }
}

pub fn prepare_ball(ball: &BallDomain, count: usize) -> Result<Prepared> {
    Ok(Prepared {
        count,
        n: ball.n(),
        area: boundary_area(ball),
        sigma: steklov_ball_spectrum(ball, count)?,
        lambda: boundary_laplacian_spectrum(ball, count)?,
        domain: Some(DomainDescriptor::Ball(*ball)),
        fem: None,
    })
}

pub fn prepare_fem(
    curve: BoundaryCurve,
    metric: ConformalMetric,
    refinement: u32,
    mass: MassMode,
    count: usize,
) -> Result<Prepared> {
    let mesh = build_mesh(&curve, refinement)?;
    if count > mesh.boundary_count() {
        return Err(Error::InvalidArgument(format!(
            "count {count} exceeds the {} boundary vertices at refinement {refinement}",
            mesh.boundary_count()
        )));
    }
    let solution = solve_steklov(&mesh, &metric, count, mass)?;
    let length = solution.boundary_length();
    let domain = metric
        .curvature_range(&curve, CURVATURE_SAMPLES)
        .map(|(kappa_min, kappa_max)| DomainDescriptor::Curve {
            metric,
            kappa_min,
            kappa_max,
        });
    Ok(Prepared {
        count,
        n: 1,
        area: length,
        sigma: solution.spectrum()?,
        lambda: boundary_laplacian_spectrum_curve(length, count)?,
        domain,
        fem: Some(FemData {
            curve,
            mesh,
            metric,
            solution,
            refinement,
        }),
    })
}

/// Row of `identities_report.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct IdentityRow {
    pub refinement: u32,
    pub h: Option<f64>,
    pub j: usize,
    pub check: &'static str,
    pub value: f64,
    pub lo: f64,
    pub hi: f64,
    pub pass: bool,
}

impl IdentityRow {
    pub fn slack(&self) -> f64 {
        (self.value - self.lo).min(self.hi - self.value)
    }
}

#[derive(Debug, Clone, Default)]
pub struct CheckOutput {
    pub pass: bool,
    pub detail: String,
    pub bounds: Option<BoundReport>,
    pub identities: Vec<IdentityRow>,
    pub weyl: Vec<(usize, f64)>,
}

/// Case from the domain's curvature data, or an error for polygons.
pub fn automatic_case(p: &Prepared) -> Result<CurvatureCase> {
    match &p.domain {
        Some(d) => auto_case(d),
        None => Err(Error::InvalidArgument("polygonal domains need explicit case parameters".into())),
    }
}

/// Descriptor used for hypothesis validation. Polygons take the curvature
/// range asserted by the case.
pub fn descriptor_for(p: &Prepared, case: &CurvatureCase) -> Option<DomainDescriptor> {
    match (&p.domain, &p.fem) {
        (Some(d), _) => Some(*d),
        (None, Some(f)) => Some(DomainDescriptor::Curve {
            metric: f.metric,
            kappa_min: case.kappa_minus,
            kappa_max: case.kappa_plus,
        }),
        (None, None) => None,
    }
}

pub fn hypotheses(p: &Prepared, case: &CurvatureCase) -> HypothesisChecklist {
    match descriptor_for(p, case) {
        Some(d) => validate_hypotheses(case, &d),
        None => HypothesisChecklist::default(),
    }
}

fn fem(p: &Prepared) -> Result<&FemData> {
    p.fem
        .as_ref()
        .ok_or_else(|| Error::InvalidArgument("check requires a finite element domain".into()))
}

fn limit_index(p: &Prepared, j_max: usize) -> Result<usize> {
    if j_max > p.max_index() {
        return Err(Error::DimensionMismatch(format!(
            "index {j_max} requested from {} eigenvalues",
            p.max_index() + 1
        )));
    }
    Ok(j_max)
}

/// Default `j_max` of the bound checks.
pub fn default_j_max(p: &Prepared) -> usize {
    match p.fem {
        Some(_) => FEM_J_MAX.min(p.max_index()),
        None => p.max_index(),
    }
}

/// Tolerance of the bound checks: `1e-9` on exact spectra and `1%·κ̃` on
/// finite element spectra, unless overridden.
pub fn bound_tolerance(p: &Prepared, case: &CurvatureCase, over: Option<f64>) -> f64 {
    over.unwrap_or_else(|| match p.fem {
        Some(_) => FEM_SLACK_FRACTION * effective_kappa(case).kappa_tilde,
        None => EXACT_TOLERANCE,
    })
}

/// Smallest slack over `j >= 1`; `j = 0` is tight for every case.
fn positive_index_slack(report: &BoundReport) -> f64 {
    report
        .records
        .iter()
        .filter(|r| r.j > 0)
        .map(|r| r.slack)
        .fold(f64::INFINITY, f64::min)
}

pub fn theorem1(case: &CurvatureCase, p: &Prepared, j_max: usize, tolerance: f64) -> Result<CheckOutput> {
    let j_max = limit_index(p, j_max)?;
    let report = check_theorem1(case, &p.sigma, &p.lambda, j_max, tolerance)?;
    let detail = match report.first_violation() {
        Some(r) => format!(
            "violations={} first j={} ({}) slack={:.3e}",
            report.violations(),
            r.j,
            r.ineq_id,
            r.slack
        ),
        None => format!(
            "violations=0 j<={j_max} kappa={:.6} min_slack(j>=1)={:.3e}",
            effective_kappa(case).kappa_tilde,
            positive_index_slack(&report)
        ),
    };
    Ok(CheckOutput {
        pass: report.passed(),
        detail,
        bounds: Some(report),
        ..CheckOutput::default()
    })
}

/// Weyl ratios for `1 <= j <= j_max`; passes when the top quartile lies
/// within [`WEYL_BAND`] of `2π`.
pub fn weyl(p: &Prepared, j_max: usize) -> Result<CheckOutput> {
    let j_max = limit_index(p, j_max)?;
    if j_max == 0 {
        return Err(Error::InvalidArgument("weyl needs at least two eigenvalues".into()));
    }
    let rows = (1..=j_max)
        .map(|j| Ok((j, weyl_ratio(&p.sigma, p.area, p.n, j)?)))
        .collect::<Result<Vec<_>>>()?;
    let from = (3 * j_max).div_ceil(4).max(1);
    let worst = rows
        .iter()
        .filter(|(j, _)| *j >= from)
        .map(|(_, r)| (r - 2.0 * PI).abs() / (2.0 * PI))
        .fold(0.0, f64::max);
    Ok(CheckOutput {
        pass: worst <= WEYL_BAND,
        detail: format!("max|ratio-2pi|/2pi={worst:.4} over j in [{from}, {j_max}]"),
        weyl: rows,
        ..CheckOutput::default()
    })
}

fn fit_ok(fit: &FitReport) -> bool {
    fit.fitted.is_finite() && fit.drift.abs() < DRIFT_LIMIT && fit.report.passed()
}

fn buser_fit(checklist: &HypothesisChecklist, p: &Prepared, j_max: usize) -> Result<FitReport> {
    check_buser(checklist, &p.lambda, p.area, p.n, limit_index(p, j_max)?)
}

/// Corollary fit, cross-checked against the Buser fit when the boundary
/// Ricci clause holds.
pub fn corollary1(case: &CurvatureCase, checklist: &HypothesisChecklist, p: &Prepared, j_max: usize) -> Result<CheckOutput> {
    let fit = check_corollary1(case, &p.sigma, p.area, limit_index(p, j_max)?)?;
    let mut pass = fit_ok(&fit);
    let mut detail = format!("C={:.6} drift={:.4}", fit.fitted, fit.drift);
    if checklist.clause(BOUNDARY_RICCI).is_some_and(|c| c.holds) {
        let c = buser_fit(checklist, p, j_max)?.fitted;
        let cross = fit.fitted <= (1.0 + CROSS_MARGIN) * c.sqrt();
        pass &= cross;
        detail.push_str(&format!(" sqrt(c)={:.6} cross={}", c.sqrt(), if cross { "ok" } else { "violated" }));
    }
    Ok(CheckOutput {
        pass,
        detail,
        bounds: Some(fit.report),
        ..CheckOutput::default()
    })
}

pub fn buser(checklist: &HypothesisChecklist, p: &Prepared, j_max: usize) -> Result<CheckOutput> {
    let fit = buser_fit(checklist, p, j_max)?;
    Ok(CheckOutput {
        pass: fit_ok(&fit),
        detail: format!("c={:.6} drift={:.4}", fit.fitted, fit.drift),
        bounds: Some(fit.report),
        ..CheckOutput::default()
    })
}

fn extend_fn(mesh: &Mesh, f: impl Fn([f64; 2]) -> f64) -> Result<Vec<f64>> {
    let b: Vec<f64> = mesh.boundary_ring().iter().map(|&v| f(mesh.vertices()[v])).collect();
    harmonic_extension(mesh, &b)
}

/// Tube width for the truncated field: a fraction of the admissible width,
/// kept inside the domain.
pub fn truncated_width(case: &CurvatureCase, fem: &FemData, fraction: f64) -> Result<f64> {
    let h_bar = max_tube_width(case)?;
    let inradius = distance_to_boundary(&fem.mesh, &fem.curve, &fem.metric)
        .into_iter()
        .fold(0.0, f64::max);
    Ok(fraction * h_bar.min(inradius))
}

/// Identity residuals for `u = Re z` with the position field and
/// `u = Re z²` with the truncated field.
pub fn pohozaev(case: &CurvatureCase, p: &Prepared) -> Result<CheckOutput> {
    let f = fem(p)?;
    let mut rows = Vec::new();
    let u1 = extend_fn(&f.mesh, |x| x[0])?;
    let pos = pohozaev_residual(&f.mesh, &f.metric, &u1, &position_field(&f.mesh))?;
    let bound = POSITION_RESIDUAL_LIMIT * pos.i4.abs();
    rows.push(IdentityRow {
        refinement: f.refinement,
        h: None,
        j: 1,
        check: "pohozaev_position",
        value: pos.residual,
        lo: -bound,
        hi: bound,
        pass: pos.residual.abs() <= bound,
    });

    let h = truncated_width(case, f, TRUNCATED_WIDTH_FRACTION)?;
    let u2 = extend_fn(&f.mesh, |x| x[0] * x[0] - x[1] * x[1])?;
    let field = build_f_field(&f.mesh, &f.metric, &f.curve, case, h)?;
    let tr = pohozaev_residual(&f.mesh, &f.metric, &u2, &field)?;
    let bound = TRUNCATED_RESIDUAL_LIMIT * tr.i4.abs();
    rows.push(IdentityRow {
        refinement: f.refinement,
        h: Some(h),
        j: 2,
        check: "pohozaev_truncated",
        value: tr.residual,
        lo: -bound,
        hi: bound,
        pass: tr.residual.abs() <= bound,
    });
    Ok(CheckOutput {
        pass: rows.iter().all(|r| r.pass),
        detail: format!(
            "position={:.3e} truncated={:.3e} (relative to I4)",
            pos.residual.abs() / pos.i4.abs(),
            tr.residual.abs() / tr.i4.abs()
        ),
        identities: rows,
        ..CheckOutput::default()
    })
}

pub fn proposition1(case: &CurvatureCase, p: &Prepared, j_max: usize, tolerance: f64) -> Result<CheckOutput> {
    let f = fem(p)?;
    let j_max = limit_index(p, j_max)?;
    let (report, energies) = proposition1_check(case, &f.solution, j_max, tolerance)?;
    let mut rows = Vec::new();
    let mut worst: f64 = 0.0;
    for e in energies.iter().filter(|e| e.j > 0) {
        let dev = (e.normal_quadrature - e.normal).abs() / e.normal;
        worst = worst.max(dev);
        rows.push(IdentityRow {
            refinement: f.refinement,
            h: None,
            j: e.j,
            check: "normal_flux",
            value: e.normal_quadrature,
            lo: e.normal * (1.0 - FLUX_LIMIT),
            hi: e.normal * (1.0 + FLUX_LIMIT),
            pass: dev <= FLUX_LIMIT,
        });
    }
    Ok(CheckOutput {
        pass: report.passed() && rows.iter().all(|r| r.pass),
        detail: format!(
            "violations={} j<={j_max} flux_deviation={worst:.4}",
            report.violations()
        ),
        bounds: Some(report),
        identities: rows,
        ..CheckOutput::default()
    })
}

/// Q-form integral against its bounds over a sweep of tube widths.
pub fn q_bounds(case: &CurvatureCase, p: &Prepared) -> Result<CheckOutput> {
    let f = fem(p)?;
    let mut rows = Vec::new();
    let modes: Vec<(usize, Vec<f64>)> = Q_MODES
        .iter()
        .filter(|&&j| j < f.solution.values.len())
        .map(|&j| Ok((j, harmonic_extension(&f.mesh, &f.solution.vectors.column(j))?)))
        .collect::<Result<_>>()?;
    if modes.is_empty() {
        return Err(Error::InvalidArgument("q_bounds needs count >= 2".into()));
    }
    for frac in Q_SWEEP {
        let h = truncated_width(case, f, frac)?;
        let eta = eta_field(&f.mesh, &f.metric, &f.curve, case, h, DistanceScheme::default())?;
        for (j, u) in &modes {
            let q = q_integral_check(&f.mesh, &f.metric, &eta, u)?;
            rows.push(IdentityRow {
                refinement: f.refinement,
                h: Some(h),
                j: *j,
                check: "q_bounds",
                value: q.value,
                lo: q.lo - q.tolerance,
                hi: q.hi + q.tolerance,
                pass: q.pass,
            });
        }
    }
    let failures = rows.iter().filter(|r| !r.pass).count();
    let worst = rows.iter().map(IdentityRow::slack).fold(f64::INFINITY, f64::min);
    Ok(CheckOutput {
        pass: failures == 0,
        detail: format!("{} widths x {} modes failures={failures} worst_slack={worst:.3e}", Q_SWEEP.len(), modes.len()),
        identities: rows,
        ..CheckOutput::default()
    })
}
