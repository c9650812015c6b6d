//! Inequality checks relating Steklov and boundary Laplacian spectra.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::exact::{unit_ball_volume, BallDomain};
use crate::fem::ConformalMetric;
use crate::spaceform::{geodesic_sphere_curvature, CaseId, CurvatureCase, CurvatureSign};
use crate::spectrum::SpectrumTable;

/// Tolerance for checks on exact spectra.
pub const EXACT_TOLERANCE: f64 = 1e-9;

/// Additive slack for checks on finite element spectra, as a fraction of `κ̃`.
pub const FEM_SLACK_FRACTION: f64 = 0.01;

pub const CSV_HEADER: &str = "j,sigma,lambda,ineq_id,lhs,rhs,slack,pass";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundRecord {
    pub j: usize,
    pub sigma: f64,
    pub lambda: f64,
    pub ineq_id: &'static str,
    pub lhs: f64,
    pub rhs: f64,
    /// `rhs - lhs`.
    pub slack: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    pub records: Vec<BoundRecord>,
    pub tolerance: f64,
}

impl BoundReport {
    pub fn new(tolerance: f64) -> Self {
        Self {
            records: Vec::new(),
            tolerance,
        }
    }

    pub fn push(&mut self, j: usize, sigma: f64, lambda: f64, ineq_id: &'static str, lhs: f64, rhs: f64) {
        let slack = rhs - lhs;
        self.records.push(BoundRecord {
            j,
            sigma,
            lambda,
            ineq_id,
            lhs,
            rhs,
            slack,
            pass: slack >= -self.tolerance,
        });
    }

    pub fn extend(&mut self, other: BoundReport) {
        self.records.extend(other.records);
    }

    pub fn violations(&self) -> usize {
        self.records.iter().filter(|r| !r.pass).count()
    }

    pub fn passed(&self) -> bool {
        self.violations() == 0
    }

    pub fn worst_slack(&self) -> Option<f64> {
        self.records.iter().map(|r| r.slack).reduce(f64::min)
    }

    pub fn first_violation(&self) -> Option<&BoundRecord> {
        self.records.iter().find(|r| !r.pass)
    }

    pub fn worst_slack_for(&self, ineq_id: &str) -> Option<f64> {
        self.records
            .iter()
            .filter(|r| r.ineq_id == ineq_id)
            .map(|r| r.slack)
            .reduce(f64::min)
    }

    /// CSV rows without header.
    pub fn csv_rows(&self) -> String {
        let mut out = String::new();
        for r in &self.records {
            let _ = writeln!(
                out,
                "{},{:.16e},{:.16e},{},{:.16e},{:.16e},{:.16e},{}",
                r.j, r.sigma, r.lambda, r.ineq_id, r.lhs, r.rhs, r.slack, r.pass
            );
        }
        out
    }

    pub fn to_csv(&self) -> String {
        format!("{CSV_HEADER}\n{}", self.csv_rows())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EffectiveKappa {
    pub case_id: CaseId,
    pub kappa_tilde: f64,
}

pub fn effective_kappa(case: &CurvatureCase) -> EffectiveKappa {
    let kappa_tilde = match case.case_id {
        CaseId::Case1 => case.kappa_plus,
        CaseId::Case2 => (case.a + case.kappa_plus * case.kappa_plus).sqrt(),
    };
    EffectiveKappa {
        case_id: case.case_id,
        kappa_tilde,
    }
}

fn gap_factor(n: usize) -> f64 {
    (n as f64 / 2.0).max(1.0)
}

fn require_len(table: &SpectrumTable, j_max: usize, what: &str) -> Result<()> {
    if table.flat_len() <= j_max {
        return Err(Error::DimensionMismatch(format!(
            "{what} table has {} values, need index {j_max}",
            table.flat_len()
        )));
    }
    Ok(())
}

/// Checks, for `0 <= j <= j_max`,
/// (i) `λ_j <= σ_j² + nκ̃σ_j`, (ii) `σ_j <= κ̃/2 + √(κ̃²/4 + λ_j)` and
/// (iii) `|σ_j - √λ_j| <= max(n/2, 1) κ̃`.
pub fn check_theorem1(
    case: &CurvatureCase,
    sigma: &SpectrumTable,
    lambda: &SpectrumTable,
    j_max: usize,
    tolerance: f64,
) -> Result<BoundReport> {
    require_len(sigma, j_max, "Steklov")?;
    require_len(lambda, j_max, "boundary Laplacian")?;
    let k = effective_kappa(case).kappa_tilde;
    let n = case.n as f64;
    let mut report = BoundReport::new(tolerance);
    for (j, (s, l)) in sigma.iter_flat().zip(lambda.iter_flat()).take(j_max + 1).enumerate() {
        let (s, l) = (s.1.value, l.1.value);
        report.push(j, s, l, "i", l, s * s + n * k * s);
        report.push(j, s, l, "ii", s, 0.5 * k + (0.25 * k * k + l).sqrt());
        report.push(j, s, l, "iii", (s - l.sqrt()).abs(), gap_factor(case.n) * k);
    }
    Ok(report)
}

/// Smallest `κ̃` for which all three inequalities of [`check_theorem1`] hold
/// on `0 <= j <= j_max`.
pub fn critical_kappa(n: usize, sigma: &SpectrumTable, lambda: &SpectrumTable, j_max: usize) -> Result<f64> {
    require_len(sigma, j_max, "Steklov")?;
    require_len(lambda, j_max, "boundary Laplacian")?;
    let nf = n as f64;
    let mut k: f64 = 0.0;
    for (s, l) in sigma.iter_flat().zip(lambda.iter_flat()).take(j_max + 1) {
        let (s, l) = (s.1.value, l.1.value);
        if s > 0.0 {
            k = k.max((l - s * s) / (nf * s));
            // (ii) is equivalent to σ² - κ̃σ <= λ.
            k = k.max((s * s - l) / s);
        } else if l > 0.0 {
            return Ok(f64::INFINITY);
        }
        k = k.max((s - l.sqrt()).abs() / gap_factor(n));
    }
    Ok(k)
}

/// Empirical constant of a power-law upper bound together with its
/// stability over the upper half of the index range.
#[derive(Debug, Clone, PartialEq)]
pub struct FitReport {
    pub fitted: f64,
    /// Index attaining the maximum.
    pub argmax: usize,
    /// Fit restricted to `1 <= j <= j_max/2`.
    pub fitted_lower_half: f64,
    /// `(fitted - fitted_lower_half) / fitted`, zero when `fitted` is zero.
    pub drift: f64,
    /// Per-index ratios, entry `j - 1` for index `j`.
    pub ratios: Vec<f64>,
    pub report: BoundReport,
}

fn fit(ratios: Vec<f64>, report: BoundReport) -> FitReport {
    let j_max = ratios.len();
    let (mut fitted, mut argmax) = (0.0, 0);
    for (i, &r) in ratios.iter().enumerate() {
        if r > fitted {
            fitted = r;
            argmax = i + 1;
        }
    }
    let fitted_lower_half = ratios[..(j_max / 2).max(1)].iter().copied().fold(0.0, f64::max);
    let drift = if fitted > 0.0 {
        (fitted - fitted_lower_half) / fitted
    } else {
        0.0
    };
    FitReport {
        fitted,
        argmax,
        fitted_lower_half,
        drift,
        ratios,
        report,
    }
}

fn check_area(boundary_area: f64, j_max: usize) -> Result<()> {
    if !(boundary_area > 0.0) || !boundary_area.is_finite() {
        return Err(Error::InvalidArgument(format!("boundary area {boundary_area}")));
    }
    if j_max == 0 {
        return Err(Error::InvalidArgument("j_max must be at least 1".into()));
    }
    Ok(())
}

/// Fits `C` in `σ_j <= κ̃ + C (j/|Σ|)^{1/n}` over `1 <= j <= j_max`.
pub fn check_corollary1(
    case: &CurvatureCase,
    sigma: &SpectrumTable,
    boundary_area: f64,
    j_max: usize,
) -> Result<FitReport> {
    check_area(boundary_area, j_max)?;
    require_len(sigma, j_max, "Steklov")?;
    let k = effective_kappa(case).kappa_tilde;
    let p = 1.0 / case.n as f64;
    let values = sigma.flattened();
    let ratios: Vec<f64> = (1..=j_max)
        .map(|j| ((values[j] - k) * (boundary_area / j as f64).powf(p)).max(0.0))
        .collect();
    let mut out = fit(ratios, BoundReport::new(EXACT_TOLERANCE));
    for j in 1..=j_max {
        let rhs = k + out.fitted * (j as f64 / boundary_area).powf(p);
        out.report.push(j, values[j], f64::NAN, "cor1", values[j], rhs);
    }
    Ok(out)
}

/// `σ_j (ω_n |Σ| / j)^{1/n}`, which tends to `2π`.
pub fn weyl_ratio(sigma: &SpectrumTable, boundary_area: f64, n: usize, j: usize) -> Result<f64> {
    if j == 0 {
        return Err(Error::InvalidArgument("weyl ratio needs j >= 1".into()));
    }
    if n == 0 {
        return Err(Error::InvalidArgument("n must be positive".into()));
    }
    let s = sigma
        .value(j)
        .ok_or_else(|| Error::DimensionMismatch(format!("no Steklov value at index {j}")))?;
    Ok(s * (unit_ball_volume(n) * boundary_area / j as f64).powf(1.0 / n as f64))
}

/// Fits `c` in `λ_j <= c (j/|Σ|)^{2/n}` over `1 <= j <= j_max`. Requires a
/// checklist certifying nonnegative Ricci curvature of the boundary.
pub fn check_buser(
    checklist: &HypothesisChecklist,
    lambda: &SpectrumTable,
    boundary_area: f64,
    n: usize,
    j_max: usize,
) -> Result<FitReport> {
    if let Some(clause) = checklist.clause(BOUNDARY_RICCI).filter(|c| !c.holds) {
        return Err(Error::CaseViolation(format!(
            "boundary Ricci curvature is not certified nonnegative: {}",
            clause.detail
        )));
    }
    check_area(boundary_area, j_max)?;
    require_len(lambda, j_max, "boundary Laplacian")?;
    let p = 2.0 / n as f64;
    let values = lambda.flattened();
    let ratios: Vec<f64> = (1..=j_max)
        .map(|j| values[j] * (boundary_area / j as f64).powf(p))
        .collect();
    let mut out = fit(ratios, BoundReport::new(EXACT_TOLERANCE));
    for j in 1..=j_max {
        let rhs = out.fitted * (j as f64 / boundary_area).powf(p);
        out.report.push(j, f64::NAN, values[j], "buser", values[j], rhs);
    }
    Ok(out)
}

/// Domain whose boundary curvature range can be certified.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DomainDescriptor {
    Ball(BallDomain),
    /// Planar curve in a conformal model with sampled geodesic curvature range.
    Curve {
        metric: ConformalMetric,
        kappa_min: f64,
        kappa_max: f64,
    },
}

impl DomainDescriptor {
    fn ambient_curvature(&self) -> f64 {
        match self {
            Self::Ball(b) => b.space_form.curvature,
            Self::Curve { metric, .. } => metric.curvature(),
        }
    }

    fn n(&self) -> usize {
        match self {
            Self::Ball(b) => b.n(),
            Self::Curve { .. } => 1,
        }
    }

    /// Range of principal curvatures of the boundary.
    pub fn kappa_range(&self) -> Result<(f64, f64)> {
        match self {
            Self::Ball(b) => {
                let k = geodesic_sphere_curvature(&b.space_form, b.radius)?;
                Ok((k, k))
            }
            Self::Curve { kappa_min, kappa_max, .. } => Ok((*kappa_min, *kappa_max)),
        }
    }
}

pub const CASE_PARAMETERS: &str = "case_parameters";
pub const AMBIENT_CURVATURE: &str = "ambient_curvature";
pub const CURVATURE_RANGE: &str = "curvature_range";
pub const CAP_RADIUS: &str = "cap_radius";
pub const BOUNDARY_RICCI: &str = "boundary_ricci";

#[derive(Debug, Clone, PartialEq)]
pub struct HypothesisClause {
    pub name: &'static str,
    pub holds: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct HypothesisChecklist {
    pub clauses: Vec<HypothesisClause>,
}

impl HypothesisChecklist {
    fn add(&mut self, name: &'static str, holds: bool, detail: String) {
        self.clauses.push(HypothesisClause { name, holds, detail });
    }

    pub fn all_hold(&self) -> bool {
        self.clauses.iter().all(|c| c.holds)
    }

    pub fn first_failure(&self) -> Option<&HypothesisClause> {
        self.clauses.iter().find(|c| !c.holds)
    }

    pub fn clause(&self, name: &str) -> Option<&HypothesisClause> {
        self.clauses.iter().find(|c| c.name == name)
    }
}

const RELATIVE_SLACK: f64 = 1e-9;

fn le(x: f64, y: f64) -> bool {
    x <= y + RELATIVE_SLACK * x.abs().max(y.abs()).max(1e-300)
}

/// Evaluates every hypothesis clause of `case` on `domain`. Failures are
/// reported in the checklist, never as errors.
pub fn validate_hypotheses(case: &CurvatureCase, domain: &DomainDescriptor) -> HypothesisChecklist {
    let mut list = HypothesisChecklist::default();
    match case.validate() {
        Ok(()) => list.add(CASE_PARAMETERS, true, format!("{} a={}", case.case_id, case.a)),
        Err(e) => list.add(CASE_PARAMETERS, false, e.to_string()),
    }

    let k_m = domain.ambient_curvature();
    let (ok, detail) = match case.case_id {
        CaseId::Case1 => (le(-case.a, k_m) && k_m <= 0.0, format!("-a={} <= K={k_m} <= 0", -case.a)),
        CaseId::Case2 => (k_m > 0.0 && le(k_m, case.a), format!("0 < K={k_m} <= a={}", case.a)),
    };
    list.add(AMBIENT_CURVATURE, ok, detail);

    if domain.n() != case.n {
        list.add(
            CURVATURE_RANGE,
            false,
            format!("case n={} but boundary dimension {}", case.n, domain.n()),
        );
    } else {
        match domain.kappa_range() {
            Ok((lo, hi)) => list.add(
                CURVATURE_RANGE,
                le(case.kappa_minus, lo) && le(hi, case.kappa_plus),
                format!(
                    "kappa_minus={} <= [{lo}, {hi}] <= kappa_plus={}",
                    case.kappa_minus, case.kappa_plus
                ),
            ),
            Err(e) => list.add(CURVATURE_RANGE, false, e.to_string()),
        }
    }

    if let DomainDescriptor::Ball(b) = domain {
        if b.space_form.sign() == CurvatureSign::Positive {
            let limit = crate::spaceform::hemisphere_radius(b.space_form.curvature);
            list.add(CAP_RADIUS, b.radius < limit, format!("R={} < {limit}", b.radius));
        }
    }

    // Gauss equation: sectional curvature of the boundary is K + κ_i κ_j.
    match (domain.n(), domain.kappa_range()) {
        (1, _) => list.add(BOUNDARY_RICCI, true, "curve boundary: vacuous".into()),
        (_, Ok((lo, hi))) => {
            let min_product = if lo >= 0.0 { lo * lo } else { lo * hi.max(lo.abs()) };
            let k_sigma = k_m + min_product;
            list.add(
                BOUNDARY_RICCI,
                k_sigma >= -RELATIVE_SLACK,
                format!("K + kappa^2 = {k_sigma}"),
            );
        }
        (_, Err(e)) => list.add(BOUNDARY_RICCI, false, e.to_string()),
    }
    list
}

/// Curvature case used for a domain when the parameters are derived
/// automatically: Case1 with `a = κ₋²` in flat space, Case1 with `a = -K`
/// in hyperbolic space, Case2 with `a = K` in spherical space.
pub fn auto_case(domain: &DomainDescriptor) -> Result<CurvatureCase> {
    let (lo, hi) = domain.kappa_range()?;
    let k_m = domain.ambient_curvature();
    let n = domain.n();
    match crate::spaceform::curvature_sign(k_m) {
        CurvatureSign::Zero => CurvatureCase::new(CaseId::Case1, lo * lo, lo, hi, n),
        CurvatureSign::Negative => CurvatureCase::new(CaseId::Case1, -k_m, lo, hi, n),
        CurvatureSign::Positive => CurvatureCase::new(CaseId::Case2, k_m, lo, hi, n),
    }
}
