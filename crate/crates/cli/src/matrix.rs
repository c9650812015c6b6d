//! `steklov-lab matrix`: the built-in domain matrix.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use steklov_core::bounds::{auto_case, DomainDescriptor, EXACT_TOLERANCE};
use steklov_core::error::{Error, Result};
use steklov_core::exact::{radial_log_derivative, BallDomain};
use steklov_core::fem::{BoundaryCurve, ConformalMetric, MassMode, StarShapedCurve};
use steklov_core::identity::{build_f_field, pohozaev_residual};
use steklov_core::linalg::{sym_generalized_eig, SymMatrix};
use steklov_core::spaceform::{CurvatureCase, SpaceForm};

use crate::pipeline::{self, Prepared};
use crate::report;

/// Flattened eigenvalues per exact domain, so that `j <= 400`.
pub const BALL_COUNT: usize = 401;
/// Largest index of the exact theorem1 check.
pub const BALL_THEOREM_J: usize = 100;
/// Largest degree of the exactness and space-form oracle checks.
pub const ORACLE_DEGREE: usize = 40;
pub const EXACTNESS_TOLERANCE: f64 = 1e-10;
pub const ORACLE_TOLERANCE: f64 = 1e-8;
pub const COINCIDENCE_TOLERANCE: f64 = 1e-8;
pub const FEM_REFINEMENT: u32 = 6;
pub const FEM_COUNT: usize = 41;
/// Refinements of the convergence and identity order studies.
pub const STUDY_REFINEMENTS: [u32; 3] = [4, 5, 6];
pub const CONVERGENCE_FACTOR: f64 = 3.0;
pub const CONVERGENCE_FINAL: f64 = 0.01;
pub const IDENTITY_ORDER: f64 = 1.0;
pub const EIGEN_DIMS: [usize; 4] = [2, 17, 80, 200];
pub const EIGEN_TOLERANCE: f64 = 1e-8;
pub const EIGEN_SEED: u64 = 0x5eed;

pub const CHECKS: [&str; 13] = [
    "exactness",
    "oracle2d",
    "coincidence",
    "theorem1",
    "weyl",
    "corollary1",
    "buser",
    "convergence",
    "proposition1",
    "pohozaev",
    "pohozaev_order",
    "q_bounds",
    "eigensolver",
];

#[derive(Debug, Clone)]
pub enum Entry {
    Ball { label: String, ball: BallDomain },
    Fem { label: String, curve: BoundaryCurve, metric: ConformalMetric, disk: bool },
    Eigensolver,
}

impl Entry {
    pub fn label(&self) -> &str {
        match self {
            Entry::Ball { label, .. } | Entry::Fem { label, .. } => label,
            Entry::Eigensolver => "linalg",
        }
    }
}

fn ball(k: f64, dim: usize, r: f64) -> Entry {
    Entry::Ball {
        label: format!("ball(K={k},n={},R={r})", dim - 1),
        ball: BallDomain::new(SpaceForm::new(k, dim).expect("valid space form"), r).expect("valid radius"),
    }
}

pub fn builtin_entries() -> Vec<Entry> {
    let mut out = Vec::new();
    for dim in 2..=4 {
        for r in [0.5, 1.0, 2.0] {
            out.push(ball(0.0, dim, r));
        }
    }
    for r in [0.5, 1.0, 2.0] {
        out.push(ball(-1.0, 2, r));
    }
    for r in [0.4, 0.8, 1.2] {
        out.push(ball(1.0, 2, r));
    }
    let hyp = ConformalMetric::hyperbolic(1.0);
    out.push(Entry::Fem {
        label: "fem-disk(R=1)".into(),
        curve: BoundaryCurve::circle(1.0).expect("circle"),
        metric: ConformalMetric::flat(),
        disk: true,
    });
    out.push(Entry::Fem {
        label: "fem-ellipse(2,1)".into(),
        curve: BoundaryCurve::StarShaped(StarShapedCurve::ellipse(2.0, 1.0, 256).expect("ellipse")),
        metric: ConformalMetric::flat(),
        disk: false,
    });
    out.push(Entry::Fem {
        label: "fem-hyperbolic-disk(R=1)".into(),
        curve: BoundaryCurve::circle(hyp.planar_radius(1.0)).expect("circle"),
        metric: hyp,
        disk: false,
    });
    out.push(Entry::Eigensolver);
    out
}

#[derive(Debug, Clone)]
pub struct MatrixOptions {
    /// `None` runs every check; an empty list emits spectra only.
    pub checks: Option<Vec<String>>,
    /// Factor applied to `κ₊` before the theorem1 checks.
    pub kappa_scale: f64,
    pub tolerance: Option<f64>,
}

impl Default for MatrixOptions {
    fn default() -> Self {
        Self {
            checks: None,
            kappa_scale: 1.0,
            tolerance: None,
        }
    }
}

impl MatrixOptions {
    fn spectra_only(&self) -> bool {
        self.checks.as_ref().is_some_and(|c| c.is_empty())
    }

    fn wants(&self, check: &str) -> bool {
        self.checks.as_ref().is_none_or(|c| c.iter().any(|x| x == check))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatrixLine {
    pub domain: String,
    pub check: String,
    pub pass: bool,
    pub detail: String,
}

impl MatrixLine {
    pub fn render(&self) -> String {
        format!(
            "{} {} {} {}",
            self.domain,
            self.check,
            if self.pass { "PASS" } else { "FAIL" },
            self.detail
        )
    }
}

/// Lines for one entry together with spectrum files keyed by name.
#[derive(Debug, Clone, Default)]
pub struct EntryResult {
    pub lines: Vec<MatrixLine>,
    pub files: Vec<(String, String)>,
}

struct Sink<'a> {
    domain: &'a str,
    out: EntryResult,
}

impl Sink<'_> {
    fn record(&mut self, check: &str, result: Result<(bool, String)>) {
        let (pass, detail) = result.unwrap_or_else(|e| (false, format!("error: {e}")));
        self.out.lines.push(MatrixLine {
            domain: self.domain.into(),
            check: check.into(),
            pass,
            detail,
        });
    }
}

/// Case with `κ₊` scaled, bypassing validation so that understated
/// curvature can be injected.
fn probe_case(base: CurvatureCase, scale: f64) -> CurvatureCase {
    let kappa_plus = base.kappa_plus * scale;
    CurvatureCase {
        kappa_plus,
        kappa_minus: base.kappa_minus.min(kappa_plus),
        ..base
    }
}

fn theorem1_line(base: CurvatureCase, p: &Prepared, j_max: usize, tolerance: f64, scale: f64) -> Result<(bool, String)> {
    let r = pipeline::theorem1(&probe_case(base, scale), p, j_max, tolerance)?;
    Ok((r.pass, r.detail))
}

fn spectra_files(label: &str, p: &Prepared, count: usize) -> Vec<(String, String)> {
    let slug: String = label
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '.' || c == '-' { c } else { '_' })
        .collect();
    vec![
        (format!("{slug}_steklov.csv"), report::spectrum_csv(&p.sigma, count)),
        (format!("{slug}_laplacian.csv"), report::spectrum_csv(&p.lambda, count)),
    ]
}

fn spectra_detail(p: &Prepared) -> String {
    format!(
        "count={} sigma_1={:.6} lambda_1={:.6}",
        p.max_index() + 1,
        p.sigma.value(1).unwrap_or(0.0),
        p.lambda.value(1).unwrap_or(0.0)
    )
}

fn max_relative(pairs: impl Iterator<Item = (f64, f64)>) -> f64 {
    pairs.map(|(x, y)| (x - y).abs() / y.abs()).fold(0.0, f64::max)
}

fn run_ball(label: &str, b: &BallDomain, opts: &MatrixOptions) -> EntryResult {
    let mut sink = Sink {
        domain: label,
        out: EntryResult::default(),
    };
    let p = match pipeline::prepare_ball(b, BALL_COUNT) {
        Ok(p) => p,
        Err(e) => {
            sink.record("spectra", Err(e));
            return sink.out;
        }
    };
    sink.out.files = spectra_files(label, &p, BALL_COUNT);
    if opts.spectra_only() {
        sink.record("spectra", Ok((true, spectra_detail(&p))));
        return sink.out;
    }
    let k = b.space_form.curvature;
    let n = b.n();

    if k == 0.0 && opts.wants("exactness") {
        let r = (1..=ORACLE_DEGREE)
            .map(|deg| Ok((radial_log_derivative(b, deg)?, deg as f64 / b.radius)))
            .collect::<Result<Vec<_>>>()
            .map(|v| {
                let err = max_relative(v.into_iter());
                (err <= EXACTNESS_TOLERANCE, format!("max_rel_err={err:.3e} k<={ORACLE_DEGREE}"))
            });
        sink.record("exactness", r);
    }
    if k != 0.0 && n == 1 {
        // The geodesic disk is a flat disk of radius r_e with boundary
        // factor ρ_b; the flat eigenvalue k/r_e rescales by 1/ρ_b.
        let metric = ConformalMetric::from_curvature(k);
        let r_e = metric.planar_radius(b.radius);
        let rho_b = metric.factor([r_e, 0.0]);
        if opts.wants("oracle2d") {
            let r = (1..=ORACLE_DEGREE)
                .map(|deg| Ok((radial_log_derivative(b, deg)?, deg as f64 / (r_e * rho_b))))
                .collect::<Result<Vec<_>>>()
                .map(|v| {
                    let err = max_relative(v.into_iter());
                    (err <= ORACLE_TOLERANCE, format!("max_rel_err={err:.3e} k<={ORACLE_DEGREE}"))
                });
            sink.record("oracle2d", r);
        }
        if opts.wants("coincidence") {
            let worst = p
                .sigma
                .iter_flat()
                .zip(p.lambda.iter_flat())
                .take(BALL_THEOREM_J + 1)
                .map(|(s, l)| (s.1.value - l.1.value.sqrt()).abs())
                .fold(0.0, f64::max);
            sink.record(
                "coincidence",
                Ok((worst <= COINCIDENCE_TOLERANCE, format!("max|sigma-sqrt(lambda)|={worst:.3e}"))),
            );
        }
    }

    let descriptor = DomainDescriptor::Ball(*b);
    let case = match auto_case(&descriptor) {
        Ok(c) => c,
        Err(e) => {
            sink.record("case", Err(e));
            return sink.out;
        }
    };
    let checklist = pipeline::hypotheses(&p, &case);
    if opts.wants("theorem1") {
        let tol = opts.tolerance.unwrap_or(EXACT_TOLERANCE);
        sink.record(
            "theorem1",
            theorem1_line(case, &p, BALL_THEOREM_J, tol, opts.kappa_scale),
        );
    }
    let j_max = p.max_index();
    if opts.wants("weyl") {
        sink.record("weyl", pipeline::weyl(&p, j_max).map(|r| (r.pass, r.detail)));
    }
    if opts.wants("corollary1") {
        sink.record(
            "corollary1",
            pipeline::corollary1(&case, &checklist, &p, j_max).map(|r| (r.pass, r.detail)),
        );
    }
    if opts.wants("buser") {
        sink.record("buser", pipeline::buser(&checklist, &p, j_max).map(|r| (r.pass, r.detail)));
    }
    sink.out
}

/// Largest relative error over `σ₁..σ₁₀` of the flat unit disk.
fn disk_error(refinement: u32) -> Result<f64> {
    let p = pipeline::prepare_fem(
        BoundaryCurve::circle(1.0)?,
        ConformalMetric::flat(),
        refinement,
        MassMode::Consistent,
        11,
    )?;
    let s = p.sigma.flattened();
    Ok(max_relative((1..=10).map(|j| (s[j], j.div_ceil(2) as f64))))
}

fn convergence() -> Result<(bool, String)> {
    let errs = STUDY_REFINEMENTS
        .iter()
        .map(|&r| disk_error(r))
        .collect::<Result<Vec<_>>>()?;
    let factors: Vec<f64> = errs.windows(2).map(|w| w[0] / w[1]).collect();
    let last = *errs.last().expect("refinements");
    let pass = factors.iter().all(|&f| f >= CONVERGENCE_FACTOR) && last <= CONVERGENCE_FINAL;
    Ok((
        pass,
        format!(
            "errors={} factors={}",
            errs.iter().map(|e| format!("{e:.3e}")).collect::<Vec<_>>().join("/"),
            factors.iter().map(|f| format!("{f:.2}")).collect::<Vec<_>>().join("/")
        ),
    ))
}

/// Truncated-field residual for `u = Re z²` on the flat unit disk.
pub fn truncated_residual(refinement: u32, case: &CurvatureCase) -> Result<f64> {
    let p = pipeline::prepare_fem(
        BoundaryCurve::circle(1.0)?,
        ConformalMetric::flat(),
        refinement,
        MassMode::Consistent,
        2,
    )?;
    let f = p.fem.as_ref().expect("fem domain");
    let h = pipeline::truncated_width(case, f, pipeline::TRUNCATED_WIDTH_FRACTION)?;
    let b: Vec<f64> = f
        .mesh
        .boundary_ring()
        .iter()
        .map(|&v| {
            let x = f.mesh.vertices()[v];
            x[0] * x[0] - x[1] * x[1]
        })
        .collect();
    let u = steklov_core::fem::harmonic_extension(&f.mesh, &b)?;
    let field = build_f_field(&f.mesh, &f.metric, &f.curve, case, h)?;
    Ok(pohozaev_residual(&f.mesh, &f.metric, &u, &field)?.residual.abs())
}

fn pohozaev_order(case: &CurvatureCase) -> Result<(bool, String)> {
    let res = STUDY_REFINEMENTS
        .iter()
        .map(|&r| truncated_residual(r, case))
        .collect::<Result<Vec<_>>>()?;
    let orders: Vec<f64> = res.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
    Ok((
        orders.iter().all(|&o| o >= IDENTITY_ORDER),
        format!(
            "residuals={} orders={}",
            res.iter().map(|e| format!("{e:.3e}")).collect::<Vec<_>>().join("/"),
            orders.iter().map(|f| format!("{f:.2}")).collect::<Vec<_>>().join("/")
        ),
    ))
}

fn run_fem(label: &str, curve: &BoundaryCurve, metric: ConformalMetric, disk: bool, opts: &MatrixOptions) -> EntryResult {
    let mut sink = Sink {
        domain: label,
        out: EntryResult::default(),
    };
    let p = match pipeline::prepare_fem(curve.clone(), metric, FEM_REFINEMENT, MassMode::Consistent, FEM_COUNT) {
        Ok(p) => p,
        Err(e) => {
            sink.record("spectra", Err(e));
            return sink.out;
        }
    };
    sink.out.files = spectra_files(label, &p, FEM_COUNT);
    if opts.spectra_only() {
        sink.record("spectra", Ok((true, spectra_detail(&p))));
        return sink.out;
    }
    let case = match pipeline::automatic_case(&p) {
        Ok(c) => c,
        Err(e) => {
            sink.record("case", Err(e));
            return sink.out;
        }
    };
    let j_max = pipeline::default_j_max(&p);
    let tol = pipeline::bound_tolerance(&p, &case, opts.tolerance);
    if disk && opts.wants("convergence") {
        sink.record("convergence", convergence());
    }
    if opts.wants("theorem1") {
        sink.record("theorem1", theorem1_line(case, &p, j_max, tol, opts.kappa_scale));
    }
    if opts.wants("proposition1") {
        sink.record(
            "proposition1",
            pipeline::proposition1(&case, &p, j_max, tol).map(|r| (r.pass, r.detail)),
        );
    }
    if opts.wants("pohozaev") {
        sink.record("pohozaev", pipeline::pohozaev(&case, &p).map(|r| (r.pass, r.detail)));
    }
    if disk && opts.wants("pohozaev_order") {
        sink.record("pohozaev_order", pohozaev_order(&case));
    }
    if opts.wants("q_bounds") {
        sink.record("q_bounds", pipeline::q_bounds(&case, &p).map(|r| (r.pass, r.detail)));
    }
    sink.out
}

/// Residual and `B`-orthonormality defect of the full decomposition of a
/// seeded random pencil of dimension `dim`.
pub fn random_pencil_defects(dim: usize, seed: u64) -> Result<(f64, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ dim as u64);
    let a = SymMatrix::from_lower_fn(dim, |_, _| rng.gen_range(-1.0..1.0));
    let c: Vec<Vec<f64>> = (0..dim)
        .map(|_| (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect())
        .collect();
    let b = SymMatrix::from_lower_fn(dim, |i, j| {
        let cc: f64 = (0..dim).map(|k| c[k][i] * c[k][j]).sum();
        cc / dim as f64 + if i == j { 0.5 } else { 0.0 }
    });
    let eig = sym_generalized_eig(&a, &b, dim)?;
    let norm = a.frobenius_norm();
    let (mut residual, mut ortho): (f64, f64) = (0.0, 0.0);
    let vectors: Vec<Vec<f64>> = (0..dim).map(|j| eig.vectors.column(j)).collect();
    for (j, x) in vectors.iter().enumerate() {
        let ax = a.matvec(x);
        let bx = b.matvec(x);
        let r = ax
            .iter()
            .zip(&bx)
            .map(|(p, q)| (p - eig.values[j] * q).powi(2))
            .sum::<f64>()
            .sqrt();
        residual = residual.max(r / norm);
        for (i, y) in vectors.iter().enumerate() {
            let g: f64 = y.iter().zip(&bx).map(|(p, q)| p * q).sum();
            ortho = ortho.max((g - if i == j { 1.0 } else { 0.0 }).abs());
        }
    }
    Ok((residual, ortho))
}

fn eigensolver() -> Result<(bool, String)> {
    let mut worst = (0.0f64, 0.0f64);
    for dim in EIGEN_DIMS {
        let (r, o) = random_pencil_defects(dim, EIGEN_SEED)?;
        worst = (worst.0.max(r), worst.1.max(o));
    }
    Ok((
        worst.0 <= EIGEN_TOLERANCE && worst.1 <= EIGEN_TOLERANCE,
        format!(
            "dims={EIGEN_DIMS:?} residual={:.3e} orthonormality={:.3e}",
            worst.0, worst.1
        ),
    ))
}

pub fn run_entry(entry: &Entry, opts: &MatrixOptions) -> EntryResult {
    match entry {
        Entry::Ball { label, ball } => run_ball(label, ball, opts),
        Entry::Fem {
            label,
            curve,
            metric,
            disk,
        } => run_fem(label, curve, *metric, *disk, opts),
        Entry::Eigensolver => {
            let mut sink = Sink {
                domain: "linalg",
                out: EntryResult::default(),
            };
            if opts.wants("eigensolver") {
                sink.record("eigensolver", eigensolver());
            }
            sink.out
        }
    }
}

/// Runs every entry on a pool of `jobs` workers and returns the results in
/// matrix order.
pub fn run_matrix(entries: &[Entry], opts: &MatrixOptions, jobs: Option<usize>) -> Result<Vec<EntryResult>> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(j) = jobs {
        builder = builder.num_threads(j);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::InvalidArgument(format!("worker pool: {e}")))?;
    Ok(pool.install(|| entries.par_iter().map(|e| run_entry(e, opts)).collect()))
}

/// Rejects unknown check names.
pub fn validate_checks(checks: &[String]) -> std::result::Result<(), String> {
    match checks.iter().find(|c| !CHECKS.contains(&c.as_str())) {
        Some(c) => Err(format!("unknown matrix check \"{c}\"; known: {}", CHECKS.join(", "))),
        None => Ok(()),
    }
}
