//! Acceptance criteria. Prints one line per criterion and exits non-zero
//! when an outcome differs from the expected one. Spectra, constants and
//! inequalities are recomputed here from closed forms; the library only
//! supplies what is under test.
//!
//! Three criteria are known to fail on the stated domains and tolerances
//! (see README, "Known failures"); for those the expected outcome is FAIL
//! with the documented signature, so that a silent change in either
//! direction is caught.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use steklov_core::exact::{radial_log_derivative, steklov_ball_spectrum, BallDomain};
use steklov_core::fem::{BoundaryCurve, ConformalMetric, MassMode, StarShapedCurve};
use steklov_core::identity::{pohozaev_residual, position_field};
use steklov_core::linalg::{sym_generalized_eig, SymMatrix};
use steklov_core::spaceform::{CaseId, CurvatureCase, SpaceForm};
use steklov_lab::matrix::truncated_residual;
use steklov_lab::pipeline::{self, Prepared};

const COUNT: usize = 401;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn rel(x: f64, y: f64) -> f64 {
    (x - y).abs() / y.abs()
}

/// Multiplicity of degree `k` harmonics on `S^n`, `n <= 3`.
fn multiplicity(n: usize, k: usize) -> usize {
    match (n, k) {
        (_, 0) => 1,
        (1, _) => 2,
        (2, _) => 2 * k + 1,
        (3, _) => (k + 1) * (k + 1),
        _ => unreachable!(),
    }
}

fn unit_sphere_area(n: usize) -> f64 {
    [2.0 * PI, 4.0 * PI, 2.0 * PI * PI][n - 1]
}

fn unit_ball_volume(n: usize) -> f64 {
    [2.0, PI, 4.0 * PI / 3.0][n - 1]
}

/// Exact-matrix domain with closed-form spectra: `σ = k/s`,
/// `λ = k(k+n-1)/s²` where `s` is the boundary radius, and `κ̃` of its
/// automatic case.
struct Oracle {
    k: f64,
    dim: usize,
    r: f64,
}

impl Oracle {
    fn n(&self) -> usize {
        self.dim - 1
    }

    fn boundary_radius(&self) -> f64 {
        match self.k {
            k if k < 0.0 => self.r.sinh(),
            k if k > 0.0 => self.r.sin(),
            _ => self.r,
        }
    }

    fn kappa_tilde(&self) -> f64 {
        match self.k {
            // Case1 with a = 1 and κ = coth R.
            k if k < 0.0 => 1.0 / self.r.tanh(),
            // Case2 with a = 1 and κ = cot R gives √(1 + cot² R).
            k if k > 0.0 => 1.0 / self.r.sin(),
            _ => 1.0 / self.r,
        }
    }

    fn area(&self) -> f64 {
        unit_sphere_area(self.n()) * self.boundary_radius().powi(self.n() as i32)
    }

    fn spectra(&self) -> (Vec<f64>, Vec<f64>) {
        let (n, s) = (self.n(), self.boundary_radius());
        let (mut sigma, mut lambda) = (Vec::new(), Vec::new());
        let mut k = 0;
        while sigma.len() < COUNT {
            for _ in 0..multiplicity(n, k) {
                sigma.push(k as f64 / s);
                lambda.push((k * (k + n - 1)) as f64 / (s * s));
            }
            k += 1;
        }
        sigma.truncate(COUNT);
        lambda.truncate(COUNT);
        (sigma, lambda)
    }

    fn ball(&self) -> BallDomain {
        BallDomain::new(SpaceForm::new(self.k, self.dim).unwrap(), self.r).unwrap()
    }

    fn label(&self) -> String {
        format!("K={},n={},R={}", self.k, self.n(), self.r)
    }
}

fn exact_matrix() -> Vec<Oracle> {
    let mut out = Vec::new();
    for dim in 2..=4 {
        for r in [0.5, 1.0, 2.0] {
            out.push(Oracle { k: 0.0, dim, r });
        }
    }
    for r in [0.5, 1.0, 2.0] {
        out.push(Oracle { k: -1.0, dim: 2, r });
    }
    for r in [0.4, 0.8, 1.2] {
        out.push(Oracle { k: 1.0, dim: 2, r });
    }
    out
}

fn criterion1() -> Outcome {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for dim in 2..=4 {
        for r in [0.5, 1.0, 2.0] {
            let ball = Oracle { k: 0.0, dim, r }.ball();
            for k in 1..=40 {
                worst = worst.max(rel(radial_log_derivative(&ball, k).unwrap(), k as f64 / r));
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        worst <= 1e-10 && secs < 5.0,
        format!("max_rel_err={worst:.2e} runtime={secs:.3}s"),
    )
}

fn criterion2() -> Outcome {
    let mut worst: f64 = 0.0;
    for o in exact_matrix().into_iter().filter(|o| o.k != 0.0) {
        let ball = o.ball();
        // σ_k = k / sinh R or k / sin R.
        let s = if o.k < 0.0 { o.r.sinh() } else { o.r.sin() };
        for k in 1..=40 {
            worst = worst.max(rel(radial_log_derivative(&ball, k).unwrap(), k as f64 / s));
        }
    }
    outcome(worst <= 1e-8, format!("max_rel_err={worst:.2e} k<=40"))
}

fn criterion3() -> Outcome {
    let mut violations = 0;
    let mut spectrum_err: f64 = 0.0;
    let mut coincidence: f64 = 0.0;
    for o in exact_matrix() {
        let computed = steklov_ball_spectrum(&o.ball(), COUNT).unwrap().flattened();
        let (sigma, lambda) = o.spectra();
        let n = o.n() as f64;
        let k = o.kappa_tilde();
        let gap = (n / 2.0).max(1.0) * k;
        for j in 0..=100 {
            let (s, l) = (computed[j], lambda[j]);
            spectrum_err = spectrum_err.max((s - sigma[j]).abs() / sigma[j].max(1.0));
            let ok = l <= s * s + n * k * s + 1e-9
                && s <= 0.5 * k + (0.25 * k * k + l).sqrt() + 1e-9
                && (s - l.sqrt()).abs() <= gap + 1e-9;
            violations += usize::from(!ok);
            if o.k != 0.0 {
                coincidence = coincidence.max((s - l.sqrt()).abs());
            }
        }
    }
    outcome(
        violations == 0 && coincidence <= 1e-8 && spectrum_err <= 1e-8,
        format!("violations={violations} max|sigma-sqrt(lambda)|(2D curved)={coincidence:.2e} spectrum_err={spectrum_err:.2e}"),
    )
}

fn disk_error(refinement: u32) -> f64 {
    let p = pipeline::prepare_fem(
        BoundaryCurve::circle(1.0).unwrap(),
        ConformalMetric::flat(),
        refinement,
        MassMode::Consistent,
        11,
    )
    .unwrap();
    let s = p.sigma.flattened();
    // Unit disk: 0, 1, 1, 2, 2, ...
    (1..=10).map(|j| rel(s[j], j.div_ceil(2) as f64)).fold(0.0, f64::max)
}

fn criterion4() -> Outcome {
    let start = Instant::now();
    let errs: Vec<f64> = [4, 5, 6].into_iter().map(disk_error).collect();
    let secs = start.elapsed().as_secs_f64();
    let factors: Vec<f64> = errs.windows(2).map(|w| w[0] / w[1]).collect();
    outcome(
        factors.iter().all(|&f| f >= 3.0) && errs[2] <= 0.01 && secs < 60.0,
        format!(
            "errors={} factors={factors:.2?} runtime={secs:.1}s",
            errs.iter().map(|e| format!("{e:.3e}")).collect::<Vec<_>>().join("/")
        ),
    )
}

fn ellipse() -> BoundaryCurve {
    BoundaryCurve::StarShaped(StarShapedCurve::ellipse(2.0, 1.0, 256).unwrap())
}

fn hyperbolic_disk() -> (BoundaryCurve, ConformalMetric) {
    let m = ConformalMetric::hyperbolic(1.0);
    (BoundaryCurve::circle((0.5f64).tanh()).unwrap(), m)
}

fn fem_domain(curve: BoundaryCurve, metric: ConformalMetric) -> Prepared {
    pipeline::prepare_fem(curve, metric, 6, MassMode::Consistent, 41).unwrap()
}

/// Flat disk: Case1 a = 1, κ = 1. Ellipse (2, 1): κ ∈ [1/4, 2], Case1
/// a = 1/16. Hyperbolic disk R = 1: κ = coth 1, Case1 a = 1.
fn fem_cases() -> Vec<(&'static str, Prepared, CurvatureCase)> {
    let (hc, hm) = hyperbolic_disk();
    let coth = 1.0 / 1f64.tanh();
    vec![
        (
            "disk",
            fem_domain(BoundaryCurve::circle(1.0).unwrap(), ConformalMetric::flat()),
            CurvatureCase::new(CaseId::Case1, 1.0, 1.0, 1.0, 1).unwrap(),
        ),
        (
            "ellipse",
            fem_domain(ellipse(), ConformalMetric::flat()),
            CurvatureCase::new(CaseId::Case1, 1.0 / 16.0, 0.25, 2.0, 1).unwrap(),
        ),
        (
            "hyperbolic-disk",
            fem_domain(hc, hm),
            CurvatureCase::new(CaseId::Case1, 1.0, coth, coth, 1).unwrap(),
        ),
    ]
}

fn criterion5(cases: &[(&'static str, Prepared, CurvatureCase)]) -> Outcome {
    let mut parts = Vec::new();
    let mut pass = true;
    for (label, p, case) in cases {
        let tol = 0.01 * case.kappa_plus;
        let t = pipeline::theorem1(case, p, 20, tol).unwrap();
        let q = pipeline::proposition1(case, p, 20, tol).unwrap();
        // Independent recomputation of theorem1 (i) and (ii) on the same spectra.
        let (s, l) = (p.sigma.flattened(), p.lambda.flattened());
        let k = case.kappa_plus;
        let own = (0..=20).all(|j| {
            l[j] <= s[j] * s[j] + k * s[j] + tol && s[j] <= 0.5 * k + (0.25 * k * k + l[j]).sqrt() + tol
        });
        pass &= t.pass && q.pass && own;
        parts.push(format!("{label}: theorem1={} proposition1={}", t.pass, q.pass));
    }
    outcome(pass, parts.join("; "))
}

fn criterion6() -> Outcome {
    let p = fem_domain(BoundaryCurve::circle(1.0).unwrap(), ConformalMetric::flat());
    let f = p.fem.as_ref().unwrap();
    let b: Vec<f64> = f.mesh.boundary_ring().iter().map(|&v| f.mesh.vertices()[v][0]).collect();
    let u = steklov_core::fem::harmonic_extension(&f.mesh, &b).unwrap();
    let r = pohozaev_residual(&f.mesh, &f.metric, &u, &position_field(&f.mesh)).unwrap();
    let ratio = r.residual.abs() / r.i4.abs();
    let case = CurvatureCase::new(CaseId::Case1, 1.0, 1.0, 1.0, 1).unwrap();
    let res: Vec<f64> = [4, 5, 6].into_iter().map(|k| truncated_residual(k, &case).unwrap()).collect();
    let orders: Vec<f64> = res.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
    outcome(
        ratio <= 1e-3 && orders.iter().all(|&o| o >= 1.0),
        format!("position residual/I4={ratio:.2e} truncated orders={orders:.2?}"),
    )
}

/// Per-domain failures of a criterion, keyed by label.
fn failing(results: &[(String, usize, bool)]) -> Vec<(String, usize)> {
    results.iter().filter(|r| !r.2).map(|r| (r.0.clone(), r.1)).collect()
}

fn only_n3(fails: &[(String, usize)]) -> bool {
    fails.len() == 3 && fails.iter().all(|f| f.1 == 3)
}

fn criterion7() -> Expected {
    let mut results = Vec::new();
    let mut worst_n3: f64 = 0.0;
    for o in exact_matrix() {
        let (sigma, _) = o.spectra();
        let n = o.n();
        let from = (3 * 400usize).div_ceil(4);
        let dev = (from..=400)
            .map(|j| {
                let ratio = sigma[j] * (unit_ball_volume(n) * o.area() / j as f64).powf(1.0 / n as f64);
                (ratio - 2.0 * PI).abs() / (2.0 * PI)
            })
            .fold(0.0, f64::max);
        if n == 3 {
            worst_n3 = worst_n3.max(dev);
        }
        results.push((o.label(), n, dev <= 0.1));
    }
    let fails = failing(&results);
    outcome(
        fails.is_empty(),
        format!(
            "failing={:?} worst n=3 deviation={worst_n3:.4}",
            fails.iter().map(|f| &f.0).collect::<Vec<_>>()
        ),
    )
    .with_signature(only_n3(&fails))
}

fn criterion8() -> Expected {
    let mut results = Vec::new();
    let mut worst_drift: f64 = 0.0;
    let mut cross_ok = true;
    for o in exact_matrix() {
        let (sigma, lambda) = o.spectra();
        let n = o.n() as f64;
        let (area, k) = (o.area(), o.kappa_tilde());
        let c_ratio = |j: usize| ((sigma[j] - k) * (area / j as f64).powf(1.0 / n)).max(0.0);
        let b_ratio = |j: usize| lambda[j] * (area / j as f64).powf(2.0 / n);
        let big_c = (1..=400).map(c_ratio).fold(0.0, f64::max);
        let lower = (1..=200).map(c_ratio).fold(0.0, f64::max);
        let drift = (big_c - lower) / big_c;
        let small_c = (1..=400).map(b_ratio).fold(0.0, f64::max);
        cross_ok &= big_c <= 1.1 * small_c.sqrt();
        worst_drift = worst_drift.max(drift);
        results.push((o.label(), o.n(), big_c.is_finite() && drift < 0.05));
    }
    let fails = failing(&results);
    outcome(
        fails.is_empty() && cross_ok,
        format!(
            "failing={:?} worst drift={worst_drift:.4} cross={}",
            fails.iter().map(|f| &f.0).collect::<Vec<_>>(),
            if cross_ok { "ok" } else { "violated" }
        ),
    )
    .with_signature(only_n3(&fails) && cross_ok)
}

fn pencil_defects(dim: usize, rng: &mut ChaCha8Rng) -> (f64, f64) {
    let a = SymMatrix::from_lower_fn(dim, |_, _| rng.gen_range(-1.0..1.0));
    let g: Vec<f64> = (0..dim * dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
    // B = GᵀG/dim + I/4 is symmetric positive definite.
    let b = SymMatrix::from_lower_fn(dim, |i, j| {
        (0..dim).map(|k| g[k * dim + i] * g[k * dim + j]).sum::<f64>() / dim as f64 + if i == j { 0.25 } else { 0.0 }
    });
    let eig = sym_generalized_eig(&a, &b, dim).unwrap();
    let xs: Vec<Vec<f64>> = (0..dim).map(|j| eig.vectors.column(j)).collect();
    let norm = a.frobenius_norm();
    let (mut res, mut orth): (f64, f64) = (0.0, 0.0);
    for (j, x) in xs.iter().enumerate() {
        let (ax, bx) = (a.matvec(x), b.matvec(x));
        let r: f64 = ax.iter().zip(&bx).map(|(p, q)| (p - eig.values[j] * q).powi(2)).sum();
        res = res.max(r.sqrt() / norm);
        for (i, y) in xs.iter().enumerate() {
            let d: f64 = y.iter().zip(&bx).map(|(p, q)| p * q).sum();
            orth = orth.max((d - f64::from(u8::from(i == j))).abs());
        }
    }
    (res, orth)
}

fn criterion9() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    let (mut res, mut orth): (f64, f64) = (0.0, 0.0);
    for dim in [1, 3, 10, 50, 120, 200] {
        let (r, o) = pencil_defects(dim, &mut rng);
        res = res.max(r);
        orth = orth.max(o);
    }
    outcome(
        res <= 1e-8 && orth <= 1e-8,
        format!("residual/|A|={res:.2e} B-orthonormality={orth:.2e} dims<=200"),
    )
}

fn criterion10(cases: &[(&'static str, Prepared, CurvatureCase)]) -> Expected {
    let (_, p, case) = cases.iter().find(|c| c.0 == "ellipse").unwrap();
    let probe = CurvatureCase {
        kappa_plus: 0.5 * case.kappa_plus,
        ..*case
    };
    let tol = 0.01 * probe.kappa_plus;
    let t = pipeline::theorem1(&probe, p, 40, tol).unwrap();
    let (s, l) = (p.sigma.flattened(), p.lambda.flattened());
    // Smallest κ̃ satisfying (i) and (ii) on j <= 40.
    let critical = (1..=40)
        .map(|j| ((l[j] - s[j] * s[j]) / s[j]).max((s[j] * s[j] - l[j]) / s[j]))
        .fold(0.0, f64::max);
    let detected = !t.pass;
    outcome(
        detected,
        format!(
            "violations detected={detected} probe kappa={:.3} critical kappa={critical:.4}",
            probe.kappa_plus
        ),
    )
    .with_signature(!detected && critical < probe.kappa_plus)
}

struct Expected {
    outcome: Outcome,
    /// `Some(signature_holds)` for criteria expected to fail.
    known_failure: Option<bool>,
}

impl Outcome {
    fn with_signature(self, holds: bool) -> Expected {
        Expected {
            outcome: self,
            known_failure: Some(holds),
        }
    }

    fn expected_pass(self) -> Expected {
        Expected {
            outcome: self,
            known_failure: None,
        }
    }
}

fn main() -> ExitCode {
    let start = Instant::now();
    let cases = fem_cases();
    let results = [
        ("euclidean exactness", criterion1().expected_pass()),
        ("space-form oracle", criterion2().expected_pass()),
        ("theorem1 on exact matrix", criterion3().expected_pass()),
        ("fem convergence", criterion4().expected_pass()),
        ("fem bound checks", criterion5(&cases).expected_pass()),
        ("pohozaev identity", criterion6().expected_pass()),
        ("weyl asymptotics", criterion7()),
        ("corollary1 shape", criterion8()),
        ("eigensolver", criterion9().expected_pass()),
        ("falsification probe", criterion10(&cases)),
    ];
    let mut unexpected = 0;
    for (i, (name, e)) in results.iter().enumerate() {
        let status = if e.outcome.pass { "PASS" } else { "FAIL" };
        let note = match (e.known_failure, e.outcome.pass) {
            (None, true) | (Some(true), false) => "",
            (Some(true), true) | (Some(false), _) | (None, false) => {
                unexpected += 1;
                " [UNEXPECTED]"
            }
        };
        let known = if e.known_failure.is_some() && !e.outcome.pass { " (known)" } else { "" };
        println!("criterion {:>2} {name}: {status}{known}{note} {}", i + 1, e.outcome.detail);
    }
    println!("acceptance finished in {:.1}s", start.elapsed().as_secs_f64());
    if unexpected == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
