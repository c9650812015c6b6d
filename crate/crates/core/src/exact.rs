//! Steklov and boundary-Laplacian spectra of geodesic balls.
//!
//! Separating variables in geodesic polar coordinates `dr² + sn_K(r)² g_{S^n}`,
//! a harmonic function `f(r) Y_k` with `Y_k` a degree-`k` spherical harmonic
//! satisfies
//!
//! ```text
//! f'' + n (sn'/sn) f' - μ_k f / sn² = 0,    μ_k = k (k + n - 1),
//! ```
//!
//! and the Steklov eigenvalue of that mode is `f'(R)/f(R)`. The log-derivative
//! `w = f'/f` obeys the Riccati equation `w' = -n (sn'/sn) w - w² + μ_k/sn²`,
//! which we integrate as `v = r w` in the variable `t = ln r`:
//!
//! ```text
//! dv/dt = v (1 - n r sn'/sn) - v² + μ_k (r/sn)²,    v(ε) = k.
//! ```
//!
//! In flat space `v ≡ k` is an exact fixed point, and near `r = 0` the
//! coefficients are analytic, so the launch at `ε` needs only the leading term.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::spaceform::{generalized_sin, hemisphere_radius, CurvatureSign, SpaceForm};
use crate::spectrum::{SpectrumEntry, SpectrumKind, SpectrumTable};

/// Geodesic ball of radius `radius` in a space form. Spherical caps must lie
/// strictly inside a hemisphere.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BallDomain {
    pub space_form: SpaceForm,
    pub radius: f64,
}

impl BallDomain {
    pub fn new(space_form: SpaceForm, radius: f64) -> Result<Self> {
        let limit = match space_form.sign() {
            CurvatureSign::Positive => hemisphere_radius(space_form.curvature),
            _ => f64::INFINITY,
        };
        if !(radius > 0.0) || !(radius < limit) {
            return Err(Error::RadiusOutOfRange { radius, limit });
        }
        Ok(Self { space_form, radius })
    }

    /// Boundary dimension `n`.
    pub fn n(&self) -> usize {
        self.space_form.boundary_dim()
    }

    /// Radius of the boundary sphere as a round sphere, `sn_K(R)`.
    pub fn boundary_radius(&self) -> f64 {
        generalized_sin(self.space_form.curvature, self.radius)
    }
}

fn binomial(m: u64, r: u64) -> u128 {
    if r > m {
        return 0;
    }
    let r = r.min(m - r);
    let mut acc: u128 = 1;
    for i in 0..r {
        acc = acc * (m - i) as u128 / (i + 1) as u128;
    }
    acc
}

/// Dimension of the space of degree-`k` spherical harmonics on `S^n`.
pub fn spherical_harmonic_multiplicity(n: usize, k: usize) -> usize {
    match k {
        0 => 1,
        1 => n + 1,
        _ => {
            let (n, k) = (n as u64, k as u64);
            (binomial(n + k, n) - binomial(n + k - 2, n)) as usize
        }
    }
}

/// `Γ(m/2)` for a positive integer `m`.
fn gamma_half(m: usize) -> f64 {
    assert!(m > 0);
    let (mut x, mut acc) = if m.is_multiple_of(2) { (1.0, 1.0) } else { (0.5, PI.sqrt()) };
    let target = m as f64 / 2.0;
    while x < target {
        acc *= x;
        x += 1.0;
    }
    acc
}

/// Area of the unit sphere `S^n`.
pub fn unit_sphere_area(n: usize) -> f64 {
    2.0 * PI.powf((n + 1) as f64 / 2.0) / gamma_half(n + 1)
}

/// Volume `ω_n` of the unit ball in `R^n`.
pub fn unit_ball_volume(n: usize) -> f64 {
    PI.powf(n as f64 / 2.0) / gamma_half(n + 2)
}

/// `|Σ|` for the boundary of a geodesic ball.
pub fn boundary_area(ball: &BallDomain) -> f64 {
    unit_sphere_area(ball.n()) * ball.boundary_radius().powi(ball.n() as i32)
}

/// Smallest degree `k` such that degrees `0..=k` hold at least `count`
/// eigenvalues with multiplicity.
fn degree_cover(n: usize, count: usize) -> usize {
    let mut total = 0;
    let mut k = 0;
    loop {
        total += spherical_harmonic_multiplicity(n, k);
        if total >= count {
            return k;
        }
        k += 1;
    }
}

pub fn boundary_laplacian_spectrum(ball: &BallDomain, count: usize) -> Result<SpectrumTable> {
    if count == 0 {
        return Err(Error::InvalidArgument("count must be at least 1".into()));
    }
    let n = ball.n();
    let s2 = ball.boundary_radius().powi(2);
    let entries = (0..=degree_cover(n, count))
        .map(|k| SpectrumEntry {
            value: (k * (k + n - 1)) as f64 / s2,
            multiplicity: spherical_harmonic_multiplicity(n, k),
            mode_degree: k,
        })
        .collect();
    SpectrumTable::new(SpectrumKind::BoundaryLaplacian, entries)
}

/// Controls for the radial Riccati integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialOptions {
    /// Relative local error allowed per step.
    pub rel_tol: f64,
    /// Launch point as a fraction of the radius.
    pub launch_fraction: f64,
    /// Largest relative change of the result allowed when the launch point
    /// is doubled.
    pub launch_check: f64,
    pub max_steps: usize,
}

impl Default for RadialOptions {
    fn default() -> Self {
        Self {
            rel_tol: 1e-12,
            launch_fraction: 1e-6,
            launch_check: 1e-9,
            max_steps: 2_000_000,
        }
    }
}

/// Coefficients `r sn'/sn` and `r/sn` of the scaled Riccati equation.
#[derive(Debug, Clone, Copy)]
struct RadialCoefficients {
    curvature: f64,
}

impl RadialCoefficients {
    fn at(&self, r: f64) -> (f64, f64) {
        let k = self.curvature;
        match crate::spaceform::curvature_sign(k) {
            CurvatureSign::Zero => (1.0, 1.0),
            CurvatureSign::Positive => {
                let x = k.sqrt() * r;
                let (sin, cos) = x.sin_cos();
                (x * cos / sin, x / sin)
            }
            CurvatureSign::Negative => {
                let x = (-k).sqrt() * r;
                let sinh = x.sinh();
                (x * x.cosh() / sinh, x / sinh)
            }
        }
    }
}

struct RiccatiProblem {
    coeffs: RadialCoefficients,
    n: f64,
    mu: f64,
}

impl RiccatiProblem {
    fn rhs(&self, t: f64, v: f64) -> f64 {
        let (c, q) = self.coeffs.at(t.exp());
        v * (1.0 - self.n * c) - v * v + self.mu * q * q
    }

    fn rk4(&self, t: f64, v: f64, h: f64) -> f64 {
        let k1 = self.rhs(t, v);
        let k2 = self.rhs(t + 0.5 * h, v + 0.5 * h * k1);
        let k3 = self.rhs(t + 0.5 * h, v + 0.5 * h * k2);
        let k4 = self.rhs(t + h, v + h * k3);
        v + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    }

    /// Adaptive classical RK4 with step doubling from `t0` to `t1`.
    fn integrate(&self, t0: f64, t1: f64, v0: f64, opts: &RadialOptions, degree: usize) -> Result<f64> {
        let span = t1 - t0;
        let rate = 2.0 * self.mu.sqrt() + self.n + 1.0;
        let mut h = (span / 64.0).min(0.5 / rate);
        let h_min = 1e-14 * span.max(1.0);
        let (mut t, mut v) = (t0, v0);
        let mut steps = 0;
        while t < t1 {
            if steps >= opts.max_steps {
                return Err(Error::StepUnderflow { r: t.exp(), degree });
            }
            steps += 1;
            let last = t + h >= t1;
            let step = if last { t1 - t } else { h };
            let coarse = self.rk4(t, v, step);
            let half = self.rk4(t, v, 0.5 * step);
            let fine = self.rk4(t + 0.5 * step, half, 0.5 * step);
            if !fine.is_finite() || !coarse.is_finite() {
                // Retry with a smaller step before giving up.
                h = 0.25 * step;
                if h < h_min {
                    return Err(Error::NonFinite { r: t.exp(), degree });
                }
                continue;
            }
            let err = (fine - coarse).abs() / 15.0;
            let allowed = opts.rel_tol * fine.abs().max(1.0);
            if err <= allowed {
                t = if last { t1 } else { t + step };
                v = fine + (fine - coarse) / 15.0;
                let grow = if err > 0.0 {
                    0.9 * (allowed / err).powf(0.2)
                } else {
                    4.0
                };
                h = step * grow.clamp(0.2, 4.0);
            } else {
                h = step * (0.9 * (allowed / err).powf(0.2)).clamp(0.1, 0.9);
                if h < h_min {
                    return Err(Error::StepUnderflow { r: t.exp(), degree });
                }
            }
        }
        if !v.is_finite() {
            return Err(Error::NonFinite { r: t1.exp(), degree });
        }
        Ok(v)
    }
}

fn log_derivative_from(ball: &BallDomain, k: usize, launch: f64, opts: &RadialOptions) -> Result<f64> {
    let n = ball.n();
    let problem = RiccatiProblem {
        coeffs: RadialCoefficients {
            curvature: ball.space_form.curvature,
        },
        n: n as f64,
        mu: (k * (k + n - 1)) as f64,
    };
    let v = problem.integrate(launch.ln(), ball.radius.ln(), k as f64, opts, k)?;
    Ok(v / ball.radius)
}

/// Steklov eigenvalue of the degree-`k` mode, `f_k'(R)/f_k(R)`.
pub fn radial_log_derivative(ball: &BallDomain, k: usize) -> Result<f64> {
    radial_log_derivative_with(ball, k, &RadialOptions::default())
}

pub fn radial_log_derivative_with(ball: &BallDomain, k: usize, opts: &RadialOptions) -> Result<f64> {
    if k == 0 {
        return Err(Error::InvalidArgument("degree must be at least 1".into()));
    }
    let eps = opts.launch_fraction * ball.radius;
    let sigma = log_derivative_from(ball, k, eps, opts)?;
    let doubled = log_derivative_from(ball, k, 2.0 * eps, opts)?;
    let change = (sigma - doubled).abs() / sigma.abs();
    if !(change < opts.launch_check) {
        return Err(Error::LaunchSensitivity {
            degree: k,
            relative_change: change,
            limit: opts.launch_check,
        });
    }
    if !(sigma > 0.0) {
        return Err(Error::NonFinite {
            r: ball.radius,
            degree: k,
        });
    }
    Ok(sigma)
}

pub fn steklov_ball_spectrum(ball: &BallDomain, count: usize) -> Result<SpectrumTable> {
    steklov_ball_spectrum_with(ball, count, &RadialOptions::default())
}

pub fn steklov_ball_spectrum_with(
    ball: &BallDomain,
    count: usize,
    opts: &RadialOptions,
) -> Result<SpectrumTable> {
    if count == 0 {
        return Err(Error::InvalidArgument("count must be at least 1".into()));
    }
    let n = ball.n();
    let max_degree = degree_cover(n, count);
    let sigmas = (1..=max_degree)
        .into_par_iter()
        .map(|k| radial_log_derivative_with(ball, k, opts))
        .collect::<Result<Vec<f64>>>()?;

    let mut entries = Vec::with_capacity(max_degree + 1);
    entries.push(SpectrumEntry {
        value: 0.0,
        multiplicity: 1,
        mode_degree: 0,
    });
    let mut previous = 0.0;
    for (i, &sigma) in sigmas.iter().enumerate() {
        let k = i + 1;
        if !(sigma > previous) {
            return Err(Error::NonMonotoneSpectrum { degree: k });
        }
        previous = sigma;
        entries.push(SpectrumEntry {
            value: sigma,
            multiplicity: spherical_harmonic_multiplicity(n, k),
            mode_degree: k,
        });
    }
    SpectrumTable::new(SpectrumKind::Steklov, entries)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_4;

    fn ball(k: f64, dim: usize, r: f64) -> BallDomain {
        BallDomain::new(SpaceForm::new(k, dim).unwrap(), r).unwrap()
    }

    #[test]
    fn multiplicity_examples() {
        assert_eq!(spherical_harmonic_multiplicity(1, 3), 2);
        assert_eq!(spherical_harmonic_multiplicity(2, 1), 3);
        assert_eq!(spherical_harmonic_multiplicity(2, 2), 5);
        assert_eq!(spherical_harmonic_multiplicity(3, 4), 25);
        for k in 0..50 {
            assert_eq!(spherical_harmonic_multiplicity(2, k), 2 * k + 1);
        }
    }

    #[test]
    fn sphere_and_ball_volumes() {
        assert!((unit_sphere_area(1) - 2.0 * PI).abs() < 1e-14);
        assert!((unit_sphere_area(2) - 4.0 * PI).abs() < 1e-13);
        assert!((unit_sphere_area(3) - 2.0 * PI * PI).abs() < 1e-13);
        assert!((unit_ball_volume(1) - 2.0).abs() < 1e-15);
        assert!((unit_ball_volume(2) - PI).abs() < 1e-15);
        assert!((unit_ball_volume(3) - 4.0 * PI / 3.0).abs() < 1e-14);
    }

    #[test]
    fn boundary_area_examples() {
        assert!((boundary_area(&ball(0.0, 2, 1.0)) - 2.0 * PI).abs() < 1e-14);
        assert!((boundary_area(&ball(0.0, 3, 2.0)) - 16.0 * PI).abs() < 1e-12);
        assert!((boundary_area(&ball(-1.0, 2, 1.0)) - 2.0 * PI * 1.0f64.sinh()).abs() < 1e-13);
    }

    #[test]
    fn laplacian_examples() {
        let t = boundary_laplacian_spectrum(&ball(0.0, 2, 1.0), 7).unwrap();
        assert_eq!(&t.flattened()[..7], &[0.0, 1.0, 1.0, 4.0, 4.0, 9.0, 9.0]);
        let t = boundary_laplacian_spectrum(&ball(-1.0, 2, 1.0), 9).unwrap();
        let s = 1.0f64.sinh();
        for (j, v) in t.flattened().iter().enumerate().skip(1) {
            let k = j.div_ceil(2) as f64;
            assert!((v - (k / s).powi(2)).abs() < 1e-12);
        }
        assert_eq!(boundary_laplacian_spectrum(&ball(1.0, 4, 0.5), 1).unwrap().value(0), Some(0.0));
    }

    #[test]
    fn euclidean_log_derivative_is_exact() {
        for dim in 2..=5 {
            for &r in &[0.5, 1.0, 2.0] {
                let b = ball(0.0, dim, r);
                for k in [1, 2, 7, 40] {
                    let sigma = radial_log_derivative(&b, k).unwrap();
                    let exact = k as f64 / r;
                    assert!((sigma - exact).abs() <= 1e-10 * exact, "n={} k={k}", dim - 1);
                }
            }
        }
    }

    /// Conformal-map oracle for the 2D geodesic disk: the disk of radius `R`
    /// is the Euclidean disk of radius `tanh(R/2)` (resp. `tan(R/2)`) with
    /// factor `2/(1 ∓ r²)`; the flat DtN eigenvalue `k/r_e` is divided by the
    /// factor on the boundary.
    fn conformal_oracle(k: usize, curvature: f64, radius: f64) -> f64 {
        let (r_e, factor) = if curvature < 0.0 {
            let r_e = (0.5 * radius).tanh();
            (r_e, 2.0 / (1.0 - r_e * r_e))
        } else {
            let r_e = (0.5 * radius).tan();
            (r_e, 2.0 / (1.0 + r_e * r_e))
        };
        k as f64 / r_e / factor
    }

    #[test]
    fn two_dimensional_space_forms_match_conformal_oracle() {
        for (curv, radii) in [(-1.0, [0.5, 1.0, 2.0]), (1.0, [0.4, 0.8, 1.2])] {
            for r in radii {
                let b = ball(curv, 2, r);
                for k in 1..=40 {
                    let sigma = radial_log_derivative(&b, k).unwrap();
                    let oracle = conformal_oracle(k, curv, r);
                    assert!((sigma - oracle).abs() <= 1e-8 * oracle, "K={curv} R={r} k={k}");
                }
            }
        }
        let sigma = radial_log_derivative(&ball(-1.0, 2, 1.0), 2).unwrap();
        assert!((sigma - 1.7018).abs() < 1e-4);
        let sigma = radial_log_derivative(&ball(1.0, 2, FRAC_PI_4), 1).unwrap();
        assert!((sigma - 2.0f64.sqrt()).abs() < 1e-9);
    }

    #[test]
    fn steklov_ball_examples() {
        let t = steklov_ball_spectrum(&ball(0.0, 3, 1.0), 16).unwrap();
        let expected = [(0.0, 1), (1.0, 3), (2.0, 5), (3.0, 7)];
        for (e, &(v, m)) in t.entries().iter().zip(&expected) {
            assert!((e.value - v).abs() < 1e-10);
            assert_eq!(e.multiplicity, m);
        }
        let t = steklov_ball_spectrum(&ball(-1.0, 2, 2.0), 9).unwrap();
        for (j, v) in t.flattened().iter().enumerate().skip(1) {
            let k = j.div_ceil(2) as f64;
            assert!((v - k / 2.0f64.sinh()).abs() < 1e-8 * v);
        }
        let t = steklov_ball_spectrum(&ball(1.0, 4, 1.0), 1).unwrap();
        assert_eq!(t.flattened(), vec![0.0]);
    }

    #[test]
    fn degrees_are_strictly_monotone_and_gap_is_bounded() {
        use crate::spaceform::geodesic_sphere_curvature;
        for (curv, r) in [(-1.0, 2.0), (1.0, 1.2), (-4.0, 0.5)] {
            for dim in 2..=4 {
                let b = ball(curv, dim, r);
                let n = b.n();
                let kappa = geodesic_sphere_curvature(&b.space_form, r).unwrap();
                let a = f64::abs(curv);
                let kappa_tilde = if curv < 0.0 { kappa } else { (a + kappa * kappa).sqrt() };
                let mut prev = (0.0, 0.0);
                for k in 1..=60 {
                    let sigma = radial_log_derivative(&b, k).unwrap();
                    let lambda = (k * (k + n - 1)) as f64 / b.boundary_radius().powi(2);
                    assert!(sigma > prev.0 && lambda > prev.1);
                    prev = (sigma, lambda);
                    let gap = (sigma - lambda.sqrt()).abs();
                    assert!(gap <= (n as f64 / 2.0).max(1.0) * kappa_tilde, "K={curv} n={n} k={k}");
                }
            }
        }
    }

    #[test]
    fn launch_point_is_insensitive() {
        let b = ball(-1.0, 4, 2.0);
        let base = radial_log_derivative(&b, 5).unwrap();
        let opts = RadialOptions {
            launch_fraction: 1e-4,
            ..RadialOptions::default()
        };
        let moved = radial_log_derivative_with(&b, 5, &opts).unwrap();
        assert!((base - moved).abs() < 1e-9 * base);
    }

    #[test]
    fn rejects_bad_inputs() {
        let sf = SpaceForm::new(1.0, 3).unwrap();
        assert!(BallDomain::new(sf, 1.6).is_err());
        assert!(BallDomain::new(sf, -1.0).is_err());
        assert!(radial_log_derivative(&ball(0.0, 3, 1.0), 0).is_err());
        assert!(boundary_laplacian_spectrum(&ball(0.0, 3, 1.0), 0).is_err());
    }
}
