//! Constant-curvature model geometry.
//!
//! Generalized trigonometric functions, the Kasue comparison profile, the
//! tubular-neighbourhood width and the potential `eta` built on the distance
//! to a parallel hypersurface, together with the pointwise bounds on the
//! eigenvalues of its Hessian.

use std::f64::consts::FRAC_PI_2;

use crate::error::{Error, Result};

/// Curvatures with magnitude below this are treated as exactly flat.
pub const FLAT_THRESHOLD: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CurvatureSign {
    Negative,
    Zero,
    Positive,
}

pub fn curvature_sign(k: f64) -> CurvatureSign {
    if k.abs() < FLAT_THRESHOLD {
        CurvatureSign::Zero
    } else if k < 0.0 {
        CurvatureSign::Negative
    } else {
        CurvatureSign::Positive
    }
}

/// Ambient space form of constant sectional curvature and dimension `n + 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpaceForm {
    pub curvature: f64,
    pub ambient_dim: usize,
}

impl SpaceForm {
    pub fn new(curvature: f64, ambient_dim: usize) -> Result<Self> {
        if ambient_dim < 2 {
            return Err(Error::InvalidArgument(format!(
                "ambient dimension must be at least 2, got {ambient_dim}"
            )));
        }
        if !curvature.is_finite() {
            return Err(Error::InvalidArgument("curvature must be finite".into()));
        }
        Ok(Self {
            curvature,
            ambient_dim,
        })
    }

    /// Dimension `n` of boundary hypersurfaces.
    pub fn boundary_dim(&self) -> usize {
        self.ambient_dim - 1
    }

    pub fn sign(&self) -> CurvatureSign {
        curvature_sign(self.curvature)
    }
}

/// `sn_K(t)`: `sin(√K t)/√K`, `t`, or `sinh(√-K t)/√-K`.
pub fn generalized_sin(k: f64, t: f64) -> f64 {
    match curvature_sign(k) {
        CurvatureSign::Zero => t,
        CurvatureSign::Positive => {
            let s = k.sqrt();
            (s * t).sin() / s
        }
        CurvatureSign::Negative => {
            let s = (-k).sqrt();
            (s * t).sinh() / s
        }
    }
}

/// Derivative of [`generalized_sin`] in `t`.
pub fn generalized_cos(k: f64, t: f64) -> f64 {
    match curvature_sign(k) {
        CurvatureSign::Zero => 1.0,
        CurvatureSign::Positive => (k.sqrt() * t).cos(),
        CurvatureSign::Negative => ((-k).sqrt() * t).cosh(),
    }
}

/// Comparison profile `f(t)` for a sectional curvature bound `k` and a second
/// fundamental form bound `theta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComparisonProfile {
    pub k: f64,
    pub theta: f64,
}

impl ComparisonProfile {
    pub fn new(k: f64, theta: f64) -> Self {
        Self { k, theta }
    }

    pub fn eval(&self, t: f64) -> f64 {
        comparison_f(*self, t)
    }

    /// `f'(t)`.
    pub fn derivative(&self, t: f64) -> f64 {
        let theta = self.theta;
        match curvature_sign(self.k) {
            CurvatureSign::Zero => -theta,
            CurvatureSign::Positive => {
                let s = self.k.sqrt();
                -s * (s * t).sin() - theta * (s * t).cos()
            }
            CurvatureSign::Negative => {
                let s = (-self.k).sqrt();
                s * (s * t).sinh() - theta * (s * t).cosh()
            }
        }
    }

    pub fn first_zero(&self) -> f64 {
        first_zero(*self)
    }
}

pub fn comparison_f(profile: ComparisonProfile, t: f64) -> f64 {
    let theta = profile.theta;
    match curvature_sign(profile.k) {
        CurvatureSign::Zero => 1.0 - theta * t,
        CurvatureSign::Positive => {
            let s = profile.k.sqrt();
            (s * t).cos() - theta / s * (s * t).sin()
        }
        CurvatureSign::Negative => {
            let s = (-profile.k).sqrt();
            (s * t).cosh() - theta / s * (s * t).sinh()
        }
    }
}

/// Smallest `t > 0` with `f(t) = 0`, or `+inf` when `f` stays positive.
pub fn first_zero(profile: ComparisonProfile) -> f64 {
    let theta = profile.theta;
    match curvature_sign(profile.k) {
        CurvatureSign::Zero => {
            if theta > 0.0 {
                1.0 / theta
            } else {
                f64::INFINITY
            }
        }
        // tan(√k t) = √k/θ; atan2 picks the branch in (0, π) for every sign of θ.
        CurvatureSign::Positive => {
            let s = profile.k.sqrt();
            s.atan2(theta) / s
        }
        CurvatureSign::Negative => {
            let s = (-profile.k).sqrt();
            if theta > s {
                (s / theta).atanh() / s
            } else {
                f64::INFINITY
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CaseId {
    /// `-a <= K <= 0`, `0 < √a <= II <= κ₊`.
    Case1,
    /// `0 < K <= a`, `0 <= II <= κ₊`.
    Case2,
}

impl std::fmt::Display for CaseId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CaseId::Case1 => f.write_str("case1"),
            CaseId::Case2 => f.write_str("case2"),
        }
    }
}

/// Curvature hypotheses of the comparison theorem: the ambient curvature
/// bound `a` and the range `[kappa_minus, kappa_plus]` of the principal
/// curvatures of the boundary.
///
/// Fields are public so that deliberately wrong cases can be built for
/// falsification probes; [`CurvatureCase::new`] enforces the hypotheses.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvatureCase {
    pub case_id: CaseId,
    pub a: f64,
    pub kappa_minus: f64,
    pub kappa_plus: f64,
    pub n: usize,
}

impl CurvatureCase {
    pub fn new(case_id: CaseId, a: f64, kappa_minus: f64, kappa_plus: f64, n: usize) -> Result<Self> {
        let case = Self {
            case_id,
            a,
            kappa_minus,
            kappa_plus,
            n,
        };
        case.validate()?;
        Ok(case)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::CaseViolation("boundary dimension n must be positive".into()));
        }
        if !(self.a > 0.0) || !self.a.is_finite() {
            return Err(Error::CaseViolation(format!("a must be positive, got {}", self.a)));
        }
        if self.kappa_minus > self.kappa_plus {
            return Err(Error::CaseViolation(format!(
                "kappa_minus {} exceeds kappa_plus {}",
                self.kappa_minus, self.kappa_plus
            )));
        }
        match self.case_id {
            CaseId::Case1 => {
                // Relative slack so that a = κ₋² round-trips.
                let root_a = self.a.sqrt();
                if root_a > self.kappa_minus * (1.0 + 1e-12) {
                    return Err(Error::CaseViolation(format!(
                        "case1 requires sqrt(a) = {root_a} <= kappa_minus = {}",
                        self.kappa_minus
                    )));
                }
            }
            CaseId::Case2 => {
                if self.kappa_minus < 0.0 {
                    return Err(Error::CaseViolation(format!(
                        "case2 requires kappa_minus >= 0, got {}",
                        self.kappa_minus
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn potential(&self) -> Potential {
        match self.case_id {
            CaseId::Case1 => Potential::Quadratic,
            CaseId::Case2 => Potential::Cosine { a: self.a },
        }
    }
}

/// Radial profile of the potential `eta` as a function of the distance `d`
/// to the inner parallel hypersurface.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Potential {
    /// `d²/2`
    Quadratic,
    /// `1 - cos(√a d)`
    Cosine { a: f64 },
}

impl Potential {
    pub fn value(&self, d: f64) -> f64 {
        match *self {
            Potential::Quadratic => 0.5 * d * d,
            Potential::Cosine { a } => 1.0 - (a.sqrt() * d).cos(),
        }
    }

    pub fn first(&self, d: f64) -> f64 {
        match *self {
            Potential::Quadratic => d,
            Potential::Cosine { a } => {
                let s = a.sqrt();
                s * (s * d).sin()
            }
        }
    }

    pub fn second(&self, d: f64) -> f64 {
        match *self {
            Potential::Quadratic => 1.0,
            Potential::Cosine { a } => a * (a.sqrt() * d).cos(),
        }
    }
}

/// Width `h̄` of the tube on which the Hessian estimates hold.
pub fn max_tube_width(case: &CurvatureCase) -> Result<f64> {
    match case.case_id {
        CaseId::Case1 => {
            if !(case.kappa_plus > 0.0) {
                return Err(Error::CaseViolation(format!(
                    "case1 tube width needs kappa_plus > 0, got {}",
                    case.kappa_plus
                )));
            }
            Ok(1.0 / case.kappa_plus)
        }
        CaseId::Case2 => {
            // tan(√a h̄) = √a/κ₊, with the κ₊ = 0 limit π/(2√a).
            let s = case.a.sqrt();
            Ok(s.atan2(case.kappa_plus.max(0.0)) / s)
        }
    }
}

pub fn eta(case: &CurvatureCase, d: f64) -> Result<f64> {
    if d < 0.0 {
        return Err(Error::InvalidArgument(format!("distance must be nonnegative, got {d}")));
    }
    Ok(case.potential().value(d))
}

/// Bounds on the Hessian eigenvalues of `eta` at a point at distance `d0`
/// from the boundary, for a tube of width `h`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HessianEtaBounds {
    /// Lower bound for the `n` tangential eigenvalues.
    pub rho_lo: f64,
    /// Upper bound for the tangential eigenvalues after clamping to the final bound.
    pub rho_hi: f64,
    /// Upper bound before clamping (`d/(h̄ - d0)` or its spherical analogue).
    pub rho_hi_raw: f64,
    /// Eigenvalue in the normal direction (exact).
    pub rho_normal: f64,
}

pub fn hessian_eta_bounds(case: &CurvatureCase, d0: f64, h: f64) -> Result<HessianEtaBounds> {
    let h_bar = max_tube_width(case)?;
    if !(h < h_bar) {
        return Err(Error::TubeWidthOutOfRange { h, limit: h_bar });
    }
    if d0 < 0.0 || d0 > h {
        return Err(Error::InvalidArgument(format!(
            "d0 = {d0} must lie in [0, h = {h}]"
        )));
    }
    let d = h - d0;
    let bounds = match case.case_id {
        CaseId::Case1 => {
            let raw = d / (h_bar - d0);
            HessianEtaBounds {
                rho_lo: (case.a.sqrt() * d).max(0.0),
                rho_hi: raw.min(1.0),
                rho_hi_raw: raw,
                rho_normal: 1.0,
            }
        }
        CaseId::Case2 => {
            let s = case.a.sqrt();
            let normal = case.a * (s * d).cos();
            let raw = case.a * (s * d).sin() / (s * (h_bar - d0)).tan();
            HessianEtaBounds {
                rho_lo: 0.0,
                rho_hi: raw.min(normal),
                rho_hi_raw: raw,
                rho_normal: normal,
            }
        }
    };
    Ok(bounds)
}

/// Principal curvature of the geodesic sphere of radius `r`, i.e. the
/// logarithmic derivative of `sn_K` at `r`.
pub fn geodesic_sphere_curvature(sf: &SpaceForm, r: f64) -> Result<f64> {
    let k = sf.curvature;
    let limit = match sf.sign() {
        CurvatureSign::Positive => std::f64::consts::PI / k.sqrt(),
        _ => f64::INFINITY,
    };
    if !(r > 0.0) || r >= limit {
        return Err(Error::RadiusOutOfRange { radius: r, limit });
    }
    Ok(match sf.sign() {
        CurvatureSign::Zero => 1.0 / r,
        CurvatureSign::Negative => {
            let s = (-k).sqrt();
            s / (s * r).tanh()
        }
        CurvatureSign::Positive => {
            let s = k.sqrt();
            s / (s * r).tan()
        }
    })
}

/// Pointwise bounds on `Q = |∇u|²Δη - 2∇²η(∇u,∇u)` given `|∇u|²`.
pub fn q_form_bounds(case: &CurvatureCase, grad_sq: f64) -> (f64, f64) {
    let n = case.n as f64;
    let scale = match case.case_id {
        CaseId::Case1 => 1.0,
        CaseId::Case2 => case.a,
    };
    (-scale * grad_sq, n * scale * grad_sq)
}

/// Largest geodesic radius of a spherical cap with nonnegative boundary
/// curvature, `π/(2√a)`.
pub fn hemisphere_radius(a: f64) -> f64 {
    FRAC_PI_2 / a.sqrt()
}
