//! Conformal models `ρ(x)² |dx|²` of the two-dimensional space forms.
//!
//! Curvature `-a` is the Poincaré disk with `ρ = 2/(√a (1 - |x|²))`, curvature
//! `+a` the stereographic plane with `ρ = 2/(√a (1 + |x|²))`. In both, the
//! geodesic distance from the origin is a function of `|x|` only.

use crate::error::{Error, Result};
use crate::fem::mesh::{BoundaryCurve, Point};
use crate::spaceform::{curvature_sign, CurvatureSign, SpaceForm};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MetricModel {
    Flat,
    Hyperbolic,
    Spherical,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConformalMetric {
    curvature: f64,
}

impl ConformalMetric {
    pub fn flat() -> Self {
        Self { curvature: 0.0 }
    }

    pub fn hyperbolic(a: f64) -> Self {
        Self { curvature: -a.abs() }
    }

    pub fn spherical(a: f64) -> Self {
        Self { curvature: a.abs() }
    }

    pub fn from_curvature(curvature: f64) -> Self {
        Self { curvature }
    }

    pub fn curvature(&self) -> f64 {
        self.curvature
    }

    pub fn model(&self) -> MetricModel {
        match curvature_sign(self.curvature) {
            CurvatureSign::Zero => MetricModel::Flat,
            CurvatureSign::Negative => MetricModel::Hyperbolic,
            CurvatureSign::Positive => MetricModel::Spherical,
        }
    }

    pub fn space_form(&self) -> SpaceForm {
        SpaceForm {
            curvature: self.curvature,
            ambient_dim: 2,
        }
    }

    fn root_a(&self) -> f64 {
        self.curvature.abs().sqrt()
    }

    pub fn check_point(&self, p: Point) -> Result<()> {
        if self.model() == MetricModel::Hyperbolic && p[0] * p[0] + p[1] * p[1] >= 1.0 {
            return Err(Error::MetricInvalid {
                x: p[0],
                y: p[1],
                reason: "outside the Poincaré disk".into(),
            });
        }
        Ok(())
    }

    /// Conformal factor `ρ(x)`.
    pub fn factor(&self, p: Point) -> f64 {
        let r2 = p[0] * p[0] + p[1] * p[1];
        match self.model() {
            MetricModel::Flat => 1.0,
            MetricModel::Hyperbolic => 2.0 / (self.root_a() * (1.0 - r2)),
            MetricModel::Spherical => 2.0 / (self.root_a() * (1.0 + r2)),
        }
    }

    /// `∇ log ρ`.
    pub fn grad_log_factor(&self, p: Point) -> Point {
        let r2 = p[0] * p[0] + p[1] * p[1];
        let c = match self.model() {
            MetricModel::Flat => 0.0,
            MetricModel::Hyperbolic => 2.0 / (1.0 - r2),
            MetricModel::Spherical => -2.0 / (1.0 + r2),
        };
        [c * p[0], c * p[1]]
    }

    /// Geodesic distance from the origin to a point at planar radius `r`,
    /// with its first two derivatives in `r`.
    pub fn radial_distance(&self, r: f64) -> (f64, f64, f64) {
        let s = self.root_a();
        match self.model() {
            MetricModel::Flat => (r, 1.0, 0.0),
            MetricModel::Hyperbolic => {
                let q = 1.0 - r * r;
                (2.0 * r.atanh() / s, 2.0 / (s * q), 4.0 * r / (s * q * q))
            }
            MetricModel::Spherical => {
                let q = 1.0 + r * r;
                (2.0 * r.atan() / s, 2.0 / (s * q), -4.0 * r / (s * q * q))
            }
        }
    }

    /// Planar radius of the circle of geodesic radius `radius` about the origin.
    pub fn planar_radius(&self, radius: f64) -> f64 {
        let s = self.root_a();
        match self.model() {
            MetricModel::Flat => radius,
            MetricModel::Hyperbolic => (0.5 * s * radius).tanh(),
            MetricModel::Spherical => (0.5 * s * radius).tan(),
        }
    }

    /// Geodesic curvature of a curve with planar curvature `kappa_flat` and
    /// outward unit normal `normal` at `p`: `(κ + ∂_ν log ρ)/ρ`.
    pub fn geodesic_curvature(&self, p: Point, normal: Point, kappa_flat: f64) -> f64 {
        let g = self.grad_log_factor(p);
        (kappa_flat + g[0] * normal[0] + g[1] * normal[1]) / self.factor(p)
    }

    /// Range of the geodesic curvature of a smooth curve, sampled at
    /// `samples` angles. `None` for polygons.
    pub fn curvature_range(&self, curve: &BoundaryCurve, samples: usize) -> Option<(f64, f64)> {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..samples {
            let theta = 2.0 * std::f64::consts::PI * i as f64 / samples as f64;
            let (p, normal, kappa) = curve.frame(theta)?;
            let k = self.geodesic_curvature(p, normal, kappa);
            lo = lo.min(k);
            hi = hi.max(k);
        }
        Some((lo, hi))
    }
}
