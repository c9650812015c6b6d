//! Pohozaev-type identity and the boundary energy inequalities evaluated on
//! finite element fields.
//!
//! All integrals are reduced to flat quadrature. With `g = ρ²δ`, `φ = log ρ`,
//! `G` the flat gradient of `u`, `F` a vector field in coordinates and
//! `J_ki = ∂_i F^k`:
//!
//! | metric quantity            | flat form                              |
//! |----------------------------|----------------------------------------|
//! | `⟨F, ∇u⟩_g`                | `F·G`                                  |
//! | `|∇u|²_g dv_g`             | `|G|² dx`                              |
//! | `∂u/∂ν_g dσ_g`             | `G·ν ds`                               |
//! | `⟨F, ν_g⟩_g dσ_g`          | `ρ² F·ν ds`                            |
//! | `div_g F`                  | `div F + 2 F·∇φ`                       |
//! | `∇F(∇u, ∇u) dv_g`          | `(GᵀJG + |G|² F·∇φ) dx`                |
//! | `Δ_g η dv_g`               | `Δη dx`                                |
//! | `∇²_g η(X, X)`, `X = ∇_g u`| `ρ⁻⁴(GᵀHG - 2(G·∇η)(G·∇φ) + |G|² ∇φ·∇η)` |
//!
//! so the metric terms of `I₃` and `I₄` cancel in `I₃ - I₄`, and
//! `I₂ = ½ ∫ |G|² F·ν ds` carries no factor of `ρ`.

use std::collections::BTreeSet;

use rayon::prelude::*;

use crate::bounds::{effective_kappa, BoundReport};
use crate::error::{Error, Result};
use crate::fem::{
    assemble_boundary_mass, assemble_stiffness, BoundaryCurve, ConformalMetric, MassMode, Mesh, Point,
    SteklovSolution,
};
use crate::linalg::Cholesky;
use crate::spaceform::{max_tube_width, q_form_bounds, CurvatureCase, Potential};

type Mat2 = [[f64; 2]; 2];

fn dot(a: Point, b: Point) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

fn quad(g: Point, m: &Mat2) -> f64 {
    let mut s = 0.0;
    for k in 0..2 {
        for i in 0..2 {
            s += g[k] * m[k][i] * g[i];
        }
    }
    s
}

fn centroid(p: [Point; 3]) -> Point {
    [(p[0][0] + p[1][0] + p[2][0]) / 3.0, (p[0][1] + p[1][1] + p[2][1]) / 3.0]
}

/// Gradient of the linear interpolant from nodal differences, so that
/// constant data give an exactly zero gradient.
fn p1_gradient(p: [Point; 3], f: [f64; 3]) -> Point {
    let (a, b) = ([p[1][0] - p[0][0], p[1][1] - p[0][1]], [p[2][0] - p[0][0], p[2][1] - p[0][1]]);
    let (da, db) = (f[1] - f[0], f[2] - f[0]);
    let det = a[0] * b[1] - a[1] * b[0];
    [(da * b[1] - db * a[1]) / det, (db * a[0] - da * b[0]) / det]
}

/// Flat gradient of a nodal field on every triangle.
pub fn triangle_gradients(mesh: &Mesh, u: &[f64]) -> Vec<Point> {
    mesh.triangles()
        .iter()
        .enumerate()
        .map(|(t, tri)| p1_gradient(mesh.triangle_points(t), [u[tri[0]], u[tri[1]], u[tri[2]]]))
        .collect()
}

fn outward_normal(p: Point, q: Point) -> (Point, f64) {
    let (dx, dy) = (q[0] - p[0], q[1] - p[1]);
    let len = dx.hypot(dy);
    ([dy / len, -dx / len], len)
}

/// How the distance function and its derivatives are obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DistanceScheme {
    /// P1 interpolant of nodal distances with least-squares gradient recovery.
    #[default]
    Recovered,
    /// Closed-form radial distance; circles centered at the origin only.
    ExactRadial,
}

fn circle_radius(curve: &BoundaryCurve) -> Option<f64> {
    match curve {
        BoundaryCurve::Circle { radius } => Some(*radius),
        _ => None,
    }
}

fn point_segment(x: Point, p: Point, q: Point) -> Point {
    let d = [q[0] - p[0], q[1] - p[1]];
    let len2 = dot(d, d);
    let t = if len2 > 0.0 {
        (((x[0] - p[0]) * d[0] + (x[1] - p[1]) * d[1]) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    [p[0] + t * d[0], p[1] + t * d[1]]
}

/// Metric distance from each vertex to the boundary, zero on boundary vertices.
///
/// Circles use the exact radial distance of the model; other curves use the
/// nearest point on the boundary polygon, with the straight segment to it
/// measured by the midpoint rule for `ρ`.
pub fn distance_to_boundary(mesh: &Mesh, curve: &BoundaryCurve, metric: &ConformalMetric) -> Vec<f64> {
    let v = mesh.vertices();
    let mut d: Vec<f64> = if let Some(radius) = circle_radius(curve) {
        let outer = metric.radial_distance(radius).0;
        v.iter()
            .map(|p| (outer - metric.radial_distance(p[0].hypot(p[1])).0).max(0.0))
            .collect()
    } else {
        let nb = mesh.boundary_count();
        v.par_iter()
            .map(|&x| {
                (0..nb)
                    .map(|k| {
                        let (a, b) = mesh.boundary_edge(k);
                        let q = point_segment(x, v[a], v[b]);
                        let mid = [0.5 * (x[0] + q[0]), 0.5 * (x[1] + q[1])];
                        metric.factor(mid) * (x[0] - q[0]).hypot(x[1] - q[1])
                    })
                    .fold(f64::INFINITY, f64::min)
            })
            .collect()
    };
    for &b in mesh.boundary_ring() {
        d[b] = 0.0;
    }
    d
}

/// Least-squares gradient of a nodal field at every vertex from its one-ring.
pub fn recovered_gradients(mesh: &Mesh, f: &[f64]) -> Vec<Point> {
    let v = mesh.vertices();
    let mut ring = vec![BTreeSet::new(); v.len()];
    for tri in mesh.triangles() {
        for k in 0..3 {
            ring[tri[k]].insert(tri[(k + 1) % 3]);
            ring[tri[k]].insert(tri[(k + 2) % 3]);
        }
    }
    ring.par_iter()
        .enumerate()
        .map(|(i, nbrs)| {
            let (mut m00, mut m01, mut m11, mut b0, mut b1) = (0.0, 0.0, 0.0, 0.0, 0.0);
            for &w in nbrs {
                let (dx, dy, df) = (v[w][0] - v[i][0], v[w][1] - v[i][1], f[w] - f[i]);
                m00 += dx * dx;
                m01 += dx * dy;
                m11 += dy * dy;
                b0 += dx * df;
                b1 += dy * df;
            }
            let det = m00 * m11 - m01 * m01;
            [(m11 * b0 - m01 * b1) / det, (m00 * b1 - m01 * b0) / det]
        })
        .collect()
}

/// Potential `η(h - d₀)` and its derivatives on every triangle, evaluated
/// at the centroid.
#[derive(Debug, Clone)]
pub struct EtaField {
    pub case: CurvatureCase,
    pub h: f64,
    pub scheme: DistanceScheme,
    /// `d = max(h - d₀, 0)` at each centroid.
    pub d: Vec<f64>,
    /// Flat gradient of `d` (of `h - d₀`, not clamped).
    pub grad_d: Vec<Point>,
    /// Flat Hessian of `d`.
    pub hess_d: Vec<Mat2>,
    pub support: Vec<bool>,
    /// Vertex distances to the boundary.
    pub d0: Vec<f64>,
}

impl EtaField {
    fn potential(&self) -> Potential {
        self.case.potential()
    }

    /// Flat gradient of `η`.
    pub fn grad_eta(&self, t: usize) -> Point {
        let e1 = self.potential().first(self.d[t]);
        [e1 * self.grad_d[t][0], e1 * self.grad_d[t][1]]
    }

    /// Flat Hessian `η''∇d⊗∇d + η'∇²d`.
    pub fn hess_eta(&self, t: usize) -> Mat2 {
        if !self.support[t] {
            return [[0.0; 2]; 2];
        }
        let p = self.potential();
        // η'' jumps at d = 0; the clamped region contributes nothing.
        let e2 = if self.d[t] > 0.0 { p.second(self.d[t]) } else { 0.0 };
        let e1 = p.first(self.d[t]);
        let (g, hd) = (self.grad_d[t], self.hess_d[t]);
        let mut m = [[0.0; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                m[i][j] = e2 * g[i] * g[j] + e1 * hd[i][j];
            }
        }
        m
    }

    /// `F = ∇_g η` in coordinates, with its Jacobian and boundary trace.
    pub fn vector_field(&self, mesh: &Mesh, metric: &ConformalMetric) -> VectorFieldOnMesh {
        let nt = mesh.triangles().len();
        let mut values = vec![[0.0; 2]; nt];
        let mut jacobians = vec![[[0.0; 2]; 2]; nt];
        for t in 0..nt {
            if !self.support[t] {
                continue;
            }
            let c = centroid(mesh.triangle_points(t));
            let inv = metric.factor(c).powi(-2);
            let (ge, he, gp) = (self.grad_eta(t), self.hess_eta(t), metric.grad_log_factor(c));
            values[t] = [inv * ge[0], inv * ge[1]];
            for k in 0..2 {
                for i in 0..2 {
                    jacobians[t][k][i] = inv * (he[k][i] - 2.0 * gp[i] * ge[k]);
                }
            }
        }
        let e1 = self.potential().first(self.h);
        let v = mesh.vertices();
        let trace = (0..mesh.boundary_count())
            .map(|k| {
                let (a, b) = mesh.boundary_edge(k);
                let t = mesh.boundary_edge_triangle(k);
                let mid = [0.5 * (v[a][0] + v[b][0]), 0.5 * (v[a][1] + v[b][1])];
                let inv = metric.factor(mid).powi(-2);
                [inv * e1 * self.grad_d[t][0], inv * e1 * self.grad_d[t][1]]
            })
            .collect();
        VectorFieldOnMesh {
            values,
            jacobians,
            support: self.support.clone(),
            boundary_trace: trace,
        }
    }
}

/// Builds `η(h - d₀)` data for a tube of width `h`.
pub fn eta_field(
    mesh: &Mesh,
    metric: &ConformalMetric,
    curve: &BoundaryCurve,
    case: &CurvatureCase,
    h: f64,
    scheme: DistanceScheme,
) -> Result<EtaField> {
    let h_bar = max_tube_width(case)?;
    if !(h > 0.0 && h < h_bar) {
        return Err(Error::TubeWidthOutOfRange { h, limit: h_bar });
    }
    let d0 = distance_to_boundary(mesh, curve, metric);
    let inradius = d0.iter().copied().fold(0.0, f64::max);
    if h >= inradius {
        return Err(Error::TubeWidthOutOfRange { h, limit: inradius });
    }
    let radial = match scheme {
        DistanceScheme::ExactRadial => Some(circle_radius(curve).ok_or_else(|| {
            Error::InvalidArgument("exact radial distance needs a circle".into())
        })?),
        DistanceScheme::Recovered => None,
    };

    let nt = mesh.triangles().len();
    let recovered = match scheme {
        DistanceScheme::Recovered => Some(recovered_gradients(mesh, &d0)),
        DistanceScheme::ExactRadial => None,
    };
    let mut d = vec![0.0; nt];
    let mut grad_d = vec![[0.0; 2]; nt];
    let mut hess_d = vec![[[0.0; 2]; 2]; nt];
    let mut support = vec![false; nt];
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let pts = mesh.triangle_points(t);
        let vals = [d0[tri[0]], d0[tri[1]], d0[tri[2]]];
        support[t] = vals.iter().any(|&x| x < h);
        if !support[t] {
            continue;
        }
        let c = centroid(pts);
        match (radial, &recovered) {
            (Some(radius), _) => {
                let r = c[0].hypot(c[1]);
                let (dist, d1, d2) = metric.radial_distance(r);
                let outer = metric.radial_distance(radius).0;
                d[t] = (h - (outer - dist)).max(0.0);
                let x = [c[0] / r, c[1] / r];
                grad_d[t] = [d1 * x[0], d1 * x[1]];
                for i in 0..2 {
                    for j in 0..2 {
                        let delta = if i == j { 1.0 } else { 0.0 };
                        hess_d[t][i][j] = d2 * x[i] * x[j] + d1 / r * (delta - x[i] * x[j]);
                    }
                }
            }
            (None, Some(rec)) => {
                d[t] = (h - (vals[0] + vals[1] + vals[2]) / 3.0).max(0.0);
                let g = p1_gradient(pts, vals);
                grad_d[t] = [-g[0], -g[1]];
                let gx = p1_gradient(pts, [rec[tri[0]][0], rec[tri[1]][0], rec[tri[2]][0]]);
                let gy = p1_gradient(pts, [rec[tri[0]][1], rec[tri[1]][1], rec[tri[2]][1]]);
                let off = -0.5 * (gx[1] + gy[0]);
                hess_d[t] = [[-gx[0], off], [off, -gy[1]]];
            }
            (None, None) => unreachable!(),
        }
    }
    Ok(EtaField {
        case: *case,
        h,
        scheme,
        d,
        grad_d,
        hess_d,
        support,
        d0,
    })
}

/// Piecewise constant vector field with Jacobian, support and boundary trace.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorFieldOnMesh {
    /// Coordinate components at each triangle centroid.
    pub values: Vec<Point>,
    /// `J[k][i] = ∂_i F^k` on each triangle.
    pub jacobians: Vec<Mat2>,
    pub support: Vec<bool>,
    /// Value at the midpoint of each boundary edge.
    pub boundary_trace: Vec<Point>,
}

impl VectorFieldOnMesh {
    pub fn divergence(&self, t: usize) -> f64 {
        self.jacobians[t][0][0] + self.jacobians[t][1][1]
    }
}

/// The field `F(x) = x` in coordinates.
pub fn position_field(mesh: &Mesh) -> VectorFieldOnMesh {
    let nt = mesh.triangles().len();
    let v = mesh.vertices();
    VectorFieldOnMesh {
        values: (0..nt).map(|t| centroid(mesh.triangle_points(t))).collect(),
        jacobians: vec![[[1.0, 0.0], [0.0, 1.0]]; nt],
        support: vec![true; nt],
        boundary_trace: (0..mesh.boundary_count())
            .map(|k| {
                let (a, b) = mesh.boundary_edge(k);
                [0.5 * (v[a][0] + v[b][0]), 0.5 * (v[a][1] + v[b][1])]
            })
            .collect(),
    }
}

pub fn build_f_field(
    mesh: &Mesh,
    metric: &ConformalMetric,
    curve: &BoundaryCurve,
    case: &CurvatureCase,
    h: f64,
) -> Result<VectorFieldOnMesh> {
    Ok(eta_field(mesh, metric, curve, case, h, DistanceScheme::Recovered)?.vector_field(mesh, metric))
}

/// Normal derivative `∂u/∂ν_g` at the boundary vertices, obtained weakly as
/// `M_b⁻¹ (A u)_b` with the consistent metric boundary mass.
pub fn weak_normal_flux(mesh: &Mesh, metric: &ConformalMetric, u: &[f64]) -> Result<Vec<f64>> {
    let au = assemble_stiffness(mesh).matvec(u);
    let rhs: Vec<f64> = mesh.boundary_ring().iter().map(|&v| au[v]).collect();
    let mass = assemble_boundary_mass(mesh, metric, MassMode::Consistent)?;
    Ok(Cholesky::factor(&mass)?.solve(&rhs))
}

/// The four terms of the identity
/// `∫_Σ ∂_ν u ⟨F,∇u⟩ - ½∫_Σ |∇u|²⟨F,ν⟩ + ½∫_Ω |∇u|² div F - ∫_Ω ∇F(∇u,∇u) = 0`
/// for harmonic `u`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdentityResidual {
    pub i1: f64,
    pub i2: f64,
    pub i3: f64,
    pub i4: f64,
    pub residual: f64,
    pub h_mesh: f64,
}

pub fn pohozaev_residual(
    mesh: &Mesh,
    metric: &ConformalMetric,
    u: &[f64],
    field: &VectorFieldOnMesh,
) -> Result<IdentityResidual> {
    if u.len() != mesh.vertices().len() {
        return Err(Error::DimensionMismatch(format!(
            "{} nodal values for {} vertices",
            u.len(),
            mesh.vertices().len()
        )));
    }
    let grads = triangle_gradients(mesh, u);
    let flux = weak_normal_flux(mesh, metric, u)?;
    let v = mesh.vertices();
    let nb = mesh.boundary_count();

    let (mut i1, mut i2) = (0.0, 0.0);
    for k in 0..nb {
        let (a, b) = mesh.boundary_edge(k);
        let g = grads[mesh.boundary_edge_triangle(k)];
        let (nu, len) = outward_normal(v[a], v[b]);
        let mid = [0.5 * (v[a][0] + v[b][0]), 0.5 * (v[a][1] + v[b][1])];
        let f = field.boundary_trace[k];
        let flux_mid = 0.5 * (flux[k] + flux[(k + 1) % nb]);
        i1 += metric.factor(mid) * len * flux_mid * dot(f, g);
        i2 += 0.5 * len * dot(g, g) * dot(f, nu);
    }

    let (mut i3, mut i4) = (0.0, 0.0);
    for t in 0..mesh.triangles().len() {
        if !field.support[t] {
            continue;
        }
        let area = mesh.triangle_area(t);
        let c = centroid(mesh.triangle_points(t));
        let (g, f) = (grads[t], field.values[t]);
        let g2 = dot(g, g);
        let f_phi = dot(f, metric.grad_log_factor(c));
        i3 += 0.5 * area * g2 * (field.divergence(t) + 2.0 * f_phi);
        i4 += area * (quad(g, &field.jacobians[t]) + g2 * f_phi);
    }
    for x in [i1, i2, i3, i4] {
        if !x.is_finite() {
            return Err(Error::NonFinite { r: f64::NAN, degree: 0 });
        }
    }
    Ok(IdentityResidual {
        i1,
        i2,
        i3,
        i4,
        residual: i1 - i2 + i3 - i4,
        h_mesh: mesh.max_edge_length(),
    })
}

/// `∫_{ω_h} (|∇u|²Δη - 2∇²η(∇u,∇u)) dv` against its pointwise bounds
/// integrated over `Ω`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QCheck {
    pub value: f64,
    pub lo: f64,
    pub hi: f64,
    /// Dirichlet energy `∫_Ω |∇u|² dv`.
    pub energy: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// Default tolerance of [`q_integral_check`] as a fraction of the energy.
pub const Q_SLACK_FRACTION: f64 = 0.01;

pub fn q_integral_check(mesh: &Mesh, metric: &ConformalMetric, eta: &EtaField, u: &[f64]) -> Result<QCheck> {
    let grads = triangle_gradients(mesh, u);
    let (mut value, mut energy) = (0.0, 0.0);
    for t in 0..mesh.triangles().len() {
        let area = mesh.triangle_area(t);
        let g = grads[t];
        let g2 = dot(g, g);
        energy += area * g2;
        if !eta.support[t] {
            continue;
        }
        let c = centroid(mesh.triangle_points(t));
        let (ge, he, gp) = (eta.grad_eta(t), eta.hess_eta(t), metric.grad_log_factor(c));
        let lap = he[0][0] + he[1][1];
        let hess_g = quad(g, &he) - 2.0 * dot(g, ge) * dot(g, gp) + g2 * dot(gp, ge);
        value += area * metric.factor(c).powi(-2) * (g2 * lap - 2.0 * hess_g);
    }
    let (lo, hi) = q_form_bounds(&eta.case, energy);
    let tolerance = Q_SLACK_FRACTION * energy;
    Ok(QCheck {
        value,
        lo,
        hi,
        energy,
        tolerance,
        pass: value >= lo - tolerance && value <= hi + tolerance,
    })
}

/// Per-eigenfunction boundary energies.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryEnergies {
    pub j: usize,
    pub sigma: f64,
    /// `∫_Σ |∇_Σ u|² dσ`.
    pub tangential: f64,
    /// `∫_Σ (∂u/∂ν)² dσ` from the eigenrelation, `σ²`.
    pub normal: f64,
    /// The same integral from the nodal flux `diag(M_lumped)⁻¹ S x`.
    pub normal_quadrature: f64,
}

pub fn boundary_energies(solution: &SteklovSolution, j: usize) -> Result<BoundaryEnergies> {
    let nb = solution.edge_lengths.len();
    if j >= solution.values.len() {
        return Err(Error::InvalidArgument(format!("eigenpair {j} was not computed")));
    }
    let x = solution.vectors.column(j);
    let tangential = (0..nb)
        .map(|k| (x[(k + 1) % nb] - x[k]).powi(2) / solution.edge_lengths[k])
        .sum();
    let sx = solution.dtn.operator().matvec(&x);
    let lumped: Vec<f64> = (0..nb)
        .map(|k| 0.5 * (solution.edge_lengths[k] + solution.edge_lengths[(k + nb - 1) % nb]))
        .collect();
    let normal_quadrature = sx.iter().zip(&lumped).map(|(s, w)| s * s / w).sum();
    let sigma = solution.values[j];
    Ok(BoundaryEnergies {
        j,
        sigma,
        tangential,
        normal: sigma * sigma,
        normal_quadrature,
    })
}

/// Checks for `0 <= j <= j_max`, with `T = ∫|∇_Σ u|²` and `N = ∫(∂_ν u)²`,
/// (a) `T <= N + nκ̃√N` and (b) `√N <= κ̃/2 + √(κ̃²/4 + T)`.
pub fn proposition1_check(
    case: &CurvatureCase,
    solution: &SteklovSolution,
    j_max: usize,
    tolerance: f64,
) -> Result<(BoundReport, Vec<BoundaryEnergies>)> {
    let k = effective_kappa(case).kappa_tilde;
    let n = case.n as f64;
    let energies: Vec<BoundaryEnergies> = (0..=j_max)
        .into_par_iter()
        .map(|j| boundary_energies(solution, j))
        .collect::<Result<_>>()?;
    let mut report = BoundReport::new(tolerance);
    for e in &energies {
        let root = e.normal.sqrt();
        report.push(e.j, e.sigma, e.tangential, "p1a", e.tangential, e.normal + n * k * root);
        report.push(e.j, e.sigma, e.tangential, "p1b", root, 0.5 * k + (0.25 * k * k + e.tangential).sqrt());
    }
    Ok((report, energies))
}
