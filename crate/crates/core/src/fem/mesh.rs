//! Boundary curves and the ring triangulation built on them.
//!
//! Every curve is star-shaped with respect to a center `c` and parameterized
//! by `s ∈ [0, 1)`. The mesh has `m = 2^refinement` rings; ring `i` carries
//! `base·i` vertices at parameters `j/(base·i)` placed at `c + (i/m)(P(s) - c)`,
//! so the outer ring lies on the curve and the rings are scaled copies of it.
//! Adjacent rings are zipped together by parameter order.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::fmt::Write as _;

use crate::error::{Error, Result};

pub type Point = [f64; 2];

/// Vertices per unit ring index for smooth curves.
pub const SMOOTH_BASE: usize = 6;

/// Radial function `r(θ) > 0` sampled on a uniform angular grid and
/// continued by trigonometric interpolation.
#[derive(Debug, Clone, PartialEq)]
pub struct StarShapedCurve {
    samples: Vec<f64>,
    cos_coeffs: Vec<f64>,
    sin_coeffs: Vec<f64>,
}

impl StarShapedCurve {
    pub fn new(samples: Vec<f64>) -> Result<Self> {
        if samples.len() < 3 {
            return Err(Error::DegenerateCurve(format!(
                "need at least 3 radial samples, got {}",
                samples.len()
            )));
        }
        if let Some(bad) = samples.iter().find(|r| !(**r > 0.0) || !r.is_finite()) {
            return Err(Error::DegenerateCurve(format!(
                "radial samples must be positive, got {bad}"
            )));
        }
        let n = samples.len();
        let modes = n / 2;
        let mut cos_coeffs = vec![0.0; modes + 1];
        let mut sin_coeffs = vec![0.0; modes + 1];
        for m in 0..=modes {
            let (mut c, mut s) = (0.0, 0.0);
            for (i, r) in samples.iter().enumerate() {
                let phase = 2.0 * PI * ((m * i) % n) as f64 / n as f64;
                c += r * phase.cos();
                s += r * phase.sin();
            }
            // Constant and (for even n) Nyquist terms carry weight 1/n.
            let weight = if m == 0 || (n.is_multiple_of(2) && m == modes) {
                1.0 / n as f64
            } else {
                2.0 / n as f64
            };
            cos_coeffs[m] = weight * c;
            sin_coeffs[m] = if n.is_multiple_of(2) && m == modes { 0.0 } else { weight * s };
        }
        Ok(Self {
            samples,
            cos_coeffs,
            sin_coeffs,
        })
    }

    pub fn from_fn(count: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new((0..count).map(|i| f(2.0 * PI * i as f64 / count as f64)).collect())
    }

    /// Ellipse with semi-axes `a` (along x) and `b` centered at the origin.
    pub fn ellipse(a: f64, b: f64, count: usize) -> Result<Self> {
        if !(a > 0.0 && b > 0.0) {
            return Err(Error::DegenerateCurve(format!("ellipse semi-axes {a}, {b}")));
        }
        Self::from_fn(count, |t| a * b / ((b * t.cos()).powi(2) + (a * t.sin()).powi(2)).sqrt())
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    /// `(r, r', r'')` at angle `theta`.
    pub fn radius_derivs(&self, theta: f64) -> (f64, f64, f64) {
        let (mut r, mut r1, mut r2) = (0.0, 0.0, 0.0);
        for (m, (&c, &s)) in self.cos_coeffs.iter().zip(&self.sin_coeffs).enumerate() {
            let mf = m as f64;
            let (sin, cos) = (mf * theta).sin_cos();
            r += c * cos + s * sin;
            r1 += mf * (-c * sin + s * cos);
            r2 += -mf * mf * (c * cos + s * sin);
        }
        (r, r1, r2)
    }

    pub fn radius(&self, theta: f64) -> f64 {
        self.radius_derivs(theta).0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum BoundaryCurve {
    Circle { radius: f64 },
    StarShaped(StarShapedCurve),
    /// Closed simple polygon; stored counterclockwise.
    Polyline(Vec<Point>),
}

fn signed_area(poly: &[Point]) -> f64 {
    let n = poly.len();
    0.5 * (0..n)
        .map(|i| {
            let (p, q) = (poly[i], poly[(i + 1) % n]);
            p[0] * q[1] - q[0] * p[1]
        })
        .sum::<f64>()
}

fn cross(o: Point, a: Point, b: Point) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

fn segments_intersect(p1: Point, p2: Point, q1: Point, q2: Point) -> bool {
    let d1 = cross(q1, q2, p1);
    let d2 = cross(q1, q2, p2);
    let d3 = cross(p1, p2, q1);
    let d4 = cross(p1, p2, q2);
    (d1 * d2 < 0.0) && (d3 * d4 < 0.0)
}

impl BoundaryCurve {
    pub fn circle(radius: f64) -> Result<Self> {
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::DegenerateCurve(format!("circle radius {radius}")));
        }
        Ok(Self::Circle { radius })
    }

    pub fn polyline(mut vertices: Vec<Point>) -> Result<Self> {
        if vertices.len() > 1 && vertices.first() == vertices.last() {
            vertices.pop();
        }
        if vertices.len() < 3 {
            return Err(Error::DegenerateCurve("polyline needs at least 3 vertices".into()));
        }
        let area = signed_area(&vertices);
        let scale = vertices
            .iter()
            .map(|p| p[0].abs().max(p[1].abs()))
            .fold(0.0, f64::max);
        if area.abs() <= 1e-14 * scale * scale {
            return Err(Error::DegenerateCurve("polyline encloses zero area".into()));
        }
        if area < 0.0 {
            vertices.reverse();
        }
        let n = vertices.len();
        for i in 0..n {
            for j in i + 1..n {
                let adjacent = j == i + 1 || (i == 0 && j == n - 1);
                if !adjacent
                    && segments_intersect(
                        vertices[i],
                        vertices[(i + 1) % n],
                        vertices[j],
                        vertices[(j + 1) % n],
                    )
                {
                    return Err(Error::DegenerateCurve(format!(
                        "polyline edges {i} and {j} intersect"
                    )));
                }
            }
        }
        Ok(Self::Polyline(vertices))
    }

    pub fn base_count(&self) -> usize {
        match self {
            Self::Polyline(v) => v.len(),
            _ => SMOOTH_BASE,
        }
    }

    /// Star center: the origin for radial curves, the area centroid for polygons.
    pub fn center(&self) -> Point {
        match self {
            Self::Polyline(v) => {
                let n = v.len();
                let a = signed_area(v);
                let (mut cx, mut cy) = (0.0, 0.0);
                for i in 0..n {
                    let (p, q) = (v[i], v[(i + 1) % n]);
                    let w = p[0] * q[1] - q[0] * p[1];
                    cx += (p[0] + q[0]) * w;
                    cy += (p[1] + q[1]) * w;
                }
                [cx / (6.0 * a), cy / (6.0 * a)]
            }
            _ => [0.0, 0.0],
        }
    }

    /// Point `j` of `count` equally spaced parameters along the curve.
    /// For polygons `count` must be a multiple of the edge count.
    pub fn point_at(&self, j: usize, count: usize) -> Point {
        match self {
            Self::Circle { radius } => {
                let t = 2.0 * PI * j as f64 / count as f64;
                [radius * t.cos(), radius * t.sin()]
            }
            Self::StarShaped(c) => {
                let t = 2.0 * PI * j as f64 / count as f64;
                let r = c.radius(t);
                [r * t.cos(), r * t.sin()]
            }
            Self::Polyline(v) => {
                let e = v.len();
                debug_assert_eq!(count % e, 0);
                let per = count / e;
                let (edge, step) = ((j / per) % e, j % per);
                let t = step as f64 / per as f64;
                let (p, q) = (v[edge], v[(edge + 1) % e]);
                [p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])]
            }
        }
    }

    /// Area enclosed by the curve itself (not its polygonal interpolant).
    pub fn area(&self) -> f64 {
        match self {
            Self::Circle { radius } => PI * radius * radius,
            Self::StarShaped(c) => {
                let n = 4096;
                (0..n)
                    .map(|i| c.radius(2.0 * PI * i as f64 / n as f64).powi(2))
                    .sum::<f64>()
                    * PI
                    / n as f64
            }
            Self::Polyline(v) => signed_area(v),
        }
    }

    /// Planar curvature at angle `theta` (smooth curves only).
    pub fn flat_curvature(&self, theta: f64) -> Option<f64> {
        match self {
            Self::Circle { radius } => Some(1.0 / radius),
            Self::StarShaped(c) => {
                let (r, r1, r2) = c.radius_derivs(theta);
                Some((r * r + 2.0 * r1 * r1 - r * r2) / (r * r + r1 * r1).powf(1.5))
            }
            Self::Polyline(_) => None,
        }
    }

    /// Point, outward unit normal and planar curvature at angle `theta`
    /// (smooth curves only).
    pub fn frame(&self, theta: f64) -> Option<(Point, Point, f64)> {
        let (r, r1) = match self {
            Self::Circle { radius } => (*radius, 0.0),
            Self::StarShaped(c) => {
                let (r, r1, _) = c.radius_derivs(theta);
                (r, r1)
            }
            Self::Polyline(_) => return None,
        };
        let (s, c) = theta.sin_cos();
        let p = [r * c, r * s];
        let tangent = [r1 * c - r * s, r1 * s + r * c];
        let len = tangent[0].hypot(tangent[1]);
        let normal = [tangent[1] / len, -tangent[0] / len];
        Some((p, normal, self.flat_curvature(theta)?))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeRole {
    Interior(usize),
    Boundary(usize),
}

/// Planar triangulation with a distinguished counterclockwise boundary ring.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    vertices: Vec<Point>,
    triangles: Vec<[usize; 3]>,
    boundary_ring: Vec<usize>,
    interior: Vec<usize>,
    roles: Vec<NodeRole>,
    /// Triangle containing boundary edge `k` (ring[k], ring[k+1]).
    boundary_edge_triangles: Vec<usize>,
}

pub fn triangle_area(p: Point, q: Point, r: Point) -> f64 {
    0.5 * cross(p, q, r)
}

impl Mesh {
    pub fn new(vertices: Vec<Point>, triangles: Vec<[usize; 3]>, boundary_ring: Vec<usize>) -> Result<Self> {
        let nv = vertices.len();
        for (t, tri) in triangles.iter().enumerate() {
            if tri.iter().any(|&v| v >= nv) {
                return Err(Error::InvalidMesh(format!("triangle {t} references a missing vertex")));
            }
            let area = triangle_area(vertices[tri[0]], vertices[tri[1]], vertices[tri[2]]);
            if !(area > 0.0) {
                return Err(Error::InvalidMesh(format!("triangle {t} has area {area}")));
            }
        }

        let mut edge_owner: HashMap<(usize, usize), (usize, usize)> = HashMap::new();
        for (t, tri) in triangles.iter().enumerate() {
            for k in 0..3 {
                let (a, b) = (tri[k], tri[(k + 1) % 3]);
                let key = (a.min(b), a.max(b));
                let entry = edge_owner.entry(key).or_insert((0, t));
                entry.0 += 1;
            }
        }
        if edge_owner.values().any(|&(count, _)| count > 2) {
            return Err(Error::InvalidMesh("edge shared by more than two triangles".into()));
        }
        let free_edges = edge_owner.values().filter(|&&(count, _)| count == 1).count();

        let nb = boundary_ring.len();
        if nb < 3 {
            return Err(Error::InvalidMesh("boundary ring needs at least 3 vertices".into()));
        }
        let mut roles = vec![None; nv];
        for (k, &v) in boundary_ring.iter().enumerate() {
            if v >= nv || roles[v].is_some() {
                return Err(Error::InvalidMesh(format!("boundary ring repeats or misses vertex {v}")));
            }
            roles[v] = Some(NodeRole::Boundary(k));
        }
        let mut boundary_edge_triangles = Vec::with_capacity(nb);
        for k in 0..nb {
            let (a, b) = (boundary_ring[k], boundary_ring[(k + 1) % nb]);
            match edge_owner.get(&(a.min(b), a.max(b))) {
                Some(&(1, t)) => boundary_edge_triangles.push(t),
                _ => {
                    return Err(Error::InvalidMesh(format!(
                        "ring edge ({a}, {b}) is not a boundary edge"
                    )))
                }
            }
        }
        if free_edges != nb {
            return Err(Error::InvalidMesh(format!(
                "{free_edges} boundary edges but the ring has {nb}"
            )));
        }

        let mut interior = Vec::with_capacity(nv - nb);
        let roles = roles
            .into_iter()
            .enumerate()
            .map(|(v, r)| {
                r.unwrap_or_else(|| {
                    interior.push(v);
                    NodeRole::Interior(interior.len() - 1)
                })
            })
            .collect();

        Ok(Self {
            vertices,
            triangles,
            boundary_ring,
            interior,
            roles,
            boundary_edge_triangles,
        })
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn boundary_ring(&self) -> &[usize] {
        &self.boundary_ring
    }

    pub fn interior(&self) -> &[usize] {
        &self.interior
    }

    pub fn role(&self, v: usize) -> NodeRole {
        self.roles[v]
    }

    pub fn boundary_count(&self) -> usize {
        self.boundary_ring.len()
    }

    /// Endpoints of boundary edge `k`.
    pub fn boundary_edge(&self, k: usize) -> (usize, usize) {
        let nb = self.boundary_ring.len();
        (self.boundary_ring[k], self.boundary_ring[(k + 1) % nb])
    }

    pub fn boundary_edge_triangle(&self, k: usize) -> usize {
        self.boundary_edge_triangles[k]
    }

    pub fn triangle_points(&self, t: usize) -> [Point; 3] {
        let [a, b, c] = self.triangles[t];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    pub fn triangle_area(&self, t: usize) -> f64 {
        let [p, q, r] = self.triangle_points(t);
        triangle_area(p, q, r)
    }

    pub fn area(&self) -> f64 {
        (0..self.triangles.len()).map(|t| self.triangle_area(t)).sum()
    }

    pub fn max_edge_length(&self) -> f64 {
        let mut h: f64 = 0.0;
        for tri in &self.triangles {
            for k in 0..3 {
                let (p, q) = (self.vertices[tri[k]], self.vertices[tri[(k + 1) % 3]]);
                h = h.max((p[0] - q[0]).hypot(p[1] - q[1]));
            }
        }
        h
    }

    /// Plain-text dump: vertex count, `x y` lines, triangle count, `i j k`
    /// lines with 0-based indices.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{}", self.vertices.len());
        for p in &self.vertices {
            let _ = writeln!(out, "{:.16e} {:.16e}", p[0], p[1]);
        }
        let _ = writeln!(out, "{}", self.triangles.len());
        for t in &self.triangles {
            let _ = writeln!(out, "{} {} {}", t[0], t[1], t[2]);
        }
        out
    }
}

/// Ring triangulation of the region bounded by `curve`.
pub fn build_mesh(curve: &BoundaryCurve, refinement: u32) -> Result<Mesh> {
    if refinement > 12 {
        return Err(Error::InvalidArgument(format!("refinement {refinement} is too large")));
    }
    let base = curve.base_count();
    let rings = 1usize << refinement;
    let center = curve.center();
    let scale = |p: Point, f: f64| [center[0] + f * (p[0] - center[0]), center[1] + f * (p[1] - center[1])];

    let mut vertices = vec![center];
    let mut ring_start = vec![0usize];
    for i in 1..=rings {
        ring_start.push(vertices.len());
        let count = base * i;
        let frac = i as f64 / rings as f64;
        vertices.extend((0..count).map(|j| scale(curve.point_at(j, count), frac)));
    }

    let mut triangles = Vec::new();
    for j in 0..base {
        triangles.push([0, ring_start[1] + j, ring_start[1] + (j + 1) % base]);
    }
    for i in 2..=rings {
        let (n_in, n_out) = (base * (i - 1), base * i);
        let (s_in, s_out) = (ring_start[i - 1], ring_start[i]);
        let inner = |a: usize| s_in + a % n_in;
        let outer = |b: usize| s_out + b % n_out;
        let (mut a, mut b) = (0, 0);
        while a < n_in || b < n_out {
            // Compare next parameters (a+1)/n_in and (b+1)/n_out exactly.
            let advance_outer = a == n_in || (b < n_out && (b + 1) * n_in <= (a + 1) * n_out);
            if advance_outer {
                triangles.push([inner(a), outer(b), outer(b + 1)]);
                b += 1;
            } else {
                triangles.push([inner(a), outer(b), inner(a + 1)]);
                a += 1;
            }
        }
    }

    let boundary_ring: Vec<usize> = (ring_start[rings]..vertices.len()).collect();
    Mesh::new(vertices, triangles, boundary_ring).map_err(|e| match e {
        Error::InvalidMesh(msg) => Error::DegenerateCurve(format!(
            "curve is not star-shaped about its center ({msg})"
        )),
        other => other,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn circle_mesh_structure() {
        let mesh = build_mesh(&BoundaryCurve::circle(1.0).unwrap(), 3).unwrap();
        assert_eq!(mesh.boundary_count(), 8 * SMOOTH_BASE);
        assert!((0..mesh.triangles().len()).all(|t| mesh.triangle_area(t) > 0.0));
        assert_eq!(mesh.interior().len() + mesh.boundary_count(), mesh.vertices().len());
        for (k, &v) in mesh.boundary_ring().iter().enumerate() {
            assert_eq!(mesh.role(v), NodeRole::Boundary(k));
        }
    }

    #[test]
    fn polygon_area_of_circle_mesh_converges() {
        for r in 2..7 {
            let mesh = build_mesh(&BoundaryCurve::circle(1.0).unwrap(), r).unwrap();
            let n = mesh.boundary_count() as f64;
            // Regular inscribed n-gon.
            let exact = 0.5 * n * (2.0 * PI / n).sin();
            assert!((mesh.area() - exact).abs() < 1e-12);
        }
    }

    #[test]
    fn ellipse_area() {
        let curve = BoundaryCurve::StarShaped(StarShapedCurve::ellipse(2.0, 1.0, 256).unwrap());
        let mesh = build_mesh(&curve, 5).unwrap();
        assert!((mesh.area() - 2.0 * PI).abs() < 0.02 * 2.0 * PI);
        assert!((curve.area() - 2.0 * PI).abs() < 1e-9);
    }

    #[test]
    fn square_polyline_area_is_exact() {
        let curve = BoundaryCurve::polyline(vec![[0.0, 0.0], [2.0, 0.0], [2.0, 2.0], [0.0, 2.0]]).unwrap();
        for r in 0..5 {
            let mesh = build_mesh(&curve, r).unwrap();
            assert!((mesh.area() - 4.0).abs() < 1e-13);
            assert_eq!(mesh.boundary_count(), 4 << r);
        }
    }

    #[test]
    fn clockwise_polyline_is_reoriented() {
        let curve = BoundaryCurve::polyline(vec![[0.0, 0.0], [0.0, 1.0], [1.0, 0.0]]).unwrap();
        let mesh = build_mesh(&curve, 2).unwrap();
        assert!((mesh.area() - 0.5).abs() < 1e-14);
    }

    #[test]
    fn edge_length_halves_with_refinement() {
        let curve = BoundaryCurve::circle(1.0).unwrap();
        let h: Vec<f64> = (3..7).map(|r| build_mesh(&curve, r).unwrap().max_edge_length()).collect();
        for w in h.windows(2) {
            let ratio = w[0] / w[1];
            assert!((1.8..2.2).contains(&ratio), "ratio {ratio}");
        }
    }

    #[test]
    fn degenerate_curves_are_rejected() {
        assert!(BoundaryCurve::polyline(vec![[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]]).is_err());
        assert!(BoundaryCurve::polyline(vec![[0.0, 0.0], [1.0, 1.0], [1.0, 0.0], [0.0, 1.0]]).is_err());
        assert!(BoundaryCurve::circle(0.0).is_err());
        assert!(StarShapedCurve::new(vec![1.0, -1.0, 1.0]).is_err());
    }

    #[test]
    fn trig_interpolation_reproduces_samples_and_curvature() {
        let c = StarShapedCurve::ellipse(2.0, 1.0, 128).unwrap();
        for (i, &r) in c.samples().iter().enumerate() {
            let t = 2.0 * PI * i as f64 / 128.0;
            assert!((c.radius(t) - r).abs() < 1e-12);
        }
        let curve = BoundaryCurve::StarShaped(c);
        // Curvature extremes of an ellipse: a/b² on the major axis, b/a² on the minor.
        assert!((curve.flat_curvature(0.0).unwrap() - 2.0).abs() < 1e-6);
        assert!((curve.flat_curvature(PI / 2.0).unwrap() - 0.25).abs() < 1e-6);
    }

    #[test]
    fn text_dump_format() {
        let mesh = build_mesh(&BoundaryCurve::circle(1.0).unwrap(), 1).unwrap();
        let text = mesh.to_text();
        let mut lines = text.lines();
        let nv: usize = lines.next().unwrap().parse().unwrap();
        assert_eq!(nv, mesh.vertices().len());
        for _ in 0..nv {
            let xy: Vec<f64> = lines.next().unwrap().split(' ').map(|s| s.parse().unwrap()).collect();
            assert_eq!(xy.len(), 2);
        }
        let nt: usize = lines.next().unwrap().parse().unwrap();
        assert_eq!(nt, mesh.triangles().len());
        let first: Vec<usize> = lines.next().unwrap().split(' ').map(|s| s.parse().unwrap()).collect();
        assert_eq!(first, mesh.triangles()[0].to_vec());
    }
}
