//! P1 stiffness and boundary mass matrices.
//!
//! In two dimensions the Dirichlet energy is conformally invariant, so the
//! stiffness matrix uses planar geometry only. The metric enters through the
//! boundary mass, whose edge lengths are `ρ(midpoint) · |e|`.

use crate::error::Result;
use crate::fem::mesh::{Mesh, Point};
use crate::fem::metric::ConformalMetric;
use crate::linalg::{CsrMatrix, SymMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MassMode {
    #[default]
    Consistent,
    Lumped,
}

/// Gradients of the three barycentric hat functions on a triangle.
pub fn hat_gradients(p: [Point; 3]) -> [Point; 3] {
    let twice_area = (p[1][0] - p[0][0]) * (p[2][1] - p[0][1]) - (p[2][0] - p[0][0]) * (p[1][1] - p[0][1]);
    let mut g = [[0.0; 2]; 3];
    for i in 0..3 {
        let (a, b) = (p[(i + 1) % 3], p[(i + 2) % 3]);
        g[i] = [(a[1] - b[1]) / twice_area, (b[0] - a[0]) / twice_area];
    }
    g
}

pub fn element_stiffness(p: [Point; 3]) -> [[f64; 3]; 3] {
    let g = hat_gradients(p);
    let area = crate::fem::mesh::triangle_area(p[0], p[1], p[2]);
    let mut k = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            k[i][j] = area * (g[i][0] * g[j][0] + g[i][1] * g[j][1]);
        }
    }
    k
}

/// Stiffness matrix over all mesh vertices.
pub fn assemble_stiffness(mesh: &Mesh) -> CsrMatrix {
    let mut triplets = Vec::with_capacity(9 * mesh.triangles().len());
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let k = element_stiffness(mesh.triangle_points(t));
        for i in 0..3 {
            for j in 0..3 {
                triplets.push((tri[i], tri[j], k[i][j]));
            }
        }
    }
    let n = mesh.vertices().len();
    CsrMatrix::from_triplets(n, n, triplets)
}

/// Metric length of each boundary edge by the midpoint rule.
pub fn boundary_edge_lengths(mesh: &Mesh, metric: &ConformalMetric) -> Result<Vec<f64>> {
    let v = mesh.vertices();
    (0..mesh.boundary_count())
        .map(|k| {
            let (a, b) = mesh.boundary_edge(k);
            let (p, q) = (v[a], v[b]);
            metric.check_point(p)?;
            let mid = [0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1])];
            Ok(metric.factor(mid) * (q[0] - p[0]).hypot(q[1] - p[1]))
        })
        .collect()
}

/// Boundary mass matrix indexed by position along the boundary ring.
pub fn assemble_boundary_mass(mesh: &Mesh, metric: &ConformalMetric, mode: MassMode) -> Result<SymMatrix> {
    let lengths = boundary_edge_lengths(mesh, metric)?;
    let nb = lengths.len();
    let mut m = SymMatrix::zeros(nb);
    for (k, &l) in lengths.iter().enumerate() {
        let next = (k + 1) % nb;
        match mode {
            MassMode::Consistent => {
                m.add(k, k, l / 3.0);
                m.add(next, next, l / 3.0);
                m.add(k, next, l / 6.0);
            }
            MassMode::Lumped => {
                m.add(k, k, l / 2.0);
                m.add(next, next, l / 2.0);
            }
        }
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::mesh::{build_mesh, BoundaryCurve};

    #[test]
    fn stiffness_annihilates_constants_and_reproduces_linear_energy() {
        let mesh = build_mesh(&BoundaryCurve::circle(1.3).unwrap(), 3).unwrap();
        let a = assemble_stiffness(&mesh);
        assert!(a.asymmetry() < 1e-14);
        let ones = vec![1.0; mesh.vertices().len()];
        assert!(a.matvec(&ones).iter().all(|x| x.abs() < 1e-12));
        // u = 2x - y has energy 5·|Ω_h|.
        let u: Vec<f64> = mesh.vertices().iter().map(|p| 2.0 * p[0] - p[1]).collect();
        let e: f64 = u.iter().zip(a.matvec(&u)).map(|(x, y)| x * y).sum();
        assert!((e - 5.0 * mesh.area()).abs() < 1e-11);
    }

    #[test]
    fn boundary_mass_total_is_length() {
        let mesh = build_mesh(&BoundaryCurve::circle(0.5).unwrap(), 4).unwrap();
        for metric in [ConformalMetric::flat(), ConformalMetric::hyperbolic(1.0), ConformalMetric::spherical(1.0)] {
            let total: f64 = boundary_edge_lengths(&mesh, &metric).unwrap().iter().sum();
            for mode in [MassMode::Consistent, MassMode::Lumped] {
                let m = assemble_boundary_mass(&mesh, &metric, mode).unwrap();
                assert!((m.sum_all() - total).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn hyperbolic_mass_outside_disk_fails() {
        let mesh = build_mesh(&BoundaryCurve::circle(1.5).unwrap(), 2).unwrap();
        assert!(assemble_boundary_mass(&mesh, &ConformalMetric::hyperbolic(1.0), MassMode::Consistent).is_err());
    }
}
