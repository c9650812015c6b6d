//! Discrete Dirichlet-to-Neumann map and the Steklov pencil `S f = σ M_b f`.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fem::assembly::{assemble_boundary_mass, assemble_stiffness, boundary_edge_lengths, MassMode};
use crate::fem::mesh::Mesh;
use crate::fem::metric::ConformalMetric;
use crate::linalg::{sym_generalized_eig, CsrMatrix, DenseMatrix, SparseSpdSolver, SymMatrix};
use crate::spectrum::{SpectrumEntry, SpectrumKind, SpectrumTable};

/// Absolute tolerance, relative to the largest computed value, below which
/// the lowest Steklov eigenvalue is taken to be exactly zero.
pub const ZERO_MODE_TOLERANCE: f64 = 1e-9;

/// Schur complement `S = A_bb - A_bi A_ii⁻¹ A_ib`, indexed along the boundary ring.
#[derive(Debug, Clone)]
pub struct DtNMatrix {
    operator: SymMatrix,
    asymmetry: f64,
}

impl DtNMatrix {
    pub fn operator(&self) -> &SymMatrix {
        &self.operator
    }

    /// `‖S - Sᵀ‖_F / ‖S‖_F` of the complement before symmetrization.
    pub fn asymmetry(&self) -> f64 {
        self.asymmetry
    }

    pub fn dim(&self) -> usize {
        self.operator.dim()
    }
}

/// Factored interior block together with the coupling to the boundary.
pub struct InteriorProblem {
    solver: SparseSpdSolver,
    a_bi: CsrMatrix,
    a_bb: CsrMatrix,
    interior: Vec<usize>,
    boundary: Vec<usize>,
}

impl InteriorProblem {
    pub fn new(mesh: &Mesh, stiffness: &CsrMatrix) -> Result<Self> {
        let interior = mesh.interior().to_vec();
        let boundary = mesh.boundary_ring().to_vec();
        if interior.is_empty() {
            return Err(Error::InvalidMesh("mesh has no interior vertices".into()));
        }
        let solver = SparseSpdSolver::new(&stiffness.submatrix(&interior, &interior))?;
        Ok(Self {
            solver,
            a_bi: stiffness.submatrix(&boundary, &interior),
            a_bb: stiffness.submatrix(&boundary, &boundary),
            interior,
            boundary,
        })
    }

    /// Interior values `-A_ii⁻¹ A_ib f` of the discrete harmonic extension.
    fn interior_response(&self, f: &[f64]) -> Vec<f64> {
        let mut rhs = vec![0.0; self.interior.len()];
        for (b, &fb) in f.iter().enumerate() {
            if fb != 0.0 {
                for (i, v) in self.a_bi.row(b) {
                    rhs[i] -= v * fb;
                }
            }
        }
        self.solver.solve(&rhs)
    }

    /// Nodal values of the discrete harmonic function with boundary trace `f`.
    pub fn extend(&self, f: &[f64]) -> Result<Vec<f64>> {
        if f.len() != self.boundary.len() {
            return Err(Error::DimensionMismatch(format!(
                "boundary data of length {} for {} boundary vertices",
                f.len(),
                self.boundary.len()
            )));
        }
        let inner = self.interior_response(f);
        let mut u = vec![0.0; self.interior.len() + self.boundary.len()];
        for (&v, x) in self.interior.iter().zip(inner) {
            u[v] = x;
        }
        for (&v, &x) in self.boundary.iter().zip(f) {
            u[v] = x;
        }
        Ok(u)
    }

    pub fn dtn(&self) -> DtNMatrix {
        let nb = self.boundary.len();
        let columns: Vec<Vec<f64>> = (0..nb)
            .into_par_iter()
            .map(|c| {
                let mut rhs = vec![0.0; self.interior.len()];
                for (i, v) in self.a_bi.row(c) {
                    rhs[i] = v;
                }
                let x = self.solver.solve(&rhs);
                (0..nb)
                    .map(|b| self.a_bb.get(b, c) - self.a_bi.row(b).map(|(i, v)| v * x[i]).sum::<f64>())
                    .collect()
            })
            .collect();
        let (mut skew, mut norm) = (0.0, 0.0);
        for i in 0..nb {
            for j in 0..nb {
                skew += (columns[j][i] - columns[i][j]).powi(2);
                norm += columns[j][i].powi(2);
            }
        }
        let operator = SymMatrix::from_lower_fn(nb, |i, j| 0.5 * (columns[j][i] + columns[i][j]));
        DtNMatrix {
            operator,
            asymmetry: if norm > 0.0 { (skew / norm).sqrt() } else { 0.0 },
        }
    }
}

pub fn dtn_matrix(mesh: &Mesh) -> Result<DtNMatrix> {
    Ok(InteriorProblem::new(mesh, &assemble_stiffness(mesh))?.dtn())
}

pub fn harmonic_extension(mesh: &Mesh, f: &[f64]) -> Result<Vec<f64>> {
    InteriorProblem::new(mesh, &assemble_stiffness(mesh))?.extend(f)
}

/// Lowest Steklov eigenpairs of a mesh. Eigenvectors are `M_b`-orthonormal
/// columns indexed along the boundary ring.
#[derive(Debug, Clone)]
pub struct SteklovSolution {
    pub values: Vec<f64>,
    pub vectors: DenseMatrix,
    pub dtn: DtNMatrix,
    pub mass: SymMatrix,
    /// Metric length of each boundary edge.
    pub edge_lengths: Vec<f64>,
}

impl SteklovSolution {
    pub fn boundary_length(&self) -> f64 {
        self.edge_lengths.iter().sum()
    }

    pub fn spectrum(&self) -> Result<SpectrumTable> {
        SpectrumTable::from_sorted_values(SpectrumKind::Steklov, &self.values)
    }
}

pub fn solve_steklov(mesh: &Mesh, metric: &ConformalMetric, count: usize, mode: MassMode) -> Result<SteklovSolution> {
    if count == 0 {
        return Err(Error::InvalidArgument("count must be at least 1".into()));
    }
    if count > mesh.boundary_count() {
        return Err(Error::InvalidArgument(format!(
            "requested {count} eigenvalues from {} boundary vertices",
            mesh.boundary_count()
        )));
    }
    for &v in mesh.boundary_ring() {
        metric.check_point(mesh.vertices()[v])?;
    }
    let mass = assemble_boundary_mass(mesh, metric, mode)?;
    let edge_lengths = boundary_edge_lengths(mesh, metric)?;
    let dtn = dtn_matrix(mesh)?;
    let eig = sym_generalized_eig(dtn.operator(), &mass, count)?;
    let mut values = eig.values;
    let scale = values.last().map_or(1.0, |v| v.abs().max(1.0));
    if values[0].abs() > ZERO_MODE_TOLERANCE * scale {
        return Err(Error::BadSpectrum(format!(
            "lowest Steklov eigenvalue {} is not zero",
            values[0]
        )));
    }
    values[0] = 0.0;
    Ok(SteklovSolution {
        values,
        vectors: eig.vectors,
        dtn,
        mass,
        edge_lengths,
    })
}

pub fn steklov_spectrum_fem(mesh: &Mesh, metric: &ConformalMetric, count: usize) -> Result<SpectrumTable> {
    solve_steklov(mesh, metric, count, MassMode::Consistent)?.spectrum()
}

/// Spectrum of the Laplacian on a closed curve of length `length`:
/// `(2πk/L)²`, simple for `k = 0` and double otherwise.
pub fn boundary_laplacian_spectrum_curve(length: f64, count: usize) -> Result<SpectrumTable> {
    if !(length > 0.0) || !length.is_finite() {
        return Err(Error::InvalidArgument(format!("curve length {length}")));
    }
    if count == 0 {
        return Err(Error::InvalidArgument("count must be at least 1".into()));
    }
    let entries = (0..=count / 2)
        .map(|k| SpectrumEntry {
            value: (2.0 * PI * k as f64 / length).powi(2),
            multiplicity: if k == 0 { 1 } else { 2 },
            mode_degree: k,
        })
        .collect();
    SpectrumTable::new(SpectrumKind::BoundaryLaplacian, entries)
}
