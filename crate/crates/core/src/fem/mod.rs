//! P1 finite elements for Steklov problems on planar domains with a
//! conformally flat metric.

mod assembly;
mod dtn;
mod mesh;
mod metric;

pub use assembly::{
    assemble_boundary_mass, assemble_stiffness, boundary_edge_lengths, element_stiffness, hat_gradients, MassMode,
};
pub use dtn::{
    boundary_laplacian_spectrum_curve, dtn_matrix, harmonic_extension, solve_steklov, steklov_spectrum_fem,
    DtNMatrix, InteriorProblem, SteklovSolution, ZERO_MODE_TOLERANCE,
};
pub use mesh::{build_mesh, triangle_area, BoundaryCurve, Mesh, NodeRole, Point, StarShapedCurve, SMOOTH_BASE};
pub use metric::{ConformalMetric, MetricModel};
