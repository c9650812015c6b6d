//! Steklov and boundary Laplacian spectra of domains in constant-curvature
//! space forms, with checks of the inequalities relating them.

pub mod bounds;
pub mod error;
pub mod exact;
pub mod fem;
pub mod identity;
pub mod linalg;
pub mod spaceform;
pub mod spectrum;

pub use bounds::{BoundRecord, BoundReport, DomainDescriptor, HypothesisChecklist};
pub use error::{Error, Result};
pub use exact::BallDomain;
pub use fem::{BoundaryCurve, ConformalMetric, DtNMatrix, MassMode, Mesh, SteklovSolution};
pub use linalg::{CsrMatrix, DenseMatrix, SymMatrix};
pub use spaceform::{CaseId, CurvatureCase, SpaceForm};
pub use spectrum::{SpectrumEntry, SpectrumKind, SpectrumTable};
