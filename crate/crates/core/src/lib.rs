//! Curved-mesh P^k Lagrange finite elements for the Ventcel problem
//!
//! ```text
//! −Δu + κu = f             in Ω
//! −βΔ_Γu + ∂_n u + αu = g  on Γ = ∂Ω
//! ```
//!
//! on meshes of geometric order `r`, with the volume lift `G: Ω_h^(r) → Ω`
//! whose trace on the discrete boundary is the orthogonal projection onto Γ.
//!
//! Pipeline: [`mesh::generate_disk_mesh`] → [`mesh::CurvedMesh::build`] →
//! [`ventcel::assemble`] → [`ventcel::solve`] → [`analysis::lifted_errors`];
//! [`study`] drives refinement sweeps and certification.

pub mod analysis;
pub mod error;
pub mod geometry;
pub mod lift;
pub mod mesh;
pub mod reference;
pub mod study;
pub mod ventcel;

pub use analysis::{eoc_fit, interpolate, lifted_errors, ConvergenceRow, ConvergenceTable, EocFit, ErrorReport};
pub use error::{Error, Result};
pub use geometry::{HalfPlane, Point, SmoothBoundary, UnitDisk};
pub use lift::{certify_prop44, Exponent, LiftConfig, LiftMap, LiftVariant, SlopeReport};
pub use mesh::{generate_disk_mesh, AffineMesh, CurvedMesh, ElementGeometry};
pub use reference::{LagrangeBasis, QuadratureRule};
pub use study::{run_study, RunConfig};
pub use ventcel::{
    assemble, derive_manufactured, geometric_defect, solve, DiscreteSystem, DofMap, ExactSolution, ProblemSpec, YExpX,
};
