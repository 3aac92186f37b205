//! Global P^k DOFs, assembly of the discrete Ventcel problem and its solve.

mod assembly;
mod dofs;
mod problem;
mod solver;
mod sparse;

pub use assembly::{assemble, dof_points, geometric_defect, AssemblyOptions, DiscreteSystem, QuadratureCache};
pub(crate) use assembly::{combine, gather, inverse_transpose};
pub use dofs::DofMap;
pub use problem::{
    derive_manufactured, laplace_beltrami, named_solution, Affine, ExactSolution, ProblemSpec, Source, YExpX,
};
pub use solver::{solve, solve_with, SolveReport, SolverKind, SolverOptions};
pub use sparse::CsrMatrix;

impl DiscreteSystem {
    pub fn solve(&self, rel_tol: f64) -> crate::error::Result<Vec<f64>> {
        solve(&self.matrix, &self.rhs, rel_tol)
    }
}
