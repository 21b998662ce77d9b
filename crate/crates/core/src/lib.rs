//! Repair of parametrized convex cone programs.
//!
//! Given cone-program data that depends affinely on a parameter vector θ,
//! this crate measures how far the program is from being solvable (the
//! optimal value `t*(θ)` of a primal-dual embedding, zero exactly when the
//! program is solvable), differentiates that measure with respect to θ, and
//! searches for parameters that make the program solvable while keeping a
//! convex regularizer `r(θ)` small.

pub mod cones;
pub mod embedding;
pub mod error;
pub mod program;
pub mod regularizer;
pub mod repair;
pub mod solver;
pub mod sparse;

pub use cones::{project_cone, project_dual_cone, ConeBlock, ConeBlockView, ConeDescriptor, ConeKind};
pub use error::{Error, Result};
pub use embedding::{build_embedding, eval_tstar, grad_tstar, EmbeddingWitness, GRAD_ZERO_THRESHOLD};
pub use program::{materialize, ConeProgram, ParamConeProgram, ParamIncrement};
pub use solver::{residuals, AdmmSolver, ConeSolver, Residuals, Solution, SolveStatus, SolverSettings};
pub use regularizer::Regularizer;
pub use repair::{exact_repair_affine, repair, ExactRepair, RepairResult, RepairSettings, RepairStatus, TraceEntry};
pub use sparse::SparseMatrix;
