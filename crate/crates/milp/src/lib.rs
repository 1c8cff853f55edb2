//! A small mixed-integer linear programming toolkit: model building, a
//! bounded dual simplex, branch-and-bound and MPS export.

mod error;
mod lp;
mod model;
mod mps;
mod presolve;
mod solve;

pub use error::{ConfigError, ModelError, MpsError};
pub use model::{
    ConstrId, Constraint, LinExpr, MilpModel, Relation, Sense, VarId, VarKind, Variable,
};
pub use mps::{read_mps, write_mps};
pub use solve::{
    solve, solve_relaxation, BranchRule, MilpSolution, NodeRecord, SolveStatus, SolverConfig,
};
