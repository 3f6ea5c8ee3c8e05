//! Optimal transport on the line between discretized Lebesgue supply and
//! point configurations under the concave power cost `|x - y|^p`.

pub mod balanced;
pub mod boundary;
pub mod cost;
pub mod flow;
pub mod grid;
pub mod semicoupling;

pub use balanced::{solve_balanced, BalancedPlan, DiscreteMeasure};
pub use boundary::{boundary_diagnostics, edge_monotonicity_check, BoundaryDiagnostics};
pub use cost::{segment_cost, torus_segment_cost, CostSpec};
pub use flow::{FlowSolution, Transshipment};
pub use grid::DiscretizedSupply;
pub use semicoupling::{
    adaptive_padding, default_padding, solve_semicoupling, Assignment, SemicouplingPlan,
    SemicouplingSolver,
};
