use thiserror::Error;

/// Errors surfaced by samplers, solvers and estimators.
#[derive(Debug, Error)]
pub enum LabError {
    #[error("invalid window: {0}")]
    InvalidWindow(String),

    #[error("invalid model parameter: {0}")]
    InvalidModel(String),

    #[error("interarrival law has mean {mean}, expected 1 (tolerance {tol})")]
    NonUnitMean { mean: f64, tol: f64 },

    #[error(
        "kernel discretization failure: eigenvalue {value} outside [-{eps}, 1+{eps}]; \
         increase the grid resolution m"
    )]
    KernelDiscretization { value: f64, eps: f64 },

    #[error("eigenvalue solver failed: {0}")]
    EigenSolver(String),

    #[error("invalid cost exponent p={0}; supported range (0, 1]")]
    InvalidCostExponent(f64),

    #[error("transport instance infeasible: {0}")]
    Infeasible(String),

    #[error("flow solver did not converge: {0}")]
    FlowNonConvergent(String),

    #[error("balanced transport requires equal masses: |{lhs} - {rhs}| > {tol}")]
    MassMismatch { lhs: f64, rhs: f64, tol: f64 },

    #[error("mass bookkeeping mismatch: {0}")]
    MassBookkeeping(String),

    #[error("adaptive padding exceeded {0} doublings; pathological instance")]
    PaddingDiverged(u32),

    #[error("operation requires p < 1 strictly: {0}")]
    RequiresConcave(String),

    #[error("degenerate sample: {0}")]
    DegenerateSample(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}
