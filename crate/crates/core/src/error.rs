use thiserror::Error;

/// Errors produced by the numerical core.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("site index out of range: {0}")]
    SiteOutOfRange(String),
    #[error("memory guard exceeded: {what} requires dimension {dim}, guard is {guard}")]
    MemoryGuard {
        what: &'static str,
        dim: usize,
        guard: usize,
    },
    #[error("matrix is not Hermitian within tolerance (residual {residual:.3e})")]
    NotHermitian { residual: f64 },
    #[error("matrix is singular for {op}: smallest eigenvalue {min_eig:.3e} below tolerance {tol:.3e}")]
    Singular {
        op: &'static str,
        min_eig: f64,
        tol: f64,
    },
    #[error("state is not full rank (smallest eigenvalue {0:.3e})")]
    NotFullRank(f64),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("eigendecomposition failed: {0}")]
    EigFailure(String),
    #[error("superoperator picture mismatch: {0}")]
    PictureMismatch(String),
    #[error("ambiguous spectral clustering: {0}")]
    ClusterAmbiguity(String),
    #[error("Hamiltonian terms do not commute: max commutator norm {0:.3e}")]
    NonCommuting(f64),
    #[error("covering geometry error: {0}")]
    Geometry(String),
    #[error("kernel dimension unstable: {0}")]
    KernelUnstable(String),
    #[error("map is not a bimodule map (residual {0:.3e})")]
    NotBimodule(f64),
    #[error("optimizer did not converge: {0}")]
    NoConvergence(String),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("support violation: supp(rho) not contained in supp(omega)")]
    SupportViolation,
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
