//! Error type shared by every module of the crate.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Everything that can go wrong while building curves, checking reality
/// conditions, integrating differentials or flowing divisors.
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("branch points #{0} and #{1} coincide within tolerance")]
    DuplicateBranchPoint(usize, usize),

    #[error("a hyperelliptic curve needs an odd number of branch points, got {0}")]
    EvenCount(usize),

    #[error("branch point #{index} has imaginary part {imag:e}, beyond tolerance")]
    NonRealBranchPoint { index: usize, imag: f64 },

    #[error("pair ({0}, {1}) mixes signs of e_b - e_a; no real contour exists")]
    UnclassifiableSigns(usize, usize),

    #[error("no admissible range: {0}")]
    EmptyAdmissibleRange(String),

    #[error("degenerate synthesis: {0}")]
    DegenerateSynthesis(String),

    #[error("phi = {0} lies outside every admissible range")]
    OutsideAdmissibleRange(f64),

    #[error("integrand is singular strictly inside ({0}, {1})")]
    SingularInterior(f64, f64),

    #[error("quadrature did not converge: {0}")]
    NoConvergence(String),

    #[error("operation requires genus {expected}, chart has genus {got}")]
    WrongGenus { expected: usize, got: usize },

    #[error("chart must be classified before use: {0}")]
    UnclassifiedChart(String),

    #[error("am inversion failed to bracket u = {0}")]
    InversionFailure(f64),

    #[error("degenerate divisor: {0}")]
    DegenerateDivisor(String),

    #[error("flow velocity has imaginary residue {0:e}; sheet bookkeeping is inconsistent")]
    NonRealVelocity(f64),

    #[error("step size control failed below minimum step at t = {0}")]
    StepFailure(f64),

    #[error("trajectory span is not a period: {0}")]
    PeriodMismatch(String),

    #[error("grid too coarse: {0}")]
    GridTooCoarse(String),

    #[error("phase jump of {0} between adjacent grid points; unwrap failed")]
    PhaseUnwrapFailure(f64),

    #[error("|lambda_2g + e_a| = {0:e} is too close to zero for the t2 time mix")]
    NearSingularTimeMix(f64),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}
