use thiserror::Error;

/// Errors produced by operator construction, model building, and the
/// Lindblad engine.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("site index {site} out of range for {n_spins} spins")]
    SiteOutOfRange { site: usize, n_spins: usize },

    #[error("space has no boson factor")]
    NoBosonFactor,

    #[error("operator breaks the fixed-excitation sector: {0}")]
    SectorViolation(String),

    #[error("operator does not conserve total spin excitation (commutator norm {norm:.3e})")]
    NonConserving { norm: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    #[error("transition grouping is ambiguous at tolerance {tol:.3e}: a chain of near-degenerate gaps spans more than the tolerance")]
    AmbiguousGrouping { tol: f64 },

    #[error("laser resonant with mode {mode} on axis {axis} (zero detuning)")]
    ResonantMode { mode: usize, axis: char },

    #[error("equilibrium position solver did not converge (gradient norm {grad:.3e} after {iters} iterations)")]
    NewtonNonConvergence { grad: f64, iters: usize },

    #[error("unstable chain: mode {mode} on axis {axis} has negative stiffness eigenvalue {lambda:.6e}")]
    ZigzagInstability { mode: usize, axis: char, lambda: f64 },

    #[error("trace error {err:.3e} exceeded guard {guard:.3e} at t = {t:.6}")]
    TraceGuard { t: f64, err: f64, guard: f64 },

    #[error("step size underflow at t = {t:.6} (h = {h:.3e})")]
    StepUnderflow { t: f64, h: f64 },

    #[error("boson truncation inadequate: top-level population {pop:.3e} exceeds {tol:.3e} at t = {t:.6}")]
    TruncationTrip { t: f64, pop: f64, tol: f64 },

    #[error("superoperator dimension {dim} exceeds configured cap {cap}")]
    DimensionCap { dim: usize, cap: usize },

    #[error("steady-state solve failed: {0}")]
    SteadyStateFailure(String),
}

pub type Result<T> = std::result::Result<T, Error>;
