//! Numerical tolerances shared across modules.

/// Tail-sum differences within this are treated as equal in `<=st` comparisons.
pub const ORDER: f64 = 1e-12;
/// Max-norm residual allowed for a stationary solve.
pub const STATIONARY_RESIDUAL: f64 = 1e-10;
/// Row sums of stochastic kernels must equal one within this.
pub const ROW_SUM: f64 = 1e-10;
/// Row sums of substochastic kernels may exceed one by at most this.
pub const SUBSTOCHASTIC_SLACK: f64 = 1e-12;
/// A mass deficit more negative than this is an integrity failure.
pub const DEFICIT_NEGATIVE: f64 = 1e-9;
/// Pdf mass bookkeeping must close within this.
pub const PDF_MASS: f64 = 1e-8;
/// Probability vectors must sum to one within this.
pub const PMF_SUM: f64 = 1e-12;
/// Residual |EC - EB| accepted at a QoS-exponent root.
pub const QOS_RESIDUAL: f64 = 1e-10;
/// ε^u(j) may undercut ε^l(j) by at most this before ordering is flagged.
pub const SQL_ORDERING: f64 = 1e-10;
/// Tail values under this are reported as zero with an underflow flag.
pub const TAIL_UNDERFLOW: f64 = 1e-300;
/// Relative tolerance for lattice-compatibility checks (λ/κ, α/κ integrality).
pub const LATTICE: f64 = 1e-9;
