//! Numerical tolerances used across the crate, collected in one place.

/// Marginal feasibility of couplings and balanced-mass checks.
pub const MASS: f64 = 1e-9;
/// Distribution entries above `-NEGATIVE_CLIP` are clipped to zero.
pub const NEGATIVE_CLIP: f64 = 1e-12;
/// Hermiticity of operators flagged as Hermitian.
pub const OPERATOR_HERMITIAN: f64 = 1e-12;
/// Hermiticity of density matrices.
pub const STATE_HERMITIAN: f64 = 1e-10;
/// Trace of a valid density matrix.
pub const STATE_TRACE: f64 = 1e-8;
/// Smallest admissible eigenvalue of a density matrix.
pub const POSITIVITY_FLOOR: f64 = -1e-8;
/// Trace drift at which integration is refused.
pub const TRACE_DRIFT: f64 = 1e-6;
/// Edge population above which a truncated run is untrusted.
pub const LEAKAGE: f64 = 1e-6;
/// Absolute slack added to every audited inequality (quadrature error is added on top).
pub const AUDIT: f64 = 1e-6;
/// Relative threshold under which flow amounts are treated as zero (floating mode).
pub const FLOW_ZERO: f64 = 1e-14;
/// Grid snapping tolerance for checkpoint times, relative to max(1, t).
pub const GRID: f64 = 1e-9;
/// Gap between the crosscheck maximum and the closed form reported as an ambiguity note.
pub const B_CROSSCHECK: f64 = 0.05;
