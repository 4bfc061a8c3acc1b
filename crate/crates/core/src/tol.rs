//! Numeric tolerance constants used throughout the library.
//!
//! These are part of the public contract: state validation, observable
//! validation, and table checks all reference the named constants below
//! rather than ad-hoc literals.

/// Maximum deviation of a state vector's Euclidean norm from 1.
pub const STATE_NORM: f64 = 1e-12;

/// Maximum elementwise deviation from Hermitian symmetry.
pub const HERMITIAN: f64 = 1e-12;

/// Maximum deviation of a density matrix trace from 1.
pub const UNIT_TRACE: f64 = 1e-12;

/// Most negative eigenvalue tolerated in a density matrix.
pub const PSD_FLOOR: f64 = -1e-10;

/// Maximum deviation of a dichotomic observable's eigenvalues from ±1.
pub const DICHOTOMIC: f64 = 1e-10;

/// Maximum deviation of a per-setting outcome distribution's sum from 1.
pub const PROB_SUM: f64 = 1e-9;

/// Default tolerance for the non-signaling marginal check.
pub const NON_SIGNALING: f64 = 1e-9;

/// Maximum deviation from unitarity for Jones matrices.
pub const UNITARY: f64 = 1e-10;

/// Smallest 1 + ⟨C1⟩ denominator accepted when forming the F score.
pub const C1_DENOMINATOR_EPS: f64 = 1e-6;

/// Fraction of failed bootstrap resamples above which the estimate is
/// flagged unstable.
pub const BOOTSTRAP_EXCLUSION_WARN: f64 = 0.01;
