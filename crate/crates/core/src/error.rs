//! Crate-wide error type.
//!
//! Every fallible operation in this crate reports through [`Error`].  The
//! variants are grouped by the layer that raises them: series arithmetic
//! (alignment, units, substitution), linear algebra, implicit solving, the
//! defining-function parser and reality checks, and the obstruction pipeline.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    // --- series arithmetic ---
    #[error("variable lists differ: [{left}] vs [{right}]")]
    VarMismatch { left: String, right: String },
    #[error("truncation caps differ: {left} vs {right}")]
    CapMismatch { left: u32, right: u32 },
    #[error("unknown variable `{0}`")]
    UnknownVar(String),
    #[error("wrong number of values: expected {expected}, got {got}")]
    WrongArity { expected: usize, got: usize },
    #[error("truncation cap exhausted: {0}")]
    CapExhausted(String),
    #[error("series is not a unit (zero constant term)")]
    NotAUnit,
    #[error("substitution for `{var}` has a nonzero constant term but the host series may depend on `{var}` beyond its cap")]
    NonNilpotentSubstitution { var: String },

    // --- linear algebra ---
    #[error("matrix is not square: {rows}x{cols}")]
    NonSquare { rows: usize, cols: usize },
    #[error("matrix rows have uneven lengths")]
    RaggedMatrix,
    #[error("no unit pivot available in series elimination and the division-free fallback was disabled")]
    NoUnitPivot,
    #[error("matrix is singular where a nonsingular one is required")]
    SingularMatrix,

    // --- implicit solving / geometry ---
    #[error("Jacobian is singular at the base point (determinant {det})")]
    SingularJacobian { det: String },
    #[error("Levi determinant vanishes at the base point (determinant {det})")]
    LeviDegenerate { det: String },
    #[error("implicit solution failed its residual check: {0}")]
    ResidualNonzero(String),

    // --- parsing and hypersurface validation ---
    #[error("parse error at byte {pos}: {msg}")]
    Parse { pos: usize, msg: String },
    #[error("defining function is not real: coefficient of {monomial} is {coeff} but its conjugate-symmetric partner carries {partner}")]
    RealityViolation {
        monomial: String,
        coeff: String,
        partner: String,
    },
    #[error("defining function is not normalized: {0}")]
    NotNormalized(String),
    #[error("certificate is invalid: {0}")]
    BadCertificate(String),

    // --- obstruction pipeline ---
    #[error("invalid obstruction spec: {0}")]
    BadSpec(String),
    #[error("gamma search exhausted its budget after {tried} candidates")]
    GammaSearchExhausted { tried: usize },
    #[error("gamma table rejected: {0}")]
    GammaTable(String),
    #[error("dependence extraction failed: {0}")]
    NoDependence(String),
    #[error("internal invariant violated: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;
