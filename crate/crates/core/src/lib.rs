//! Exact symbolic engine for hyperquadric embeddability analysis of
//! real-analytic hypersurfaces.
//!
//! Everything is computed over the Gaussian rationals in truncated power
//! series rings, so every reported zero and nonzero is a statement about the
//! exact germ, not a floating-point approximation.  The layers build up from
//! arithmetic ([`rational`], [`series`], [`linalg`], [`solve`]) through the
//! geometry of a hypersurface and its associated differential system to the
//! obstruction determinants whose vanishing embeddability requires.

pub mod assoc_pde;
pub mod corpus;
pub mod error;
pub mod hypersurface;
pub mod linalg;
pub mod multiindex;
pub mod obstruction;
pub mod parser;
pub mod prolong;
pub mod rational;
pub mod series;
pub mod solve;
pub mod bounds;
pub mod wronskian;

pub use error::{Error, Result};
