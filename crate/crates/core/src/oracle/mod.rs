//! Independent floating-point verification layer: explicit gamma-matrix
//! Clifford representations, adaptive quadrature for line integrals, product
//! quadrature on spheres, constrained random product structures with
//! finite-difference derivative checks, and a fully numeric recomputation of
//! the boundary cases.
//!
//! Everything here is double precision and deliberately avoids the exact
//! engine's code paths: Clifford products become matrix products, the
//! upper-half-plane projection becomes a contour quadrature, residues become
//! adaptive line integrals.

pub mod checks;
pub mod gamma;
pub mod jfield;
pub mod numeric;
pub mod quad;
pub mod smallmat;

pub use checks::{run_oracle_checks, OracleCheck, OracleConfig};
pub use gamma::GammaRep;
pub use jfield::{sample_j, JInstance};

/// Tolerance for pure linear-algebra identities.
pub const TOL_LINALG: f64 = 1e-10;
/// Tolerance for quadrature against exact residue values.
pub const TOL_QUAD: f64 = 1e-8;
/// Tolerance for finite-difference-dependent and end-to-end checks.
pub const TOL_FD: f64 = 1e-6;
