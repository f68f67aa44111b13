//! Exact symbolic engine for the noncommutative-residue computation of the
//! J-twisted Dirac operator on 3- and 4-dimensional manifolds with boundary.
//!
//! The crate is organized in layers:
//!
//! * [`scalar`] — exact Gaussian-rational arithmetic and π-polynomials;
//! * [`formal`] — sparse polynomials in the formal generators of the
//!   computation (matrix entries of the product structure, their first
//!   derivatives, curvature and pairing symbols) with the product-structure
//!   relation rewriting;
//! * [`clifford`] — Clifford algebra over arbitrary coefficient rings and the
//!   perfect-matching trace of abstract vectors;
//! * [`xi`] — rational functions of the normal cotangent variable, the
//!   upper-half-plane projection, residue integration and sphere moments;
//! * [`symbol`] — symbols of the twisted Dirac operator, its parametrix, the
//!   composition formula, and boundary evaluation rules;
//! * [`boundary`] / [`interior`] — the end-to-end boundary-case pipeline and
//!   the interior trace-identity assembly;
//! * [`oracle`] — independent floating-point verification (explicit gamma
//!   matrices, adaptive quadrature, constrained random product structures);
//! * [`report`] — the expected-values table, check runner and report types.

pub mod boundary;
pub mod clifford;
pub mod error;
pub mod formal;
pub mod interior;
pub mod oracle;
pub mod report;
pub mod scalar;
pub mod symbol;
pub mod xi;
