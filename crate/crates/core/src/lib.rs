//! Star products on the Weyl algebra in arbitrary ordered expressions.
//!
//! The crate has an exact layer and a numeric layer. The exact layer
//! ([`poly`]) implements the terminating star product on polynomials over
//! `Q(i)[hbar]` together with intertwiners between ordered expressions. The
//! numeric layer implements closed-form star-exponentials of linear forms
//! ([`linexp`]) and quadratic forms ([`quad`]), analytic continuation of
//! their two-valued amplitudes along paths in the complex parameter plane
//! ([`branch`]), and the polar-element algebra generated by half-period
//! exponentials ([`polar`]).

pub mod branch;
pub mod envelope;
pub mod error;
pub mod linexp;
pub mod numerics;
pub mod polar;
pub mod poly;
pub mod quad;
pub mod sample;
pub mod verify;

pub use error::{Error, Result};

/// Scalar types for the exact layer.
pub mod scalar;
