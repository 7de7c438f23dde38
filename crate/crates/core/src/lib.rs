//! extremalkit — numerical extremal problems of polynomial inequalities on
//! compact sets in one and several complex variables.
//!
//! The crate computes, at desk scale:
//!
//! * sharp derivative factors `M(n, α) = sup ‖DᵅP‖_E / ‖P‖_E` over
//!   polynomials of degree at most `n` ([`markov`]),
//! * degree-`n` Siciak-type extremal values, radial Green profiles
//!   `ρ_E(r)`, capacity estimates and Hölder-exponent fits ([`green`]),
//! * the explicit constant-transfer formulas between Hölder continuity of
//!   the Green function and V.Markov-type inequalities ([`transfer`]),
//! * fit-majorant calculus: ψ/ψ⁻¹, derivative bounds, closed forms and
//!   growth probes ([`majorant`]),
//! * cross-checks chaining all of the above into a single pass/fail
//!   report ([`verify`]).
//!
//! Everything is deterministic: node placement, simplex pivoting and
//! reduction order are all fixed, so identical inputs produce bitwise
//! identical outputs.

pub mod error;
pub mod extremal;
pub mod gamma;
pub mod green;
pub mod linprog;
pub mod majorant;
pub mod markov;
pub mod poly;
pub mod sets;
pub mod transfer;
pub mod verify;

pub use error::{Error, Result};
pub use sets::CompactSetDescriptor;
