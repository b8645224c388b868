//! Dynamic debonding of a circular thin film.
//!
//! The film occupies the disk of radius `R`; the annulus of width `rho(t)` next
//! to the rim is debonded and vibrates under a damped wave equation, the rest
//! is glued. The crate solves the radial problem for a prescribed front, evolves
//! the front by Griffith's criterion, and audits the energy balance against an
//! independent finite-difference reference.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dalembert;
pub mod energy_audit;
pub mod error;
pub mod fields;
pub mod geometry;
pub mod griffith;
pub mod profile;
pub mod prescribed;
pub mod oracle;
pub mod quadrature;

pub use error::{DebondError, Result};
