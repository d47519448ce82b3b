//! Numerical laboratory for the relativistic point particle.
//!
//! The action of a free relativistic particle is proportional to the proper
//! length of its world line. Attaching to the particle a sphere whose radius is
//! its De Broglie length, the area swept by that sphere along the direction of
//! motion is proportional to the same proper time integral, with the constant
//! `m0^2 c^2 / h`. This crate evaluates both functionals independently, checks
//! the proportionality, and shows that extremizing either one selects the same
//! path. The Nambu-Goto worldsheet area is provided for comparison.
//!
//! Modules, bottom-up:
//!
//! * [`quantities`]: unit systems, particles, Compton length, relativistic mass.
//! * [`expr`]: a small expression language for `x(t)` with exact derivatives.
//! * [`trajectory`]: analytic and sampled world lines, plus [`worldsheet`]s.
//! * [`quadrature`]: Simpson rules behind the [`quadrature::Quadrature`] trait.
//! * [`functionals`]: action, swept area, world-line length, Nambu-Goto area.
//! * [`variational`]: fixed-endpoint discrete path optimizer.
//! * [`cli`]: the `worldline` command-line front end.

pub mod cli;
pub mod error;
pub mod expr;
pub mod functionals;
pub mod quadrature;
pub mod quantities;
pub mod registry;
pub mod trajectory;
pub mod variational;
pub mod worldsheet;

pub use error::{Error, Result};
pub use quantities::{Particle, UnitMode, UnitSystem};
