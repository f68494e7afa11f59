//! Dominance analysis for antithetic integral feedback circuits.
//!
//! The crate follows the dominance workflow: build a nonlinear circuit model with an
//! analytic Jacobian ([`models`]), simulate it to locate attractors ([`ode`]), wrap the
//! attractors in convex regions ([`regions`]), check the necessary eigenvalue,
//! Nyquist and root-locus conditions ([`spectral`]), and certify `p`-dominance with
//! linear matrix inequalities over the region vertices ([`dominance`]).
//! [`experiment`] drives the same steps from configuration files.

pub mod error;
pub mod experiment;
pub mod geometry;
pub mod interval;
pub mod dominance;
pub mod models;
pub mod ode;
pub mod regions;
pub mod spectral;

pub use error::{DominanceError, ModelError, RegionError, SimError, SpectralError};
pub use interval::Interval;
