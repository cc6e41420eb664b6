//! Mixed-platoon traffic control at signalized intersections.
//!
//! A leading connected and automated vehicle (CAV) steers the human-driven
//! vehicles (HDVs) behind it through an intersection. The crate covers the
//! linear analysis of such a "1+n" platoon, the optimal terminal velocity,
//! the trajectory optimization problem, the event-triggered coordinator with
//! its benchmark controllers, and a deterministic single-lane microsimulator
//! with the evaluation metrics.

pub mod coordinator;
pub mod equilibrium;
pub mod error;
pub mod metrics;
pub mod models;
pub mod ocp;
pub mod platoon_dynamics;
pub mod simulator;
pub mod sweep;

pub use error::{PlatoonError, Result};
