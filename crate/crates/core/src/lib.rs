//! Controllability analysis for weighted leader-follower networks.
//!
//! The crate is split along the lines of the workflow:
//!
//! * [`graphgen`] builds ER / WS / BA topologies and perturbs their weights,
//! * [`netmodel`] turns a graph and a leader set into the follower pencil and
//!   can steer the followers to the origin,
//! * [`ctrlcore`] decides controllability numerically and analyses eigenvalue
//!   multiplicities,
//! * [`exactoracle`] recomputes the same quantities in exact rational
//!   arithmetic for small instances,
//! * [`sweep`] runs seeded Monte Carlo experiments over the noise coefficient.

pub mod ctrlcore;
pub mod error;
pub mod exactoracle;
pub mod expm;
pub mod graphgen;
pub mod netmodel;
pub mod rng;
pub mod sweep;

pub use error::{Error, Result};
pub use rng::RngStream;
