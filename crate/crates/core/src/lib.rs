//! Surface-embedded periodic tool motion.
//!
//! An offline stage warps a nominal periodic primitive onto a curved
//! height-field surface ([`offline_warp`]); an online stage projects each
//! warped pose under scalar force feedback and a conic orientation bound
//! ([`online_exec`]) against a simulated contact sensor ([`contact_sim`]).
//! [`metrics`] scores continuity and collisions of the results.

pub mod contact_sim;
pub mod error;
pub mod geometry;
pub mod metrics;
pub mod offline_warp;
pub mod online_exec;

pub use error::{Error, Result};
