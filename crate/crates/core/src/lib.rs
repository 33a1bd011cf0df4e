//! Security-aware placement of ground ADS-B receivers.
//!
//! Receivers are chosen from candidate sites to minimize three objectives
//! at once with NSGA-II: multilateration GDOP over sampled airspace, the
//! range at which two receivers hear an aircraft, and exposure to jammers.

pub mod analysis;
pub mod commands;
pub mod config;
pub mod error;
pub mod fitness;
pub mod gdop;
pub mod geo;
pub mod io;
pub mod nsga2;
pub mod objectives;
pub mod scenario;

pub use error::{OspError, Result};
