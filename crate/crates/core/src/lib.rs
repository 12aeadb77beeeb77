//! Return-link scheduling for interference-limited multi-beam satellite
//! MIMO systems.
//!
//! The pipeline: [`channel`] synthesizes per-generation channel matrices from
//! beam geometry, [`rates`] computes MMSE-SIC per-user rates with max-min
//! decode ordering, [`scheduler`] picks node-disjoint paths by minimum
//! deletion, [`fsa`] adds adaptive depth escalation and free-slot assignment,
//! and [`metrics`] / [`campaign`] aggregate and export campaign statistics.

pub mod campaign;
pub mod channel;
pub mod error;
pub mod fsa;
pub mod metrics;
pub mod rates;
pub mod scheduler;

pub use error::{Error, Result};
