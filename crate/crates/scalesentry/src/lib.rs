//! Deterministic simulator of an attack-aware autoscaling loop.
//!
//! A seeded workload of mixed normal and directory-scanning HTTP traffic is
//! served by a simulated multi-tier pod cluster. The service tier autoscales
//! on a windowed 5xx custom metric; a scheduled sentinel script trains a
//! random forest on the emitted access/error logs, redirects detected
//! attacker IPs to a fixed honeypot tier, and toggles the autoscaler's
//! max-replica bound against a per-condition attack-rate threshold. The
//! harness runs six experimental conditions with repetitions and reports
//! per-run timelines plus aggregated CSV results.
//!
//! Everything is deterministic for a given master seed: repeated runs
//! produce byte-identical artifacts.

pub mod autoscaler;
pub mod cluster;
pub mod error;
pub mod forest;
pub mod harness;
pub mod logpipe;
pub mod metrics;
pub mod rng;
pub mod sentinel;
pub mod testkit;
pub mod workload;

pub use error::{Error, Result};
