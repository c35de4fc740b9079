//! Deterministic simulator and analysis toolkit for an event-triggered
//! average consensus protocol that reaches the *exact* average of integer
//! initial values, as a ratio of two integers, in finite time on strongly
//! connected digraphs — and then stops transmitting.
//!
//! The crate is organized around four pieces:
//!
//! - [`digraph`]: validated directed graphs, strong-connectivity checks,
//!   seeded random generation, and per-node out-edge priority orders.
//! - [`protocol`]: the per-node state machine — mass/state variable pairs,
//!   the three event-trigger condition sets, and transmission decisions.
//! - [`engine`]: synchronous round execution with one-round delivery
//!   latency, quiescence detection, metrics, and invariant auditing.
//! - [`analysis`]: closed-form worst-case bounds on convergence rounds,
//!   transmissions, computations, memory, and per-node energy, plus
//!   compliance checks of observed runs against those bounds.
//!
//! All protocol arithmetic is exact integer arithmetic; averages are
//! reported as integer fractions and never rounded.

pub mod analysis;
pub mod digraph;
pub mod engine;
pub mod exact;
pub mod protocol;
