//! Battery evaluation, the AAI level scale, moduli geometry of batteries and
//! Generator-Verifier-Updater dynamics on synthetic agents.
//!
//! `no_std` with `alloc`. Parallel work goes through [`eval::Executor`], so
//! callers with threads can supply a pool while results stay in index order.

#![no_std]

extern crate alloc;

pub mod aai;
pub mod eval;
pub mod geometry;
pub mod gvu;
pub mod math;
pub mod model;
pub mod rng;
pub mod testbed;

pub use eval::{evaluate_battery, EvalReport, Executor, ScoreLaw, Sequential};
pub use model::{Agent, Architecture, Battery, CapabilityConfig};
pub use rng::StreamKey;
