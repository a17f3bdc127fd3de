//! Core engine for a mixed-signal neuromorphic processor emulator.
//!
//! The crate is `no_std` (with `alloc`) and has no I/O: it contains the
//! log-domain integrator models, the event-driven chip emulator, the
//! dynamic neural field engine with its winner-take-all compiler, and the
//! closed-loop agent networks built on top of the chip. All randomness is
//! seeded and all operations are deterministic, so identical inputs give
//! identical outputs on every platform.

#![no_std]

extern crate alloc;

pub mod agents;
pub mod chip;
pub mod dynamics;
pub mod fields;
pub mod rng;
