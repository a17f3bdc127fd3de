//! I/O surface and experiment runners for the neuroloop emulator.
//!
//! The core crate holds the mechanisms (chip, fields, agents); this crate
//! adds file formats, deterministic experiment harnesses, and the CLI.

pub mod experiments;
pub mod io;
