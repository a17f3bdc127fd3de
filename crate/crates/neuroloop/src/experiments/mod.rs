//! Deterministic experiment harnesses shared by the CLI commands and the
//! acceptance suite.

pub mod dnf;
pub mod dpi;
pub mod energy;
pub mod navigate;
pub mod sequence;
pub mod streams;
pub mod wta;
