//! File formats: config, AER event streams, connectivity, arenas, CSV
//! artifacts, and optional SVG plots.

pub mod aer;
pub mod arena;
pub mod config;
pub mod connectivity;
pub mod csv;
pub mod svg;
