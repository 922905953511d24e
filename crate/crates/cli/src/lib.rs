//! Command-line pipeline for the potential-prevalence index.

pub mod config;
pub mod error;
pub mod io;
pub mod projection;
pub mod manifest;
pub mod stages;
pub mod synth;
pub mod run;
