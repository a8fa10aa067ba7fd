//! Experiment driver: patch tests, h- and p-studies and collapsing-element
//! studies over (mesh, degree, basis choice, stabilization), reported as CSV
//! tables and SVG plots.

pub mod config;
pub mod plot;
pub mod report;
pub mod study;

pub use config::{Experiment, MeshSource, RunOptions, Study};
pub use study::{run, Report, Row};
