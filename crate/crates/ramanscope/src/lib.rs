//! File formats, storage and the command-line pipeline around
//! `ramanscope-core`.
//!
//! - [`rruff`]: RRUFF spectrum text files.
//! - [`store`]: manifests, noisy dataset directories and PNG image stores.
//! - [`model_io`]: JSON model files for every classifier.
//! - [`report`]: CSV tables and SVG plots.
//! - [`config`]: the TOML run configuration and run ids.
//! - [`cli`]: the `ramanscope` commands.

pub mod cli;
pub mod config;
pub mod model_io;
pub mod report;
pub mod rruff;
pub mod store;
