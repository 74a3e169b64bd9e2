//! Link prediction and edge classification on textual-edge graphs.

pub mod cli;
pub mod config;
pub mod document;
pub mod embed;
pub mod error;
pub mod eval;
pub mod graph;
pub mod io;
pub mod synth;
pub mod tgnn;
pub mod train;
pub mod transition;

pub use error::{Error, Result};
