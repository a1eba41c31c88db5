//! Two-parameter rough integration on sampled sheets.

mod cochain;
pub mod complex;
pub mod controlled;
pub mod fbs;
pub mod error;
pub mod grid;
pub mod phi;
pub mod sewing1d;
pub mod stats;
pub mod young;
pub mod enhance;

pub use error::{Error, Result};
