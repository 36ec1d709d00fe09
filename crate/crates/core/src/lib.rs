//! Spectral wave-packet dynamics in a two-dimensional circular step potential.

pub mod barrier1d;
pub mod corefn;
pub mod error;
pub mod field;
pub mod observables;
pub mod packet;
pub mod quad;
pub mod roots;
pub mod scenario;
pub mod spectrum;

pub use error::{Error, Result};
