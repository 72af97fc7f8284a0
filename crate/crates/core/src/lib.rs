//! Ground states and action minimizers of the focusing cubic-to-subcritical
//! NLS in three dimensions with a point interaction at the origin.

mod descent;
pub mod cli;
pub mod error;
pub mod functional;
pub mod greens;
pub mod grid;
pub mod record;
pub mod reference_nls;
pub mod solvers;
pub mod state;
pub mod verify;

pub use error::{Error, Result};
