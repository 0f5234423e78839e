pub mod dynamics;
pub mod error;
pub mod flag;
pub mod harness;
pub mod lie;
pub mod setfinder;
pub mod weyl;

pub use error::{Error, Result};
