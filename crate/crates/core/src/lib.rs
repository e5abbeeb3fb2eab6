pub mod clustering;
pub mod controller;
pub mod error;
pub mod frontend;
pub mod harness;
pub mod markov;
pub mod metrics;

pub use error::{Error, Result};
