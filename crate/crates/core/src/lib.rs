pub mod angular;
pub mod error;
pub mod fom;
pub mod greedy;
pub mod harness;
pub mod linalg;
pub mod rom;
pub mod spatial;

pub use error::{Error, Result};
