//! Closed-loop ambient environment optimization for AR.

pub mod cli;
pub mod clock;
pub mod edge;
pub mod error;
pub mod image;
pub mod policy;
pub mod scene;
pub mod sim;
pub mod vision;

pub use error::{Error, Result};
