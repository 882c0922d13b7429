pub mod acoustic;
pub mod bridge;
pub mod checkpoint;
pub mod cli;
pub mod env;
pub mod error;
pub mod fixtures;
pub mod harness;
pub mod mlp;
pub mod policy;
pub mod ppo;

pub use error::{Error, Result};
