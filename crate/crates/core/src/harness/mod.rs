//! Everything the command line needs: run configs, backends, training and
//! evaluation drivers, artefact files.

pub mod backend;
pub mod config;
pub mod eval;
pub mod files;
pub mod plot;
pub mod run;

pub use backend::Backend;
pub use config::{RunConfig, TargetSpec};
pub use eval::{evaluate, run_episode, ActionMode, EvalReport};
pub use run::{train, RunPaths};
