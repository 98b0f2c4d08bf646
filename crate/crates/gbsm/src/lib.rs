//! File formats, experiment campaigns and the command-line front end built on
//! [`gbsm_core`].

pub mod cli;
pub mod error;
pub mod experiments;
pub mod mdp_file;
pub mod plot;
pub mod table;

pub use error::{AppError, Result};
