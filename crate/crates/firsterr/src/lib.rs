//! Std companion to `firsterr-core`: corpus files, configuration,
//! natural-language realization, evaluation inputs and the command line.

pub mod config;
pub mod corpus;
pub mod error;
pub mod evalio;
pub mod realize;
pub mod record;
pub mod translator;

pub use error::{Error, Result};
