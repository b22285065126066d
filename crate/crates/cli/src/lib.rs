//! Command-line front end for `eigenflow`: solving matrix files, running
//! iteration-count experiments and property suites.

pub mod bench;
pub mod cli;
pub mod error;
pub mod input;
pub mod solve;
pub mod verify;

pub use cli::run;
pub use error::CliError;
