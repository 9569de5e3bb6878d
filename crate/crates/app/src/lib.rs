//! Command line and HTTP front ends for the `cryscreen` engine.

pub mod cli;
pub mod config_file;
pub mod error;
pub mod response;
pub mod service;

pub use error::AppError;
pub use response::DiagnoseResponse;
