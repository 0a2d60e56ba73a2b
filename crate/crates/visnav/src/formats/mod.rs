//! Text file formats shared by the command-line tools.

pub mod camera;
pub mod config;
pub mod records;
pub mod scan;
pub mod scenario;
