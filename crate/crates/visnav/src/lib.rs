//! File formats, benchmark harness, plotting and the `visnav` command line
//! on top of `visnav-core`.

pub mod bench;
pub mod cli;
pub mod error;
pub mod formats;
pub mod kv;
pub mod pfm;
pub mod plot;
