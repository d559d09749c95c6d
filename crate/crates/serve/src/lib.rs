//! HTTP service and command-line front end for `vizrec`.

pub mod api;
pub mod cli;
