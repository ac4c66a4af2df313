//! Command-line front end and HTTP/JSON service for secweave.

pub mod commands;
pub mod repl;
pub mod server;
