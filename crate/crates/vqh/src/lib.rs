//! Std companion of `vqh-core`: files, OSC, the book API and the
//! interactive session.

pub mod book;
pub mod client;
pub mod files;
pub mod hsetup;
pub mod osc;
pub mod repl;
pub mod server;
pub mod session;
