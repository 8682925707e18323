//! HTTP service and command-line front end for the weak-isolation mock
//! store.

pub mod api;
pub mod cli;

pub use api::{router, AppState, ServerSettings};
