//! Std side of nirikshak: HTTP transport, the mock student API, command
//! hooks, JSON Lines logs, config loading, HTML reports and the CLI.

pub mod cli;
pub mod config;
pub mod hooks;
pub mod html;
pub mod http;
pub mod log;
pub mod mock;

pub use config::{load, CliConfig, LoadedConfig};
pub use hooks::CommandHooks;
pub use http::UreqTransport;
pub use mock::{BugFlags, MockServer};
