//! Entry points for rdfg: an interactive REPL, the `analyze` command and a
//! line-delimited JSON analysis server over TCP or WebSocket.

pub mod protocol;
pub mod repl;
pub mod server;
mod tree;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
