//! Line-oriented query server.
//!
//! Requests are single `\n`-terminated lines; responses are `OK <n>` followed
//! by `n` lines, or a single `ERR <code> <message>` line.

mod protocol;
mod server;
mod temp;

pub use protocol::{error_code, read_response, write_err, write_ok, Request, Response};
pub use server::{serve, Registry, ServerHandle};
pub use temp::TempPartitionDoc;
