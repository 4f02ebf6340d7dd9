//! Control endpoint for a live session.
//!
//! One driver thread owns the [`vsim::session::Session`] and ticks it at
//! 90 Hz. Clients talk to it over WebSocket (`/` or `/ws`) or over
//! newline-delimited JSON on a plain TCP port; both carry the same
//! messages, described in `docs/protocol.md`. `GET /schema.json` returns the
//! parameter schema.

mod driver;
mod net;
mod outbox;
pub mod protocol;

pub use driver::DriverStats;
pub use net::{serve, start, RunningServer, ServeConfig, MAX_LINE};
pub use outbox::{REPLY_CAPACITY, STREAM_CAPACITY};
