// SPDX-License-Identifier: Apache-2.0 OR MIT

//! Live-stepping websocket service. Each connection gets its own simulation
//! session paced in real time; the client pilots the obstacle and receives one
//! state frame per control tick.

pub mod protocol;
pub mod server;
pub mod session;

pub use protocol::PROTOCOL_VERSION;
pub use server::{router, serve, BridgeConfig};
pub use session::Session;
