//! Live teleoperation over TCP.

pub mod protocol;
pub mod server;
pub mod session;

pub use protocol::{ClientMessage, EndFrame, ServerMessage, StateFrame, TickInput, Transcript};
pub use server::{ServerSettings, SessionOutcome, TeleopServer};
pub use session::{replay, TeleopSession};
