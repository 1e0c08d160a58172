//! Core model of a counter-UAS system embedded in a UTM ecosystem.
//!
//! * [`domain`]: vocabulary types, validation and geometry.
//! * [`registry`]: the identity and authorization databases.
//! * [`postdetect`]: the CUAS post-detection state machine.
//! * [`clarify`]: the authority-side clarification protocols, wire
//!   envelopes and a synchronous harness.

pub mod clarify;
pub mod domain;
pub mod postdetect;
pub mod registry;
