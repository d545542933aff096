//! Core engine for online continual learning with continually evolving
//! class prototypes.
//!
//! A learner trains an embedding network on a non-stationary stream using a
//! pseudo-prototypical proxy loss, momentum-updated class prototypes, and
//! class-balanced reservoir replay; an independent evaluator classifies by
//! nearest prototype at any point in time.

pub mod agents;
pub mod embed_net;
mod error;
pub mod numerics;
pub mod ppp_loss;
pub mod proto_memory;
pub mod snapshot;
pub mod streams;

pub use error::{Error, Result};
