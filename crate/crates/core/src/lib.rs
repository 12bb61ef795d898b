//! Discrete-event simulation of WWW traffic carried by TCP over an ATM UBR+
//! bottleneck, with Early Packet Discard and Selective Drop switch policies.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod atm;
pub mod error;
pub mod kernel;
pub mod metrics;
pub mod network;
pub mod switch;
pub mod tcp;
pub mod traffic;

pub use error::{Error, Result};
