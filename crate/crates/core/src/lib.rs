//! Belief-propagation decoding of CRC-polar concatenated codes.
//!
//! The crate is organised bottom-up:
//!
//! * [`code`]: polar code construction, the polar transform, CRC
//!   attachment and the CRC parity-check (Tanner) graph.
//! * [`channel`]: BPSK over AWGN and channel LLRs.
//! * [`bp`]: kernels, processing-element updates and stage passes on the
//!   polar factor graph.
//! * [`cpbp`]: the concatenated CRC-polar BP decoder with a threshold
//!   iteration, plus the time-step latency model.
//! * [`neural`]: weighted BP (NCPBP, NNMS-RNN, NNMS), reverse-mode
//!   gradients, multiloss training and weight files.
//! * [`harness`]: Monte-Carlo FER simulation, sweeps and latency reports.

pub mod bp;
pub mod channel;
pub mod code;
pub mod cpbp;
mod error;
pub mod harness;
pub mod neural;

pub use error::{Error, Result};
