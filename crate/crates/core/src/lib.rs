//! Link-level simulator for downlink multicarrier rate-splitting multiple
//! access (RSMA).
//!
//! The transmitter replicates the private-stream symbols that sit on a user's
//! weakest subcarriers into the common stream. Every user decodes the common
//! stream, removes it by successive interference cancellation, decodes its
//! private stream and then maximum-ratio-combines the two observations of each
//! replicated symbol.
//!
//! Module map:
//! - [`channel`]: tapped-delay-line Rayleigh channels and imperfect CSIT.
//! - [`splitter`]: deep-fade selection, common-stream arrangement, MRC.
//! - [`precoding`]: RCI, ZF-DPC and common-stream beams, power split.
//! - [`phy`]: BPSK, superposition, OFDM framing, channel, SIC receiver.
//! - [`metrics`]: rates, bit errors, packet delay.
//! - [`baselines`]: conventional RSMA, MU-MIMO/SDMA, MIMO-NOMA, HARQ-RSMA.
//! - [`link`]: one transmission slot of any scheme over a fixed channel.
//! - [`harness`]: configuration, seeded parallel sweeps, CSV output.

pub mod baselines;
pub mod channel;
pub mod error;
pub mod harness;
pub mod link;
pub mod metrics;
pub mod phy;
pub mod precoding;
pub mod splitter;

pub use error::{Result, SimError};

/// Complex baseband sample.
pub type C64 = num_complex::Complex64;
