//! Transceiver building blocks: BPSK mapping, superposition of the common and
//! private streams, OFDM framing, the time-domain channel and the
//! common-then-private SIC receiver.

mod bpsk;
mod ofdm;
mod receiver;
pub mod rsma;

pub use bpsk::{demodulate_bpsk, modulate_bpsk};
pub use ofdm::{apply_channel, superpose, FrequencyGrid, Ofdm, RxFrame};
pub use receiver::{decode_common, hard_decisions, sic_and_decode_private, Detection, ERASURE_THRESHOLD};
