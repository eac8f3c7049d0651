use crate::channel::ChannelRealization;
use crate::precoding::{thp_fold, PrecoderSet};
use crate::C64;

/// Effective gains below this magnitude are treated as erasures.
pub const ERASURE_THRESHOLD: f64 = 1e-12;

/// Per-subcarrier detection output of one stream at one user.
#[derive(Debug, Clone)]
pub struct Detection {
    /// Observation before equalization (after SIC for private streams).
    pub raw: Vec<C64>,
    /// Effective complex gain, power scaling included.
    pub gain: Vec<C64>,
    /// Interference-plus-noise power around `raw`.
    pub disturbance: Vec<f64>,
    /// `raw / gain`, or zero on erased subcarriers.
    pub soft: Vec<C64>,
    pub erased: Vec<bool>,
}

impl Detection {
    /// Undoes the Tomlinson-Harashima fold on the real part of user `k`'s
    /// private observations, keeping `raw = gain·soft` consistent.
    pub(crate) fn unfold(&mut self, pre: &PrecoderSet, k: usize) {
        for n in 0..self.soft.len() {
            if self.erased[n] || !pre.is_folded(n, k) {
                continue;
            }
            let s = self.soft[n];
            self.soft[n] = C64::new(thp_fold(s.re), s.im);
            self.raw[n] = self.soft[n] * self.gain[n];
        }
    }

    pub(crate) fn equalize(raw: Vec<C64>, gain: Vec<C64>, disturbance: Vec<f64>) -> Self {
        let erased: Vec<bool> = gain.iter().map(|g| g.norm() < ERASURE_THRESHOLD).collect();
        let soft = raw
            .iter()
            .zip(&gain)
            .zip(&erased)
            .map(|((y, g), &e)| if e { C64::default() } else { y / g })
            .collect();
        Self {
            raw,
            gain,
            disturbance,
            soft,
            erased,
        }
    }
}

/// Equalizes the common stream at user `k`, treating every private stream as noise.
pub fn decode_common(
    y: &[C64],
    ch: &ChannelRealization,
    pre: &PrecoderSet,
    k: usize,
    noise_var: f64,
) -> Detection {
    let rows = &ch.freq[k];
    let gain = (0..y.len()).map(|n| pre.common_gain(&rows[n], n)).collect();
    let disturbance = (0..y.len())
        .map(|n| pre.common_interference(&rows[n], n, k) + noise_var)
        .collect();
    Detection::equalize(y.to_vec(), gain, disturbance)
}

/// Remodulated hard BPSK decisions; erased subcarriers contribute zero.
pub fn hard_decisions(det: &Detection) -> Vec<C64> {
    det.soft
        .iter()
        .zip(&det.erased)
        .map(|(s, &e)| match (e, s.re < 0.0) {
            (true, _) => C64::default(),
            (false, true) => C64::new(-1.0, 0.0),
            (false, false) => C64::new(1.0, 0.0),
        })
        .collect()
}

/// Subtracts the reconstructed common stream and equalizes user `k`'s private stream.
pub fn sic_and_decode_private(
    y: &[C64],
    common_decisions: &[C64],
    ch: &ChannelRealization,
    pre: &PrecoderSet,
    k: usize,
    noise_var: f64,
) -> Detection {
    let rows = &ch.freq[k];
    let raw = y
        .iter()
        .zip(common_decisions)
        .enumerate()
        .map(|(n, (&obs, &d))| obs - pre.common_gain(&rows[n], n) * d)
        .collect();
    let gain = (0..y.len()).map(|n| pre.private_gain(&rows[n], n, k)).collect();
    let disturbance = (0..y.len())
        .map(|n| pre.private_interference(&rows[n], n, k) + noise_var)
        .collect();
    let mut det = Detection::equalize(raw, gain, disturbance);
    det.unfold(pre, k);
    det
}
