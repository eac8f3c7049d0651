//! Stream assembly and per-user reception shared by the RSMA schemes.

use crate::channel::{ChannelRealization, CsitView};
use crate::precoding::PrecoderSet;
use crate::splitter::{combine_mrc, extract_user_portion, CombinerWeights, SplitMap};
use crate::C64;

use super::{decode_common, hard_decisions, sic_and_decode_private, superpose, Detection, FrequencyGrid};

// keeps the MRC weights finite on noiseless, interference-free branches
const DISTURBANCE_FLOOR: f64 = 1e-300;

/// Pads the common stream with zeros to one symbol per subcarrier,
/// pre-subtracts for ZF-DPC and superposes.
pub fn rsma_tx(common: &[C64], private: &[Vec<C64>], pre: &PrecoderSet, csit: &CsitView) -> FrequencyGrid {
    let num_sc = pre.subcarriers.len();
    let mut padded = common.to_vec();
    padded.resize(num_sc, C64::default());
    let mut encoded = private.to_vec();
    if pre.subcarriers.iter().any(|s| s.dpc_order.is_some()) {
        for n in 0..num_sc {
            let column: Vec<C64> = private.iter().map(|d| d[n]).collect();
            let u = pre.presubtract(&csit.rows(n), n, &column);
            for (k, x) in u.into_iter().enumerate() {
                encoded[k][n] = x;
            }
        }
    }
    superpose(&padded, &encoded, pre)
}

/// Common-stream detection and the post-SIC private detection at one user.
#[derive(Debug, Clone)]
pub struct UserReception {
    pub common: Detection,
    pub private: Detection,
}

/// Decodes the common stream, cancels it with hard decisions, then decodes the private stream.
///
/// Subcarriers at or beyond `common_len` carry zero padding and are not cancelled.
pub fn rsma_rx(
    y: &[C64],
    ch: &ChannelRealization,
    pre: &PrecoderSet,
    k: usize,
    common_len: usize,
    noise_var: f64,
) -> UserReception {
    let common = decode_common(y, ch, pre, k, noise_var);
    let mut decisions = hard_decisions(&common);
    decisions.iter_mut().skip(common_len).for_each(|d| *d = C64::default());
    let private = sic_and_decode_private(y, &decisions, ch, pre, k, noise_var);
    UserReception { common, private }
}

fn branch(det: &Detection, n: usize) -> (C64, f64) {
    let gain = if det.erased[n] { C64::default() } else { det.gain[n] };
    (gain, det.disturbance[n].max(DISTURBANCE_FLOOR))
}

/// Combining weights of every replica of user `k`, keyed by private subcarrier.
pub fn replica_weights(rx: &UserReception, map: &SplitMap, k: usize) -> Vec<(usize, usize, CombinerWeights)> {
    let slots: Vec<usize> = (0..map.common_len()).collect();
    extract_user_portion(&slots, map, k)
        .into_iter()
        .map(|(z, p)| {
            let (private_gain, private_disturbance) = branch(&rx.private, z);
            let (common_gain, common_disturbance) = branch(&rx.common, p);
            let w = CombinerWeights {
                private_gain,
                private_disturbance,
                common_gain,
                common_disturbance,
            };
            (z, p, w)
        })
        .collect()
}

/// Private soft symbols of user `k` with every replicated symbol replaced by
/// the MRC of its private and common observations.
pub fn combine_replicas(rx: &UserReception, map: &SplitMap, k: usize) -> Vec<C64> {
    let mut soft = rx.private.soft.clone();
    for (z, p, w) in replica_weights(rx, map, k) {
        soft[z] = combine_mrc(rx.private.raw[z], rx.common.raw[p], &w).unwrap_or_default();
    }
    soft
}
