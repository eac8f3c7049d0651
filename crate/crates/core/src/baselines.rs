//! Reference schemes the splitter is compared against.

use std::fmt;
use std::str::FromStr;

use crate::channel::{ChannelRealization, CsitView};
use crate::link::{Link, TrialRngs};
use crate::phy::{demodulate_bpsk, modulate_bpsk, rsma::rsma_tx, Detection, FrequencyGrid};
use crate::precoding::{common_precoder, CommonStrategy, PrecoderSet};
use crate::{Result, SimError, C64};

/// Every scheme the harness can simulate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SchemeId {
    ProposedLocalized,
    ProposedDistributed,
    ConventionalRsma,
    MuMimo,
    MimoSdma,
    MimoNoma,
    HarqRsma,
}

impl SchemeId {
    pub const ALL: [SchemeId; 7] = [
        SchemeId::ProposedLocalized,
        SchemeId::ProposedDistributed,
        SchemeId::ConventionalRsma,
        SchemeId::MuMimo,
        SchemeId::MimoSdma,
        SchemeId::MimoNoma,
        SchemeId::HarqRsma,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SchemeId::ProposedLocalized => "ProposedLocalized",
            SchemeId::ProposedDistributed => "ProposedDistributed",
            SchemeId::ConventionalRsma => "ConventionalRsma",
            SchemeId::MuMimo => "MuMimo",
            SchemeId::MimoSdma => "MimoSdma",
            SchemeId::MimoNoma => "MimoNoma",
            SchemeId::HarqRsma => "HarqRsma",
        }
    }

    /// Stable numeric tag used in seed derivation.
    pub fn code(self) -> u64 {
        match self {
            SchemeId::ProposedLocalized => 1,
            SchemeId::ProposedDistributed => 2,
            SchemeId::ConventionalRsma => 3,
            SchemeId::MuMimo => 4,
            SchemeId::MimoSdma => 5,
            SchemeId::MimoNoma => 6,
            SchemeId::HarqRsma => 7,
        }
    }

    pub fn is_proposed(self) -> bool {
        matches!(self, SchemeId::ProposedLocalized | SchemeId::ProposedDistributed)
    }

    /// Whether the scheme transmits a common stream.
    pub fn has_common_stream(self) -> bool {
        self.is_proposed() || matches!(self, SchemeId::ConventionalRsma | SchemeId::HarqRsma)
    }
}

impl fmt::Display for SchemeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SchemeId {
    type Err = SimError;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase().replace(['-', '_'], "");
        SchemeId::ALL
            .into_iter()
            .find(|id| id.name().to_ascii_lowercase() == key)
            .ok_or_else(|| SimError::Config(format!("unknown scheme '{s}'")))
    }
}

/// Splits one user's message: the first `⌈fraction·len⌉` bits go to the common stream.
pub fn conventional_rsma_split(message: &[u8], fraction: f64) -> Result<(Vec<u8>, Vec<u8>)> {
    if !(0.0..=1.0).contains(&fraction) {
        return Err(SimError::Argument(format!("common fraction must lie in [0, 1], got {fraction}")));
    }
    // guard against fraction·len landing a hair above an integer
    let cut = ((fraction * message.len() as f64) - 1e-9).ceil().max(0.0) as usize;
    let cut = cut.min(message.len());
    Ok((message[..cut].to_vec(), message[cut..].to_vec()))
}

/// Conventional RSMA transmitter: common parts concatenated in user order.
pub fn conventional_rsma_tx(
    common_parts: &[Vec<u8>],
    private_parts: &[Vec<u8>],
    pre: &PrecoderSet,
    csit: &CsitView,
) -> FrequencyGrid {
    let common: Vec<u8> = common_parts.iter().flatten().copied().collect();
    let private: Vec<Vec<C64>> = private_parts.iter().map(|b| modulate_bpsk(b)).collect();
    rsma_tx(&modulate_bpsk(&common), &private, pre, csit)
}

/// Decoded `(common part, private part)` of user `k` under conventional RSMA.
pub fn conventional_rsma_rx(
    y: &[C64],
    ch: &ChannelRealization,
    pre: &PrecoderSet,
    k: usize,
    common_per_user: usize,
    noise_var: f64,
) -> (Vec<u8>, Vec<u8>) {
    let num_users = pre.num_users();
    let rx = crate::phy::rsma::rsma_rx(y, ch, pre, k, num_users * common_per_user, noise_var);
    let own = &rx.common.soft[k * common_per_user..(k + 1) * common_per_user];
    (demodulate_bpsk(own), demodulate_bpsk(&rx.private.soft))
}

/// MU-MIMO transmitter: private streams only, full power.
pub fn mu_mimo_tx(bits: &[Vec<u8>], pre: &PrecoderSet, csit: &CsitView) -> FrequencyGrid {
    let private: Vec<Vec<C64>> = bits.iter().map(|b| modulate_bpsk(b)).collect();
    rsma_tx(&[], &private, pre, csit)
}

/// Single-stage detection of user `k`'s stream.
pub fn mu_mimo_detect(y: &[C64], ch: &ChannelRealization, pre: &PrecoderSet, k: usize, noise_var: f64) -> Detection {
    let rows = &ch.freq[k];
    let gain = (0..y.len()).map(|n| pre.private_gain(&rows[n], n, k)).collect();
    let disturbance = (0..y.len())
        .map(|n| pre.private_interference(&rows[n], n, k) + noise_var)
        .collect();
    let mut det = Detection::equalize(y.to_vec(), gain, disturbance);
    det.unfold(pre, k);
    det
}

pub fn mu_mimo_rx(y: &[C64], ch: &ChannelRealization, pre: &PrecoderSet, k: usize, noise_var: f64) -> Vec<u8> {
    demodulate_bpsk(&mu_mimo_detect(y, ch, pre, k, noise_var).soft)
}

/// Two users sharing one beam on one subcarrier.
#[derive(Debug, Clone)]
pub struct NomaPair {
    pub beam: Vec<C64>,
    /// User with the smaller estimated channel norm; receives the larger power share.
    pub weak: usize,
    pub strong: usize,
}

/// Beams and power plan of MIMO-NOMA.
#[derive(Debug, Clone)]
pub struct NomaBeams {
    /// `pairs[n]`: the user pairs on subcarrier `n`.
    pub pairs: Vec<Vec<NomaPair>>,
    /// Power of one pair's beam.
    pub pair_power: f64,
    /// Fraction of `pair_power` given to the weak user.
    pub weak_share: f64,
}

impl NomaBeams {
    /// Users are paired `(0,1), (2,3), …`; each pair shares its dominant-eigenvector beam.
    pub fn build(csit: &CsitView, total_power: f64, weak_share: f64) -> Result<Self> {
        let num_users = csit.freq_hat.len();
        if num_users == 0 || num_users % 2 != 0 {
            return Err(SimError::Config(format!("MIMO-NOMA pairs users and needs an even K, got {num_users}")));
        }
        if !(0.0..=1.0).contains(&weak_share) {
            return Err(SimError::Config(format!("NOMA weak-user share must lie in [0, 1], got {weak_share}")));
        }
        let gains = csit.gains();
        let num_sc = csit.freq_hat[0].len();
        let pairs = (0..num_sc)
            .map(|n| {
                let rows = csit.rows(n);
                (0..num_users / 2)
                    .map(|i| {
                        let (a, b) = (2 * i, 2 * i + 1);
                        let beam = common_precoder(&[rows[a], rows[b]], CommonStrategy::DominantEigenvector)?;
                        let (weak, strong) = if gains[b][n] < gains[a][n] { (b, a) } else { (a, b) };
                        Ok(NomaPair { beam, weak, strong })
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            pairs,
            pair_power: total_power / (num_users / 2) as f64,
            weak_share,
        })
    }

    fn amplitudes(&self) -> (f64, f64) {
        (
            (self.weak_share * self.pair_power).sqrt(),
            ((1.0 - self.weak_share) * self.pair_power).sqrt(),
        )
    }

    fn locate(&self, n: usize, k: usize) -> (usize, bool) {
        let i = k / 2;
        (i, self.pairs[n][i].weak == k)
    }

    /// Power of the other pairs' beams at user `k` on subcarrier `n`.
    fn inter_pair(&self, row: &[C64], n: usize, k: usize) -> f64 {
        let (own, _) = self.locate(n, k);
        self.pairs[n]
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != own)
            .map(|(_, p)| crate::precoding::dot(row, &p.beam).norm_sqr() * self.pair_power)
            .sum()
    }
}

pub fn mimo_noma_tx(bits: &[Vec<u8>], beams: &NomaBeams) -> FrequencyGrid {
    let symbols: Vec<Vec<C64>> = bits.iter().map(|b| modulate_bpsk(b)).collect();
    let (aw, as_) = beams.amplitudes();
    let num_sc = beams.pairs.len();
    let num_antennas = beams.pairs.first().and_then(|p| p.first()).map_or(0, |p| p.beam.len());
    let mut grid = FrequencyGrid::zeros(num_antennas, num_sc);
    for (n, pairs) in beams.pairs.iter().enumerate() {
        for pair in pairs {
            let s = symbols[pair.weak][n] * aw + symbols[pair.strong][n] * as_;
            for (a, &w) in pair.beam.iter().enumerate() {
                grid.samples[a][n] += w * s;
            }
        }
    }
    grid
}

/// Weak users decode directly; strong users first cancel the weak user's symbol.
pub fn mimo_noma_rx(y: &[C64], ch: &ChannelRealization, beams: &NomaBeams, k: usize) -> Vec<u8> {
    let (aw, as_) = beams.amplitudes();
    let soft: Vec<C64> = y
        .iter()
        .enumerate()
        .map(|(n, &obs)| {
            let (i, is_weak) = beams.locate(n, k);
            let g = crate::precoding::dot(&ch.freq[k][n], &beams.pairs[n][i].beam);
            if g.norm() < crate::phy::ERASURE_THRESHOLD {
                return C64::default();
            }
            if is_weak {
                return obs / (g * aw);
            }
            let weak_hat = if (obs / (g * aw)).re < 0.0 { -1.0 } else { 1.0 };
            let residual = obs - g * aw * weak_hat;
            if as_ == 0.0 {
                C64::default()
            } else {
                residual / (g * as_)
            }
        })
        .collect();
    demodulate_bpsk(&soft)
}

/// Per-user NOMA rates `[k][n]`; the weak user's rate is limited by decodability at the strong user.
pub fn noma_rates(ch: &ChannelRealization, beams: &NomaBeams, noise_var: f64) -> Vec<Vec<f64>> {
    let num_sc = beams.pairs.len();
    let mut rates = vec![vec![0.0; num_sc]; ch.num_users()];
    let pw = beams.weak_share * beams.pair_power;
    let ps = (1.0 - beams.weak_share) * beams.pair_power;
    for (n, pairs) in beams.pairs.iter().enumerate() {
        for pair in pairs {
            let gain = |u: usize| crate::precoding::dot(&ch.freq[u][n], &pair.beam).norm_sqr();
            let inter = |u: usize| beams.inter_pair(&ch.freq[u][n], n, u) + noise_var;
            let (gw, gs) = (gain(pair.weak), gain(pair.strong));
            let (iw, is) = (inter(pair.weak), inter(pair.strong));
            let weak_at_weak = pw * gw / (ps * gw + iw);
            let weak_at_strong = pw * gs / (ps * gs + is);
            rates[pair.weak][n] = (1.0 + weak_at_weak.min(weak_at_strong)).log2();
            rates[pair.strong][n] = (1.0 + ps * gs / is).log2();
        }
    }
    rates
}

/// Type-1 HARQ over conventional RSMA: slots until user `user`'s block decodes error-free.
pub fn harq_rsma_delay(link: &Link, rngs: &mut TrialRngs, user: usize, max_slots: usize) -> Result<usize> {
    let delays = link.packet_delays(SchemeId::HarqRsma, None, rngs, max_slots)?;
    delays
        .get(user)
        .copied()
        .ok_or_else(|| SimError::Argument(format!("no user {user}")))
}
