//! One transmission slot of any scheme over a fixed channel realization.
//!
//! A [`Link`] holds the static parameters. [`Link::draw_slot`] draws a
//! channel (and its CSIT view) and builds the scheme's transmitter state;
//! [`SlotSetup::transmit_block`] then sends one OFDM block per user through
//! the full time-domain chain and counts errors.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::baselines::{
    conventional_rsma_rx, conventional_rsma_split, conventional_rsma_tx, mimo_noma_rx, mimo_noma_tx, mu_mimo_rx,
    mu_mimo_tx, noma_rates, NomaBeams, SchemeId,
};
use crate::channel::{degrade_csit, generate_channel, ChannelRealization, CsitView, TapProfile};
use crate::metrics::{common_sinr, count_bit_errors, private_sinr, simulate_packet_delay};
use crate::phy::rsma::{combine_replicas, rsma_rx, rsma_tx};
use crate::phy::{apply_channel, demodulate_bpsk, modulate_bpsk, Ofdm};
use crate::precoding::{allocate_power, CommonStrategy, PrecoderKind, PrecoderSet};
use crate::splitter::{build_split_map, compose_common, Arrangement, SplitMap};
use crate::{Result, SimError, C64};

/// Independent random streams of one trial.
#[derive(Debug, Clone)]
pub struct TrialRngs {
    pub channel: ChaCha8Rng,
    pub csit: ChaCha8Rng,
    pub data: ChaCha8Rng,
    pub noise: ChaCha8Rng,
}

impl TrialRngs {
    pub fn from_seed(seed: u64) -> Self {
        let stream = |id: u64| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(id);
            rng
        };
        Self {
            channel: stream(0),
            csit: stream(1),
            data: stream(2),
            noise: stream(3),
        }
    }
}

/// Static link parameters at one SNR point.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkParams {
    pub num_users: usize,
    pub num_antennas: usize,
    pub num_subcarriers: usize,
    pub num_taps: usize,
    pub tap_decay: f64,
    pub cp_len: usize,
    pub total_power: f64,
    pub noise_var: f64,
    pub common_fraction: f64,
    pub csit_error: f64,
    pub precoder: PrecoderKind,
    pub common_strategy: CommonStrategy,
    /// Replicated (proposed) or common (conventional) symbols per user.
    pub per_user_common: usize,
    pub chunk: usize,
    pub noma_weak_share: f64,
}

impl LinkParams {
    /// Defaults of the desk-scale reference setup at the given SNR (dB).
    pub fn at_snr_db(snr_db: f64) -> Self {
        Self {
            num_users: 2,
            num_antennas: 2,
            num_subcarriers: 64,
            num_taps: 8,
            tap_decay: 0.5,
            cp_len: 16,
            total_power: 1.0,
            noise_var: 10f64.powf(-snr_db / 10.0),
            common_fraction: 0.5,
            csit_error: 0.0,
            precoder: PrecoderKind::Rci,
            common_strategy: CommonStrategy::DominantEigenvector,
            per_user_common: 32,
            chunk: 2,
            noma_weak_share: 0.8,
        }
    }
}

/// Outcome of one block at one user.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct UserBlock {
    pub private_bits: usize,
    pub private_errors: usize,
    pub info_bits: usize,
    pub info_errors: usize,
}

impl UserBlock {
    pub fn success(&self) -> bool {
        self.info_errors == 0
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockOutcome {
    pub users: Vec<UserBlock>,
}

/// Link parameters plus the reusable OFDM machinery.
#[derive(Debug, Clone)]
pub struct Link {
    params: LinkParams,
    profile: TapProfile,
    ofdm: Ofdm,
}

#[derive(Debug, Clone)]
enum Transmitter {
    Proposed { pre: PrecoderSet, map: SplitMap },
    Conventional { pre: PrecoderSet },
    Private { pre: PrecoderSet },
    Noma { beams: NomaBeams },
}

/// A drawn channel with the scheme's transmitter state built from its CSIT view.
#[derive(Debug, Clone)]
pub struct SlotSetup<'a> {
    link: &'a Link,
    scheme: SchemeId,
    pub channel: ChannelRealization,
    pub csit: CsitView,
    tx: Transmitter,
}

impl Link {
    pub fn new(params: LinkParams) -> Result<Self> {
        if params.num_antennas < params.num_users {
            return Err(SimError::Config(format!(
                "need N_t >= K, got N_t={}, K={}",
                params.num_antennas, params.num_users
            )));
        }
        if params.num_users * params.per_user_common > params.num_subcarriers {
            return Err(SimError::Config(format!(
                "K·m = {} exceeds N = {}",
                params.num_users * params.per_user_common,
                params.num_subcarriers
            )));
        }
        if !(params.noise_var >= 0.0 && params.noise_var.is_finite()) {
            return Err(SimError::Config(format!("invalid noise variance {}", params.noise_var)));
        }
        let profile = TapProfile::exponential(params.num_taps, params.tap_decay)?;
        let ofdm = Ofdm::new(params.num_subcarriers, params.cp_len, params.num_taps)?;
        Ok(Self { params, profile, ofdm })
    }

    pub fn params(&self) -> &LinkParams {
        &self.params
    }

    /// Draws a fresh channel from `rngs.channel`, degrades it with `rngs.csit`
    /// and builds the transmitter of `scheme`.
    pub fn draw_slot(&self, scheme: SchemeId, rngs: &mut TrialRngs) -> Result<SlotSetup<'_>> {
        let p = &self.params;
        let channel = generate_channel(&mut rngs.channel, p.num_users, p.num_antennas, &self.profile, p.num_subcarriers)?;
        let csit = degrade_csit(&channel, p.csit_error, &mut rngs.csit)?;
        self.slot_with(scheme, channel, csit)
    }

    /// Builds the transmitter of `scheme` for a given channel and CSIT view.
    pub fn slot_with(&self, scheme: SchemeId, channel: ChannelRealization, csit: CsitView) -> Result<SlotSetup<'_>> {
        let p = &self.params;
        let precoders = |fraction: f64| -> Result<PrecoderSet> {
            let power = allocate_power(p.total_power, fraction, p.num_users)?;
            PrecoderSet::build(&csit, p.precoder, p.common_strategy, power, p.noise_var)
        };
        let tx = match scheme {
            SchemeId::ProposedLocalized | SchemeId::ProposedDistributed => {
                let arrangement = if scheme == SchemeId::ProposedLocalized {
                    Arrangement::Localized
                } else {
                    Arrangement::Distributed { chunk: p.chunk }
                };
                let map = build_split_map(&csit.gains(), p.per_user_common, arrangement)?;
                Transmitter::Proposed {
                    pre: precoders(p.common_fraction)?,
                    map,
                }
            }
            SchemeId::ConventionalRsma | SchemeId::HarqRsma => Transmitter::Conventional {
                pre: precoders(p.common_fraction)?,
            },
            SchemeId::MuMimo | SchemeId::MimoSdma => Transmitter::Private { pre: precoders(0.0)? },
            SchemeId::MimoNoma => Transmitter::Noma {
                beams: NomaBeams::build(&csit, p.total_power, p.noma_weak_share)?,
            },
        };
        Ok(SlotSetup {
            link: self,
            scheme,
            channel,
            csit,
            tx,
        })
    }

    /// Per-user packet delays under type-1 retransmission: the first slot uses
    /// `first` (or a fresh draw), every retransmission a fresh channel.
    pub fn packet_delays(
        &self,
        scheme: SchemeId,
        first: Option<SlotSetup<'_>>,
        rngs: &mut TrialRngs,
        max_slots: usize,
    ) -> Result<Vec<usize>> {
        let mut outcomes: Vec<BlockOutcome> = Vec::new();
        let mut pending = first;
        let mut failure: Option<SimError> = None;
        let mut delays = Vec::with_capacity(self.params.num_users);
        for k in 0..self.params.num_users {
            let slots = simulate_packet_delay(
                |slot| {
                    while outcomes.len() < slot && failure.is_none() {
                        let next = match pending.take() {
                            Some(s) => Ok(s),
                            None => self.draw_slot(scheme, rngs),
                        };
                        match next.and_then(|s| s.transmit_block(rngs)) {
                            Ok(o) => outcomes.push(o),
                            Err(e) => failure = Some(e),
                        }
                    }
                    outcomes.get(slot - 1).is_some_and(|o| o.users[k].success())
                },
                max_slots,
            )?;
            delays.push(slots);
        }
        match failure {
            Some(e) => Err(e),
            None => Ok(delays),
        }
    }
}

fn random_bits<R: Rng>(rng: &mut R, len: usize) -> Vec<u8> {
    (0..len).map(|_| rng.random_range(0..2u8)).collect()
}

impl SlotSetup<'_> {
    pub fn scheme(&self) -> SchemeId {
        self.scheme
    }

    pub fn split_map(&self) -> Option<&SplitMap> {
        match &self.tx {
            Transmitter::Proposed { map, .. } => Some(map),
            _ => None,
        }
    }

    pub fn precoders(&self) -> Option<&PrecoderSet> {
        match &self.tx {
            Transmitter::Proposed { pre, .. } | Transmitter::Conventional { pre } | Transmitter::Private { pre } => {
                Some(pre)
            }
            Transmitter::Noma { .. } => None,
        }
    }

    /// Sends one OFDM block per user with fresh bits and noise.
    pub fn transmit_block(&self, rngs: &mut TrialRngs) -> Result<BlockOutcome> {
        let p = &self.link.params;
        let (k_users, n_sc, m) = (p.num_users, p.num_subcarriers, p.per_user_common);
        let common_per_user = if matches!(self.tx, Transmitter::Conventional { .. }) { m } else { 0 };
        let messages: Vec<Vec<u8>> = (0..k_users)
            .map(|_| random_bits(&mut rngs.data, n_sc + common_per_user))
            .collect();

        let (grid, split) = match &self.tx {
            Transmitter::Proposed { pre, map } => {
                let symbols: Vec<Vec<C64>> = messages.iter().map(|b| modulate_bpsk(b)).collect();
                let common = compose_common(&symbols, map);
                (rsma_tx(&common, &symbols, pre, &self.csit), Vec::new())
            }
            Transmitter::Conventional { pre } => {
                let fraction = m as f64 / (n_sc + m) as f64;
                let split = messages
                    .iter()
                    .map(|msg| conventional_rsma_split(msg, fraction))
                    .collect::<Result<Vec<_>>>()?;
                let (common, private): (Vec<Vec<u8>>, Vec<Vec<u8>>) = split.iter().cloned().unzip();
                (conventional_rsma_tx(&common, &private, pre, &self.csit), split)
            }
            Transmitter::Private { pre } => (mu_mimo_tx(&messages, pre, &self.csit), Vec::new()),
            Transmitter::Noma { beams } => (mimo_noma_tx(&messages, beams), Vec::new()),
        };

        let frames = self.link.ofdm.modulate(&grid);
        let rx = apply_channel(&frames, &self.channel, p.noise_var, &mut rngs.noise)?;

        let mut users = Vec::with_capacity(k_users);
        for (k, msg) in messages.iter().enumerate() {
            let y = self.link.ofdm.demodulate(&rx.samples[k]);
            let block = match &self.tx {
                Transmitter::Proposed { pre, map } => {
                    let reception = rsma_rx(&y, &self.channel, pre, k, map.common_len(), p.noise_var);
                    let (private_errors, bits) = count_bit_errors(msg, &demodulate_bpsk(&reception.private.soft))?;
                    let combined = combine_replicas(&reception, map, k);
                    let (info_errors, _) = count_bit_errors(msg, &demodulate_bpsk(&combined))?;
                    UserBlock { private_bits: bits, private_errors, info_bits: bits, info_errors }
                }
                Transmitter::Conventional { pre } => {
                    let (common_hat, private_hat) =
                        conventional_rsma_rx(&y, &self.channel, pre, k, m, p.noise_var);
                    let (common_bits, private_bits) = &split[k];
                    let (private_errors, bits) = count_bit_errors(private_bits, &private_hat)?;
                    let (common_errors, cbits) = count_bit_errors(common_bits, &common_hat)?;
                    UserBlock {
                        private_bits: bits,
                        private_errors,
                        info_bits: bits + cbits,
                        info_errors: private_errors + common_errors,
                    }
                }
                Transmitter::Private { pre } => {
                    let (errors, bits) = count_bit_errors(msg, &mu_mimo_rx(&y, &self.channel, pre, k, p.noise_var))?;
                    UserBlock { private_bits: bits, private_errors: errors, info_bits: bits, info_errors: errors }
                }
                Transmitter::Noma { beams } => {
                    let (errors, bits) = count_bit_errors(msg, &mimo_noma_rx(&y, &self.channel, beams, k))?;
                    UserBlock { private_bits: bits, private_errors: errors, info_bits: bits, info_errors: errors }
                }
            };
            users.push(block);
        }
        Ok(BlockOutcome { users })
    }

    /// Achievable private rates `[k][n]` and common rates `[n]` on the true channel.
    ///
    /// For the proposed scheme a replicated symbol is seen through both
    /// branches, so its private rate uses the post-MRC SINR (sum of the
    /// private and common branch SINRs).
    pub fn rates(&self) -> (Vec<Vec<f64>>, Vec<f64>) {
        let noise = self.link.params.noise_var;
        let n_sc = self.link.params.num_subcarriers;
        let log = |s: f64| (1.0 + s).log2();
        match &self.tx {
            Transmitter::Noma { beams } => (noma_rates(&self.channel, beams, noise), vec![0.0; n_sc]),
            Transmitter::Proposed { pre, map } => {
                let sp = private_sinr(&self.channel, pre, noise);
                let sc = common_sinr(&self.channel, pre, noise);
                let mut rp: Vec<Vec<f64>> = sp.iter().map(|u| u.iter().map(|&s| log(s)).collect()).collect();
                for (k, rates) in rp.iter_mut().enumerate() {
                    for (j, &z) in map.selected(k).iter().enumerate() {
                        rates[z] = log(sp[k][z] + sc[k][map.position(k, j)]);
                    }
                }
                (rp, crate::metrics::common_rate(&self.channel, pre, noise))
            }
            Transmitter::Conventional { pre } | Transmitter::Private { pre } => {
                let rp = private_sinr(&self.channel, pre, noise)
                    .into_iter()
                    .map(|u| u.into_iter().map(log).collect())
                    .collect();
                (rp, crate::metrics::common_rate(&self.channel, pre, noise))
            }
        }
    }
}
