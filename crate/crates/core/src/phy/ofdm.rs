use std::sync::Arc;

use rand::Rng;
use rustfft::{Fft, FftPlanner};

use crate::channel::{complex_gaussian, ChannelRealization};
use crate::precoding::PrecoderSet;
use crate::{Result, SimError, C64};

/// Per-antenna transmit samples on every subcarrier, `samples[a][n]`.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyGrid {
    pub samples: Vec<Vec<C64>>,
}

impl FrequencyGrid {
    pub fn zeros(num_antennas: usize, num_subcarriers: usize) -> Self {
        Self {
            samples: vec![vec![C64::default(); num_subcarriers]; num_antennas],
        }
    }

    /// Mean of `‖x_n‖²` over subcarriers.
    pub fn mean_power(&self) -> f64 {
        let num_sc = self.samples.first().map_or(0, Vec::len).max(1);
        self.samples
            .iter()
            .flat_map(|a| a.iter().map(C64::norm_sqr))
            .sum::<f64>()
            / num_sc as f64
    }
}

/// `x_n = γ_n·(sqrt(P_c)·p_{c,n}·d_{c,n} + Σ_k sqrt(P_k)·p_{k,n}·d_{k,n})` with `γ_n` the
/// subcarrier's power scale (1 for linear precoders).
///
/// For ZF-DPC the private symbols must already be pre-subtracted.
pub fn superpose(common: &[C64], private: &[Vec<C64>], pre: &PrecoderSet) -> FrequencyGrid {
    let num_sc = pre.subcarriers.len();
    let num_antennas = pre.subcarriers.first().map_or(0, |s| s.common.len());
    let sc_common = pre.power.common.sqrt();
    let sc_private = pre.power.per_user.sqrt();
    let mut grid = FrequencyGrid::zeros(num_antennas, num_sc);
    for (n, sc) in pre.subcarriers.iter().enumerate() {
        for a in 0..num_antennas {
            let mut x = sc.common[a] * common[n] * sc_common;
            for (p, d) in sc.private.iter().zip(private) {
                x += p[a] * d[n] * sc_private;
            }
            grid.samples[a][n] = x * sc.scale;
        }
    }
    grid
}

/// Cyclic-prefix OFDM with unitary transforms.
#[derive(Clone)]
pub struct Ofdm {
    num_subcarriers: usize,
    cp_len: usize,
    ifft: Arc<dyn Fft<f64>>,
    fft: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Ofdm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Ofdm")
            .field("num_subcarriers", &self.num_subcarriers)
            .field("cp_len", &self.cp_len)
            .finish()
    }
}

impl Ofdm {
    /// `max_taps` is the longest channel this framing must keep circular.
    pub fn new(num_subcarriers: usize, cp_len: usize, max_taps: usize) -> Result<Self> {
        if num_subcarriers == 0 {
            return Err(SimError::Config("OFDM needs at least one subcarrier".into()));
        }
        if cp_len + 1 < max_taps {
            return Err(SimError::Config(format!(
                "cyclic prefix of {cp_len} samples is shorter than L-1 = {}",
                max_taps.saturating_sub(1)
            )));
        }
        let mut planner = FftPlanner::new();
        Ok(Self {
            num_subcarriers,
            cp_len,
            ifft: planner.plan_fft_inverse(num_subcarriers),
            fft: planner.plan_fft_forward(num_subcarriers),
        })
    }

    pub fn frame_len(&self) -> usize {
        self.num_subcarriers + self.cp_len
    }

    /// Inverse transform per antenna with the cyclic prefix prepended.
    pub fn modulate(&self, grid: &FrequencyGrid) -> Vec<Vec<C64>> {
        let scale = 1.0 / (self.num_subcarriers as f64).sqrt();
        grid.samples
            .iter()
            .map(|freq| {
                let mut body = freq.clone();
                self.ifft.process(&mut body);
                body.iter_mut().for_each(|x| *x *= scale);
                let mut frame = Vec::with_capacity(self.frame_len());
                frame.extend_from_slice(&body[self.num_subcarriers - self.cp_len..]);
                frame.extend_from_slice(&body);
                frame
            })
            .collect()
    }

    /// Strips the prefix and returns the per-subcarrier observations.
    pub fn demodulate(&self, frame: &[C64]) -> Vec<C64> {
        let scale = 1.0 / (self.num_subcarriers as f64).sqrt();
        let mut body = frame[self.cp_len..self.cp_len + self.num_subcarriers].to_vec();
        self.fft.process(&mut body);
        body.iter_mut().for_each(|x| *x *= scale);
        body
    }
}

/// Received time-domain samples of every user.
#[derive(Debug, Clone)]
pub struct RxFrame {
    pub samples: Vec<Vec<C64>>,
    pub noise_var: f64,
}

/// Linear convolution of each antenna stream with the taps, summed over
/// antennas, plus white Gaussian noise of variance `noise_var` per sample.
pub fn apply_channel<R: Rng + ?Sized>(
    frame: &[Vec<C64>],
    ch: &ChannelRealization,
    noise_var: f64,
    rng: &mut R,
) -> Result<RxFrame> {
    let len = frame.first().map_or(0, Vec::len);
    if frame.len() != ch.num_antennas() || frame.iter().any(|a| a.len() != len) {
        return Err(SimError::Argument(format!(
            "frame has {} antenna streams, channel has {}",
            frame.len(),
            ch.num_antennas()
        )));
    }
    let samples = ch
        .taps
        .iter()
        .map(|user| {
            let mut out = vec![C64::default(); len];
            for (taps, x) in user.iter().zip(frame) {
                for (l, &h) in taps.iter().enumerate() {
                    for t in l..len {
                        out[t] += h * x[t - l];
                    }
                }
            }
            if noise_var > 0.0 {
                for y in &mut out {
                    *y += complex_gaussian(rng, noise_var);
                }
            }
            out
        })
        .collect();
    Ok(RxFrame { samples, noise_var })
}
