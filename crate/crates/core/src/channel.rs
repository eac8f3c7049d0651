//! Multipath Rayleigh fading with an exponential power-delay profile.
//!
//! Each user-antenna link is a tapped delay line of `L` independent
//! circularly-symmetric complex Gaussian taps. The per-subcarrier response is
//! the `N`-point DFT of the taps. Responses are stored as the row that
//! multiplies the transmit vector, so user `k` on subcarrier `n` receives
//! `freq[k][n] · x_n`.

use rand::Rng;
use rand_distr::StandardNormal;
use rustfft::FftPlanner;

use crate::{Result, SimError, C64};

/// Draws one circularly-symmetric complex Gaussian sample with the given variance.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, variance: f64) -> C64 {
    let scale = (variance / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re * scale, im * scale)
}

/// Exponentially decaying power-delay profile normalized to unit energy.
#[derive(Debug, Clone, PartialEq)]
pub struct TapProfile {
    num_taps: usize,
    decay_rate: f64,
    tap_powers: Vec<f64>,
}

impl TapProfile {
    pub fn exponential(num_taps: usize, decay_rate: f64) -> Result<Self> {
        if num_taps == 0 {
            return Err(SimError::Config("tap profile needs at least one tap".into()));
        }
        if !(decay_rate.is_finite() && decay_rate >= 0.0) {
            return Err(SimError::Config(format!(
                "tap decay rate must be finite and nonnegative, got {decay_rate}"
            )));
        }
        let raw: Vec<f64> = (0..num_taps)
            .map(|l| (-decay_rate * l as f64).exp())
            .collect();
        let total: f64 = raw.iter().sum();
        let tap_powers = raw.into_iter().map(|p| p / total).collect();
        Ok(Self {
            num_taps,
            decay_rate,
            tap_powers,
        })
    }

    pub fn num_taps(&self) -> usize {
        self.num_taps
    }

    pub fn decay_rate(&self) -> f64 {
        self.decay_rate
    }

    pub fn tap_powers(&self) -> &[f64] {
        &self.tap_powers
    }

    /// Expected `|H_{k,n}|²` per antenna entry; 1 up to rounding.
    pub fn energy(&self) -> f64 {
        self.tap_powers.iter().sum()
    }
}

/// One draw of every user's channel.
#[derive(Debug, Clone)]
pub struct ChannelRealization {
    /// `taps[k][a][l]`: tap `l` from antenna `a` to user `k`.
    pub taps: Vec<Vec<Vec<C64>>>,
    /// `freq[k][n][a]`: response of antenna `a` to user `k` on subcarrier `n`.
    pub freq: Vec<Vec<Vec<C64>>>,
    /// `subcarrier_gain[k][n]`: Euclidean norm of `freq[k][n]`.
    pub subcarrier_gain: Vec<Vec<f64>>,
    /// Per-entry variance of `freq`, used by the CSIT error model.
    pub entry_variance: f64,
}

impl ChannelRealization {
    /// Builds a realization from explicit taps.
    pub fn from_taps(taps: Vec<Vec<Vec<C64>>>, num_subcarriers: usize, entry_variance: f64) -> Result<Self> {
        let freq = frequency_response(&taps, num_subcarriers)?;
        let subcarrier_gain = gains_of(&freq);
        Ok(Self {
            taps,
            freq,
            subcarrier_gain,
            entry_variance,
        })
    }

    pub fn num_users(&self) -> usize {
        self.freq.len()
    }

    pub fn num_subcarriers(&self) -> usize {
        self.freq.first().map_or(0, Vec::len)
    }

    pub fn num_antennas(&self) -> usize {
        self.taps.first().map_or(0, Vec::len)
    }

    pub fn num_taps(&self) -> usize {
        self.taps
            .first()
            .and_then(|a| a.first())
            .map_or(0, Vec::len)
    }

    /// Rows of the `K × N_t` channel matrix on subcarrier `n`.
    pub fn rows(&self, n: usize) -> Vec<&[C64]> {
        self.freq.iter().map(|user| user[n].as_slice()).collect()
    }
}

fn gains_of(freq: &[Vec<Vec<C64>>]) -> Vec<Vec<f64>> {
    freq.iter()
        .map(|user| user.iter().map(|h| vector_norm(h)).collect())
        .collect()
}

pub(crate) fn vector_norm(v: &[C64]) -> f64 {
    v.iter().map(C64::norm_sqr).sum::<f64>().sqrt()
}

/// Draws a fresh realization for `num_users` users and `num_antennas` transmit antennas.
pub fn generate_channel<R: Rng + ?Sized>(
    rng: &mut R,
    num_users: usize,
    num_antennas: usize,
    profile: &TapProfile,
    num_subcarriers: usize,
) -> Result<ChannelRealization> {
    if num_users == 0 {
        return Err(SimError::Config("at least one user is required".into()));
    }
    if num_antennas < num_users {
        return Err(SimError::Config(format!(
            "need N_t >= K, got N_t={num_antennas}, K={num_users}"
        )));
    }
    if num_subcarriers < profile.num_taps() {
        return Err(SimError::Config(format!(
            "N={num_subcarriers} subcarriers is shorter than the {}-tap channel",
            profile.num_taps()
        )));
    }
    let taps = (0..num_users)
        .map(|_| {
            (0..num_antennas)
                .map(|_| {
                    profile
                        .tap_powers()
                        .iter()
                        .map(|&p| complex_gaussian(rng, p))
                        .collect()
                })
                .collect()
        })
        .collect();
    ChannelRealization::from_taps(taps, num_subcarriers, profile.energy())
}

/// `N`-point DFT of every (user, antenna) tap vector, laid out as `[k][n][a]`.
pub fn frequency_response(taps: &[Vec<Vec<C64>>], num_subcarriers: usize) -> Result<Vec<Vec<Vec<C64>>>> {
    let mut planner = FftPlanner::<f64>::new();
    let fft = planner.plan_fft_forward(num_subcarriers);
    let mut buf = vec![C64::default(); num_subcarriers];
    let mut out = Vec::with_capacity(taps.len());
    for user in taps {
        let mut per_sc = vec![Vec::with_capacity(user.len()); num_subcarriers];
        for antenna in user {
            if antenna.len() > num_subcarriers {
                return Err(SimError::Config(format!(
                    "{}-tap channel does not fit in N={num_subcarriers}",
                    antenna.len()
                )));
            }
            buf.fill(C64::default());
            buf[..antenna.len()].copy_from_slice(antenna);
            fft.process(&mut buf);
            for (row, &h) in per_sc.iter_mut().zip(&buf) {
                row.push(h);
            }
        }
        out.push(per_sc);
    }
    Ok(out)
}

/// The transmitter's (possibly degraded) view of the frequency responses.
#[derive(Debug, Clone)]
pub struct CsitView {
    /// Same layout as [`ChannelRealization::freq`].
    pub freq_hat: Vec<Vec<Vec<C64>>>,
    pub error_coeff: f64,
}

impl CsitView {
    /// Perfect CSIT.
    pub fn perfect(ch: &ChannelRealization) -> Self {
        Self {
            freq_hat: ch.freq.clone(),
            error_coeff: 0.0,
        }
    }

    pub fn rows(&self, n: usize) -> Vec<&[C64]> {
        self.freq_hat.iter().map(|user| user[n].as_slice()).collect()
    }

    /// `‖ĥ_{k,n}‖` for every user and subcarrier.
    pub fn gains(&self) -> Vec<Vec<f64>> {
        gains_of(&self.freq_hat)
    }
}

/// Gauss-Markov CSIT error: `ĥ = sqrt(1-τ²)·h + τ·e`, `e` i.i.d. with the entry variance of `h`.
pub fn degrade_csit<R: Rng + ?Sized>(ch: &ChannelRealization, tau: f64, rng: &mut R) -> Result<CsitView> {
    if !(0.0..=1.0).contains(&tau) {
        return Err(SimError::Argument(format!(
            "CSIT error coefficient must lie in [0, 1], got {tau}"
        )));
    }
    if tau == 0.0 {
        return Ok(CsitView::perfect(ch));
    }
    let keep = (1.0 - tau * tau).sqrt();
    let freq_hat = ch
        .freq
        .iter()
        .map(|user| {
            user.iter()
                .map(|h| {
                    h.iter()
                        .map(|&x| x * keep + complex_gaussian(rng, ch.entry_variance) * tau)
                        .collect()
                })
                .collect()
        })
        .collect();
    Ok(CsitView {
        freq_hat,
        error_coeff: tau,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn naive_dft(taps: &[C64], n_sc: usize, bin: usize) -> C64 {
        taps.iter()
            .enumerate()
            .map(|(l, &t)| t * C64::from_polar(1.0, -2.0 * PI * (bin * l) as f64 / n_sc as f64))
            .sum()
    }

    #[test]
    fn profile_is_normalized() {
        let p = TapProfile::exponential(8, 0.5).unwrap();
        let total: f64 = (0..8).map(|l| (-0.5 * l as f64).exp()).sum();
        for (l, &w) in p.tap_powers().iter().enumerate() {
            assert!((w - (-0.5 * l as f64).exp() / total).abs() < 1e-15);
        }
        assert!((p.energy() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn profile_rejects_bad_input() {
        assert!(TapProfile::exponential(0, 0.5).is_err());
        assert!(TapProfile::exponential(4, -1.0).is_err());
    }

    #[test]
    fn single_tap_is_flat() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let p = TapProfile::exponential(1, 2.0).unwrap();
        let ch = generate_channel(&mut rng, 2, 3, &p, 16).unwrap();
        for k in 0..2 {
            for n in 1..16 {
                assert_eq!(ch.freq[k][n], ch.freq[k][0]);
            }
        }
    }

    #[test]
    fn delta_and_shifted_delta() {
        let delta = vec![vec![vec![C64::new(1.0, 0.0), C64::default(), C64::default()]]];
        let r = frequency_response(&delta, 8).unwrap();
        assert!(r[0].iter().all(|h| h[0] == C64::new(1.0, 0.0)));

        let shifted = vec![vec![vec![C64::default(), C64::new(1.0, 0.0)]]];
        let r = frequency_response(&shifted, 4).unwrap();
        for n in 0..4 {
            let want = C64::from_polar(1.0, -PI * n as f64 / 2.0);
            assert!((r[0][n][0] - want).norm() < 1e-12);
        }
    }

    #[test]
    fn response_matches_naive_dft_exhaustively() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n_sc in 1..=64 {
            for l in (1..=n_sc).step_by(7.max(n_sc / 6)) {
                let taps: Vec<C64> = (0..l).map(|_| complex_gaussian(&mut rng, 1.0)).collect();
                let r = frequency_response(&[vec![taps.clone()]], n_sc).unwrap();
                for bin in 0..n_sc {
                    assert!((r[0][bin][0] - naive_dft(&taps, n_sc, bin)).norm() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn random_taps_l4_n16() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let p = TapProfile::exponential(4, 0.3).unwrap();
        let ch = generate_channel(&mut rng, 2, 2, &p, 16).unwrap();
        for k in 0..2 {
            for a in 0..2 {
                for n in 0..16 {
                    let want = naive_dft(&ch.taps[k][a], 16, n);
                    assert!((ch.freq[k][n][a] - want).norm() < 1e-10);
                }
            }
            for n in 0..16 {
                let norm = vector_norm(&ch.freq[k][n]);
                assert!((ch.subcarrier_gain[k][n] - norm).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn config_errors() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let p = TapProfile::exponential(8, 0.5).unwrap();
        assert!(matches!(
            generate_channel(&mut rng, 2, 2, &p, 4),
            Err(SimError::Config(_))
        ));
        assert!(matches!(
            generate_channel(&mut rng, 3, 2, &p, 64),
            Err(SimError::Config(_))
        ));
    }

    #[test]
    fn unit_energy_in_expectation() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let p = TapProfile::exponential(8, 0.5).unwrap();
        let draws = 100_000;
        let mut acc = 0.0;
        for _ in 0..draws {
            acc += p
                .tap_powers()
                .iter()
                .map(|&w| complex_gaussian(&mut rng, w).norm_sqr())
                .sum::<f64>();
        }
        let mean = acc / draws as f64;
        assert!((mean - 1.0).abs() < 0.02, "mean energy {mean}");
    }

    fn correlation(tau: f64, seed: u64) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = TapProfile::exponential(8, 0.5).unwrap();
        let mut cross = C64::default();
        let (mut e1, mut e2) = (0.0, 0.0);
        let mut entries = 0;
        while entries < 100_000 {
            let ch = generate_channel(&mut rng, 2, 2, &p, 64).unwrap();
            let view = degrade_csit(&ch, tau, &mut rng).unwrap();
            for k in 0..2 {
                for n in 0..64 {
                    for a in 0..2 {
                        let (h, g) = (ch.freq[k][n][a], view.freq_hat[k][n][a]);
                        cross += h.conj() * g;
                        e1 += h.norm_sqr();
                        e2 += g.norm_sqr();
                        entries += 1;
                    }
                }
            }
        }
        cross.re / (e1 * e2).sqrt()
    }

    #[test]
    fn csit_identity_at_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let p = TapProfile::exponential(8, 0.5).unwrap();
        let ch = generate_channel(&mut rng, 2, 2, &p, 64).unwrap();
        let view = degrade_csit(&ch, 0.0, &mut rng).unwrap();
        assert_eq!(view.freq_hat, ch.freq);
    }

    #[test]
    fn csit_correlation_follows_tau() {
        for (i, &tau) in [0.0, 0.1, 0.5, 1.0].iter().enumerate() {
            let rho = correlation(tau, 40 + i as u64);
            let want = (1.0f64 - tau * tau).sqrt();
            assert!((rho - want).abs() < 0.01, "tau={tau}: rho={rho}");
        }
    }

    #[test]
    fn csit_rejects_out_of_range() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let p = TapProfile::exponential(2, 0.5).unwrap();
        let ch = generate_channel(&mut rng, 1, 1, &p, 4).unwrap();
        assert!(matches!(degrade_csit(&ch, 1.5, &mut rng), Err(SimError::Argument(_))));
        assert!(degrade_csit(&ch, -0.1, &mut rng).is_err());
    }
}
