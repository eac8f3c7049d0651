//! Achievable rates, bit-error counting and the retransmission delay model.

use crate::channel::ChannelRealization;
use crate::precoding::PrecoderSet;
use crate::{Result, SimError};

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

/// Private-stream SINR `[k][n]` after perfect SIC of the common stream.
pub fn private_sinr(ch: &ChannelRealization, pre: &PrecoderSet, noise_var: f64) -> Vec<Vec<f64>> {
    (0..ch.num_users())
        .map(|k| {
            (0..ch.num_subcarriers())
                .map(|n| {
                    let row = &ch.freq[k][n];
                    pre.private_gain(row, n, k).norm_sqr() / (pre.private_interference(row, n, k) + noise_var)
                })
                .collect()
        })
        .collect()
}

/// Common-stream SINR `[k][n]` at each user, all private streams treated as noise.
pub fn common_sinr(ch: &ChannelRealization, pre: &PrecoderSet, noise_var: f64) -> Vec<Vec<f64>> {
    (0..ch.num_users())
        .map(|k| {
            (0..ch.num_subcarriers())
                .map(|n| {
                    let row = &ch.freq[k][n];
                    pre.common_gain(row, n).norm_sqr() / (pre.common_interference(row, n, k) + noise_var)
                })
                .collect()
        })
        .collect()
}

fn log_rate(sinr: f64) -> f64 {
    (1.0 + sinr).log2()
}

/// Private rates `R_{k,n}` averaged over the given channel realizations.
pub fn private_rate(realizations: &[(&ChannelRealization, &PrecoderSet)], noise_var: f64) -> Result<Vec<Vec<f64>>> {
    let Some((first, _)) = realizations.first() else {
        return Err(SimError::Argument("private rate needs at least one realization".into()));
    };
    let mut acc = vec![vec![0.0; first.num_subcarriers()]; first.num_users()];
    for (ch, pre) in realizations {
        for (row, sinr) in acc.iter_mut().zip(private_sinr(ch, pre, noise_var)) {
            for (a, s) in row.iter_mut().zip(sinr) {
                *a += log_rate(s);
            }
        }
    }
    let z = realizations.len() as f64;
    acc.iter_mut().flatten().for_each(|a| *a /= z);
    Ok(acc)
}

/// Common rate `R_{c,n}`: the weakest user's common-stream rate on each subcarrier.
pub fn common_rate(ch: &ChannelRealization, pre: &PrecoderSet, noise_var: f64) -> Vec<f64> {
    let per_user = common_sinr(ch, pre, noise_var);
    (0..ch.num_subcarriers())
        .map(|n| {
            per_user
                .iter()
                .map(|u| log_rate(u[n]))
                .fold(f64::INFINITY, f64::min)
        })
        .collect()
}

/// Sum rate per subcarrier and its aggregates.
#[derive(Debug, Clone, PartialEq)]
pub struct SumRate {
    pub per_subcarrier: Vec<f64>,
    /// Mean over subcarriers.
    pub mean: f64,
    /// Sum over subcarriers.
    pub total: f64,
}

/// `W_n = R_{c,n} + Σ_k R_{k,n}`.
pub fn sum_rate(common: &[f64], private: &[Vec<f64>]) -> Result<SumRate> {
    if private.iter().any(|r| r.len() != common.len()) {
        return Err(SimError::Argument("rate tables disagree on the subcarrier count".into()));
    }
    let per_subcarrier: Vec<f64> = common
        .iter()
        .enumerate()
        .map(|(n, &rc)| rc + private.iter().map(|r| r[n]).sum::<f64>())
        .collect();
    let total: f64 = per_subcarrier.iter().sum();
    let mean = if per_subcarrier.is_empty() { 0.0 } else { total / per_subcarrier.len() as f64 };
    Ok(SumRate {
        per_subcarrier,
        mean,
        total,
    })
}

/// `(Hamming distance, length)`.
pub fn count_bit_errors(tx: &[u8], rx: &[u8]) -> Result<(usize, usize)> {
    if tx.len() != rx.len() {
        return Err(SimError::Argument(format!(
            "bit vectors differ in length: {} vs {}",
            tx.len(),
            rx.len()
        )));
    }
    Ok((tx.iter().zip(rx).filter(|(a, b)| a != b).count(), tx.len()))
}

/// Slots consumed until `success(slot)` holds, slots counted from 1, truncated at `max_slots`.
pub fn simulate_packet_delay(mut success: impl FnMut(usize) -> bool, max_slots: usize) -> Result<usize> {
    if max_slots == 0 {
        return Err(SimError::Argument("max_slots must be at least 1".into()));
    }
    Ok((1..=max_slots).find(|&slot| success(slot)).unwrap_or(max_slots))
}

/// Pooled bit-error count.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct BerEstimate {
    pub errors: u64,
    pub bits: u64,
}

impl BerEstimate {
    pub fn add(&mut self, errors: usize, bits: usize) {
        self.errors += errors as u64;
        self.bits += bits as u64;
    }

    pub fn ber(&self) -> f64 {
        if self.bits == 0 {
            0.0
        } else {
            self.errors as f64 / self.bits as f64
        }
    }

    /// Binomial (Wald) 95% half-width.
    pub fn ci95(&self) -> f64 {
        if self.bits == 0 {
            return 0.0;
        }
        let p = self.ber();
        Z95 * (p * (1.0 - p) / self.bits as f64).sqrt()
    }
}

/// Running mean and 95% half-width of a scalar sample.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct MeanAccumulator {
    count: u64,
    sum: f64,
    sum_sq: f64,
}

impl MeanAccumulator {
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        self.sum += x;
        self.sum_sq += x * x;
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn mean(&self) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            self.sum / self.count as f64
        }
    }

    pub fn ci95(&self) -> f64 {
        if self.count < 2 {
            return 0.0;
        }
        let n = self.count as f64;
        let var = ((self.sum_sq - self.sum * self.sum / n) / (n - 1.0)).max(0.0);
        Z95 * (var / n).sqrt()
    }
}

/// Everything one channel realization contributes to the report.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    /// Errors on private-stream bits before combining.
    pub bit_errors_private: Vec<usize>,
    pub bits_sent_private: Vec<usize>,
    /// Errors on the scheme's information bits after its final decision (post-MRC for the proposed scheme).
    pub bit_errors_combined: Vec<usize>,
    pub bits_sent_info: Vec<usize>,
    /// Blocks with at least one information-bit error, per user.
    pub block_errors: Vec<usize>,
    pub blocks: usize,
    pub rate_private: Vec<Vec<f64>>,
    pub rate_common: Vec<f64>,
    pub delay_slots: Vec<usize>,
}

impl TrialRecord {
    pub fn sum_rate(&self) -> Result<SumRate> {
        sum_rate(&self.rate_common, &self.rate_private)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{generate_channel, CsitView, TapProfile};
    use crate::precoding::{allocate_power, CommonStrategy, PowerSplit, PrecoderKind, SubcarrierPrecoder};
    use crate::C64;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn flat(rows: Vec<Vec<C64>>) -> ChannelRealization {
        let taps = rows.into_iter().map(|r| r.into_iter().map(|h| vec![h]).collect()).collect();
        ChannelRealization::from_taps(taps, 1, 1.0).unwrap()
    }

    #[test]
    fn interference_free_rate() {
        let ch = flat(vec![vec![c(3f64.sqrt(), 0.0)]]);
        let pre = PrecoderSet {
            kind: PrecoderKind::Rci,
            power: PowerSplit { common: 0.0, per_user: 1.0 },
            subcarriers: vec![SubcarrierPrecoder::linear(vec![c(1.0, 0.0)], vec![vec![c(1.0, 0.0)]])],
        };
        let r = private_rate(&[(&ch, &pre)], 1.0).unwrap();
        assert!((r[0][0] - 2.0).abs() < 1e-12);
        let r = private_rate(&[(&ch, &pre)], 1e300).unwrap();
        assert!(r[0][0] < 1e-250);
        assert!(private_rate(&[], 1.0).is_err());
    }

    fn random_setup(seed: u64, noise: f64) -> (ChannelRealization, PrecoderSet) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = TapProfile::exponential(4, 0.5).unwrap();
        let ch = generate_channel(&mut rng, 2, 2, &p, 8).unwrap();
        let pre = PrecoderSet::build(
            &CsitView::perfect(&ch),
            PrecoderKind::Rci,
            CommonStrategy::DominantEigenvector,
            allocate_power(1.0, 0.5, 2).unwrap(),
            noise,
        )
        .unwrap();
        (ch, pre)
    }

    #[test]
    fn private_rate_matches_scalar_formula() {
        let (ch, pre) = random_setup(3, 0.1);
        let r = private_rate(&[(&ch, &pre)], 0.1).unwrap();
        for k in 0..2 {
            for n in 0..8 {
                let row = &ch.freq[k][n];
                let sc = &pre.subcarriers[n];
                let g = |j: usize| -> f64 {
                    let v: C64 = row.iter().zip(&sc.private[j]).map(|(a, b)| a * b).sum();
                    0.25 * v.norm_sqr()
                };
                let want = (1.0 + g(k) / (g(1 - k) + 0.1)).log2();
                assert!((r[k][n] - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn common_rate_is_min_over_users() {
        let (ch, pre) = random_setup(4, 0.1);
        let rc = common_rate(&ch, &pre, 0.1);
        let per_user = common_sinr(&ch, &pre, 0.1);
        for n in 0..8 {
            let each: Vec<f64> = per_user.iter().map(|u| (1.0 + u[n]).log2()).collect();
            assert!(each.iter().all(|&r| rc[n] <= r));
            assert!(each.contains(&rc[n]));
        }
    }

    #[test]
    fn common_rate_hand_values() {
        // SINRs 3 and 1.5: rows scaled so that P_c|r·p_c|² gives the numerators with no private power
        let ch = flat(vec![vec![c(3f64.sqrt(), 0.0)], vec![c(1.5f64.sqrt(), 0.0)]]);
        let pre = PrecoderSet {
            kind: PrecoderKind::Rci,
            power: PowerSplit { common: 1.0, per_user: 0.0 },
            subcarriers: vec![SubcarrierPrecoder::linear(vec![c(1.0, 0.0)], vec![vec![c(1.0, 0.0)], vec![c(1.0, 0.0)]])],
        };
        let rc = common_rate(&ch, &pre, 1.0);
        assert!((rc[0] - 2.5f64.log2()).abs() < 1e-12);
        assert!((rc[0] - 1.3219).abs() < 1e-4);
    }

    #[test]
    fn common_rate_single_user_and_identical_users() {
        let row = vec![c(0.7, 0.2), c(-0.1, 0.4)];
        let one = flat(vec![row.clone()]);
        let two = flat(vec![row.clone(), row]);
        for ch in [&one, &two] {
            let pre = PrecoderSet::build(
                &CsitView::perfect(ch),
                PrecoderKind::ZfDpc,
                CommonStrategy::DominantEigenvector,
                allocate_power(1.0, 0.5, 1).unwrap(),
                0.1,
            );
            if ch.num_users() == 2 {
                // identical rows are rank deficient for ZF-DPC
                assert!(pre.is_err());
                continue;
            }
            let pre = pre.unwrap();
            let rc = common_rate(ch, &pre, 0.1);
            let s = common_sinr(ch, &pre, 0.1);
            assert!((rc[0] - (1.0 + s[0][0]).log2()).abs() < 1e-15);
        }
    }

    #[test]
    fn rates_grow_as_noise_falls() {
        let (ch, pre) = random_setup(5, 0.1);
        let mut last_p = vec![vec![0.0; 8]; 2];
        let mut last_c = vec![0.0; 8];
        for exp in (-3..=2).rev() {
            let noise = 10f64.powi(exp);
            let rp = private_rate(&[(&ch, &pre)], noise).unwrap();
            let rc = common_rate(&ch, &pre, noise);
            for k in 0..2 {
                for n in 0..8 {
                    assert!(rp[k][n] >= last_p[k][n] && rp[k][n] >= 0.0);
                }
            }
            for n in 0..8 {
                assert!(rc[n] >= last_c[n]);
            }
            last_p = rp;
            last_c = rc;
        }
    }

    #[test]
    fn ensemble_average() {
        let (a, pa) = random_setup(6, 0.1);
        let (b, pb) = random_setup(7, 0.1);
        let ra = private_rate(&[(&a, &pa)], 0.1).unwrap();
        let rb = private_rate(&[(&b, &pb)], 0.1).unwrap();
        let both = private_rate(&[(&a, &pa), (&b, &pb)], 0.1).unwrap();
        for k in 0..2 {
            for n in 0..8 {
                assert!((both[k][n] - 0.5 * (ra[k][n] + rb[k][n])).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn sum_rate_values() {
        let s = sum_rate(&[1.0], &[vec![2.0], vec![3.0]]).unwrap();
        assert_eq!(s.per_subcarrier, vec![6.0]);
        assert_eq!(s.total, 6.0);
        let s = sum_rate(&[0.0, 0.0], &[vec![0.0, 0.0]]).unwrap();
        assert_eq!((s.mean, s.total), (0.0, 0.0));
        assert!(sum_rate(&[0.0], &[vec![0.0, 1.0]]).is_err());

        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let rc: Vec<f64> = (0..16).map(|_| rng.random()).collect();
        let rp: Vec<Vec<f64>> = (0..3).map(|_| (0..16).map(|_| rng.random()).collect()).collect();
        let s = sum_rate(&rc, &rp).unwrap();
        let mut total = 0.0;
        for n in 0..16 {
            let w = rc[n] + rp[0][n] + rp[1][n] + rp[2][n];
            assert!((s.per_subcarrier[n] - w).abs() < 1e-12);
            total += w;
        }
        assert!((s.total - total).abs() < 1e-12);
        assert!((s.mean - total / 16.0).abs() < 1e-12);
    }

    #[test]
    fn bit_errors() {
        let a = vec![0u8, 1, 1, 0, 1];
        assert_eq!(count_bit_errors(&a, &a).unwrap(), (0, 5));
        let flipped: Vec<u8> = a.iter().map(|b| 1 - b).collect();
        assert_eq!(count_bit_errors(&a, &flipped).unwrap(), (5, 5));
        let tx = vec![0u8; 100];
        let mut rx = tx.clone();
        for i in [3, 50, 99] {
            rx[i] = 1;
        }
        assert_eq!(count_bit_errors(&tx, &rx).unwrap(), (3, 100));
        assert!(count_bit_errors(&tx, &rx[..10]).is_err());
    }

    #[test]
    fn delay_bounds() {
        assert_eq!(simulate_packet_delay(|_| true, 16).unwrap(), 1);
        assert_eq!(simulate_packet_delay(|_| false, 8).unwrap(), 8);
        assert_eq!(simulate_packet_delay(|s| s == 3, 8).unwrap(), 3);
        assert!(simulate_packet_delay(|_| true, 0).is_err());
    }

    #[test]
    fn geometric_delay_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let trials = 100_000;
        let total: usize = (0..trials)
            .map(|_| simulate_packet_delay(|_| rng.random::<f64>() < 0.5, usize::MAX).unwrap())
            .sum();
        let mean = total as f64 / trials as f64;
        assert!((mean / 2.0 - 1.0).abs() < 0.02, "mean {mean}");
    }

    #[test]
    fn ber_estimate() {
        let mut e = BerEstimate::default();
        assert_eq!((e.ber(), e.ci95()), (0.0, 0.0));
        e.add(10, 1000);
        e.add(0, 1000);
        assert!((e.ber() - 0.005).abs() < 1e-15);
        assert!((e.ci95() - Z95 * (0.005f64 * 0.995 / 2000.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn mean_accumulator() {
        let mut m = MeanAccumulator::default();
        for x in [1.0, 2.0, 3.0, 4.0] {
            m.push(x);
        }
        assert_eq!(m.mean(), 2.5);
        let sd = (5.0f64 / 3.0).sqrt();
        assert!((m.ci95() - Z95 * sd / 2.0).abs() < 1e-12);
    }
}
