use std::fmt::Write as _;
use std::time::Instant;

use rayon::prelude::*;

use super::config::SimConfig;
use super::seed::derive_trial_seed;
use crate::baselines::SchemeId;
use crate::link::{Link, TrialRngs};
use crate::metrics::{BerEstimate, MeanAccumulator, TrialRecord};
use crate::{Result, SimError};

/// One SNR point of one configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub label: String,
    pub scheme: SchemeId,
    pub snr_db: f64,
    /// Information-bit error rate after the scheme's final decision.
    pub ber: f64,
    pub ber_ci95: f64,
    /// Private-stream error rate before any combining.
    pub private_ber: f64,
    /// Fraction of (user, block) pairs with an information-bit error.
    pub bler: f64,
    /// Mean over trials of the band-total sum rate in bit/s/Hz.
    pub sum_rate: f64,
    pub sum_rate_ci95: f64,
    /// Mean over trials of the per-subcarrier sum rate.
    pub sum_rate_per_subcarrier: f64,
    pub delay_slots: f64,
    pub delay_ci95: f64,
    pub trials: usize,
    pub seed: u64,
    pub wall_time_s: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct MetricsReport {
    pub rows: Vec<ReportRow>,
}

impl MetricsReport {
    pub fn find(&self, label: &str, snr_db: f64) -> Option<&ReportRow> {
        self.rows
            .iter()
            .find(|r| r.label == label && (r.snr_db - snr_db).abs() < 1e-9)
    }
}

/// Simulates one channel realization: `⌈S/N⌉` blocks, rates and packet delays.
pub fn run_trial(cfg: &SimConfig, link: &Link, snr_index: usize, trial: usize) -> Result<TrialRecord> {
    let seed = derive_trial_seed(cfg.master_seed, cfg.scheme, snr_index, trial);
    let mut rngs = TrialRngs::from_seed(seed);
    let setup = link.draw_slot(cfg.scheme, &mut rngs)?;
    let k_users = cfg.num_users;
    let mut record = TrialRecord {
        bit_errors_private: vec![0; k_users],
        bits_sent_private: vec![0; k_users],
        bit_errors_combined: vec![0; k_users],
        bits_sent_info: vec![0; k_users],
        block_errors: vec![0; k_users],
        blocks: cfg.blocks_per_trial(),
        rate_private: Vec::new(),
        rate_common: Vec::new(),
        delay_slots: Vec::new(),
    };
    for _ in 0..record.blocks {
        let outcome = setup.transmit_block(&mut rngs)?;
        for (k, u) in outcome.users.iter().enumerate() {
            record.bit_errors_private[k] += u.private_errors;
            record.bits_sent_private[k] += u.private_bits;
            record.bit_errors_combined[k] += u.info_errors;
            record.bits_sent_info[k] += u.info_bits;
            record.block_errors[k] += usize::from(!u.success());
        }
    }
    let (rp, rc) = setup.rates();
    record.rate_private = rp;
    record.rate_common = rc;
    record.delay_slots = link.packet_delays(cfg.scheme, Some(setup), &mut rngs, cfg.max_slots)?;
    Ok(record)
}

fn summarize(cfg: &SimConfig, snr_db: f64, records: &[TrialRecord], wall_time_s: f64) -> Result<ReportRow> {
    let mut info = BerEstimate::default();
    let mut private = BerEstimate::default();
    let mut blocks = BerEstimate::default();
    let mut rate = MeanAccumulator::default();
    let mut rate_sc = MeanAccumulator::default();
    let mut delay = MeanAccumulator::default();
    for r in records {
        info.add(r.bit_errors_combined.iter().sum(), r.bits_sent_info.iter().sum());
        private.add(r.bit_errors_private.iter().sum(), r.bits_sent_private.iter().sum());
        blocks.add(r.block_errors.iter().sum(), r.blocks * r.block_errors.len());
        let s = r.sum_rate()?;
        rate.push(s.total);
        rate_sc.push(s.mean);
        r.delay_slots.iter().for_each(|&d| delay.push(d as f64));
    }
    Ok(ReportRow {
        label: cfg.label(),
        scheme: cfg.scheme,
        snr_db,
        ber: info.ber(),
        ber_ci95: info.ci95(),
        private_ber: private.ber(),
        bler: blocks.ber(),
        sum_rate: rate.mean(),
        sum_rate_ci95: rate.ci95(),
        sum_rate_per_subcarrier: rate_sc.mean(),
        delay_slots: delay.mean(),
        delay_ci95: delay.ci95(),
        trials: records.len(),
        seed: cfg.master_seed,
        wall_time_s,
    })
}

fn debug_lines(cfg: &SimConfig, snr_index: usize, snr_db: f64, records: &[TrialRecord], out: &mut String) -> Result<()> {
    for (t, r) in records.iter().enumerate() {
        let seed = derive_trial_seed(cfg.master_seed, cfg.scheme, snr_index, t);
        let errors: usize = r.bit_errors_combined.iter().sum();
        let bits: usize = r.bits_sent_info.iter().sum();
        let _ = writeln!(
            out,
            "label={} snr_db={} trial={} seed={} errors={} bits={} sum_rate={} delays={:?}",
            cfg.label(),
            snr_db,
            t,
            seed,
            errors,
            bits,
            r.sum_rate()?.total,
            r.delay_slots
        );
    }
    Ok(())
}

/// Runs every SNR point of `cfg` on `cfg.workers` threads.
///
/// Trials are seeded independently and reduced in trial order, so the report
/// does not depend on the worker count.
pub fn run_sweep(cfg: &SimConfig) -> Result<MetricsReport> {
    cfg.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| SimError::Config(format!("cannot start worker pool: {e}")))?;
    let mut report = MetricsReport::default();
    let mut debug = String::new();
    for (si, &snr_db) in cfg.snr_grid_db.iter().enumerate() {
        let start = Instant::now();
        let link = Link::new(cfg.link_params(snr_db))?;
        let records: Vec<TrialRecord> = pool.install(|| {
            (0..cfg.trials)
                .into_par_iter()
                .map(|t| run_trial(cfg, &link, si, t))
                .collect::<Result<Vec<_>>>()
        })?;
        report
            .rows
            .push(summarize(cfg, snr_db, &records, start.elapsed().as_secs_f64())?);
        if cfg.debug_trials.is_some() {
            debug_lines(cfg, si, snr_db, &records, &mut debug)?;
        }
    }
    if let Some(path) = &cfg.debug_trials {
        std::fs::write(path, debug).map_err(|source| SimError::Io { path: path.clone(), source })?;
    }
    Ok(report)
}
