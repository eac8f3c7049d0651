use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::baselines::SchemeId;
use crate::link::LinkParams;
use crate::precoding::{CommonStrategy, PrecoderKind};
use crate::{Result, SimError};

/// Every tunable of a simulation run.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub num_users: usize,
    pub num_antennas: usize,
    pub num_subcarriers: usize,
    pub num_taps: usize,
    pub tap_decay: f64,
    pub cp_len: usize,
    /// Sweep points. Relative mode: `P/σ²` in dB. Absolute mode: per-subcarrier transmit power in dBm.
    pub snr_grid_db: Vec<f64>,
    pub total_power: f64,
    /// Absolute-units mode: noise density in dBm/Hz (e.g. −80).
    pub noise_density_dbm_hz: Option<f64>,
    /// Absolute-units mode: subcarrier spacing in Hz.
    pub subcarrier_spacing_hz: f64,
    pub scheme: SchemeId,
    pub precoder: PrecoderKind,
    pub common_strategy: CommonStrategy,
    /// Chunk size of the distributed arrangement.
    pub chunk: usize,
    pub common_fraction: f64,
    pub csit_error: f64,
    pub m_override: Option<usize>,
    pub noma_weak_share: f64,
    /// Channel realizations per SNR point (`Z`).
    pub trials: usize,
    /// Modulated bits per user per trial (`S`), sent as `⌈S/N⌉` OFDM blocks.
    pub block_length: usize,
    /// Retransmission cap `T`.
    pub max_slots: usize,
    pub master_seed: u64,
    pub workers: usize,
    pub output_path: Option<PathBuf>,
    pub debug_trials: Option<PathBuf>,
    /// Row label in reports; defaults to the scheme name.
    pub label: Option<String>,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            num_users: 2,
            num_antennas: 2,
            num_subcarriers: 64,
            num_taps: 8,
            tap_decay: 0.5,
            cp_len: 16,
            snr_grid_db: vec![0.0, 5.0, 10.0, 15.0, 20.0],
            total_power: 1.0,
            noise_density_dbm_hz: None,
            subcarrier_spacing_hz: 15_000.0,
            scheme: SchemeId::ProposedDistributed,
            precoder: PrecoderKind::Rci,
            common_strategy: CommonStrategy::DominantEigenvector,
            chunk: 2,
            common_fraction: 0.5,
            csit_error: 0.1,
            m_override: None,
            noma_weak_share: 0.8,
            trials: 1000,
            block_length: 20_000,
            max_slots: 16,
            master_seed: 1,
            workers: 1,
            output_path: None,
            debug_trials: None,
            label: None,
        }
    }
}

/// Parses `a:b:step` (inclusive) or a comma-separated list.
pub fn parse_snr_grid(text: &str) -> Result<Vec<f64>> {
    let bad = || SimError::Config(format!("cannot parse SNR grid '{text}'"));
    let num = |s: &str| s.trim().parse::<f64>().map_err(|_| bad());
    let grid = if text.contains(':') {
        let parts: Vec<&str> = text.split(':').collect();
        let [a, b, step] = parts.as_slice() else {
            return Err(bad());
        };
        let (a, b, step) = (num(a)?, num(b)?, num(step)?);
        if !(step > 0.0) || b < a {
            return Err(bad());
        }
        let count = ((b - a) / step + 1e-9).floor() as usize + 1;
        (0..count).map(|i| a + step * i as f64).collect()
    } else {
        text.split(',').filter(|s| !s.trim().is_empty()).map(num).collect::<Result<Vec<_>>>()?
    };
    if grid.is_empty() || grid.iter().any(|x| !x.is_finite()) {
        return Err(bad());
    }
    Ok(grid)
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| SimError::Config(format!("invalid value '{value}' for '{key}'")))
}

fn parse_precoder(value: &str) -> Result<PrecoderKind> {
    match value.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
        "rci" => Ok(PrecoderKind::Rci),
        "zfdpc" | "dpc" => Ok(PrecoderKind::ZfDpc),
        _ => Err(SimError::Config(format!("unknown precoder '{value}'"))),
    }
}

fn parse_strategy(value: &str) -> Result<CommonStrategy> {
    match value.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
        "dominanteigenvector" | "eigen" => Ok(CommonStrategy::DominantEigenvector),
        "mrttoweakest" | "weakest" => Ok(CommonStrategy::MrtToWeakest),
        _ => Err(SimError::Config(format!("unknown common precoder strategy '{value}'"))),
    }
}

impl SimConfig {
    /// Applies one `key = value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        match key.trim() {
            "num_users" | "K" => self.num_users = parse(key, value)?,
            "num_antennas" | "N_t" => self.num_antennas = parse(key, value)?,
            "num_subcarriers" | "N" => self.num_subcarriers = parse(key, value)?,
            "num_taps" | "L" => self.num_taps = parse(key, value)?,
            "tap_decay" => self.tap_decay = parse(key, value)?,
            "cp_len" => self.cp_len = parse(key, value)?,
            "snr_grid_db" => self.snr_grid_db = parse_snr_grid(value)?,
            "total_power" => self.total_power = parse(key, value)?,
            "noise_density_dbm_hz" => self.noise_density_dbm_hz = Some(parse(key, value)?),
            "subcarrier_spacing_hz" => self.subcarrier_spacing_hz = parse(key, value)?,
            "scheme" => self.scheme = value.parse()?,
            "precoder" => self.precoder = parse_precoder(value)?,
            "common_strategy" => self.common_strategy = parse_strategy(value)?,
            "chunk" => self.chunk = parse(key, value)?,
            "common_fraction" => self.common_fraction = parse(key, value)?,
            "csit_error" => self.csit_error = parse(key, value)?,
            "m_override" => self.m_override = Some(parse(key, value)?),
            "noma_weak_share" => self.noma_weak_share = parse(key, value)?,
            "trials" | "Z" => self.trials = parse(key, value)?,
            "block_length" | "S" => self.block_length = parse(key, value)?,
            "max_slots" | "T" => self.max_slots = parse(key, value)?,
            "master_seed" | "seed" => self.master_seed = parse(key, value)?,
            "workers" => self.workers = parse(key, value)?,
            "output_path" => self.output_path = Some(PathBuf::from(value)),
            "label" => self.label = Some(value.to_string()),
            other => return Err(SimError::Config(format!("unknown configuration key '{other}'"))),
        }
        Ok(())
    }

    /// Parses flat `key = value` text; `#` starts a comment.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                SimError::Config(format!("line {}: expected 'key = value', got '{line}'", lineno + 1))
            })?;
            cfg.set(key, value)?;
        }
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| SimError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_text(&text)
    }

    /// Replicated symbols per user: `⌊N/K⌋` unless overridden.
    pub fn per_user_common(&self) -> usize {
        self.m_override.unwrap_or(self.num_subcarriers / self.num_users.max(1))
    }

    pub fn label(&self) -> String {
        self.label.clone().unwrap_or_else(|| self.scheme.name().to_string())
    }

    /// `P/σ²` in dB for a sweep point.
    pub fn effective_snr_db(&self, point: f64) -> f64 {
        match self.noise_density_dbm_hz {
            None => point,
            Some(n0) => point - (n0 + 10.0 * self.subcarrier_spacing_hz.log10()),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(SimError::Config(msg));
        if self.num_users == 0 {
            return fail("K must be at least 1".into());
        }
        if self.num_antennas < self.num_users {
            return fail(format!("need N_t >= K, got N_t={}, K={}", self.num_antennas, self.num_users));
        }
        if self.num_taps == 0 || self.num_subcarriers < self.num_taps {
            return fail(format!("need N >= L >= 1, got N={}, L={}", self.num_subcarriers, self.num_taps));
        }
        if self.cp_len + 1 < self.num_taps {
            return fail(format!("cp_len={} is shorter than L-1={}", self.cp_len, self.num_taps - 1));
        }
        if self.num_users * self.per_user_common() > self.num_subcarriers {
            return fail(format!(
                "K·m = {} exceeds N = {}",
                self.num_users * self.per_user_common(),
                self.num_subcarriers
            ));
        }
        if !(self.tap_decay >= 0.0 && self.tap_decay.is_finite()) {
            return fail(format!("tap_decay must be nonnegative, got {}", self.tap_decay));
        }
        if !(self.total_power > 0.0 && self.total_power.is_finite()) {
            return fail(format!("total_power must be positive, got {}", self.total_power));
        }
        if !(0.0..1.0).contains(&self.common_fraction) {
            return fail(format!("common_fraction must lie in [0, 1), got {}", self.common_fraction));
        }
        if !(0.0..=1.0).contains(&self.csit_error) {
            return fail(format!("csit_error must lie in [0, 1], got {}", self.csit_error));
        }
        if !(0.0..=1.0).contains(&self.noma_weak_share) {
            return fail(format!("noma_weak_share must lie in [0, 1], got {}", self.noma_weak_share));
        }
        if self.chunk == 0 {
            return fail("chunk must be at least 1".into());
        }
        if self.scheme == SchemeId::MimoNoma && self.num_users % 2 != 0 {
            return fail(format!("MIMO-NOMA needs an even number of users, got {}", self.num_users));
        }
        if self.trials == 0 || self.block_length == 0 || self.max_slots == 0 {
            return fail("trials, block_length and max_slots must be positive".into());
        }
        if self.snr_grid_db.is_empty() || self.snr_grid_db.iter().any(|x| !x.is_finite()) {
            return fail("SNR grid must be a non-empty list of finite values".into());
        }
        if self.noise_density_dbm_hz.is_some() && !(self.subcarrier_spacing_hz > 0.0) {
            return fail("subcarrier_spacing_hz must be positive in absolute-units mode".into());
        }
        if self.workers == 0 {
            return fail("workers must be at least 1".into());
        }
        Ok(())
    }

    /// Link parameters at sweep point `point`.
    pub fn link_params(&self, point: f64) -> LinkParams {
        let snr = 10f64.powf(self.effective_snr_db(point) / 10.0);
        LinkParams {
            num_users: self.num_users,
            num_antennas: self.num_antennas,
            num_subcarriers: self.num_subcarriers,
            num_taps: self.num_taps,
            tap_decay: self.tap_decay,
            cp_len: self.cp_len,
            total_power: self.total_power,
            noise_var: self.total_power / snr,
            common_fraction: self.common_fraction,
            csit_error: self.csit_error,
            precoder: self.precoder,
            common_strategy: self.common_strategy,
            per_user_common: self.per_user_common(),
            chunk: self.chunk,
            noma_weak_share: self.noma_weak_share,
        }
    }

    /// OFDM blocks per trial, `⌈S/N⌉`.
    pub fn blocks_per_trial(&self) -> usize {
        self.block_length.div_ceil(self.num_subcarriers)
    }
}
