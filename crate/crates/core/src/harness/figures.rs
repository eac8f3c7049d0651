use std::str::FromStr;

use super::config::SimConfig;
use super::sweep::{run_sweep, MetricsReport};
use crate::baselines::SchemeId;
use crate::precoding::PrecoderKind;
use crate::{Result, SimError};

/// Figure presets run by `sweep-figure`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Figure {
    /// BER against SNR with perfect CSIT.
    BerPerfect,
    /// BER against SNR with imperfect CSIT.
    BerImperfect,
    /// Sum rate against SNR.
    SumRate,
    /// Mean packet delay at low SNR.
    PacketDelay,
}

impl FromStr for Figure {
    type Err = SimError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "2a" => Ok(Figure::BerPerfect),
            "2b" => Ok(Figure::BerImperfect),
            "3a" => Ok(Figure::SumRate),
            "3b" => Ok(Figure::PacketDelay),
            _ => Err(SimError::Argument(format!("unknown figure '{s}', expected 2a, 2b, 3a or 3b"))),
        }
    }
}

fn precoder_tag(p: PrecoderKind) -> &'static str {
    match p {
        PrecoderKind::Rci => "RCI",
        PrecoderKind::ZfDpc => "DPC",
    }
}

fn variant(base: &SimConfig, scheme: SchemeId, precoder: PrecoderKind, suffix: &str) -> SimConfig {
    SimConfig {
        scheme,
        precoder,
        label: Some(format!("{}/{}{}", scheme.name(), precoder_tag(precoder), suffix)),
        ..base.clone()
    }
}

/// Desk-scale configurations for `figure`, derived from `base`
/// (which supplies trials, block length, seed and workers).
pub fn figure_configs(figure: Figure, base: &SimConfig) -> Vec<SimConfig> {
    let ber_schemes = [
        SchemeId::ProposedLocalized,
        SchemeId::ProposedDistributed,
        SchemeId::ConventionalRsma,
        SchemeId::MuMimo,
    ];
    let precoders = [PrecoderKind::Rci, PrecoderKind::ZfDpc];
    match figure {
        Figure::BerPerfect | Figure::BerImperfect => {
            let tau = if figure == Figure::BerPerfect { 0.0 } else { 0.1 };
            let b = SimConfig { csit_error: tau, snr_grid_db: vec![0.0, 5.0, 10.0, 15.0, 20.0], ..base.clone() };
            precoders
                .iter()
                .flat_map(|&p| ber_schemes.iter().map(move |&s| (s, p)))
                .map(|(s, p)| variant(&b, s, p, ""))
                .collect()
        }
        Figure::SumRate => {
            let b = SimConfig { snr_grid_db: vec![0.0, 5.0, 10.0, 15.0, 20.0], ..base.clone() };
            let mut out: Vec<SimConfig> = precoders
                .iter()
                .flat_map(|&p| [SchemeId::ProposedLocalized, SchemeId::ProposedDistributed].map(|s| (s, p)))
                .map(|(s, p)| variant(&b, s, p, "/N64"))
                .collect();
            let wide = SimConfig { num_subcarriers: 128, ..b.clone() };
            out.push(variant(&wide, SchemeId::ProposedDistributed, PrecoderKind::Rci, "/N128"));
            for s in [SchemeId::ConventionalRsma, SchemeId::MimoNoma, SchemeId::MimoSdma] {
                out.push(variant(&b, s, PrecoderKind::Rci, "/N64"));
            }
            out
        }
        Figure::PacketDelay => {
            let b = SimConfig { snr_grid_db: vec![-12.0, -9.0, -6.0, -3.0, 0.0], ..base.clone() };
            [SchemeId::ProposedDistributed, SchemeId::HarqRsma, SchemeId::MimoSdma, SchemeId::MimoNoma]
                .into_iter()
                .map(|s| variant(&b, s, PrecoderKind::Rci, ""))
                .collect()
        }
    }
}

/// Runs every configuration of a figure preset and concatenates the rows.
pub fn run_figure(figure: Figure, base: &SimConfig) -> Result<MetricsReport> {
    let mut report = MetricsReport::default();
    for cfg in figure_configs(figure, base) {
        report.rows.extend(run_sweep(&cfg)?.rows);
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_are_valid() {
        let base = SimConfig::default();
        for f in ["2a", "2b", "3a", "3b"] {
            let figure: Figure = f.parse().unwrap();
            let cfgs = figure_configs(figure, &base);
            assert!(!cfgs.is_empty());
            for c in &cfgs {
                c.validate().unwrap();
            }
        }
        assert!("4c".parse::<Figure>().is_err());
        let imperfect = figure_configs(Figure::BerImperfect, &base);
        assert!(imperfect.iter().all(|c| c.csit_error == 0.1));
    }
}
