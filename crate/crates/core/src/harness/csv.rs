use std::path::Path;

use super::sweep::MetricsReport;
use crate::{Result, SimError};

pub const CSV_HEADER: &str = "scheme,snr_db,ber,ber_ci95,sum_rate_bps_hz,delay_slots,trials,seed";

/// Decimal rendering with 10 significant digits.
pub fn format_significant(x: f64) -> String {
    if !x.is_finite() {
        return format!("{x}");
    }
    if x == 0.0 {
        return "0.000000000".to_string();
    }
    let magnitude = x.abs().log10().floor() as i32;
    let decimals = (9 - magnitude).max(0) as usize;
    format!("{x:.decimals$}")
}

pub fn render_csv(report: &MetricsReport) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in &report.rows {
        let fields = [
            r.label.clone(),
            format_significant(r.snr_db),
            format_significant(r.ber),
            format_significant(r.ber_ci95),
            format_significant(r.sum_rate),
            format_significant(r.delay_slots),
            r.trials.to_string(),
            r.seed.to_string(),
        ];
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    out
}

pub fn emit_csv(report: &MetricsReport, path: &Path) -> Result<()> {
    std::fs::write(path, render_csv(report)).map_err(|source| SimError::Io {
        path: path.to_path_buf(),
        source,
    })
}
