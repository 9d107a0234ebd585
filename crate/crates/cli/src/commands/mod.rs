mod analyze;
mod explore;
mod fit;
mod forecast;
mod select;
mod simulate;

pub use analyze::cmd_analyze;
pub use explore::cmd_explore;
pub use fit::cmd_fit;
pub use forecast::{cmd_forecast, forecast_years};
pub use select::cmd_select;
pub use simulate::cmd_simulate;

use std::path::Path;

use anyhow::Result;

/// Writes a headed CSV of pre-formatted rows.
pub(crate) fn write_rows(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
    let wrap = |e: csv::Error| nao_ssm::Error::Data(format!("{}: {e}", path.display()));
    let mut w = csv::Writer::from_path(path).map_err(wrap)?;
    w.write_record(header).map_err(wrap)?;
    for r in rows {
        w.write_record(&r).map_err(wrap)?;
    }
    w.flush().map_err(|e| nao_ssm::Error::Io { path: path.to_path_buf(), source: e })?;
    Ok(())
}

/// Shortest round-trip form; empty for missing or non-finite values.
pub(crate) fn num(v: f64) -> String {
    if v.is_finite() {
        format!("{v}")
    } else {
        String::new()
    }
}

pub(crate) fn opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, num)
}

/// Fractional year of a date, for plot axes.
pub(crate) fn decimal_year(d: chrono::NaiveDate) -> f64 {
    use chrono::Datelike;
    let len = if d.leap_year() { 366.0 } else { 365.0 };
    d.year() as f64 + (d.ordinal0() as f64 + 0.5) / len
}
