use std::collections::BTreeMap;
use std::path::Path;

use chrono::NaiveDate;

use super::DailySeries;
use crate::error::{Error, Result};

/// Names of the date and value columns in an input CSV.
#[derive(Debug, Clone)]
pub struct CsvColumns {
    pub date: String,
    pub value: String,
}

impl Default for CsvColumns {
    fn default() -> Self {
        Self { date: "date".into(), value: "value".into() }
    }
}

/// Reads a daily series from a headed CSV file. Dates are ISO `YYYY-MM-DD`;
/// an empty value field is a missing day, and days absent from the file
/// inside the spanned range become missing entries.
pub fn load_csv(path: impl AsRef<Path>, columns: &CsvColumns) -> Result<DailySeries> {
    let path = path.as_ref();
    let io_err = |e: std::io::Error| Error::Io { path: path.to_path_buf(), source: e };
    let file = std::fs::File::open(path).map_err(io_err)?;
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file);
    let parse_err = |line: usize, msg: String| Error::Parse { path: path.to_path_buf(), line, msg };

    let headers = reader.headers().map_err(|e| parse_err(1, e.to_string()))?.clone();
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| parse_err(1, format!("missing column '{name}'")))
    };
    let date_col = find(&columns.date)?;
    let value_col = find(&columns.value)?;

    let mut rows: BTreeMap<NaiveDate, Option<f64>> = BTreeMap::new();
    for (i, record) in reader.records().enumerate() {
        let line = i + 2;
        let record = record.map_err(|e| parse_err(line, e.to_string()))?;
        let date_str = record.get(date_col).unwrap_or("");
        let date = NaiveDate::parse_from_str(date_str, "%Y-%m-%d")
            .map_err(|_| parse_err(line, format!("unparseable date '{date_str}'")))?;
        let raw = record.get(value_col).unwrap_or("");
        let value = if raw.is_empty() || raw.eq_ignore_ascii_case("na") {
            None
        } else {
            let v: f64 = raw
                .parse()
                .map_err(|_| parse_err(line, format!("unparseable value '{raw}'")))?;
            if !v.is_finite() {
                return Err(parse_err(line, format!("non-finite value '{raw}'")));
            }
            Some(v)
        };
        if rows.insert(date, value).is_some() {
            return Err(parse_err(line, format!("duplicate date {date}")));
        }
    }

    let (&first, _) = rows
        .first_key_value()
        .ok_or_else(|| Error::Data(format!("{} has no rows", path.display())))?;
    let (&last, _) = rows.last_key_value().expect("non-empty");
    let len = (last - first).num_days() as usize + 1;
    let mut values = vec![None; len];
    for (date, v) in rows {
        values[(date - first).num_days() as usize] = v;
    }
    DailySeries::new(first, values)
}

/// Writes `date,value` rows for every day, leaving missing values empty.
pub fn write_csv(series: &DailySeries, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e.into(),
    })?;
    let wrap = |e: csv::Error| Error::Io { path: path.to_path_buf(), source: e.into() };
    w.write_record(["date", "value"]).map_err(wrap)?;
    for (i, v) in series.values().iter().enumerate() {
        let value = v.map(|x| format!("{x}")).unwrap_or_default();
        w.write_record([series.date(i).format("%Y-%m-%d").to_string(), value])
            .map_err(wrap)?;
    }
    w.flush().map_err(|e| Error::Io { path: path.to_path_buf(), source: e })
}
