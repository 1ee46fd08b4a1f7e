//! Shared CSV conventions: UTF-8, header row, floats with 17 significant
//! digits so every value round-trips exactly.

use std::path::Path;

pub fn fmt_f64(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        v.to_string()
    }
}

pub fn parse_f64(s: &str) -> Result<f64, String> {
    s.trim().parse::<f64>().map_err(|e| format!("bad number {s:?}: {e}"))
}

/// Writes `header` and `rows` to `path`.
pub fn write_rows<I, R>(path: &Path, header: &[&str], rows: I) -> Result<(), csv::Error>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.flush()?;
    Ok(())
}
