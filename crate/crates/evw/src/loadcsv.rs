//! Household load CSV files. Two layouts are accepted, told apart by the
//! header:
//!
//! - wide: `date,h0,h1,…,h23`, one row per day;
//! - long: `date,hour,kwh`, one row per hour (`hour` in 0..=23).
//!
//! Dates are `YYYY-MM-DD`; rows may come in any order. Lines starting with
//! `#` are comments. Errors carry the file line number.

use std::collections::BTreeMap;
use std::path::Path;

use chrono::{Datelike, NaiveDate};
use evw_core::loaddata::{CalendarDate, DayLoad, LoadDataset, HOURS};

use crate::error::{EvwError, Result};

pub fn parse_load_csv(path: &Path) -> Result<LoadDataset> {
    let bytes = crate::formats::read(path)?;
    parse_load_bytes(path, &bytes)
}

pub fn parse_load_bytes(path: &Path, bytes: &[u8]) -> Result<LoadDataset> {
    let err = |row: u64, message: String| EvwError::Csv {
        path: path.to_path_buf(),
        row,
        message,
    };
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(bytes);
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| err(1, e.to_string()))?
        .iter()
        .map(str::to_ascii_lowercase)
        .collect();
    let wide: Vec<String> = std::iter::once("date".to_string())
        .chain((0..HOURS).map(|h| format!("h{h}")))
        .collect();
    let long = ["date", "hour", "kwh"];

    let mut days: BTreeMap<CalendarDate, ([Option<f64>; HOURS], u64)> = BTreeMap::new();
    if header == wide {
        for record in reader.records() {
            let record = record.map_err(|e| err(e.position().map_or(0, |p| p.line()), e.to_string()))?;
            let row = record.position().map_or(0, |p| p.line());
            let date = parse_date(&record[0]).map_err(|m| err(row, m))?;
            if record.len() != HOURS + 1 {
                return Err(err(
                    row,
                    format!("{date}: expected 24 hourly values, found {}", record.len() - 1),
                ));
            }
            let mut hours = [None; HOURS];
            for (h, slot) in hours.iter_mut().enumerate() {
                *slot = Some(parse_kwh(&record[h + 1]).map_err(|m| err(row, format!("{date} h{h}: {m}")))?);
            }
            if days.insert(date, (hours, row)).is_some() {
                return Err(err(row, format!("duplicate date {date}")));
            }
        }
    } else if header == long {
        for record in reader.records() {
            let record = record.map_err(|e| err(e.position().map_or(0, |p| p.line()), e.to_string()))?;
            let row = record.position().map_or(0, |p| p.line());
            if record.len() != 3 {
                return Err(err(row, format!("expected 3 fields, found {}", record.len())));
            }
            let date = parse_date(&record[0]).map_err(|m| err(row, m))?;
            let hour: usize = record[1]
                .parse()
                .ok()
                .filter(|h| *h < HOURS)
                .ok_or_else(|| err(row, format!("{date}: hour must be 0..=23, got `{}`", &record[1])))?;
            let kwh = parse_kwh(&record[2]).map_err(|m| err(row, format!("{date} hour {hour}: {m}")))?;
            let entry = days.entry(date).or_insert(([None; HOURS], row));
            if entry.0[hour].replace(kwh).is_some() {
                return Err(err(row, format!("duplicate hour {hour} on {date}")));
            }
        }
    } else {
        return Err(err(
            1,
            "header must be `date,h0,...,h23` or `date,hour,kwh`".to_string(),
        ));
    }

    let mut out = Vec::with_capacity(days.len());
    for (date, (hours, row)) in days {
        let mut values = [0.0; HOURS];
        for (h, v) in hours.iter().enumerate() {
            values[h] = v.ok_or_else(|| err(row, format!("{date}: hour {h} is missing")))?;
        }
        out.push(DayLoad { date, hours: values });
    }
    LoadDataset::new(out).map_err(|source| EvwError::Invalid {
        path: path.to_path_buf(),
        source,
    })
}

fn parse_date(s: &str) -> std::result::Result<CalendarDate, String> {
    let d = NaiveDate::parse_from_str(s, "%Y-%m-%d").map_err(|e| format!("bad date `{s}`: {e}"))?;
    CalendarDate::new(d.year(), d.month() as u8, d.day() as u8).map_err(|e| e.to_string())
}

fn parse_kwh(s: &str) -> std::result::Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("`{s}` is not a number"))?;
    if v.is_finite() && v >= 0.0 {
        Ok(v)
    } else {
        Err(format!("value must be finite and >= 0, got {v}"))
    }
}

/// Wide-layout CSV text of a dataset.
pub fn to_wide_csv(ds: &LoadDataset) -> String {
    let mut out = String::from("date");
    for h in 0..HOURS {
        out.push_str(&format!(",h{h}"));
    }
    out.push('\n');
    for d in ds.days() {
        out.push_str(&d.date.to_string());
        for v in d.hours {
            out.push_str(&format!(",{v}"));
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p() -> &'static Path {
        Path::new("load.csv")
    }

    fn wide_row(date: &str, n: usize) -> String {
        let mut s = date.to_string();
        for h in 0..n {
            s.push_str(&format!(",{}", h as f64 * 0.5));
        }
        s
    }

    fn header() -> String {
        let mut s = String::from("date");
        for h in 0..HOURS {
            s.push_str(&format!(",h{h}"));
        }
        s
    }

    #[test]
    fn wide_and_long_agree() {
        let wide = format!(
            "{}\n{}\n{}\n",
            header(),
            wide_row("2023-01-02", 24),
            wide_row("2023-01-01", 24)
        );
        let mut long = String::from("# comment\ndate,hour,kwh\n");
        for d in ["2023-01-01", "2023-01-02"] {
            for h in (0..HOURS).rev() {
                long.push_str(&format!("{d},{h},{}\n", h as f64 * 0.5));
            }
        }
        let a = parse_load_bytes(p(), wide.as_bytes()).unwrap();
        let b = parse_load_bytes(p(), long.as_bytes()).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 2);
        assert_eq!(parse_load_bytes(p(), to_wide_csv(&a).as_bytes()).unwrap(), a);
    }

    #[test]
    fn errors_name_row_and_date() {
        let short = format!(
            "{}\n{}\n{}\n",
            header(),
            wide_row("2023-01-01", 24),
            wide_row("2023-01-02", 23)
        );
        match parse_load_bytes(p(), short.as_bytes()).unwrap_err() {
            EvwError::Csv { row, message, .. } => {
                assert_eq!(row, 3);
                assert!(message.contains("2023-01-02"), "{message}");
            }
            e => panic!("{e}"),
        }
        let dup = format!(
            "{}\n{}\n{}\n",
            header(),
            wide_row("2023-01-01", 24),
            wide_row("2023-01-01", 24)
        );
        assert!(parse_load_bytes(p(), dup.as_bytes())
            .unwrap_err()
            .to_string()
            .contains("duplicate"));
        let neg = "date,hour,kwh\n2023-01-01,0,-1\n";
        assert!(matches!(
            parse_load_bytes(p(), neg.as_bytes()),
            Err(EvwError::Csv { row: 2, .. })
        ));
        let missing = "date,hour,kwh\n2023-01-01,0,1\n";
        assert!(parse_load_bytes(p(), missing.as_bytes())
            .unwrap_err()
            .to_string()
            .contains("hour 1 is missing"));
        assert!(parse_load_bytes(p(), b"a,b\n1,2\n").is_err());
        assert!(parse_load_bytes(p(), b"date,hour,kwh\n2023-02-30,0,1\n").is_err());
    }
}
