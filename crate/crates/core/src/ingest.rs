//! CSV readers and writers for load, weather, holiday and tide files.
//!
//! Every file is UTF-8, comma-separated, with a mandatory header row.
//! Timestamps are ISO-8601 with an explicit offset; dates are `YYYY-MM-DD`.
//! Readers report failures as [`Error::Parse`] carrying the file path and the
//! 1-based line number; the writers emit exactly the layout the readers
//! accept so that parse → write → parse is the identity.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use chrono::{FixedOffset, NaiveDate};
use log::info;

use crate::error::{Error, Result};
use crate::timeseries::{FeatureAspect, FeatureColumn, Frequency, LoadSeries, Timestamp};

/// Longest run of consecutive missing weather cells repaired by interpolation.
pub const DEFAULT_MAX_GAP: usize = 3;

const DATE_FORMAT: &str = "%Y-%m-%d";
const MAX_LISTED_GAPS: usize = 10;

/// One data row with its 1-based line number in the source file.
#[derive(Clone, Debug, PartialEq)]
pub struct RawRow {
    pub line: usize,
    pub cells: Vec<String>,
}

/// A rectangular CSV table with a unique header.
#[derive(Clone, Debug, PartialEq)]
pub struct RawTable {
    pub path: PathBuf,
    pub header: Vec<String>,
    pub rows: Vec<RawRow>,
}

impl RawTable {
    pub fn read(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::File {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        let mut reader = csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).from_reader(file);
        let mut records = reader.records();
        let header: Vec<String> = match records.next() {
            None => return Err(parse_error(path, 1, "empty file: header row is mandatory")),
            Some(rec) => rec.map_err(|e| csv_error(path, e))?.iter().map(str::to_string).collect(),
        };
        let mut seen = HashSet::new();
        for h in &header {
            if h.is_empty() {
                return Err(parse_error(path, 1, "empty column name in header"));
            }
            if !seen.insert(h.as_str()) {
                return Err(parse_error(path, 1, format!("duplicate column `{h}` in header")));
            }
        }
        let mut rows = Vec::new();
        for rec in records {
            let rec = rec.map_err(|e| csv_error(path, e))?;
            let line = rec.position().map_or(0, |p| p.line() as usize);
            rows.push(RawRow {
                line,
                cells: rec.iter().map(str::to_string).collect(),
            });
        }
        Ok(Self {
            path: path.to_path_buf(),
            header,
            rows,
        })
    }

    /// Index of `name` in the header, or a line-1 error naming it.
    pub fn column(&self, name: &str) -> Result<usize> {
        self.header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| self.error(1, format!("missing required column `{name}`")))
    }

    fn require_header(&self, expected: &[&str]) -> Result<()> {
        if self.header.len() != expected.len() || self.header.iter().zip(expected).any(|(a, b)| a != b) {
            return Err(self.error(
                1,
                format!("expected header `{}`, found `{}`", expected.join(","), self.header.join(",")),
            ));
        }
        Ok(())
    }

    fn error(&self, line: usize, message: impl Into<String>) -> Error {
        parse_error(&self.path, line, message)
    }
}

fn parse_error(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    let line = e.position().map_or(1, |p| p.line() as usize);
    parse_error(path, line, e.to_string())
}

fn parse_timestamp(table: &RawTable, row: &RawRow, cell: &str) -> Result<Timestamp> {
    cell.parse::<Timestamp>().map_err(|e| table.error(row.line, e.to_string()))
}

fn parse_date(table: &RawTable, row: &RawRow, cell: &str) -> Result<NaiveDate> {
    NaiveDate::parse_from_str(cell, DATE_FORMAT)
        .map_err(|e| table.error(row.line, format!("date `{cell}`: {e} (expected YYYY-MM-DD)")))
}

fn parse_number(table: &RawTable, row: &RawRow, column: &str, cell: &str) -> Result<f64> {
    match cell.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(table.error(row.line, format!("column `{column}`: non-numeric value `{cell}`"))),
    }
}

/// Units suffix of a `name_unit` column header.
pub fn units_from_name(name: &str) -> &str {
    name.rsplit_once('_').map_or("", |(_, u)| u)
}

/// Reads a `timestamp,load_mw` file. Rows are sorted by time; duplicates and
/// gaps in the expected spacing are errors.
pub fn read_load_csv(path: &Path, frequency: Frequency) -> Result<LoadSeries> {
    let table = RawTable::read(path)?;
    table.require_header(&["timestamp", "load_mw"])?;
    if table.rows.is_empty() {
        return Err(table.error(1, "no data rows"));
    }
    let mut rows = Vec::with_capacity(table.rows.len());
    for row in &table.rows {
        let t = parse_timestamp(&table, row, &row.cells[0])?;
        let v = parse_number(&table, row, "load_mw", &row.cells[1])?;
        if v <= 0.0 {
            return Err(table.error(row.line, format!("load must be positive, got {v}")));
        }
        rows.push((t, v, row.line));
    }
    rows.sort_by_key(|r| r.0);
    for w in rows.windows(2) {
        let same = match frequency {
            Frequency::DailyPeak => w[0].0.local_date() == w[1].0.local_date(),
            Frequency::HalfHourly => w[0].0 == w[1].0,
        };
        if same {
            return Err(table.error(
                w[0].2.max(w[1].2),
                format!("duplicate timestamp {} (also on line {})", w[1].0, w[0].2.min(w[1].2)),
            ));
        }
    }
    let series = LoadSeries::unspaced(
        rows.iter().map(|r| r.0).collect(),
        rows.iter().map(|r| r.1).collect(),
        frequency,
    )?;
    let missing = series.missing_steps();
    if !missing.is_empty() {
        let first_after = rows.iter().find(|r| r.0 > missing[0]).map_or(1, |r| r.2);
        let listed: Vec<String> = missing
            .iter()
            .take(MAX_LISTED_GAPS)
            .map(|t| match frequency {
                Frequency::DailyPeak => t.local_date().to_string(),
                Frequency::HalfHourly => t.to_string(),
            })
            .collect();
        let more = if missing.len() > MAX_LISTED_GAPS {
            format!(" and {} more", missing.len() - MAX_LISTED_GAPS)
        } else {
            String::new()
        };
        return Err(table.error(
            first_after,
            format!("{} missing step(s): {}{more}", missing.len(), listed.join(", ")),
        ));
    }
    Ok(series)
}

/// Options for [`read_weather_csv`].
#[derive(Clone, Debug, PartialEq)]
pub struct WeatherOptions {
    /// Columns that must be present; empty accepts whatever the file holds.
    pub expected: Vec<String>,
    /// Longest run of empty cells repaired by linear interpolation in time.
    pub max_gap: usize,
}

impl Default for WeatherOptions {
    fn default() -> Self {
        Self {
            expected: Vec::new(),
            max_gap: DEFAULT_MAX_GAP,
        }
    }
}

/// Reads a `timestamp,<name_unit>...` file into geographical feature columns.
pub fn read_weather_csv(path: &Path, opts: &WeatherOptions) -> Result<Vec<FeatureColumn>> {
    read_numeric_table(path, opts, FeatureAspect::Geographical)
}

fn read_numeric_table(path: &Path, opts: &WeatherOptions, aspect: FeatureAspect) -> Result<Vec<FeatureColumn>> {
    let table = RawTable::read(path)?;
    if table.header.first().map(String::as_str) != Some("timestamp") {
        return Err(table.error(1, "first column must be `timestamp`"));
    }
    for name in &opts.expected {
        table.column(name)?;
    }
    if table.header.len() < 2 {
        return Err(table.error(1, "no value columns"));
    }
    if table.rows.is_empty() {
        return Err(table.error(1, "no data rows"));
    }
    let mut rows: Vec<(Timestamp, &RawRow)> = Vec::with_capacity(table.rows.len());
    for row in &table.rows {
        rows.push((parse_timestamp(&table, row, &row.cells[0])?, row));
    }
    rows.sort_by_key(|r| r.0);
    if let Some(w) = rows.windows(2).find(|w| w[0].0 == w[1].0) {
        return Err(table.error(
            w[0].1.line.max(w[1].1.line),
            format!("duplicate timestamp {}", w[1].0),
        ));
    }
    let timestamps: Vec<Timestamp> = rows.iter().map(|r| r.0).collect();
    let mut columns = Vec::with_capacity(table.header.len() - 1);
    for (j, name) in table.header.iter().enumerate().skip(1) {
        let mut values: Vec<Option<f64>> = Vec::with_capacity(rows.len());
        for (_, row) in &rows {
            let cell = row.cells[j].as_str();
            values.push(if cell.is_empty() {
                None
            } else {
                Some(parse_number(&table, row, name, cell)?)
            });
        }
        let lines: Vec<usize> = rows.iter().map(|r| r.1.line).collect();
        let filled = fill_gaps(&table, name, &timestamps, &lines, &values, opts.max_gap)?;
        columns.push(FeatureColumn::new(
            name.clone(),
            aspect,
            units_from_name(name),
            timestamps.clone(),
            filled,
        )?);
    }
    Ok(columns)
}

fn fill_gaps(
    table: &RawTable,
    name: &str,
    timestamps: &[Timestamp],
    lines: &[usize],
    values: &[Option<f64>],
    max_gap: usize,
) -> Result<Vec<f64>> {
    let n = values.len();
    let mut out = vec![0.0; n];
    let mut i = 0;
    while i < n {
        if let Some(v) = values[i] {
            out[i] = v;
            i += 1;
            continue;
        }
        let start = i;
        while i < n && values[i].is_none() {
            i += 1;
        }
        let run = i - start;
        if start == 0 || i == n {
            return Err(table.error(
                lines[start],
                format!("column `{name}`: {run} missing value(s) at the edge of the file cannot be interpolated"),
            ));
        }
        if run > max_gap {
            return Err(table.error(
                lines[start],
                format!("column `{name}`: gap of {run} rows exceeds the limit of {max_gap}"),
            ));
        }
        let (t0, v0) = (timestamps[start - 1].unix() as f64, out[start - 1]);
        let (t1, v1) = (timestamps[i].unix() as f64, values[i].unwrap());
        for k in start..i {
            let w = (timestamps[k].unix() as f64 - t0) / (t1 - t0);
            out[k] = v0 + w * (v1 - v0);
        }
        info!(
            "{}: column `{name}`: interpolated {run} missing value(s) from line {}",
            table.path.display(),
            lines[start]
        );
    }
    Ok(out)
}

/// Reads a `date,name` holiday file, keeping the first name for repeated dates.
pub fn read_holiday_table(path: &Path) -> Result<BTreeMap<NaiveDate, String>> {
    let table = RawTable::read(path)?;
    table.require_header(&["date", "name"])?;
    let mut out = BTreeMap::new();
    for row in &table.rows {
        let date = parse_date(&table, row, &row.cells[0])?;
        out.entry(date).or_insert_with(|| row.cells[1].clone());
    }
    Ok(out)
}

/// Reads a `date,name` holiday file as a deduplicated date set. A file holding
/// only the header yields an empty set.
pub fn read_holiday_csv(path: &Path) -> Result<BTreeSet<NaiveDate>> {
    Ok(read_holiday_table(path)?.into_keys().collect())
}

/// Reads a `date,high_tide_min,low_tide_min` file into astronomical columns
/// stamped at local midnight under `offset`.
pub fn read_tide_csv(path: &Path, offset: FixedOffset) -> Result<Vec<FeatureColumn>> {
    let table = RawTable::read(path)?;
    table.require_header(&["date", "high_tide_min", "low_tide_min"])?;
    let mut rows = Vec::with_capacity(table.rows.len());
    for row in &table.rows {
        let date = parse_date(&table, row, &row.cells[0])?;
        let high = parse_number(&table, row, "high_tide_min", &row.cells[1])?;
        let low = parse_number(&table, row, "low_tide_min", &row.cells[2])?;
        rows.push((date, high, low, row.line));
    }
    rows.sort_by_key(|r| r.0);
    if let Some(w) = rows.windows(2).find(|w| w[0].0 == w[1].0) {
        return Err(table.error(w[0].3.max(w[1].3), format!("duplicate date {}", w[1].0)));
    }
    let ts: Vec<Timestamp> = rows.iter().map(|r| Timestamp::at_midnight(r.0, offset)).collect();
    Ok(vec![
        FeatureColumn::new(
            "high_tide_min",
            FeatureAspect::Astronomical,
            "min",
            ts.clone(),
            rows.iter().map(|r| r.1).collect(),
        )?,
        FeatureColumn::new(
            "low_tide_min",
            FeatureAspect::Astronomical,
            "min",
            ts,
            rows.iter().map(|r| r.2).collect(),
        )?,
    ])
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| Error::File {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

fn finish(path: &Path, mut w: BufWriter<File>) -> Result<()> {
    w.flush().map_err(|e| Error::File {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> Error + '_ {
    move |e| Error::File {
        path: path.to_path_buf(),
        message: e.to_string(),
    }
}

pub fn write_load_csv(path: &Path, load: &LoadSeries) -> Result<()> {
    let mut w = create(path)?;
    let err = io_err(path);
    writeln!(w, "timestamp,load_mw").map_err(&err)?;
    for (t, v) in load.timestamps().iter().zip(load.values()) {
        writeln!(w, "{t},{v}").map_err(&err)?;
    }
    finish(path, w)
}

/// Writes columns side by side on the union of their timestamps; a column
/// without a value at some timestamp leaves the cell empty.
pub fn write_weather_csv(path: &Path, columns: &[FeatureColumn]) -> Result<()> {
    if columns.is_empty() {
        return Err(Error::InvalidData("no weather columns to write".into()));
    }
    let grid: BTreeSet<Timestamp> = columns.iter().flat_map(|c| c.timestamps.iter().copied()).collect();
    let lookups: Vec<BTreeMap<Timestamp, f64>> = columns
        .iter()
        .map(|c| c.timestamps.iter().copied().zip(c.values.iter().copied()).collect())
        .collect();
    let mut w = create(path)?;
    let err = io_err(path);
    let names: Vec<&str> = columns.iter().map(|c| c.name.as_str()).collect();
    writeln!(w, "timestamp,{}", names.join(",")).map_err(&err)?;
    for t in &grid {
        write!(w, "{t}").map_err(&err)?;
        for map in &lookups {
            match map.get(t) {
                Some(v) if v.is_finite() => write!(w, ",{v}"),
                _ => write!(w, ","),
            }
            .map_err(&err)?;
        }
        writeln!(w).map_err(&err)?;
    }
    finish(path, w)
}

pub fn write_holiday_csv(path: &Path, holidays: &BTreeMap<NaiveDate, String>) -> Result<()> {
    let mut w = create(path)?;
    let err = io_err(path);
    writeln!(w, "date,name").map_err(&err)?;
    for (d, name) in holidays {
        if name.contains([',', '"', '\n']) {
            return Err(Error::InvalidData(format!("holiday name `{name}` contains a delimiter")));
        }
        writeln!(w, "{},{name}", d.format(DATE_FORMAT)).map_err(&err)?;
    }
    finish(path, w)
}

/// Writes tide columns named `high_tide_min` and `low_tide_min` sharing one
/// set of dates.
pub fn write_tide_csv(path: &Path, columns: &[FeatureColumn]) -> Result<()> {
    let find = |name: &str| {
        columns
            .iter()
            .find(|c| c.name == name)
            .ok_or_else(|| Error::InvalidData(format!("missing tide column `{name}`")))
    };
    let (high, low) = (find("high_tide_min")?, find("low_tide_min")?);
    if high.timestamps != low.timestamps {
        return Err(Error::InvalidData("tide columns have different timestamps".into()));
    }
    let mut w = create(path)?;
    let err = io_err(path);
    writeln!(w, "date,high_tide_min,low_tide_min").map_err(&err)?;
    for ((t, h), l) in high.timestamps.iter().zip(&high.values).zip(&low.values) {
        writeln!(w, "{},{h},{l}", t.local_date().format(DATE_FORMAT)).map_err(&err)?;
    }
    finish(path, w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::fs;

    fn file(dir: &tempfile::TempDir, name: &str, body: &str) -> PathBuf {
        let p = dir.path().join(name);
        fs::write(&p, body).unwrap();
        p
    }

    fn daily_load(n: usize) -> String {
        let mut s = String::from("timestamp,load_mw\n");
        for i in 0..n {
            let d = NaiveDate::from_ymd_opt(2015, 1, 1).unwrap() + chrono::Days::new(i as u64);
            s.push_str(&format!("{d}T00:00:00-05:00,{}\n", 1000 + i));
        }
        s
    }

    fn line_of(e: &Error) -> usize {
        match e {
            Error::Parse { line, .. } => *line,
            other => panic!("expected parse error, got {other}"),
        }
    }

    #[test]
    fn load_well_formed() {
        let dir = tempfile::tempdir().unwrap();
        let p = file(&dir, "load.csv", &daily_load(10));
        let s = read_load_csv(&p, Frequency::DailyPeak).unwrap();
        assert_eq!(s.len(), 10);
        assert_eq!(s.values()[9], 1009.0);
    }

    #[test]
    fn load_unsorted_rows_are_sorted() {
        let dir = tempfile::tempdir().unwrap();
        let body = "timestamp,load_mw\n2015-01-02T00:00:00-05:00,2\n2015-01-01T00:00:00-05:00,1\n";
        let s = read_load_csv(&file(&dir, "l.csv", body), Frequency::DailyPeak).unwrap();
        assert_eq!(s.values(), &[1.0, 2.0]);
    }

    #[test]
    fn load_duplicate_names_date_and_line() {
        let dir = tempfile::tempdir().unwrap();
        let mut body = daily_load(4);
        body.push_str("2015-01-03T00:00:00-05:00,5\n");
        let p = file(&dir, "dup.csv", &body);
        let e = read_load_csv(&p, Frequency::DailyPeak).unwrap_err();
        let msg = e.to_string();
        assert!(msg.contains("2015-01-03"), "{msg}");
        assert!(msg.contains("dup.csv"), "{msg}");
        assert_eq!(line_of(&e), 6);
    }

    #[test]
    fn load_gap_lists_missing_dates() {
        let dir = tempfile::tempdir().unwrap();
        let body: String = daily_load(6)
            .lines()
            .enumerate()
            .filter(|(i, _)| *i != 3 && *i != 4)
            .map(|(_, l)| format!("{l}\n"))
            .collect();
        let e = read_load_csv(&file(&dir, "gap.csv", &body), Frequency::DailyPeak).unwrap_err();
        let msg = e.to_string();
        assert!(msg.contains("2015-01-03") && msg.contains("2015-01-04"), "{msg}");
        assert_eq!(line_of(&e), 4);
    }

    #[test]
    fn load_malformed_row_reports_line() {
        let dir = tempfile::tempdir().unwrap();
        let body = daily_load(5).replace(",1002\n", ",abc\n");
        let e = read_load_csv(&file(&dir, "bad.csv", &body), Frequency::DailyPeak).unwrap_err();
        assert_eq!(line_of(&e), 4);
        let body = daily_load(5).replace("2015-01-04T00:00:00-05:00", "2015-01-04 00:00");
        let e = read_load_csv(&file(&dir, "bad2.csv", &body), Frequency::DailyPeak).unwrap_err();
        assert_eq!(line_of(&e), 5);
        let body = daily_load(5).replace(",1001\n", ",1001,7\n");
        let e = read_load_csv(&file(&dir, "bad3.csv", &body), Frequency::DailyPeak).unwrap_err();
        assert_eq!(line_of(&e), 3);
    }

    #[test]
    fn load_requires_offset() {
        let dir = tempfile::tempdir().unwrap();
        let body = "timestamp,load_mw\n2015-01-01T00:00:00,1\n";
        let e = read_load_csv(&file(&dir, "naive.csv", body), Frequency::DailyPeak).unwrap_err();
        assert_eq!(line_of(&e), 2);
    }

    #[test]
    fn weather_columns_and_units() {
        let dir = tempfile::tempdir().unwrap();
        let body = "timestamp,temp_f,dewpoint_f,no2_ppb\n\
                    2015-01-01T00:00:00-05:00,30,20,5\n\
                    2015-01-02T00:00:00-05:00,31,21,6\n";
        let opts = WeatherOptions {
            expected: vec!["temp_f".into(), "no2_ppb".into()],
            ..WeatherOptions::default()
        };
        let cols = read_weather_csv(&file(&dir, "w.csv", body), &opts).unwrap();
        assert_eq!(cols.len(), 3);
        assert!(cols.iter().all(|c| c.aspect == FeatureAspect::Geographical));
        assert_eq!(cols[2].units, "ppb");
        assert_eq!(cols[0].values, vec![30.0, 31.0]);
    }

    #[test]
    fn weather_errors() {
        let dir = tempfile::tempdir().unwrap();
        let e = read_weather_csv(&file(&dir, "empty.csv", ""), &WeatherOptions::default()).unwrap_err();
        assert_eq!(line_of(&e), 1);
        let body = "timestamp,temp_f\n2015-01-01T00:00:00-05:00,30\n";
        let opts = WeatherOptions {
            expected: vec!["no2_ppb".into()],
            ..WeatherOptions::default()
        };
        let e = read_weather_csv(&file(&dir, "miss.csv", body), &opts).unwrap_err();
        assert!(e.to_string().contains("no2_ppb"));
        let body = "timestamp,temp_f\n2015-01-01T00:00:00-05:00,30\n2015-01-02T00:00:00-05:00,warm\n";
        let e = read_weather_csv(&file(&dir, "nn.csv", body), &WeatherOptions::default()).unwrap_err();
        assert_eq!(line_of(&e), 3);
        assert!(e.to_string().contains("temp_f"));
    }

    fn gappy(missing: &[usize]) -> String {
        let mut s = String::from("timestamp,temp_f\n");
        for i in 0..8usize {
            let d = NaiveDate::from_ymd_opt(2015, 1, 1).unwrap() + chrono::Days::new(i as u64);
            let v = if missing.contains(&i) { String::new() } else { format!("{}", 10 * i) };
            s.push_str(&format!("{d}T00:00:00-05:00,{v}\n"));
        }
        s
    }

    #[test]
    fn weather_short_gap_interpolated() {
        let dir = tempfile::tempdir().unwrap();
        let p = file(&dir, "g.csv", &gappy(&[3, 4]));
        let cols = read_weather_csv(&p, &WeatherOptions::default()).unwrap();
        assert_eq!(cols[0].values, (0..8).map(|i| 10.0 * i as f64).collect::<Vec<_>>());
    }

    #[test]
    fn weather_long_gap_and_edge_gap_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = file(&dir, "g4.csv", &gappy(&[2, 3, 4, 5]));
        let e = read_weather_csv(&p, &WeatherOptions::default()).unwrap_err();
        assert_eq!(line_of(&e), 4);
        let p = file(&dir, "edge.csv", &gappy(&[0]));
        assert!(read_weather_csv(&p, &WeatherOptions::default()).is_err());
        let tight = WeatherOptions {
            max_gap: 1,
            ..WeatherOptions::default()
        };
        assert!(read_weather_csv(&file(&dir, "g2.csv", &gappy(&[3, 4])), &tight).is_err());
    }

    #[test]
    fn holidays() {
        let dir = tempfile::tempdir().unwrap();
        let body = "date,name\n2015-01-01,New Year\n2015-07-04,Independence Day\n2015-01-01,New Year again\n";
        let p = file(&dir, "h.csv", body);
        assert_eq!(read_holiday_csv(&p).unwrap().len(), 2);
        assert_eq!(read_holiday_table(&p).unwrap()[&NaiveDate::from_ymd_opt(2015, 1, 1).unwrap()], "New Year");
        assert!(read_holiday_csv(&file(&dir, "e.csv", "date,name\n")).unwrap().is_empty());
        let e = read_holiday_csv(&file(&dir, "b.csv", "date,name\n2015-01-01,a\n2015-13-01,b\n")).unwrap_err();
        assert_eq!(line_of(&e), 3);
    }

    #[test]
    fn federal_holidays_set_of_ten() {
        let dir = tempfile::tempdir().unwrap();
        let table: BTreeMap<NaiveDate, String> = crate::synth::us_federal_holidays(2015)
            .into_iter()
            .map(|(d, n)| (d, n.to_string()))
            .collect();
        let p = dir.path().join("fed.csv");
        write_holiday_csv(&p, &table).unwrap();
        assert_eq!(read_holiday_csv(&p).unwrap().len(), 10);
    }

    #[test]
    fn round_trips_are_byte_identical() {
        let dir = tempfile::tempdir().unwrap();
        let load_p = file(&dir, "l.csv", &daily_load(5).replace(",1003\n", ",1003.123456789012\n"));
        let load = read_load_csv(&load_p, Frequency::DailyPeak).unwrap();
        let out = dir.path().join("l2.csv");
        write_load_csv(&out, &load).unwrap();
        assert_eq!(fs::read(&load_p).unwrap(), fs::read(&out).unwrap());

        let tide_body = "date,high_tide_min,low_tide_min\n2015-01-01,100,472.5\n2015-01-02,150,522\n";
        let tide_p = file(&dir, "t.csv", tide_body);
        let tides = read_tide_csv(&tide_p, FixedOffset::west_opt(5 * 3600).unwrap()).unwrap();
        assert_eq!(tides[0].aspect, FeatureAspect::Astronomical);
        let out = dir.path().join("t2.csv");
        write_tide_csv(&out, &tides).unwrap();
        assert_eq!(fs::read_to_string(&out).unwrap(), tide_body);
    }

    #[test]
    fn large_daily_file_parses_quickly() {
        let dir = tempfile::tempdir().unwrap();
        let p = file(&dir, "big.csv", &daily_load(4748));
        let start = std::time::Instant::now();
        assert_eq!(read_load_csv(&p, Frequency::DailyPeak).unwrap().len(), 4748);
        assert!(start.elapsed().as_secs_f64() < 1.0);
    }
}
