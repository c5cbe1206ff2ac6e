//! Patrol effort and illegal-activity records, and their CSV form.

use std::io::{Read, Write};

use chrono::NaiveDate;

use crate::error::{Error, Result};
use crate::geoformats::Point2;
use crate::temporal::Quarter;

const DATE_FORMAT: &str = "%Y-%m-%d";

/// One observation of illegal activity (e.g. a snare found).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActivityRecord {
    pub x: f64,
    pub y: f64,
    pub date: NaiveDate,
}

/// Patrol effort spent at a location; units are whatever the park uses.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EffortRecord {
    pub x: f64,
    pub y: f64,
    pub date: NaiveDate,
    pub effort: f64,
}

pub(crate) fn quarter_of(date: NaiveDate) -> Quarter {
    use chrono::Datelike;
    Quarter { year: date.year(), index: (date.month() - 1) / 3 + 1 }
}

impl ActivityRecord {
    pub fn point(&self) -> Point2 {
        Point2::new(self.x, self.y)
    }

    pub fn quarter(&self) -> Quarter {
        quarter_of(self.date)
    }
}

impl EffortRecord {
    pub fn new(x: f64, y: f64, date: NaiveDate, effort: f64) -> Result<Self> {
        if !(effort >= 0.0 && effort.is_finite()) {
            return Err(Error::Dataset(format!("effort must be a nonnegative number, got {effort}")));
        }
        Ok(Self { x, y, date, effort })
    }

    pub fn point(&self) -> Point2 {
        Point2::new(self.x, self.y)
    }

    pub fn quarter(&self) -> Quarter {
        quarter_of(self.date)
    }
}

fn parse_date(s: &str, line: u64) -> Result<NaiveDate> {
    NaiveDate::parse_from_str(s.trim(), DATE_FORMAT)
        .map_err(|_| Error::Dataset(format!("line {line}: bad date {s:?}, expected YYYY-MM-DD")))
}

fn parse_num(s: &str, what: &str, line: u64) -> Result<f64> {
    s.trim()
        .parse()
        .map_err(|_| Error::Dataset(format!("line {line}: bad {what} {s:?}")))
}

fn check_header(rdr: &mut csv::Reader<impl Read>, expected: &[&str]) -> Result<()> {
    let header = rdr.headers()?;
    let got: Vec<&str> = header.iter().map(str::trim).collect();
    if got != expected {
        return Err(Error::Dataset(format!("expected header {expected:?}, got {got:?}")));
    }
    Ok(())
}

/// Reads `x,y,date` rows.
pub fn read_activities(input: impl Read) -> Result<Vec<ActivityRecord>> {
    let mut rdr = csv::Reader::from_reader(input);
    check_header(&mut rdr, &["x", "y", "date"])?;
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() != 3 {
            return Err(Error::Dataset(format!("line {line}: expected 3 fields, got {}", rec.len())));
        }
        out.push(ActivityRecord {
            x: parse_num(&rec[0], "x", line)?,
            y: parse_num(&rec[1], "y", line)?,
            date: parse_date(&rec[2], line)?,
        });
    }
    Ok(out)
}

/// Reads `x,y,date,effort` rows.
pub fn read_efforts(input: impl Read) -> Result<Vec<EffortRecord>> {
    let mut rdr = csv::Reader::from_reader(input);
    check_header(&mut rdr, &["x", "y", "date", "effort"])?;
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() != 4 {
            return Err(Error::Dataset(format!("line {line}: expected 4 fields, got {}", rec.len())));
        }
        let effort = parse_num(&rec[3], "effort", line)?;
        out.push(
            EffortRecord::new(parse_num(&rec[0], "x", line)?, parse_num(&rec[1], "y", line)?, parse_date(&rec[2], line)?, effort)
                .map_err(|e| e.context(format!("line {line}")))?,
        );
    }
    Ok(out)
}

pub fn write_activities(out: impl Write, records: &[ActivityRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["x", "y", "date"])?;
    for r in records {
        w.write_record([r.x.to_string(), r.y.to_string(), r.date.format(DATE_FORMAT).to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_efforts(out: impl Write, records: &[EffortRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["x", "y", "date", "effort"])?;
    for r in records {
        w.write_record([
            r.x.to_string(),
            r.y.to_string(),
            r.date.format(DATE_FORMAT).to_string(),
            r.effort.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
