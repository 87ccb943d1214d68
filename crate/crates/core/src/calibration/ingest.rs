//! CSV ingestion for option ladders, sector maps and earnings calendars.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::Read;
use std::path::Path;

use chrono::{Datelike, NaiveDate, Weekday};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::Parity;
use crate::surface::{EarningsCalendar, SectorMap};

pub const LADDER_COLUMNS: [&str; 9] = ["ticker", "obs_date", "expiry", "strike", "parity", "bid", "ask", "iv", "spot"];

/// One quoted option contract.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LadderObservation {
    pub ticker: String,
    pub obs_date: NaiveDate,
    pub expiry: NaiveDate,
    /// Weekdays from `obs_date` (exclusive) to `expiry` (inclusive).
    pub dte: u32,
    pub strike: f64,
    pub spot: f64,
    pub bid: f64,
    pub ask: f64,
    pub mid: f64,
    pub market_iv: f64,
    pub parity: Parity,
    pub sector: Option<String>,
}

impl LadderObservation {
    pub fn moneyness(&self) -> f64 {
        self.strike / self.spot
    }

    pub fn half_spread(&self) -> f64 {
        0.5 * (self.ask - self.bid)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct LadderIngest {
    pub observations: Vec<LadderObservation>,
    /// Rows dropped because a field failed to parse or was out of range.
    pub skipped: usize,
}

/// Weekdays in `(from, to]`, holidays ignored. Zero when `to <= from`.
pub fn trading_days_between(from: NaiveDate, to: NaiveDate) -> u32 {
    if to <= from {
        return 0;
    }
    let days = (to - from).num_days();
    let full_weeks = days / 7;
    let mut count = full_weeks * 5;
    let mut d = from + chrono::Duration::days(full_weeks * 7);
    while d < to {
        d = d.succ_opt().expect("date in range");
        if !matches!(d.weekday(), Weekday::Sat | Weekday::Sun) {
            count += 1;
        }
    }
    count as u32
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|source| Error::File { path: path.to_path_buf(), source })
}

fn column_index(headers: &csv::StringRecord, required: &[&str], what: &str) -> Result<Vec<usize>> {
    let missing: Vec<&str> =
        required.iter().filter(|c| !headers.iter().any(|h| h.trim().eq_ignore_ascii_case(c))).copied().collect();
    if !missing.is_empty() {
        return Err(Error::invalid(format!("{what} is missing required columns: {}", missing.join(", "))));
    }
    Ok(required
        .iter()
        .map(|c| headers.iter().position(|h| h.trim().eq_ignore_ascii_case(c)).expect("checked"))
        .collect())
}

fn parse_row(rec: &csv::StringRecord, idx: &[usize], sectors: Option<&SectorMap>) -> Option<LadderObservation> {
    let field = |k: usize| rec.get(idx[k]).map(str::trim);
    let num = |k: usize| field(k)?.parse::<f64>().ok().filter(|v| v.is_finite());
    let date = |k: usize| NaiveDate::parse_from_str(field(k)?, "%Y-%m-%d").ok();

    let ticker = field(0).filter(|t| !t.is_empty())?.to_string();
    let obs_date = date(1)?;
    let expiry = date(2)?;
    let strike = num(3)?;
    let parity: Parity = field(4)?.parse().ok()?;
    let bid = num(5)?;
    let ask = num(6)?;
    let iv = num(7)?;
    let spot = num(8)?;
    if strike <= 0.0 || spot <= 0.0 || bid < 0.0 || ask < bid || iv < 0.0 || expiry < obs_date {
        return None;
    }
    let sector = sectors.and_then(|s| s.sector(&ticker)).map(str::to_string);
    Some(LadderObservation {
        dte: trading_days_between(obs_date, expiry),
        mid: 0.5 * (bid + ask),
        ticker,
        obs_date,
        expiry,
        strike,
        spot,
        bid,
        ask,
        market_iv: iv,
        parity,
        sector,
    })
}

/// Parses a ladder; malformed rows are counted and skipped.
pub fn parse_ladder<R: Read>(reader: R, sectors: Option<&SectorMap>) -> Result<LadderIngest> {
    let mut rdr = csv::ReaderBuilder::new().flexible(true).from_reader(reader);
    let headers = rdr.headers()?.clone();
    if headers.is_empty() {
        return Ok(LadderIngest::default());
    }
    let idx = column_index(&headers, &LADDER_COLUMNS, "ladder")?;
    let mut out = LadderIngest::default();
    for rec in rdr.records() {
        match rec.ok().and_then(|r| parse_row(&r, &idx, sectors)) {
            Some(o) => out.observations.push(o),
            None => out.skipped += 1,
        }
    }
    Ok(out)
}

pub fn ingest_ladder(path: &Path, sectors: Option<&SectorMap>) -> Result<LadderIngest> {
    let out = parse_ladder(open(path)?, sectors)?;
    if out.skipped > 0 {
        log::warn!("{}: skipped {} malformed rows", path.display(), out.skipped);
    }
    Ok(out)
}

fn parse_bool(s: &str) -> Option<bool> {
    match s.trim().to_ascii_lowercase().as_str() {
        "true" | "1" | "yes" | "y" => Some(true),
        "false" | "0" | "no" | "n" | "" => Some(false),
        _ => None,
    }
}

/// Reads `ticker,sector,is_etf`.
pub fn parse_sectors<R: Read>(reader: R) -> Result<SectorMap> {
    let mut rdr = csv::Reader::from_reader(reader);
    let headers = rdr.headers()?.clone();
    let idx = column_index(&headers, &["ticker", "sector", "is_etf"], "sector map")?;
    let mut map = SectorMap::default();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let get = |k: usize| rec.get(idx[k]).unwrap_or("").trim();
        let is_etf = parse_bool(get(2))
            .ok_or_else(|| Error::invalid(format!("sector map row {}: bad is_etf '{}'", line + 2, get(2))))?;
        if get(0).is_empty() {
            return Err(Error::invalid(format!("sector map row {}: empty ticker", line + 2)));
        }
        map.insert(get(0), get(1), is_etf);
    }
    Ok(map)
}

pub fn read_sectors(path: &Path) -> Result<SectorMap> {
    parse_sectors(open(path)?)
}

/// Reads `ticker,earnings_date`.
pub fn parse_earnings<R: Read>(reader: R) -> Result<EarningsCalendar> {
    let mut rdr = csv::Reader::from_reader(reader);
    let headers = rdr.headers()?.clone();
    let idx = column_index(&headers, &["ticker", "earnings_date"], "earnings calendar")?;
    let mut cal = EarningsCalendar::default();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let ticker = rec.get(idx[0]).unwrap_or("").trim();
        let raw = rec.get(idx[1]).unwrap_or("").trim();
        let date = NaiveDate::parse_from_str(raw, "%Y-%m-%d")
            .map_err(|_| Error::invalid(format!("earnings row {}: bad date '{raw}'", line + 2)))?;
        cal.add(ticker, date);
    }
    Ok(cal)
}

pub fn read_earnings(path: &Path) -> Result<EarningsCalendar> {
    parse_earnings(open(path)?)
}

/// Observation counts per ticker.
pub fn counts_by_ticker(obs: &[LadderObservation]) -> BTreeMap<String, usize> {
    let mut out = BTreeMap::new();
    for o in obs {
        *out.entry(o.ticker.clone()).or_insert(0) += 1;
    }
    out
}
