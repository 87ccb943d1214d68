//! Earnings-distance features.
//!
//! `e` is the signed number of calendar days from the observation date to
//! the ticker's nearest earnings print (negative once the print has
//! passed), clipped to `[-30, 30]`. `e_peer` is the smallest absolute
//! distance over same-sector equities other than the ticker, clipped to 30.
//! ETFs, and tickers absent from the calendar, take both values from the
//! whole equity universe.

use std::collections::BTreeMap;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

pub const MAX_EARNINGS_DAYS: f64 = 30.0;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SectorInfo {
    pub sector: String,
    pub is_etf: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SectorMap(pub BTreeMap<String, SectorInfo>);

impl SectorMap {
    pub fn insert(&mut self, ticker: impl Into<String>, sector: impl Into<String>, is_etf: bool) {
        self.0.insert(ticker.into(), SectorInfo { sector: sector.into(), is_etf });
    }

    pub fn get(&self, ticker: &str) -> Option<&SectorInfo> {
        self.0.get(ticker)
    }

    pub fn sector(&self, ticker: &str) -> Option<&str> {
        self.0.get(ticker).map(|s| s.sector.as_str())
    }

    pub fn is_etf(&self, ticker: &str) -> bool {
        self.0.get(ticker).is_some_and(|s| s.is_etf)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EarningsCalendar(pub BTreeMap<String, Vec<NaiveDate>>);

impl EarningsCalendar {
    pub fn add(&mut self, ticker: impl Into<String>, date: NaiveDate) {
        let dates = self.0.entry(ticker.into()).or_default();
        if let Err(at) = dates.binary_search(&date) {
            dates.insert(at, date);
        }
    }

    pub fn is_empty(&self) -> bool {
        self.0.values().all(Vec::is_empty)
    }

    /// Signed days to the nearest print; ties go to the future print.
    pub fn signed_days(&self, ticker: &str, on: NaiveDate) -> Option<i64> {
        let dates = self.0.get(ticker)?;
        dates.iter().map(|d| (*d - on).num_days()).min_by_key(|d| (d.abs(), *d < 0))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EarningsFeatures {
    pub e: f64,
    pub e_peer: f64,
}

impl EarningsFeatures {
    pub const FAR: EarningsFeatures = EarningsFeatures { e: MAX_EARNINGS_DAYS, e_peer: MAX_EARNINGS_DAYS };
}

fn is_equity(ticker: &str, calendar: &EarningsCalendar, sectors: &SectorMap) -> bool {
    !sectors.is_etf(ticker) && calendar.0.get(ticker).is_some_and(|d| !d.is_empty())
}

/// Smallest absolute distance to a print among equities other than `ticker`
/// accepted by `keep`.
fn peer_distance(
    ticker: &str,
    on: NaiveDate,
    calendar: &EarningsCalendar,
    sectors: &SectorMap,
    keep: impl Fn(&str) -> bool,
) -> Option<i64> {
    calendar
        .0
        .keys()
        .filter(|t| t.as_str() != ticker && is_equity(t, calendar, sectors) && keep(t))
        .filter_map(|t| calendar.signed_days(t, on))
        .map(i64::abs)
        .min()
}

fn clip_abs(d: Option<i64>) -> f64 {
    d.map_or(MAX_EARNINGS_DAYS, |d| (d.abs() as f64).min(MAX_EARNINGS_DAYS))
}

pub fn earnings_features(
    ticker: &str,
    on: NaiveDate,
    calendar: &EarningsCalendar,
    sectors: &SectorMap,
) -> EarningsFeatures {
    if calendar.is_empty() {
        log::warn!("empty earnings calendar; using maximal earnings distance for {ticker}");
        return EarningsFeatures::FAR;
    }
    if is_equity(ticker, calendar, sectors) {
        let own = calendar.signed_days(ticker, on).expect("equity has prints");
        let e = (own as f64).clamp(-MAX_EARNINGS_DAYS, MAX_EARNINGS_DAYS);
        let sector = sectors.sector(ticker);
        let peer = peer_distance(ticker, on, calendar, sectors, |t| sector.is_some() && sectors.sector(t) == sector);
        EarningsFeatures { e, e_peer: clip_abs(peer) }
    } else {
        let universe = clip_abs(peer_distance(ticker, on, calendar, sectors, |_| true));
        EarningsFeatures { e: universe, e_peer: universe }
    }
}

/// True when the ticker, or an equity in its sector, prints within
/// `window` calendar days of `on`.
pub fn near_earnings(
    ticker: &str,
    on: NaiveDate,
    calendar: &EarningsCalendar,
    sectors: &SectorMap,
    window: i64,
) -> bool {
    let own = calendar.signed_days(ticker, on).is_some_and(|d| d.abs() <= window);
    let sector = sectors.sector(ticker);
    let peer = sector.is_some()
        && peer_distance(ticker, on, calendar, sectors, |t| sectors.sector(t) == sector).is_some_and(|d| d <= window);
    own || peer
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(s: &str) -> NaiveDate {
        s.parse().unwrap()
    }

    fn fixture() -> (EarningsCalendar, SectorMap) {
        let mut sectors = SectorMap::default();
        sectors.insert("AAA", "Tech", false);
        sectors.insert("BBB", "Tech", false);
        sectors.insert("CCC", "Energy", false);
        sectors.insert("SPY", "ETF", true);
        let mut cal = EarningsCalendar::default();
        cal.add("AAA", d("2026-04-20"));
        cal.add("BBB", d("2026-05-20"));
        cal.add("CCC", d("2026-04-12"));
        (cal, sectors)
    }

    #[test]
    fn own_print_today_is_zero() {
        let (cal, sectors) = fixture();
        let f = earnings_features("AAA", d("2026-04-20"), &cal, &sectors);
        assert_eq!(f.e, 0.0);
    }

    #[test]
    fn peer_print_today_zeroes_peer_feature() {
        let (cal, sectors) = fixture();
        let f = earnings_features("BBB", d("2026-04-20"), &cal, &sectors);
        assert_eq!(f.e_peer, 0.0);
        assert_eq!(f.e, 30.0);
    }

    #[test]
    fn far_print_is_clipped() {
        let (cal, sectors) = fixture();
        let f = earnings_features("BBB", d("2026-04-05"), &cal, &sectors);
        assert_eq!(f.e, 30.0);
        let f = earnings_features("AAA", d("2026-06-10"), &cal, &sectors);
        assert_eq!(f.e, -30.0);
    }

    #[test]
    fn passed_print_is_negative() {
        let (cal, sectors) = fixture();
        let f = earnings_features("CCC", d("2026-04-15"), &cal, &sectors);
        assert_eq!(f.e, -3.0);
        // no energy peers
        assert_eq!(f.e_peer, 30.0);
    }

    #[test]
    fn ties_prefer_future_print() {
        let mut cal = EarningsCalendar::default();
        cal.add("AAA", d("2026-04-10"));
        cal.add("AAA", d("2026-04-20"));
        assert_eq!(cal.signed_days("AAA", d("2026-04-15")), Some(5));
    }

    #[test]
    fn etf_uses_equity_universe() {
        let (cal, sectors) = fixture();
        let f = earnings_features("SPY", d("2026-04-14"), &cal, &sectors);
        // CCC printed two days earlier
        assert_eq!(f, EarningsFeatures { e: 2.0, e_peer: 2.0 });
        // unknown ticker is treated like an ETF
        let g = earnings_features("ZZZ", d("2026-04-14"), &cal, &sectors);
        assert_eq!(g, f);
    }

    #[test]
    fn empty_calendar_gives_far_features() {
        let (_, sectors) = fixture();
        let f = earnings_features("AAA", d("2026-04-14"), &EarningsCalendar::default(), &sectors);
        assert_eq!(f, EarningsFeatures::FAR);
    }

    #[test]
    fn exclusion_window_covers_own_and_peer() {
        let (cal, sectors) = fixture();
        assert!(near_earnings("AAA", d("2026-04-17"), &cal, &sectors, 3));
        assert!(near_earnings("BBB", d("2026-04-23"), &cal, &sectors, 3));
        assert!(!near_earnings("BBB", d("2026-04-24"), &cal, &sectors, 3));
        assert!(!near_earnings("SPY", d("2026-04-20"), &cal, &sectors, 3));
    }
}
