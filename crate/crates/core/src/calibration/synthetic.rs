//! Synthetic option ladders with a known surface, for tests and fixtures.
//!
//! Market IV is `sqrt(theta_ticker * psi_sector(dte, m))`, scaled up near
//! earnings prints when an event bump is configured, plus Gaussian noise.
//! Mids are 200-step CRR American prices at that IV.

use std::collections::BTreeMap;
use std::io::Write;

use chrono::{Datelike, NaiveDate, Weekday};
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::ingest::{trading_days_between, LadderObservation};
use super::tiers::Corpus;
use crate::error::{ensure, Result};
use crate::lattice::{crr_price, ContractSpec, ExerciseStyle, Parity, DEFAULT_RATE};
use crate::rng::seeded;
use crate::surface::earnings::earnings_features;
use crate::surface::{psi_param, EarningsCalendar, PsiBeta, SectorMap};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticTicker {
    pub ticker: String,
    pub sector: String,
    #[serde(default)]
    pub is_etf: bool,
    pub theta: f64,
    pub spot: f64,
}

/// IV multiplier `1 + own * w(|e|) + peer * w(e_peer)` with
/// `w(d) = max(0, 1 - d / (window + 1))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EventBump {
    pub own: f64,
    pub peer: f64,
    pub window: f64,
}

impl EventBump {
    pub fn multiplier(&self, e: f64, e_peer: f64) -> f64 {
        let w = |d: f64| (1.0 - d.abs() / (self.window + 1.0)).max(0.0);
        1.0 + self.own * w(e) + self.peer * w(e_peer)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub tickers: Vec<SyntheticTicker>,
    pub sector_beta: BTreeMap<String, PsiBeta>,
    pub dates: Vec<NaiveDate>,
    pub dtes: Vec<u32>,
    pub moneyness: Vec<f64>,
    pub noise: f64,
    /// Half-spread as a fraction of mid at the money.
    pub spread_frac: f64,
    /// Extra half-spread per unit of `|m - 1|`, as a fraction of mid.
    pub spread_wing: f64,
    pub earnings: Vec<(String, NaiveDate)>,
    pub event: Option<EventBump>,
    pub seed: u64,
}

/// `n` weekdays after `date`.
pub fn add_weekdays(date: NaiveDate, n: u32) -> NaiveDate {
    let mut d = date;
    let mut left = n;
    while left > 0 {
        d = d.succ_opt().expect("date in range");
        if !matches!(d.weekday(), Weekday::Sat | Weekday::Sun) {
            left -= 1;
        }
    }
    d
}

/// `count` consecutive weekdays starting at `start` (or the next weekday).
pub fn weekdays_from(start: NaiveDate, count: usize) -> Vec<NaiveDate> {
    let mut d = start;
    while matches!(d.weekday(), Weekday::Sat | Weekday::Sun) {
        d = d.succ_opt().expect("date in range");
    }
    let mut out = vec![d];
    while out.len() < count {
        out.push(add_weekdays(*out.last().unwrap(), 1));
    }
    out
}

impl SyntheticSpec {
    pub fn sectors(&self) -> SectorMap {
        let mut map = SectorMap::default();
        for t in &self.tickers {
            map.insert(t.ticker.clone(), t.sector.clone(), t.is_etf);
        }
        map
    }

    pub fn calendar(&self) -> EarningsCalendar {
        let mut cal = EarningsCalendar::default();
        for (t, d) in &self.earnings {
            cal.add(t.clone(), *d);
        }
        cal
    }

    /// Noise-free IV for a ticker at given features.
    pub fn true_iv(&self, t: &SyntheticTicker, dte: f64, m: f64, e: f64, e_peer: f64) -> f64 {
        let beta = self.sector_beta.get(&t.sector).copied().unwrap_or_default();
        let base = (t.theta * psi_param(dte, m, &beta)).sqrt();
        match &self.event {
            Some(b) => base * b.multiplier(e, e_peer),
            None => base,
        }
    }

    pub fn generate(&self) -> Result<Corpus> {
        ensure(self.noise >= 0.0, || "noise must be non-negative".into())?;
        let sectors = self.sectors();
        let calendar = self.calendar();
        let mut rng = seeded(self.seed);
        let eps = Normal::new(0.0, 1.0).expect("unit normal");
        let mut obs = Vec::new();
        for date in &self.dates {
            for t in &self.tickers {
                let ef = if calendar.is_empty() {
                    crate::surface::EarningsFeatures::FAR
                } else {
                    earnings_features(&t.ticker, *date, &calendar, &sectors)
                };
                for &dte in &self.dtes {
                    let expiry = add_weekdays(*date, dte);
                    for &m in &self.moneyness {
                        for parity in [Parity::Put, Parity::Call] {
                            let strike = (t.spot * m * 100.0).round() / 100.0;
                            let mm = strike / t.spot;
                            let iv =
                                self.true_iv(t, dte as f64, mm, ef.e, ef.e_peer) + self.noise * eps.sample(&mut rng);
                            let iv = iv.max(0.02);
                            let contract = ContractSpec::from_dte(
                                strike,
                                dte as f64,
                                parity,
                                ExerciseStyle::American,
                                DEFAULT_RATE,
                            );
                            let mid = crr_price(t.spot, &contract, iv, 200)?;
                            let half = (self.spread_frac + self.spread_wing * (mm - 1.0).abs()) * mid.max(0.05);
                            let bid = (mid - half).max(0.01);
                            let ask = 2.0 * mid - bid;
                            let (bid, ask) = if ask < bid { (mid, mid) } else { (bid, ask) };
                            obs.push(LadderObservation {
                                ticker: t.ticker.clone(),
                                obs_date: *date,
                                expiry,
                                dte: trading_days_between(*date, expiry),
                                strike,
                                spot: t.spot,
                                bid,
                                ask,
                                mid: 0.5 * (bid + ask),
                                market_iv: iv,
                                parity,
                                sector: Some(t.sector.clone()),
                            });
                        }
                    }
                }
            }
        }
        Ok(Corpus { observations: obs, sectors, calendar })
    }
}

fn ticker(t: &str, sector: &str, theta: f64, spot: f64) -> SyntheticTicker {
    SyntheticTicker { ticker: t.into(), sector: sector.into(), is_etf: false, theta, spot }
}

/// Two sectors with distinct shapes, no earnings effects.
pub fn two_sector_spec(seed: u64) -> SyntheticSpec {
    SyntheticSpec {
        tickers: vec![
            ticker("AAA", "Tech", 0.12, 150.0),
            ticker("BBB", "Tech", 0.16, 80.0),
            ticker("CCC", "Energy", 0.08, 60.0),
            ticker("DDD", "Energy", 0.10, 110.0),
        ],
        sector_beta: [
            ("Tech".to_string(), PsiBeta([-0.05, -0.8, 0.02, 1.5, 0.01])),
            ("Energy".to_string(), PsiBeta([0.04, 0.6, -0.05, 4.0, -0.02])),
        ]
        .into_iter()
        .collect(),
        dates: weekdays_from(NaiveDate::from_ymd_opt(2026, 4, 14).unwrap(), 2),
        dtes: vec![3, 8, 15, 30, 60, 120],
        moneyness: (0..17).map(|i| 0.8 + 0.025 * i as f64).collect(),
        noise: 0.003,
        spread_frac: 0.04,
        spread_wing: 0.3,
        earnings: Vec::new(),
        event: None,
        seed,
    }
}

/// Eight capture dates, six for training and two for test. One print lands
/// in the training window and three in the test window, so the test split
/// is dominated by event-day rows.
pub fn event_spec(seed: u64) -> SyntheticSpec {
    let dates = weekdays_from(NaiveDate::from_ymd_opt(2026, 4, 14).unwrap(), 8);
    let beta = PsiBeta([-0.05, -0.8, 0.02, 1.5, 0.01]);
    SyntheticSpec {
        tickers: vec![
            ticker("AAA", "Tech", 0.10, 150.0),
            ticker("BBB", "Tech", 0.13, 90.0),
            ticker("CCC", "Tech", 0.09, 210.0),
            ticker("DDD", "Health", 0.07, 120.0),
            ticker("EEE", "Health", 0.11, 60.0),
            ticker("FFF", "Energy", 0.08, 70.0),
            ticker("GGG", "Energy", 0.09, 45.0),
        ],
        sector_beta: [
            ("Tech".to_string(), beta),
            ("Health".to_string(), PsiBeta([-0.03, -0.5, 0.0, 2.0, 0.0])),
            ("Energy".to_string(), PsiBeta([0.02, 0.3, -0.03, 3.0, -0.01])),
        ]
        .into_iter()
        .collect(),
        earnings: vec![
            ("AAA".into(), dates[1]),
            ("BBB".into(), dates[6]),
            ("CCC".into(), dates[7]),
            ("DDD".into(), dates[7]),
            // far outside the window
            ("FFF".into(), NaiveDate::from_ymd_opt(2026, 7, 20).unwrap()),
            ("GGG".into(), NaiveDate::from_ymd_opt(2026, 7, 27).unwrap()),
            ("EEE".into(), NaiveDate::from_ymd_opt(2026, 8, 3).unwrap()),
        ],
        dates,
        dtes: vec![2, 5, 10, 20, 40],
        moneyness: (0..9).map(|i| 0.8 + 0.05 * i as f64).collect(),
        noise: 0.004,
        spread_frac: 0.04,
        spread_wing: 0.3,
        event: Some(EventBump { own: 0.45, peer: 0.15, window: 3.0 }),
        seed,
    }
}

pub fn write_ladder_csv<W: Write>(obs: &[LadderObservation], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(super::ingest::LADDER_COLUMNS)?;
    for o in obs {
        w.write_record([
            o.ticker.clone(),
            o.obs_date.to_string(),
            o.expiry.to_string(),
            format!("{}", o.strike),
            match o.parity {
                Parity::Call => "call".into(),
                Parity::Put => "put".into(),
            },
            format!("{:.4}", o.bid),
            format!("{:.4}", o.ask),
            format!("{:.6}", o.market_iv),
            format!("{}", o.spot),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_sectors_csv<W: Write>(sectors: &SectorMap, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["ticker", "sector", "is_etf"])?;
    for (t, s) in &sectors.0 {
        w.write_record([t.as_str(), s.sector.as_str(), if s.is_etf { "true" } else { "false" }])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_earnings_csv<W: Write>(calendar: &EarningsCalendar, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["ticker", "earnings_date"])?;
    for (t, dates) in &calendar.0 {
        for d in dates {
            w.write_record([t.clone(), d.to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calibration::ingest::{parse_earnings, parse_ladder, parse_sectors};

    #[test]
    fn weekday_arithmetic() {
        let fri = NaiveDate::from_ymd_opt(2026, 4, 17).unwrap();
        assert_eq!(add_weekdays(fri, 1), NaiveDate::from_ymd_opt(2026, 4, 20).unwrap());
        assert_eq!(trading_days_between(fri, add_weekdays(fri, 17)), 17);
        let sat = NaiveDate::from_ymd_opt(2026, 4, 18).unwrap();
        assert_eq!(weekdays_from(sat, 2)[0], NaiveDate::from_ymd_opt(2026, 4, 20).unwrap());
    }

    #[test]
    fn csv_round_trip() {
        let spec = SyntheticSpec { dtes: vec![5, 20], ..two_sector_spec(1) };
        let c = spec.generate().unwrap();
        let mut buf = Vec::new();
        write_ladder_csv(&c.observations, &mut buf).unwrap();
        let mut sbuf = Vec::new();
        write_sectors_csv(&c.sectors, &mut sbuf).unwrap();
        let sectors = parse_sectors(sbuf.as_slice()).unwrap();
        assert_eq!(sectors, c.sectors);
        let back = parse_ladder(buf.as_slice(), Some(&sectors)).unwrap();
        assert_eq!(back.skipped, 0);
        assert_eq!(back.observations.len(), c.observations.len());
        for (a, b) in back.observations.iter().zip(&c.observations) {
            assert_eq!(a.dte, b.dte);
            assert_eq!(a.sector, b.sector);
            assert!((a.market_iv - b.market_iv).abs() < 1e-6);
        }
        let mut ebuf = Vec::new();
        write_earnings_csv(&event_spec(0).calendar(), &mut ebuf).unwrap();
        assert_eq!(parse_earnings(ebuf.as_slice()).unwrap(), event_spec(0).calendar());
    }

    #[test]
    fn event_bump_shape() {
        let b = EventBump { own: 0.4, peer: 0.1, window: 3.0 };
        assert_eq!(b.multiplier(30.0, 30.0), 1.0);
        assert!((b.multiplier(0.0, 30.0) - 1.4).abs() < 1e-15);
        assert_eq!(b.multiplier(-4.0, 4.0), 1.0);
    }
}
