//! Regenerates the CSV fixtures under `fixtures/`.
//!
//! `cargo run -p synthvol --example make_fixtures`

use std::fs::File;
use std::path::Path;

use chrono::NaiveDate;
use synthvol::calibration::synthetic::{
    event_spec, weekdays_from, write_earnings_csv, write_ladder_csv, write_sectors_csv, SyntheticSpec, SyntheticTicker,
};
use synthvol::surface::{PsiBeta, SectorMap};

const UNIVERSE: [(&str, &[&str]); 6] = [
    ("ETF", &["IWM", "QQQ", "SPY"]),
    ("Technology", &["AAPL", "AMD", "AVGO", "GOOG", "INTC", "META", "MSFT", "MU", "NVDA", "QCOM"]),
    ("Healthcare", &["ABBV", "AMGN", "BMY", "JNJ", "LLY", "MRNA", "PFE", "UNH"]),
    ("Financials", &["BAC", "GS", "JPM", "WFC"]),
    ("Retail", &["TGT", "UPS", "WMT"]),
    ("Energy", &["CVX", "OXY", "XOM"]),
];

fn universe() -> SectorMap {
    let mut map = SectorMap::default();
    for (sector, tickers) in UNIVERSE.iter() {
        for t in *tickers {
            map.insert(t.to_string(), sector.to_string(), *sector == "ETF");
        }
    }
    map
}

fn ticker(t: &str, sector: &str, theta: f64, spot: f64) -> SyntheticTicker {
    SyntheticTicker { ticker: t.into(), sector: sector.into(), is_etf: sector == "ETF", theta, spot }
}

/// Small multi-sector ladder drawn from the real ticker universe.
fn small_spec() -> SyntheticSpec {
    let dates = weekdays_from(NaiveDate::from_ymd_opt(2026, 3, 2).unwrap(), 2);
    SyntheticSpec {
        tickers: vec![
            ticker("SPY", "ETF", 0.025, 560.0),
            ticker("AAPL", "Technology", 0.06, 215.0),
            ticker("NVDA", "Technology", 0.20, 120.0),
            ticker("GS", "Financials", 0.07, 540.0),
            ticker("JPM", "Financials", 0.05, 230.0),
            ticker("XOM", "Energy", 0.05, 112.0),
        ],
        sector_beta: [
            ("ETF".to_string(), PsiBeta([-0.02, -1.6, 0.05, 3.0, 0.0])),
            ("Technology".to_string(), PsiBeta([-0.05, -0.8, 0.02, 1.5, 0.01])),
            ("Financials".to_string(), PsiBeta([-0.03, -1.1, 0.03, 2.0, 0.0])),
            ("Energy".to_string(), PsiBeta([0.02, -0.3, -0.03, 2.5, -0.01])),
        ]
        .into_iter()
        .collect(),
        earnings: vec![
            ("AAPL".into(), NaiveDate::from_ymd_opt(2026, 4, 30).unwrap()),
            ("NVDA".into(), NaiveDate::from_ymd_opt(2026, 5, 27).unwrap()),
            ("GS".into(), NaiveDate::from_ymd_opt(2026, 4, 14).unwrap()),
            ("JPM".into(), NaiveDate::from_ymd_opt(2026, 4, 14).unwrap()),
            ("XOM".into(), NaiveDate::from_ymd_opt(2026, 5, 1).unwrap()),
        ],
        dates,
        dtes: vec![5, 10, 21, 31, 63],
        moneyness: (0..9).map(|i| 0.8 + 0.05 * i as f64).collect(),
        noise: 0.003,
        spread_frac: 0.04,
        spread_wing: 0.3,
        event: None,
        seed: 20260302,
    }
}

fn write(dir: &Path, spec: &SyntheticSpec, sectors: &SectorMap) -> synthvol::Result<()> {
    std::fs::create_dir_all(dir)?;
    let corpus = spec.generate()?;
    write_ladder_csv(&corpus.observations, File::create(dir.join("ladder.csv"))?)?;
    write_sectors_csv(sectors, File::create(dir.join("sectors.csv"))?)?;
    write_earnings_csv(&corpus.calendar, File::create(dir.join("earnings.csv"))?)?;
    println!("{}: {} rows", dir.display(), corpus.observations.len());
    Ok(())
}

fn main() -> synthvol::Result<()> {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    write(&root, &small_spec(), &universe())?;
    let event = event_spec(11);
    write(&root.join("event"), &event, &event.sectors())?;
    Ok(())
}
