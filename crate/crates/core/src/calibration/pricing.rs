//! Dollar pricing errors against market mids, with a bid-ask ribbon built
//! from binned median half-spreads.

use std::collections::BTreeMap;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::tiers::{CalibratedModel, Corpus};
use crate::error::{ensure, Result};
use crate::lattice::{price, ContractSpec, ExerciseStyle, LatticeSpec, Parity, DEFAULT_RATE};
use crate::stats::median;

pub const RIBBON_BINS: usize = 12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriceErrorRow {
    pub ticker: String,
    pub strike: f64,
    pub dte: u32,
    pub parity: Parity,
    pub moneyness: f64,
    pub mid: f64,
    pub half_spread: f64,
    pub market_iv: f64,
    pub model_iv: f64,
    pub model_price: f64,
    /// Lattice price at the market IV.
    pub market_iv_price: f64,
    /// `model_price - mid`.
    pub error: f64,
    /// `market_iv_price - mid`; near zero when the lattice matches the quote.
    pub reference_error: f64,
    /// Ribbon half-width at this contract's moneyness.
    pub ribbon: f64,
}

/// Median half-spread in equal-width moneyness bins, linearly interpolated
/// between the centres of non-empty bins and held flat beyond them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ribbon {
    pub centers: Vec<f64>,
    pub medians: Vec<f64>,
}

impl Ribbon {
    pub fn build(moneyness: &[f64], half_spreads: &[f64], bins: usize) -> Result<Ribbon> {
        ensure(!moneyness.is_empty() && moneyness.len() == half_spreads.len(), || {
            "ribbon needs matching, non-empty inputs".into()
        })?;
        ensure(bins >= 1, || "ribbon needs at least one bin".into())?;
        let lo = moneyness.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = moneyness.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let width = (hi - lo) / bins as f64;
        let mut buckets = vec![Vec::new(); bins];
        for (m, h) in moneyness.iter().zip(half_spreads) {
            let b = if width > 0.0 { (((m - lo) / width) as usize).min(bins - 1) } else { 0 };
            buckets[b].push(*h);
        }
        let mut centers = Vec::new();
        let mut medians = Vec::new();
        for (b, vals) in buckets.iter().enumerate() {
            if !vals.is_empty() {
                centers.push(lo + (b as f64 + 0.5) * width);
                medians.push(median(vals));
            }
        }
        Ok(Ribbon { centers, medians })
    }

    pub fn at(&self, m: f64) -> f64 {
        let n = self.centers.len();
        if m <= self.centers[0] {
            return self.medians[0];
        }
        if m >= self.centers[n - 1] {
            return self.medians[n - 1];
        }
        let i = self.centers.partition_point(|c| *c <= m);
        let (x0, x1) = (self.centers[i - 1], self.centers[i]);
        let (y0, y1) = (self.medians[i - 1], self.medians[i]);
        y0 + (y1 - y0) * (m - x0) / (x1 - x0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriceReport {
    pub date: NaiveDate,
    pub rows: Vec<PriceErrorRow>,
    /// One ribbon per ticker panel.
    pub ribbons: BTreeMap<String, Ribbon>,
}

/// Reprices every contract quoted on `date` as an American option at the
/// model IV and at the market IV.
pub fn price_error_report(
    model: &CalibratedModel,
    corpus: &Corpus,
    date: NaiveDate,
    lattice: &LatticeSpec,
) -> Result<PriceReport> {
    lattice.validate()?;
    let day = corpus.subset(|o| o.obs_date == date);
    ensure(!day.is_empty(), || format!("no observations on {date}"))?;

    let mut panels: BTreeMap<String, (Vec<f64>, Vec<f64>)> = BTreeMap::new();
    for o in &day.observations {
        let p = panels.entry(o.ticker.clone()).or_default();
        p.0.push(o.moneyness());
        p.1.push(o.half_spread());
    }
    let ribbons: BTreeMap<String, Ribbon> =
        panels.into_iter().map(|(t, (m, h))| Ok((t, Ribbon::build(&m, &h, RIBBON_BINS)?))).collect::<Result<_>>()?;

    let rows = day
        .observations
        .iter()
        .map(|o| {
            let contract =
                ContractSpec::from_dte(o.strike, o.dte as f64, o.parity, ExerciseStyle::American, DEFAULT_RATE);
            let model_iv = model.iv(&o.ticker, &day.features(o))?;
            let model_price = price(o.spot, &contract, model_iv, lattice)?;
            let market_iv_price = price(o.spot, &contract, o.market_iv, lattice)?;
            Ok(PriceErrorRow {
                ticker: o.ticker.clone(),
                strike: o.strike,
                dte: o.dte,
                parity: o.parity,
                moneyness: o.moneyness(),
                mid: o.mid,
                half_spread: o.half_spread(),
                market_iv: o.market_iv,
                model_iv,
                model_price,
                market_iv_price,
                error: model_price - o.mid,
                reference_error: market_iv_price - o.mid,
                ribbon: ribbons[&o.ticker].at(o.moneyness()),
            })
        })
        .collect::<Result<_>>()?;
    Ok(PriceReport { date, rows, ribbons })
}

pub fn write_price_csv<W: std::io::Write>(report: &PriceReport, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in &report.rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}
