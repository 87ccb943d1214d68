use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::tiers::{CalibratedModel, Corpus};
use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GroupBy {
    Overall,
    Sector,
    Ticker,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RmseRow {
    pub group: String,
    pub n: usize,
    /// Root mean squared IV error in percentage points.
    pub rmse_pct: f64,
}

/// Model IV for every observation, in corpus order.
pub fn model_ivs(model: &CalibratedModel, corpus: &Corpus) -> Result<Vec<f64>> {
    corpus.observations.iter().map(|o| model.iv(&o.ticker, &corpus.features(o))).collect()
}

/// `100 * sqrt(mean((model - market)^2))` per group, sorted by group name.
pub fn rmse_from_predictions(corpus: &Corpus, predicted: &[f64], group_by: GroupBy) -> Vec<RmseRow> {
    let mut acc: BTreeMap<String, (usize, f64)> = BTreeMap::new();
    for (o, p) in corpus.observations.iter().zip(predicted) {
        let key = match group_by {
            GroupBy::Overall => "overall".to_string(),
            GroupBy::Sector => corpus.sector_of(o),
            GroupBy::Ticker => o.ticker.clone(),
        };
        let e = acc.entry(key).or_insert((0, 0.0));
        e.0 += 1;
        e.1 += (p - o.market_iv).powi(2);
    }
    acc.into_iter().map(|(group, (n, sse))| RmseRow { group, n, rmse_pct: 100.0 * (sse / n as f64).sqrt() }).collect()
}

pub fn rmse_report(model: &CalibratedModel, corpus: &Corpus, group_by: GroupBy) -> Result<Vec<RmseRow>> {
    Ok(rmse_from_predictions(corpus, &model_ivs(model, corpus)?, group_by))
}

/// Overall RMSE in percentage points; zero for an empty corpus.
pub fn overall_rmse_pct(model: &CalibratedModel, corpus: &Corpus) -> Result<f64> {
    Ok(rmse_report(model, corpus, GroupBy::Overall)?.first().map_or(0.0, |r| r.rmse_pct))
}

pub fn write_rmse_csv<W: std::io::Write>(rows: &[RmseRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["group", "n", "rmse_pct"])?;
    for r in rows {
        w.write_record([r.group.clone(), r.n.to_string(), format!("{:.6}", r.rmse_pct)])?;
    }
    w.flush()?;
    Ok(())
}
