//! CSV and JSON exports: wide per-path tables, long-format quantile bands,
//! tail overlays and the stats summary.

use std::io::Write;

use serde::{Deserialize, Serialize};

use super::stats::{delta_rule_check, pnl_stats, DeltaRuleRow, PnlStats};
use super::ScenarioResult;
use crate::error::Result;
use crate::stats::{quantile_sorted, sorted};

/// Quantiles emitted per series and day.
pub const BAND_STATS: [(&str, f64); 5] = [("p05", 0.05), ("p25", 0.25), ("median", 0.5), ("p75", 0.75), ("p95", 0.95)];

/// Wide table with one row per path and day.
pub fn write_paths_csv<W: Write>(result: &ScenarioResult, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let has_greeks = result.paths.first().is_some_and(|p| p.contracts.iter().all(|c| c.greeks.is_some()));
    let mut header = vec!["path".to_string(), "day".into(), "spot".into(), "level".into(), "state".into()];
    for c in &result.contracts {
        let n = c.name();
        header.extend([format!("sigma_{n}"), format!("price_{n}"), format!("mtm_{n}")]);
        if has_greeks {
            header.extend([format!("delta_{n}"), format!("gamma_{n}"), format!("vega_{n}")]);
        }
    }
    w.write_record(&header)?;
    let blank = String::new;
    for (j, p) in result.paths.iter().enumerate() {
        for t in 0..=result.horizon {
            let mut row = vec![
                j.to_string(),
                t.to_string(),
                p.spot[t].to_string(),
                p.level[t].to_string(),
                p.states.get(t).map_or_else(blank, |s| s.to_string()),
            ];
            for (k, cp) in p.contracts.iter().enumerate() {
                row.push(cp.sigma.get(t).map_or_else(blank, |s| s.to_string()));
                row.push(cp.price[t].to_string());
                row.push((result.contracts[k].entry_premium - cp.price[t]).to_string());
                if has_greeks {
                    let g = cp.greeks.as_ref().and_then(|g| g.get(t));
                    row.push(g.map_or_else(blank, |g| g.delta.to_string()));
                    row.push(g.map_or_else(blank, |g| g.gamma.to_string()));
                    row.push(g.map_or_else(blank, |g| g.vega.to_string()));
                }
            }
            w.write_record(&row)?;
        }
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandRow {
    pub series: String,
    pub day: usize,
    pub stat: String,
    pub value: f64,
}

fn bands_for(series: &str, days: usize, value: impl Fn(usize, usize) -> Option<f64>, n: usize, out: &mut Vec<BandRow>) {
    for t in 0..days {
        let xs: Vec<f64> = (0..n).filter_map(|j| value(j, t)).collect();
        if xs.is_empty() {
            continue;
        }
        let s = sorted(&xs);
        for (stat, q) in BAND_STATS {
            out.push(BandRow {
                series: series.to_string(),
                day: t,
                stat: stat.to_string(),
                value: quantile_sorted(&s, q),
            });
        }
    }
}

/// Cross-path quantiles per day for spot, variance level, and each
/// contract's IV, fair value and marked-to-model short P&L.
pub fn quantile_bands(result: &ScenarioResult) -> Vec<BandRow> {
    let n = result.paths.len();
    let days = result.horizon + 1;
    let p = &result.paths;
    let mut out = Vec::new();
    bands_for("spot", days, |j, t| Some(p[j].spot[t]), n, &mut out);
    bands_for("level", days, |j, t| Some(p[j].level[t]), n, &mut out);
    for (k, c) in result.contracts.iter().enumerate() {
        let name = c.name();
        bands_for(&format!("sigma:{name}"), days, |j, t| p[j].contracts[k].sigma.get(t).copied(), n, &mut out);
        bands_for(&format!("price:{name}"), days, |j, t| Some(p[j].contracts[k].price[t]), n, &mut out);
        bands_for(&format!("mtm:{name}"), days, |j, t| Some(c.entry_premium - p[j].contracts[k].price[t]), n, &mut out);
    }
    out
}

pub fn write_bands_csv<W: Write>(rows: &[BandRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailRow {
    pub set: String,
    pub path: usize,
    pub day: usize,
    pub spot: f64,
}

/// Spot paths of the worst-5% set and the top overlay set.
pub fn tail_overlays(result: &ScenarioResult) -> Vec<TailRow> {
    let bins = result.tail_bins();
    let mut out = Vec::new();
    for (set, idx) in [("worst", &bins.worst), ("top", &bins.top_overlay)] {
        for &j in idx {
            for (t, s) in result.paths[j].spot.iter().enumerate() {
                out.push(TailRow { set: set.to_string(), path: j, day: t, spot: *s });
            }
        }
    }
    out
}

pub fn write_tails_csv<W: Write>(rows: &[TailRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatRow {
    pub name: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContractSummary {
    pub contract: String,
    pub parity: crate::lattice::Parity,
    pub rows: Vec<StatRow>,
    /// Mean short P&L over the worst-5% paths by terminal price; absent
    /// when that set is empty.
    pub worst_tail_mean_pnl: Option<f64>,
    /// Mean short P&L over the top-5% paths by terminal price.
    pub top_tail_mean_pnl: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSummary {
    pub ticker: String,
    pub horizon: usize,
    pub n_paths: usize,
    pub seed: u64,
    pub contracts: Vec<ContractSummary>,
    pub stats: Vec<PnlStats>,
    pub delta_rule: Vec<DeltaRuleRow>,
}

impl ScenarioSummary {
    pub fn build(result: &ScenarioResult, seed: u64) -> Result<Self> {
        let stats = pnl_stats(result, None)?;
        let bins = result.tail_bins();
        let contracts = stats
            .iter()
            .enumerate()
            .map(|(k, s)| ContractSummary {
                contract: s.contract.clone(),
                parity: result.contracts[k].parity,
                rows: s.rows().into_iter().map(|(name, value)| StatRow { name: name.to_string(), value }).collect(),
                worst_tail_mean_pnl: (!bins.worst.is_empty()).then(|| result.mean_pnl_over(k, &bins.worst)),
                top_tail_mean_pnl: (!bins.top_stats.is_empty()).then(|| result.mean_pnl_over(k, &bins.top_stats)),
            })
            .collect();
        let with_delta: Vec<usize> =
            (0..result.contracts.len()).filter(|&k| result.contracts[k].market_delta.is_some()).collect();
        let mut delta_rule = Vec::new();
        if !with_delta.is_empty() {
            let deltas: Vec<f64> = result.contracts.iter().map(|c| c.market_delta.unwrap_or(0.0)).collect();
            let rows = delta_rule_check(result, &deltas)?;
            delta_rule = with_delta.into_iter().map(|k| rows[k].clone()).collect();
        }
        Ok(ScenarioSummary {
            ticker: result.ticker.clone(),
            horizon: result.horizon,
            n_paths: result.paths.len(),
            seed,
            contracts,
            stats,
            delta_rule,
        })
    }

    /// Value of a named row for contract `k`.
    pub fn row(&self, k: usize, name: &str) -> Option<f64> {
        self.contracts.get(k)?.rows.iter().find(|r| r.name == name).map(|r| r.value)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }
}
