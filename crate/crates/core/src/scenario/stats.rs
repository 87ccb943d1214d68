//! Terminal P&L summaries, the delta-as-probability check and tail sets.

use serde::{Deserialize, Serialize};

use super::ScenarioResult;
use crate::error::{ensure, Result};
use crate::stats::{mean, median, quantile, std_dev};

/// Row names of the P&L summary table, in display order.
pub const PNL_ROW_NAMES: [&str; 10] = [
    "Strike K",
    "Market mid (entry premium)",
    "Model t=0 fair value",
    "Entry edge (model - market)",
    "Mean P&L",
    "Median P&L",
    "Std P&L",
    "5%-tile P&L",
    "Worst-case P&L",
    "Premium kept in full",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PnlStats {
    pub contract: String,
    pub strike: f64,
    pub entry_premium: f64,
    pub model_p0: f64,
    pub entry_edge: f64,
    pub mean: f64,
    pub median: f64,
    pub std: f64,
    pub p5: f64,
    pub worst: f64,
    /// Fraction of paths whose terminal payoff is exactly zero.
    pub kept_fraction: f64,
}

impl PnlStats {
    /// `(row name, value)` pairs in display order.
    pub fn rows(&self) -> Vec<(&'static str, f64)> {
        let values = [
            self.strike,
            self.entry_premium,
            self.model_p0,
            self.entry_edge,
            self.mean,
            self.median,
            self.std,
            self.p5,
            self.worst,
            self.kept_fraction,
        ];
        PNL_ROW_NAMES.into_iter().zip(values).collect()
    }
}

/// Summary of raw short P&L values.
pub fn summarize(contract: &str, strike: f64, entry: f64, model_p0: f64, pnl: &[f64], payoffs: &[f64]) -> PnlStats {
    let kept = payoffs.iter().filter(|p| **p == 0.0).count();
    PnlStats {
        contract: contract.to_string(),
        strike,
        entry_premium: entry,
        model_p0,
        entry_edge: model_p0 - entry,
        mean: mean(pnl),
        median: median(pnl),
        std: std_dev(pnl),
        p5: quantile(pnl, 0.05),
        worst: pnl.iter().copied().fold(f64::INFINITY, f64::min),
        kept_fraction: kept as f64 / payoffs.len() as f64,
    }
}

/// Per-contract terminal P&L statistics. `entry_premiums` overrides the
/// configured premiums when given.
pub fn pnl_stats(result: &ScenarioResult, entry_premiums: Option<&[f64]>) -> Result<Vec<PnlStats>> {
    let n = result.contracts.len();
    if let Some(e) = entry_premiums {
        ensure(e.len() == n, || format!("expected {n} entry premiums, got {}", e.len()))?;
    }
    ensure(!result.paths.is_empty(), || "scenario has no paths".into())?;
    Ok((0..n)
        .map(|k| {
            let c = &result.contracts[k];
            let entry = entry_premiums.map_or(c.entry_premium, |e| e[k]);
            let payoffs: Vec<f64> = result.paths.iter().map(|p| p.contracts[k].payoff).collect();
            let pnl: Vec<f64> = payoffs.iter().map(|p| entry - p).collect();
            summarize(&c.name(), c.strike, entry, result.model_p0[k], &pnl, &payoffs)
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaRuleRow {
    pub contract: String,
    pub market_delta: f64,
    /// `1 - |delta|`.
    pub predicted_kept: f64,
    pub simulated_kept: f64,
    /// `simulated - predicted`.
    pub deviation: f64,
}

pub fn predicted_kept(delta: f64) -> f64 {
    1.0 - delta.abs()
}

/// Compares simulated premium-kept fractions with `1 - |delta|`.
pub fn delta_rule_check(result: &ScenarioResult, deltas: &[f64]) -> Result<Vec<DeltaRuleRow>> {
    let n = result.contracts.len();
    ensure(deltas.len() == n, || format!("expected {n} deltas, got {}", deltas.len()))?;
    ensure(deltas.iter().all(|d| d.is_finite() && d.abs() <= 1.0), || "deltas must lie in [-1, 1]".into())?;
    let stats = pnl_stats(result, None)?;
    Ok(stats
        .iter()
        .zip(deltas)
        .map(|(s, d)| {
            let predicted = predicted_kept(*d);
            DeltaRuleRow {
                contract: s.contract.clone(),
                market_delta: *d,
                predicted_kept: predicted,
                simulated_kept: s.kept_fraction,
                deviation: s.kept_fraction - predicted,
            }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TailBins {
    /// Bottom 5% of paths by terminal price.
    pub worst: Vec<usize>,
    /// Top 5% of paths by terminal price; used for statistics.
    pub top_stats: Vec<usize>,
    /// Top 5% without the most extreme 1%; used for overlays.
    pub top_overlay: Vec<usize>,
}

/// Path index sets by terminal price. Ties sort by path index.
pub fn tail_bins(terminal: &[f64]) -> TailBins {
    let n = terminal.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|a, b| terminal[*a].total_cmp(&terminal[*b]).then(a.cmp(b)));
    let five = n * 5 / 100;
    let one = n / 100;
    TailBins {
        worst: order[..five].to_vec(),
        top_stats: order[n - five..].to_vec(),
        top_overlay: order[n - five..n - one].to_vec(),
    }
}

impl ScenarioResult {
    pub fn terminal_spots(&self) -> Vec<f64> {
        self.paths.iter().map(|p| p.terminal_spot()).collect()
    }

    pub fn tail_bins(&self) -> TailBins {
        tail_bins(&self.terminal_spots())
    }

    /// Mean short P&L of contract `k` over a set of paths.
    pub fn mean_pnl_over(&self, k: usize, paths: &[usize]) -> f64 {
        let v: Vec<f64> = paths.iter().map(|&j| self.paths[j].contracts[k].pnl).collect();
        mean(&v)
    }
}
