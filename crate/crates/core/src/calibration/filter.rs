use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::ingest::LadderObservation;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FilterSpec {
    /// Inclusive moneyness band.
    pub moneyness_lo: f64,
    pub moneyness_hi: f64,
    /// Exclusive IV band.
    pub iv_lo: f64,
    pub iv_hi: f64,
}

impl Default for FilterSpec {
    fn default() -> Self {
        FilterSpec { moneyness_lo: 0.80, moneyness_hi: 1.20, iv_lo: 0.01, iv_hi: 2.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RejectReason {
    Moneyness,
    ZeroBid,
    IvRange,
}

impl FilterSpec {
    /// First failing check, in the order moneyness, bid, IV.
    pub fn check(&self, o: &LadderObservation) -> Option<RejectReason> {
        let m = o.moneyness();
        if !(self.moneyness_lo..=self.moneyness_hi).contains(&m) {
            Some(RejectReason::Moneyness)
        } else if o.bid <= 0.0 {
            Some(RejectReason::ZeroBid)
        } else if !(o.market_iv > self.iv_lo && o.market_iv < self.iv_hi) {
            Some(RejectReason::IvRange)
        } else {
            None
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FilterOutcome {
    pub kept: Vec<LadderObservation>,
    pub rejected: BTreeMap<RejectReason, usize>,
}

pub fn filter_observations(obs: Vec<LadderObservation>, spec: &FilterSpec) -> FilterOutcome {
    let mut rejected = BTreeMap::new();
    let kept = obs
        .into_iter()
        .filter(|o| match spec.check(o) {
            Some(r) => {
                *rejected.entry(r).or_insert(0) += 1;
                false
            }
            None => true,
        })
        .collect();
    FilterOutcome { kept, rejected }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::Parity;

    fn obs(strike: f64, bid: f64, iv: f64) -> LadderObservation {
        LadderObservation {
            ticker: "AAA".into(),
            obs_date: "2026-04-13".parse().unwrap(),
            expiry: "2026-05-15".parse().unwrap(),
            dte: 24,
            strike,
            spot: 100.0,
            bid,
            ask: bid + 0.2,
            mid: bid + 0.1,
            market_iv: iv,
            parity: Parity::Call,
            sector: None,
        }
    }

    #[test]
    fn rejection_reasons() {
        let spec = FilterSpec::default();
        assert_eq!(spec.check(&obs(100.0, 0.0, 0.3)), Some(RejectReason::ZeroBid));
        assert_eq!(spec.check(&obs(79.0, 1.0, 0.3)), Some(RejectReason::Moneyness));
        assert_eq!(spec.check(&obs(100.0, 1.0, 2.0)), Some(RejectReason::IvRange));
        assert_eq!(spec.check(&obs(100.0, 1.0, 0.01)), Some(RejectReason::IvRange));
        assert_eq!(spec.check(&obs(80.0, 1.0, 0.3)), None);
        assert_eq!(spec.check(&obs(120.0, 1.0, 1.99)), None);
    }

    #[test]
    fn idempotent_with_tally() {
        let rows = vec![obs(100.0, 0.0, 0.3), obs(79.0, 1.0, 0.3), obs(100.0, 1.0, 0.3), obs(110.0, 1.0, 0.5)];
        let once = filter_observations(rows, &FilterSpec::default());
        assert_eq!(once.kept.len(), 2);
        assert_eq!(once.rejected[&RejectReason::ZeroBid], 1);
        assert_eq!(once.rejected[&RejectReason::Moneyness], 1);
        let twice = filter_observations(once.kept.clone(), &FilterSpec::default());
        assert_eq!(twice.kept, once.kept);
        assert!(twice.rejected.is_empty());
    }
}
