//! Ladder ingestion, filtering, tiered shape calibration and the reports
//! used to judge it.

pub mod filter;
pub mod holdout;
pub mod ingest;
pub mod pricing;
pub mod report;
pub mod synthetic;
pub mod tiers;

pub use filter::{filter_observations, FilterOutcome, FilterSpec, RejectReason};
pub use holdout::{
    holdout_table, loo_date, temporal_holdout, HoldoutConfig, HoldoutConfiguration, HoldoutResult, LooResult,
};
pub use ingest::{ingest_ladder, parse_ladder, read_earnings, read_sectors, LadderIngest, LadderObservation};
pub use pricing::{price_error_report, PriceErrorRow, PriceReport, Ribbon};
pub use report::{rmse_report, GroupBy, RmseRow};
pub use tiers::{fit_tier, CalibratedModel, Corpus, GroupModel, ModelBundle, Tier, TierConfig};

#[cfg(test)]
mod tests {
    use super::report::rmse_from_predictions;
    use super::synthetic::two_sector_spec;
    use super::*;
    use crate::surface::TrainConfig;

    fn quick() -> TierConfig {
        TierConfig { train: TrainConfig { epochs: 300, ..TrainConfig::default() }, hidden: 8, ..TierConfig::default() }
    }

    #[test]
    fn rmse_examples() {
        let c = two_sector_spec(1).generate().unwrap();
        let exact: Vec<f64> = c.observations.iter().map(|o| o.market_iv).collect();
        assert_eq!(rmse_from_predictions(&c, &exact, GroupBy::Overall)[0].rmse_pct, 0.0);
        let shifted: Vec<f64> = exact.iter().map(|v| v + 0.01).collect();
        let r = rmse_from_predictions(&c, &shifted, GroupBy::Overall)[0].rmse_pct;
        assert!((r - 1.0).abs() < 1e-9);
    }

    #[test]
    fn overall_is_weighted_mean_of_groups() {
        let c = two_sector_spec(2).generate().unwrap();
        let pred: Vec<f64> =
            c.observations.iter().enumerate().map(|(i, o)| o.market_iv + 0.001 * (i % 7) as f64).collect();
        let overall = rmse_from_predictions(&c, &pred, GroupBy::Overall)[0].rmse_pct;
        for by in [GroupBy::Sector, GroupBy::Ticker] {
            let rows = rmse_from_predictions(&c, &pred, by);
            let n: usize = rows.iter().map(|r| r.n).sum();
            let ms: f64 = rows.iter().map(|r| r.n as f64 * r.rmse_pct.powi(2)).sum::<f64>() / n as f64;
            assert!((ms - overall * overall).abs() < 1e-9);
        }
    }

    #[test]
    fn single_sector_matches_global() {
        let mut spec = two_sector_spec(3);
        spec.tickers.retain(|t| t.sector == "Tech");
        spec.dtes = vec![5, 20, 60];
        let c = spec.generate().unwrap();
        let a = fit_tier(&c, Tier::GlobalNn, &quick()).unwrap();
        let b = fit_tier(&c, Tier::SectorNn, &quick()).unwrap();
        assert_eq!(a.groups["global"].surface, b.groups["sector:Tech"].surface);
        assert_eq!(report::overall_rmse_pct(&a, &c).unwrap(), report::overall_rmse_pct(&b, &c).unwrap());
    }

    #[test]
    fn routing_covers_every_observation() {
        let c = two_sector_spec(4).generate().unwrap();
        let cfg = TierConfig { per_ticker_min_obs: 400, per_ticker_wide_obs: 100_000, ..quick() };
        let counts = ingest::counts_by_ticker(&c.observations);
        let m = fit_tier(&c, Tier::PerTickerNn, &cfg).unwrap();
        for (t, n) in counts {
            let (key, _) = m.group_for(&t).unwrap();
            if n >= 400 {
                assert_eq!(key, format!("ticker:{t}"));
            } else {
                assert!(key.starts_with("sector:"));
            }
        }
        assert!(report::model_ivs(&m, &c).unwrap().iter().all(|v| v.is_finite()));
    }

    #[test]
    fn bundle_round_trip() {
        let c = two_sector_spec(5).generate().unwrap();
        let m = fit_tier(&c, Tier::Parametric, &quick()).unwrap();
        let bundle = ModelBundle {
            schema_version: tiers::BUNDLE_SCHEMA_VERSION,
            config: quick(),
            train_rmse_pct: report::overall_rmse_pct(&m, &c).unwrap(),
            model: m,
        };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.json");
        bundle.save(&path).unwrap();
        let back = ModelBundle::load(&path).unwrap();
        assert_eq!(back, bundle);
        assert_eq!(report::overall_rmse_pct(&back.model, &c).unwrap(), bundle.train_rmse_pct);
    }

    #[test]
    fn identical_splits_have_zero_gap() {
        let c = two_sector_spec(6).generate().unwrap();
        let dates: Vec<_> =
            c.observations.iter().map(|o| o.obs_date).collect::<std::collections::BTreeSet<_>>().into_iter().collect();
        let h = HoldoutConfig { train_dates: dates.clone(), test_dates: dates, exclusion_days: 3 };
        let r = temporal_holdout(&c, &h, HoldoutConfiguration::A, &quick()).unwrap();
        assert_eq!(r.gap_pct, 0.0);
    }

    #[test]
    fn loo_single_date_errors() {
        let mut spec = two_sector_spec(7);
        spec.dates.truncate(1);
        let c = spec.generate().unwrap();
        assert!(loo_date(&c, spec.dates[0], &quick()).is_err());
    }

    #[test]
    fn market_iv_reprices_to_reference() {
        let mut spec = two_sector_spec(8);
        spec.noise = 0.0;
        spec.dtes = vec![10, 30];
        let c = spec.generate().unwrap();
        let m = fit_tier(&c, Tier::Parametric, &quick()).unwrap();
        let r = price_error_report(&m, &c, spec.dates[0], &crate::lattice::LatticeSpec::crr(200)).unwrap();
        for row in &r.rows {
            // synthetic mids are CRR prices at the quoted IV
            assert!(row.reference_error.abs() < 1e-9, "{row:?}");
        }
    }
}
