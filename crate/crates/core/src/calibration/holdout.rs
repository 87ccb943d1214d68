//! Temporal holdout and leave-one-date-out evaluation of the sector shape.

use std::collections::BTreeSet;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::report::{model_ivs, rmse_from_predictions, GroupBy};
use super::tiers::{fit_tier, Corpus, Tier, TierConfig};
use crate::error::{ensure, Result};
use crate::surface::earnings::near_earnings;
use crate::surface::InputSet;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum HoldoutConfiguration {
    /// Pooled rows, two-input network.
    A,
    /// Rows near an own or peer print removed from both splits, two-input.
    B,
    /// Pooled rows, four-input network with earnings features.
    C,
}

impl HoldoutConfiguration {
    pub const ALL: [HoldoutConfiguration; 3] = [Self::A, Self::B, Self::C];

    pub fn inputs(self) -> InputSet {
        match self {
            Self::A | Self::B => InputSet::TwoInput,
            Self::C => InputSet::FourInput,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Self::A => "A: pooled, 2-input",
            Self::B => "B: non-earnings, 2-input",
            Self::C => "C: earnings-aware, 4-input",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HoldoutConfig {
    pub train_dates: Vec<NaiveDate>,
    pub test_dates: Vec<NaiveDate>,
    #[serde(default = "default_exclusion")]
    pub exclusion_days: i64,
}

fn default_exclusion() -> i64 {
    3
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HoldoutResult {
    pub configuration: HoldoutConfiguration,
    pub n_train: usize,
    pub n_test: usize,
    pub train_rmse_pct: f64,
    pub test_rmse_pct: f64,
    /// Test minus train.
    pub gap_pct: f64,
}

fn split_rmse(train: &Corpus, test: &Corpus, config: &TierConfig) -> Result<(f64, f64)> {
    let model = fit_tier(train, Tier::SectorNn, config)?;
    let overall = |c: &Corpus| -> Result<f64> {
        if c.is_empty() {
            return Ok(0.0);
        }
        Ok(rmse_from_predictions(c, &model_ivs(&model, c)?, GroupBy::Overall)[0].rmse_pct)
    };
    Ok((overall(train)?, overall(test)?))
}

/// Trains the sector network on the train dates under one configuration
/// and scores both splits.
pub fn temporal_holdout(
    corpus: &Corpus,
    holdout: &HoldoutConfig,
    configuration: HoldoutConfiguration,
    config: &TierConfig,
) -> Result<HoldoutResult> {
    let train_dates: BTreeSet<NaiveDate> = holdout.train_dates.iter().copied().collect();
    let test_dates: BTreeSet<NaiveDate> = holdout.test_dates.iter().copied().collect();
    ensure(!train_dates.is_empty() && !test_dates.is_empty(), || "holdout needs train and test dates".into())?;

    let excluded = |o: &super::LadderObservation| {
        configuration == HoldoutConfiguration::B
            && near_earnings(&o.ticker, o.obs_date, &corpus.calendar, &corpus.sectors, holdout.exclusion_days)
    };
    let train = corpus.subset(|o| train_dates.contains(&o.obs_date) && !excluded(o));
    let test = corpus.subset(|o| test_dates.contains(&o.obs_date) && !excluded(o));
    ensure(!train.is_empty(), || format!("configuration {configuration:?} has no training rows"))?;

    let cfg = TierConfig { inputs: configuration.inputs(), ..config.clone() };
    let (train_rmse_pct, test_rmse_pct) = split_rmse(&train, &test, &cfg)?;
    Ok(HoldoutResult {
        configuration,
        n_train: train.len(),
        n_test: test.len(),
        train_rmse_pct,
        test_rmse_pct,
        gap_pct: test_rmse_pct - train_rmse_pct,
    })
}

/// All three configurations in order.
pub fn holdout_table(corpus: &Corpus, holdout: &HoldoutConfig, config: &TierConfig) -> Result<Vec<HoldoutResult>> {
    HoldoutConfiguration::ALL.iter().map(|c| temporal_holdout(corpus, holdout, *c, config)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LooRow {
    pub sector: String,
    pub n_train: usize,
    pub n_test: usize,
    pub train_rmse_pct: f64,
    pub test_rmse_pct: f64,
    pub gap_pct: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LooResult {
    pub held_out: NaiveDate,
    pub sectors: Vec<LooRow>,
    pub pooled: LooRow,
}

/// Sector network trained on every date but `held_out`, scored per sector.
pub fn loo_date(corpus: &Corpus, held_out: NaiveDate, config: &TierConfig) -> Result<LooResult> {
    let train = corpus.subset(|o| o.obs_date != held_out);
    let test = corpus.subset(|o| o.obs_date == held_out);
    ensure(!train.is_empty(), || format!("no training rows once {held_out} is held out"))?;
    ensure(!test.is_empty(), || format!("no observations on {held_out}"))?;
    let model = fit_tier(&train, Tier::SectorNn, config)?;
    let train_rows = rmse_from_predictions(&train, &model_ivs(&model, &train)?, GroupBy::Sector);
    let test_rows = rmse_from_predictions(&test, &model_ivs(&model, &test)?, GroupBy::Sector);
    let row = |sector: String, tr: Option<&super::RmseRow>, te: Option<&super::RmseRow>| {
        let train_rmse_pct = tr.map_or(0.0, |r| r.rmse_pct);
        let test_rmse_pct = te.map_or(0.0, |r| r.rmse_pct);
        LooRow {
            sector,
            n_train: tr.map_or(0, |r| r.n),
            n_test: te.map_or(0, |r| r.n),
            train_rmse_pct,
            test_rmse_pct,
            gap_pct: test_rmse_pct - train_rmse_pct,
        }
    };
    let sectors = train_rows
        .iter()
        .map(|tr| row(tr.group.clone(), Some(tr), test_rows.iter().find(|r| r.group == tr.group)))
        .collect();
    let pooled_train = rmse_from_predictions(&train, &model_ivs(&model, &train)?, GroupBy::Overall);
    let pooled_test = rmse_from_predictions(&test, &model_ivs(&model, &test)?, GroupBy::Overall);
    Ok(LooResult { held_out, sectors, pooled: row("pooled".into(), pooled_train.first(), pooled_test.first()) })
}
