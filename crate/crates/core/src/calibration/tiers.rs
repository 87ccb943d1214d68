//! Tiered shape calibration: one global parametric or neural shape, one
//! network per sector, or one network per qualifying ticker with sector
//! fallback.

use std::collections::BTreeMap;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::ingest::LadderObservation;
use crate::error::{ensure, Error, Result};
use crate::surface::earnings::earnings_features;
use crate::surface::{
    train_surface, EarningsCalendar, FittedSurface, InputSet, SectorMap, ShapeTemplate, SurfaceFeatures, TrainConfig,
    TrainingRow,
};

pub const UNASSIGNED_SECTOR: &str = "unassigned";
pub const BUNDLE_SCHEMA_VERSION: u32 = 1;

/// Filtered observations plus the reference data needed for features.
#[derive(Debug, Clone, Default)]
pub struct Corpus {
    pub observations: Vec<LadderObservation>,
    pub sectors: SectorMap,
    pub calendar: EarningsCalendar,
}

impl Corpus {
    pub fn new(observations: Vec<LadderObservation>, sectors: SectorMap, calendar: EarningsCalendar) -> Self {
        if calendar.is_empty() {
            log::warn!("empty earnings calendar; earnings features held at their maximum");
        }
        Corpus { observations, sectors, calendar }
    }

    pub fn len(&self) -> usize {
        self.observations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }

    pub fn sector_of(&self, o: &LadderObservation) -> String {
        o.sector
            .clone()
            .or_else(|| self.sectors.sector(&o.ticker).map(str::to_string))
            .unwrap_or_else(|| UNASSIGNED_SECTOR.to_string())
    }

    pub fn features(&self, o: &LadderObservation) -> SurfaceFeatures {
        let base = SurfaceFeatures::new(o.dte as f64, o.moneyness());
        if self.calendar.is_empty() {
            base
        } else {
            base.with_earnings(earnings_features(&o.ticker, o.obs_date, &self.calendar, &self.sectors))
        }
    }

    pub fn training_row(&self, o: &LadderObservation) -> TrainingRow {
        TrainingRow { ticker: o.ticker.clone(), features: self.features(o), iv: o.market_iv }
    }

    /// Same reference data, observations restricted by `keep`.
    pub fn subset(&self, keep: impl Fn(&LadderObservation) -> bool) -> Corpus {
        Corpus {
            observations: self.observations.iter().filter(|o| keep(o)).cloned().collect(),
            sectors: self.sectors.clone(),
            calendar: self.calendar.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Tier {
    Parametric,
    GlobalNn,
    SectorNn,
    PerTickerNn,
}

impl std::str::FromStr for Tier {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "parametric" => Ok(Tier::Parametric),
            "global-nn" => Ok(Tier::GlobalNn),
            "sector-nn" => Ok(Tier::SectorNn),
            "per-ticker-nn" => Ok(Tier::PerTickerNn),
            other => Err(Error::invalid(format!("unknown tier '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TierConfig {
    pub train: TrainConfig,
    /// Inputs for the global and sector networks.
    pub inputs: InputSet,
    pub hidden: usize,
    /// Observations needed for a ticker to get its own network.
    pub per_ticker_min_obs: usize,
    /// Observations needed for the wide per-ticker network.
    pub per_ticker_wide_obs: usize,
    pub per_ticker_inputs: InputSet,
    pub per_ticker_narrow_hidden: usize,
}

impl Default for TierConfig {
    fn default() -> Self {
        TierConfig {
            train: TrainConfig::default(),
            inputs: InputSet::FourInput,
            hidden: 16,
            per_ticker_min_obs: 2000,
            per_ticker_wide_obs: 5000,
            per_ticker_inputs: InputSet::TwoInput,
            per_ticker_narrow_hidden: 8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupModel {
    pub surface: FittedSurface,
    pub n_obs: usize,
    pub train_rmse: f64,
    pub best_epoch: usize,
}

/// Fitted groups plus the ticker-to-group routing table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibratedModel {
    pub tier: Tier,
    pub groups: BTreeMap<String, GroupModel>,
    pub routes: BTreeMap<String, String>,
    pub sectors: SectorMap,
}

pub fn sector_key(sector: &str) -> String {
    format!("sector:{sector}")
}

pub fn ticker_key(ticker: &str) -> String {
    format!("ticker:{ticker}")
}

pub const GLOBAL_KEY: &str = "global";

impl CalibratedModel {
    /// Group serving `ticker`: its route, else its sector, else the global
    /// group.
    pub fn group_for(&self, ticker: &str) -> Result<(&str, &GroupModel)> {
        let candidates = [
            self.routes.get(ticker).cloned(),
            self.sectors.sector(ticker).map(sector_key),
            Some(GLOBAL_KEY.to_string()),
        ];
        for key in candidates.into_iter().flatten() {
            if let Some((k, g)) = self.groups.get_key_value(&key) {
                return Ok((k.as_str(), g));
            }
        }
        Err(Error::invalid(format!("no fitted shape can serve ticker '{ticker}'")))
    }

    pub fn surface_for(&self, ticker: &str) -> Result<&FittedSurface> {
        Ok(&self.group_for(ticker)?.1.surface)
    }

    pub fn iv(&self, ticker: &str, f: &SurfaceFeatures) -> Result<f64> {
        self.surface_for(ticker)?.iv(ticker, f)
    }

    pub fn validate(&self) -> Result<()> {
        for g in self.groups.values() {
            g.surface.validate()?;
        }
        for (t, k) in &self.routes {
            ensure(self.groups.contains_key(k), || format!("ticker '{t}' routes to missing group '{k}'"))?;
        }
        Ok(())
    }
}

struct GroupJob {
    key: String,
    rows: Vec<TrainingRow>,
    template: ShapeTemplate,
}

/// Fits every group of the tier. Groups train independently and in
/// parallel; each uses the configured seed.
pub fn fit_tier(corpus: &Corpus, tier: Tier, config: &TierConfig) -> Result<CalibratedModel> {
    ensure(!corpus.is_empty(), || "cannot calibrate on an empty corpus".into())?;
    let wide = ShapeTemplate::neural(config.inputs, config.hidden);
    let mut by_sector: BTreeMap<String, Vec<TrainingRow>> = BTreeMap::new();
    let mut by_ticker: BTreeMap<String, Vec<TrainingRow>> = BTreeMap::new();
    for o in &corpus.observations {
        let row = corpus.training_row(o);
        by_sector.entry(corpus.sector_of(o)).or_default().push(row.clone());
        by_ticker.entry(o.ticker.clone()).or_default().push(row);
    }
    let all = || corpus.observations.iter().map(|o| corpus.training_row(o)).collect::<Vec<_>>();

    let mut jobs = Vec::new();
    let mut routes = BTreeMap::new();
    match tier {
        Tier::Parametric | Tier::GlobalNn => {
            let template = if tier == Tier::Parametric { ShapeTemplate::Parametric } else { wide.clone() };
            jobs.push(GroupJob { key: GLOBAL_KEY.into(), rows: all(), template });
            for t in by_ticker.keys() {
                routes.insert(t.clone(), GLOBAL_KEY.to_string());
            }
        }
        Tier::SectorNn | Tier::PerTickerNn => {
            for o in &corpus.observations {
                routes.entry(o.ticker.clone()).or_insert_with(|| sector_key(&corpus.sector_of(o)));
            }
            for (sector, rows) in by_sector {
                jobs.push(GroupJob { key: sector_key(&sector), rows, template: wide.clone() });
            }
            if tier == Tier::PerTickerNn {
                for (ticker, rows) in by_ticker {
                    let n = rows.len();
                    if n < config.per_ticker_min_obs {
                        log::info!("{ticker}: {n} observations, held on its sector shape");
                        continue;
                    }
                    let hidden =
                        if n >= config.per_ticker_wide_obs { config.hidden } else { config.per_ticker_narrow_hidden };
                    routes.insert(ticker.clone(), ticker_key(&ticker));
                    jobs.push(GroupJob {
                        key: ticker_key(&ticker),
                        rows,
                        template: ShapeTemplate::neural(config.per_ticker_inputs, hidden),
                    });
                }
            }
        }
    }

    let fitted: Vec<(String, GroupModel)> = jobs
        .par_iter()
        .map(|job| {
            let fit = train_surface(&job.rows, &job.template, &config.train)
                .map_err(|e| Error::Numerical(format!("group {}: {e}", job.key)))?;
            log::info!(
                "{}: {} rows, train RMSE {:.3}% (best epoch {})",
                job.key,
                job.rows.len(),
                100.0 * fit.train_rmse,
                fit.best_epoch
            );
            Ok((
                job.key.clone(),
                GroupModel {
                    surface: fit.surface,
                    n_obs: job.rows.len(),
                    train_rmse: fit.train_rmse,
                    best_epoch: fit.best_epoch,
                },
            ))
        })
        .collect::<Result<_>>()?;

    Ok(CalibratedModel { tier, groups: fitted.into_iter().collect(), routes, sectors: corpus.sectors.clone() })
}

/// Serialized model plus the settings that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelBundle {
    pub schema_version: u32,
    pub config: TierConfig,
    pub model: CalibratedModel,
    /// Overall training RMSE in IV percentage points.
    pub train_rmse_pct: f64,
}

impl ModelBundle {
    pub fn save(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_string_pretty(self)?;
        std::fs::write(path, json).map_err(|source| Error::File { path: path.to_path_buf(), source })
    }

    pub fn from_json(json: &str) -> Result<Self> {
        let b: ModelBundle = serde_json::from_str(json)?;
        ensure(b.schema_version == BUNDLE_SCHEMA_VERSION, || {
            format!("unsupported model bundle schema version {}", b.schema_version)
        })?;
        b.model.validate()?;
        Ok(b)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let json = std::fs::read_to_string(path).map_err(|source| Error::File { path: path.to_path_buf(), source })?;
        Self::from_json(&json)
    }
}
