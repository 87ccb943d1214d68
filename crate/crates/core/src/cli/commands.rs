use std::collections::BTreeMap;
use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::manifest::ManifestBuilder;
use super::{read_config, Command, CorpusArgs, LatticeArg, StyleArg, Versioned, CONFIG_SCHEMA_VERSION};
use crate::calibration::ingest::{ingest_ladder, read_earnings, read_sectors};
use crate::calibration::pricing::write_price_csv;
use crate::calibration::report::{overall_rmse_pct, write_rmse_csv};
use crate::calibration::tiers::BUNDLE_SCHEMA_VERSION;
use crate::calibration::{
    filter_observations, fit_tier, holdout_table, loo_date, price_error_report, rmse_report, Corpus, FilterSpec,
    GroupBy, HoldoutConfig, ModelBundle, RejectReason, Tier, TierConfig,
};
use crate::error::{ensure, Error, Result};
use crate::jumphmm::{simulate_joint, CopulaSpec, HMMParams};
use crate::lattice::{fd_greeks, price, ContractSpec, ExerciseStyle, GreekBumps, LatticeSpec};
use crate::rng::stream;
use crate::scenario::export::{
    quantile_bands, tail_overlays, write_bands_csv, write_paths_csv, write_tails_csv, ScenarioSummary,
};
use crate::scenario::{run_scenario, ScenarioConfig};
use crate::surface::EarningsCalendar;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrateConfig {
    pub schema_version: u32,
    #[serde(default)]
    pub tier: TierConfig,
    #[serde(default)]
    pub filter: FilterSpec,
}

impl Default for CalibrateConfig {
    fn default() -> Self {
        CalibrateConfig {
            schema_version: CONFIG_SCHEMA_VERSION,
            tier: TierConfig::default(),
            filter: FilterSpec::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HoldoutRunConfig {
    pub schema_version: u32,
    pub holdout: HoldoutConfig,
    #[serde(default)]
    pub tier: TierConfig,
    #[serde(default)]
    pub filter: FilterSpec,
}

pub type LooRunConfig = CalibrateConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateAsset {
    pub ticker: String,
    pub spot: f64,
    #[serde(default = "HMMParams::reference")]
    pub hmm: HMMParams,
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    pub schema_version: u32,
    pub assets: Vec<SimulateAsset>,
    /// Omitted means independent assets.
    #[serde(default)]
    pub copula: Option<CopulaSpec>,
    pub steps: usize,
    #[serde(default = "one")]
    pub n_paths: usize,
    #[serde(default)]
    pub seed: Option<u64>,
}

impl Versioned for CalibrateConfig {
    fn schema_version(&self) -> u32 {
        self.schema_version
    }
}

impl Versioned for HoldoutRunConfig {
    fn schema_version(&self) -> u32 {
        self.schema_version
    }
}

impl Versioned for SimulateConfig {
    fn schema_version(&self) -> u32 {
        self.schema_version
    }
}

pub(super) fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::Calibrate { corpus, tier, out, seed, config } => {
            calibrate(&corpus, tier, &out, seed, config.as_deref())
        }
        Command::Holdout { corpus, config, out, seed } => holdout(&corpus, &config, &out, seed),
        Command::Loo { corpus, date, config, out, seed } => loo(&corpus, date, config.as_deref(), &out, seed),
        Command::PriceReport { corpus, model, date, lattice, steps, out } => {
            price_report(&corpus, &model, date, lattice_spec(lattice, steps), &out)
        }
        Command::Simulate { config, out, seed } => simulate(&config, &out, seed),
        Command::Scenario { config, out, seed } => scenario(&config, &out, seed),
        Command::Greeks { spot, strike, dte, vol, parity, style, rate, lattice, steps, out } => {
            let style = match style {
                StyleArg::American => ExerciseStyle::American,
                StyleArg::European => ExerciseStyle::European,
            };
            let contract = ContractSpec::from_dte(strike, dte, parity, style, rate);
            greeks(spot, &contract, vol, lattice_spec(lattice, steps), out.as_deref())
        }
    }
}

fn lattice_spec(kind: LatticeArg, steps: usize) -> LatticeSpec {
    match kind {
        LatticeArg::Crr => LatticeSpec::crr(steps),
        LatticeArg::Lr => LatticeSpec::leisen_reimer(steps),
    }
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|source| Error::File { path: dir.to_path_buf(), source })
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|source| Error::File { path: path.to_path_buf(), source })
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let json = serde_json::to_string_pretty(value)? + "\n";
    std::fs::write(path, json).map_err(|source| Error::File { path: path.to_path_buf(), source })
}

#[derive(Debug, Serialize)]
struct IngestSummary {
    rows_parsed: usize,
    rows_skipped: usize,
    rows_kept: usize,
    rejected: BTreeMap<RejectReason, usize>,
}

/// Reads, filters and assembles the corpus, recording inputs.
fn load_corpus(args: &CorpusArgs, filter: &FilterSpec, m: &mut ManifestBuilder) -> Result<(Corpus, IngestSummary)> {
    let sectors = read_sectors(&args.sectors)?;
    m.input(&args.sectors);
    let ingest = ingest_ladder(&args.ladder, Some(&sectors))?;
    m.input(&args.ladder);
    let calendar = match &args.earnings {
        Some(p) => {
            m.input(p);
            read_earnings(p)?
        }
        None => EarningsCalendar::default(),
    };
    let rows_parsed = ingest.observations.len();
    let outcome = filter_observations(ingest.observations, filter);
    ensure(!outcome.kept.is_empty(), || format!("{}: no observations survive filtering", args.ladder.display()))?;
    log::info!("ladder: {rows_parsed} rows parsed, {} skipped, {} kept", ingest.skipped, outcome.kept.len());
    let summary = IngestSummary {
        rows_parsed,
        rows_skipped: ingest.skipped,
        rows_kept: outcome.kept.len(),
        rejected: outcome.rejected,
    };
    Ok((Corpus::new(outcome.kept, sectors, calendar), summary))
}

fn calibrate(args: &CorpusArgs, tier: Tier, out: &Path, seed: Option<u64>, config: Option<&Path>) -> Result<()> {
    let mut m = ManifestBuilder::new("calibrate");
    m.config(config);
    let mut cfg: CalibrateConfig = match config {
        Some(p) => read_config(p)?,
        None => CalibrateConfig::default(),
    };
    if let Some(s) = seed {
        cfg.tier.train.seed = s;
    }
    m.seed(Some(cfg.tier.train.seed));
    create_dir(out)?;
    let (corpus, summary) = load_corpus(args, &cfg.filter, &mut m)?;
    let model = fit_tier(&corpus, tier, &cfg.tier)?;
    let bundle = ModelBundle {
        schema_version: BUNDLE_SCHEMA_VERSION,
        config: cfg.tier.clone(),
        train_rmse_pct: overall_rmse_pct(&model, &corpus)?,
        model,
    };
    let model_path = out.join("model.json");
    bundle.save(&model_path)?;
    m.output(&model_path);
    for (by, name) in [
        (GroupBy::Overall, "rmse_overall.csv"),
        (GroupBy::Sector, "rmse_sector.csv"),
        (GroupBy::Ticker, "rmse_ticker.csv"),
    ] {
        let path = out.join(name);
        write_rmse_csv(&rmse_report(&bundle.model, &corpus, by)?, create(&path)?)?;
        m.output(&path);
    }
    let ingest_path = out.join("ingest.json");
    write_json(&ingest_path, &summary)?;
    m.output(&ingest_path);
    println!("{tier:?}: training RMSE {:.3}%", bundle.train_rmse_pct);
    m.finish(out)?;
    Ok(())
}

#[derive(Debug, Serialize)]
struct HoldoutCsvRow<'a> {
    configuration: &'a str,
    label: &'a str,
    n_train: usize,
    n_test: usize,
    train_rmse_pct: f64,
    test_rmse_pct: f64,
    gap_pct: f64,
}

fn holdout(args: &CorpusArgs, config: &Path, out: &Path, seed: Option<u64>) -> Result<()> {
    let mut m = ManifestBuilder::new("holdout");
    m.config(Some(config));
    let mut cfg: HoldoutRunConfig = read_config(config)?;
    if let Some(s) = seed {
        cfg.tier.train.seed = s;
    }
    m.seed(Some(cfg.tier.train.seed));
    create_dir(out)?;
    let (corpus, _) = load_corpus(args, &cfg.filter, &mut m)?;
    let table = holdout_table(&corpus, &cfg.holdout, &cfg.tier)?;
    let csv_path = out.join("holdout.csv");
    let mut w = csv::Writer::from_writer(create(&csv_path)?);
    for r in &table {
        let name = format!("{:?}", r.configuration);
        w.serialize(HoldoutCsvRow {
            configuration: &name,
            label: r.configuration.label(),
            n_train: r.n_train,
            n_test: r.n_test,
            train_rmse_pct: r.train_rmse_pct,
            test_rmse_pct: r.test_rmse_pct,
            gap_pct: r.gap_pct,
        })?;
        println!(
            "{name} ({}): train {:.3}% test {:.3}% gap {:+.3}%",
            r.configuration.label(),
            r.train_rmse_pct,
            r.test_rmse_pct,
            r.gap_pct
        );
    }
    w.flush()?;
    m.output(&csv_path);
    let json_path = out.join("holdout.json");
    write_json(&json_path, &table)?;
    m.output(&json_path);
    m.finish(out)?;
    Ok(())
}

fn loo(args: &CorpusArgs, date: NaiveDate, config: Option<&Path>, out: &Path, seed: Option<u64>) -> Result<()> {
    let mut m = ManifestBuilder::new("loo");
    m.config(config);
    let mut cfg: LooRunConfig = match config {
        Some(p) => read_config(p)?,
        None => LooRunConfig::default(),
    };
    if let Some(s) = seed {
        cfg.tier.train.seed = s;
    }
    m.seed(Some(cfg.tier.train.seed));
    create_dir(out)?;
    let (corpus, _) = load_corpus(args, &cfg.filter, &mut m)?;
    let r = loo_date(&corpus, date, &cfg.tier)?;
    let path = out.join("loo.csv");
    let mut w = csv::Writer::from_writer(create(&path)?);
    for row in r.sectors.iter().chain(std::iter::once(&r.pooled)) {
        w.serialize(row)?;
    }
    w.flush()?;
    m.output(&path);
    println!(
        "held out {}: pooled train {:.3}% test {:.3}%",
        r.held_out, r.pooled.train_rmse_pct, r.pooled.test_rmse_pct
    );
    m.finish(out)?;
    Ok(())
}

fn price_report(args: &CorpusArgs, model: &Path, date: NaiveDate, lattice: LatticeSpec, out: &Path) -> Result<()> {
    let mut m = ManifestBuilder::new("price-report");
    let bundle = ModelBundle::load(model)?;
    m.input(model);
    create_dir(out)?;
    let (corpus, _) = load_corpus(args, &FilterSpec::default(), &mut m)?;
    let report = price_error_report(&bundle.model, &corpus, date, &lattice)?;
    let csv_path = out.join("price_errors.csv");
    write_price_csv(&report, create(&csv_path)?)?;
    m.output(&csv_path);
    let ribbon_path = out.join("ribbons.json");
    write_json(&ribbon_path, &report.ribbons)?;
    m.output(&ribbon_path);
    let inside = report.rows.iter().filter(|r| r.error.abs() <= r.ribbon).count();
    println!("{date}: {} of {} contracts inside the bid-ask ribbon", inside, report.rows.len());
    m.finish(out)?;
    Ok(())
}

#[derive(Debug, Serialize)]
struct SimRow<'a> {
    path: usize,
    asset: &'a str,
    day: usize,
    price: f64,
    state: Option<usize>,
    growth: Option<f64>,
}

fn simulate(config: &Path, out: &Path, seed: Option<u64>) -> Result<()> {
    let mut m = ManifestBuilder::new("simulate");
    m.config(Some(config));
    let cfg: SimulateConfig = read_config(config)?;
    ensure(!cfg.assets.is_empty(), || "simulate needs at least one asset".into())?;
    ensure(cfg.n_paths >= 1, || "n_paths must be at least 1".into())?;
    let seed = seed.or(cfg.seed).unwrap_or(0);
    m.seed(Some(seed));
    let params: Vec<HMMParams> = cfg.assets.iter().map(|a| a.hmm.clone()).collect();
    let spots: Vec<f64> = cfg.assets.iter().map(|a| a.spot).collect();
    let copula = cfg.copula.clone().unwrap_or_else(|| CopulaSpec::independent(params.len(), None));
    create_dir(out)?;
    let path = out.join("paths.csv");
    let mut w = csv::Writer::from_writer(create(&path)?);
    for j in 0..cfg.n_paths {
        let set = simulate_joint(&params, &copula, cfg.steps, &spots, &mut stream(seed, j as u64))?;
        for (a, asset) in cfg.assets.iter().enumerate() {
            for (t, p) in set.prices[a].iter().enumerate() {
                w.serialize(SimRow {
                    path: j,
                    asset: &asset.ticker,
                    day: t,
                    price: *p,
                    state: set.states[a].get(t).copied(),
                    growth: set.growth[a].get(t).copied(),
                })?;
            }
        }
    }
    w.flush()?;
    m.output(&path);
    m.finish(out)?;
    Ok(())
}

#[derive(Debug, Serialize)]
struct StatCsvRow<'a> {
    contract: &'a str,
    name: &'a str,
    value: f64,
}

/// Output files written by `scenario`.
pub const SCENARIO_OUTPUTS: [&str; 5] = ["stats.json", "stats.csv", "paths.csv", "bands.csv", "tails.csv"];

fn scenario(config: &Path, out: &Path, seed: Option<u64>) -> Result<()> {
    let mut m = ManifestBuilder::new("scenario");
    m.config(Some(config));
    let mut cfg = ScenarioConfig::load(config)?;
    let seed = seed.or(cfg.seed).unwrap_or(0);
    cfg.seed = Some(seed);
    m.seed(Some(seed));
    let result = run_scenario(&cfg)?;
    create_dir(out)?;
    let summary = ScenarioSummary::build(&result, seed)?;
    let paths: Vec<PathBuf> = SCENARIO_OUTPUTS.iter().map(|f| out.join(f)).collect();
    std::fs::write(&paths[0], summary.to_json()?).map_err(|source| Error::File { path: paths[0].clone(), source })?;
    let mut w = csv::Writer::from_writer(create(&paths[1])?);
    for c in &summary.contracts {
        for r in &c.rows {
            w.serialize(StatCsvRow { contract: &c.contract, name: &r.name, value: r.value })?;
        }
    }
    w.flush()?;
    write_paths_csv(&result, create(&paths[2])?)?;
    write_bands_csv(&quantile_bands(&result), create(&paths[3])?)?;
    write_tails_csv(&tail_overlays(&result), create(&paths[4])?)?;
    for p in &paths {
        m.output(p);
    }
    for s in &summary.stats {
        println!(
            "{}: mean P&L {:.2}, kept {:.1}%, worst {:.2}, entry edge {:+.2}",
            s.contract,
            s.mean,
            100.0 * s.kept_fraction,
            s.worst,
            s.entry_edge
        );
    }
    m.finish(out)?;
    Ok(())
}

#[derive(Debug, Serialize)]
struct GreeksOutput {
    price: f64,
    #[serde(flatten)]
    greeks: crate::lattice::GreeksResult,
}

fn greeks(spot: f64, contract: &ContractSpec, vol: f64, lattice: LatticeSpec, out: Option<&Path>) -> Result<()> {
    let mut m = ManifestBuilder::new("greeks");
    let g = fd_greeks(spot, contract, vol, &lattice, GreekBumps::default())?;
    let output = GreeksOutput { price: price(spot, contract, vol, &lattice)?, greeks: g };
    let json = serde_json::to_string_pretty(&output)?;
    println!("{json}");
    if let Some(dir) = out {
        create_dir(dir)?;
        let path = dir.join("greeks.json");
        write_json(&path, &output)?;
        m.output(&path);
        m.finish(dir)?;
    }
    Ok(())
}
