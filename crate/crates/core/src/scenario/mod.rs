//! Forward simulation of path-conditional option premia.
//!
//! Each path draws a JumpHMM price path. A variance level `L_t` starts at
//! the ticker's target and reverts to it under leverage-coupled Euler
//! steps. Every contract reads its own variance as `L_t * psi(T - t, K/S_t)`,
//! so at `t = 0` it sits at its equilibrium IV, and is repriced daily on a
//! Leisen-Reimer lattice. Shorts settle against the terminal payoff.

pub mod export;
pub mod reference;
pub mod stats;

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::calibration::ModelBundle;
use crate::error::{ensure, Error, Result};
use crate::jumphmm::{simulate_path, HMMParams};
use crate::lattice::{
    fd_greeks, lr_price, ContractSpec, ExerciseStyle, GreekBumps, GreeksResult, LatticeSpec, Parity, DEFAULT_RATE,
    TRADING_DAYS_PER_YEAR,
};
use crate::rng::stream;
use crate::surface::{ShapeModel, SurfaceFeatures};
use crate::variance::{euler_step, leverage_innovation, market_mood, HestonParams};

pub use stats::{delta_rule_check, pnl_stats, tail_bins, DeltaRuleRow, PnlStats, TailBins};

pub const SCENARIO_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioContract {
    #[serde(default)]
    pub label: Option<String>,
    pub strike: f64,
    pub parity: Parity,
    /// Market mid received for the short.
    pub entry_premium: f64,
    /// Market delta for the delta-as-probability check.
    #[serde(default)]
    pub market_delta: Option<f64>,
}

impl ScenarioContract {
    pub fn name(&self) -> String {
        self.label.clone().unwrap_or_else(|| {
            let p = match self.parity {
                Parity::Call => "call",
                Parity::Put => "put",
            };
            format!("{p}_{}", self.strike)
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InlineSurface {
    pub shape: ShapeModel,
    pub theta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BundleSurface {
    /// Model bundle written by calibration, relative to the config file.
    pub model: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SurfaceSource {
    Inline(InlineSurface),
    Bundle(BundleSurface),
}

fn default_paths() -> usize {
    1000
}

fn default_lr_steps() -> usize {
    201
}

fn default_rate() -> f64 {
    DEFAULT_RATE
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub schema_version: u32,
    pub ticker: String,
    pub spot: f64,
    /// Trading days; every contract expires at the horizon.
    pub horizon: usize,
    #[serde(default = "default_paths")]
    pub n_paths: usize,
    #[serde(default = "default_lr_steps")]
    pub lr_steps: usize,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default = "HMMParams::reference")]
    pub hmm: HMMParams,
    #[serde(default)]
    pub heston: HestonParams,
    pub surface: SurfaceSource,
    pub contracts: Vec<ScenarioContract>,
    #[serde(default)]
    pub bumps: GreekBumps,
    /// Compute Greeks at every stored node.
    #[serde(default)]
    pub greeks: bool,
    #[serde(default = "default_rate")]
    pub rate: f64,
    /// Mood sensitivity of the reversion target.
    #[serde(default)]
    pub gamma: f64,
    /// Per-state multipliers on the variance level (1-based order).
    #[serde(default)]
    pub state_multipliers: Option<Vec<f64>>,
}

impl ScenarioConfig {
    pub fn from_json(json: &str) -> Result<Self> {
        let c: ScenarioConfig = serde_json::from_str(json)?;
        ensure(c.schema_version == SCENARIO_SCHEMA_VERSION, || {
            format!("unsupported scenario schema version {}", c.schema_version)
        })?;
        Ok(c)
    }

    /// Loads the config and resolves a bundle reference relative to it.
    pub fn load(path: &Path) -> Result<Self> {
        let json = std::fs::read_to_string(path).map_err(|source| Error::File { path: path.to_path_buf(), source })?;
        let mut c = Self::from_json(&json)?;
        c.resolve_surface(path.parent().unwrap_or(Path::new(".")))?;
        Ok(c)
    }

    /// Replaces a bundle reference with the ticker's shape and level.
    pub fn resolve_surface(&mut self, base: &Path) -> Result<()> {
        if let SurfaceSource::Bundle(b) = &self.surface {
            let path = if b.model.is_absolute() { b.model.clone() } else { base.join(&b.model) };
            let bundle = ModelBundle::load(&path)?;
            let surface = bundle.model.surface_for(&self.ticker)?;
            self.surface = SurfaceSource::Inline(InlineSurface {
                shape: surface.shape.clone(),
                theta: surface.theta(&self.ticker)?,
            });
        }
        Ok(())
    }

    pub fn inline_surface(&self) -> Result<&InlineSurface> {
        match &self.surface {
            SurfaceSource::Inline(s) => Ok(s),
            SurfaceSource::Bundle(_) => Err(Error::invalid("surface bundle has not been resolved")),
        }
    }

    pub fn validate(&self) -> Result<()> {
        ensure(self.horizon >= 1, || "horizon must be at least one day".into())?;
        ensure(self.n_paths >= 1, || "n_paths must be at least 1".into())?;
        ensure(self.spot.is_finite() && self.spot > 0.0, || format!("spot must be positive, got {}", self.spot))?;
        ensure(!self.contracts.is_empty(), || "scenario needs at least one contract".into())?;
        for c in &self.contracts {
            ensure(c.strike.is_finite() && c.strike > 0.0, || format!("strike must be positive, got {}", c.strike))?;
            ensure(c.entry_premium.is_finite() && c.entry_premium >= 0.0, || {
                format!("entry premium must be non-negative, got {}", c.entry_premium)
            })?;
        }
        ensure(self.rate.is_finite(), || "rate must be finite".into())?;
        ensure(self.gamma.is_finite() && self.gamma >= 0.0, || "gamma must be non-negative".into())?;
        if let Some(m) = &self.state_multipliers {
            ensure(m.len() == self.hmm.n_states && m.iter().all(|x| x.is_finite() && *x > 0.0), || {
                format!("state_multipliers needs {} positive entries", self.hmm.n_states)
            })?;
        }
        LatticeSpec::leisen_reimer(self.lr_steps).validate()?;
        self.hmm.validate()?;
        self.heston.validate()?;
        let s = self.inline_surface()?;
        ensure(s.theta.is_finite() && s.theta > 0.0, || format!("theta must be positive, got {}", s.theta))?;
        s.shape.validate()
    }

    fn contract_spec(&self, c: &ScenarioContract, day: usize) -> ContractSpec {
        ContractSpec {
            strike: c.strike,
            tau: (self.horizon - day) as f64 / TRADING_DAYS_PER_YEAR,
            parity: c.parity,
            style: ExerciseStyle::American,
            rate: self.rate,
            dividend: 0.0,
        }
    }

    /// Reversion target of the level process in a given state.
    fn level_target(&self, theta: f64, state: usize) -> Result<f64> {
        let mult = self.state_multipliers.as_ref().map_or(1.0, |m| m[state - 1]);
        let mood = market_mood(&[state], self.hmm.n_states, self.hmm.n_tail)?;
        Ok(theta * mult * (1.0 + self.gamma * mood))
    }
}

/// Volatility bumps valid at `sigma`: the vega bump shrinks to `sigma / 2`
/// when the configured one would cross zero.
pub fn bumps_at(bumps: GreekBumps, sigma: f64) -> GreekBumps {
    if sigma - bumps.vol_abs > 0.0 {
        bumps
    } else {
        GreekBumps { vol_abs: (0.5 * sigma).max(f64::MIN_POSITIVE), ..bumps }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContractPath {
    /// IV on days `0..T`.
    pub sigma: Vec<f64>,
    /// Lattice fair value on days `0..T`, then the terminal payoff.
    pub price: Vec<f64>,
    pub greeks: Option<Vec<GreeksResult>>,
    pub payoff: f64,
    /// Short P&L: entry premium minus terminal payoff.
    pub pnl: f64,
}

impl ContractPath {
    /// Short position marked to model: entry premium minus fair value.
    pub fn mark_to_model(&self, entry: f64) -> Vec<f64> {
        self.price.iter().map(|p| entry - p).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathRecord {
    pub spot: Vec<f64>,
    /// Variance level `L_t`, days `0..=T`.
    pub level: Vec<f64>,
    pub states: Vec<usize>,
    /// Unit-variance return innovations.
    pub z_s: Vec<f64>,
    /// Variance innovations.
    pub z_v: Vec<f64>,
    pub contracts: Vec<ContractPath>,
}

impl PathRecord {
    pub fn terminal_spot(&self) -> f64 {
        *self.spot.last().expect("non-empty path")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioResult {
    pub ticker: String,
    pub horizon: usize,
    pub contracts: Vec<ScenarioContract>,
    /// Model fair value at entry, per contract.
    pub model_p0: Vec<f64>,
    pub paths: Vec<PathRecord>,
}

fn simulate_one(config: &ScenarioConfig, surface: &InlineSurface, seed: u64, j: usize) -> Result<PathRecord> {
    let horizon = config.horizon;
    let mut rng = stream(seed, j as u64);
    let hmm_path = simulate_path(&config.hmm, horizon, config.spot, &mut rng)?;
    let normal = rand_distr::StandardNormal;
    let z_perp: Vec<f64> = (0..horizon).map(|_| rand::Rng::sample(&mut rng, normal)).collect();
    let lattice = LatticeSpec::leisen_reimer(config.lr_steps);

    let mut level = Vec::with_capacity(horizon + 1);
    level.push(config.level_target(surface.theta, hmm_path.states[0])?);
    let mut z_v = Vec::with_capacity(horizon);
    for t in 0..horizon {
        let target = config.level_target(surface.theta, hmm_path.states[t])?;
        let zv = leverage_innovation(config.heston.rho, hmm_path.innovations[t], z_perp[t]);
        z_v.push(zv);
        level.push(euler_step(level[t], target, &config.heston, zv));
    }

    let mut contracts = Vec::with_capacity(config.contracts.len());
    for c in &config.contracts {
        let mut sigma = Vec::with_capacity(horizon);
        let mut price = Vec::with_capacity(horizon + 1);
        let mut greeks = config.greeks.then(|| Vec::with_capacity(horizon));
        for (t, (&s, &lvl)) in hmm_path.prices.iter().zip(&level).take(horizon).enumerate() {
            let f = SurfaceFeatures::new((horizon - t) as f64, c.strike / s);
            let sig = (lvl.max(0.0) * surface.shape.psi(&f)).sqrt();
            let spec = config.contract_spec(c, t);
            let wrap = |e: Error| Error::Scenario { path: j, day: t, source: Box::new(e) };
            price.push(lr_price(s, &spec, sig, config.lr_steps).map_err(wrap)?);
            if let Some(g) = greeks.as_mut() {
                g.push(fd_greeks(s, &spec, sig, &lattice, bumps_at(config.bumps, sig)).map_err(wrap)?);
            }
            sigma.push(sig);
        }
        let payoff = c.parity.payoff(hmm_path.prices[horizon], c.strike);
        price.push(payoff);
        contracts.push(ContractPath { sigma, price, greeks, payoff, pnl: c.entry_premium - payoff });
    }
    Ok(PathRecord { spot: hmm_path.prices, level, states: hmm_path.states, z_s: hmm_path.innovations, z_v, contracts })
}

/// Runs every path. Paths use independent streams and may run in
/// parallel; results are ordered by path index.
pub fn run_scenario(config: &ScenarioConfig) -> Result<ScenarioResult> {
    config.validate()?;
    let surface = config.inline_surface()?;
    let seed = config.seed.unwrap_or_else(|| crate::rng::seed_from_env(0));
    let paths: Vec<PathRecord> =
        (0..config.n_paths).into_par_iter().map(|j| simulate_one(config, surface, seed, j)).collect::<Result<_>>()?;
    let model_p0 = (0..config.contracts.len()).map(|k| paths[0].contracts[k].price[0]).collect();
    Ok(ScenarioResult {
        ticker: config.ticker.clone(),
        horizon: config.horizon,
        contracts: config.contracts.clone(),
        model_p0,
        paths,
    })
}

/// Greeks at every stored `(S_t, sigma_t)`, indexed `[path][contract][day]`.
pub fn greeks_along_paths(result: &ScenarioResult, config: &ScenarioConfig) -> Result<Vec<Vec<Vec<GreeksResult>>>> {
    let lattice = LatticeSpec::leisen_reimer(config.lr_steps);
    result
        .paths
        .par_iter()
        .enumerate()
        .map(|(j, p)| {
            p.contracts
                .iter()
                .zip(&config.contracts)
                .map(|(cp, c)| {
                    if let Some(g) = &cp.greeks {
                        return Ok(g.clone());
                    }
                    (0..result.horizon)
                        .map(|t| {
                            let spec = config.contract_spec(c, t);
                            fd_greeks(p.spot[t], &spec, cp.sigma[t], &lattice, bumps_at(config.bumps, cp.sigma[t]))
                                .map_err(|e| Error::Scenario { path: j, day: t, source: Box::new(e) })
                        })
                        .collect()
                })
                .collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surface::PsiBeta;

    pub(crate) fn degenerate_hmm() -> HMMParams {
        HMMParams {
            n_states: 1,
            n_tail: 0,
            bin_edges: vec![],
            mu: vec![0.0],
            sigma: vec![0.0],
            nu: 5.0,
            trans: vec![vec![1.0]],
            eps: 0.0,
            lambda: 1.0,
            p_neg: 0.52,
            drift_anchor: 0.0,
        }
    }

    fn config() -> ScenarioConfig {
        ScenarioConfig {
            schema_version: 1,
            ticker: "T".into(),
            spot: 100.0,
            horizon: 10,
            n_paths: 8,
            lr_steps: 51,
            seed: Some(3),
            hmm: HMMParams::reference(),
            heston: HestonParams::default(),
            surface: SurfaceSource::Inline(InlineSurface {
                shape: ShapeModel::Parametric { beta: PsiBeta([-0.05, -0.8, 0.02, 1.5, 0.01]) },
                theta: 0.09,
            }),
            contracts: vec![
                ScenarioContract {
                    label: None,
                    strike: 95.0,
                    parity: Parity::Put,
                    entry_premium: 1.0,
                    market_delta: Some(-0.3),
                },
                ScenarioContract {
                    label: Some("c105".into()),
                    strike: 105.0,
                    parity: Parity::Call,
                    entry_premium: 1.2,
                    market_delta: None,
                },
            ],
            bumps: GreekBumps::default(),
            greeks: false,
            rate: 0.04,
            gamma: 0.0,
            state_multipliers: None,
        }
    }

    #[test]
    fn initial_iv_is_equilibrium() {
        let c = config();
        let r = run_scenario(&c).unwrap();
        let s = c.inline_surface().unwrap();
        for (k, contract) in c.contracts.iter().enumerate() {
            let f = SurfaceFeatures::new(10.0, contract.strike / 100.0);
            let expected = (s.theta * s.shape.psi(&f)).sqrt();
            for p in &r.paths {
                assert_eq!(p.contracts[k].sigma[0], expected);
                assert_eq!(p.contracts[k].price[0], r.model_p0[k]);
            }
        }
    }

    #[test]
    fn deterministic_and_thread_independent() {
        let c = config();
        let a = run_scenario(&c).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let b = pool.install(|| run_scenario(&c).unwrap());
        assert_eq!(a, b);
    }

    #[test]
    fn degenerate_market_keeps_premium() {
        let mut c = config();
        c.hmm = degenerate_hmm();
        c.heston.sigma_v = 0.0;
        c.surface = SurfaceSource::Inline(InlineSurface { shape: ShapeModel::unit(), theta: 1e-10 });
        c.greeks = true;
        let r = run_scenario(&c).unwrap();
        for p in &r.paths {
            assert!(p.spot.iter().all(|s| *s == 100.0));
            for (k, cp) in p.contracts.iter().enumerate() {
                assert_eq!(cp.payoff, 0.0);
                assert_eq!(cp.pnl, c.contracts[k].entry_premium);
            }
        }
    }

    #[test]
    fn full_negative_leverage_mirrors_innovations() {
        let mut c = config();
        c.heston.rho = -1.0;
        let r = run_scenario(&c).unwrap();
        for p in &r.paths {
            for (zv, zs) in p.z_v.iter().zip(&p.z_s) {
                assert_eq!(*zv, -zs);
            }
        }
    }

    #[test]
    fn bumps_shrink_near_zero_vol() {
        let b = bumps_at(GreekBumps::default(), 0.004);
        assert_eq!(b.vol_abs, 0.002);
        assert_eq!(bumps_at(GreekBumps::default(), 0.2), GreekBumps::default());
    }

    #[test]
    fn unknown_config_keys_rejected() {
        let json = serde_json::to_string(&config()).unwrap();
        let mut v: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert!(ScenarioConfig::from_json(&v.to_string()).is_ok());
        v["paths"] = 5.into();
        assert!(ScenarioConfig::from_json(&v.to_string()).is_err());
    }
}
