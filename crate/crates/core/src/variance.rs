//! Mean-reverting variance with a time-varying target.
//!
//! The target is `theta(i, t) = level(i, s_t) * (1 + gamma * M_t) * psi(...)`
//! where `M_t` is the share of tickers sitting in tail regimes. The process
//! is stepped by explicit Euler with a reflecting boundary at zero.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{ensure, Error, Result};
use crate::jumphmm::is_tail_state;
use crate::lattice::TRADING_DAYS_PER_YEAR;
use crate::surface::{FittedSurface, ShapeModel, SurfaceFeatures};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HestonParams {
    pub kappa: f64,
    pub sigma_v: f64,
    pub rho: f64,
    pub dt: f64,
}

impl Default for HestonParams {
    fn default() -> Self {
        HestonParams { kappa: 2.0, sigma_v: 0.5, rho: -0.6, dt: 1.0 / TRADING_DAYS_PER_YEAR }
    }
}

impl HestonParams {
    pub fn validate(&self) -> Result<()> {
        ensure(self.kappa.is_finite() && self.kappa > 0.0, || format!("kappa must be positive, got {}", self.kappa))?;
        ensure(self.sigma_v.is_finite() && self.sigma_v >= 0.0, || {
            format!("sigma_v must be non-negative, got {}", self.sigma_v)
        })?;
        ensure(self.rho.is_finite() && self.rho.abs() <= 1.0, || format!("rho must lie in [-1, 1], got {}", self.rho))?;
        ensure(self.dt.is_finite() && self.dt > 0.0, || format!("dt must be positive, got {}", self.dt))?;
        ensure(self.kappa * self.dt < 1.0, || {
            format!("kappa * dt must be below 1 for stable reversion, got {}", self.kappa * self.dt)
        })
    }
}

/// Share of tickers in tail states, in `[0, 1]`.
pub fn market_mood(states: &[usize], n_states: usize, n_tail: usize) -> Result<f64> {
    ensure(!states.is_empty(), || "market mood needs at least one ticker".into())?;
    ensure(states.iter().all(|&s| (1..=n_states).contains(&s)), || format!("states must lie in 1..={n_states}"))?;
    let tail = states.iter().filter(|&&s| is_tail_state(s, n_states, n_tail)).count();
    Ok(tail as f64 / states.len() as f64)
}

/// Variance level for a ticker: one value, or one per HMM state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ThetaLevels {
    Scalar(f64),
    PerState(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThetaSpec {
    pub levels: BTreeMap<String, ThetaLevels>,
    #[serde(default)]
    pub gamma: f64,
    /// Multipliers applied to scalar levels by state (1-based order);
    /// absent means 1 everywhere.
    #[serde(default)]
    pub state_multipliers: Option<Vec<f64>>,
    pub shape: ShapeModel,
}

impl ThetaSpec {
    /// Calibration form: scalar levels, no mood term.
    pub fn from_surface(surface: &FittedSurface) -> Self {
        ThetaSpec {
            levels: surface.theta.iter().map(|(t, v)| (t.clone(), ThetaLevels::Scalar(*v))).collect(),
            gamma: 0.0,
            state_multipliers: None,
            shape: surface.shape.clone(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        ensure(self.gamma.is_finite() && self.gamma >= 0.0, || {
            format!("gamma must be non-negative, got {}", self.gamma)
        })?;
        let positive = |v: f64| v.is_finite() && v > 0.0;
        for (t, l) in &self.levels {
            let ok = match l {
                ThetaLevels::Scalar(v) => positive(*v),
                ThetaLevels::PerState(v) => !v.is_empty() && v.iter().all(|x| positive(*x)),
            };
            ensure(ok, || format!("variance levels for '{t}' must be positive"))?;
        }
        if let Some(m) = &self.state_multipliers {
            ensure(m.iter().all(|x| positive(*x)), || "state multipliers must be positive".into())?;
        }
        self.shape.validate()
    }

    fn levels(&self, ticker: &str) -> Result<&ThetaLevels> {
        self.levels.get(ticker).ok_or_else(|| Error::invalid(format!("no variance level for ticker '{ticker}'")))
    }

    /// Scalar level `theta_i`.
    pub fn scalar_level(&self, ticker: &str) -> Result<f64> {
        match self.levels(ticker)? {
            ThetaLevels::Scalar(v) => Ok(*v),
            ThetaLevels::PerState(_) => Err(Error::invalid(format!(
                "ticker '{ticker}' has per-state levels; the calibration form needs a scalar"
            ))),
        }
    }

    /// Regime level `theta_{i,s}` for a 1-based state.
    pub fn state_level(&self, ticker: &str, state: usize) -> Result<f64> {
        ensure(state >= 1, || "states are 1-based".into())?;
        match self.levels(ticker)? {
            ThetaLevels::Scalar(v) => match &self.state_multipliers {
                None => Ok(*v),
                Some(m) => m
                    .get(state - 1)
                    .map(|k| v * k)
                    .ok_or_else(|| Error::invalid(format!("no state multiplier for state {state}"))),
            },
            ThetaLevels::PerState(v) => v
                .get(state - 1)
                .copied()
                .ok_or_else(|| Error::invalid(format!("ticker '{ticker}' has no level for state {state}"))),
        }
    }
}

/// `theta_{i,s} * (1 + gamma M) * psi(features)`.
pub fn theta_full(ticker: &str, state: usize, mood: f64, f: &SurfaceFeatures, spec: &ThetaSpec) -> Result<f64> {
    ensure((0.0..=1.0).contains(&mood), || format!("mood must lie in [0, 1], got {mood}"))?;
    f.validate()?;
    Ok(spec.state_level(ticker, state)? * (1.0 + spec.gamma * mood) * spec.shape.psi(f))
}

/// `theta_i * psi(features)`, the calibration form.
pub fn theta_cal(ticker: &str, f: &SurfaceFeatures, spec: &ThetaSpec) -> Result<f64> {
    f.validate()?;
    Ok(spec.scalar_level(ticker)? * spec.shape.psi(f))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "kebab-case")]
pub enum InitForm {
    Full { state: usize, mood: f64 },
    Calibration,
}

/// Starting variance: the contract's own mean-reversion target.
pub fn equilibrium_init(ticker: &str, f: &SurfaceFeatures, form: InitForm, spec: &ThetaSpec) -> Result<f64> {
    match form {
        InitForm::Full { state, mood } => theta_full(ticker, state, mood, f, spec),
        InitForm::Calibration => theta_cal(ticker, f, spec),
    }
}

/// `|v + kappa (theta - v) dt + sigma_v sqrt(max(v, 0)) sqrt(dt) z|`.
pub fn euler_step(v: f64, theta: f64, p: &HestonParams, z: f64) -> f64 {
    let drift = p.kappa * (theta - v) * p.dt;
    let diffusion = p.sigma_v * v.max(0.0).sqrt() * p.dt.sqrt() * z;
    (v + drift + diffusion).abs()
}

/// `rho z_s + sqrt(1 - rho^2) z_perp`.
pub fn leverage_innovation(rho: f64, z_s: f64, z_perp: f64) -> f64 {
    rho * z_s + (1.0 - rho * rho).max(0.0).sqrt() * z_perp
}

/// Iterates [`euler_step`]; returns `v_0..v_T`.
pub fn simulate_variance_path(v0: f64, thetas: &[f64], p: &HestonParams, z: &[f64]) -> Result<Vec<f64>> {
    p.validate()?;
    ensure(v0.is_finite() && v0 >= 0.0, || format!("v0 must be non-negative, got {v0}"))?;
    ensure(thetas.len() == z.len(), || format!("{} targets but {} normal draws", thetas.len(), z.len()))?;
    let mut out = Vec::with_capacity(z.len() + 1);
    out.push(v0);
    let mut v = v0;
    for (theta, z) in thetas.iter().zip(z) {
        v = euler_step(v, *theta, p, *z);
        out.push(v);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoupledVariancePath {
    pub variance: Vec<f64>,
    /// Variance innovation used at each step.
    pub z_v: Vec<f64>,
}

/// Leverage-coupled variant driven by return innovations `z_s` and
/// independent normals `z_perp`.
pub fn simulate_variance_path_coupled(
    v0: f64,
    thetas: &[f64],
    p: &HestonParams,
    z_s: &[f64],
    z_perp: &[f64],
) -> Result<CoupledVariancePath> {
    ensure(z_s.len() == z_perp.len(), || "innovation lengths differ".into())?;
    let z_v: Vec<f64> = z_s.iter().zip(z_perp).map(|(s, e)| leverage_innovation(p.rho, *s, *e)).collect();
    let variance = simulate_variance_path(v0, thetas, p, &z_v)?;
    Ok(CoupledVariancePath { variance, z_v })
}
