//! Reference configurations with known analytic behaviour.

use super::{InlineSurface, ScenarioConfig, ScenarioContract, SurfaceSource, SCENARIO_SCHEMA_VERSION};
use crate::error::{ensure, Result};
use crate::jumphmm::HMMParams;
use crate::lattice::{
    fd_greeks, lr_price, ContractSpec, ExerciseStyle, GreekBumps, LatticeSpec, Parity, TRADING_DAYS_PER_YEAR,
};
use crate::surface::ShapeModel;
use crate::variance::HestonParams;

/// Degrees of freedom used to approximate Gaussian emissions.
pub const GAUSSIAN_NU: f64 = 100.0;

/// Single-state, driftless HMM whose daily log return has annualized
/// volatility `annual_vol`.
pub fn gbm_like_hmm(annual_vol: f64) -> HMMParams {
    let t_var = GAUSSIAN_NU / (GAUSSIAN_NU - 2.0);
    HMMParams {
        n_states: 1,
        n_tail: 0,
        bin_edges: vec![],
        mu: vec![0.0],
        sigma: vec![annual_vol / (t_var * TRADING_DAYS_PER_YEAR).sqrt()],
        nu: GAUSSIAN_NU,
        trans: vec![vec![1.0]],
        eps: 0.0,
        lambda: 1.0,
        p_neg: 0.52,
        drift_anchor: 0.0,
    }
}

/// Strike whose American lattice delta equals `target` (signed).
pub fn strike_for_delta(
    spot: f64,
    target: f64,
    parity: Parity,
    dte: f64,
    sigma: f64,
    rate: f64,
    lattice: &LatticeSpec,
) -> Result<f64> {
    ensure(target.abs() > 0.0 && target.abs() < 1.0 && target.signum() == parity.sign(), || {
        format!("target delta {target} not attainable for a {parity:?}")
    })?;
    let delta = |k: f64| -> Result<f64> {
        let c = ContractSpec::from_dte(k, dte, parity, ExerciseStyle::American, rate);
        Ok(fd_greeks(spot, &c, sigma, lattice, GreekBumps::default())?.delta)
    };
    // |delta| decreases as the strike moves out of the money
    let (mut lo, mut hi) = (0.5 * spot, 1.5 * spot);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        let d = delta(mid)?;
        let further_otm = d.abs() > target.abs();
        match (parity, further_otm) {
            (Parity::Call, true) | (Parity::Put, false) => lo = mid,
            _ => hi = mid,
        }
    }
    Ok(0.5 * (lo + hi))
}

/// GBM-like market with a flat smile, quiet variance and two 30-delta
/// shorts priced at the model's own fair value. Returns are driftless, so
/// the rate is zero to keep pricing and simulation measures aligned.
pub fn gbm_like_config(seed: u64, annual_vol: f64, horizon: usize) -> Result<ScenarioConfig> {
    let spot = 100.0;
    let lr_steps = 201;
    let lattice = LatticeSpec::leisen_reimer(lr_steps);
    let dte = horizon as f64;
    let mut contracts = Vec::new();
    for (label, parity, target) in [("put30", Parity::Put, -0.30), ("call30", Parity::Call, 0.30)] {
        let strike = strike_for_delta(spot, target, parity, dte, annual_vol, 0.0, &lattice)?;
        let spec = ContractSpec::from_dte(strike, dte, parity, ExerciseStyle::American, 0.0);
        let premium = lr_price(spot, &spec, annual_vol, lr_steps)?;
        let delta = fd_greeks(spot, &spec, annual_vol, &lattice, GreekBumps::default())?.delta;
        contracts.push(ScenarioContract {
            label: Some(label.into()),
            strike,
            parity,
            entry_premium: premium,
            market_delta: Some(delta),
        });
    }
    Ok(ScenarioConfig {
        schema_version: SCENARIO_SCHEMA_VERSION,
        ticker: "GBM".into(),
        spot,
        horizon,
        n_paths: 1000,
        lr_steps,
        seed: Some(seed),
        hmm: gbm_like_hmm(annual_vol),
        heston: HestonParams { sigma_v: 0.0, ..HestonParams::default() },
        surface: SurfaceSource::Inline(InlineSurface { shape: ShapeModel::unit(), theta: annual_vol * annual_vol }),
        contracts,
        bumps: GreekBumps::default(),
        greeks: false,
        rate: 0.0,
        gamma: 0.0,
        state_multipliers: None,
    })
}
