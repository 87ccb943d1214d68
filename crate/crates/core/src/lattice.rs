//! Recombining binomial lattices for American and European options.
//!
//! Two constructions are provided: Cox-Ross-Rubinstein, used for repricing
//! calibrated ladders, and Leisen-Reimer, used wherever finite-difference
//! Greeks are taken. Every function here is pure.

use serde::{Deserialize, Serialize};

use crate::error::{ensure, Error, Result};

/// Volatilities at or below this level are treated as zero.
pub const MIN_VOL: f64 = 1e-8;

/// Default annualized risk-free rate.
pub const DEFAULT_RATE: f64 = 0.04;

pub const TRADING_DAYS_PER_YEAR: f64 = 252.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Parity {
    Call,
    Put,
}

impl Parity {
    /// +1 for calls, -1 for puts.
    pub fn sign(self) -> f64 {
        match self {
            Parity::Call => 1.0,
            Parity::Put => -1.0,
        }
    }

    pub fn payoff(self, spot: f64, strike: f64) -> f64 {
        (self.sign() * (spot - strike)).max(0.0)
    }
}

impl std::str::FromStr for Parity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "call" | "c" => Ok(Parity::Call),
            "put" | "p" => Ok(Parity::Put),
            other => Err(Error::invalid(format!("unknown parity '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExerciseStyle {
    American,
    European,
}

fn default_rate() -> f64 {
    DEFAULT_RATE
}

/// Contract terms as seen by a pricer. `tau` is in years.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContractSpec {
    pub strike: f64,
    pub tau: f64,
    pub parity: Parity,
    #[serde(default = "default_style")]
    pub style: ExerciseStyle,
    #[serde(default = "default_rate")]
    pub rate: f64,
    #[serde(default)]
    pub dividend: f64,
}

fn default_style() -> ExerciseStyle {
    ExerciseStyle::American
}

impl ContractSpec {
    pub fn american(strike: f64, tau: f64, parity: Parity, rate: f64) -> Self {
        ContractSpec { strike, tau, parity, style: ExerciseStyle::American, rate, dividend: 0.0 }
    }

    pub fn european(strike: f64, tau: f64, parity: Parity, rate: f64) -> Self {
        ContractSpec { style: ExerciseStyle::European, ..Self::american(strike, tau, parity, rate) }
    }

    /// Trading-day time to expiry, `dte / 252`.
    pub fn from_dte(strike: f64, dte: f64, parity: Parity, style: ExerciseStyle, rate: f64) -> Self {
        ContractSpec { strike, tau: dte / TRADING_DAYS_PER_YEAR, parity, style, rate, dividend: 0.0 }
    }

    pub fn with_tau(self, tau: f64) -> Self {
        ContractSpec { tau, ..self }
    }

    fn validate(&self) -> Result<()> {
        ensure(self.strike.is_finite() && self.strike > 0.0, || {
            format!("strike must be positive and finite, got {}", self.strike)
        })?;
        ensure(self.tau.is_finite() && self.tau >= 0.0, || {
            format!("tau must be finite and non-negative, got {}", self.tau)
        })?;
        ensure(self.rate.is_finite(), || format!("rate must be finite, got {}", self.rate))?;
        ensure(self.dividend.is_finite(), || format!("dividend yield must be finite, got {}", self.dividend))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LatticeKind {
    #[serde(alias = "CRR")]
    Crr,
    #[serde(alias = "LR", alias = "lr")]
    LeisenReimer,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeSpec {
    pub kind: LatticeKind,
    pub steps: usize,
}

impl LatticeSpec {
    pub const fn crr(steps: usize) -> Self {
        LatticeSpec { kind: LatticeKind::Crr, steps }
    }

    pub const fn leisen_reimer(steps: usize) -> Self {
        LatticeSpec { kind: LatticeKind::LeisenReimer, steps }
    }

    pub fn validate(&self) -> Result<()> {
        ensure(self.steps >= 2, || format!("lattice needs at least 2 steps, got {}", self.steps))?;
        if self.kind == LatticeKind::LeisenReimer && self.steps % 2 == 0 {
            return Err(Error::invalid(format!(
                "Leisen-Reimer lattice requires an odd step count, got {}",
                self.steps
            )));
        }
        Ok(())
    }
}

/// Parameters of one constructed recombining tree.
///
/// Node `j` of layer `i` sits at `spot * up^j * down^(i - j)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TreeGeometry {
    pub spot: f64,
    pub up: f64,
    pub down: f64,
    pub prob_up: f64,
    pub dt: f64,
    pub steps: usize,
}

impl TreeGeometry {
    pub fn node(&self, layer: usize, j: usize) -> f64 {
        debug_assert!(j <= layer);
        self.spot * (j as f64 * self.up.ln() + (layer - j) as f64 * self.down.ln()).exp()
    }

    pub fn terminal_nodes(&self) -> Vec<f64> {
        (0..=self.steps).map(|j| self.node(self.steps, j)).collect()
    }

    /// Fractional terminal index at which `price` falls on the log grid.
    pub fn terminal_position(&self, price: f64) -> f64 {
        let n = self.steps as f64;
        ((price / self.spot).ln() - n * self.down.ln()) / (self.up / self.down).ln()
    }
}

/// How a given input set will be valued.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Construction {
    Tree(TreeGeometry),
    /// Volatility too small for a non-degenerate tree; the forward path is deterministic.
    ZeroVol,
    /// Already at expiry.
    Expired,
}

fn validate_inputs(spot: f64, contract: &ContractSpec, sigma: f64) -> Result<f64> {
    ensure(spot.is_finite() && spot > 0.0, || format!("spot must be positive and finite, got {spot}"))?;
    contract.validate()?;
    ensure(sigma.is_finite() && sigma >= 0.0, || format!("volatility must be finite and non-negative, got {sigma}"))?;
    Ok(sigma.max(MIN_VOL))
}

/// Builds the CRR tree: `u = exp(sigma sqrt(dt))`, `d = 1/u`,
/// `p = (exp((r - q) dt) - d) / (u - d)`.
pub fn crr_construction(spot: f64, contract: &ContractSpec, sigma: f64, steps: usize) -> Result<Construction> {
    LatticeSpec::crr(steps).validate()?;
    let sigma = validate_inputs(spot, contract, sigma)?;
    if contract.tau == 0.0 {
        return Ok(Construction::Expired);
    }
    if sigma <= MIN_VOL {
        return Ok(Construction::ZeroVol);
    }
    let dt = contract.tau / steps as f64;
    let up = (sigma * dt.sqrt()).exp();
    let down = 1.0 / up;
    let growth = ((contract.rate - contract.dividend) * dt).exp();
    let prob_up = (growth - down) / (up - down);
    if !(0.0..=1.0).contains(&prob_up) {
        return Err(Error::Lattice(format!(
            "CRR risk-neutral probability {prob_up} outside [0, 1] (sigma={sigma}, dt={dt}, r={}, q={})",
            contract.rate, contract.dividend
        )));
    }
    Ok(Construction::Tree(TreeGeometry { spot, up, down, prob_up, dt, steps }))
}

/// Peizer-Pratt method-2 inversion of the binomial distribution.
///
/// For odd `n`, returns the success probability `p` such that
/// `P[Bin(n, p) >= (n + 1) / 2] ~= N(z)`:
///
/// ```text
/// h(z) = 1/2 + sign(z) * sqrt(1/4 - 1/4 * exp(-(z / (n + 1/3 + 0.1/(n + 1)))^2 * (n + 1/6)))
/// ```
pub fn peizer_pratt(z: f64, n: usize) -> f64 {
    let n = n as f64;
    let scaled = z / (n + 1.0 / 3.0 + 0.1 / (n + 1.0));
    let root = (0.25 - 0.25 * (-(scaled * scaled) * (n + 1.0 / 6.0)).exp()).max(0.0).sqrt();
    if z >= 0.0 {
        0.5 + root
    } else {
        0.5 - root
    }
}

/// Builds the Leisen-Reimer tree.
///
/// With `d1, d2` the Black-Scholes arguments, `p = h(d2)`, `p' = h(d1)`,
/// `u = exp((r - q) dt) p' / p` and `d = (exp((r - q) dt) - p u) / (1 - p)`.
/// The strike then sits at the centre of the terminal layer, between nodes
/// `(n - 1) / 2` and `(n + 1) / 2`.
pub fn lr_construction(spot: f64, contract: &ContractSpec, sigma: f64, steps: usize) -> Result<Construction> {
    LatticeSpec::leisen_reimer(steps).validate()?;
    let sigma = validate_inputs(spot, contract, sigma)?;
    if contract.tau == 0.0 {
        return Ok(Construction::Expired);
    }
    if sigma <= MIN_VOL {
        return Ok(Construction::ZeroVol);
    }
    let tau = contract.tau;
    let carry = contract.rate - contract.dividend;
    let vol_sqrt_t = sigma * tau.sqrt();
    let d1 = ((spot / contract.strike).ln() + (carry + 0.5 * sigma * sigma) * tau) / vol_sqrt_t;
    let d2 = d1 - vol_sqrt_t;
    let prob_up = peizer_pratt(d2, steps);
    let prob_star = peizer_pratt(d1, steps);
    // Extreme moneyness relative to sigma*sqrt(tau) saturates the inversion.
    let open = |p: f64| p > 0.0 && p < 1.0;
    if !open(prob_up) || !open(prob_star) {
        return Ok(Construction::ZeroVol);
    }
    let dt = tau / steps as f64;
    let growth = (carry * dt).exp();
    let up = growth * prob_star / prob_up;
    let down = (growth - prob_up * up) / (1.0 - prob_up);
    if !(down > 0.0 && up > down) {
        return Ok(Construction::ZeroVol);
    }
    Ok(Construction::Tree(TreeGeometry { spot, up, down, prob_up, dt, steps }))
}

fn zero_vol_value(spot: f64, contract: &ContractSpec, steps: usize) -> f64 {
    let carry = contract.rate - contract.dividend;
    let payoff_at = |t: f64| {
        let forward = spot * (carry * t).exp();
        (-contract.rate * t).exp() * contract.parity.payoff(forward, contract.strike)
    };
    match contract.style {
        ExerciseStyle::European => payoff_at(contract.tau),
        ExerciseStyle::American => {
            let dt = contract.tau / steps as f64;
            (0..=steps).map(|i| payoff_at(i as f64 * dt)).fold(0.0, f64::max)
        }
    }
}

fn backward_induction(tree: &TreeGeometry, contract: &ContractSpec) -> f64 {
    let n = tree.steps;
    let strike = contract.strike;
    let parity = contract.parity;
    let disc = (-contract.rate * tree.dt).exp();
    let pu = disc * tree.prob_up;
    let pd = disc * (1.0 - tree.prob_up);
    let ratio = tree.up / tree.down;
    let ln_down = tree.down.ln();

    let mut values: Vec<f64> = {
        let mut s = tree.spot * (n as f64 * ln_down).exp();
        (0..=n)
            .map(|_| {
                let v = parity.payoff(s, strike);
                s *= ratio;
                v
            })
            .collect()
    };

    let american = contract.style == ExerciseStyle::American;
    for layer in (0..n).rev() {
        let mut s = tree.spot * (layer as f64 * ln_down).exp();
        for j in 0..=layer {
            let cont = pu * values[j + 1] + pd * values[j];
            values[j] = if american { cont.max(parity.payoff(s, strike)) } else { cont };
            s *= ratio;
        }
    }
    values[0]
}

fn value(construction: Construction, spot: f64, contract: &ContractSpec, steps: usize) -> f64 {
    match construction {
        Construction::Expired => contract.parity.payoff(spot, contract.strike),
        Construction::ZeroVol => zero_vol_value(spot, contract, steps),
        Construction::Tree(tree) => backward_induction(&tree, contract),
    }
}

/// Cox-Ross-Rubinstein price.
pub fn crr_price(spot: f64, contract: &ContractSpec, sigma: f64, steps: usize) -> Result<f64> {
    let c = crr_construction(spot, contract, sigma, steps)?;
    Ok(value(c, spot, contract, steps))
}

/// Leisen-Reimer price; `steps` must be odd.
pub fn lr_price(spot: f64, contract: &ContractSpec, sigma: f64, steps: usize) -> Result<f64> {
    let c = lr_construction(spot, contract, sigma, steps)?;
    Ok(value(c, spot, contract, steps))
}

pub fn price(spot: f64, contract: &ContractSpec, sigma: f64, lattice: &LatticeSpec) -> Result<f64> {
    match lattice.kind {
        LatticeKind::Crr => crr_price(spot, contract, sigma, lattice.steps),
        LatticeKind::LeisenReimer => lr_price(spot, contract, sigma, lattice.steps),
    }
}

/// Finite-difference bump sizes: relative for spot, absolute for volatility.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GreekBumps {
    pub spot_rel: f64,
    pub vol_abs: f64,
}

impl Default for GreekBumps {
    fn default() -> Self {
        GreekBumps { spot_rel: 0.015, vol_abs: 0.005 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GreeksResult {
    pub delta: f64,
    pub gamma: f64,
    /// Per unit of volatility.
    pub vega: f64,
    /// Per 1% of volatility.
    pub vega_pct: f64,
    /// Set when gamma came out materially negative.
    pub aliasing_warning: bool,
}

impl GreeksResult {
    /// Greeks of the opposite position.
    pub fn short(self) -> Self {
        GreeksResult { delta: -self.delta, gamma: -self.gamma, vega: -self.vega, vega_pct: -self.vega_pct, ..self }
    }
}

/// Central finite-difference delta, gamma and vega.
pub fn fd_greeks(
    spot: f64,
    contract: &ContractSpec,
    sigma: f64,
    lattice: &LatticeSpec,
    bumps: GreekBumps,
) -> Result<GreeksResult> {
    let h_s = bumps.spot_rel;
    let h_v = bumps.vol_abs;
    ensure(h_s > 0.0 && h_s < 1.0, || format!("spot bump must lie in (0, 1), got {h_s}"))?;
    ensure(h_v > 0.0, || format!("volatility bump must be positive, got {h_v}"))?;
    ensure(sigma - h_v > 0.0, || format!("volatility {sigma} too small for a central bump of {h_v}"))?;

    let p_up = price(spot * (1.0 + h_s), contract, sigma, lattice)?;
    let p_dn = price(spot * (1.0 - h_s), contract, sigma, lattice)?;
    let p_0 = price(spot, contract, sigma, lattice)?;
    let v_up = price(spot, contract, sigma + h_v, lattice)?;
    let v_dn = price(spot, contract, sigma - h_v, lattice)?;

    let ds = h_s * spot;
    let delta = (p_up - p_dn) / (2.0 * ds);
    let second = p_up - 2.0 * p_0 + p_dn;
    let gamma = second / (ds * ds);
    let vega = (v_up - v_dn) / (2.0 * h_v);

    let aliasing_warning = second < -1e-9 * p_0.max(1.0);
    if aliasing_warning {
        log::warn!("negative finite-difference gamma {gamma:.3e} at S={spot}, K={}, sigma={sigma}", contract.strike);
    }
    Ok(GreeksResult { delta, gamma, vega, vega_pct: vega * 0.01, aliasing_warning })
}
