//! Smile and term-structure shape functions and their calibration.
//!
//! Model variance for an observation is `theta_ticker * psi(features)`,
//! where `psi` is either the five-parameter log-polynomial or a tanh network
//! producing `ln psi`.

pub mod adam;
pub mod earnings;
pub mod mlp;
pub mod psi;
pub mod train;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{ensure, Error, Result};

pub use adam::{adam_step, AdamConfig, AdamState};
pub use earnings::{EarningsCalendar, EarningsFeatures, SectorInfo, SectorMap};
pub use mlp::MLPWeights;
pub use psi::{psi_param, PsiBeta};
pub use train::{train_surface, ShapeTemplate, TrainConfig, TrainedSurface, TrainingRow};

/// Inputs to a shape function. `dte` is in trading days and is floored at
/// one inside the shape functions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurfaceFeatures {
    pub dte: f64,
    pub moneyness: f64,
    #[serde(default = "far_from_earnings")]
    pub e: f64,
    #[serde(default = "far_from_earnings")]
    pub e_peer: f64,
}

fn far_from_earnings() -> f64 {
    earnings::MAX_EARNINGS_DAYS
}

impl SurfaceFeatures {
    /// Features with both earnings distances at their maximum.
    pub fn new(dte: f64, moneyness: f64) -> Self {
        SurfaceFeatures { dte, moneyness, e: far_from_earnings(), e_peer: far_from_earnings() }
    }

    pub fn with_earnings(self, f: EarningsFeatures) -> Self {
        SurfaceFeatures { e: f.e, e_peer: f.e_peer, ..self }
    }

    pub fn ln_tau(&self) -> f64 {
        self.dte.max(1.0).ln()
    }

    pub fn validate(&self) -> Result<()> {
        ensure(self.dte.is_finite() && self.dte >= 0.0, || format!("DTE must be non-negative, got {}", self.dte))?;
        ensure(self.moneyness.is_finite() && self.moneyness > 0.0, || {
            format!("moneyness must be positive, got {}", self.moneyness)
        })?;
        ensure(self.e.is_finite() && self.e_peer.is_finite(), || "earnings features must be finite".into())
    }
}

/// Which raw inputs feed the network.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InputSet {
    /// `(ln tau, ln m)`
    TwoInput,
    /// `(ln tau, ln m, e, e_peer)`
    FourInput,
}

impl InputSet {
    pub fn dim(self) -> usize {
        match self {
            InputSet::TwoInput => 2,
            InputSet::FourInput => 4,
        }
    }

    pub fn raw(self, f: &SurfaceFeatures) -> Vec<f64> {
        let base = [f.ln_tau(), f.moneyness.ln()];
        match self {
            InputSet::TwoInput => base.to_vec(),
            InputSet::FourInput => vec![base[0], base[1], f.e, f.e_peer],
        }
    }
}

/// Per-input mean and standard deviation from training rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Standardization {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Standardization {
    /// Constant columns get unit scale so they standardize to zero.
    pub fn fit(rows: &[Vec<f64>]) -> Result<Self> {
        ensure(!rows.is_empty(), || "cannot standardize an empty training set".into())?;
        let dim = rows[0].len();
        let n = rows.len() as f64;
        let mut mean = vec![0.0; dim];
        for r in rows {
            for (m, x) in mean.iter_mut().zip(r) {
                *m += x;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; dim];
        for r in rows {
            for ((v, x), m) in var.iter_mut().zip(r).zip(&mean) {
                *v += (x - m) * (x - m);
            }
        }
        let std = var
            .into_iter()
            .map(|v| {
                let s = (v / n).sqrt();
                if s > 1e-12 {
                    s
                } else {
                    1.0
                }
            })
            .collect();
        Ok(Standardization { mean, std })
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        x.iter().zip(&self.mean).zip(&self.std).map(|((x, m), s)| (x - m) / s).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NeuralPsi {
    pub inputs: InputSet,
    pub standardization: Standardization,
    pub weights: MLPWeights,
}

impl NeuralPsi {
    pub fn ln_psi(&self, f: &SurfaceFeatures) -> f64 {
        let x = self.standardization.apply(&self.inputs.raw(f));
        self.weights.forward_unchecked(&x)
    }

    pub fn validate(&self) -> Result<()> {
        self.weights.validate()?;
        let d = self.inputs.dim();
        ensure(self.weights.input_dim() == d, || {
            format!("network takes {} inputs but input set has {d}", self.weights.input_dim())
        })?;
        ensure(self.standardization.mean.len() == d && self.standardization.std.len() == d, || {
            "standardization dimension mismatch".into()
        })?;
        ensure(self.standardization.std.iter().all(|s| *s > 0.0), || "standardization scales must be positive".into())
    }
}

/// `psi = exp(NN(standardize(inputs)))`.
pub fn psi_nn(f: &SurfaceFeatures, net: &NeuralPsi) -> f64 {
    net.ln_psi(f).exp()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ShapeModel {
    Parametric { beta: PsiBeta },
    Neural(NeuralPsi),
}

impl ShapeModel {
    pub fn unit() -> Self {
        ShapeModel::Parametric { beta: PsiBeta::ZERO }
    }

    pub fn ln_psi(&self, f: &SurfaceFeatures) -> f64 {
        match self {
            ShapeModel::Parametric { beta } => beta.ln_psi(f.dte, f.moneyness),
            ShapeModel::Neural(net) => net.ln_psi(f),
        }
    }

    pub fn psi(&self, f: &SurfaceFeatures) -> f64 {
        match self {
            ShapeModel::Parametric { beta } => psi::psi_param_features(f, beta),
            ShapeModel::Neural(net) => psi_nn(f, net),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ShapeModel::Parametric { beta } => ensure(beta.is_finite(), || "beta must be finite".into()),
            ShapeModel::Neural(net) => net.validate(),
        }
    }

    pub fn describe(&self) -> String {
        match self {
            ShapeModel::Parametric { .. } => "parametric".into(),
            ShapeModel::Neural(n) => {
                let sizes: Vec<String> = n.weights.sizes().iter().map(ToString::to_string).collect();
                format!("mlp {}", sizes.join("-"))
            }
        }
    }
}

/// A shape plus per-ticker variance levels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FittedSurface {
    pub shape: ShapeModel,
    pub theta: BTreeMap<String, f64>,
}

impl FittedSurface {
    pub fn theta(&self, ticker: &str) -> Result<f64> {
        self.theta
            .get(ticker)
            .copied()
            .ok_or_else(|| Error::invalid(format!("no variance level for ticker '{ticker}'")))
    }

    /// `theta * psi`.
    pub fn model_variance(&self, ticker: &str, f: &SurfaceFeatures) -> Result<f64> {
        Ok(self.theta(ticker)? * self.shape.psi(f))
    }

    pub fn iv(&self, ticker: &str, f: &SurfaceFeatures) -> Result<f64> {
        Ok(self.model_variance(ticker, f)?.sqrt())
    }

    pub fn validate(&self) -> Result<()> {
        self.shape.validate()?;
        ensure(self.theta.values().all(|t| t.is_finite() && *t > 0.0), || "variance levels must be positive".into())
    }
}
