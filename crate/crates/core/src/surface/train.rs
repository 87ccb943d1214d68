//! Joint full-batch Adam fit of a shape function and per-ticker
//! log-variance levels against market implied volatilities.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::adam::{adam_step, AdamConfig, AdamState};
use super::mlp::{MLPWeights, Scratch};
use super::{FittedSurface, InputSet, NeuralPsi, PsiBeta, ShapeModel, Standardization, SurfaceFeatures};
use crate::error::{ensure, Error, Result};
use crate::rng::seeded;

/// Lower clamp on `theta * psi` before the square root.
pub const MIN_MODEL_VARIANCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingRow {
    pub ticker: String,
    pub features: SurfaceFeatures,
    pub iv: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ShapeTemplate {
    Parametric,
    /// Two tanh hidden layers of width `hidden`.
    Neural {
        inputs: InputSet,
        hidden: usize,
    },
    /// Shape held fixed; only the variance levels are fitted.
    Fixed {
        shape: ShapeModel,
    },
}

impl ShapeTemplate {
    pub fn neural(inputs: InputSet, hidden: usize) -> Self {
        ShapeTemplate::Neural { inputs, hidden }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LrStep {
    pub epoch: usize,
    pub lr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub epochs: usize,
    /// Stop after this many epochs without a new best training loss.
    pub patience: usize,
    /// Step schedule; the first entry must start at epoch 0.
    pub schedule: Vec<LrStep>,
    pub adam: AdamConfig,
    pub seed: u64,
    /// Start the parametric shape from a log-linear least-squares fit.
    pub warm_start: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 2000,
            patience: 200,
            schedule: vec![
                LrStep { epoch: 0, lr: 1e-3 },
                LrStep { epoch: 500, lr: 5e-4 },
                LrStep { epoch: 1000, lr: 2e-4 },
                LrStep { epoch: 1500, lr: 1e-4 },
            ],
            adam: AdamConfig::default(),
            seed: 0,
            warm_start: true,
        }
    }
}

impl TrainConfig {
    pub fn with_seed(self, seed: u64) -> Self {
        TrainConfig { seed, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        ensure(!self.schedule.is_empty(), || "learning-rate schedule is empty".into())?;
        ensure(self.schedule[0].epoch == 0, || "learning-rate schedule must start at epoch 0".into())?;
        ensure(self.schedule.windows(2).all(|w| w[0].epoch < w[1].epoch), || {
            "learning-rate schedule epochs must increase".into()
        })?;
        ensure(self.schedule.iter().all(|s| s.lr.is_finite() && s.lr > 0.0), || {
            "learning rates must be positive".into()
        })
    }

    pub fn lr_at(&self, epoch: usize) -> f64 {
        self.schedule.iter().take_while(|s| s.epoch <= epoch).last().map_or(self.schedule[0].lr, |s| s.lr)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedSurface {
    pub surface: FittedSurface,
    /// Training loss at the start of every epoch run.
    pub history: Vec<f64>,
    /// `(epoch, loss)` at each new best; strictly decreasing in loss.
    pub checkpoints: Vec<(usize, f64)>,
    pub best_epoch: usize,
    pub best_loss: f64,
    /// RMSE of the returned parameters, in IV units.
    pub train_rmse: f64,
}

enum Design {
    Parametric(Vec<[f64; 5]>),
    Neural { template: MLPWeights, x: Vec<Vec<f64>> },
    Fixed(Vec<f64>),
}

/// Loss `(1/n) sum (sqrt(theta psi) - iv)^2` over a packed parameter vector:
/// shape parameters followed by `ln theta` per ticker in sorted order.
pub struct Objective {
    design: Design,
    ticker_of: Vec<usize>,
    iv: Vec<f64>,
    tickers: Vec<String>,
    shape_len: usize,
}

impl Objective {
    fn new(rows: &[TrainingRow], template: &ShapeTemplate, standardization: Option<&Standardization>) -> Result<Self> {
        let tickers: Vec<String> =
            rows.iter().map(|r| r.ticker.clone()).collect::<std::collections::BTreeSet<_>>().into_iter().collect();
        let index: BTreeMap<&str, usize> = tickers.iter().enumerate().map(|(i, t)| (t.as_str(), i)).collect();
        let ticker_of = rows.iter().map(|r| index[r.ticker.as_str()]).collect();
        let iv = rows.iter().map(|r| r.iv).collect();
        let (design, shape_len) = match template {
            ShapeTemplate::Parametric => (
                Design::Parametric(
                    rows.iter().map(|r| PsiBeta::regressors(r.features.dte, r.features.moneyness)).collect(),
                ),
                5,
            ),
            ShapeTemplate::Neural { inputs, hidden } => {
                let z = standardization.expect("network design needs a standardization");
                let template = MLPWeights::zeros(&[inputs.dim(), *hidden, *hidden, 1])?;
                let n = template.param_count();
                let x = rows.iter().map(|r| z.apply(&inputs.raw(&r.features))).collect();
                (Design::Neural { template, x }, n)
            }
            ShapeTemplate::Fixed { shape } => {
                (Design::Fixed(rows.iter().map(|r| shape.ln_psi(&r.features)).collect()), 0)
            }
        };
        Ok(Objective { design, ticker_of, iv, tickers, shape_len })
    }

    pub fn param_count(&self) -> usize {
        self.shape_len + self.tickers.len()
    }

    pub fn tickers(&self) -> &[String] {
        &self.tickers
    }

    pub fn loss(&self, params: &[f64]) -> f64 {
        self.evaluate(params, None)
    }

    /// Loss, with the gradient written into `grad`.
    pub fn loss_and_grad(&self, params: &[f64], grad: &mut [f64]) -> f64 {
        self.evaluate(params, Some(grad))
    }

    fn evaluate(&self, params: &[f64], mut grad: Option<&mut [f64]>) -> f64 {
        assert_eq!(params.len(), self.param_count());
        let n = self.iv.len() as f64;
        let (shape, ln_theta) = params.split_at(self.shape_len);
        if let Some(g) = grad.as_deref_mut() {
            g.iter_mut().for_each(|v| *v = 0.0);
        }
        // returns dL/dy for y = ln theta + ln psi
        let row_term = |i: usize, ln_psi: f64, loss: &mut f64| -> f64 {
            let y = ln_theta[self.ticker_of[i]] + ln_psi;
            let var = y.exp();
            let (var, clamped) = if var < MIN_MODEL_VARIANCE { (MIN_MODEL_VARIANCE, true) } else { (var, false) };
            let sigma = var.sqrt();
            let r = sigma - self.iv[i];
            *loss += r * r / n;
            if clamped {
                0.0
            } else {
                r * sigma / n
            }
        };
        let mut loss = 0.0;
        match &self.design {
            Design::Parametric(x) => {
                for (i, xi) in x.iter().enumerate() {
                    let ln_psi: f64 = shape.iter().zip(xi).map(|(b, x)| b * x).sum();
                    let dy = row_term(i, ln_psi, &mut loss);
                    if let Some(g) = grad.as_deref_mut() {
                        for k in 0..5 {
                            g[k] += dy * xi[k];
                        }
                        g[self.shape_len + self.ticker_of[i]] += dy;
                    }
                }
            }
            Design::Neural { template, x } => {
                let mut net = template.clone();
                net.set_params(shape);
                let mut scratch = Scratch::default();
                for (i, xi) in x.iter().enumerate() {
                    match grad.as_deref_mut() {
                        Some(g) => {
                            // output first, then backprop with the known upstream
                            let ln_psi = net.forward_unchecked(xi);
                            let dy = row_term(i, ln_psi, &mut loss);
                            if dy != 0.0 {
                                net.accumulate_gradient(xi, dy, &mut g[..self.shape_len], &mut scratch);
                            }
                            g[self.shape_len + self.ticker_of[i]] += dy;
                        }
                        None => {
                            row_term(i, net.forward_unchecked(xi), &mut loss);
                        }
                    }
                }
            }
            Design::Fixed(ln_psi) => {
                for (i, lp) in ln_psi.iter().enumerate() {
                    let dy = row_term(i, *lp, &mut loss);
                    if let Some(g) = grad.as_deref_mut() {
                        g[self.ticker_of[i]] += dy;
                    }
                }
            }
        }
        loss
    }
}

/// Mean squared IV per ticker, the starting variance level.
fn initial_theta(rows: &[TrainingRow], tickers: &[String]) -> Vec<f64> {
    let mut sum = vec![0.0; tickers.len()];
    let mut count = vec![0usize; tickers.len()];
    for r in rows {
        let i = tickers.binary_search(&r.ticker).expect("ticker indexed");
        sum[i] += r.iv * r.iv;
        count[i] += 1;
    }
    sum.iter().zip(&count).map(|(s, c)| s / *c as f64).collect()
}

/// Least-squares `beta` for `ln(iv^2 / theta0) = beta . x`.
fn log_linear_beta(rows: &[TrainingRow], tickers: &[String], theta0: &[f64]) -> PsiBeta {
    let n = rows.len();
    let mut a = DMatrix::<f64>::zeros(n, 5);
    let mut b = DVector::<f64>::zeros(n);
    for (i, r) in rows.iter().enumerate() {
        let x = PsiBeta::regressors(r.features.dte, r.features.moneyness);
        for k in 0..5 {
            a[(i, k)] = x[k];
        }
        let t = tickers.binary_search(&r.ticker).expect("ticker indexed");
        b[i] = (r.iv * r.iv / theta0[t]).ln();
    }
    match a.svd(true, true).solve(&b, 1e-12) {
        Ok(beta) if beta.iter().all(|v| v.is_finite()) => PsiBeta([beta[0], beta[1], beta[2], beta[3], beta[4]]),
        _ => PsiBeta::ZERO,
    }
}

fn validate_rows(rows: &[TrainingRow]) -> Result<()> {
    ensure(!rows.is_empty(), || "no training observations".into())?;
    for (i, r) in rows.iter().enumerate() {
        r.features.validate().map_err(|e| Error::invalid(format!("training row {i}: {e}")))?;
        ensure(r.iv.is_finite() && r.iv > 0.0, || format!("training row {i}: IV must be positive, got {}", r.iv))?;
    }
    Ok(())
}

/// Fits one group. Returns the best-checkpoint parameters by training loss.
pub fn train_surface(rows: &[TrainingRow], template: &ShapeTemplate, config: &TrainConfig) -> Result<TrainedSurface> {
    config.validate()?;
    validate_rows(rows)?;
    if let ShapeTemplate::Neural { hidden, .. } = template {
        ensure(*hidden > 0, || "hidden width must be positive".into())?;
    }
    if let ShapeTemplate::Fixed { shape } = template {
        shape.validate()?;
    }

    let standardization = match template {
        ShapeTemplate::Neural { inputs, .. } => {
            let raw: Vec<Vec<f64>> = rows.iter().map(|r| inputs.raw(&r.features)).collect();
            Some(Standardization::fit(&raw)?)
        }
        _ => None,
    };
    let objective = Objective::new(rows, template, standardization.as_ref())?;
    let theta0 = initial_theta(rows, objective.tickers());

    let mut params = Vec::with_capacity(objective.param_count());
    match template {
        ShapeTemplate::Parametric if config.warm_start => {
            params.extend(log_linear_beta(rows, objective.tickers(), &theta0).0);
        }
        ShapeTemplate::Parametric => params.extend([0.0; 5]),
        ShapeTemplate::Neural { inputs, hidden } => {
            let net = MLPWeights::glorot(&[inputs.dim(), *hidden, *hidden, 1], &mut seeded(config.seed))?;
            params.extend(net.params());
        }
        ShapeTemplate::Fixed { .. } => {}
    }
    params.extend(theta0.iter().map(|t| t.ln()));

    let mut state = AdamState::new(params.len());
    let mut grad = vec![0.0; params.len()];
    let mut history = Vec::new();
    let mut checkpoints = Vec::new();
    let mut best = (f64::INFINITY, params.clone(), 0usize);

    for epoch in 0..=config.epochs {
        let loss = objective.loss_and_grad(&params, &mut grad);
        if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::Numerical(format!(
                "non-finite training loss {loss} at epoch {epoch} (best {:.6e} at epoch {})",
                best.0, best.2
            )));
        }
        history.push(loss);
        if loss < best.0 {
            best = (loss, params.clone(), epoch);
            checkpoints.push((epoch, loss));
        } else if epoch - best.2 >= config.patience {
            break;
        }
        if epoch == config.epochs {
            break;
        }
        adam_step(&mut params, &grad, &mut state, config.lr_at(epoch), &config.adam);
    }

    let (best_loss, best_params, best_epoch) = best;
    let (shape_params, ln_theta) = best_params.split_at(objective.shape_len);
    let shape = match template {
        ShapeTemplate::Parametric => {
            ShapeModel::Parametric { beta: PsiBeta(shape_params.try_into().expect("five coefficients")) }
        }
        ShapeTemplate::Neural { inputs, hidden } => {
            let mut weights = MLPWeights::zeros(&[inputs.dim(), *hidden, *hidden, 1])?;
            weights.set_params(shape_params);
            ShapeModel::Neural(NeuralPsi {
                inputs: *inputs,
                standardization: standardization.expect("fitted above"),
                weights,
            })
        }
        ShapeTemplate::Fixed { shape } => shape.clone(),
    };
    let theta = objective.tickers().iter().cloned().zip(ln_theta.iter().map(|l| l.exp())).collect();
    Ok(TrainedSurface {
        surface: FittedSurface { shape, theta },
        history,
        checkpoints,
        best_epoch,
        best_loss,
        train_rmse: best_loss.sqrt(),
    })
}

/// Builds the objective used by [`train_surface`] so gradients can be
/// checked externally. Returns it with the starting parameter vector.
pub fn objective_for(rows: &[TrainingRow], template: &ShapeTemplate, seed: u64) -> Result<(Objective, Vec<f64>)> {
    validate_rows(rows)?;
    let standardization = match template {
        ShapeTemplate::Neural { inputs, .. } => {
            let raw: Vec<Vec<f64>> = rows.iter().map(|r| inputs.raw(&r.features)).collect();
            Some(Standardization::fit(&raw)?)
        }
        _ => None,
    };
    let objective = Objective::new(rows, template, standardization.as_ref())?;
    let mut params = match template {
        ShapeTemplate::Neural { inputs, hidden } => {
            MLPWeights::glorot(&[inputs.dim(), *hidden, *hidden, 1], &mut seeded(seed))?.params()
        }
        ShapeTemplate::Parametric => vec![0.0; 5],
        ShapeTemplate::Fixed { .. } => Vec::new(),
    };
    params.extend(initial_theta(rows, objective.tickers()).iter().map(|t| t.ln()));
    Ok((objective, params))
}
