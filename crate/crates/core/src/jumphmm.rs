//! Jump hidden Markov model for excess growth rates.
//!
//! Hidden states `1..=N` index equal-probability quantile bins of a fitted
//! Laplace law, so low state numbers carry the most negative returns. Each
//! state emits `mu_k + sigma_k * t_nu`. With probability `eps` per step a
//! Poisson-sized jump forces the chain into one of the `n_tail` extreme
//! states at either end.
//!
//! Multi-asset paths are coupled through a Student-t copula that acts on the
//! per-step uniforms, so each asset keeps the exact law of its own chain.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal, StudentT};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal as NormalDist, StudentsT as StudentsTDist};

use crate::error::{ensure, Error, Result};
use crate::stats;

pub const NU_FLOOR: f64 = 2.1;
const NU_CEIL: f64 = 200.0;
const ROW_TOL: f64 = 1e-9;
const UNIFORM_CLAMP: f64 = 1e-15;

pub fn default_p_neg() -> f64 {
    0.52
}

pub fn default_drift_anchor() -> f64 {
    0.0002
}

/// Fitted or hand-specified JumpHMM. States are 1-based.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HMMParams {
    pub n_states: usize,
    pub n_tail: usize,
    /// `n_states - 1` ascending thresholds.
    pub bin_edges: Vec<f64>,
    pub mu: Vec<f64>,
    pub sigma: Vec<f64>,
    pub nu: f64,
    /// Row-stochastic, `trans[i][j] = P(next = j + 1 | current = i + 1)`.
    pub trans: Vec<Vec<f64>>,
    pub eps: f64,
    pub lambda: f64,
    /// Probability that a forced jump lands in the bottom tail.
    #[serde(default = "default_p_neg")]
    pub p_neg: f64,
    #[serde(default = "default_drift_anchor")]
    pub drift_anchor: f64,
}

impl HMMParams {
    pub fn validate(&self) -> Result<()> {
        let n = self.n_states;
        ensure(n >= 1, || "n_states must be at least 1".into())?;
        ensure(2 * self.n_tail < n, || format!("need 2 * n_tail < n_states, got n_tail={} n_states={n}", self.n_tail))?;
        ensure(self.bin_edges.len() + 1 == n, || {
            format!("expected {} bin edges, got {}", n - 1, self.bin_edges.len())
        })?;
        ensure(self.bin_edges.windows(2).all(|w| w[0] <= w[1]), || "bin edges must be ascending".into())?;
        ensure(self.mu.len() == n && self.sigma.len() == n, || format!("mu and sigma must have {n} entries"))?;
        ensure(self.mu.iter().all(|m| m.is_finite()), || "mu must be finite".into())?;
        ensure(self.sigma.iter().all(|s| s.is_finite() && *s >= 0.0), || {
            "sigma must be finite and non-negative".into()
        })?;
        ensure(self.nu.is_finite() && self.nu > 2.0, || format!("nu must exceed 2, got {}", self.nu))?;
        ensure(self.trans.len() == n, || format!("transition matrix must have {n} rows"))?;
        for (i, row) in self.trans.iter().enumerate() {
            ensure(row.len() == n, || format!("transition row {} has {} entries", i + 1, row.len()))?;
            ensure(row.iter().all(|p| p.is_finite() && *p >= 0.0), || {
                format!("transition row {} has negative or non-finite entries", i + 1)
            })?;
            let sum: f64 = row.iter().sum();
            ensure((sum - 1.0).abs() <= ROW_TOL, || format!("transition row {} sums to {sum}", i + 1))?;
        }
        ensure((0.0..=1.0).contains(&self.eps), || format!("eps must lie in [0, 1], got {}", self.eps))?;
        ensure(self.lambda.is_finite() && self.lambda >= 0.0, || {
            format!("lambda must be non-negative, got {}", self.lambda)
        })?;
        ensure((0.0..=1.0).contains(&self.p_neg), || format!("p_neg must lie in [0, 1], got {}", self.p_neg))?;
        ensure(self.drift_anchor.is_finite(), || "drift_anchor must be finite".into())
    }

    pub fn is_tail(&self, state: usize) -> bool {
        is_tail_state(state, self.n_states, self.n_tail)
    }

    /// Law of the landing state of a forced jump, indexed 0-based.
    ///
    /// The jump size is `Poisson(lambda)` clamped to `[1, n_tail]`; size `j`
    /// lands in state `j` (bottom tail) or `N + 1 - j` (top tail).
    pub fn jump_distribution(&self) -> Vec<f64> {
        let n = self.n_states;
        let mut dist = vec![0.0; n];
        if self.n_tail == 0 {
            return dist;
        }
        for (j, w) in clamped_poisson(self.lambda, self.n_tail).into_iter().enumerate() {
            dist[j] += self.p_neg * w;
            dist[n - 1 - j] += (1.0 - self.p_neg) * w;
        }
        dist
    }

    /// One-step law of the next state including forced jumps, 0-based.
    pub fn kernel_row(&self, state: usize, jump: &[f64]) -> Vec<f64> {
        let eps = if self.n_tail == 0 { 0.0 } else { self.eps };
        self.trans[state - 1].iter().zip(jump).map(|(t, j)| (1.0 - eps) * t + eps * j).collect()
    }

    /// Stationary law of the jump-augmented chain, 0-based.
    pub fn stationary(&self) -> Vec<f64> {
        let n = self.n_states;
        let jump = self.jump_distribution();
        let kernel: Vec<Vec<f64>> = (1..=n).map(|s| self.kernel_row(s, &jump)).collect();
        let mut pi = vec![1.0 / n as f64; n];
        for _ in 0..10_000 {
            let mut next = vec![0.0; n];
            for (i, row) in kernel.iter().enumerate() {
                for (j, p) in row.iter().enumerate() {
                    next[j] += pi[i] * p;
                }
            }
            let diff: f64 = next.iter().zip(&pi).map(|(a, b)| (a - b).abs()).sum();
            pi = next;
            if diff < 1e-15 {
                break;
            }
        }
        pi
    }

    /// Unit-variance scaling of the Student-t draw.
    pub fn innovation_scale(&self) -> f64 {
        ((self.nu - 2.0) / self.nu).sqrt()
    }

    /// Reference parameter set: nine states, two tail states per end,
    /// `eps = 0.02`, `lambda = 1`, `nu = 5`, roughly 1% daily scale.
    pub fn reference() -> Self {
        let n = 9;
        let n_tail = 2;
        let (loc, b) = (0.0, 0.01);
        let bin_edges = laplace_quantile_edges(loc, b, n);
        let mu = laplace_bin_means(loc, b, n).into_iter().map(|m| 0.1 * m).collect();
        let sigma = vec![0.030, 0.018, 0.011, 0.009, 0.008, 0.009, 0.011, 0.016, 0.026];
        let mut trans = vec![vec![0.0; n]; n];
        for (i, row) in trans.iter_mut().enumerate() {
            let tail = is_tail_state(i + 1, n, n_tail);
            let stay = if tail { 0.55 } else { 0.35 };
            let neighbour = 0.15;
            row[i] += stay;
            let mut rest = 1.0 - stay;
            if i > 0 {
                row[i - 1] += neighbour;
                rest -= neighbour;
            }
            if i + 1 < n {
                row[i + 1] += neighbour;
                rest -= neighbour;
            }
            for p in row.iter_mut() {
                *p += rest / n as f64;
            }
        }
        HMMParams {
            n_states: n,
            n_tail,
            bin_edges,
            mu,
            sigma,
            nu: 5.0,
            trans,
            eps: 0.02,
            lambda: 1.0,
            p_neg: default_p_neg(),
            drift_anchor: default_drift_anchor(),
        }
    }
}

pub fn is_tail_state(state: usize, n_states: usize, n_tail: usize) -> bool {
    state <= n_tail || state > n_states - n_tail
}

/// `P(clamp(X, 1, n_tail) = j)` for `X ~ Poisson(lambda)`, j = 1..=n_tail.
fn clamped_poisson(lambda: f64, n_tail: usize) -> Vec<f64> {
    let mut pmf = Vec::with_capacity(n_tail + 1);
    let mut term = (-lambda).exp();
    for k in 0..=n_tail {
        if k > 0 {
            term *= lambda / k as f64;
        }
        pmf.push(term);
    }
    let mut out = vec![0.0; n_tail];
    // X in {0, 1} lands on size 1; X >= n_tail lands on n_tail.
    let mut acc = 0.0;
    for (j, slot) in out.iter_mut().enumerate().take(n_tail.saturating_sub(1)) {
        let size = j + 1;
        *slot = if size == 1 { pmf[0] + pmf[1] } else { pmf[size] };
        acc += *slot;
    }
    out[n_tail - 1] = (1.0 - acc).max(0.0);
    out
}

/// Maximum-likelihood Laplace fit: location = median, scale = mean absolute deviation.
pub fn laplace_fit(xs: &[f64]) -> (f64, f64) {
    let loc = stats::median(xs);
    let scale = xs.iter().map(|x| (x - loc).abs()).sum::<f64>() / xs.len() as f64;
    (loc, scale)
}

pub fn laplace_quantile(loc: f64, scale: f64, q: f64) -> f64 {
    if q < 0.5 {
        loc + scale * (2.0 * q).ln()
    } else {
        loc - scale * (2.0 * (1.0 - q)).ln()
    }
}

/// The `k / n` quantiles, k = 1..n-1.
pub fn laplace_quantile_edges(loc: f64, scale: f64, n: usize) -> Vec<f64> {
    (1..n).map(|k| laplace_quantile(loc, scale, k as f64 / n as f64)).collect()
}

/// Conditional means of a Laplace law within its equal-probability bins.
pub fn laplace_bin_means(loc: f64, scale: f64, n: usize) -> Vec<f64> {
    // E[X 1{X <= x}] = F(x) (x - b) for x <= loc; by symmetry above.
    let partial = |x: f64| -> f64 {
        if x <= loc {
            let f = 0.5 * ((x - loc) / scale).exp();
            f * (x - scale)
        } else {
            let s = 0.5 * (-(x - loc) / scale).exp();
            loc - s * (x + scale)
        }
    };
    let mut bounds = vec![f64::NEG_INFINITY];
    bounds.extend(laplace_quantile_edges(loc, scale, n));
    bounds.push(f64::INFINITY);
    bounds
        .windows(2)
        .map(|w| {
            let lo = if w[0].is_finite() { partial(w[0]) } else { 0.0 };
            let hi = if w[1].is_finite() { partial(w[1]) } else { loc };
            (hi - lo) * n as f64
        })
        .collect()
}

/// 1-based state of each value: one plus the number of edges at or below it.
pub fn assign_states(returns: &[f64], edges: &[f64]) -> Vec<usize> {
    returns.iter().map(|x| 1 + edges.partition_point(|e| e <= x)).collect()
}

/// Transition frequencies with add-one smoothing.
pub fn count_transitions(states: &[usize], n_states: usize) -> Vec<Vec<f64>> {
    let mut counts = vec![vec![1.0; n_states]; n_states];
    for w in states.windows(2) {
        counts[w[0] - 1][w[1] - 1] += 1.0;
    }
    for row in &mut counts {
        let s: f64 = row.iter().sum();
        row.iter_mut().for_each(|c| *c /= s);
    }
    counts
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitConfig {
    pub n_states: usize,
    pub n_tail: usize,
    pub eps: f64,
    pub lambda: f64,
    #[serde(default = "default_p_neg")]
    pub p_neg: f64,
    #[serde(default = "default_drift_anchor")]
    pub drift_anchor: f64,
}

impl FitConfig {
    pub fn new(n_states: usize, n_tail: usize, eps: f64, lambda: f64) -> Self {
        FitConfig { n_states, n_tail, eps, lambda, p_neg: default_p_neg(), drift_anchor: default_drift_anchor() }
    }
}

/// Fits a JumpHMM by quantile binning, transition counting and per-bin
/// moment matching. `eps`, `lambda`, `p_neg` and the drift anchor are taken
/// from `config`; the counted transitions are de-mixed from the jump kernel.
pub fn fit_jumphmm(returns: &[f64], config: &FitConfig) -> Result<HMMParams> {
    let n = config.n_states;
    ensure(n >= 3, || format!("need at least 3 states, got {n}"))?;
    ensure(2 * config.n_tail < n, || format!("need 2 * n_tail < n_states, got n_tail={} n_states={n}", config.n_tail))?;
    ensure(returns.len() >= 10 * n, || {
        format!("need at least {} returns for {n} states, got {}", 10 * n, returns.len())
    })?;
    ensure(returns.iter().all(|x| x.is_finite()), || "returns must be finite".into())?;

    let (loc, scale) = laplace_fit(returns);
    ensure(scale > 0.0, || "returns have zero dispersion".into())?;
    let bin_edges = laplace_quantile_edges(loc, scale, n);
    let states = assign_states(returns, &bin_edges);

    let mut members: Vec<Vec<f64>> = vec![Vec::new(); n];
    for (&s, &x) in states.iter().zip(returns) {
        members[s - 1].push(x);
    }
    if let Some(k) = members.iter().position(Vec::is_empty) {
        return Err(Error::invalid(format!(
            "state {} received no observations; the series is dominated by duplicate values",
            k + 1
        )));
    }

    let empirical = count_transitions(&states, n);
    let mut params = HMMParams {
        n_states: n,
        n_tail: config.n_tail,
        bin_edges,
        mu: vec![0.0; n],
        sigma: vec![0.0; n],
        nu: 5.0,
        trans: empirical,
        eps: config.eps,
        lambda: config.lambda,
        p_neg: config.p_neg,
        drift_anchor: config.drift_anchor,
    };
    params.trans = demix_jumps(&params);

    let means: Vec<f64> = members.iter().map(|m| stats::mean(m)).collect();
    let sds: Vec<f64> = members.iter().map(|m| stats::std_dev(m)).collect();
    let residuals: Vec<f64> = states
        .iter()
        .zip(returns)
        .filter(|(s, _)| sds[*s - 1] > 0.0)
        .map(|(s, x)| (x - means[s - 1]) / sds[s - 1])
        .collect();
    let nu = fit_standardized_t_dof(&residuals);
    let scale_factor = ((nu - 2.0) / nu).sqrt();

    params.nu = nu;
    params.mu = means.iter().map(|m| m - config.drift_anchor).collect();
    params.sigma = sds.iter().map(|s| s * scale_factor).collect();
    params.validate()?;
    Ok(params)
}

/// Removes the forced-jump component from counted transitions:
/// `trans = (P - eps J) / (1 - eps)`, clipped at zero and renormalized.
fn demix_jumps(params: &HMMParams) -> Vec<Vec<f64>> {
    let eps = params.eps;
    if eps <= 0.0 || eps >= 1.0 || params.n_tail == 0 {
        return params.trans.clone();
    }
    let jump = params.jump_distribution();
    params
        .trans
        .iter()
        .map(|row| {
            let mut out: Vec<f64> =
                row.iter().zip(&jump).map(|(p, j)| ((p - eps * j) / (1.0 - eps)).max(0.0)).collect();
            let s: f64 = out.iter().sum();
            if s > 0.0 {
                out.iter_mut().for_each(|p| *p /= s);
                out
            } else {
                row.clone()
            }
        })
        .collect()
}

fn standardized_t_loglik(residuals: &[f64], nu: f64) -> f64 {
    let c = ((nu - 2.0) / nu).sqrt();
    let log_norm = statrs::function::gamma::ln_gamma((nu + 1.0) / 2.0)
        - statrs::function::gamma::ln_gamma(nu / 2.0)
        - 0.5 * (nu * std::f64::consts::PI).ln()
        - c.ln();
    residuals
        .iter()
        .map(|r| {
            let z = r / c;
            log_norm - 0.5 * (nu + 1.0) * (1.0 + z * z / nu).ln()
        })
        .sum()
}

/// Degrees of freedom maximizing the unit-variance Student-t likelihood.
fn fit_standardized_t_dof(residuals: &[f64]) -> f64 {
    if residuals.is_empty() {
        return NU_CEIL;
    }
    // golden-section search on ln(nu)
    let f = |x: f64| -standardized_t_loglik(residuals, x.exp());
    let (mut a, mut b) = (NU_FLOOR.ln(), NU_CEIL.ln());
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..80 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    ((a + b) / 2.0).exp().max(NU_FLOOR)
}

fn sample_categorical<R: Rng + ?Sized>(weights: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    categorical_quantile(weights, u).0
}

/// Index selected by `u` under cumulative `weights`, plus the lower and
/// upper cumulative bounds of that index.
fn categorical_quantile(weights: &[f64], u: f64) -> (usize, f64, f64) {
    let total: f64 = weights.iter().sum();
    let target = u * total;
    let mut acc = 0.0;
    let mut last = 0;
    for (i, w) in weights.iter().enumerate() {
        if *w <= 0.0 {
            continue;
        }
        last = i;
        if target < acc + w {
            return (i, acc / total, (acc + w) / total);
        }
        acc += w;
    }
    (last, (acc - weights[last]) / total, 1.0)
}

fn validate_start(params: &HMMParams, start: Option<usize>) -> Result<()> {
    if let Some(s) = start {
        ensure((1..=params.n_states).contains(&s), || format!("start state {s} outside 1..={}", params.n_states))?;
    }
    Ok(())
}

/// Simulates `steps` hidden states. The first state is `start` or a draw
/// from the stationary law.
pub fn simulate_states<R: Rng + ?Sized>(
    params: &HMMParams,
    steps: usize,
    start: Option<usize>,
    rng: &mut R,
) -> Result<Vec<usize>> {
    params.validate()?;
    ensure(steps >= 1, || "need at least one step".into())?;
    validate_start(params, start)?;
    let n = params.n_states;
    let tail_sizes = if params.n_tail > 0 { clamped_poisson(params.lambda, params.n_tail) } else { Vec::new() };
    let first = match start {
        Some(s) => s,
        None => 1 + sample_categorical(&params.stationary(), rng),
    };
    let mut states = Vec::with_capacity(steps);
    states.push(first);
    let mut current = first;
    for _ in 1..steps {
        let forced = params.n_tail > 0 && rng.random::<f64>() < params.eps;
        current = if forced {
            let size = 1 + sample_categorical(&tail_sizes, rng);
            if rng.random::<f64>() < params.p_neg {
                size
            } else {
                n + 1 - size
            }
        } else {
            1 + sample_categorical(&params.trans[current - 1], rng)
        };
        states.push(current);
    }
    Ok(states)
}

/// Returns plus their unit-variance Student-t innovations.
#[derive(Debug, Clone, PartialEq)]
pub struct Emissions {
    pub growth: Vec<f64>,
    pub innovations: Vec<f64>,
}

/// Draws `G_t = mu_k + sigma_k t_nu + drift_anchor` for each state.
pub fn simulate_returns<R: Rng + ?Sized>(params: &HMMParams, states: &[usize], rng: &mut R) -> Result<Emissions> {
    params.validate()?;
    ensure(states.iter().all(|s| (1..=params.n_states).contains(s)), || {
        format!("states must lie in 1..={}", params.n_states)
    })?;
    let t = StudentT::new(params.nu).map_err(|e| Error::invalid(format!("student-t: {e}")))?;
    let unit = params.innovation_scale();
    let mut growth = Vec::with_capacity(states.len());
    let mut innovations = Vec::with_capacity(states.len());
    for &s in states {
        let draw: f64 = t.sample(rng);
        growth.push(params.mu[s - 1] + params.sigma[s - 1] * draw + params.drift_anchor);
        innovations.push(draw * unit);
    }
    Ok(Emissions { growth, innovations })
}

/// One asset's simulated chain.
#[derive(Debug, Clone, PartialEq)]
pub struct AssetPath {
    pub states: Vec<usize>,
    pub growth: Vec<f64>,
    pub innovations: Vec<f64>,
    /// `steps + 1` prices starting at the initial spot.
    pub prices: Vec<f64>,
}

pub fn simulate_path<R: Rng + ?Sized>(params: &HMMParams, steps: usize, spot: f64, rng: &mut R) -> Result<AssetPath> {
    let states = simulate_states(params, steps, None, rng)?;
    let Emissions { growth, innovations } = simulate_returns(params, &states, rng)?;
    let prices = prices_from_growth(spot, &growth)?;
    Ok(AssetPath { states, growth, innovations, prices })
}

/// `S_{t+1} = S_t exp(G_t)`; the output has one more entry than `growth`.
pub fn prices_from_growth(spot: f64, growth: &[f64]) -> Result<Vec<f64>> {
    ensure(spot.is_finite() && spot > 0.0, || format!("initial spot must be positive, got {spot}"))?;
    let mut prices = Vec::with_capacity(growth.len() + 1);
    let mut s = spot;
    prices.push(s);
    for g in growth {
        s *= g.exp();
        prices.push(s);
    }
    Ok(prices)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CopulaSpec {
    pub corr: Vec<Vec<f64>>,
    /// Copula degrees of freedom; `None` is the Gaussian limit.
    pub nu_c: Option<f64>,
}

impl CopulaSpec {
    pub fn independent(dim: usize, nu_c: Option<f64>) -> Self {
        let corr = (0..dim).map(|i| (0..dim).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect();
        CopulaSpec { corr, nu_c }
    }

    fn cholesky(&self) -> Result<DMatrix<f64>> {
        let d = self.corr.len();
        ensure(d >= 1, || "copula needs at least one asset".into())?;
        ensure(self.corr.iter().all(|r| r.len() == d), || "correlation matrix must be square".into())?;
        for i in 0..d {
            ensure((self.corr[i][i] - 1.0).abs() < 1e-12, || "correlation diagonal must be 1".into())?;
            for j in 0..d {
                ensure((self.corr[i][j] - self.corr[j][i]).abs() < 1e-12, || {
                    "correlation matrix must be symmetric".into()
                })?;
            }
        }
        if let Some(nu) = self.nu_c {
            ensure(nu.is_finite() && nu > 2.0, || format!("copula nu must exceed 2, got {nu}"))?;
        }
        let m = DMatrix::from_fn(d, d, |i, j| self.corr[i][j]);
        let chol = m.cholesky().ok_or_else(|| Error::invalid("correlation matrix is not positive definite"))?;
        Ok(chol.l())
    }
}

/// Joint paths, indexed `[asset][time]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathSet {
    pub prices: Vec<Vec<f64>>,
    pub states: Vec<Vec<usize>>,
    pub growth: Vec<Vec<f64>>,
}

/// Simulates several assets jointly under a Student-t copula.
///
/// Each step draws one copula uniform `U` per asset. `U` selects the next
/// state by inverting the jump-augmented transition row (states are ordered
/// by return level), and the position of `U` inside the selected state's
/// probability interval is itself uniform and drives the emission quantile.
/// Marginally every asset therefore follows its own chain exactly.
pub fn simulate_joint<R: Rng + ?Sized>(
    params_list: &[HMMParams],
    copula: &CopulaSpec,
    steps: usize,
    spots: &[f64],
    rng: &mut R,
) -> Result<PathSet> {
    let d = params_list.len();
    ensure(d >= 1, || "need at least one asset".into())?;
    ensure(copula.corr.len() == d, || format!("copula dimension {} does not match {d} assets", copula.corr.len()))?;
    ensure(spots.len() == d, || format!("need {d} initial spots, got {}", spots.len()))?;
    ensure(steps >= 1, || "need at least one step".into())?;
    for p in params_list {
        p.validate()?;
    }
    let chol = copula.cholesky()?;

    let jumps: Vec<Vec<f64>> = params_list.iter().map(HMMParams::jump_distribution).collect();
    let kernels: Vec<Vec<Vec<f64>>> =
        params_list.iter().zip(&jumps).map(|(p, j)| (1..=p.n_states).map(|s| p.kernel_row(s, j)).collect()).collect();
    let initial: Vec<Vec<f64>> = params_list.iter().map(HMMParams::stationary).collect();
    let emissions: Vec<StudentsTDist> = params_list
        .iter()
        .map(|p| StudentsTDist::new(0.0, 1.0, p.nu).map_err(|e| Error::invalid(format!("student-t: {e}"))))
        .collect::<Result<_>>()?;
    let copula_t = match copula.nu_c {
        Some(nu) => Some((
            StudentsTDist::new(0.0, 1.0, nu).map_err(|e| Error::invalid(format!("student-t: {e}")))?,
            ChiSquared::new(nu).map_err(|e| Error::invalid(format!("chi-squared: {e}")))?,
            nu,
        )),
        None => None,
    };
    let std_normal = NormalDist::new(0.0, 1.0).expect("standard normal");

    let mut states = vec![Vec::with_capacity(steps); d];
    let mut growth = vec![Vec::with_capacity(steps); d];
    let mut z = DVector::zeros(d);
    for t in 0..steps {
        for i in 0..d {
            z[i] = rng.sample::<f64, _>(StandardNormal);
        }
        let x = &chol * &z;
        let uniforms: Vec<f64> = match &copula_t {
            Some((tdist, chi, nu)) => {
                let w: f64 = chi.sample(rng);
                let scale = (w / nu).sqrt();
                x.iter().map(|xi| tdist.cdf(xi / scale)).collect()
            }
            None => x.iter().map(|xi| std_normal.cdf(*xi)).collect(),
        };
        for a in 0..d {
            let p = &params_list[a];
            let u = uniforms[a].clamp(UNIFORM_CLAMP, 1.0 - UNIFORM_CLAMP);
            let row = if t == 0 { &initial[a] } else { &kernels[a][states[a][t - 1] - 1] };
            let (k, lo, hi) = categorical_quantile(row, u);
            let v = if hi > lo { ((u - lo) / (hi - lo)).clamp(UNIFORM_CLAMP, 1.0 - UNIFORM_CLAMP) } else { 0.5 };
            let draw = emissions[a].inverse_cdf(v);
            states[a].push(k + 1);
            growth[a].push(p.mu[k] + p.sigma[k] * draw + p.drift_anchor);
        }
    }
    let prices = spots.iter().zip(&growth).map(|(s, g)| prices_from_growth(*s, g)).collect::<Result<_>>()?;
    Ok(PathSet { prices, states, growth })
}
