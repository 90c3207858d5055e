//! Repeated-sampling study of both estimators under the controlled-variable
//! model.
//!
//! Every replicate draws from its own ChaCha8 stream, selected by the
//! replicate index under the scenario seed, and results are reduced in
//! replicate order. Summaries are therefore identical for any number of
//! worker threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{FirstStageData, FitResult, SecondStageData, Theta};
use crate::error::{Error, Result};
use crate::hetero::{fit_hetero, variance_x0, FitOptions};
use crate::scalar::csum;
use crate::usual::{fit_usual, variance_usual};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub n: usize,
    pub k: usize,
    pub x0_true: f64,
    pub alpha_true: f64,
    pub beta_true: f64,
    pub sigma_eps2_true: f64,
    pub delta_var_rule: Vec<f64>,
    pub x_grid: Vec<f64>,
    pub n_reps: usize,
    pub ci_level: f64,
    pub seed: u64,
}

impl ScenarioConfig {
    /// Line `0.1 + 2 x`, response variance 0.04, standards evenly spaced on
    /// `[0, 2]` with preparation variances rising linearly to 0.1.
    pub fn standard(n: usize, k: usize, x0_true: f64, n_reps: usize, seed: u64) -> Self {
        Self {
            n,
            k,
            x0_true,
            alpha_true: 0.1,
            beta_true: 2.0,
            sigma_eps2_true: 0.04,
            delta_var_rule: default_delta_vars(n),
            x_grid: default_grid(n),
            n_reps,
            ci_level: 0.95,
            seed,
        }
    }

    pub fn check(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidScenario(m));
        if self.x_grid.len() != self.n || self.delta_var_rule.len() != self.n {
            return bad(format!(
                "n = {} but the grid has {} points and the variance rule {}",
                self.n,
                self.x_grid.len(),
                self.delta_var_rule.len()
            ));
        }
        if self.n_reps == 0 {
            return bad("n_reps must be at least 1".into());
        }
        if !(self.ci_level > 0.0 && self.ci_level < 1.0) {
            return bad(format!("ci_level {} outside (0, 1)", self.ci_level));
        }
        if !(self.sigma_eps2_true >= 0.0) {
            return bad(format!("sigma_eps2 {} is negative", self.sigma_eps2_true));
        }
        for v in [self.x0_true, self.alpha_true, self.beta_true, self.sigma_eps2_true] {
            if !v.is_finite() {
                return bad("non-finite parameter".into());
            }
        }
        FirstStageData::new(self.x_grid.clone(), vec![0.0; self.n], self.delta_var_rule.clone())
            .map_err(|e| Error::InvalidScenario(e.to_string()))?;
        if self.k < 2 {
            return Err(Error::InvalidScenario(Error::TooFewReplicates(self.k).to_string()));
        }
        Ok(())
    }

    pub fn theta_true(&self) -> Theta<f64> {
        Theta::new(self.alpha_true, self.beta_true, self.x0_true, self.sigma_eps2_true)
    }
}

/// `n` evenly spaced concentrations from 0 to 2 inclusive.
pub fn default_grid(n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![0.0],
        _ => {
            let last = (n - 1) as f64;
            (0..n).map(|i| 2.0 * i as f64 / last).collect()
        }
    }
}

/// Preparation variances `i * 0.1 / n` for `i = 1..=n`.
pub fn default_delta_vars(n: usize) -> Vec<f64> {
    (1..=n)
        .map(|i| if i == n { 0.1 } else { i as f64 * 0.1 / n as f64 })
        .collect()
}

/// Stream for replicate `index` under `seed`.
pub fn replicate_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Draws one data set. The standards sit at the grid values while the
/// realized concentrations are `X_i - delta_i`.
pub fn generate_dataset<R: Rng + ?Sized>(
    cfg: &ScenarioConfig,
    rng: &mut R,
) -> Result<(FirstStageData<f64>, SecondStageData<f64>)> {
    let sd_eps = cfg.sigma_eps2_true.sqrt();
    let mut normal = || -> f64 { rng.sample(StandardNormal) };
    let latent: Vec<f64> = cfg
        .x_grid
        .iter()
        .zip(&cfg.delta_var_rule)
        .map(|(&x, &d)| x - d.sqrt() * normal())
        .collect();
    let y: Vec<f64> = latent
        .iter()
        .map(|&x| cfg.alpha_true + cfg.beta_true * x + sd_eps * normal())
        .collect();
    let mu0 = cfg.alpha_true + cfg.beta_true * cfg.x0_true;
    let y0: Vec<f64> = (0..cfg.k).map(|_| mu0 + sd_eps * normal()).collect();
    Ok((
        FirstStageData::new(cfg.x_grid.clone(), y, cfg.delta_var_rule.clone())?,
        SecondStageData::new(y0)?,
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelSummary {
    pub bias: f64,
    pub bias_se: f64,
    pub mse: f64,
    pub mse_se: f64,
    pub mean_est_var: f64,
    pub mean_est_var_se: f64,
    pub coverage_pct: f64,
    /// Mean interval half-width `z * sqrt(V_hat)`.
    pub mean_amplitude: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSummary {
    pub usual: ModelSummary,
    pub proposed: ModelSummary,
    pub theoretical_var_usual: f64,
    pub theoretical_var_proposed: f64,
    /// Replicates where either fit failed; they are left out of both summaries.
    pub n_failed: usize,
    pub n_used: usize,
}

#[derive(Debug, Clone, Copy)]
struct Estimate {
    x0: f64,
    var: f64,
    covered: bool,
    half_width: f64,
}

impl Estimate {
    fn from_fit(fit: &FitResult<f64>, x0_true: f64) -> Self {
        Self {
            x0: fit.theta_hat.x0,
            var: fit.var_x0,
            covered: fit.covers(x0_true),
            half_width: fit.half_width(),
        }
    }
}

fn replicate(cfg: &ScenarioConfig, index: usize, opts: &FitOptions<f64>) -> Option<(Estimate, Estimate)> {
    let mut rng = replicate_rng(cfg.seed, index as u64);
    let (first, second) = generate_dataset(cfg, &mut rng).ok()?;
    let usual = fit_usual(&first, &second, cfg.ci_level).ok()?;
    let proposed = fit_hetero(&first, &second, opts).ok()?.into_converged().ok()?;
    Some((
        Estimate::from_fit(&usual, cfg.x0_true),
        Estimate::from_fit(&proposed, cfg.x0_true),
    ))
}

fn mean_and_se(v: &[f64]) -> (f64, f64) {
    let m = v.len() as f64;
    let mean = csum(v.iter().copied()) / m;
    if v.len() < 2 {
        return (mean, 0.0);
    }
    let ss = csum(v.iter().map(|&a| (a - mean) * (a - mean)));
    (mean, (ss / (m - 1.0)).sqrt() / m.sqrt())
}

fn summarize(est: &[Estimate], x0_true: f64) -> ModelSummary {
    let err: Vec<f64> = est.iter().map(|e| e.x0 - x0_true).collect();
    let sq: Vec<f64> = err.iter().map(|e| e * e).collect();
    let var: Vec<f64> = est.iter().map(|e| e.var).collect();
    let (bias, bias_se) = mean_and_se(&err);
    let (mse, mse_se) = mean_and_se(&sq);
    let (mean_est_var, mean_est_var_se) = mean_and_se(&var);
    let covered = est.iter().filter(|e| e.covered).count();
    ModelSummary {
        bias,
        bias_se,
        mse,
        mse_se,
        mean_est_var,
        mean_est_var_se,
        coverage_pct: 100.0 * covered as f64 / est.len() as f64,
        mean_amplitude: csum(est.iter().map(|e| e.half_width)) / est.len() as f64,
    }
}

/// Both first-order variances at the true parameters on the fixed grid.
pub fn theoretical_variances(cfg: &ScenarioConfig) -> Result<(f64, f64)> {
    let first = FirstStageData::new(cfg.x_grid.clone(), vec![0.0; cfg.n], cfg.delta_var_rule.clone())?;
    let theta = cfg.theta_true();
    let usual = variance_usual(&theta, &first, cfg.k)?;
    let proposed = if cfg.sigma_eps2_true > 0.0 {
        variance_x0(&theta, &first, cfg.k)?
    } else if first.is_exact() {
        0.0
    } else {
        f64::NAN
    };
    Ok((usual, proposed))
}

/// Simulates `cfg.n_reps` data sets and fits both models to each, on the
/// current rayon pool.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<ScenarioSummary> {
    cfg.check()?;
    let opts = FitOptions {
        ci_level: cfg.ci_level,
        ..FitOptions::default()
    };
    let outcomes: Vec<Option<(Estimate, Estimate)>> = (0..cfg.n_reps)
        .into_par_iter()
        .map(|i| replicate(cfg, i, &opts))
        .collect();

    let (usual, proposed): (Vec<Estimate>, Vec<Estimate>) = outcomes.iter().flatten().copied().unzip();
    let n_used = usual.len();
    if n_used == 0 {
        return Err(Error::AllReplicatesFailed(cfg.n_reps));
    }
    let (theoretical_var_usual, theoretical_var_proposed) = theoretical_variances(cfg)?;
    Ok(ScenarioSummary {
        usual: summarize(&usual, cfg.x0_true),
        proposed: summarize(&proposed, cfg.x0_true),
        theoretical_var_usual,
        theoretical_var_proposed,
        n_failed: cfg.n_reps - n_used,
        n_used,
    })
}
