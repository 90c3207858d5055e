//! Classical calibration: ordinary least squares on the standards, inverted
//! at the mean sample response.

use statrs::distribution::{ContinuousCDF, Normal};

use crate::data::{check_slope, means, slope_threshold, FirstStageData, FitResult, SecondStageData, Theta};
use crate::error::{Error, Result};
use crate::scalar::{csum, mean, Scalar};
use crate::EXPANSION_FACTOR;

/// Centered moments `(S_xx, S_xY)` with divisor `n`.
fn moments<T: Scalar>(first: &FirstStageData<T>) -> (T, T) {
    let n = T::count(first.n());
    let xb = mean(first.x_fixed());
    let yb = mean(first.y());
    let sxx = csum(first.x_fixed().iter().map(|&x| (x - xb) * (x - xb))) / n;
    let sxy = csum(
        first
            .x_fixed()
            .iter()
            .zip(first.y())
            .map(|(&x, &y)| (x - xb) * (y - yb)),
    ) / n;
    (sxx, sxy)
}

/// Least-squares slope of the first stage.
pub fn ols_slope<T: Scalar>(first: &FirstStageData<T>) -> T {
    let (sxx, sxy) = moments(first);
    sxy / sxx
}

/// Closed-form maximum-likelihood fit of the usual calibration model.
///
/// The concentrations are treated as exact regardless of `delta_var`. The
/// residual variance uses the MLE divisor `n + k`.
pub fn fit_usual<T: Scalar>(first: &FirstStageData<T>, second: &SecondStageData<T>, level: T) -> Result<FitResult<T>> {
    let (n, k) = (first.n(), second.k());
    let m = means(first, second);
    let beta = ols_slope(first);
    check_slope(beta, slope_threshold(first, second))?;
    let alpha = m.y_bar - beta * m.x_bar;
    let x0 = (m.y0_bar - alpha) / beta;

    let resid: Vec<T> = first
        .x_fixed()
        .iter()
        .zip(first.y())
        .map(|(&x, &y)| y - alpha - beta * x)
        .collect();
    let ssr = csum(resid.iter().map(|&r| r * r));
    let sigma_eps2 = (ssr + second.sum_sq_dev()) / T::count(n + k);

    let theta = Theta::new(alpha, beta, x0, sigma_eps2);
    let var_x0 = variance_usual(&theta, first, k)?;
    let (ci_lower, ci_upper) = confidence_interval(x0, var_x0, level)?;

    // Normal equations: sum(r) = 0 and sum(x r) = 0.
    let r0 = csum(resid.iter().copied());
    let r1 = csum(resid.iter().zip(first.x_fixed()).map(|(&r, &x)| r * x));
    let total = T::count(n + k);
    let log_likelihood = -total / T::lit(2.0) * (sigma_eps2.ln() + T::one());

    Ok(FitResult {
        theta_hat: theta,
        var_x0,
        ci_lower,
        ci_upper,
        expanded_uncertainty: expanded_uncertainty(var_x0),
        log_likelihood,
        converged: true,
        iterations: 0,
        score_residual_norm: r0.abs().max(r1.abs()),
    })
}

/// First-order variance of `X0_hat` under the usual model.
pub fn variance_usual<T: Scalar>(theta: &Theta<T>, first: &FirstStageData<T>, k: usize) -> Result<T> {
    if theta.beta == T::zero() || !theta.beta.is_finite() {
        return Err(Error::SlopeNearZero(theta.beta.to_f64_lossy()));
    }
    let n = T::count(first.n());
    let kf = T::count(k.max(1));
    let (sxx, _) = moments(first);
    let xb = mean(first.x_fixed());
    let d = xb - theta.x0;
    let bracket = T::one() / kf + T::one() / n + d * d / (n * sxx);
    Ok(theta.sigma_eps2 / (theta.beta * theta.beta) * bracket)
}

/// Two-sided normal-theory interval `x0_hat -/+ z * sqrt(var_x0)`.
pub fn confidence_interval<T: Scalar>(x0_hat: T, var_x0: T, level: T) -> Result<(T, T)> {
    let lvl = level.to_f64_lossy();
    if !(lvl > 0.0 && lvl < 1.0) {
        return Err(Error::InvalidLevel(lvl));
    }
    if var_x0 < T::zero() || var_x0.is_nan() {
        return Err(Error::NegativeEstimate(var_x0.to_f64_lossy()));
    }
    let half = T::lit(normal_quantile(1.0 - (1.0 - lvl) / 2.0)) * var_x0.sqrt();
    Ok((x0_hat - half, x0_hat + half))
}

/// `1.96 * sqrt(var_x0)`.
pub fn expanded_uncertainty<T: Scalar>(var_x0: T) -> T {
    T::lit(EXPANSION_FACTOR) * var_x0.sqrt()
}

pub(crate) fn normal_quantile(p: f64) -> f64 {
    Normal::standard().inverse_cdf(p)
}
