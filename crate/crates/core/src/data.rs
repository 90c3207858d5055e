//! Calibration data and estimation results.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{mean, Scalar};

/// Calibration standards: target concentrations, instrument responses, and
/// the known variance of each standard's preparation error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FirstStageData<T> {
    x_fixed: Vec<T>,
    y: Vec<T>,
    delta_var: Vec<T>,
}

impl<T: Scalar> FirstStageData<T> {
    pub fn new(x_fixed: Vec<T>, y: Vec<T>, delta_var: Vec<T>) -> Result<Self> {
        let data = Self { x_fixed, y, delta_var };
        data.check()?;
        Ok(data)
    }

    /// Standards with exact concentrations.
    pub fn exact(x_fixed: Vec<T>, y: Vec<T>) -> Result<Self> {
        let n = x_fixed.len();
        Self::new(x_fixed, y, vec![T::zero(); n])
    }

    fn check(&self) -> Result<()> {
        let (nx, ny, nd) = (self.x_fixed.len(), self.y.len(), self.delta_var.len());
        if nx != ny || nx != nd {
            return Err(Error::MismatchedLengths {
                x: nx,
                y: ny,
                delta_var: nd,
            });
        }
        if nx < 3 {
            return Err(Error::TooFewStandards(nx));
        }
        for (field, v) in [("x", &self.x_fixed), ("y", &self.y), ("delta_var", &self.delta_var)] {
            if let Some(index) = v.iter().position(|a| !a.is_finite()) {
                return Err(Error::NonFinite { field, index });
            }
        }
        if let Some(index) = self.delta_var.iter().position(|&d| d < T::zero()) {
            return Err(Error::NegativeVariance {
                index,
                value: self.delta_var[index].to_f64_lossy(),
            });
        }
        let first = self.x_fixed[0];
        if self.x_fixed.iter().all(|&x| x == first) {
            return Err(Error::DegenerateDesign);
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.x_fixed.len()
    }

    pub fn x_fixed(&self) -> &[T] {
        &self.x_fixed
    }

    pub fn y(&self) -> &[T] {
        &self.y
    }

    pub fn delta_var(&self) -> &[T] {
        &self.delta_var
    }

    /// True when every standard is treated as exact.
    pub fn is_exact(&self) -> bool {
        self.delta_var.iter().all(|d| d.is_zero())
    }

    /// Copy of the standards with the same response vector replaced.
    pub fn with_y(&self, y: Vec<T>) -> Result<Self> {
        Self::new(self.x_fixed.clone(), y, self.delta_var.clone())
    }

    /// Copy of the standards with the error variances replaced.
    pub fn with_delta_var(&self, delta_var: Vec<T>) -> Result<Self> {
        Self::new(self.x_fixed.clone(), self.y.clone(), delta_var)
    }
}

/// Replicate responses of the sample with unknown concentration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SecondStageData<T> {
    y0: Vec<T>,
}

impl<T: Scalar> SecondStageData<T> {
    pub fn new(y0: Vec<T>) -> Result<Self> {
        let data = Self { y0 };
        data.check()?;
        Ok(data)
    }

    fn check(&self) -> Result<()> {
        if self.y0.len() < 2 {
            return Err(Error::TooFewReplicates(self.y0.len()));
        }
        if let Some(index) = self.y0.iter().position(|a| !a.is_finite()) {
            return Err(Error::NonFinite { field: "y0", index });
        }
        Ok(())
    }

    pub fn k(&self) -> usize {
        self.y0.len()
    }

    pub fn y0(&self) -> &[T] {
        &self.y0
    }

    /// Sum of squared deviations of the replicates about their mean.
    pub fn sum_sq_dev(&self) -> T {
        let m = mean(&self.y0);
        crate::scalar::csum(self.y0.iter().map(|&v| (v - m) * (v - m)))
    }
}

/// Checks both stages and hands them back unchanged.
pub fn validate<T: Scalar>(
    first: FirstStageData<T>,
    second: SecondStageData<T>,
) -> Result<(FirstStageData<T>, SecondStageData<T>)> {
    first.check()?;
    second.check()?;
    Ok((first, second))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Means<T> {
    pub x_bar: T,
    pub y_bar: T,
    pub y0_bar: T,
}

/// Arithmetic means of the concentrations, responses and replicate responses.
pub fn means<T: Scalar>(first: &FirstStageData<T>, second: &SecondStageData<T>) -> Means<T> {
    Means {
        x_bar: mean(first.x_fixed()),
        y_bar: mean(first.y()),
        y0_bar: mean(second.y0()),
    }
}

/// Model parameters `(alpha, beta, x0, sigma_eps2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Theta<T> {
    pub alpha: T,
    pub beta: T,
    pub x0: T,
    pub sigma_eps2: T,
}

impl<T: Scalar> Theta<T> {
    pub fn new(alpha: T, beta: T, x0: T, sigma_eps2: T) -> Self {
        Self {
            alpha,
            beta,
            x0,
            sigma_eps2,
        }
    }

    /// `Err(NonPositiveVariance)` unless `sigma_eps2 > 0`.
    pub fn require_positive_variance(&self) -> Result<()> {
        if self.sigma_eps2 > T::zero() && self.sigma_eps2.is_finite() {
            Ok(())
        } else {
            Err(Error::NonPositiveVariance(self.sigma_eps2.to_f64_lossy()))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitResult<T> {
    pub theta_hat: Theta<T>,
    pub var_x0: T,
    pub ci_lower: T,
    pub ci_upper: T,
    pub expanded_uncertainty: T,
    pub log_likelihood: T,
    pub converged: bool,
    pub iterations: usize,
    pub score_residual_norm: T,
}

impl<T: Scalar> FitResult<T> {
    /// Turns a non-converged fit into `Err(NoConvergence)`.
    pub fn into_converged(self) -> Result<Self> {
        if self.converged {
            Ok(self)
        } else {
            Err(Error::NoConvergence(self.iterations))
        }
    }

    /// Whether the interval contains `x0`, endpoints included.
    pub fn covers(&self, x0: T) -> bool {
        self.ci_lower <= x0 && x0 <= self.ci_upper
    }

    pub fn half_width(&self) -> T {
        (self.ci_upper - self.ci_lower) / T::lit(2.0)
    }
}

/// Response and concentration scales used for the near-zero slope test.
pub(crate) fn slope_threshold<T: Scalar>(first: &FirstStageData<T>, second: &SecondStageData<T>) -> T {
    let resp = first
        .y()
        .iter()
        .chain(second.y0())
        .fold(T::zero(), |m, v| m.max(v.abs()));
    let xb = mean(first.x_fixed());
    let conc = first.x_fixed().iter().fold(T::zero(), |m, &x| m.max((x - xb).abs()));
    T::lit(1e-12) * resp / conc
}

pub(crate) fn check_slope<T: Scalar>(beta: T, threshold: T) -> Result<()> {
    if beta.is_finite() && beta.abs() > threshold {
        Ok(())
    } else {
        Err(Error::SlopeNearZero(beta.to_f64_lossy()))
    }
}
