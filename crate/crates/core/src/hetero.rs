//! Controlled-variable calibration with known, standard-specific
//! preparation-error variances.
//!
//! Each standard `i` was prepared aiming at `X_i`, so given `X_i` the
//! response has variance `gamma_i = sigma_eps2 + beta^2 * delta_var_i`.
//! The intercept and `X0` are profiled out in closed form and the remaining
//! two-parameter likelihood in `(beta, sigma_eps2)` is maximized
//! numerically.

use crate::data::{check_slope, means, slope_threshold, FirstStageData, FitResult, SecondStageData, Theta};
use crate::error::{Error, Result};
use crate::optimize::{nelder_mead, SimplexOptions};
use crate::scalar::{csum, mean, CompensatedSum, Scalar};
use crate::usual::{confidence_interval, expanded_uncertainty, ols_slope};

/// Marginal response variances `gamma_i` of the standards.
#[derive(Debug, Clone, PartialEq)]
pub struct Gamma<T>(Vec<T>);

impl<T: Scalar> Gamma<T> {
    pub fn values(&self) -> &[T] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<T> {
        self.0
    }
}

pub fn gamma<T: Scalar>(beta: T, sigma_eps2: T, first: &FirstStageData<T>) -> Gamma<T> {
    let b2 = beta * beta;
    Gamma(first.delta_var().iter().map(|&d| sigma_eps2 + b2 * d).collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions<T> {
    pub max_iterations: usize,
    /// Relative spread of the simplex objective values at termination.
    pub objective_tol: T,
    /// Multiplied by `sum |X_i r_i / gamma_i| + 1` to bound both score residuals.
    pub score_tol: T,
    /// Replaces the least-squares starting point.
    pub initial_theta: Option<Theta<T>>,
    pub ci_level: T,
}

impl<T: Scalar> Default for FitOptions<T> {
    fn default() -> Self {
        Self {
            max_iterations: 10_000,
            objective_tol: T::lit(1e-12).max(T::epsilon() * T::lit(4.0)),
            score_tol: T::lit(1e-6).max(T::epsilon().sqrt()),
            initial_theta: None,
            ci_level: T::lit(0.95),
        }
    }
}

impl<T: Scalar> FitOptions<T> {
    fn check(&self) -> Result<()> {
        if self.max_iterations == 0 {
            return Err(Error::InvalidOptions("max_iterations must be at least 1"));
        }
        if !(self.objective_tol > T::zero() && self.score_tol > T::zero()) {
            return Err(Error::InvalidOptions("tolerances must be positive"));
        }
        let lvl = self.ci_level;
        if !(lvl > T::zero() && lvl < T::one()) {
            return Err(Error::InvalidLevel(lvl.to_f64_lossy()));
        }
        Ok(())
    }
}

/// Log-likelihood of both stages, without the `2 pi` constant.
pub fn log_likelihood<T: Scalar>(
    theta: &Theta<T>,
    first: &FirstStageData<T>,
    second: &SecondStageData<T>,
) -> Result<T> {
    theta.require_positive_variance()?;
    let g = gamma(theta.beta, theta.sigma_eps2, first);
    let half = T::lit(0.5);
    let mut acc = CompensatedSum::new();
    for ((&x, &y), &gi) in first.x_fixed().iter().zip(first.y()).zip(g.values()) {
        let r = y - theta.alpha - theta.beta * x;
        acc.add(-half * gi.ln());
        acc.add(-half * r * r / gi);
    }
    let k = T::count(second.k());
    acc.add(-half * k * theta.sigma_eps2.ln());
    let mu0 = theta.alpha + theta.beta * theta.x0;
    let ss0 = csum(second.y0().iter().map(|&v| (v - mu0) * (v - mu0)));
    acc.add(-half * ss0 / theta.sigma_eps2);
    Ok(acc.value())
}

/// Closed-form intercept and `X0` at a given slope.
pub fn profile_alpha_x0<T: Scalar>(beta: T, first: &FirstStageData<T>, second: &SecondStageData<T>) -> Result<(T, T)> {
    check_slope(beta, slope_threshold(first, second))?;
    let m = means(first, second);
    let alpha = m.y_bar - beta * m.x_bar;
    Ok((alpha, (m.y0_bar - alpha) / beta))
}

/// Log-likelihood with intercept and `X0` profiled out.
pub fn profiled_log_likelihood<T: Scalar>(
    beta: T,
    sigma_eps2: T,
    first: &FirstStageData<T>,
    second: &SecondStageData<T>,
) -> Result<T> {
    if !(sigma_eps2 > T::zero() && sigma_eps2.is_finite()) {
        return Err(Error::NonPositiveVariance(sigma_eps2.to_f64_lossy()));
    }
    Ok(Centered::new(first).profiled(beta, sigma_eps2, second.k(), second.sum_sq_dev()))
}

/// Score residuals `(r_beta, r_sigma)` of the profiled likelihood.
///
/// `r_sigma` is the difference between the two sides of the variance
/// equation. `r_beta` balances the slope equation with centered
/// concentrations `X_i - X_bar` on the data side, which is the stationarity
/// condition of the profiled likelihood. With equal `gamma_i` the centering
/// changes nothing because the profiled residuals sum to zero.
pub fn score_residuals<T: Scalar>(
    theta: &Theta<T>,
    first: &FirstStageData<T>,
    second: &SecondStageData<T>,
) -> Result<(T, T)> {
    theta.require_positive_variance()?;
    Ok(raw_scores(theta, first, second.k(), second.sum_sq_dev()))
}

fn raw_scores<T: Scalar>(theta: &Theta<T>, first: &FirstStageData<T>, k: usize, ss0: T) -> (T, T) {
    let s2 = theta.sigma_eps2;
    let g = gamma(theta.beta, s2, first);
    let xb = mean(first.x_fixed());
    let mut lhs_b = CompensatedSum::new();
    let mut rhs_b = CompensatedSum::new();
    let mut lhs_s = CompensatedSum::new();
    for (((&x, &y), &d), &gi) in first
        .x_fixed()
        .iter()
        .zip(first.y())
        .zip(first.delta_var())
        .zip(g.values())
    {
        let r = y - theta.alpha - theta.beta * x;
        let excess = gi - r * r;
        lhs_b.add(theta.beta * d * excess / (gi * gi));
        rhs_b.add((x - xb) * r / gi);
        lhs_s.add(excess / (gi * gi));
    }
    let rhs_s = ss0 / (s2 * s2) - T::count(k) / s2;
    (lhs_b.value() - rhs_b.value(), lhs_s.value() - rhs_s)
}

/// `sum |X_i r_i / gamma_i| + 1`.
fn score_scale<T: Scalar>(theta: &Theta<T>, first: &FirstStageData<T>) -> T {
    let g = gamma(theta.beta, theta.sigma_eps2, first);
    csum(
        first
            .x_fixed()
            .iter()
            .zip(first.y())
            .zip(g.values())
            .map(|((&x, &y), &gi)| ((y - theta.alpha - theta.beta * x) * x / gi).abs()),
    ) + T::one()
}

/// Centered first-stage data for the profiled objective.
struct Centered<T> {
    dx: Vec<T>,
    dy: Vec<T>,
    delta_var: Vec<T>,
}

impl<T: Scalar> Centered<T> {
    fn new(first: &FirstStageData<T>) -> Self {
        let xb = mean(first.x_fixed());
        let yb = mean(first.y());
        Self {
            dx: first.x_fixed().iter().map(|&x| x - xb).collect(),
            dy: first.y().iter().map(|&y| y - yb).collect(),
            delta_var: first.delta_var().to_vec(),
        }
    }

    fn profiled(&self, beta: T, s2: T, k: usize, ss0: T) -> T {
        let half = T::lit(0.5);
        let b2 = beta * beta;
        let mut acc = CompensatedSum::new();
        for ((&dx, &dy), &d) in self.dx.iter().zip(&self.dy).zip(&self.delta_var) {
            let g = s2 + b2 * d;
            let r = dy - beta * dx;
            acc.add(-half * g.ln());
            acc.add(-half * r * r / g);
        }
        acc.add(-half * T::count(k) * s2.ln());
        acc.add(-half * ss0 / s2);
        acc.value()
    }
}

/// Least-squares slope and the replicate variance of the sample.
pub fn initial_theta<T: Scalar>(first: &FirstStageData<T>, second: &SecondStageData<T>) -> Result<Theta<T>> {
    let beta = ols_slope(first);
    let (alpha, x0) = profile_alpha_x0(beta, first, second)?;
    let mut s2 = second.sum_sq_dev() / T::count(second.k());
    if !(s2 > T::zero()) {
        let ssr = csum(first.x_fixed().iter().zip(first.y()).map(|(&x, &y)| {
            let r = y - alpha - beta * x;
            r * r
        }));
        s2 = ssr / T::count(first.n() + second.k());
    }
    Ok(Theta::new(alpha, beta, x0, s2))
}

struct Attempt<T> {
    beta: T,
    s2: T,
    loglik: T,
    iterations: usize,
    simplex_converged: bool,
}

fn maximize<T: Scalar>(start: (T, T), centered: &Centered<T>, k: usize, ss0: T, opts: &FitOptions<T>) -> Attempt<T> {
    let (b0, s0) = start;
    let objective = |p: &[T]| -centered.profiled(p[0], p[1].exp(), k, ss0);
    let beta_step = if b0 != T::zero() {
        b0.abs() * T::lit(0.05)
    } else {
        T::lit(0.05)
    };
    let simplex = SimplexOptions {
        max_iterations: opts.max_iterations,
        ftol: opts.objective_tol,
        xtol: opts.objective_tol.sqrt(),
    };
    let out = nelder_mead(objective, &[b0, s0.ln()], &[beta_step, T::one()], &simplex);
    Attempt {
        beta: out.x[0],
        s2: out.x[1].exp(),
        loglik: -out.fx,
        iterations: out.iterations,
        simplex_converged: out.converged,
    }
}

/// Newton iterations on the score equations, started at the simplex optimum.
/// A step is kept only if it shrinks the score without lowering the profiled
/// likelihood, and iteration ends once steps fall to rounding level.
fn polish<T: Scalar>(
    attempt: &mut Attempt<T>,
    first: &FirstStageData<T>,
    second: &SecondStageData<T>,
    centered: &Centered<T>,
    target: T,
) -> Result<()> {
    let (k, ss0) = (second.k(), second.sum_sq_dev());
    let scores = |b: T, s2: T| -> Result<(T, T)> {
        let (a, x0) = profile_alpha_x0(b, first, second)?;
        Ok(raw_scores(&Theta::new(a, b, x0, s2), first, k, ss0))
    };
    let slack = T::epsilon() * T::lit(64.0) * (attempt.loglik.abs() + T::one());
    for _ in 0..50 {
        let (b, s2) = (attempt.beta, attempt.s2);
        let g = scores(b, s2)?;
        let norm = g.0.abs().max(g.1.abs());
        if norm == T::zero() {
            break;
        }
        let hb = T::lit(1e-6) * b.abs().max(T::epsilon().sqrt());
        let hs = T::lit(1e-6) * s2;
        let (bp, bm) = (scores(b + hb, s2)?, scores(b - hb, s2)?);
        let (sp, sm) = (scores(b, s2 + hs)?, scores(b, s2 - hs)?);
        let two = T::lit(2.0);
        let j = [
            [(bp.0 - bm.0) / (two * hb), (sp.0 - sm.0) / (two * hs)],
            [(bp.1 - bm.1) / (two * hb), (sp.1 - sm.1) / (two * hs)],
        ];
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        if !(det.is_finite() && det != T::zero()) {
            break;
        }
        let db = -(j[1][1] * g.0 - j[0][1] * g.1) / det;
        let ds = -(-j[1][0] * g.0 + j[0][0] * g.1) / det;
        let tiny = T::epsilon() * T::lit(4.0);
        if db.abs() <= tiny * b.abs() && ds.abs() <= tiny * s2 && norm < target {
            break;
        }
        let mut t = T::one();
        let mut accepted = false;
        for _ in 0..30 {
            let (nb, ns) = (b + t * db, s2 + t * ds);
            if ns > T::zero() && nb.is_finite() {
                let ll = centered.profiled(nb, ns, k, ss0);
                if let Ok(ng) = scores(nb, ns) {
                    let nn = ng.0.abs().max(ng.1.abs());
                    if ll >= attempt.loglik - slack && nn < norm {
                        attempt.beta = nb;
                        attempt.s2 = ns;
                        attempt.loglik = attempt.loglik.max(ll);
                        attempt.iterations += 1;
                        accepted = true;
                        break;
                    }
                }
            }
            t = t * T::lit(0.5);
        }
        if !accepted {
            break;
        }
    }
    Ok(())
}

/// Maximum-likelihood fit of the controlled-variable model.
///
/// A fit that fails the objective or score tolerances is retried once from
/// the starting slope scaled by 1.05. If that also fails the better of the
/// two iterates is returned with `converged = false`.
pub fn fit_hetero<T: Scalar>(
    first: &FirstStageData<T>,
    second: &SecondStageData<T>,
    opts: &FitOptions<T>,
) -> Result<FitResult<T>> {
    opts.check()?;
    let k = second.k();
    let ss0 = second.sum_sq_dev();
    let init = match opts.initial_theta {
        Some(t) => t,
        None => initial_theta(first, second)?,
    };
    check_slope(init.beta, slope_threshold(first, second))?;

    if let Some(fit) = exact_fit(first, second, &init, opts)? {
        return Ok(fit);
    }
    if !(ss0 > T::zero()) {
        // Identical replicates push the variance to the boundary.
        return Err(Error::NonPositiveVariance(0.0));
    }
    init.require_positive_variance()?;

    let centered = Centered::new(first);
    let mut total_iterations = 0;
    let mut best: Option<(Attempt<T>, bool, T)> = None;
    for beta_start in [init.beta, init.beta * T::lit(1.05)] {
        let mut attempt = maximize((beta_start, init.sigma_eps2), &centered, k, ss0, opts);
        if !(attempt.s2 > T::zero() && attempt.s2.is_finite()) {
            total_iterations += attempt.iterations;
            continue;
        }
        let (a, x0) = profile_alpha_x0(attempt.beta, first, second)?;
        let target = opts.score_tol * score_scale(&Theta::new(a, attempt.beta, x0, attempt.s2), first);
        polish(&mut attempt, first, second, &centered, target)?;
        total_iterations += attempt.iterations;

        let (a, x0) = profile_alpha_x0(attempt.beta, first, second)?;
        let theta = Theta::new(a, attempt.beta, x0, attempt.s2);
        let (rb, rs) = raw_scores(&theta, first, k, ss0);
        let norm = rb.abs().max(rs.abs());
        let ok = attempt.simplex_converged && norm < opts.score_tol * score_scale(&theta, first);
        let better = match &best {
            None => true,
            Some((b, b_ok, _)) => (ok && !b_ok) || (ok == *b_ok && attempt.loglik > b.loglik),
        };
        if better {
            best = Some((attempt, ok, norm));
        }
        if ok {
            break;
        }
    }

    let (attempt, converged, norm) = best.ok_or(Error::NonPositiveVariance(0.0))?;
    let beta = attempt.beta;
    check_slope(beta, slope_threshold(first, second))?;
    let (alpha, x0) = profile_alpha_x0(beta, first, second)?;
    let theta = Theta::new(alpha, beta, x0, attempt.s2);
    theta.require_positive_variance()?;
    let var_x0 = variance_x0(&theta, first, k)?;
    let (ci_lower, ci_upper) = confidence_interval(x0, var_x0.max(T::zero()), opts.ci_level)?;
    Ok(FitResult {
        theta_hat: theta,
        var_x0,
        ci_lower,
        ci_upper,
        expanded_uncertainty: expanded_uncertainty(var_x0.max(T::zero())),
        log_likelihood: log_likelihood(&theta, first, second)?,
        converged,
        iterations: total_iterations,
        score_residual_norm: norm,
    })
}

/// Noise-free data: every standard on the line and identical replicates.
fn exact_fit<T: Scalar>(
    first: &FirstStageData<T>,
    second: &SecondStageData<T>,
    init: &Theta<T>,
    opts: &FitOptions<T>,
) -> Result<Option<FitResult<T>>> {
    let yb = mean(first.y());
    let spread = csum(first.y().iter().map(|&y| (y - yb) * (y - yb)));
    let ssr = csum(first.x_fixed().iter().zip(first.y()).map(|(&x, &y)| {
        let r = y - init.alpha - init.beta * x;
        r * r
    }));
    let eps = T::epsilon() * T::lit(64.0);
    if second.sum_sq_dev() > T::zero() || ssr > eps * eps * spread {
        return Ok(None);
    }
    let theta = Theta {
        sigma_eps2: T::zero(),
        ..*init
    };
    let (ci_lower, ci_upper) = confidence_interval(theta.x0, T::zero(), opts.ci_level)?;
    Ok(Some(FitResult {
        theta_hat: theta,
        var_x0: T::zero(),
        ci_lower,
        ci_upper,
        expanded_uncertainty: T::zero(),
        log_likelihood: T::infinity(),
        converged: true,
        iterations: 0,
        score_residual_norm: T::zero(),
    }))
}

/// Sums over the standards that make up the information matrix.
#[derive(Debug, Clone, Copy)]
struct InfoSums<T> {
    /// sum 1/gamma
    s1: T,
    /// sum 1/gamma^2
    s2: T,
    /// sum X/gamma
    sx: T,
    /// sum X^2/gamma
    sxx: T,
    /// sum delta_var/gamma^2
    sd2: T,
    /// sum delta_var^2/gamma^2
    sd4: T,
    /// sum 1/(2 gamma^2)
    half_s2: T,
}

impl<T: Scalar> InfoSums<T> {
    fn new(theta: &Theta<T>, first: &FirstStageData<T>) -> Self {
        let g = gamma(theta.beta, theta.sigma_eps2, first);
        let mut acc: [CompensatedSum<T>; 7] = Default::default();
        for ((&x, &d), &gi) in first.x_fixed().iter().zip(first.delta_var()).zip(g.values()) {
            let g2 = gi * gi;
            acc[0].add(T::one() / gi);
            acc[1].add(T::one() / g2);
            acc[2].add(x / gi);
            acc[3].add(x * x / gi);
            acc[4].add(d / g2);
            acc[5].add(d * d / g2);
            acc[6].add(T::one() / (T::lit(2.0) * g2));
        }
        Self {
            s1: acc[0].value(),
            s2: acc[1].value(),
            sx: acc[2].value(),
            sxx: acc[3].value(),
            sd2: acc[4].value(),
            sd4: acc[5].value(),
            half_s2: acc[6].value(),
        }
    }
}

/// Expected information for `(alpha, beta, x0, sigma_eps2)`, in that order.
pub fn fisher_information<T: Scalar>(theta: &Theta<T>, first: &FirstStageData<T>, k: usize) -> Result<[[T; 4]; 4]> {
    theta.require_positive_variance()?;
    let s = InfoSums::new(theta, first);
    let (b, x0, v) = (theta.beta, theta.x0, theta.sigma_eps2);
    let kf = T::count(k);
    let two = T::lit(2.0);
    let z = T::zero();

    let i11 = s.s1 + kf / v;
    let i12 = s.sx + kf * x0 / v;
    let i13 = kf * b / v;
    let i22 = s.sxx + two * b * b * s.sd4 + kf * x0 * x0 / v;
    let i23 = kf * b * x0 / v;
    let i24 = b * s.sd2;
    let i33 = kf * b * b / v;
    let i44 = s.half_s2 + kf / (two * v * v);
    Ok([
        [i11, i12, i13, z],
        [i12, i22, i23, i24],
        [i13, i23, i33, z],
        [z, i24, z, i44],
    ])
}

/// Asymptotic variance of `X0_hat`: the `(x0, x0)` element of the inverse
/// information, written out in closed form.
pub fn variance_x0<T: Scalar>(theta: &Theta<T>, first: &FirstStageData<T>, k: usize) -> Result<T> {
    if theta.beta == T::zero() || !theta.beta.is_finite() {
        return Err(Error::SlopeNearZero(theta.beta.to_f64_lossy()));
    }
    theta.require_positive_variance()?;
    let n = T::count(first.n());
    let kf = T::count(k);
    let s = InfoSums::new(theta, first);
    let (b2, x0) = (theta.beta * theta.beta, theta.x0);
    let v = theta.sigma_eps2;
    let (v2, v3) = (v * v, v * v * v);
    let two = T::lit(2.0);
    let (s1, s2, sx, sxx, sd2, sd4) = (s.s1, s.s2, s.sx, s.sxx, s.sd2, s.sd4);

    let e1_terms = [
        -n * x0 * x0 * v2 * s1 * s2,
        -n * kf * x0 * x0 * s1,
        -n * v2 * sxx * s2,
        -n * kf * sxx,
        -two * n * b2 * v2 * sd4 * s2,
        -two * n * kf * b2 * sd4,
        two * n * b2 * v2 * sd2 * sd2,
        two * n * x0 * v2 * sx * s2,
        two * n * kf * x0 * sx,
        v3 * sxx * s2 * s1,
        kf * v * sxx * s1,
        two * b2 * v3 * sd4 * s2 * s1,
        two * kf * b2 * v * s1 * sd4,
        -two * b2 * v3 * sd2 * sd2 * s1,
        -v3 * sx * sx * s2,
        -kf * v * sx * sx,
    ];
    let e2_terms = [
        v2 * sxx * s2 * s1,
        kf * sxx * s1,
        two * v2 * b2 * sd4 * s2 * s1,
        two * kf * b2 * sd4 * s1,
        -two * b2 * v2 * sd2 * sd2 * s1,
        -v2 * sx * sx * s2,
        -kf * sx * sx,
    ];
    let e1 = csum(e1_terms);
    let e2 = csum(e2_terms);
    let e2_mag = csum(e2_terms.iter().map(|t| t.abs()));
    if !(e2.abs() > T::epsilon() * T::lit(16.0) * e2_mag) {
        return Err(Error::SingularInformation);
    }
    let bracket = T::one() / n + T::one() / kf - e1 / (n * v * e2);
    Ok(v / b2 * bracket)
}
