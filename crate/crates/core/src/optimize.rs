//! Derivative-free Nelder-Mead minimization.

use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy)]
pub struct SimplexOptions<T> {
    pub max_iterations: usize,
    /// Stop once `f_worst - f_best <= ftol * (|f_best| + ftol)`.
    pub ftol: T,
    /// Coordinate-wise simplex extent relative to `|x_best| + 1`.
    pub xtol: T,
}

#[derive(Debug, Clone)]
pub struct SimplexOutcome<T> {
    pub x: Vec<T>,
    pub fx: T,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
}

struct Vertex<T> {
    x: Vec<T>,
    fx: T,
}

fn eval<T: Scalar, F: FnMut(&[T]) -> T>(f: &mut F, x: &[T], evals: &mut usize) -> T {
    *evals += 1;
    let v = f(x);
    if v.is_nan() {
        T::infinity()
    } else {
        v
    }
}

/// Minimizes `f` from `start`, building the initial simplex by stepping
/// `steps[i]` along each axis.
pub fn nelder_mead<T, F>(mut f: F, start: &[T], steps: &[T], opts: &SimplexOptions<T>) -> SimplexOutcome<T>
where
    T: Scalar,
    F: FnMut(&[T]) -> T,
{
    assert_eq!(start.len(), steps.len());
    let dim = start.len();
    let (alpha, gamma, rho, sigma) = (T::one(), T::lit(2.0), T::lit(0.5), T::lit(0.5));
    let mut evals = 0;

    let mut simplex: Vec<Vertex<T>> = Vec::with_capacity(dim + 1);
    simplex.push(Vertex {
        x: start.to_vec(),
        fx: eval(&mut f, start, &mut evals),
    });
    for i in 0..dim {
        let mut x = start.to_vec();
        x[i] = x[i] + steps[i];
        let fx = eval(&mut f, &x, &mut evals);
        simplex.push(Vertex { x, fx });
    }

    let mut iterations = 0;
    let mut converged = false;
    loop {
        simplex.sort_by(|a, b| a.fx.partial_cmp(&b.fx).unwrap_or(std::cmp::Ordering::Equal));
        let (best, worst) = (simplex[0].fx, simplex[dim].fx);
        let f_ok = best.is_finite() && worst - best <= opts.ftol * (best.abs() + opts.ftol);
        let x_ok = (0..dim).all(|j| {
            let c = simplex[0].x[j];
            simplex
                .iter()
                .all(|v| (v.x[j] - c).abs() <= opts.xtol * (c.abs() + T::one()))
        });
        if f_ok && x_ok {
            converged = true;
            break;
        }
        if iterations >= opts.max_iterations {
            break;
        }
        iterations += 1;

        let mut centroid = vec![T::zero(); dim];
        for v in &simplex[..dim] {
            for (c, &x) in centroid.iter_mut().zip(&v.x) {
                *c = *c + x;
            }
        }
        let nd = T::count(dim);
        centroid.iter_mut().for_each(|c| *c = *c / nd);

        let toward =
            |coef: T, from: &[T]| -> Vec<T> { centroid.iter().zip(from).map(|(&c, &w)| c + coef * (c - w)).collect() };

        let xr = toward(alpha, &simplex[dim].x);
        let fr = eval(&mut f, &xr, &mut evals);
        if fr < simplex[0].fx {
            let xe = toward(gamma, &simplex[dim].x);
            let fe = eval(&mut f, &xe, &mut evals);
            simplex[dim] = if fe < fr {
                Vertex { x: xe, fx: fe }
            } else {
                Vertex { x: xr, fx: fr }
            };
            continue;
        }
        if fr < simplex[dim - 1].fx {
            simplex[dim] = Vertex { x: xr, fx: fr };
            continue;
        }
        // contraction, outside when the reflected point improved on the worst
        let (xc, fc) = if fr < simplex[dim].fx {
            let xc = toward(rho, &simplex[dim].x);
            let fc = eval(&mut f, &xc, &mut evals);
            (xc, fc)
        } else {
            let xc = toward(-rho, &simplex[dim].x);
            let fc = eval(&mut f, &xc, &mut evals);
            (xc, fc)
        };
        if fc < fr.min(simplex[dim].fx) {
            simplex[dim] = Vertex { x: xc, fx: fc };
            continue;
        }
        let x_best = simplex[0].x.clone();
        for v in simplex.iter_mut().skip(1) {
            for (x, &b) in v.x.iter_mut().zip(&x_best) {
                *x = b + sigma * (*x - b);
            }
            v.fx = eval(&mut f, &v.x, &mut evals);
        }
    }

    let best = simplex.swap_remove(0);
    SimplexOutcome {
        x: best.x,
        fx: best.fx,
        iterations,
        evaluations: evals,
        converged,
    }
}
