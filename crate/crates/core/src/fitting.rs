//! Weighted least-squares fits of correlation-vs-intensity curves.
//!
//! Two models cover the analysis chain. `hyperbola` is
//! `g(mu) = A + B / mu`, the signature of a pair source read out in its
//! photon-number basis: `A` is the intrinsic correlation and `B` the slope
//! of the excess bunching against inverse intensity. `crosstalk_ref` is the
//! one-parameter family `g(mu) = (1+2P)/(1+P)^2 + 2P/((1+P) mu)`, the
//! event-linear crosstalk response to coherent light, used to calibrate `P`
//! from a reference sweep.
//!
//! The minimizer is Levenberg-Marquardt on the chi-square
//! `sum_i (g_i - f(mu_i))^2 / sigma_i^2` with multiplicative damping
//! `(N + lambda diag(N)) delta = J^T W r`. Parameter covariance is the
//! inverse of `N = J^T W J` at the optimum, taken at face value from the
//! supplied `sigma_i` (no rescaling by the residual chi-square), and the
//! quality-of-fit number is the weighted coefficient of determination.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CurveModel {
    /// `g(mu) = A + B / mu`, parameters `[A, B]`.
    Hyperbola,
    /// Event-linear crosstalk acting on coherent light, parameter `[P]`.
    CrosstalkRef,
}

impl CurveModel {
    pub fn parameter_count(&self) -> usize {
        match self {
            CurveModel::Hyperbola => 2,
            CurveModel::CrosstalkRef => 1,
        }
    }

    pub fn parameter_names(&self) -> &'static [&'static str] {
        match self {
            CurveModel::Hyperbola => &["A", "B"],
            CurveModel::CrosstalkRef => &["P"],
        }
    }
}

/// One measured point on a correlation curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "R: Serialize", deserialize = "R: Deserialize<'de>"))]
pub struct CurvePoint<R: Real> {
    /// Mean fired-pixel count the correlation was measured at.
    pub mu: R,
    pub g: R,
    /// Standard error of `g`; weights are `1 / sigma^2`.
    pub sigma: R,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "R: Serialize", deserialize = "R: Deserialize<'de>"))]
pub struct FitResult<R: Real> {
    pub model: CurveModel,
    pub params: Vec<R>,
    pub std_errors: Vec<R>,
    pub covariance: Vec<Vec<R>>,
    pub cod_r2: R,
    pub iterations: u32,
    pub converged: bool,
}

/// Model value at `mu` for the given parameter vector.
pub fn evaluate_model<R: Real>(model: CurveModel, params: &[R], mu: R) -> R {
    match model {
        CurveModel::Hyperbola => params[0] + params[1] / mu,
        CurveModel::CrosstalkRef => {
            crate::estimator::predict_g2_crosstalk(R::one(), mu, params[0])
        }
    }
}

fn jacobian_row<R: Real>(model: CurveModel, params: &[R], mu: R) -> Vec<R> {
    match model {
        CurveModel::Hyperbola => vec![R::one(), mu.recip()],
        CurveModel::CrosstalkRef => {
            let p = params[0];
            let one = R::one();
            let q = one + p;
            vec![-(R::of(2.0) * p) / (q * q * q) + R::of(2.0) / (q * q * mu)]
        }
    }
}

/// Starting point for the minimizer: the hyperbola is solved exactly
/// through the lowest- and highest-`mu` points, and the crosstalk model
/// starts from a typical device-scale strength.
fn initial_guess<R: Real>(model: CurveModel, points: &[CurvePoint<R>]) -> Vec<R> {
    match model {
        CurveModel::Hyperbola => {
            let lo = points
                .iter()
                .min_by(|a, b| a.mu.partial_cmp(&b.mu).unwrap())
                .unwrap();
            let hi = points
                .iter()
                .max_by(|a, b| a.mu.partial_cmp(&b.mu).unwrap())
                .unwrap();
            let dx = lo.mu.recip() - hi.mu.recip();
            if dx == R::zero() {
                let n = R::from_count(points.len() as u64);
                let mean = points.iter().map(|p| p.g).sum::<R>() / n;
                vec![mean, R::zero()]
            } else {
                let b = (lo.g - hi.g) / dx;
                vec![hi.g - b / hi.mu, b]
            }
        }
        CurveModel::CrosstalkRef => vec![R::of(0.1)],
    }
}

/// Fits `model` to the points by damped weighted least squares.
pub fn fit_curve<R: Real>(points: &[CurvePoint<R>], model: CurveModel) -> Result<FitResult<R>> {
    for (i, p) in points.iter().enumerate() {
        if !(p.mu > R::zero() && p.mu.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "curve point {i} has mu = {}, which must be positive",
                p.mu
            )));
        }
        if !(p.sigma > R::zero() && p.sigma.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "curve point {i} has sigma = {}, which must be positive",
                p.sigma
            )));
        }
        if !p.g.is_finite() {
            return Err(Error::InvalidInput(format!("curve point {i} has g = {}", p.g)));
        }
    }
    let npar = model.parameter_count();
    if points.len() < npar {
        return Err(Error::DegenerateFit(format!(
            "{} points cannot constrain {npar} parameters",
            points.len()
        )));
    }

    let chi2 = |params: &[R]| -> R {
        points
            .iter()
            .map(|p| {
                let r = (p.g - evaluate_model(model, params, p.mu)) / p.sigma;
                r * r
            })
            .sum()
    };
    // Normal equations at `params`: returns (J^T W J, J^T W r).
    let normal = |params: &[R]| -> (Vec<Vec<R>>, Vec<R>) {
        let mut n = vec![vec![R::zero(); npar]; npar];
        let mut rhs = vec![R::zero(); npar];
        for p in points {
            let w = (p.sigma * p.sigma).recip();
            let row = jacobian_row(model, params, p.mu);
            let resid = p.g - evaluate_model(model, params, p.mu);
            for a in 0..npar {
                rhs[a] += w * row[a] * resid;
                for b in 0..npar {
                    n[a][b] += w * row[a] * row[b];
                }
            }
        }
        (n, rhs)
    };

    let mut params = initial_guess(model, points);
    let mut current = chi2(&params);
    let mut lambda = R::of(1e-3);
    let mut converged = false;
    let mut iterations = 0u32;
    while iterations < 200 {
        iterations += 1;
        let (n, rhs) = normal(&params);
        let mut damped = n.clone();
        for a in 0..npar {
            damped[a][a] += lambda * n[a][a];
        }
        let Some(step) = solve(damped, rhs.clone()) else {
            lambda *= R::of(10.0);
            if lambda > R::of(1e15) {
                break;
            }
            continue;
        };
        let trial: Vec<R> = params.iter().zip(&step).map(|(&p, &d)| p + d).collect();
        let trial_chi2 = chi2(&trial);
        if trial_chi2 <= current {
            let rel_drop = (current - trial_chi2) / current.max(R::of(1e-300));
            let max_step = step
                .iter()
                .map(|d| d.abs())
                .fold(R::zero(), |a, b| a.max(b));
            params = trial;
            current = trial_chi2;
            lambda /= R::of(10.0);
            if rel_drop < R::of(1e-10) || max_step < R::of(1e-12) {
                converged = true;
                break;
            }
        } else {
            lambda *= R::of(10.0);
            if lambda > R::of(1e15) {
                break;
            }
        }
    }

    let (n, _) = normal(&params);
    let covariance = invert(n).ok_or_else(|| {
        Error::DegenerateFit("normal matrix is singular at the optimum".into())
    })?;
    let std_errors: Vec<R> = (0..npar).map(|a| covariance[a][a].sqrt()).collect();

    let wsum: R = points.iter().map(|p| (p.sigma * p.sigma).recip()).sum();
    let gbar = points
        .iter()
        .map(|p| p.g / (p.sigma * p.sigma))
        .sum::<R>()
        / wsum;
    let chi2_mean: R = points
        .iter()
        .map(|p| {
            let d = (p.g - gbar) / p.sigma;
            d * d
        })
        .sum();
    let cod_r2 = if chi2_mean > R::zero() {
        R::one() - current / chi2_mean
    } else if current == R::zero() {
        R::one()
    } else {
        R::zero()
    };

    Ok(FitResult {
        model,
        params,
        std_errors,
        covariance,
        cod_r2,
        iterations,
        converged,
    })
}

/// Gaussian elimination with partial pivoting; `None` on a singular system.
fn solve<R: Real>(mut a: Vec<Vec<R>>, mut b: Vec<R>) -> Option<Vec<R>> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| {
            a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap()
        })?;
        if a[pivot][col].abs() == R::zero() || !a[pivot][col].is_finite() {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            for k in col..n {
                let v = a[col][k];
                a[row][k] -= f * v;
            }
            let v = b[col];
            b[row] -= f * v;
        }
    }
    let mut x = vec![R::zero(); n];
    for row in (0..n).rev() {
        let mut acc = b[row];
        for k in row + 1..n {
            acc -= a[row][k] * x[k];
        }
        x[row] = acc / a[row][row];
        if !x[row].is_finite() {
            return None;
        }
    }
    Some(x)
}

fn invert<R: Real>(a: Vec<Vec<R>>) -> Option<Vec<Vec<R>>> {
    let n = a.len();
    let mut columns = Vec::with_capacity(n);
    for j in 0..n {
        let mut e = vec![R::zero(); n];
        e[j] = R::one();
        columns.push(solve(a.clone(), e)?);
    }
    let mut inv = vec![vec![R::zero(); n]; n];
    for (j, col) in columns.into_iter().enumerate() {
        for (i, v) in col.into_iter().enumerate() {
            inv[i][j] = v;
        }
    }
    Some(inv)
}
