//! Least-squares fits of scan data, in double precision.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitModel {
    /// `ln N = intercept − slope·x`
    ExpLinear,
    /// `ln N = intercept − coefficient·x²`
    ExpQuadratic,
    /// `y = a + b·√(x + c)`
    SqrtShift,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub model: FitModel,
    /// Named parameters in model order.
    pub params: Vec<(String, f64)>,
    pub residual_rms: f64,
    pub points_used: usize,
}

impl FitResult {
    pub fn param(&self, name: &str) -> f64 {
        self.params.iter().find(|(n, _)| n == name).map(|(_, v)| *v).unwrap_or(f64::NAN)
    }
}

/// Linear least squares `y ≈ Σ_k coef_k·basis_k(x)`; returns coefficients and RSS.
fn linear_lsq(xs: &[f64], ys: &[f64], basis: &[&dyn Fn(f64) -> f64]) -> Result<(Vec<f64>, f64)> {
    let n = xs.len();
    let k = basis.len();
    let a = DMatrix::from_fn(n, k, |i, j| basis[j](xs[i]));
    let b = DVector::from_column_slice(ys);
    let svd = a.clone().svd(true, true);
    let coef = svd.solve(&b, 1e-14).map_err(|e| Error::Fit(e.to_string()))?;
    let r = &a * &coef - &b;
    let rss = r.norm_squared();
    Ok((coef.iter().copied().collect(), rss))
}

fn check(xs: &[f64], ys: &[f64], params: usize) -> Result<()> {
    if xs.len() != ys.len() {
        return Err(Error::Fit("x and y lengths differ".into()));
    }
    if xs.len() < params + 1 {
        return Err(Error::Fit(format!("need at least {} points, got {}", params + 1, xs.len())));
    }
    if xs.iter().chain(ys).any(|v| !v.is_finite()) {
        return Err(Error::Fit("non-finite data".into()));
    }
    Ok(())
}

/// Fits `ln_n = intercept − slope·x`.
pub fn fit_exp_linear(xs: &[f64], ln_n: &[f64]) -> Result<FitResult> {
    check(xs, ln_n, 2)?;
    let (c, rss) = linear_lsq(xs, ln_n, &[&|_| 1.0, &|x| -x])?;
    Ok(FitResult {
        model: FitModel::ExpLinear,
        params: vec![("intercept".into(), c[0]), ("slope".into(), c[1])],
        residual_rms: (rss / xs.len() as f64).sqrt(),
        points_used: xs.len(),
    })
}

/// Fits `ln_n = intercept − coefficient·x²`.
pub fn fit_exp_quadratic(xs: &[f64], ln_n: &[f64]) -> Result<FitResult> {
    check(xs, ln_n, 2)?;
    let (c, rss) = linear_lsq(xs, ln_n, &[&|_| 1.0, &|x| -x * x])?;
    Ok(FitResult {
        model: FitModel::ExpQuadratic,
        params: vec![("intercept".into(), c[0]), ("coefficient".into(), c[1])],
        residual_rms: (rss / xs.len() as f64).sqrt(),
        points_used: xs.len(),
    })
}

fn sqrt_rss(xs: &[f64], ys: &[f64], c: f64) -> Result<(Vec<f64>, f64)> {
    linear_lsq(xs, ys, &[&|_| 1.0, &|x| (x + c).sqrt()])
}

/// Fits `y = a + b·√(x + c)` with `c > −min(x)`: golden-section search over `c`
/// around the best point of a coarse scan, linear least squares for `(a, b)`.
pub fn fit_sqrt_shift(xs: &[f64], ys: &[f64]) -> Result<FitResult> {
    check(xs, ys, 3)?;
    let xmin = xs.iter().copied().fold(f64::INFINITY, f64::min);
    let xmax = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = (xmax - xmin).max(1.0);
    let lo = -xmin + 1e-9 * span.max(xmin.abs());
    let hi = 100.0 * (xmax.abs() + span);
    let f = |c: f64| sqrt_rss(xs, ys, c).map(|(_, r)| r).unwrap_or(f64::INFINITY);

    // coarse scan on a grid dense near the lower bound
    let n = 400;
    let grid: Vec<f64> = (0..=n)
        .map(|i| {
            let t = i as f64 / n as f64;
            lo + (hi - lo) * t.powi(4)
        })
        .collect();
    let mut best = 0;
    let mut best_val = f64::INFINITY;
    for (i, &c) in grid.iter().enumerate() {
        let v = f(c);
        if v < best_val {
            best_val = v;
            best = i;
        }
    }
    let mut a = grid[best.saturating_sub(1)];
    let mut b = grid[(best + 1).min(n)];
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = b - g * (b - a);
    let mut x2 = a + g * (b - a);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..300 {
        if (b - a).abs() <= 1e-13 * (1.0 + a.abs().max(b.abs())) {
            break;
        }
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - g * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + g * (b - a);
            f2 = f(x2);
        }
    }
    let c = if f1 <= f2 { x1 } else { x2 };
    let (coef, rss) = sqrt_rss(xs, ys, c)?;
    Ok(FitResult {
        model: FitModel::SqrtShift,
        params: vec![("a".into(), coef[0]), ("b".into(), coef[1]), ("c".into(), c)],
        residual_rms: (rss / xs.len() as f64).sqrt(),
        points_used: xs.len(),
    })
}
