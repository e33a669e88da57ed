//! Regression helpers, Dirichlet forms, spectral estimates on balls and Hölder fits.

mod dirichlet;
mod holder;

use serde::Serialize;

use crate::error::{Error, Result};

pub use dirichlet::{
    dirichlet_eigenvalue, dirichlet_form, pseudo_poincare_constant, rayleigh_zeta, DirichletValue, EigenReport,
    PoincareReport, RayleighReport, MAX_BALL_FOR_DENSE,
};
pub use holder::{holder_fit, HolderFit, HolderPoint};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct FitResult {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    /// Largest absolute residual in log space.
    pub residual_max: f64,
    pub point_count: usize,
}

/// Least squares of `ln y` against `ln x` over the points with `x` in `window`
/// (inclusive), or all points.
pub fn fit_loglog(series: &[(f64, f64)], window: Option<(f64, f64)>) -> Result<FitResult> {
    if series.windows(2).any(|w| w[0].0 >= w[1].0) {
        return Err(Error::Fit("x values must be strictly increasing".into()));
    }
    let pts: Vec<(f64, f64)> = series
        .iter()
        .filter(|(x, _)| window.map_or(true, |(lo, hi)| *x >= lo && *x <= hi))
        .map(|&(x, y)| {
            if x > 0.0 && y > 0.0 {
                Ok((x.ln(), y.ln()))
            } else {
                Err(Error::Fit(format!("log-log fit needs positive data, got ({x}, {y})")))
            }
        })
        .collect::<Result<_>>()?;
    linear_fit(&pts)
}

/// Ordinary least squares `y = intercept + slope x`.
pub fn linear_fit(pts: &[(f64, f64)]) -> Result<FitResult> {
    let n = pts.len();
    if n < 3 {
        return Err(Error::Fit(format!("a slope needs at least 3 points, got {n}")));
    }
    let nf = n as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / nf;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / nf;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Fit("all x values coincide".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residual_max = pts
        .iter()
        .map(|p| (p.1 - intercept - slope * p.0).abs())
        .fold(0.0, f64::max);
    let r2 = if syy == 0.0 { 1.0 } else { (sxy * sxy / (sxx * syy)).clamp(0.0, 1.0) };
    Ok(FitResult {
        slope,
        intercept,
        r2,
        residual_max,
        point_count: n,
    })
}
