use serde::Serialize;

use super::linear_fit;
use crate::error::{Error, Result};
use crate::geometry::AdaptedGeometry;
use crate::group::GroupElement;
use crate::kernel::{tv_difference, KernelEngine};

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct HolderPoint {
    pub m1: u64,
    pub m2: u64,
    pub y: GroupElement,
    /// `(|m1 - m2|^{w_*} + ||y||_{G,2}) / n0^{w_*}`.
    pub x: f64,
    pub tv: f64,
    pub slack: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct HolderFit {
    pub beta: f64,
    pub c: f64,
    pub r2: f64,
    pub points: Vec<HolderPoint>,
}

/// Fits `sum_x |k_{m1}(x) - k_{m2}(x y)| ~ C x^beta` in log-log coordinates.
pub fn holder_fit(
    engine: &mut KernelEngine,
    geom: &AdaptedGeometry,
    n0: u64,
    grid: &[(u64, u64, GroupElement)],
) -> Result<HolderFit> {
    if n0 == 0 {
        return Err(Error::Config("n0 must be positive".into()));
    }
    let scale = (n0 as f64).powf(geom.w_star);
    let mut points = Vec::with_capacity(grid.len());
    for (m1, m2, y) in grid {
        if *m1 < n0 || *m2 < n0 {
            return Err(Error::Config(format!("grid point ({m1}, {m2}) lies below n0 = {n0}")));
        }
        let x = ((m1.abs_diff(*m2) as f64).powf(geom.w_star) + geom.norm_g2(y)?) / scale;
        if x <= 0.0 {
            return Err(Error::Config(format!("grid point ({m1}, {m2}, {y:?}) has x = 0")));
        }
        let (k1, k2) = (engine.power(*m1)?, engine.power(*m2)?);
        let tv = tv_difference(&k1, &k2, y)?;
        if tv.value <= 0.0 {
            return Err(Error::Fit(format!("zero distance at ({m1}, {m2}, {y:?})")));
        }
        points.push(HolderPoint {
            m1: *m1,
            m2: *m2,
            y: *y,
            x,
            tv: tv.value,
            slack: tv.slack,
        });
    }
    let logs: Vec<(f64, f64)> = points.iter().map(|p| (p.x.ln(), p.tv.ln())).collect();
    let fit = linear_fit(&logs)?;
    Ok(HolderFit {
        beta: fit.slope,
        c: fit.intercept.exp(),
        r2: fit.r2,
        points,
    })
}
