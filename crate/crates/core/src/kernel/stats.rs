//! Statistics of computed kernels.

use serde::Serialize;

use super::{KernelEngine, SparseKernel};
use crate::error::{Error, Result};
use crate::geometry::AdaptedGeometry;
use crate::group::GroupElement;

/// A kernel is trusted for pointwise statistics only while its deficit stays below this
/// fraction of the reference value it is compared against.
pub const RELIABILITY_FRACTION: f64 = 0.25;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct NearDiagonal {
    pub n: u64,
    pub radius: f64,
    pub ball_size: usize,
    /// `F(n)`.
    pub volume: f64,
    pub min_ratio: f64,
    pub max_ratio: f64,
    pub ratio_at_identity: f64,
}

/// Range of `k(g) F(n)` over `{g : ||g||_F <= eta n}`.
pub fn near_diagonal_profile(kernel: &SparseKernel, geom: &AdaptedGeometry, eta: f64) -> Result<NearDiagonal> {
    if kernel.group() != geom.group {
        return Err(Error::GroupMismatch("kernel and geometry live on different groups".into()));
    }
    if !(eta.is_finite() && eta >= 0.0) {
        return Err(Error::Config(format!("eta must be >= 0, got {eta}")));
    }
    let n = kernel.n();
    let volume = geom.volume.eval(n as f64);
    if kernel.dropped_mass() * volume > RELIABILITY_FRACTION {
        return Err(Error::Reliability(format!(
            "deficit {:.3e} is not small against 1/F(n) = {:.3e}",
            kernel.dropped_mass(),
            1.0 / volume
        )));
    }
    let radius = eta * n as f64;
    let ball = geom.ball_elements(radius)?;
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for g in &ball {
        let r = kernel.get(g) * volume;
        lo = lo.min(r);
        hi = hi.max(r);
    }
    Ok(NearDiagonal {
        n,
        radius,
        ball_size: ball.len(),
        volume,
        min_ratio: lo,
        max_ratio: hi,
        ratio_at_identity: kernel.get(&geom.group.identity()) * volume,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct TvDifference {
    pub value: f64,
    /// Sum of both deficits: the true distance is within this of `value`.
    pub slack: f64,
}

/// `sum_x |k1(x) - k2(x y)|`.
pub fn tv_difference(k1: &SparseKernel, k2: &SparseKernel, y: &GroupElement) -> Result<TvDifference> {
    if k1.group() != k2.group() {
        return Err(Error::GroupMismatch("kernels live on different groups".into()));
    }
    let group = k1.group();
    group.check(y)?;
    let y_inv = group.inv(y)?;
    let mut terms = Vec::with_capacity(k1.support_size() + k2.support_size());
    for (x, p) in k1.iter() {
        terms.push((p - k2.get(&group.mul(&x, y)?)).abs());
    }
    for (z, q) in k2.iter() {
        if k1.get(&group.mul(&z, &y_inv)?) == 0.0 {
            terms.push(q);
        }
    }
    terms.sort_by(f64::total_cmp);
    Ok(TvDifference {
        value: terms.iter().sum(),
        slack: k1.dropped_mass() + k2.dropped_mass(),
    })
}

/// Smallest `C` with
/// `|k_{n+m}(x y) - k_n(x)| <= C (m / n + ||y||_{G,2}^{1/(2 w_*)} / sqrt(n)) k_n(e)`
/// for every `x` and every `y` in `ys`.
pub fn regularity_ratio(
    engine: &mut KernelEngine,
    geom: &AdaptedGeometry,
    n: u64,
    m: u64,
    ys: &[GroupElement],
) -> Result<f64> {
    if n < 2 {
        return Err(Error::Config("regularity needs n >= 2".into()));
    }
    let kn = engine.power(n)?;
    let knm = engine.power(n + m)?;
    let group = kn.group();
    let at_e = kn.get(&group.identity());
    for k in [&kn, &knm] {
        if k.dropped_mass() > RELIABILITY_FRACTION * at_e {
            return Err(Error::Reliability(format!(
                "deficit {:.3e} of power {} is not small against k_n(e) = {at_e:.3e}",
                k.dropped_mass(),
                k.n()
            )));
        }
    }
    let mut worst = 0.0f64;
    for y in ys {
        let y_norm = geom.norm_g2(y)?;
        let scale = (m as f64 / n as f64 + y_norm.powf(0.5 / geom.w_star) / (n as f64).sqrt()) * at_e;
        let y_inv = group.inv(y)?;
        let mut num = 0.0f64;
        for (x, p) in kn.iter() {
            num = num.max((knm.get(&group.mul(&x, y)?) - p).abs());
        }
        for (z, q) in knm.iter() {
            if kn.get(&group.mul(&z, &y_inv)?) == 0.0 {
                num = num.max(q);
            }
        }
        if num == 0.0 {
            continue;
        }
        if scale == 0.0 {
            return Err(Error::Fit(format!("kernels differ at m = 0, y = {y:?}")));
        }
        worst = worst.max(num / scale);
    }
    Ok(worst)
}
