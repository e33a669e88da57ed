//! Dirichlet forms and spectral quantities on finite sets.
//!
//! For finitely supported `f` and a symmetric probability `mu`,
//! `E(f, f) = 1/2 sum_{x,y} |f(xy) - f(x)|^2 mu(y) = sum_x f(x)^2 - sum_{x,z} f(x) f(z) mu(x^{-1} z)`,
//! and the right-hand side only involves pairs inside `supp f`, so it is evaluated exactly
//! from the point masses without truncating `mu`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use rustc_hash::FxHashMap;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::AdaptedGeometry;
use crate::group::GroupElement;
use crate::measures::Measure;

/// Largest set on which a dense killed operator is assembled.
pub const MAX_BALL_FOR_DENSE: usize = 4096;
/// Relative accuracy of the normalization constants, which the identity above relies on.
const NORMALIZATION_TOL: f64 = 1e-10;
const EIGEN_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct DirichletValue {
    pub value: f64,
    pub tail_slack: f64,
}

fn dedup(f: &[(GroupElement, f64)]) -> Vec<(GroupElement, f64)> {
    let mut map: FxHashMap<GroupElement, f64> = FxHashMap::default();
    for (g, v) in f {
        *map.entry(*g).or_insert(0.0) += v;
    }
    let mut out: Vec<(GroupElement, f64)> = map.into_iter().filter(|e| e.1 != 0.0).collect();
    out.sort_by(|a, b| a.0.cmp(&b.0));
    out
}

/// `sum_{x,z in supp f} f(x) f(z) mu(x^{-1} z)`.
fn cross_term(measure: &Measure, f: &[(GroupElement, f64)]) -> Result<f64> {
    let group = measure.group();
    let at_e = measure.pmf(&group.identity());
    let rows: Vec<Result<f64>> = (0..f.len())
        .into_par_iter()
        .map(|i| {
            let (x, fx) = f[i];
            let x_inv = group.inv(&x)?;
            let mut s = 0.0;
            for &(z, fz) in &f[i + 1..] {
                s += fz * measure.pmf(&group.mul(&x_inv, &z)?);
            }
            Ok(fx * fx * at_e + 2.0 * fx * s)
        })
        .collect();
    let mut total = 0.0;
    for r in rows {
        total += r?;
    }
    Ok(total)
}

/// `E(f, f)` for finitely supported `f`.
pub fn dirichlet_form(measure: &Measure, f: &[(GroupElement, f64)]) -> Result<DirichletValue> {
    let group = measure.group();
    for (g, _) in f {
        group.check(g)?;
    }
    let f = dedup(f);
    let norm2: f64 = f.iter().map(|e| e.1 * e.1).sum();
    let value = norm2 - cross_term(measure, &f)?;
    Ok(DirichletValue {
        value: value.max(0.0),
        tail_slack: 2.0 * NORMALIZATION_TOL * norm2,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct RayleighReport {
    #[serde(rename = "R")]
    pub r: f64,
    pub quotient: f64,
    pub ball_volume: usize,
    pub tail_slack: f64,
}

/// The ball `{||g||_{G,1} <= r}` used by the spectral estimates.
fn g1_ball(geom: &AdaptedGeometry, r: f64) -> Result<Vec<GroupElement>> {
    geom.ball_elements(geom.closed_radius_g1(r))
}

/// `E(zeta_R, zeta_R) / ||zeta_R||^2` with `zeta_R(g) = (R - ||g||_{G,1})_+`.
pub fn rayleigh_zeta(measure: &Measure, geom: &AdaptedGeometry, r: f64) -> Result<RayleighReport> {
    if geom.group != measure.group() {
        return Err(Error::GroupMismatch("measure and geometry live on different groups".into()));
    }
    let ball = g1_ball(geom, r)?;
    let mut f = Vec::with_capacity(ball.len());
    for g in &ball {
        let v = (r - geom.norm_g1(g)?).max(0.0);
        if v > 0.0 {
            f.push((*g, v));
        }
    }
    if f.is_empty() {
        return Err(Error::Config(format!("zeta vanishes identically at R = {r}")));
    }
    let norm2: f64 = f.iter().map(|e| e.1 * e.1).sum();
    let e = dirichlet_form(measure, &f)?;
    Ok(RayleighReport {
        r,
        quotient: e.value / norm2,
        ball_volume: ball.len(),
        tail_slack: e.tail_slack / norm2,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct EigenReport {
    #[serde(rename = "R")]
    pub r: f64,
    pub lambda: f64,
    /// Residual bound on `lambda`; meaningful when `converged`.
    pub error_bound: f64,
    pub iterations: usize,
    pub converged: bool,
    pub ball_volume: usize,
}

/// Lowest Dirichlet eigenvalue of `f -> f * (delta_e - mu)` on `{||g||_{G,1} <= R}`.
///
/// Power iteration on `(I + P_B) / 2`, where `P_B` is the transition operator killed
/// outside the ball; the shift keeps the spectrum in `(0, 1)` so the Perron eigenvalue
/// dominates. The residual `|P v - theta v|` of the Rayleigh pair bounds the error of
/// `theta` for the symmetric operator.
pub fn dirichlet_eigenvalue(measure: &Measure, geom: &AdaptedGeometry, r: f64, iterations: usize) -> Result<EigenReport> {
    if geom.group != measure.group() {
        return Err(Error::GroupMismatch("measure and geometry live on different groups".into()));
    }
    if iterations == 0 {
        return Err(Error::Config("at least one iteration is required".into()));
    }
    let ball = g1_ball(geom, r)?;
    let b = ball.len();
    if b > MAX_BALL_FOR_DENSE {
        return Err(Error::Config(format!("ball of {b} elements exceeds the dense limit {MAX_BALL_FOR_DENSE}")));
    }
    let group = measure.group();
    let rows: Vec<Result<Vec<f64>>> = ball
        .par_iter()
        .map(|x| {
            let x_inv = group.inv(x)?;
            ball.iter().map(|z| Ok(measure.pmf(&group.mul(&x_inv, z)?))).collect()
        })
        .collect();
    let p: Vec<Vec<f64>> = rows.into_iter().collect::<Result<_>>()?;
    let apply = |v: &[f64]| -> Vec<f64> { p.iter().map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum()).collect() };

    let mut v = vec![1.0 / (b as f64).sqrt(); b];
    let (mut theta, mut residual) = (0.0, f64::INFINITY);
    let mut done = 0;
    for it in 1..=iterations {
        let pv = apply(&v);
        theta = v.iter().zip(&pv).map(|(a, b)| a * b).sum::<f64>();
        residual = pv.iter().zip(&v).map(|(a, b)| (a - theta * b).powi(2)).sum::<f64>().sqrt();
        done = it;
        if residual <= EIGEN_TOL {
            break;
        }
        let mut next: Vec<f64> = v.iter().zip(&pv).map(|(a, b)| 0.5 * (a + b)).collect();
        let norm = next.iter().map(|x| x * x).sum::<f64>().sqrt();
        next.iter_mut().for_each(|x| *x /= norm);
        v = next;
    }
    Ok(EigenReport {
        r,
        lambda: 1.0 - theta,
        error_bound: residual,
        iterations: done,
        converged: residual <= EIGEN_TOL,
        ball_volume: b,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct PoincareReport {
    pub constant: f64,
    pub trials: usize,
    /// Trials with `E(f, f) = 0`, left out.
    pub skipped: usize,
    pub max_ball_radius: f64,
}

/// Largest closed-form radius in `1..=16` whose ball has at most 256 elements.
fn trial_radius_cap(geom: &AdaptedGeometry) -> Result<f64> {
    let mut best = 1.0;
    for r in 1..=16 {
        if geom.ball_count_capped(r as f64, 1 << 20)? <= 256 {
            best = r as f64;
        } else {
            break;
        }
    }
    Ok(best)
}

/// `sup sum_x |f(xh) - f(x)|^2 / (||h||_{G,2}^{1/w_*} E(f, f))` over a seeded ensemble.
///
/// Trial `t` uses the ChaCha8 stream `t` of `seed`: it draws a closed-form radius
/// uniformly from `[1, rho]`, with `rho` the largest integer radius whose ball has at most
/// 256 elements, and puts independent fair signs on that ball.
pub fn pseudo_poincare_constant(
    measure: &Measure,
    geom: &AdaptedGeometry,
    trials: usize,
    hs: &[GroupElement],
    seed: u64,
) -> Result<PoincareReport> {
    if hs.is_empty() {
        return Err(Error::Config("the list of shifts is empty".into()));
    }
    if geom.group != measure.group() {
        return Err(Error::GroupMismatch("measure and geometry live on different groups".into()));
    }
    let group = measure.group();
    let mut h_scale = Vec::with_capacity(hs.len());
    for h in hs {
        group.check(h)?;
        h_scale.push((*h, group.inv(h)?, geom.norm_g2(h)?.powf(1.0 / geom.w_star)));
    }
    let rho = trial_radius_cap(geom)?;
    let results: Vec<Result<Option<f64>>> = (0..trials as u64)
        .into_par_iter()
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(t);
            let radius = 1.0 + rng.gen::<f64>() * (rho - 1.0);
            let ball = geom.ball_elements(radius)?;
            let f: Vec<(GroupElement, f64)> = ball
                .into_iter()
                .map(|g| (g, if rng.gen::<bool>() { 1.0 } else { -1.0 }))
                .collect();
            let e = dirichlet_form(measure, &f)?.value;
            if e <= 0.0 {
                return Ok(None);
            }
            let lookup: FxHashMap<GroupElement, f64> = f.iter().copied().collect();
            let mut worst = 0.0f64;
            for (h, h_inv, scale) in &h_scale {
                let mut num = 0.0;
                for (x, fx) in &f {
                    let y = group.mul(x, h)?;
                    num += (lookup.get(&y).copied().unwrap_or(0.0) - fx).powi(2);
                }
                for (z, fz) in &f {
                    if !lookup.contains_key(&group.mul(z, h_inv)?) {
                        num += fz * fz;
                    }
                }
                if num > 0.0 {
                    worst = worst.max(num / (scale * e));
                }
            }
            Ok(Some(worst))
        })
        .collect();
    let (mut constant, mut skipped) = (0.0f64, 0);
    for r in results {
        match r? {
            Some(c) => constant = constant.max(c),
            None => skipped += 1,
        }
    }
    Ok(PoincareReport {
        constant,
        trials,
        skipped,
        max_ball_radius: rho,
    })
}
