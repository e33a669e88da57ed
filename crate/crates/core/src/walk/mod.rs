//! Monte Carlo simulation of `X_{k+1} = X_k xi_{k+1}`.
//!
//! Walker `w` draws the increments of step `k` from a ChaCha8 stream keyed by `seed`,
//! with stream id `w` and word position `k * 2^20`. Every result is therefore a function
//! of `(seed, walker, step)` alone and does not depend on the number of threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::AdaptedGeometry;
use crate::group::{GroupElement, GroupSpec};
use crate::measures::Measure;

/// Random words reserved per step.
const WORDS_PER_STEP: u32 = 20;
/// Censoring horizon in units of `r^{1/w_*}`.
pub const EXIT_HORIZON_FACTOR: f64 = 64.0;
/// Levels `epsilon` of the control table.
pub const CONTROL_LEVELS: [f64; 3] = [0.5, 0.25, 0.1];
const QUANTILES: [f64; 7] = [0.1, 0.25, 0.5, 0.75, 0.9, 0.95, 0.99];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct WalkConfig {
    pub seed: u64,
    pub walkers: usize,
    pub n: u64,
    pub start: GroupElement,
}

/// The stream of walker `walker` positioned at `step`.
pub fn step_rng(seed: u64, walker: u64, step: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(walker);
    rng.set_word_pos((step as u128) << WORDS_PER_STEP);
    rng
}

struct Walker {
    rng: ChaCha8Rng,
    step: u64,
}

impl Walker {
    fn new(seed: u64, walker: u64) -> Self {
        Walker {
            rng: step_rng(seed, walker, 0),
            step: 0,
        }
    }

    fn increment(&mut self, measure: &Measure) -> GroupElement {
        self.step += 1;
        self.rng.set_word_pos((self.step as u128) << WORDS_PER_STEP);
        measure.sample_step(&mut self.rng)
    }
}

fn check_start(group: GroupSpec, start: &GroupElement) -> Result<()> {
    group.check(start)
}

/// Endpoints of every walker at each checkpoint (ascending), in walker order.
pub fn simulate_endpoints(measure: &Measure, cfg: &WalkConfig, checkpoints: &[u64]) -> Result<Vec<Vec<GroupElement>>> {
    let group = measure.group();
    check_start(group, &cfg.start)?;
    if checkpoints.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Config("checkpoints must be strictly ascending".into()));
    }
    let last = checkpoints.last().copied().unwrap_or(0);
    let per_walker: Vec<Result<Vec<GroupElement>>> = (0..cfg.walkers as u64)
        .into_par_iter()
        .map(|w| {
            let mut walker = Walker::new(cfg.seed, w);
            let mut x = cfg.start;
            let mut out = Vec::with_capacity(checkpoints.len());
            let mut next = 0;
            for k in 0..=last {
                if k > 0 {
                    x = group.mul(&x, &walker.increment(measure))?;
                }
                while next < checkpoints.len() && checkpoints[next] == k {
                    out.push(x);
                    next += 1;
                }
            }
            Ok(out)
        })
        .collect();
    let mut by_checkpoint = vec![Vec::with_capacity(cfg.walkers); checkpoints.len()];
    for row in per_walker {
        for (i, x) in row?.into_iter().enumerate() {
            by_checkpoint[i].push(x);
        }
    }
    Ok(by_checkpoint)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ControlRow {
    pub epsilon: f64,
    /// Smallest recorded `gamma` with `P(sup_k ||X_k||_{G,2} >= gamma n^{w_*}) <= epsilon`.
    pub gamma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct TrajectoryStats {
    pub n: u64,
    pub walkers: usize,
    /// Sorted endpoints with multiplicities.
    pub endpoints: Vec<(GroupElement, usize)>,
    /// `(q, value)` for the running maximum of `||start^{-1} X_k||_{G,2}`.
    pub max_displacement_quantiles: Vec<(f64, f64)>,
    pub control: Vec<ControlRow>,
}

/// Empirical `q`-quantile of sorted data (lower interpolation).
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let i = ((q * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len()) - 1;
    sorted[i]
}

/// Runs `cfg.walkers` trajectories of length `cfg.n`.
pub fn simulate(measure: &Measure, geom: &AdaptedGeometry, cfg: &WalkConfig) -> Result<TrajectoryStats> {
    let group = measure.group();
    if geom.group != group {
        return Err(Error::GroupMismatch("measure and geometry live on different groups".into()));
    }
    check_start(group, &cfg.start)?;
    let rows: Vec<Result<(GroupElement, f64)>> = (0..cfg.walkers as u64)
        .into_par_iter()
        .map(|w| {
            let mut walker = Walker::new(cfg.seed, w);
            let mut x = cfg.start;
            let mut rel = group.identity();
            let mut sup = 0.0f64;
            for _ in 0..cfg.n {
                let xi = walker.increment(measure);
                x = group.mul(&x, &xi)?;
                rel = group.mul(&rel, &xi)?;
                sup = sup.max(geom.norm_g2(&rel)?);
            }
            Ok((x, sup))
        })
        .collect();
    let mut ends = Vec::with_capacity(cfg.walkers);
    let mut sups = Vec::with_capacity(cfg.walkers);
    for r in rows {
        let (x, s) = r?;
        ends.push(x);
        sups.push(s);
    }
    ends.sort();
    let mut endpoints: Vec<(GroupElement, usize)> = Vec::new();
    for x in ends {
        match endpoints.last_mut() {
            Some((y, c)) if *y == x => *c += 1,
            _ => endpoints.push((x, 1)),
        }
    }
    sups.sort_by(f64::total_cmp);
    let scale = (cfg.n as f64).powf(geom.w_star);
    let control = CONTROL_LEVELS
        .iter()
        .map(|&eps| {
            // fraction strictly above the (1 - eps) quantile is at most eps
            let gamma = if cfg.n == 0 { 0.0 } else { quantile(&sups, 1.0 - eps) / scale };
            ControlRow { epsilon: eps, gamma }
        })
        .collect();
    Ok(TrajectoryStats {
        n: cfg.n,
        walkers: cfg.walkers,
        endpoints,
        max_displacement_quantiles: QUANTILES.iter().map(|&q| (q, quantile(&sups, q))).collect(),
        control,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct CollisionEstimate {
    pub n: u64,
    pub estimate: f64,
    pub stderr: f64,
    pub walkers: usize,
    pub seed: u64,
    /// No collisions were seen; `stderr` then holds a 95% upper bound instead.
    pub low_information: bool,
}

/// `(estimate, stderr, low_information)` of `sum_x p(x)^2` from i.i.d. samples.
///
/// The estimate is the fraction of coincident pairs. Its variance is estimated by the
/// Hoeffding decomposition `4 (m - 2) / (m (m - 1)) zeta_1 + 2 / (m (m - 1)) zeta_2` with
/// `zeta_1 = sum p^3 - (sum p^2)^2` and `zeta_2 = theta (1 - theta)`.
pub fn collision_from_samples(samples: &mut [GroupElement]) -> Result<(f64, f64, bool)> {
    let m = samples.len();
    if m < 2 {
        return Err(Error::Config("collision estimates need at least two walkers".into()));
    }
    samples.sort_unstable();
    let (mut pairs, mut triples) = (0f64, 0f64);
    let mut i = 0;
    while i < m {
        let mut j = i + 1;
        while j < m && samples[j] == samples[i] {
            j += 1;
        }
        let c = (j - i) as f64;
        pairs += c * (c - 1.0) / 2.0;
        triples += c * (c - 1.0) * (c - 2.0);
        i = j;
    }
    let mf = m as f64;
    let total_pairs = mf * (mf - 1.0) / 2.0;
    if pairs == 0.0 {
        // rule of three
        return Ok((0.0, 3.0 / total_pairs, true));
    }
    let theta = pairs / total_pairs;
    let s3 = if m >= 3 { triples / (mf * (mf - 1.0) * (mf - 2.0)) } else { theta * theta };
    let zeta1 = (s3 - theta * theta).max(0.0);
    let zeta2 = theta * (1.0 - theta);
    let var = 4.0 * (mf - 2.0) / (mf * (mf - 1.0)) * zeta1 + 2.0 / (mf * (mf - 1.0)) * zeta2;
    Ok((theta, var.max(0.0).sqrt(), false))
}

/// Estimates `mu^(2n)(e)` for each `n` in `ns` from one set of trajectories.
pub fn collision_return_estimates(measure: &Measure, ns: &[u64], cfg: &WalkConfig) -> Result<Vec<CollisionEstimate>> {
    let ends = simulate_endpoints(measure, cfg, ns)?;
    ns.iter()
        .zip(ends)
        .map(|(&n, mut e)| {
            let (estimate, stderr, low_information) = collision_from_samples(&mut e)?;
            Ok(CollisionEstimate {
                n,
                estimate,
                stderr,
                walkers: cfg.walkers,
                seed: cfg.seed,
                low_information,
            })
        })
        .collect()
}

/// Estimates `mu^(2n)(e)` from endpoint coincidences at time `n`.
pub fn collision_return_estimate(measure: &Measure, n: u64, cfg: &WalkConfig) -> Result<CollisionEstimate> {
    Ok(collision_return_estimates(measure, &[n], cfg)?.remove(0))
}

/// First exit of one walker from `B(start, r)` in the `||.||_{G,2}` scale.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExitRecord {
    pub tau: u64,
    /// Norm of `start^{-1} X_tau`; `None` if the walker was censored.
    pub exit_norm: Option<f64>,
}

/// `ceil(64 r^{1/w_*})`.
pub fn exit_horizon(geom: &AdaptedGeometry, r: f64) -> u64 {
    (EXIT_HORIZON_FACTOR * r.powf(1.0 / geom.w_star)).ceil() as u64
}

pub fn simulate_exits(measure: &Measure, geom: &AdaptedGeometry, r: f64, cfg: &WalkConfig) -> Result<Vec<ExitRecord>> {
    let group = measure.group();
    if geom.group != group {
        return Err(Error::GroupMismatch("measure and geometry live on different groups".into()));
    }
    if !(r > 0.0) {
        return Err(Error::Config(format!("exit radius must be positive, got {r}")));
    }
    check_start(group, &cfg.start)?;
    let horizon = exit_horizon(geom, r);
    // compare in the closed-form scale to avoid one power per step
    let closed_r = geom.closed_radius_g2(r);
    (0..cfg.walkers as u64)
        .into_par_iter()
        .map(|w| {
            let mut walker = Walker::new(cfg.seed, w);
            let mut rel = group.identity();
            for k in 1..=horizon {
                rel = group.mul(&rel, &walker.increment(measure))?;
                let d = geom.closed_form_norm(&rel)?;
                if d > closed_r && geom.scale_g2(d) > r {
                    return Ok(ExitRecord {
                        tau: k,
                        exit_norm: Some(geom.scale_g2(d)),
                    });
                }
            }
            Ok(ExitRecord {
                tau: horizon,
                exit_norm: None,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ExitStats {
    pub r: f64,
    pub horizon: u64,
    pub walkers: usize,
    /// Mean with censored walkers counted at the horizon, a lower bound for `E tau`.
    pub mean_lower: f64,
    pub stderr: f64,
    pub censored_fraction: f64,
    pub quantiles: Vec<(f64, f64)>,
}

pub fn exit_stats_from_records(r: f64, horizon: u64, records: &[ExitRecord]) -> Result<ExitStats> {
    if records.is_empty() {
        return Err(Error::Config("no walkers".into()));
    }
    let censored = records.iter().filter(|e| e.exit_norm.is_none()).count();
    if censored == records.len() {
        return Err(Error::Reliability(format!("every walker was censored at {horizon} steps")));
    }
    let mut taus: Vec<f64> = records.iter().map(|e| e.tau as f64).collect();
    let m = taus.len() as f64;
    let mean = taus.iter().sum::<f64>() / m;
    let var = taus.iter().map(|t| (t - mean).powi(2)).sum::<f64>() / (m - 1.0).max(1.0);
    taus.sort_by(f64::total_cmp);
    Ok(ExitStats {
        r,
        horizon,
        walkers: records.len(),
        mean_lower: mean,
        stderr: (var / m).sqrt(),
        censored_fraction: censored as f64 / m,
        quantiles: QUANTILES.iter().map(|&q| (q, quantile(&taus, q))).collect(),
    })
}

/// Mean and quantiles of the exit time of `B(start, r)`, censored at `64 r^{1/w_*}`.
pub fn exit_time_stats(measure: &Measure, geom: &AdaptedGeometry, r: f64, cfg: &WalkConfig) -> Result<ExitStats> {
    let records = simulate_exits(measure, geom, r, cfg)?;
    exit_stats_from_records(r, exit_horizon(geom, r), &records)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Overshoot {
    pub r: f64,
    pub s: f64,
    pub probability: f64,
    pub stderr: f64,
    /// Walkers that exited before the horizon; the probability is over these.
    pub exited: usize,
}

/// `P(X_tau not in B(start, s))` for each `s`, from exits of `B(start, r)`.
pub fn overshoot_from_records(r: f64, ss: &[f64], records: &[ExitRecord]) -> Result<Vec<Overshoot>> {
    let exits: Vec<f64> = records.iter().filter_map(|e| e.exit_norm).collect();
    if exits.is_empty() {
        return Err(Error::Reliability("no walker left the ball".into()));
    }
    let m = exits.len() as f64;
    ss.iter()
        .map(|&s| {
            if s < 2.0 * r {
                return Err(Error::Config(format!("overshoot needs s >= 2r, got s = {s}, r = {r}")));
            }
            let p = exits.iter().filter(|&&d| d > s).count() as f64 / m;
            Ok(Overshoot {
                r,
                s,
                probability: p,
                stderr: (p * (1.0 - p) / m).sqrt(),
                exited: exits.len(),
            })
        })
        .collect()
}

/// Overshoot probabilities for several `s` from one simulation.
pub fn exit_overshoot_probs(
    measure: &Measure,
    geom: &AdaptedGeometry,
    r: f64,
    ss: &[f64],
    cfg: &WalkConfig,
) -> Result<Vec<Overshoot>> {
    let records = simulate_exits(measure, geom, r, cfg)?;
    overshoot_from_records(r, ss, &records)
}

pub fn exit_overshoot_prob(measure: &Measure, geom: &AdaptedGeometry, r: f64, s: f64, cfg: &WalkConfig) -> Result<Overshoot> {
    Ok(exit_overshoot_probs(measure, geom, r, &[s], cfg)?.remove(0))
}
