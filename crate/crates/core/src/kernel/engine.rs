//! One-step kernels and memoized convolution powers.

use std::collections::BTreeMap;
use std::sync::Arc;

use rustc_hash::FxHashMap;
use serde::Serialize;

use super::{convolve, SparseKernel, TruncationMode, TruncationPolicy};
use crate::error::{Error, Result};
use crate::group::{GroupElement, GroupSpec};
use crate::measures::{Component, Measure};

/// Per-component truncation radii for a common tail level `t`.
fn radii_at(components: &[Component], t: f64, hi: u64) -> Vec<u64> {
    components
        .iter()
        .map(|c| match c.support_radius() {
            Some(r) => r,
            None => {
                let (mut lo, mut hi) = (0u64, hi);
                while lo < hi {
                    let mid = lo + (hi - lo) / 2;
                    if c.tail_mass(mid + 1) <= t {
                        hi = mid;
                    } else {
                        lo = mid + 1;
                    }
                }
                lo
            }
        })
        .collect()
}

fn support_bound(measure: &Measure, radii: &[u64], limit: u128) -> u128 {
    let mut total = measure.mu0.len() as u128;
    for (c, &r) in measure.components.iter().zip(radii) {
        total = total.saturating_add(c.ball_size(r, limit));
    }
    total
}

/// Smallest tail level whose radii keep the support within `limit`.
fn level_for_support(measure: &Measure, limit: u128, hi: u64) -> f64 {
    let fits = |t: f64| support_bound(measure, &radii_at(&measure.components, t, hi), limit) <= limit;
    let (mut lo, mut up) = (-300.0f64, 0.0f64);
    if fits(10f64.powf(lo)) {
        return 10f64.powf(lo);
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + up);
        if fits(10f64.powf(mid)) {
            up = mid;
        } else {
            lo = mid;
        }
    }
    10f64.powf(up)
}

/// `mu` restricted to the shells `|h|_i <= R_i`, where the radii are chosen so that the
/// discarded tail is at most `epsPerStep` (threshold mode) or so that the support fits in
/// `maxSupport` (top-K mode). The discarded tail is the initial deficit.
pub fn one_step_kernel(measure: &Measure, policy: &TruncationPolicy) -> Result<SparseKernel> {
    policy.validate()?;
    let comps = &measure.components;
    let limit = policy.max_support as u128;
    // no radius can exceed the support budget
    let hi = (policy.max_support as u64).min(crate::measures::RADIUS_CEILING);
    let any_infinite = comps.iter().any(|c| !c.is_finite());
    let radii = match policy.mode {
        TruncationMode::Threshold => {
            if any_infinite && policy.eps_per_step == 0.0 {
                return Err(Error::CapExceeded {
                    support: usize::MAX,
                    max_support: policy.max_support,
                    suggested_eps: level_for_support(measure, limit, hi),
                });
            }
            let radii = radii_at(comps, policy.eps_per_step, crate::measures::RADIUS_CEILING);
            let support = support_bound(measure, &radii, limit);
            if support > limit {
                return Err(Error::CapExceeded {
                    support: usize::try_from(support).unwrap_or(usize::MAX),
                    max_support: policy.max_support,
                    suggested_eps: level_for_support(measure, limit, hi),
                });
            }
            radii
        }
        TruncationMode::TopK => radii_at(comps, level_for_support(measure, limit, hi), hi),
    };

    let group = measure.group();
    let mut acc = Accumulator::new(group);
    let mut dropped = 0.0;
    for (c, &radius) in comps.iter().zip(&radii) {
        for r in 0..=radius {
            for h in c.shell_elements(r)? {
                acc.add(h, c.p * c.mass(&h));
            }
        }
        if !c.is_finite() {
            dropped += c.p * c.tail_mass(radius + 1);
        }
    }
    for (g, m) in &measure.mu0 {
        acc.add(*g, measure.p0 * m);
    }
    let mut k = acc.finish(dropped)?;
    k.truncate(policy)?;
    Ok(k)
}

enum Accumulator {
    Line(Vec<(i128, f64)>),
    Map(GroupSpec, FxHashMap<GroupElement, f64>),
}

impl Accumulator {
    fn new(group: GroupSpec) -> Self {
        if super::uses_line(group) {
            Accumulator::Line(Vec::new())
        } else {
            Accumulator::Map(group, FxHashMap::default())
        }
    }

    fn add(&mut self, g: GroupElement, p: f64) {
        if p <= 0.0 {
            return;
        }
        match self {
            Accumulator::Line(v) => v.push((g.coords()[0], p)),
            Accumulator::Map(_, m) => *m.entry(g).or_insert(0.0) += p,
        }
    }

    fn finish(self, dropped: f64) -> Result<SparseKernel> {
        match self {
            Accumulator::Line(v) => {
                let lo = v.iter().map(|e| e.0).min().unwrap_or(0);
                let hi = v.iter().map(|e| e.0).max().unwrap_or(0);
                let mut values = vec![0.0; (hi - lo) as usize + 1];
                for (x, p) in v {
                    values[(x - lo) as usize] += p;
                }
                Ok(SparseKernel::from_line(1, lo, values, dropped))
            }
            Accumulator::Map(group, m) => {
                let mut entries: Vec<(GroupElement, f64)> = m.into_iter().collect();
                entries.sort_by(|a, b| a.0.cmp(&b.0));
                Ok(SparseKernel {
                    group,
                    n: 1,
                    storage: super::Storage::Sparse(entries),
                    dropped_mass: dropped,
                })
            }
        }
    }
}

/// One row of a return-probability series.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ReturnRow {
    pub n: u64,
    /// `k(e)`, a lower bound for `mu^(n)(e)`.
    pub lower: f64,
    /// `k(e) + droppedMass`.
    pub upper: f64,
    pub sup_norm: f64,
    pub dropped_mass: f64,
    pub support: usize,
}

/// Convolution powers of one measure under one policy, memoized.
#[derive(Debug, Clone)]
pub struct KernelEngine {
    group: GroupSpec,
    policy: TruncationPolicy,
    one_step: Arc<SparseKernel>,
    cache: BTreeMap<u64, Arc<SparseKernel>>,
}

impl KernelEngine {
    pub fn new(measure: &Measure, policy: TruncationPolicy) -> Result<Self> {
        Ok(Self::from_one_step(one_step_kernel(measure, &policy)?, policy))
    }

    /// Engine over an explicit one-step kernel.
    pub fn from_one_step(one_step: SparseKernel, policy: TruncationPolicy) -> Self {
        let one_step = Arc::new(one_step);
        let mut cache = BTreeMap::new();
        cache.insert(1, one_step.clone());
        KernelEngine {
            group: one_step.group(),
            policy,
            one_step,
            cache,
        }
    }

    pub fn policy(&self) -> &TruncationPolicy {
        &self.policy
    }

    pub fn one_step(&self) -> &SparseKernel {
        &self.one_step
    }

    /// `mu^(n)` by square-and-multiply from the most significant bit of `n`. Every
    /// intermediate power is cached, so a doubling series costs one squaring per term.
    pub fn power(&mut self, n: u64) -> Result<Arc<SparseKernel>> {
        if n == 0 {
            return Ok(Arc::new(SparseKernel::delta(self.group)));
        }
        if let Some(k) = self.cache.get(&n) {
            return Ok(k.clone());
        }
        let top = 63 - n.leading_zeros();
        let mut m = 1u64;
        let mut acc = self.one_step.clone();
        for bit in (0..top).rev() {
            m *= 2;
            acc = match self.cache.get(&m) {
                Some(k) => k.clone(),
                None => {
                    let k = Arc::new(convolve(&acc, &acc, &self.policy)?);
                    self.cache.insert(m, k.clone());
                    k
                }
            };
            if n >> bit & 1 == 1 {
                m += 1;
                acc = match self.cache.get(&m) {
                    Some(k) => k.clone(),
                    None => {
                        let k = Arc::new(convolve(&acc, &self.one_step, &self.policy)?);
                        self.cache.insert(m, k.clone());
                        k
                    }
                };
            }
        }
        debug_assert_eq!(m, n);
        Ok(acc)
    }

    /// `(n, k(e), k(e) + deficit)` with the sup-norm, for ascending `ns`.
    pub fn return_series(&mut self, ns: &[u64]) -> Result<Vec<ReturnRow>> {
        if ns.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config("return series needs strictly ascending n".into()));
        }
        let e = self.group.identity();
        ns.iter()
            .map(|&n| {
                let k = self.power(n)?;
                let lower = k.get(&e);
                Ok(ReturnRow {
                    n,
                    lower,
                    upper: lower + k.dropped_mass(),
                    sup_norm: k.sup_norm(),
                    dropped_mass: k.dropped_mass(),
                    support: k.support_size(),
                })
            })
            .collect()
    }

    /// Drops cached powers to release memory.
    pub fn clear_cache(&mut self) {
        self.cache.retain(|&n, _| n == 1);
    }
}

/// `mu^(n)` under `policy`, computed afresh.
pub fn power(measure: &Measure, n: u64, policy: &TruncationPolicy) -> Result<SparseKernel> {
    let mut engine = KernelEngine::new(measure, *policy)?;
    Ok((*engine.power(n)?).clone())
}
