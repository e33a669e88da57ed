//! Truncated convolution powers `mu^(n)` with an additive L1 deficit ledger.
//!
//! A [`SparseKernel`] holds a sub-probability `k` with `k <= mu^(n)` pointwise and
//! `sum(mu^(n) - k) <= droppedMass`. Kernels on `Z` are stored as a dense window and
//! convolved directly or by FFT; all other groups use a sorted list of entries.

mod dense;
mod engine;
mod stats;

use std::io::Write;

use rayon::prelude::*;
use rustc_hash::FxHashMap;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group::{GroupElement, GroupSpec};
use crate::numeric::kahan_sum;

pub use engine::{one_step_kernel, power, KernelEngine, ReturnRow};
pub use stats::{near_diagonal_profile, regularity_ratio, tv_difference, NearDiagonal, TvDifference};

/// Number of left-operand chunks in a sparse convolution. Fixed so results do not depend
/// on the thread count.
pub const PARTITIONS: usize = 64;

/// Largest number of pairwise products a sparse convolution may form. Every product can
/// be a distinct element, so this bounds the memory of the intermediate maps (about a
/// gigabyte at the current element size).
pub const MAX_SPARSE_PRODUCTS: u128 = 1 << 23;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum TruncationMode {
    /// Drop entries below `epsPerStep`; fail if more than `maxSupport` remain.
    Threshold,
    /// Keep the `maxSupport` largest entries, ties broken by element order.
    TopK,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct TruncationPolicy {
    pub eps_per_step: f64,
    pub max_support: usize,
    pub mode: TruncationMode,
}

impl TruncationPolicy {
    pub const DEFAULT_MAX_SUPPORT: usize = 1 << 22;

    /// Threshold mode with `1e-14` on groups with at most two coordinates, `1e-12` otherwise.
    pub fn default_for(group: GroupSpec) -> Self {
        TruncationPolicy {
            eps_per_step: if group.arity() <= 2 { 1e-14 } else { 1e-12 },
            max_support: Self::DEFAULT_MAX_SUPPORT,
            mode: TruncationMode::Threshold,
        }
    }

    /// No truncation at all; only usable for finitely supported measures.
    pub fn exact() -> Self {
        TruncationPolicy {
            eps_per_step: 0.0,
            max_support: Self::DEFAULT_MAX_SUPPORT,
            mode: TruncationMode::Threshold,
        }
    }

    pub fn top_k(max_support: usize) -> Self {
        TruncationPolicy {
            eps_per_step: 0.0,
            max_support,
            mode: TruncationMode::TopK,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eps_per_step.is_finite() && self.eps_per_step >= 0.0) {
            return Err(Error::Config(format!("epsPerStep must be >= 0, got {}", self.eps_per_step)));
        }
        if self.max_support < 1 {
            return Err(Error::Config("maxSupport must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Storage {
    /// `values[i]` is the mass of `offset + i` in `Z`.
    Line { offset: i128, values: Vec<f64> },
    /// Positive entries sorted by element.
    Sparse(Vec<(GroupElement, f64)>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SparseKernel {
    group: GroupSpec,
    n: u64,
    storage: Storage,
    dropped_mass: f64,
}

fn uses_line(group: GroupSpec) -> bool {
    group == GroupSpec::ZK { k: 1 }
}

impl SparseKernel {
    /// `delta_e`, the zeroth power.
    pub fn delta(group: GroupSpec) -> Self {
        let storage = if uses_line(group) {
            Storage::Line {
                offset: 0,
                values: vec![1.0],
            }
        } else {
            Storage::Sparse(vec![(group.identity(), 1.0)])
        };
        SparseKernel {
            group,
            n: 0,
            storage,
            dropped_mass: 0.0,
        }
    }

    /// Kernel from explicit entries; zero entries are discarded and duplicates summed.
    pub fn from_entries(group: GroupSpec, n: u64, entries: Vec<(GroupElement, f64)>, dropped_mass: f64) -> Result<Self> {
        let mut map: FxHashMap<GroupElement, f64> = FxHashMap::default();
        for (g, p) in entries {
            group.check(&g)?;
            if !(p.is_finite() && p >= 0.0) {
                return Err(Error::Config(format!("kernel entry {p} at {g:?} is not a probability")));
            }
            if p > 0.0 {
                *map.entry(g).or_insert(0.0) += p;
            }
        }
        let mut sorted: Vec<(GroupElement, f64)> = map.into_iter().collect();
        sorted.sort_by(|a, b| a.0.cmp(&b.0));
        let storage = if uses_line(group) {
            match (sorted.first(), sorted.last()) {
                (Some(lo), Some(hi)) => {
                    let offset = lo.0.coords()[0];
                    let mut values = vec![0.0; (hi.0.coords()[0] - offset) as usize + 1];
                    for (g, p) in &sorted {
                        values[(g.coords()[0] - offset) as usize] = *p;
                    }
                    Storage::Line { offset, values }
                }
                _ => Storage::Line {
                    offset: 0,
                    values: Vec::new(),
                },
            }
        } else {
            Storage::Sparse(sorted)
        };
        Ok(SparseKernel {
            group,
            n,
            storage,
            dropped_mass,
        })
    }

    pub(crate) fn from_line(n: u64, offset: i128, values: Vec<f64>, dropped_mass: f64) -> Self {
        let mut k = SparseKernel {
            group: GroupSpec::ZK { k: 1 },
            n,
            storage: Storage::Line { offset, values },
            dropped_mass,
        };
        k.trim();
        k
    }

    pub fn group(&self) -> GroupSpec {
        self.group
    }

    /// The convolution power this kernel approximates.
    pub fn n(&self) -> u64 {
        self.n
    }

    /// Upper bound on `sum(mu^(n) - k)`.
    pub fn dropped_mass(&self) -> f64 {
        self.dropped_mass
    }

    /// `k(g)`.
    pub fn get(&self, g: &GroupElement) -> f64 {
        match &self.storage {
            Storage::Line { offset, values } => {
                if g.arity() != 1 {
                    return 0.0;
                }
                let i = g.coords()[0] - offset;
                if i < 0 || i >= values.len() as i128 {
                    0.0
                } else {
                    values[i as usize]
                }
            }
            Storage::Sparse(entries) => entries
                .binary_search_by(|e| e.0.cmp(g))
                .map(|i| entries[i].1)
                .unwrap_or(0.0),
        }
    }

    /// Positive entries in element order.
    pub fn iter(&self) -> Box<dyn Iterator<Item = (GroupElement, f64)> + '_> {
        match &self.storage {
            Storage::Line { offset, values } => Box::new(
                values
                    .iter()
                    .enumerate()
                    .filter(|(_, &p)| p > 0.0)
                    .map(move |(i, &p)| (GroupElement::from_coords(&[offset + i as i128]), p)),
            ),
            Storage::Sparse(entries) => Box::new(entries.iter().copied()),
        }
    }

    /// Number of positive entries.
    pub fn support_size(&self) -> usize {
        match &self.storage {
            Storage::Line { values, .. } => values.iter().filter(|&&p| p > 0.0).count(),
            Storage::Sparse(entries) => entries.len(),
        }
    }

    pub fn total_mass(&self) -> f64 {
        match &self.storage {
            Storage::Line { values, .. } => kahan_sum(values.iter().copied()),
            Storage::Sparse(entries) => kahan_sum(entries.iter().map(|e| e.1)),
        }
    }

    /// `max_g k(g)`.
    pub fn sup_norm(&self) -> f64 {
        self.iter().map(|e| e.1).fold(0.0, f64::max)
    }

    /// CSV with a two-line comment header carrying `n` and `droppedMass`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "# n={}", self.n)?;
        writeln!(w, "# droppedMass={:.16e}", self.dropped_mass)?;
        writeln!(w, "element_coords,prob")?;
        for (g, p) in self.iter() {
            writeln!(w, "{},{:.16e}", g.to_semicolon_string(), p)?;
        }
        Ok(())
    }

    /// Removes zero ends of a line window.
    fn trim(&mut self) {
        if let Storage::Line { offset, values } = &mut self.storage {
            let Some(first) = values.iter().position(|&p| p > 0.0) else {
                values.clear();
                *offset = 0;
                return;
            };
            let last = values.iter().rposition(|&p| p > 0.0).unwrap_or(first);
            values.truncate(last + 1);
            values.drain(..first);
            *offset += first as i128;
        }
    }

    /// Applies `policy`, moving removed mass into the ledger.
    pub(crate) fn truncate(&mut self, policy: &TruncationPolicy) -> Result<()> {
        let removed = match &mut self.storage {
            Storage::Line { values, .. } => truncate_values(values, policy)?,
            Storage::Sparse(entries) => {
                let mut values: Vec<f64> = entries.iter().map(|e| e.1).collect();
                let removed = truncate_values(&mut values, policy)?;
                let mut i = 0;
                entries.retain(|_| {
                    let keep = values[i] > 0.0;
                    i += 1;
                    keep
                });
                removed
            }
        };
        self.dropped_mass += removed;
        self.trim();
        Ok(())
    }
}

/// Zeroes the entries removed by `policy` and returns their total mass. Ties at the
/// top-K boundary keep the earliest positions, i.e. the smallest elements.
fn truncate_values(values: &mut [f64], policy: &TruncationPolicy) -> Result<f64> {
    let mut removed = Vec::new();
    match policy.mode {
        TruncationMode::Threshold => {
            if policy.eps_per_step > 0.0 {
                for v in values.iter_mut() {
                    if *v > 0.0 && *v < policy.eps_per_step {
                        removed.push(*v);
                        *v = 0.0;
                    }
                }
            }
            let support = values.iter().filter(|&&p| p > 0.0).count();
            if support > policy.max_support {
                let mut positive: Vec<f64> = values.iter().copied().filter(|&p| p > 0.0).collect();
                let k = policy.max_support - 1;
                let (_, kth, _) = positive.select_nth_unstable_by(k, |a, b| b.total_cmp(a));
                return Err(Error::CapExceeded {
                    support,
                    max_support: policy.max_support,
                    suggested_eps: f64::max(*kth, policy.eps_per_step) * (1.0 + 1e-12),
                });
            }
        }
        TruncationMode::TopK => {
            let support = values.iter().filter(|&&p| p > 0.0).count();
            if support > policy.max_support {
                let mut positive: Vec<f64> = values.iter().copied().filter(|&p| p > 0.0).collect();
                let k = policy.max_support - 1;
                let (_, kth, _) = positive.select_nth_unstable_by(k, |a, b| b.total_cmp(a));
                let cut = *kth;
                let mut above = values.iter().filter(|&&p| p > cut).count();
                for v in values.iter_mut() {
                    if *v > cut {
                        continue;
                    }
                    if *v == cut && above < policy.max_support {
                        above += 1;
                        continue;
                    }
                    if *v > 0.0 {
                        removed.push(*v);
                        *v = 0.0;
                    }
                }
            }
        }
    }
    removed.sort_by(f64::total_cmp);
    Ok(kahan_sum(removed))
}

/// `(a * b)(x) = sum_y a(y) b(y^{-1} x)`, truncated by `policy`.
pub fn convolve(a: &SparseKernel, b: &SparseKernel, policy: &TruncationPolicy) -> Result<SparseKernel> {
    policy.validate()?;
    if a.group != b.group {
        return Err(Error::GroupMismatch(format!(
            "cannot convolve kernels on {} and {}",
            a.group.name(),
            b.group.name()
        )));
    }
    let group = a.group;
    let n = a.n + b.n;
    let dropped = a.dropped_mass + b.dropped_mass;
    let mut out = match (&a.storage, &b.storage) {
        (Storage::Line { offset: oa, values: va }, Storage::Line { offset: ob, values: vb }) => {
            let same = std::ptr::eq(a, b);
            let (values, fft_loss) = dense::convolve_lines(va, vb, same);
            SparseKernel::from_line(n, oa + ob, values, dropped + fft_loss)
        }
        (Storage::Sparse(ea), Storage::Sparse(eb)) => SparseKernel {
            group,
            n,
            storage: Storage::Sparse(convolve_sparse(group, ea, eb)?),
            dropped_mass: dropped,
        },
        _ => unreachable!("storage is determined by the group"),
    };
    out.truncate(policy)?;
    Ok(out)
}

fn convolve_sparse(
    group: GroupSpec,
    a: &[(GroupElement, f64)],
    b: &[(GroupElement, f64)],
) -> Result<Vec<(GroupElement, f64)>> {
    if a.is_empty() || b.is_empty() {
        return Ok(Vec::new());
    }
    if a.len() as u128 * b.len() as u128 > MAX_SPARSE_PRODUCTS {
        return Err(Error::WorkLimit {
            left: a.len(),
            right: b.len(),
            limit: MAX_SPARSE_PRODUCTS,
        });
    }
    let chunk = a.len().div_ceil(PARTITIONS);
    let partials: Vec<Result<FxHashMap<GroupElement, f64>>> = a
        .par_chunks(chunk)
        .map(|part| {
            let mut acc: FxHashMap<GroupElement, f64> = FxHashMap::default();
            for (y, p) in part {
                for (z, q) in b {
                    let x = group.mul(y, z)?;
                    *acc.entry(x).or_insert(0.0) += p * q;
                }
            }
            Ok(acc)
        })
        .collect();
    let mut total: FxHashMap<GroupElement, f64> = FxHashMap::default();
    for part in partials {
        // chunk order is fixed, so every sum is formed in the same order on every run
        let mut part: Vec<(GroupElement, f64)> = part?.into_iter().collect();
        part.sort_by(|x, y| x.0.cmp(&y.0));
        for (x, v) in part {
            *total.entry(x).or_insert(0.0) += v;
        }
    }
    let mut out: Vec<(GroupElement, f64)> = total.into_iter().filter(|e| e.1 > 0.0).collect();
    out.sort_by(|x, y| x.0.cmp(&y.0));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn el(x: i128) -> GroupElement {
        GroupElement::from_coords(&[x])
    }

    fn lazy_z() -> SparseKernel {
        SparseKernel::from_entries(GroupSpec::ZK { k: 1 }, 1, vec![(el(-1), 0.25), (el(0), 0.5), (el(1), 0.25)], 0.0).unwrap()
    }

    #[test]
    fn identity_and_three_eighths() {
        let k = lazy_z();
        let d = SparseKernel::delta(GroupSpec::ZK { k: 1 });
        let same = convolve(&d, &k, &TruncationPolicy::exact()).unwrap();
        assert_eq!(same.iter().collect::<Vec<_>>(), k.iter().collect::<Vec<_>>());
        let k2 = convolve(&k, &k, &TruncationPolicy::exact()).unwrap();
        assert_eq!(k2.get(&el(0)), 0.375);
        assert_eq!(k2.get(&el(2)), 0.0625);
        assert_eq!(k2.n(), 2);
    }

    #[test]
    fn deficits_add() {
        let mut a = lazy_z();
        a.dropped_mass = 0.01;
        let mut b = lazy_z();
        b.dropped_mass = 0.02;
        let c = convolve(&a, &b, &TruncationPolicy::exact()).unwrap();
        assert!((c.dropped_mass() - 0.03).abs() < 1e-15);
    }

    #[test]
    fn threshold_cap_suggests_eps() {
        let k = lazy_z();
        let policy = TruncationPolicy {
            eps_per_step: 0.0,
            max_support: 3,
            mode: TruncationMode::Threshold,
        };
        match convolve(&k, &k, &policy) {
            Err(Error::CapExceeded { support, suggested_eps, .. }) => {
                assert_eq!(support, 5);
                let retry = TruncationPolicy {
                    eps_per_step: suggested_eps,
                    ..policy
                };
                let c = convolve(&k, &k, &retry).unwrap();
                assert!(c.support_size() <= 3);
                assert!((c.total_mass() + c.dropped_mass() - 1.0).abs() < 1e-15);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn top_k_breaks_ties_by_element_order() {
        let k = lazy_z();
        let c = convolve(&k, &k, &TruncationPolicy::top_k(2)).unwrap();
        // 0 has 3/8, then -1 and 1 tie at 1/4; -1 comes first
        assert_eq!(c.iter().collect::<Vec<_>>(), vec![(el(-1), 0.25), (el(0), 0.375)]);
        assert!((c.dropped_mass() - 0.375).abs() < 1e-15);
    }

    #[test]
    fn sparse_storage_matches_line_storage() {
        // the same walk on Z^2 restricted to the first axis
        let g = GroupSpec::ZK { k: 2 };
        let e2 = |x: i128| GroupElement::from_coords(&[x, 0]);
        let k = SparseKernel::from_entries(g, 1, vec![(e2(-1), 0.25), (e2(0), 0.5), (e2(1), 0.25)], 0.0).unwrap();
        let line = lazy_z();
        let (mut a, mut b) = (k.clone(), line.clone());
        for _ in 0..5 {
            a = convolve(&a, &k, &TruncationPolicy::exact()).unwrap();
            b = convolve(&b, &line, &TruncationPolicy::exact()).unwrap();
        }
        for x in -7..=7 {
            assert_eq!(a.get(&e2(x)), b.get(&el(x)));
        }
    }

    #[test]
    fn oversized_sparse_products_are_refused() {
        let group = GroupSpec::ZK { k: 2 };
        let side: Vec<(GroupElement, f64)> = (0..3000).map(|i| (GroupElement::from_coords(&[i, 0]), 1.0 / 3000.0)).collect();
        let k = SparseKernel::from_entries(group, 1, side, 0.0).unwrap();
        assert!(matches!(
            convolve(&k, &k, &TruncationPolicy::exact()),
            Err(Error::WorkLimit { .. })
        ));
    }

    #[test]
    fn csv_header() {
        let mut buf = Vec::new();
        lazy_z().write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "# n=1");
        assert_eq!(lines[2], "element_coords,prob");
        assert_eq!(lines[3], "-1,2.5000000000000000e-1");
    }
}
