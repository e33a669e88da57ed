//! Brute-force evaluation of `||g||_F`: the least `R` such that `g` is a word using each
//! letter `s` (or its inverse) at most `F_s(R)` times.
//!
//! The infimum is attained on the grid `{F_s^{-1}(k)}`. [`oracle_norm`] binary-searches
//! that grid with a budgeted breadth-first search; [`oracle_ball`] computes every norm up
//! to a cap in one pass by keeping the Pareto-minimal letter counts per element.

use std::collections::VecDeque;

use rustc_hash::FxHashMap;

use super::system::WeightSystem;
use crate::error::{Error, Result};
use crate::group::{GroupElement, GroupSpec};

const MAX_LETTERS: usize = 8;
const REL_TOL: f64 = 1e-12;
/// Refuse searches whose state count would exceed this.
const STATE_LIMIT: usize = 40_000_000;

type Usage = [u16; MAX_LETTERS];

/// Sorted grid of radii at which some budget `floor(F_s(R))` increases, up to `cap`.
pub fn r_grid(system: &WeightSystem, cap: f64) -> Vec<f64> {
    let mut grid = vec![0.0];
    for e in &system.sigma {
        let mut k = 1.0;
        loop {
            let r = e.weight.inverse(k);
            if r > cap * (1.0 + REL_TOL) {
                break;
            }
            grid.push(r);
            k += 1.0;
        }
    }
    grid.sort_by(f64::total_cmp);
    grid.dedup_by(|a, b| (*a - *b).abs() <= REL_TOL * b.abs().max(1e-300));
    grid
}

/// Largest `k` with `F_s^{-1}(k) <= r`, i.e. `floor(F_s(r))` evaluated without rounding drift.
fn budget(system: &WeightSystem, idx: usize, r: f64) -> u16 {
    let f = &system.sigma[idx].weight;
    let mut k: u16 = 0;
    while k < u16::MAX && f.inverse(k as f64 + 1.0) <= r * (1.0 + REL_TOL) {
        k += 1;
    }
    k
}

fn letters(group: GroupSpec, system: &WeightSystem) -> Result<Vec<(usize, GroupElement)>> {
    if system.sigma.len() > MAX_LETTERS {
        return Err(Error::Geometry(format!(
            "oracle supports at most {MAX_LETTERS} generators, got {}",
            system.sigma.len()
        )));
    }
    let mut out = Vec::new();
    for (i, e) in system.sigma.iter().enumerate() {
        group.check(&e.element)?;
        out.push((i, e.element));
        let inv = group.inv(&e.element)?;
        if inv != e.element {
            out.push((i, inv));
        }
    }
    Ok(out)
}

/// Whether `g` is a word with letter counts `<= budgets`.
fn reachable(group: GroupSpec, moves: &[(usize, GroupElement)], budgets: &Usage, g: &GroupElement) -> Result<bool> {
    let e = group.identity();
    if *g == e {
        return Ok(true);
    }
    // Pareto sets of residual budgets (larger is better).
    let mut best: FxHashMap<GroupElement, Vec<Usage>> = FxHashMap::default();
    best.insert(e, vec![*budgets]);
    let mut queue = VecDeque::from([(e, *budgets)]);
    let mut states = 0usize;
    while let Some((x, res)) = queue.pop_front() {
        if !best.get(&x).is_some_and(|v| v.contains(&res)) {
            continue;
        }
        for &(i, s) in moves {
            if res[i] == 0 {
                continue;
            }
            let mut r2 = res;
            r2[i] -= 1;
            let y = group.mul(&x, &s)?;
            if y == *g {
                return Ok(true);
            }
            let entry = best.entry(y).or_default();
            if entry.iter().any(|v| dominates(v, &r2)) {
                continue;
            }
            entry.retain(|v| !dominates(&r2, v));
            entry.push(r2);
            queue.push_back((y, r2));
            states += 1;
            if states > STATE_LIMIT {
                return Err(Error::Geometry("oracle search exceeded its state limit".into()));
            }
        }
    }
    Ok(false)
}

/// `a >= b` componentwise.
fn dominates(a: &Usage, b: &Usage) -> bool {
    a.iter().zip(b).all(|(x, y)| x >= y)
}

/// Exact `||g||_F` if it is at most `cap`, otherwise `None`.
pub fn oracle_norm(group: GroupSpec, system: &WeightSystem, g: &GroupElement, cap: f64) -> Result<Option<f64>> {
    group.check(g)?;
    let moves = letters(group, system)?;
    let grid = r_grid(system, cap);
    let budgets_at = |r: f64| {
        let mut b: Usage = [0; MAX_LETTERS];
        for (i, slot) in b.iter_mut().enumerate().take(system.sigma.len()) {
            *slot = budget(system, i, r);
        }
        b
    };
    let top = *grid.last().expect("grid contains 0");
    if !reachable(group, &moves, &budgets_at(top), g)? {
        return Ok(None);
    }
    // invariant: reachable at grid[hi], unreachable below grid[lo]
    let (mut lo, mut hi) = (0usize, grid.len() - 1);
    while lo < hi {
        let mid = (lo + hi) / 2;
        if reachable(group, &moves, &budgets_at(grid[mid]), g)? {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    Ok(Some(grid[lo]))
}

/// Every element with `||g||_F <= cap`, with its norm, sorted by element.
pub fn oracle_ball(group: GroupSpec, system: &WeightSystem, cap: f64) -> Result<Vec<(GroupElement, f64)>> {
    let moves = letters(group, system)?;
    let n = system.sigma.len();
    let mut limit: Usage = [0; MAX_LETTERS];
    for (i, slot) in limit.iter_mut().enumerate().take(n) {
        *slot = budget(system, i, cap);
    }
    // cost of a usage vector: max_s F_s^{-1}(u_s)
    let inverse_tables: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..=limit[i]).map(|k| system.sigma[i].weight.inverse(k as f64)).collect())
        .collect();
    let cost = |u: &Usage| (0..n).map(|i| inverse_tables[i][u[i] as usize]).fold(0.0, f64::max);

    let e = group.identity();
    let mut best: FxHashMap<GroupElement, Vec<Usage>> = FxHashMap::default();
    best.insert(e, vec![[0; MAX_LETTERS]]);
    let mut queue = VecDeque::from([(e, [0u16; MAX_LETTERS])]);
    let mut states = 0usize;
    while let Some((x, used)) = queue.pop_front() {
        if !best.get(&x).is_some_and(|v| v.contains(&used)) {
            continue;
        }
        for &(i, s) in &moves {
            if used[i] >= limit[i] {
                continue;
            }
            let mut u2 = used;
            u2[i] += 1;
            let y = group.mul(&x, &s)?;
            let entry = best.entry(y).or_default();
            if entry.iter().any(|v| dominates(&u2, v)) {
                continue;
            }
            entry.retain(|v| !dominates(v, &u2));
            entry.push(u2);
            queue.push_back((y, u2));
            states += 1;
            if states > STATE_LIMIT {
                return Err(Error::Geometry("oracle search exceeded its state limit".into()));
            }
        }
    }
    let mut out: Vec<(GroupElement, f64)> = best
        .into_iter()
        .map(|(g, us)| (g, us.iter().map(cost).fold(f64::INFINITY, f64::min)))
        .collect();
    out.sort_by(|a, b| a.0.cmp(&b.0));
    Ok(out)
}
