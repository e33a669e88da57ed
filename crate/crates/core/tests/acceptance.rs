//! Acceptance run: one line per criterion, non-zero exit status if any fails.

mod common;

use std::time::Instant;

use common::e;
use longjump::analysis::{dirichlet_eigenvalue, fit_loglog, holder_fit, rayleigh_zeta};
use longjump::error::Result;
use longjump::geometry::oracle_ball;
use longjump::group::{GroupElement, GroupSpec};
use longjump::kernel::{near_diagonal_profile, regularity_ratio, KernelEngine, TruncationPolicy};
use longjump::measures::Measure;
use longjump::walk::{collision_return_estimate, collision_return_estimates, exit_overshoot_probs, exit_time_stats, WalkConfig};

/// Support kept by every heavy-tailed kernel computation below.
const TOP_K: usize = (1 << 20) + 1;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: String) -> Result<Verdict> {
    Ok(Verdict { pass, detail })
}

fn spread(values: &[f64]) -> f64 {
    let max = values.iter().cloned().fold(f64::MIN, f64::max);
    let min = values.iter().cloned().fold(f64::MAX, f64::min);
    max / min
}

fn walk_config(seed: u64, walkers: usize, n: u64, group: GroupSpec) -> WalkConfig {
    WalkConfig { seed, walkers, n, start: group.identity() }
}

fn collision_slope(m: &Measure, ns: &[u64], seed: u64, walkers: usize) -> Result<f64> {
    let cfg = walk_config(seed, walkers, *ns.last().unwrap(), m.group());
    let rows = collision_return_estimates(m, ns, &cfg)?;
    let pts: Vec<(f64, f64)> = rows.iter().map(|r| (r.n as f64, r.estimate)).collect();
    Ok(fit_loglog(&pts, None)?.slope)
}

fn c1_z_return() -> Result<Verdict> {
    let start = Instant::now();
    let m = common::cauchy_z();
    let theory = -m.adapted_geometry(None)?.volume.exponent().0;
    let mut engine = KernelEngine::new(&m, TruncationPolicy::top_k(TOP_K))?;
    let ns: Vec<u64> = (6..=14).map(|k| 1u64 << k).collect();
    let rows = engine.return_series(&ns)?;
    let pts: Vec<(f64, f64)> = rows.iter().map(|r| (r.n as f64, r.lower)).collect();
    let fit = fit_loglog(&pts, None)?;
    let secs = start.elapsed().as_secs_f64();
    verdict(
        (fit.slope - theory).abs() <= 0.1 && theory == -1.0 && secs <= 120.0,
        format!("slope {:.4}, theory {theory}, r2 {:.5}, {secs:.1}s", fit.slope, fit.r2),
    )
}

fn c2_heisenberg() -> Result<Verdict> {
    let start = Instant::now();
    let m = common::heisenberg_axes([1.0; 3]);
    let theory = -m.adapted_geometry(None)?.volume.exponent().0;
    let slope = collision_slope(&m, &[8, 16, 32, 64], 1, 200_000)?;
    let secs = start.elapsed().as_secs_f64();
    verdict(
        (slope - theory).abs() <= 0.5 && theory == -4.0 && secs <= 600.0,
        format!("collision slope {slope:.3}, theory {theory}, {secs:.1}s"),
    )
}

fn c3_dihedral() -> Result<Verdict> {
    let alphas = [0.7, 1.3];
    let m = common::dihedral_finite(alphas);
    let predicted = m.adapted_geometry(None)?.volume.exponent().0;
    let mut engine = KernelEngine::new(&m, TruncationPolicy::exact())?;
    let ns: Vec<u64> = (4..=10).map(|k| 2u64 << k).collect();
    let rows = engine.return_series(&ns)?;
    let pts: Vec<(f64, f64)> = rows.iter().map(|r| ((r.n / 2) as f64, r.lower)).collect();
    let slope = fit_loglog(&pts, None)?.slope;
    let naive = 1.0 / alphas[1];
    verdict(
        (slope + 0.5).abs() <= 0.05 && (predicted - 0.5).abs() < 1e-12 && (naive - 0.5).abs() > 0.05,
        format!("slope of mu^(2n)(e) {slope:.4}, builder exponent {predicted}, naive 1/alpha_2 = {naive:.3}"),
    )
}

fn c4_delta_semidirect() -> Result<Verdict> {
    let delta = common::delta_lines([1.0; 3]);
    let semi = common::semidirect([1.0, 1.0]);
    let d1 = delta.adapted_geometry(None)?.volume.exponent().0;
    let d2 = semi.adapted_geometry(None)?.volume.exponent().0;
    let s1 = collision_slope(&delta, &[8, 16, 32, 64], 1, 200_000)?;
    // the rotation axis only mixes in after a few dozen steps, so this range starts at 16
    let s2 = collision_slope(&semi, &[16, 32, 64, 128], 2, 300_000)?;
    verdict(
        d1 == 3.0 && d2 == 3.0 && (s1 + 3.0).abs() <= 0.5 && (s2 + 3.0).abs() <= 0.5,
        format!("Delta: d = {d1}, slope {s1:.3}; Z x| Z^2: d = {d2}, slope {s2:.3}"),
    )
}

/// Range of `a(g) / b(g)` over the elements of `b`'s ball, or `None` if one is missing from `a`.
fn norm_ratio(a: &[(GroupElement, f64)], b: &[(GroupElement, f64)]) -> Option<(f64, f64)> {
    let map: std::collections::HashMap<GroupElement, f64> = a.iter().cloned().collect();
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for (g, r) in b {
        if *r == 0.0 {
            continue;
        }
        let x = map.get(g)? / r;
        lo = lo.min(x);
        hi = hi.max(x);
    }
    Some((lo, hi))
}

fn c5_oracle() -> Result<Verdict> {
    let start = Instant::now();
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, m) in [
        ("Heisenberg", common::heisenberg_axes([1.0; 3])),
        ("Z^2", common::z2_axes([1.0, 1.0])),
        ("D_inf", common::dihedral_finite([0.7, 1.3])),
    ] {
        let geom = m.adapted_geometry(None)?;
        let ball = oracle_ball(geom.group, &geom.system_g, 6.0)?;
        let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
        for (g, r) in ball.iter().filter(|b| b.1 > 0.0) {
            let x = geom.closed_form_norm(g)? / r;
            lo = lo.min(x);
            hi = hi.max(x);
        }
        pass &= lo >= 0.25 && hi <= 4.0;
        parts.push(format!("{name} closed/oracle in [{lo:.3}, {hi:.3}] over {}", ball.len()));
    }
    // N-balls of radius 6 against G-balls of radius 9: every N-element must be found
    for (name, m) in [
        ("D_inf", common::dihedral_finite([0.7, 1.3])),
        ("Delta", common::delta_lines([1.0; 3])),
        ("Z x| Z^2", common::semidirect([1.0, 1.0])),
    ] {
        let geom = m.adapted_geometry(None)?;
        let n_ball = oracle_ball(geom.group, &geom.system_n, 6.0)?;
        let g_ball = oracle_ball(geom.group, &geom.system_g, 9.0)?;
        match norm_ratio(&g_ball, &n_ball) {
            Some((lo, hi)) => {
                pass &= lo >= 0.25 && hi <= 4.0;
                parts.push(format!("{name} G/N in [{lo:.3}, {hi:.3}]"));
            }
            None => {
                pass = false;
                parts.push(format!("{name} G/N: an N-element lies outside the G-ball"));
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    pass &= secs <= 300.0;
    verdict(pass, format!("{}; {secs:.1}s", parts.join("; ")))
}

fn c6_volume() -> Result<Verdict> {
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, m) in common::builtins() {
        let geom = m.adapted_geometry(None)?;
        let pts: Vec<(f64, f64)> = [4.0, 8.0, 16.0, 32.0, 64.0]
            .iter()
            .map(|&r| Ok((r, geom.ball_count_capped(r, 1u128 << 100)? as f64)))
            .collect::<Result<_>>()?;
        let slope = fit_loglog(&pts, None)?.slope;
        let d = geom.volume.exponent().0;
        pass &= (slope - d).abs() <= 0.15;
        parts.push(format!("{name} {slope:.3}/{d}"));
    }
    verdict(pass, format!("slope/exponent: {}", parts.join(", ")))
}

fn c7_near_diagonal() -> Result<Verdict> {
    let m = common::cauchy_z();
    let geom = m.adapted_geometry(None)?;
    let mut engine = KernelEngine::new(&m, TruncationPolicy::top_k(TOP_K))?;
    let k = engine.power(256)?;
    let p = near_diagonal_profile(&k, &geom, 0.5)?;
    let ratio = p.max_ratio / p.min_ratio;
    verdict(
        ratio <= 20.0,
        format!("k(g) F(n) in [{:.4}, {:.4}] over {} points, max/min {ratio:.3}", p.min_ratio, p.max_ratio, p.ball_size),
    )
}

fn c8_spectral() -> Result<Verdict> {
    let m = common::cauchy_z();
    let geom = m.adapted_geometry(None)?;
    let mut products = Vec::new();
    let mut variational = true;
    for k in 4..=9 {
        let r = (1u64 << k) as f64;
        let eig = dirichlet_eigenvalue(&m, &geom, r, 100_000)?;
        let q = rayleigh_zeta(&m, &geom, r)?;
        variational &= eig.converged && eig.lambda > 0.0 && q.quotient >= eig.lambda - eig.error_bound - q.tail_slack;
        products.push(eig.lambda * r.powf(1.0 / geom.w_upper));
    }
    let s = spread(&products);
    let shown: Vec<String> = products.iter().map(|p| format!("{p:.3}")).collect();
    verdict(
        s <= 10.0 && variational,
        format!("lambda R^(1/w^*) = [{}], spread {s:.3}, quotient >= lambda: {variational}", shown.join(", ")),
    )
}

fn c9_regularity_holder() -> Result<Verdict> {
    let m = common::cauchy_z();
    let geom = m.adapted_geometry(None)?;
    let mut engine = KernelEngine::new(&m, TruncationPolicy::top_k(TOP_K))?;
    let ys: Vec<GroupElement> = [1, -1, 4, -4].iter().map(|&y| e(&[y])).collect();
    let mut cs = Vec::new();
    for n in [16u64, 32, 64, 128] {
        let mut c = 0.0f64;
        for m_shift in [1u64, 4, 16] {
            c = c.max(regularity_ratio(&mut engine, &geom, n, m_shift, &ys)?);
        }
        cs.push(c);
    }
    let s = spread(&cs);
    let fit = holder_fit(&mut engine, &geom, 128, &holder_grid())?;
    let shown: Vec<String> = cs.iter().map(|c| format!("{c:.3}")).collect();
    verdict(
        s <= 2.0 && fit.beta > 0.0 && fit.r2 >= 0.8,
        format!("C(n) = [{}], spread {s:.3}; beta {:.3}, C {:.3}, r2 {:.4}", shown.join(", "), fit.beta, fit.c, fit.r2),
    )
}

/// Pure time shifts `m2 - m1 = 1, 2, ..., 64` and pure space shifts `y = 1, 2, ..., 64` at `n0 = 128`.
fn holder_grid() -> Vec<(u64, u64, GroupElement)> {
    let mut grid: Vec<(u64, u64, GroupElement)> = (0..=6).map(|k| (128, 128 + (1u64 << k), e(&[0]))).collect();
    grid.extend((0..=6).map(|k| (128, 128, e(&[1i128 << k]))));
    grid
}

fn c10_exit() -> Result<Verdict> {
    let m = common::cauchy_z();
    let geom = m.adapted_geometry(None)?;
    let mut normalized = Vec::new();
    let mut censored = 0.0f64;
    for k in 4..=8 {
        let r = (1u64 << k) as f64;
        let st = exit_time_stats(&m, &geom, r, &walk_config(5, 1000, 0, m.group()))?;
        censored = censored.max(st.censored_fraction);
        normalized.push(st.mean_lower / r.powf(1.0 / geom.w_star));
    }
    let s = spread(&normalized);
    let r = 16.0;
    let ss: Vec<f64> = [2.0, 4.0, 8.0, 16.0].iter().map(|k| k * r).collect();
    let ov = exit_overshoot_probs(&m, &geom, r, &ss, &walk_config(6, 100_000, 0, m.group()))?;
    let pts: Vec<(f64, f64)> = ov.iter().rev().map(|o| (r / o.s, o.probability)).collect();
    let slope = fit_loglog(&pts, None)?.slope;
    let theory = 1.0 / geom.w_star;
    let shown: Vec<String> = normalized.iter().map(|v| format!("{v:.3}")).collect();
    verdict(
        s <= 4.0 && (slope - theory).abs() <= 0.3,
        format!(
            "E[tau]/r^(1/w_*) = [{}], spread {s:.3}, censored <= {censored}; overshoot slope {slope:.3}, theory {theory}",
            shown.join(", ")
        ),
    )
}

/// `C(2n, n + k) / 4^n` as an exactly rounded double, from an integer numerator.
fn lazy_binomial(n: u64, k: i64) -> f64 {
    let top = 2 * n;
    let j = (n as i64 + k) as u64;
    let mut c: u128 = 1;
    for i in 0..j.min(top - j) {
        // c * (top - i) / (i + 1) is an integer; cancel first so the product stays in range
        let g = gcd(c, (i + 1) as u128);
        c = (c / g) * ((top - i) as u128 / ((i + 1) as u128 / g));
    }
    c as f64 / 4f64.powi(n as i32)
}

fn gcd(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

fn c11_cross_validation() -> Result<Verdict> {
    let mut exact_ok = true;
    let mut worst_rel = 0.0f64;
    for m in [common::lazy_z(), common::lazy_dihedral()] {
        let group = m.group();
        let atoms: Vec<(GroupElement, f64)> = m.mu0.clone();
        let mut engine = KernelEngine::new(&m, TruncationPolicy::exact())?;
        for n in 1..=64u64 {
            let k = engine.power(n)?;
            let brute = common::brute_force_power(group, &atoms, n);
            if k.support_size() != brute.len() || k.dropped_mass() != 0.0 {
                exact_ok = false;
            }
            for (g, v) in &brute {
                let got = k.get(g);
                if n <= 26 {
                    exact_ok &= got == *v;
                } else {
                    worst_rel = worst_rel.max((got - v).abs() / v);
                }
                if group == (GroupSpec::ZK { k: 1 }) {
                    let reference = lazy_binomial(n, g.coords()[0] as i64);
                    worst_rel = worst_rel.max((got - reference).abs() / reference);
                }
            }
        }
    }
    let m = common::lazy_z();
    let n = 8;
    let exact = lazy_binomial(2 * n, 0);
    let covered = (0..100u64)
        .map(|seed| collision_return_estimate(&m, n, &walk_config(seed, 2000, n, m.group())))
        .collect::<Result<Vec<_>>>()?
        .iter()
        .filter(|c| (c.estimate - exact).abs() <= 4.0 * c.stderr)
        .count();
    verdict(
        exact_ok && worst_rel <= 1e-14 && covered >= 95,
        format!("bit-exact for n <= 26: {exact_ok}, max relative error n <= 64: {worst_rel:.2e}, collision coverage {covered}/100"),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Result<Verdict>); 11] = [
        ("Z stable-like return exponent", c1_z_return),
        ("Heisenberg collision exponent", c2_heisenberg),
        ("infinite dihedral sanity", c3_dihedral),
        ("Delta and Z x| Z^2 exponents", c4_delta_semidirect),
        ("norm oracle equivalence", c5_oracle),
        ("volume audit", c6_volume),
        ("near-diagonal two-sidedness", c7_near_diagonal),
        ("spectral scaling", c8_spectral),
        ("regularity and Holder fit", c9_regularity_holder),
        ("exit statistics", c10_exit),
        ("engine cross-validation", c11_cross_validation),
    ];
    let filter: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failures = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let id = i + 1;
        if !filter.is_empty() && !filter.contains(&id) {
            continue;
        }
        let start = Instant::now();
        let (pass, detail) = match run() {
            Ok(v) => (v.pass, v.detail),
            Err(err) => (false, format!("error: {err}")),
        };
        if !pass {
            failures += 1;
        }
        println!(
            "{} criterion {id:>2} {name}: {detail} ({:.1}s)",
            if pass { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64()
        );
    }
    if failures > 0 {
        println!("{failures} criterion(s) failed");
        std::process::exit(1);
    }
}
