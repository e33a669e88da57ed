mod common;

use longjump::analysis::fit_loglog;
use longjump::kernel::{KernelEngine, TruncationPolicy};
use longjump::walk::{collision_return_estimate, simulate, WalkConfig};

#[test]
fn collision_estimates_cover_exact_returns() {
    for m in [common::lazy_z(), common::lazy_dihedral()] {
        let mut engine = KernelEngine::new(&m, TruncationPolicy::exact()).unwrap();
        for n in [4u64, 16] {
            let exact = engine.power(2 * n).unwrap().get(&m.group().identity());
            let mut covered = 0;
            for seed in 0..100 {
                let cfg = WalkConfig { seed, walkers: 1500, n, start: m.group().identity() };
                let c = collision_return_estimate(&m, n, &cfg).unwrap();
                if (c.estimate - exact).abs() <= 4.0 * c.stderr {
                    covered += 1;
                }
            }
            assert!(covered >= 95, "{:?} n={n}: {covered}/100", m.group());
        }
    }
}

#[test]
fn median_running_maximum_grows_like_the_adapted_scale() {
    let m = common::cauchy_z();
    let geom = m.adapted_geometry(None).unwrap();
    let mut pts = Vec::new();
    for k in 6..=12 {
        let n = 1u64 << k;
        let cfg = WalkConfig { seed: 13, walkers: 1000, n, start: m.group().identity() };
        let stats = simulate(&m, &geom, &cfg).unwrap();
        let median = stats.max_displacement_quantiles.iter().find(|q| q.0 == 0.5).unwrap().1;
        pts.push((n as f64, median));
    }
    let slope = fit_loglog(&pts, None).unwrap().slope;
    assert!((slope - geom.w_star).abs() <= 0.15, "slope {slope}, w_* {}", geom.w_star);
}

#[test]
fn control_levels_are_ordered() {
    let m = common::heisenberg_axes([1.0; 3]);
    let geom = m.adapted_geometry(None).unwrap();
    let cfg = WalkConfig { seed: 4, walkers: 2000, n: 64, start: m.group().identity() };
    let stats = simulate(&m, &geom, &cfg).unwrap();
    assert_eq!(stats.endpoints.iter().map(|e| e.1).sum::<usize>(), 2000);
    let gammas: Vec<f64> = stats.control.iter().map(|c| c.gamma).collect();
    assert!(gammas.windows(2).all(|w| w[0] <= w[1]), "{gammas:?}");
}
