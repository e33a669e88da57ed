mod common;

use common::e;
use longjump::group::{GroupElement, GroupSpec};
use longjump::kernel::{convolve, KernelEngine, TruncationMode, TruncationPolicy};
use longjump::measures::Measure;

fn atoms_of(m: &Measure) -> Vec<(GroupElement, f64)> {
    let group = m.group();
    let mut support = std::collections::BTreeSet::new();
    support.extend(m.mu0.iter().map(|a| a.0));
    for c in &m.components {
        for r in 0..=c.support_radius().expect("finite component") {
            support.extend(c.shell_elements(r).unwrap());
        }
    }
    let _ = group;
    support.into_iter().map(|g| (g, m.pmf(&g))).collect()
}

#[test]
fn exact_kernels_match_sequential_convolution() {
    let heisenberg_lazy = common::finite_measure(
        GroupSpec::Heisenberg3,
        &[
            (&[0, 0, 0], 0.4),
            (&[1, 0, 0], 0.15),
            (&[-1, 0, 0], 0.15),
            (&[0, 1, 0], 0.15),
            (&[0, -1, 0], 0.15),
        ],
    );
    for (m, top) in [
        (common::lazy_z(), 64),
        (common::lazy_dihedral(), 64),
        (common::dihedral_finite([0.7, 1.3]), 48),
        (heisenberg_lazy, 12),
    ] {
        let atoms = atoms_of(&m);
        let mut engine = KernelEngine::new(&m, TruncationPolicy::exact()).unwrap();
        for n in (1..=top).step_by(5) {
            let k = engine.power(n).unwrap();
            let brute = common::brute_force_power(m.group(), &atoms, n);
            assert_eq!(k.support_size(), brute.len(), "{:?} n={n}", m.group());
            assert_eq!(k.dropped_mass(), 0.0);
            for (g, v) in &brute {
                let got = k.get(g);
                assert!((got - v).abs() <= 1e-13 * v, "{:?} n={n} {g:?}: {got} vs {v}", m.group());
                let mirrored = k.get(&m.group().inv(g).unwrap());
                assert!((got - mirrored).abs() <= 1e-14 * got);
            }
        }
    }
}

#[test]
fn truncated_kernels_are_lower_bounds_within_the_ledger() {
    let m = common::dihedral_finite([0.7, 1.3]);
    let atoms = atoms_of(&m);
    for eps in [1e-9, 1e-6, 1e-4] {
        let policy = TruncationPolicy { eps_per_step: eps, max_support: 1 << 20, mode: TruncationMode::Threshold };
        let mut engine = KernelEngine::new(&m, policy).unwrap();
        for n in [7u64, 20, 40] {
            let k = engine.power(n).unwrap();
            let dense = common::brute_force_power(m.group(), &atoms, n);
            let mut gap = 0.0;
            for (g, v) in &dense {
                let got = k.get(g);
                assert!(got <= v * (1.0 + 1e-13), "eps={eps} n={n} {g:?}");
                gap += v - got;
            }
            assert!(k.iter().all(|(g, _)| dense.contains_key(&g)));
            assert!(gap <= k.dropped_mass() + 1e-12, "eps={eps} n={n}: {gap} > {}", k.dropped_mass());
        }
    }
}

#[test]
fn cauchy_return_probability_matches_stable_limit() {
    // the tail 2 / (Z x) is that of a Cauchy law of scale pi / Z, whose n-fold
    // convolution has density Z / (pi^2 n) at the origin
    let m = common::cauchy_z();
    let z = m.components[0].normalization();
    let limit = z / std::f64::consts::PI.powi(2);
    let mut engine = KernelEngine::new(&m, TruncationPolicy::top_k((1 << 18) + 1)).unwrap();
    let rows = engine.return_series(&[256, 1024, 4096]).unwrap();
    let errors: Vec<f64> = rows.iter().map(|r| (r.n as f64 * r.lower / limit - 1.0).abs()).collect();
    assert!(errors[2] < 5e-3, "{errors:?}");
    assert!(errors[0] > errors[2]);
    for r in &rows {
        assert!(r.lower <= r.upper && r.upper - r.lower <= r.dropped_mass * (1.0 + 1e-12));
    }
}

#[test]
fn doubling_matches_direct_squares_on_heisenberg() {
    let m = common::heisenberg_axes([1.0; 3]);
    let policy = TruncationPolicy::top_k(2001);
    let mut engine = KernelEngine::new(&m, policy).unwrap();
    let k4 = engine.power(4).unwrap();
    let k8 = engine.power(8).unwrap();
    let squared = convolve(&k4, &k4, &policy).unwrap();
    let slack = k8.dropped_mass() + squared.dropped_mass();
    for (g, v) in k8.iter() {
        assert!((v - squared.get(&g)).abs() <= slack, "{g:?}");
    }
    assert!((k8.get(&e(&[0, 0, 0])) - squared.get(&e(&[0, 0, 0]))).abs() <= slack);
}
