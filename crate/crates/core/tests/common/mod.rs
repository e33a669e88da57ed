#![allow(dead_code)]

use longjump::group::{GroupElement, GroupSpec, SubgroupSpec};
use longjump::measures::{Atom, Measure, MeasureSpec};

pub fn e(c: &[i128]) -> GroupElement {
    GroupElement::from_coords(c)
}

pub fn lattice(gens: &[&[i128]]) -> SubgroupSpec {
    SubgroupSpec::lattice(gens.iter().map(|g| e(g)).collect())
}

pub fn build(group: GroupSpec, spec: MeasureSpec) -> Measure {
    Measure::build(group, &spec).expect("measure builds")
}

/// Single power-law component of index `alpha` on all of Z.
pub fn z_power(alpha: f64) -> Measure {
    build(GroupSpec::ZK { k: 1 }, MeasureSpec::single(lattice(&[&[1]]), alpha))
}

pub fn cauchy_z() -> Measure {
    z_power(1.0)
}

pub fn z2_axes(alphas: [f64; 2]) -> Measure {
    build(
        GroupSpec::ZK { k: 2 },
        MeasureSpec::uniform_mixture(vec![lattice(&[&[1, 0]]), lattice(&[&[0, 1]])], &alphas),
    )
}

pub fn z3_axes() -> Measure {
    build(
        GroupSpec::ZK { k: 3 },
        MeasureSpec::uniform_mixture(
            vec![lattice(&[&[1, 0, 0]]), lattice(&[&[0, 1, 0]]), lattice(&[&[0, 0, 1]])],
            &[1.0; 3],
        ),
    )
}

pub fn heisenberg_axes(alphas: [f64; 3]) -> Measure {
    build(
        GroupSpec::Heisenberg3,
        MeasureSpec::uniform_mixture(
            vec![lattice(&[&[1, 0, 0]]), lattice(&[&[0, 1, 0]]), lattice(&[&[0, 0, 1]])],
            &alphas,
        ),
    )
}

/// Components on the finite subgroups `<u>` and `<v>`.
pub fn dihedral_finite(alphas: [f64; 2]) -> Measure {
    build(
        GroupSpec::DihedralInf,
        MeasureSpec::uniform_mixture(
            vec![SubgroupSpec::finite(vec![e(&[0, 1])]), SubgroupSpec::finite(vec![e(&[-1, 1])])],
            &alphas,
        ),
    )
}

/// Dihedral lines `<s', t>`, `<s, t>`, `<s, t'>` with equal weights.
pub fn delta_lines(alphas: [f64; 3]) -> Measure {
    let (s, sp, t, tp) = (e(&[0, 0, 0, 1]), e(&[1, -1, 0, 1]), e(&[0, -1, 0, 1]), e(&[0, 0, -1, 1]));
    build(
        GroupSpec::DeltaGroup,
        MeasureSpec::uniform_mixture(
            vec![
                SubgroupSpec::dihedral_line(sp, t),
                SubgroupSpec::dihedral_line(s, t),
                SubgroupSpec::dihedral_line(s, tp),
            ],
            &alphas,
        ),
    )
}

/// Lattices `<(4,0,0), (0,1,0)>` and `<(4,0,0), (0,0,1)>` plus simple steps along the rotation axis.
pub fn semidirect(alphas: [f64; 2]) -> Measure {
    let mut spec = MeasureSpec::uniform_mixture(
        vec![lattice(&[&[4, 0, 0], &[0, 1, 0]]), lattice(&[&[4, 0, 0], &[0, 0, 1]])],
        &alphas,
    );
    for c in spec.components.iter_mut() {
        c.p = 1.0 / 3.0;
    }
    spec.p0 = 1.0 / 3.0;
    spec.mu0 = Some(vec![
        Atom { element: e(&[1, 0, 0]), mass: 0.5 },
        Atom { element: e(&[-1, 0, 0]), mass: 0.5 },
    ]);
    build(GroupSpec::SemidirectZRotZ2, spec)
}

/// `1/2 delta_0 + 1/4 delta_{+1} + 1/4 delta_{-1}` on Z.
pub fn lazy_z() -> Measure {
    finite_measure(GroupSpec::ZK { k: 1 }, &[(&[0], 0.5), (&[1], 0.25), (&[-1], 0.25)])
}

/// `1/2 delta_e + 1/4 delta_u + 1/4 delta_v` on the infinite dihedral group.
pub fn lazy_dihedral() -> Measure {
    finite_measure(GroupSpec::DihedralInf, &[(&[0, 0], 0.5), (&[0, 1], 0.25), (&[-1, 1], 0.25)])
}

pub fn finite_measure(group: GroupSpec, atoms: &[(&[i128], f64)]) -> Measure {
    let spec = MeasureSpec {
        components: vec![],
        p0: 1.0,
        mu0: Some(atoms.iter().map(|(c, m)| Atom { element: e(c), mass: *m }).collect()),
        shell_cap: None,
    };
    build(group, spec)
}

/// One representative measure per built-in group.
pub fn builtins() -> Vec<(&'static str, Measure)> {
    vec![
        ("Z", cauchy_z()),
        ("Z^2", z2_axes([1.0, 1.0])),
        ("Z^3", z3_axes()),
        ("Heisenberg", heisenberg_axes([1.0; 3])),
        ("D_inf", dihedral_finite([0.7, 1.3])),
        ("Delta", delta_lines([1.0; 3])),
        ("Z x| Z^2", semidirect([1.0, 1.0])),
    ]
}

/// `mu^(n)` by `n` sequential convolutions with the atoms of a finitely supported measure.
pub fn brute_force_power(
    group: GroupSpec,
    atoms: &[(GroupElement, f64)],
    n: u64,
) -> std::collections::BTreeMap<GroupElement, f64> {
    let mut cur = std::collections::BTreeMap::new();
    cur.insert(group.identity(), 1.0);
    for _ in 0..n {
        let mut next = std::collections::BTreeMap::new();
        for (x, p) in &cur {
            for (s, q) in atoms {
                *next.entry(group.mul(x, s).unwrap()).or_insert(0.0) += p * q;
            }
        }
        cur = next;
    }
    cur
}
