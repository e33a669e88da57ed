//! Normal nilpotent subgroups of finite index for the built-in groups.

use serde::Serialize;

use super::{GroupElement, GroupSpec};
use crate::error::{Error, Result};

/// How the volume of `N` is assembled from the weight classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub enum NilpotentStructure {
    /// `N` is free abelian with the listed generators as a basis.
    Abelian,
    /// `N` is the discrete Heisenberg group on `s1, s2` with centre generated by `s3`.
    Heisenberg,
}

/// `g = h * rep` with `h` in `N`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CosetDecomposition {
    pub h: GroupElement,
    pub rep_index: usize,
    pub rep: GroupElement,
}

/// The nilpotent subgroup `N`, its generators and the coset representatives `u_0 = e, u_1, ...`.
#[derive(Debug, Clone)]
pub struct NilpotentApprox {
    group: GroupSpec,
    n_generators: Vec<(String, GroupElement)>,
    coset_reps: Vec<GroupElement>,
    structure: NilpotentStructure,
}

impl NilpotentApprox {
    /// The documented approximation for each built-in group.
    pub fn builtin(group: GroupSpec) -> Result<Self> {
        group.validate()?;
        let el = GroupElement::from_coords;
        let (n_generators, coset_reps, structure) = match group {
            GroupSpec::ZK { .. } | GroupSpec::Heisenberg3 => {
                let gens = group
                    .generators()
                    .into_iter()
                    .map(|g| (g.name, g.element))
                    .collect();
                let structure = if group == GroupSpec::Heisenberg3 {
                    NilpotentStructure::Heisenberg
                } else {
                    NilpotentStructure::Abelian
                };
                (gens, vec![group.identity()], structure)
            }
            GroupSpec::DihedralInf => (
                vec![("uv".to_string(), el(&[1, 0]))],
                vec![group.identity(), el(&[0, 1])],
                NilpotentStructure::Abelian,
            ),
            GroupSpec::DeltaGroup => (
                vec![
                    ("theta1".to_string(), el(&[1, 0, 0, 0])),
                    ("theta2".to_string(), el(&[0, 1, 0, 0])),
                    ("theta3".to_string(), el(&[0, 0, 1, 0])),
                ],
                vec![group.identity(), el(&[0, 0, 0, 1])],
                NilpotentStructure::Abelian,
            ),
            GroupSpec::SemidirectZRotZ2 => (
                vec![
                    ("4s".to_string(), el(&[4, 0, 0])),
                    ("v1".to_string(), el(&[0, 1, 0])),
                    ("v2".to_string(), el(&[0, 0, 1])),
                ],
                (0..4).map(|r| el(&[r, 0, 0])).collect(),
                NilpotentStructure::Abelian,
            ),
        };
        Ok(NilpotentApprox {
            group,
            n_generators,
            coset_reps,
            structure,
        })
    }

    pub fn group(&self) -> GroupSpec {
        self.group
    }

    pub fn structure(&self) -> NilpotentStructure {
        self.structure
    }

    /// Named generators of `N`.
    pub fn n_generators(&self) -> &[(String, GroupElement)] {
        &self.n_generators
    }

    pub fn coset_reps(&self) -> &[GroupElement] {
        &self.coset_reps
    }

    /// The index `[G : N]`.
    pub fn index(&self) -> usize {
        self.coset_reps.len()
    }

    pub fn contains_n(&self, g: &GroupElement) -> bool {
        let c = g.coords();
        match self.group {
            GroupSpec::ZK { .. } | GroupSpec::Heisenberg3 => true,
            GroupSpec::DihedralInf => c[1] == 0,
            GroupSpec::DeltaGroup => c[3] == 0,
            GroupSpec::SemidirectZRotZ2 => c[0].rem_euclid(4) == 0,
        }
    }

    /// Writes `g = h * u` with `h` in `N` and `u` a stored representative.
    pub fn coset_decompose(&self, g: &GroupElement) -> Result<CosetDecomposition> {
        self.group.check(g)?;
        let c = g.coords();
        let rep_index = match self.group {
            GroupSpec::ZK { .. } | GroupSpec::Heisenberg3 => 0,
            GroupSpec::DihedralInf => c[1] as usize,
            GroupSpec::DeltaGroup => c[3] as usize,
            GroupSpec::SemidirectZRotZ2 => c[0].rem_euclid(4) as usize,
        };
        let rep = self.coset_reps[rep_index];
        let h = self.group.mul(g, &self.group.inv(&rep)?)?;
        debug_assert!(self.contains_n(&h));
        Ok(CosetDecomposition { h, rep_index, rep })
    }

    /// Integer coordinates of `h` in `N` with respect to [`Self::n_generators`].
    ///
    /// For the Heisenberg structure these are the normal-form coordinates, which differ
    /// from exponents of `s1^a s2^b s3^c` in the last entry.
    pub fn n_coordinates(&self, h: &GroupElement) -> Result<Vec<i128>> {
        if !self.contains_n(h) {
            return Err(Error::NotAMember);
        }
        let c = h.coords();
        Ok(match self.group {
            GroupSpec::ZK { .. } | GroupSpec::Heisenberg3 => c.to_vec(),
            GroupSpec::DihedralInf => vec![c[0]],
            GroupSpec::DeltaGroup => c[..3].to_vec(),
            GroupSpec::SemidirectZRotZ2 => vec![c[0] / 4, c[1], c[2]],
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e(c: &[i128]) -> GroupElement {
        GroupElement::from_coords(c)
    }

    #[test]
    fn dihedral_cosets() {
        let a = NilpotentApprox::builtin(GroupSpec::DihedralInf).unwrap();
        let d = a.coset_decompose(&e(&[3, 1])).unwrap();
        assert_eq!(d.h, e(&[3, 0]));
        assert_eq!(d.rep, e(&[0, 1]));
        assert_eq!(a.index(), 2);
    }

    #[test]
    fn delta_cosets() {
        let a = NilpotentApprox::builtin(GroupSpec::DeltaGroup).unwrap();
        let g = e(&[2, -5, 7, 1]);
        let d = a.coset_decompose(&g).unwrap();
        assert_eq!(d.h, e(&[2, -5, 7, 0]));
        assert_eq!(d.rep, e(&[0, 0, 0, 1]));
        assert_eq!(GroupSpec::DeltaGroup.mul(&d.h, &d.rep).unwrap(), g);
    }

    #[test]
    fn members_of_n_decompose_trivially() {
        for group in [
            GroupSpec::ZK { k: 2 },
            GroupSpec::Heisenberg3,
            GroupSpec::DihedralInf,
            GroupSpec::DeltaGroup,
            GroupSpec::SemidirectZRotZ2,
        ] {
            let a = NilpotentApprox::builtin(group).unwrap();
            for (_, x) in a.n_generators() {
                let d = a.coset_decompose(x).unwrap();
                assert_eq!(d.h, *x);
                assert_eq!(d.rep_index, 0);
            }
        }
    }

    #[test]
    fn semidirect_reps_are_distinct_cosets() {
        let g = GroupSpec::SemidirectZRotZ2;
        let a = NilpotentApprox::builtin(g).unwrap();
        let reps = a.coset_reps();
        for (i, x) in reps.iter().enumerate() {
            for y in &reps[i + 1..] {
                let q = g.mul(x, &g.inv(y).unwrap()).unwrap();
                assert!(!a.contains_n(&q));
            }
        }
        for k in -9..9 {
            let x = e(&[k, 3, -2]);
            let d = a.coset_decompose(&x).unwrap();
            assert!(a.contains_n(&d.h));
            assert_eq!(g.mul(&d.h, &d.rep).unwrap(), x);
        }
    }
}
