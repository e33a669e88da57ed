//! The volume function `F(R) = prod_j F_j(R)^{r_j}`.

use serde::Serialize;

use super::weight::WeightFunction;
use crate::group::NilpotentStructure;
use crate::numeric::invert_increasing;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct VolumeFactor {
    pub class_function: WeightFunction,
    pub rank: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct VolumeFunction {
    pub factors: Vec<VolumeFactor>,
}

impl VolumeFunction {
    /// Layers for the built-in structures.
    ///
    /// Abelian `N`: one layer per axis. Heisenberg: the two horizontal axes and a central
    /// layer `max(F_3, F_1 F_2)`. Equal class functions are merged and their ranks added.
    pub fn from_axes(structure: NilpotentStructure, axes: &[WeightFunction]) -> Self {
        let layers: Vec<WeightFunction> = match structure {
            NilpotentStructure::Abelian => axes.to_vec(),
            NilpotentStructure::Heisenberg => vec![
                axes[0].clone(),
                axes[1].clone(),
                WeightFunction::max_of(vec![
                    axes[2].clone(),
                    WeightFunction::Product {
                        of: vec![axes[0].clone(), axes[1].clone()],
                    },
                ]),
            ],
        };
        let mut factors: Vec<VolumeFactor> = Vec::new();
        for f in layers {
            match factors.iter_mut().find(|x| x.class_function == f) {
                Some(x) => x.rank += 1,
                None => factors.push(VolumeFactor {
                    class_function: f,
                    rank: 1,
                }),
            }
        }
        factors.sort_by(|a, b| a.class_function.index().compare(&b.class_function.index()));
        VolumeFunction { factors }
    }

    pub fn eval(&self, r: f64) -> f64 {
        self.factors
            .iter()
            .map(|f| f.class_function.eval(r).powi(f.rank as i32))
            .product()
    }

    pub fn inverse(&self, v: f64) -> f64 {
        invert_increasing(|r| self.eval(r), v)
    }

    /// `(d, log power)` with `d = sum_j r_j index_j`.
    pub fn exponent(&self) -> (f64, f64) {
        self.factors.iter().fold((0.0, 0.0), |(d, l), f| {
            let i = f.class_function.index();
            (d + f.rank as f64 * i.power, l + f.rank as f64 * i.log_power)
        })
    }

    /// Number of layers `j_*`.
    pub fn class_count(&self) -> usize {
        self.factors.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn heisenberg_branches() {
        let p = |w| WeightFunction::Power { w };
        let low = VolumeFunction::from_axes(NilpotentStructure::Heisenberg, &[p(1.0), p(1.0), p(1.0)]);
        assert_eq!(low.exponent().0, 4.0);
        let high = VolumeFunction::from_axes(NilpotentStructure::Heisenberg, &[p(1.0), p(1.0), p(3.0)]);
        assert_eq!(high.exponent().0, 5.0);
        assert_eq!(high.class_count(), 2);
        assert_eq!(high.factors[0].rank, 2);
    }

    #[test]
    fn merged_abelian_ranks_and_monotone_eval() {
        let f = WeightFunction::Power { w: 0.5 };
        let v = VolumeFunction::from_axes(NilpotentStructure::Abelian, &[f.clone(), f.clone(), f]);
        assert_eq!(v.factors.len(), 1);
        assert_eq!(v.factors[0].rank, 3);
        assert_eq!(v.exponent().0, 1.5);
        let mut prev = 0.0;
        for i in 0..40 {
            let x = v.eval(i as f64 * 0.7);
            assert!(x >= prev);
            prev = x;
        }
        let r = v.inverse(v.eval(12.0));
        assert!((r - 12.0).abs() < 1e-9);
    }
}
