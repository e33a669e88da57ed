//! Weight systems on `G` and on `N`, and the adapted geometry assembled from a measure.

use serde::Serialize;

use super::norm::{ClosedForm, NormKind};
use super::volume::VolumeFunction;
use super::weight::{phi0_inverse, phi_to_phi_cap, JumpProfile, RegIndex, WeightFunction};
use crate::error::{Error, Result};
use crate::group::{
    CoordinateMap, GroupElement, GroupSpec, NilpotentApprox, NilpotentStructure, Subgroup,
};

/// One generator of a weight system together with its budget function.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct SigmaEntry {
    pub name: String,
    pub element: GroupElement,
    pub weight: WeightFunction,
}

/// A generating tuple `Sigma` with one weight function per generator.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct WeightSystem {
    pub sigma: Vec<SigmaEntry>,
}

impl WeightSystem {
    /// Adds `g` with weight `f`, merging with an existing `g` or `g^{-1}` by taking the maximum.
    fn insert(&mut self, group: GroupSpec, name: String, g: GroupElement, f: WeightFunction) -> Result<()> {
        if g.is_zero() {
            return Ok(());
        }
        let ginv = group.inv(&g)?;
        if let Some(entry) = self
            .sigma
            .iter_mut()
            .find(|e| e.element == g || e.element == ginv)
        {
            entry.weight = WeightFunction::max_of(vec![entry.weight.clone(), f]);
            return Ok(());
        }
        self.sigma.push(SigmaEntry {
            name,
            element: g,
            weight: f,
        });
        Ok(())
    }

    pub fn elements(&self) -> Vec<GroupElement> {
        self.sigma.iter().map(|e| e.element).collect()
    }

    /// Distinct index classes in increasing order; equal indices form one class.
    pub fn classes(&self) -> Vec<RegIndex> {
        let mut out: Vec<RegIndex> = Vec::new();
        for e in &self.sigma {
            let idx = e.weight.index();
            if !out.iter().any(|c| c.same_class(&idx)) {
                out.push(idx);
            }
        }
        out.sort_by(|a, b| a.compare(b));
        out
    }

    /// Checks that every weight is valid and that the weights are pairwise comparable.
    pub fn validate(&self) -> Result<()> {
        if self.sigma.is_empty() {
            return Err(Error::Geometry("empty weight system".into()));
        }
        for e in &self.sigma {
            e.weight.validate()?;
        }
        // RegIndex comparison is a total preorder, so comparability reduces to finiteness.
        for e in &self.sigma {
            let i = e.weight.index();
            if !(i.power.is_finite() && i.log_power.is_finite() && i.loglog_power.is_finite()) {
                return Err(Error::Geometry(format!("weight of {} has no finite index", e.name)));
            }
        }
        Ok(())
    }

    fn min_index(&self) -> f64 {
        self.sigma
            .iter()
            .map(|e| e.weight.index().power)
            .fold(f64::INFINITY, f64::min)
    }

    fn max_index(&self) -> f64 {
        self.sigma
            .iter()
            .map(|e| e.weight.index().power)
            .fold(0.0, f64::max)
    }
}

/// One jump component as seen by the geometry builder.
#[derive(Debug, Clone)]
pub struct ComponentGeometry<'a> {
    pub subgroup: &'a Subgroup,
    pub profile: JumpProfile,
}

/// The adapted geometry: weight systems on `G` and `N`, exponents and the volume function.
#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct AdaptedGeometry {
    #[serde(skip)]
    approx: NilpotentApprox,
    pub group: GroupSpec,
    pub system_g: WeightSystem,
    pub system_n: WeightSystem,
    /// Per-axis weight functions of `N`, in the order of the closed-form axes.
    pub axis_weights: Vec<WeightFunction>,
    pub w_star: f64,
    /// Exponent of the `F_{G,1}` scale used by test functions, twice the largest index.
    pub w_upper: f64,
    pub norm: ClosedForm,
    pub volume: VolumeFunction,
}

/// `H_i ∩ N`-generating set of a component.
fn intersect_with_n(
    group: GroupSpec,
    approx: &NilpotentApprox,
    sub: &Subgroup,
) -> Result<Vec<GroupElement>> {
    let index = approx.index() as i128;
    let mut out = Vec::new();
    match sub.coordinate_map() {
        CoordinateMap::Lattice => {
            let basis = sub.spec().generators.clone();
            let mut periods = Vec::with_capacity(basis.len());
            for b in &basis {
                let p = (1..=index)
                    .find(|&p| group.pow(b, p).map(|x| approx.contains_n(&x)).unwrap_or(false))
                    .ok_or_else(|| Error::Geometry("no power of a generator lies in N".into()))?;
                out.push(group.pow(b, p)?);
                periods.push(p);
            }
            // Residual box elements b^x with 0 <= x_j < p_j that fall in N.
            let total: i128 = periods.iter().product();
            for code in 1..total {
                let mut c = code;
                let mut x = Vec::with_capacity(periods.len());
                for &p in &periods {
                    x.push(c % p);
                    c /= p;
                }
                let h = sub.element_at(&x)?;
                if approx.contains_n(&h) && !out.contains(&h) {
                    out.push(h);
                }
            }
        }
        CoordinateMap::DihedralLine => {
            let (a, z) = sub
                .line_parts()
                .ok_or_else(|| Error::Geometry("dihedral line without parts".into()))?;
            let p = (1..=index)
                .find(|&p| group.pow(&z, p).map(|x| approx.contains_n(&x)).unwrap_or(false))
                .ok_or_else(|| Error::Geometry("no power of the translation lies in N".into()))?;
            out.push(group.pow(&z, p)?);
            for k in 0..p {
                let r = group.mul(&group.pow(&z, k)?, &a)?;
                if approx.contains_n(&r) {
                    out.push(r);
                }
            }
        }
        CoordinateMap::Finite => {
            for h in sub.finite_elements().unwrap_or(&[]) {
                if !h.is_zero() && approx.contains_n(h) {
                    out.push(*h);
                }
            }
        }
    }
    if let Some(bad) = out.iter().find(|h| !approx.contains_n(h)) {
        return Err(Error::Geometry(format!("S_i element {bad:?} is not in N")));
    }
    Ok(out)
}

fn element_name(approx: &NilpotentApprox, g: &GroupElement) -> String {
    let standard = approx.group().generators().into_iter().map(|s| (s.name, s.element));
    standard
        .chain(approx.n_generators().iter().cloned())
        .find(|(_, x)| x == g)
        .map(|(name, _)| name)
        .unwrap_or_else(|| format!("{g:?}"))
}

impl AdaptedGeometry {
    /// Builds the geometry adapted to a measure with the given components.
    ///
    /// `w_star` overrides the default `w_* = min index / 2`; it must stay strictly below
    /// the smallest index of the system on `G`.
    pub fn build(
        approx: &NilpotentApprox,
        components: &[ComponentGeometry<'_>],
        w_star: Option<f64>,
    ) -> Result<Self> {
        let group = approx.group();
        let mut system_g = WeightSystem { sigma: Vec::new() };
        for s in group.generators() {
            system_g.insert(group, s.name, s.element, phi0_inverse())?;
        }
        let mut system_n = WeightSystem { sigma: Vec::new() };
        for (name, h) in approx.n_generators() {
            system_n.insert(group, name.clone(), *h, phi0_inverse())?;
        }
        for c in components {
            if c.subgroup.group() != group {
                return Err(Error::GroupMismatch(format!(
                    "component subgroup of {} used with {}",
                    c.subgroup.group().name(),
                    group.name()
                )));
            }
            let f = WeightFunction::inverse_of(phi_to_phi_cap(&c.profile)?);
            for h in intersect_with_n(group, approx, c.subgroup)? {
                system_g.insert(group, element_name(approx, &h), h, f.clone())?;
                for u in approx.coset_reps() {
                    let conj = group.mul(&group.mul(u, &h)?, &group.inv(u)?)?;
                    system_n.insert(group, element_name(approx, &conj), conj, f.clone())?;
                }
            }
        }
        system_g.validate()?;
        system_n.validate()?;

        let axis_weights = axis_functions(approx, &system_n)?;
        Self::assemble(approx.clone(), system_g, system_n, axis_weights, w_star)
    }

    /// Geometry with explicit power weights `(1 + t)^{w_j} - 1` on the axes of `N`.
    pub fn from_axis_weights(approx: &NilpotentApprox, weights: &[f64], w_star: Option<f64>) -> Result<Self> {
        let group = approx.group();
        if weights.len() != approx.n_generators().len() {
            return Err(Error::Geometry(format!(
                "{} axis weights given, N has {} generators",
                weights.len(),
                approx.n_generators().len()
            )));
        }
        let fs: Vec<WeightFunction> = weights.iter().map(|&w| WeightFunction::Power { w }).collect();
        let mut system_n = WeightSystem { sigma: Vec::new() };
        let mut system_g = WeightSystem { sigma: Vec::new() };
        for ((name, h), f) in approx.n_generators().iter().zip(&fs) {
            system_n.insert(group, name.clone(), *h, f.clone())?;
            system_g.insert(group, name.clone(), *h, f.clone())?;
        }
        for s in group.generators() {
            let sinv = group.inv(&s.element)?;
            if !system_g.sigma.iter().any(|e| e.element == s.element || e.element == sinv) {
                system_g.insert(group, s.name, s.element, phi0_inverse())?;
            }
        }
        system_g.validate()?;
        system_n.validate()?;
        Self::assemble(approx.clone(), system_g, system_n, fs, w_star)
    }

    fn assemble(
        approx: NilpotentApprox,
        system_g: WeightSystem,
        system_n: WeightSystem,
        axis_weights: Vec<WeightFunction>,
        w_star: Option<f64>,
    ) -> Result<Self> {
        let group = approx.group();
        let min_index = system_g.min_index();
        let w_star = match w_star {
            None => 0.5 * min_index,
            Some(w) => {
                if !(w > 0.0 && w < min_index) {
                    return Err(Error::Geometry(format!(
                        "w_* = {w} must lie in (0, {min_index})"
                    )));
                }
                w
            }
        };
        let w_upper = 2.0 * system_g.max_index();
        let powers: Vec<f64> = axis_weights.iter().map(|f| f.index().power).collect();
        let (kind, closed_weights) = match (group, approx.structure()) {
            (GroupSpec::DihedralInf, _) => (NormKind::DihedralWord, powers.clone()),
            (_, NilpotentStructure::Heisenberg) => {
                let w3 = powers[2].max(powers[0] + powers[1]);
                (NormKind::Heisenberg, vec![powers[0], powers[1], w3])
            }
            _ => (
                NormKind::Axes {
                    slots: (0..powers.len()).collect(),
                    parity: group.parity_slot(),
                },
                powers.clone(),
            ),
        };
        let norm = ClosedForm::new(group, kind, closed_weights)?;
        let volume = VolumeFunction::from_axes(approx.structure(), &axis_weights);
        Ok(AdaptedGeometry {
            approx,
            group,
            system_g,
            system_n,
            axis_weights,
            w_star,
            w_upper,
            norm,
            volume,
        })
    }

    pub fn approx(&self) -> &NilpotentApprox {
        &self.approx
    }

    /// Dump used as a golden-file surface.
    pub fn to_json(&self) -> serde_json::Value {
        let mut v = serde_json::to_value(self).expect("geometry serializes");
        let (d, log_power) = self.volume.exponent();
        v["volumeExponent"] = serde_json::json!({ "power": d, "logPower": log_power });
        v
    }
}

/// Weight function of each `N`-axis: maximum over the `Sigma_N` elements lying on that axis.
fn axis_functions(approx: &NilpotentApprox, system_n: &WeightSystem) -> Result<Vec<WeightFunction>> {
    let rank = approx.n_generators().len();
    let mut per_axis: Vec<Vec<WeightFunction>> = vec![Vec::new(); rank];
    for e in &system_n.sigma {
        let x = approx.n_coordinates(&e.element)?;
        let nonzero: Vec<usize> = (0..x.len()).filter(|&j| x[j] != 0).collect();
        if let [j] = nonzero[..] {
            // In the Heisenberg structure only the first two coordinates and the pure
            // centre are axes; all three coordinates are handled uniformly here.
            per_axis[j].push(e.weight.clone());
        }
    }
    per_axis
        .into_iter()
        .enumerate()
        .map(|(j, fs)| {
            if fs.is_empty() {
                Err(Error::Geometry(format!("no Sigma_N element on axis {j}")))
            } else {
                Ok(WeightFunction::max_of(fs))
            }
        })
        .collect()
}
