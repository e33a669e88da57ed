//! Jump measures `mu = p_0 mu_0 + sum_i p_i mu_i`.
//!
//! Each `mu_i` lives on a subgroup `H_i`. For infinite `H_i` the mass of `h` is
//! `Z_i^{-1} [(1 + |h|_i)^{d_i} phi_i(1 + |h|_i)]^{-1}` with `|h|_i` the word length of the
//! coordinate map; finite `H_i` carry a uniform law with an optional prescribed mass at `e`.
//! `mu_0` is a finite symmetric law, by default uniform on `S_0 ∪ S_0^{-1} ∪ {e}`.

mod radial;

use std::collections::VecDeque;

use rand::Rng;
use rustc_hash::FxHashSet;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{AdaptedGeometry, ComponentGeometry, JumpProfile, RegIndex};
use crate::group::{CoordinateMap, GroupElement, GroupSpec, NilpotentApprox, Subgroup, SubgroupSpec};
pub use radial::RADIUS_CEILING;
use radial::{RadialLaw, ShellShape};

/// Default number of shells tabulated exactly per component.
pub const DEFAULT_SHELL_CAP: u64 = 1 << 20;
const WEIGHT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct JumpComponentSpec {
    /// Mixture weight `p_i > 0`.
    pub p: f64,
    pub subgroup: SubgroupSpec,
    pub phi: JumpProfile,
    /// Mass of `e` for a finite subgroup; uniform when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub identity_mass: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct Atom {
    pub element: GroupElement,
    pub mass: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct MeasureSpec {
    pub components: Vec<JumpComponentSpec>,
    /// Weight of `mu_0`.
    #[serde(default)]
    pub p0: f64,
    /// Explicit `mu_0`; the default law is used when absent and `p0 > 0`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu0: Option<Vec<Atom>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shell_cap: Option<u64>,
}

impl MeasureSpec {
    /// Single component on `H` with profile `(1 + t)^alpha`.
    pub fn single(subgroup: SubgroupSpec, alpha: f64) -> Self {
        MeasureSpec {
            components: vec![JumpComponentSpec {
                p: 1.0,
                subgroup,
                phi: JumpProfile::Power { alpha },
                identity_mass: None,
            }],
            p0: 0.0,
            mu0: None,
            shell_cap: None,
        }
    }

    /// Equal-weight mixture of power-law components.
    pub fn uniform_mixture(subgroups: Vec<SubgroupSpec>, alphas: &[f64]) -> Self {
        let k = subgroups.len() as f64;
        MeasureSpec {
            components: subgroups
                .into_iter()
                .zip(alphas)
                .map(|(subgroup, &alpha)| JumpComponentSpec {
                    p: 1.0 / k,
                    subgroup,
                    phi: JumpProfile::Power { alpha },
                    identity_mass: None,
                })
                .collect(),
            p0: 0.0,
            mu0: None,
            shell_cap: None,
        }
    }
}

#[derive(Debug, Clone)]
enum Law {
    Radial(RadialLaw),
    Finite { elements: Vec<GroupElement>, masses: Vec<f64> },
}

#[derive(Debug, Clone)]
pub struct Component {
    pub p: f64,
    pub subgroup: Subgroup,
    pub profile: JumpProfile,
    law: Law,
}

impl Component {
    /// `mu_i(h)`.
    pub fn mass(&self, h: &GroupElement) -> f64 {
        match &self.law {
            Law::Radial(law) => match self.subgroup.word_length(h) {
                Ok(r) => law.point_mass(r),
                Err(_) => 0.0,
            },
            Law::Finite { elements, masses } => elements
                .binary_search(h)
                .map(|i| masses[i])
                .unwrap_or(0.0),
        }
    }

    /// Normalization constant `Z_i` (1 for finite components).
    pub fn normalization(&self) -> f64 {
        match &self.law {
            Law::Radial(law) => law.normalization(),
            Law::Finite { .. } => 1.0,
        }
    }

    /// `sum_{|h|_i >= r} mu_i(h)`.
    pub fn tail_mass(&self, r: u64) -> f64 {
        match &self.law {
            Law::Radial(law) => law.tail(r),
            Law::Finite { elements, masses } => elements
                .iter()
                .zip(masses)
                .filter(|(h, _)| self.subgroup.word_length(h).map_or(false, |l| l >= r as u128))
                .map(|(_, m)| m)
                .sum(),
        }
    }

    /// Mass of the shell `{|h|_i = r}`.
    pub fn shell_mass(&self, r: u64) -> f64 {
        match &self.law {
            Law::Radial(law) => law.shell_mass(r),
            Law::Finite { .. } => self.tail_mass(r) - self.tail_mass(r + 1),
        }
    }

    /// Elements of the shell `{|h|_i = r}`, sorted. Only sensible for small shells.
    pub fn shell_elements(&self, r: u64) -> Result<Vec<GroupElement>> {
        let mut out = Vec::new();
        match self.subgroup.coordinate_map() {
            CoordinateMap::Finite => {
                out.extend_from_slice(self.subgroup.finite_shell(r as usize).unwrap_or(&[]));
            }
            CoordinateMap::DihedralLine => {
                let r = r as i128;
                for m in if r == 0 { vec![0] } else { vec![-r, r] } {
                    out.push(self.subgroup.element_at(&[m])?);
                }
            }
            CoordinateMap::Lattice => {
                let m = self.subgroup.coordinate_rank();
                for x in l1_sphere_points(m, r as i128) {
                    out.push(self.subgroup.element_at(&x)?);
                }
            }
        }
        out.sort();
        Ok(out)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> GroupElement {
        match &self.law {
            Law::Radial(law) => {
                let r = law.sample_radius(rng);
                let x = match law.shape() {
                    ShellShape::Lattice(m) => sample_l1_sphere(m, r, rng),
                    ShellShape::Line => {
                        let m = r as i128;
                        vec![if m != 0 && rng.gen::<bool>() { -m } else { m }]
                    }
                };
                self.subgroup
                    .element_at(&x)
                    .expect("sampled coordinates lie in the subgroup")
            }
            Law::Finite { elements, masses } => elements[categorical(masses, rng)],
        }
    }

    /// Largest word length in the support (finite components), otherwise `None`.
    pub fn support_radius(&self) -> Option<u64> {
        self.subgroup.finite_radius()
    }

    /// Smallest `R` with `tail_mass(R + 1) <= eps`.
    pub fn radius_for_tail(&self, eps: f64) -> u64 {
        if let Some(r) = self.support_radius() {
            return r;
        }
        let (mut lo, mut hi) = (0u64, RADIUS_CEILING);
        while lo < hi {
            let mid = lo + (hi - lo) / 2;
            if self.tail_mass(mid + 1) <= eps {
                hi = mid;
            } else {
                lo = mid + 1;
            }
        }
        lo
    }

    /// `#{h in H_i : |h|_i <= radius}`, saturating at `limit + 1`.
    pub fn ball_size(&self, radius: u64, limit: u128) -> u128 {
        match self.subgroup.coordinate_map() {
            CoordinateMap::Finite => self.subgroup.finite_elements().map_or(0, |e| {
                e.iter()
                    .filter(|h| self.subgroup.word_length(h).map_or(false, |l| l <= radius as u128))
                    .count() as u128
            }),
            CoordinateMap::DihedralLine => 2 * radius as u128 + 1,
            CoordinateMap::Lattice => {
                let m = self.subgroup.coordinate_rank();
                if m == 1 {
                    return 2 * radius as u128 + 1;
                }
                let mut total = 0u128;
                for r in 0..=radius {
                    total += crate::group::l1_sphere_count(m, r as f64) as u128;
                    if total > limit {
                        return limit + 1;
                    }
                }
                total
            }
        }
    }

    pub fn is_finite(&self) -> bool {
        matches!(self.law, Law::Finite { .. })
    }

    pub fn shell_cap(&self) -> Option<u64> {
        match &self.law {
            Law::Radial(law) => Some(law.cap()),
            Law::Finite { .. } => None,
        }
    }
}

/// One class of the total order on `{Phi_i}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct PhiClass {
    pub index: RegIndex,
    /// Component positions (0-based) in this class.
    pub components: Vec<usize>,
}

/// A validated jump measure.
#[derive(Debug, Clone)]
pub struct Measure {
    group: GroupSpec,
    pub components: Vec<Component>,
    pub p0: f64,
    /// `mu_0` as sorted atoms with masses summing to one.
    pub mu0: Vec<(GroupElement, f64)>,
    certified_eps: f64,
}

fn categorical<R: Rng + ?Sized>(weights: &[f64], rng: &mut R) -> usize {
    let total: f64 = weights.iter().sum();
    let mut u = rng.gen::<f64>() * total;
    for (i, &w) in weights.iter().enumerate() {
        if u < w {
            return i;
        }
        u -= w;
    }
    weights.iter().rposition(|&w| w > 0.0).unwrap_or(0)
}

/// Uniform point of `{x in Z^m : |x|_1 = r}`.
pub(crate) fn sample_l1_sphere<R: Rng + ?Sized>(m: usize, r: u64, rng: &mut R) -> Vec<i128> {
    let mut x = vec![0i128; m];
    if r == 0 {
        return x;
    }
    // number of nonzero coordinates j has weight 2^j C(m, j) C(r - 1, j - 1)
    let weights: Vec<f64> = (1..=m)
        .map(|j| {
            if j as u64 > r {
                return 0.0;
            }
            let mut c = 1.0;
            for l in 0..(j - 1) {
                c *= (r as f64 - 1.0 - l as f64) / (l as f64 + 1.0);
            }
            2f64.powi(j as i32) * crate::group::binomial(m, j) * c
        })
        .collect();
    let j = categorical(&weights, rng) + 1;
    // j distinct coordinates
    let mut slots: Vec<usize> = (0..m).collect();
    for i in 0..j {
        let k = rng.gen_range(i..m);
        slots.swap(i, k);
    }
    // j - 1 distinct cut points in 1..r
    let mut cuts: Vec<u64> = Vec::with_capacity(j + 1);
    while cuts.len() < j - 1 {
        let c = rng.gen_range(1..r);
        if !cuts.contains(&c) {
            cuts.push(c);
        }
    }
    cuts.push(0);
    cuts.push(r);
    cuts.sort_unstable();
    for (i, &slot) in slots.iter().take(j).enumerate() {
        let part = (cuts[i + 1] - cuts[i]) as i128;
        x[slot] = if rng.gen::<bool>() { part } else { -part };
    }
    x
}

/// All points of `Z^m` with l1 norm `r`.
fn l1_sphere_points(m: usize, r: i128) -> Vec<Vec<i128>> {
    fn rec(m: usize, r: i128, prefix: &mut Vec<i128>, out: &mut Vec<Vec<i128>>) {
        if prefix.len() + 1 == m {
            for v in if r == 0 { vec![0] } else { vec![-r, r] } {
                prefix.push(v);
                out.push(prefix.clone());
                prefix.pop();
            }
            return;
        }
        for a in -r..=r {
            prefix.push(a);
            rec(m, r - a.abs(), prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    if m == 0 {
        return out;
    }
    rec(m, r, &mut Vec::new(), &mut out);
    out
}

impl Measure {
    /// Validates `spec` and tabulates every component.
    pub fn build(group: GroupSpec, spec: &MeasureSpec) -> Result<Self> {
        group.validate()?;
        let cap = spec.shell_cap.unwrap_or(DEFAULT_SHELL_CAP);
        if !(spec.p0.is_finite() && spec.p0 >= 0.0) {
            return Err(Error::Weights(format!("p0 must be non-negative, got {}", spec.p0)));
        }
        let mut total = spec.p0;
        let mut components = Vec::with_capacity(spec.components.len());
        for (i, c) in spec.components.iter().enumerate() {
            if !(c.p.is_finite() && c.p > 0.0) {
                return Err(Error::Weights(format!("component {i} needs p > 0, got {}", c.p)));
            }
            total += c.p;
            c.phi.validate()?;
            let subgroup = Subgroup::new(group, c.subgroup.clone())?;
            let law = match subgroup.coordinate_map() {
                CoordinateMap::Finite => {
                    let elements = subgroup.finite_elements().unwrap_or(&[]).to_vec();
                    let n = elements.len() as f64;
                    let masses = match c.identity_mass {
                        None => vec![1.0 / n; elements.len()],
                        Some(m0) => {
                            if !(0.0..=1.0).contains(&m0) || (n < 2.0 && m0 != 1.0) {
                                return Err(Error::Config(format!(
                                    "identity mass {m0} is not admissible for a subgroup of order {n}"
                                )));
                            }
                            elements
                                .iter()
                                .map(|h| if h.is_zero() { m0 } else { (1.0 - m0) / (n - 1.0) })
                                .collect()
                        }
                    };
                    Law::Finite { elements, masses }
                }
                CoordinateMap::Lattice => {
                    if c.identity_mass.is_some() {
                        return Err(Error::Config("identityMass applies to finite subgroups only".into()));
                    }
                    Law::Radial(RadialLaw::new(ShellShape::Lattice(subgroup.coordinate_rank()), c.phi, cap)?)
                }
                CoordinateMap::DihedralLine => {
                    if c.identity_mass.is_some() {
                        return Err(Error::Config("identityMass applies to finite subgroups only".into()));
                    }
                    Law::Radial(RadialLaw::new(ShellShape::Line, c.phi, cap)?)
                }
            };
            components.push(Component {
                p: c.p,
                subgroup,
                profile: c.phi,
                law,
            });
        }
        if (total - 1.0).abs() > WEIGHT_TOL {
            return Err(Error::Weights(format!("weights sum to {total}, not 1")));
        }

        let mut mu0: Vec<(GroupElement, f64)> = match &spec.mu0 {
            Some(atoms) => {
                let mut v = Vec::with_capacity(atoms.len());
                for a in atoms {
                    group.check(&a.element)?;
                    if !(a.mass.is_finite() && a.mass >= 0.0) {
                        return Err(Error::Weights(format!("negative mass in mu0 at {:?}", a.element)));
                    }
                    v.push((a.element, a.mass));
                }
                v
            }
            None if spec.p0 > 0.0 => {
                let mut support: Vec<GroupElement> = vec![group.identity()];
                for s in group.generators() {
                    support.push(s.element);
                    support.push(group.inv(&s.element)?);
                }
                support.sort();
                support.dedup();
                let m = 1.0 / support.len() as f64;
                support.into_iter().map(|g| (g, m)).collect()
            }
            None => Vec::new(),
        };
        mu0.sort_by(|a, b| a.0.cmp(&b.0));
        for w in mu0.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(Error::Config(format!("mu0 lists {:?} twice", w[0].0)));
            }
        }
        if spec.p0 > 0.0 {
            let s: f64 = mu0.iter().map(|a| a.1).sum();
            if (s - 1.0).abs() > WEIGHT_TOL {
                return Err(Error::Weights(format!("mu0 masses sum to {s}, not 1")));
            }
            for (g, m) in &mu0 {
                let ginv = group.inv(g)?;
                let minv = mu0.iter().find(|a| a.0 == ginv).map_or(0.0, |a| a.1);
                if (minv - m).abs() > WEIGHT_TOL {
                    return Err(Error::Config(format!("mu0 is not symmetric at {g:?}")));
                }
            }
        }

        let mut measure = Measure {
            group,
            components,
            p0: spec.p0,
            mu0,
            certified_eps: 0.0,
        };
        measure.validate_p_order()?;
        measure.certified_eps = measure.check_generation()?;
        Ok(measure)
    }

    pub fn group(&self) -> GroupSpec {
        self.group
    }

    /// `mu(g)`.
    pub fn pmf(&self, g: &GroupElement) -> f64 {
        let mut total = 0.0;
        for c in &self.components {
            total += c.p * c.mass(g);
        }
        if self.p0 > 0.0 {
            if let Ok(i) = self.mu0.binary_search_by(|a| a.0.cmp(g)) {
                total += self.p0 * self.mu0[i].1;
            }
        }
        total
    }

    /// `sum_{|h|_i >= r} mu_i(h)` for component `i` (0-based).
    pub fn tail_mass(&self, component: usize, r: u64) -> Result<f64> {
        self.components
            .get(component)
            .map(|c| c.tail_mass(r))
            .ok_or_else(|| Error::Config(format!("no component {component}")))
    }

    /// Draws one increment.
    pub fn sample_step<R: Rng + ?Sized>(&self, rng: &mut R) -> GroupElement {
        let mut weights = Vec::with_capacity(self.components.len() + 1);
        weights.push(if self.mu0.is_empty() { 0.0 } else { self.p0 });
        weights.extend(self.components.iter().map(|c| c.p));
        match categorical(&weights, rng) {
            0 => {
                let masses: Vec<f64> = self.mu0.iter().map(|a| a.1).collect();
                self.mu0[categorical(&masses, rng)].0
            }
            i => self.components[i - 1].sample(rng),
        }
    }

    /// Total order of the `Phi_i` by index, equal indices merged into one class.
    pub fn validate_p_order(&self) -> Result<Vec<PhiClass>> {
        let mut classes: Vec<PhiClass> = Vec::new();
        for (i, c) in self.components.iter().enumerate() {
            let idx = c.profile.phi_cap_index();
            if !(idx.power.is_finite() && idx.log_power.is_finite()) {
                return Err(Error::Ordering(format!("Phi of component {i} has no index")));
            }
            match classes.iter_mut().find(|k| k.index.same_class(&idx)) {
                Some(k) => k.components.push(i),
                None => classes.push(PhiClass {
                    index: idx,
                    components: vec![i],
                }),
            }
        }
        classes.sort_by(|a, b| a.index.compare(&b.index));
        Ok(classes)
    }

    /// The `epsilon` certified by the generation check: `{mu > eps}` contains `e` and
    /// generates the group.
    pub fn certified_eps(&self) -> f64 {
        self.certified_eps
    }

    /// Atoms of `mu`: `e`, the first shell of each infinite component, every element of each
/// finite one, and `supp mu_0`.
    fn atoms(&self) -> Result<Vec<(GroupElement, f64)>> {
        let mut set: FxHashSet<GroupElement> = FxHashSet::default();
        set.insert(self.group.identity());
        for c in &self.components {
            let elements = match c.subgroup.finite_elements() {
                Some(all) => all.to_vec(),
                None => c.shell_elements(1)?,
            };
            set.extend(elements);
        }
        for (g, m) in &self.mu0 {
            if *m > 0.0 {
                set.insert(*g);
            }
        }
        let mut atoms: Vec<(GroupElement, f64)> = set.into_iter().map(|g| (g, self.pmf(&g))).collect();
        atoms.retain(|a| a.1 > 0.0);
        atoms.sort_by(|a, b| a.0.cmp(&b.0));
        Ok(atoms)
    }

    fn check_generation(&self) -> Result<f64> {
        let atoms = self.atoms()?;
        let e = self.group.identity();
        if !atoms.iter().any(|a| a.0 == e) {
            return Err(Error::Generation("mu(e) = 0".into()));
        }
        let steps: Vec<GroupElement> = atoms.iter().map(|a| a.0).filter(|g| !g.is_zero()).collect();
        if steps.is_empty() {
            return Err(Error::Generation("the support of mu is {e}".into()));
        }
        // every standard generator must be a short word in the atoms
        let mut targets: FxHashSet<GroupElement> = self.group.generators().into_iter().map(|s| s.element).collect();
        let mut seen: FxHashSet<GroupElement> = FxHashSet::default();
        seen.insert(e);
        let mut frontier = VecDeque::from([(e, 0usize)]);
        while let Some((x, depth)) = frontier.pop_front() {
            targets.remove(&x);
            if targets.is_empty() {
                break;
            }
            if depth == 8 || seen.len() > 200_000 {
                continue;
            }
            for s in &steps {
                let y = self.group.mul(&x, s)?;
                if seen.insert(y) {
                    frontier.push_back((y, depth + 1));
                }
            }
        }
        if !targets.is_empty() {
            let mut missing: Vec<GroupElement> = targets.into_iter().collect();
            missing.sort();
            return Err(Error::Generation(format!(
                "the atoms of mu do not generate the group (missing {missing:?})"
            )));
        }
        Ok(0.5 * atoms.iter().map(|a| a.1).fold(f64::INFINITY, f64::min))
    }

    /// The adapted geometry of this measure on the built-in nilpotent approximation.
    pub fn adapted_geometry(&self, w_star: Option<f64>) -> Result<AdaptedGeometry> {
        let approx = NilpotentApprox::builtin(self.group)?;
        let comps: Vec<ComponentGeometry> = self
            .components
            .iter()
            .map(|c| ComponentGeometry {
                subgroup: &c.subgroup,
                profile: c.profile,
            })
            .collect();
        AdaptedGeometry::build(&approx, &comps, w_star)
    }

    /// Dump of the built measure for golden files.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "group": self.group,
            "p0": self.p0,
            "mu0": self.mu0.iter().map(|(g, m)| serde_json::json!({"element": g, "mass": m})).collect::<Vec<_>>(),
            "certifiedEps": self.certified_eps,
            "components": self.components.iter().map(|c| serde_json::json!({
                "p": c.p,
                "subgroup": c.subgroup.spec(),
                "growthDegree": c.subgroup.growth_degree(),
                "phi": c.profile,
                "phiCapIndex": c.profile.phi_cap_index(),
                "normalization": c.normalization(),
            })).collect::<Vec<_>>(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn e(c: &[i128]) -> GroupElement {
        GroupElement::from_coords(c)
    }

    fn z1() -> Measure {
        Measure::build(
            GroupSpec::ZK { k: 1 },
            &MeasureSpec::single(SubgroupSpec::lattice(vec![e(&[1])]), 1.0),
        )
        .unwrap()
    }

    #[test]
    fn z_cauchy_pmf() {
        let m = z1();
        let z = m.components[0].normalization();
        assert!((z - 2.28987).abs() < 1e-5);
        assert!((m.pmf(&e(&[5])) - 1.0 / (z * 36.0)).abs() < 1e-15);
        assert_eq!(m.pmf(&e(&[5])), m.pmf(&e(&[-5])));
        assert!((m.tail_mass(0, 1).unwrap() - (1.0 - m.pmf(&e(&[0])))).abs() < 1e-12);
    }

    #[test]
    fn point_mass_at_identity_does_not_generate() {
        let spec = MeasureSpec {
            components: vec![],
            p0: 1.0,
            mu0: Some(vec![Atom {
                element: e(&[0]),
                mass: 1.0,
            }]),
            shell_cap: None,
        };
        assert!(matches!(
            Measure::build(GroupSpec::ZK { k: 1 }, &spec),
            Err(Error::Generation(_))
        ));
    }

    #[test]
    fn weights_must_sum_to_one() {
        let mut spec = MeasureSpec::single(SubgroupSpec::lattice(vec![e(&[1])]), 1.0);
        spec.components[0].p = 0.9;
        assert!(matches!(Measure::build(GroupSpec::ZK { k: 1 }, &spec), Err(Error::Weights(_))));
    }

    #[test]
    fn heisenberg_mixture_is_valid_with_one_class() {
        let spec = MeasureSpec::uniform_mixture(
            vec![
                SubgroupSpec::lattice(vec![e(&[1, 0, 0])]),
                SubgroupSpec::lattice(vec![e(&[0, 1, 0])]),
                SubgroupSpec::lattice(vec![e(&[0, 0, 1])]),
            ],
            &[1.0, 1.0, 1.0],
        );
        let m = Measure::build(GroupSpec::Heisenberg3, &spec).unwrap();
        let classes = m.validate_p_order().unwrap();
        assert_eq!(classes.len(), 1);
        assert_eq!(classes[0].components, vec![0, 1, 2]);
        assert!(m.certified_eps() > 0.0);
    }

    #[test]
    fn phi_order_by_index() {
        let spec = MeasureSpec::uniform_mixture(
            vec![
                SubgroupSpec::lattice(vec![e(&[1, 0])]),
                SubgroupSpec::lattice(vec![e(&[0, 1])]),
            ],
            &[1.5, 0.5],
        );
        let m = Measure::build(GroupSpec::ZK { k: 2 }, &spec).unwrap();
        let classes = m.validate_p_order().unwrap();
        assert_eq!(classes.len(), 2);
        assert_eq!(classes[0].components, vec![1]);
        assert_eq!(classes[1].components, vec![0]);
    }

    #[test]
    fn finite_components_and_default_mu0() {
        let spec = MeasureSpec {
            components: vec![
                JumpComponentSpec {
                    p: 0.25,
                    subgroup: SubgroupSpec::finite(vec![e(&[0, 1])]),
                    phi: JumpProfile::Power { alpha: 0.5 },
                    identity_mass: Some(0.2),
                },
                JumpComponentSpec {
                    p: 0.25,
                    subgroup: SubgroupSpec::finite(vec![e(&[-1, 1])]),
                    phi: JumpProfile::Power { alpha: 1.5 },
                    identity_mass: None,
                },
            ],
            p0: 0.5,
            mu0: None,
            shell_cap: None,
        };
        let m = Measure::build(GroupSpec::DihedralInf, &spec).unwrap();
        // mu0 uniform on {e, u, v}
        assert!((m.pmf(&e(&[0, 1])) - (0.25 * 0.8 + 0.5 / 3.0)).abs() < 1e-15);
        assert!((m.pmf(&e(&[0, 0])) - (0.25 * 0.2 + 0.25 * 0.5 + 0.5 / 3.0)).abs() < 1e-15);
    }

    #[test]
    fn sampler_frequencies_match_pmf() {
        let m = z1();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 1_000_000;
        let mut counts = std::collections::HashMap::new();
        for _ in 0..n {
            *counts.entry(m.sample_step(&mut rng)).or_insert(0u64) += 1;
        }
        // chi-square on |h| <= 20 plus the remainder cell
        let mut chi2 = 0.0;
        let mut rest_expected = 1.0;
        let mut rest_observed = n as f64;
        for x in -20..=20i128 {
            let g = e(&[x]);
            let p = m.pmf(&g);
            let o = *counts.get(&g).unwrap_or(&0) as f64;
            chi2 += (o - n as f64 * p).powi(2) / (n as f64 * p);
            rest_expected -= p;
            rest_observed -= o;
        }
        chi2 += (rest_observed - n as f64 * rest_expected).powi(2) / (n as f64 * rest_expected);
        // 41 degrees of freedom, 1e-3 critical value is about 74.7
        assert!(chi2 < 74.7, "chi2 = {chi2}");
    }

    #[test]
    fn sphere_sampler_is_uniform() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let pts = l1_sphere_points(3, 3);
        assert_eq!(pts.len() as f64, crate::group::l1_sphere_count(3, 3.0));
        let mut counts = std::collections::HashMap::new();
        let n = 200_000;
        for _ in 0..n {
            *counts.entry(sample_l1_sphere(3, 3, &mut rng)).or_insert(0u32) += 1;
        }
        assert_eq!(counts.len(), pts.len());
        let expect = n as f64 / pts.len() as f64;
        let chi2: f64 = counts.values().map(|&c| (c as f64 - expect).powi(2) / expect).sum();
        // 37 degrees of freedom
        assert!(chi2 < 69.3, "chi2 = {chi2}");
    }
}
