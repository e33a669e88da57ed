//! Subgroups `H_i` with an explicit coordinate map.
//!
//! Three shapes are supported:
//!
//! * [`CoordinateMap::Lattice`]: commuting generators `b_1..b_m` of a free abelian group,
//!   `x -> b_1^{x_1} ... b_m^{x_m}`. The word length is the l1 norm of `x`.
//! * [`CoordinateMap::DihedralLine`]: two involutions `a, b` whose product `z = ab` has
//!   infinite order. The integer `m = 2k + e` labels `z^k a^e`, and `|m|` is the word
//!   length over `{a, b}`.
//! * [`CoordinateMap::Finite`]: a finite subgroup enumerated by breadth-first search.

use std::collections::VecDeque;

use rustc_hash::FxHashMap;
use serde::{Deserialize, Serialize};

use super::{GroupElement, GroupSpec};
use crate::error::{Error, Result};

/// Shape of the identification of `H_i` with `Z^m` or a finite set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum CoordinateMap {
    Lattice,
    DihedralLine,
    Finite,
}

/// Declarative description of a subgroup, as it appears in configuration files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct SubgroupSpec {
    pub generators: Vec<GroupElement>,
    pub coordinate_map: CoordinateMap,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub growth_degree: Option<usize>,
}

impl SubgroupSpec {
    pub fn lattice(generators: Vec<GroupElement>) -> Self {
        SubgroupSpec {
            generators,
            coordinate_map: CoordinateMap::Lattice,
            growth_degree: None,
        }
    }

    pub fn dihedral_line(a: GroupElement, b: GroupElement) -> Self {
        SubgroupSpec {
            generators: vec![a, b],
            coordinate_map: CoordinateMap::DihedralLine,
            growth_degree: None,
        }
    }

    pub fn finite(generators: Vec<GroupElement>) -> Self {
        SubgroupSpec {
            generators,
            coordinate_map: CoordinateMap::Finite,
            growth_degree: None,
        }
    }
}

/// Linear solver for a lattice whose coordinates depend linearly on `x`.
#[derive(Debug, Clone)]
struct LatticeSolver {
    /// `vectors[j]` holds the coordinates of `b_j`.
    vectors: Vec<Vec<i128>>,
    pivot_rows: Vec<usize>,
    adjugate: Vec<Vec<i128>>,
    det: i128,
}

impl LatticeSolver {
    fn new(vectors: Vec<Vec<i128>>) -> Result<Self> {
        let m = vectors.len();
        let rows = vectors.first().map_or(0, Vec::len);
        let pivot_rows = choose_pivots(&vectors, rows)
            .ok_or_else(|| Error::InvalidSubgroup("lattice generators are linearly dependent".into()))?;
        let square: Vec<Vec<i128>> = pivot_rows
            .iter()
            .map(|&r| (0..m).map(|j| vectors[j][r]).collect())
            .collect();
        let det = determinant(&square);
        let mut adjugate = vec![vec![0i128; m]; m];
        for (i, row) in adjugate.iter_mut().enumerate() {
            for (j, entry) in row.iter_mut().enumerate() {
                let minor = minor(&square, j, i);
                let sign = if (i + j) % 2 == 0 { 1 } else { -1 };
                *entry = sign * determinant(&minor);
            }
        }
        Ok(LatticeSolver {
            vectors,
            pivot_rows,
            adjugate,
            det,
        })
    }

    fn rank(&self) -> usize {
        self.vectors.len()
    }

    fn solve(&self, coords: &[i128]) -> Option<Vec<i128>> {
        let m = self.rank();
        let mut x = vec![0i128; m];
        for (j, xj) in x.iter_mut().enumerate() {
            let mut acc: i128 = 0;
            for (p, &row) in self.pivot_rows.iter().enumerate() {
                acc = acc.checked_add(self.adjugate[j][p].checked_mul(coords[row])?)?;
            }
            if acc % self.det != 0 {
                return None;
            }
            *xj = acc / self.det;
        }
        for (r, &c) in coords.iter().enumerate() {
            let mut acc: i128 = 0;
            for (j, &xj) in x.iter().enumerate() {
                acc = acc.checked_add(self.vectors[j][r].checked_mul(xj)?)?;
            }
            if acc != c {
                return None;
            }
        }
        Some(x)
    }

    fn embed(&self, x: &[i128]) -> Result<GroupElement> {
        let rows = self.vectors[0].len();
        let mut out = vec![0i128; rows];
        for (j, &xj) in x.iter().enumerate() {
            for (r, o) in out.iter_mut().enumerate() {
                let t = self.vectors[j][r]
                    .checked_mul(xj)
                    .ok_or(Error::Overflow("lattice embedding"))?;
                *o = o.checked_add(t).ok_or(Error::Overflow("lattice embedding"))?;
            }
        }
        Ok(GroupElement::from_coords(&out))
    }
}

fn choose_pivots(vectors: &[Vec<i128>], rows: usize) -> Option<Vec<usize>> {
    let m = vectors.len();
    if m == 0 {
        return Some(Vec::new());
    }
    // Try row subsets in lexicographic order; m and rows are at most six.
    let mut chosen = Vec::new();
    fn rec(
        vectors: &[Vec<i128>],
        rows: usize,
        start: usize,
        chosen: &mut Vec<usize>,
    ) -> bool {
        let m = vectors.len();
        if chosen.len() == m {
            let sq: Vec<Vec<i128>> = chosen
                .iter()
                .map(|&r| (0..m).map(|j| vectors[j][r]).collect())
                .collect();
            return determinant(&sq) != 0;
        }
        for r in start..rows {
            chosen.push(r);
            if rec(vectors, rows, r + 1, chosen) {
                return true;
            }
            chosen.pop();
        }
        false
    }
    if rec(vectors, rows, 0, &mut chosen) {
        Some(chosen)
    } else {
        None
    }
}

fn minor(a: &[Vec<i128>], skip_row: usize, skip_col: usize) -> Vec<Vec<i128>> {
    a.iter()
        .enumerate()
        .filter(|(i, _)| *i != skip_row)
        .map(|(_, row)| {
            row.iter()
                .enumerate()
                .filter(|(j, _)| *j != skip_col)
                .map(|(_, &v)| v)
                .collect()
        })
        .collect()
}

/// Laplace expansion; the matrices here are at most 6x6 with small entries.
fn determinant(a: &[Vec<i128>]) -> i128 {
    match a.len() {
        0 => 1,
        1 => a[0][0],
        2 => a[0][0] * a[1][1] - a[0][1] * a[1][0],
        n => (0..n)
            .map(|j| {
                let sign = if j % 2 == 0 { 1 } else { -1 };
                sign * a[0][j] * determinant(&minor(a, 0, j))
            })
            .sum(),
    }
}

#[derive(Debug, Clone)]
enum Shape {
    Lattice(LatticeSolver),
    Line {
        a: GroupElement,
        z: LatticeSolver,
    },
    Finite {
        elements: Vec<GroupElement>,
        distance: FxHashMap<GroupElement, u32>,
        shells: Vec<Vec<GroupElement>>,
    },
}

/// A validated subgroup of a built-in group.
#[derive(Debug, Clone)]
pub struct Subgroup {
    group: GroupSpec,
    spec: SubgroupSpec,
    shape: Shape,
}

/// Largest finite subgroup the BFS closure will enumerate.
const FINITE_LIMIT: usize = 100_000;

impl Subgroup {
    pub fn new(group: GroupSpec, spec: SubgroupSpec) -> Result<Self> {
        group.validate()?;
        if spec.generators.is_empty() {
            return Err(Error::InvalidSubgroup("no generators".into()));
        }
        for g in &spec.generators {
            group.check(g)?;
            if g.is_zero() {
                return Err(Error::InvalidSubgroup("identity listed as a generator".into()));
            }
        }
        let shape = match spec.coordinate_map {
            CoordinateMap::Lattice => Shape::Lattice(build_lattice(group, &spec.generators)?),
            CoordinateMap::DihedralLine => {
                if spec.generators.len() != 2 {
                    return Err(Error::InvalidSubgroup(
                        "dihedralLine needs exactly two involutions".into(),
                    ));
                }
                let (a, b) = (spec.generators[0], spec.generators[1]);
                for x in [a, b] {
                    if group.mul(&x, &x)? != group.identity() {
                        return Err(Error::InvalidSubgroup(format!("{x:?} is not an involution")));
                    }
                }
                let z = group.mul(&a, &b)?;
                if z.is_zero() {
                    return Err(Error::InvalidSubgroup("the two involutions coincide".into()));
                }
                let z = build_lattice(group, &[z])?;
                // a must not lie in <z>, otherwise the labelling is ambiguous.
                if z.solve(a.coords()).is_some() {
                    return Err(Error::InvalidSubgroup("generated subgroup is not infinite dihedral".into()));
                }
                Shape::Line { a, z }
            }
            CoordinateMap::Finite => build_finite(group, &spec.generators)?,
        };
        let sub = Subgroup { group, spec, shape };
        if let Some(d) = sub.spec.growth_degree {
            if d != sub.growth_degree() {
                return Err(Error::InvalidSubgroup(format!(
                    "declared growthDegree {d} does not match the coordinate map rank {}",
                    sub.growth_degree()
                )));
            }
        }
        Ok(sub)
    }

    pub fn group(&self) -> GroupSpec {
        self.group
    }

    pub fn spec(&self) -> &SubgroupSpec {
        &self.spec
    }

    pub fn coordinate_map(&self) -> CoordinateMap {
        self.spec.coordinate_map
    }

    /// Growth degree `d_i`: lattice rank, 1 for a dihedral line, 0 when finite.
    pub fn growth_degree(&self) -> usize {
        match &self.shape {
            Shape::Lattice(l) => l.rank(),
            Shape::Line { .. } => 1,
            Shape::Finite { .. } => 0,
        }
    }

    /// Number of integer coordinates returned by [`Subgroup::coordinates`].
    pub fn coordinate_rank(&self) -> usize {
        match &self.shape {
            Shape::Lattice(l) => l.rank(),
            Shape::Line { .. } => 1,
            Shape::Finite { .. } => 1,
        }
    }

    /// Coordinates of `g` in the coordinate map, or `None` when `g` is not a member.
    ///
    /// Finite subgroups report the index of `g` in their sorted element list.
    pub fn coordinates(&self, g: &GroupElement) -> Option<Vec<i128>> {
        if g.arity() != self.group.arity() {
            return None;
        }
        match &self.shape {
            Shape::Lattice(l) => l.solve(g.coords()),
            Shape::Line { a, z } => {
                if let Some(k) = z.solve(g.coords()) {
                    return Some(vec![2 * k[0]]);
                }
                let ga = self.group.mul_unchecked(g, a).ok()?;
                z.solve(ga.coords()).map(|k| vec![2 * k[0] + 1])
            }
            Shape::Finite { elements, .. } => elements
                .binary_search(g)
                .ok()
                .map(|i| vec![i as i128]),
        }
    }

    pub fn contains(&self, g: &GroupElement) -> bool {
        match &self.shape {
            Shape::Finite { distance, .. } => distance.contains_key(g),
            _ => self.coordinates(g).is_some(),
        }
    }

    /// Element with the given coordinates.
    pub fn element_at(&self, x: &[i128]) -> Result<GroupElement> {
        match &self.shape {
            Shape::Lattice(l) => {
                if x.len() != l.rank() {
                    return Err(Error::MalformedElement("wrong lattice coordinate count".into()));
                }
                l.embed(x)
            }
            Shape::Line { a, z } => {
                let m = *x.first().ok_or_else(|| Error::MalformedElement("missing coordinate".into()))?;
                let k = m.div_euclid(2);
                let zk = z.embed(&[k])?;
                if m.rem_euclid(2) == 1 {
                    self.group.mul_unchecked(&zk, a)
                } else {
                    Ok(zk)
                }
            }
            Shape::Finite { elements, .. } => {
                let i = *x.first().ok_or_else(|| Error::MalformedElement("missing coordinate".into()))?;
                elements
                    .get(usize::try_from(i).map_err(|_| Error::NotAMember)?)
                    .copied()
                    .ok_or(Error::NotAMember)
            }
        }
    }

    /// Exact word length of `h` over the declared generators.
    pub fn word_length(&self, h: &GroupElement) -> Result<u128> {
        match &self.shape {
            Shape::Finite { distance, .. } => {
                distance.get(h).map(|&d| d as u128).ok_or(Error::NotAMember)
            }
            _ => {
                let x = self.coordinates(h).ok_or(Error::NotAMember)?;
                Ok(x.iter().map(|v| v.unsigned_abs()).sum())
            }
        }
    }

    /// Number of elements with word length exactly `r`, as a float (it may be astronomically large).
    pub fn shell_count(&self, r: u64) -> f64 {
        match &self.shape {
            Shape::Lattice(l) => l1_sphere_count(l.rank(), r as f64),
            Shape::Line { .. } => {
                if r == 0 {
                    1.0
                } else {
                    2.0
                }
            }
            Shape::Finite { shells, .. } => shells.get(r as usize).map_or(0.0, |s| s.len() as f64),
        }
    }

    /// Largest word length in a finite subgroup; `None` for infinite ones.
    pub fn finite_radius(&self) -> Option<u64> {
        match &self.shape {
            Shape::Finite { shells, .. } => Some(shells.len() as u64 - 1),
            _ => None,
        }
    }

    /// All elements of a finite subgroup, sorted.
    pub fn finite_elements(&self) -> Option<&[GroupElement]> {
        match &self.shape {
            Shape::Finite { elements, .. } => Some(elements),
            _ => None,
        }
    }

    /// Elements of a finite subgroup at word length `r`, sorted.
    pub(crate) fn finite_shell(&self, r: usize) -> Option<&[GroupElement]> {
        match &self.shape {
            Shape::Finite { shells, .. } => shells.get(r).map(Vec::as_slice),
            _ => None,
        }
    }

    /// For a dihedral line: the reflection `a` and the translation `z = ab`.
    pub(crate) fn line_parts(&self) -> Option<(GroupElement, GroupElement)> {
        match &self.shape {
            Shape::Line { a, z } => Some((*a, z.embed(&[1]).ok()?)),
            _ => None,
        }
    }
}

/// Number of points of `Z^m` with l1 norm exactly `r`, extended to real `r >= m`
/// through the polynomial form of the binomial coefficients.
pub(crate) fn l1_sphere_count(m: usize, r: f64) -> f64 {
    if r == 0.0 {
        return 1.0;
    }
    let mut total = 0.0;
    for j in 1..=m {
        // 2^j C(m, j) C(r - 1, j - 1)
        let mut c_rj = 1.0;
        for l in 0..(j - 1) {
            c_rj *= (r - 1.0 - l as f64) / (l as f64 + 1.0);
        }
        if c_rj <= 0.0 {
            continue;
        }
        total += 2f64.powi(j as i32) * binomial(m, j) * c_rj;
    }
    total
}

pub(crate) fn binomial(n: usize, k: usize) -> f64 {
    let mut c = 1.0;
    for i in 0..k {
        c = c * (n - i) as f64 / (i + 1) as f64;
    }
    c
}

fn build_lattice(group: GroupSpec, gens: &[GroupElement]) -> Result<LatticeSolver> {
    for (i, a) in gens.iter().enumerate() {
        for b in &gens[i + 1..] {
            if group.mul(a, b)? != group.mul(b, a)? {
                return Err(Error::InvalidSubgroup(format!(
                    "lattice generators {a:?} and {b:?} do not commute"
                )));
            }
        }
    }
    let vectors: Vec<Vec<i128>> = gens.iter().map(|g| g.coords().to_vec()).collect();
    let solver = LatticeSolver::new(vectors)?;
    // The closed-form coordinate solve assumes the embedding is linear in x. Probe it on a
    // deterministic spread of exponent vectors, including large ones.
    let probes: [i128; 7] = [1, -1, 2, -3, 17, -1000, 123_457];
    for (t, &p) in probes.iter().enumerate() {
        let x: Vec<i128> = (0..gens.len())
            .map(|j| if (t + j) % 3 == 2 { -p } else { p * (j as i128 + 1) })
            .collect();
        let mut prod = group.identity();
        for (g, &xj) in gens.iter().zip(&x) {
            prod = group.mul(&prod, &group.pow(g, xj)?)?;
        }
        if solver.embed(&x)? != prod {
            return Err(Error::InvalidSubgroup(
                "lattice generators do not embed linearly in the normal-form coordinates".into(),
            ));
        }
    }
    Ok(solver)
}

fn build_finite(group: GroupSpec, gens: &[GroupElement]) -> Result<Shape> {
    let mut steps = Vec::new();
    for g in gens {
        steps.push(*g);
        steps.push(group.inv(g)?);
    }
    let e = group.identity();
    let mut distance = FxHashMap::default();
    distance.insert(e, 0u32);
    let mut shells = vec![vec![e]];
    let mut queue = VecDeque::from([e]);
    while let Some(x) = queue.pop_front() {
        let d = distance[&x];
        for s in &steps {
            let y = group.mul(&x, s)?;
            if !distance.contains_key(&y) {
                if distance.len() >= FINITE_LIMIT {
                    return Err(Error::InvalidSubgroup(format!(
                        "finite closure exceeds {FINITE_LIMIT} elements; the subgroup is probably infinite"
                    )));
                }
                distance.insert(y, d + 1);
                if shells.len() <= d as usize + 1 {
                    shells.push(Vec::new());
                }
                shells[d as usize + 1].push(y);
                queue.push_back(y);
            }
        }
    }
    for s in &mut shells {
        s.sort();
    }
    let mut elements: Vec<GroupElement> = distance.keys().copied().collect();
    elements.sort();
    Ok(Shape::Finite {
        elements,
        distance,
        shells,
    })
}
