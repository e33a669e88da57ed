//! Closed-form quasi-norms, balls and bounded product decompositions.

use serde::Serialize;

use super::system::AdaptedGeometry;
use crate::error::{Error, Result};
use crate::group::{GroupElement, GroupSpec, NilpotentStructure};

/// Default cap on ball enumeration and counting.
pub const DEFAULT_BALL_CAP: u128 = 50_000_000;

/// Shape of the closed-form norm.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase", tag = "kind")]
pub enum NormKind {
    /// `max_j |x_{slot_j}|^{1/w_j}`, together with the parity coordinate when present.
    Axes { slots: Vec<usize>, parity: Option<usize> },
    /// Infinite dihedral group: `ceil(|2n + e| / 2)^{1/w}`, the number of letters of the
    /// most used generator in a reduced word for `(uv)^n u^e`.
    DihedralWord,
    /// Heisenberg group with the symmetrised centre coordinate `x_3 - x_1 x_2 / 2`.
    Heisenberg,
}

/// An explicitly evaluable norm on a built-in group.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ClosedForm {
    pub group: GroupSpec,
    pub kind: NormKind,
    /// Per-axis exponents `w_j`; a coordinate of size `x` contributes `|x|^{1/w_j}`.
    pub weights: Vec<f64>,
}

fn axis_value(x: u128, w: f64) -> f64 {
    (x as f64).powf(1.0 / w)
}

/// Largest `b >= 0` with `axis_value(b, w) <= r`, computed against the evaluation formula.
fn axis_bound(r: f64, w: f64, limit: u128) -> Result<u128> {
    if r < 0.0 {
        return Ok(0);
    }
    let guess = r.powf(w).floor();
    if !guess.is_finite() || guess > limit as f64 {
        return Err(Error::BallCap {
            count: u128::MAX,
            cap: limit,
        });
    }
    let mut b = guess as u128;
    while b > 0 && axis_value(b, w) > r {
        b -= 1;
    }
    while axis_value(b + 1, w) <= r {
        b += 1;
    }
    Ok(b)
}

/// Largest integer `y >= 0` with `(y / 2)^{1/w} <= r`.
fn half_axis_bound(r: f64, w: f64, limit: u128) -> Result<u128> {
    let value = |y: u128| (y as f64 / 2.0).powf(1.0 / w);
    let guess = (2.0 * r.powf(w)).floor();
    if !guess.is_finite() || guess > limit as f64 {
        return Err(Error::BallCap {
            count: u128::MAX,
            cap: limit,
        });
    }
    let mut y = guess as u128;
    while y > 0 && value(y) > r {
        y -= 1;
    }
    while value(y + 1) <= r {
        y += 1;
    }
    Ok(y)
}

impl ClosedForm {
    pub fn new(group: GroupSpec, kind: NormKind, weights: Vec<f64>) -> Result<Self> {
        if weights.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(Error::Geometry(format!("closed form needs positive weights, got {weights:?}")));
        }
        let expected = match &kind {
            NormKind::Axes { slots, .. } => slots.len(),
            NormKind::DihedralWord => 1,
            NormKind::Heisenberg => 3,
        };
        if weights.len() != expected {
            return Err(Error::Geometry(format!(
                "closed form of kind {kind:?} needs {expected} weights, got {}",
                weights.len()
            )));
        }
        Ok(ClosedForm { group, kind, weights })
    }

    /// Closed form with explicit axis exponents and the default shape for the group.
    pub fn with_weights(group: GroupSpec, weights: Vec<f64>) -> Result<Self> {
        let kind = match group {
            GroupSpec::DihedralInf => NormKind::DihedralWord,
            GroupSpec::Heisenberg3 => NormKind::Heisenberg,
            _ => NormKind::Axes {
                slots: (0..weights.len()).collect(),
                parity: group.parity_slot(),
            },
        };
        let weights = if group == GroupSpec::Heisenberg3 && weights.len() == 3 {
            vec![weights[0], weights[1], weights[2].max(weights[0] + weights[1])]
        } else {
            weights
        };
        ClosedForm::new(group, kind, weights)
    }

    pub fn eval(&self, g: &GroupElement) -> Result<f64> {
        self.group.check(g)?;
        let c = g.coords();
        Ok(match &self.kind {
            NormKind::Axes { slots, parity } => {
                let mut v = parity.map_or(0.0, |p| c[p] as f64);
                for (&slot, &w) in slots.iter().zip(&self.weights) {
                    v = v.max(axis_value(c[slot].unsigned_abs(), w));
                }
                v
            }
            NormKind::DihedralWord => {
                let m = c[0]
                    .checked_mul(2)
                    .and_then(|x| x.checked_add(c[1]))
                    .ok_or(Error::Overflow("dihedral norm"))?;
                axis_value(m.unsigned_abs().div_ceil(2), self.weights[0])
            }
            NormKind::Heisenberg => {
                let y = c[0]
                    .checked_mul(c[1])
                    .and_then(|p| c[2].checked_mul(2).and_then(|z| z.checked_sub(p)))
                    .ok_or(Error::Overflow("Heisenberg norm"))?;
                let centre = (y.unsigned_abs() as f64 / 2.0).powf(1.0 / self.weights[2]);
                axis_value(c[0].unsigned_abs(), self.weights[0])
                    .max(axis_value(c[1].unsigned_abs(), self.weights[1]))
                    .max(centre)
            }
        })
    }

    /// `#{g : eval(g) <= r}`, or a cap error once the count exceeds `cap`.
    pub fn ball_count(&self, r: f64, cap: u128) -> Result<u128> {
        let over = |count: u128| Error::BallCap { count, cap };
        let count = match &self.kind {
            NormKind::Axes { parity, .. } => {
                let mut total: u128 = if parity.is_some() && r >= 1.0 { 2 } else { 1 };
                for &w in &self.weights {
                    let b = axis_bound(r, w, cap)?;
                    total = total.checked_mul(2 * b + 1).ok_or_else(|| over(u128::MAX))?;
                    if total > cap {
                        return Err(over(total));
                    }
                }
                total
            }
            NormKind::DihedralWord => 4 * axis_bound(r, self.weights[0], cap)? + 1,
            NormKind::Heisenberg => {
                let b1 = axis_bound(r, self.weights[0], cap)? as i128;
                let b2 = axis_bound(r, self.weights[1], cap)? as i128;
                let yb = half_axis_bound(r, self.weights[2], cap)? as i128;
                if ((2 * b1 + 1) as u128).saturating_mul((2 * b2 + 1) as u128) > cap {
                    return Err(over(u128::MAX));
                }
                let mut total: u128 = 0;
                for x1 in -b1..=b1 {
                    for x2 in -b2..=b2 {
                        let p = x1 * x2;
                        let lo = (p - yb).div_euclid(2) + i128::from((p - yb).rem_euclid(2) != 0);
                        let hi = (p + yb).div_euclid(2);
                        total += (hi - lo + 1) as u128;
                    }
                    if total > cap {
                        return Err(over(total));
                    }
                }
                total
            }
        };
        if count > cap {
            return Err(over(count));
        }
        Ok(count)
    }

    /// Elements of the closed ball of radius `r`, sorted by coordinates.
    pub fn ball_elements(&self, r: f64, cap: u128) -> Result<Vec<GroupElement>> {
        let count = self.ball_count(r, cap)?;
        let mut out = Vec::with_capacity(count as usize);
        match &self.kind {
            NormKind::Axes { slots, parity } => {
                let bounds: Vec<i128> = self
                    .weights
                    .iter()
                    .map(|&w| axis_bound(r, w, cap).map(|b| b as i128))
                    .collect::<Result<_>>()?;
                let parities: Vec<i128> = if parity.is_some() && r >= 1.0 { vec![0, 1] } else { vec![0] };
                let mut coords = vec![0i128; self.group.arity()];
                let mut x: Vec<i128> = bounds.iter().map(|b| -b).collect();
                loop {
                    for &e in &parities {
                        for (&slot, &v) in slots.iter().zip(&x) {
                            coords[slot] = v;
                        }
                        if let Some(p) = parity {
                            coords[*p] = e;
                        }
                        out.push(GroupElement::from_coords(&coords));
                    }
                    // odometer increment
                    let mut j = 0;
                    loop {
                        if j == x.len() {
                            out.sort();
                            return Ok(out);
                        }
                        if x[j] < bounds[j] {
                            x[j] += 1;
                            break;
                        }
                        x[j] = -bounds[j];
                        j += 1;
                    }
                }
            }
            NormKind::DihedralWord => {
                let c = axis_bound(r, self.weights[0], cap)? as i128;
                for m in -2 * c..=2 * c {
                    out.push(GroupElement::from_coords(&[m.div_euclid(2), m.rem_euclid(2)]));
                }
            }
            NormKind::Heisenberg => {
                let b1 = axis_bound(r, self.weights[0], cap)? as i128;
                let b2 = axis_bound(r, self.weights[1], cap)? as i128;
                let yb = half_axis_bound(r, self.weights[2], cap)? as i128;
                for x1 in -b1..=b1 {
                    for x2 in -b2..=b2 {
                        let p = x1 * x2;
                        let lo = (p - yb).div_euclid(2) + i128::from((p - yb).rem_euclid(2) != 0);
                        let hi = (p + yb).div_euclid(2);
                        for x3 in lo..=hi {
                            out.push(GroupElement::from_coords(&[x1, x2, x3]));
                        }
                    }
                }
            }
        }
        out.sort();
        Ok(out)
    }
}

/// One factor `element^exponent` of a product certificate.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct CertificateFactor {
    pub name: String,
    pub element: GroupElement,
    pub exponent: i128,
}

/// A product certificate `g = theta_1^{x_1} ... theta_q^{x_q} u` with budget usage.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Certificate {
    pub factors: Vec<CertificateFactor>,
    /// `|x_j| / F_j(||g||)` for each axis factor, in the order of the axes.
    pub usage: Vec<f64>,
    /// Largest usage ratio.
    pub constant: f64,
}

impl Certificate {
    pub fn evaluate(&self, group: GroupSpec) -> Result<GroupElement> {
        let mut acc = group.identity();
        for f in &self.factors {
            acc = group.mul(&acc, &group.pow(&f.element, f.exponent)?)?;
        }
        Ok(acc)
    }
}

fn coset_name(group: GroupSpec, index: usize) -> String {
    match group {
        GroupSpec::DihedralInf => "u".into(),
        GroupSpec::DeltaGroup => "s".into(),
        GroupSpec::SemidirectZRotZ2 => format!("s^{index}"),
        _ => format!("u{index}"),
    }
}

impl AdaptedGeometry {
    fn check_group(&self, g: &GroupElement) -> Result<()> {
        self.group.check(g).map_err(|_| {
            Error::GroupMismatch(format!("element {g:?} does not belong to {}", self.group.name()))
        })
    }

    /// `||g||_{F_G}` through the closed form.
    pub fn closed_form_norm(&self, g: &GroupElement) -> Result<f64> {
        self.check_group(g)?;
        self.norm.eval(g)
    }

    /// `(1 + ||g||)^{w_*} - 1`.
    pub fn norm_g2(&self, g: &GroupElement) -> Result<f64> {
        Ok(self.scale_g2(self.closed_form_norm(g)?))
    }

    /// `(1 + ||g||)^{w^*} - 1`, the scale of the test functions `zeta_R`.
    pub fn norm_g1(&self, g: &GroupElement) -> Result<f64> {
        Ok(self.scale_g1(self.closed_form_norm(g)?))
    }

    pub fn scale_g2(&self, closed: f64) -> f64 {
        (self.w_star * closed.ln_1p()).exp_m1()
    }

    pub fn scale_g1(&self, closed: f64) -> f64 {
        (self.w_upper * closed.ln_1p()).exp_m1()
    }

    /// Closed-form radius whose ball equals `{norm_g2 <= r}`.
    pub fn closed_radius_g2(&self, r: f64) -> f64 {
        (r.ln_1p() / self.w_star).exp_m1()
    }

    /// Closed-form radius whose ball equals `{norm_g1 <= r}`.
    pub fn closed_radius_g1(&self, r: f64) -> f64 {
        (r.ln_1p() / self.w_upper).exp_m1()
    }

    pub fn ball_count(&self, r: f64) -> Result<u128> {
        self.norm.ball_count(r, DEFAULT_BALL_CAP)
    }

    pub fn ball_count_capped(&self, r: f64, cap: u128) -> Result<u128> {
        self.norm.ball_count(r, cap)
    }

    pub fn ball_elements(&self, r: f64) -> Result<Vec<GroupElement>> {
        self.norm.ball_elements(r, DEFAULT_BALL_CAP)
    }

    /// Writes `g` as powers of the generators of `N` followed by a coset representative.
    pub fn decompose_bounded(&self, g: &GroupElement) -> Result<Certificate> {
        self.check_group(g)?;
        let approx = self.approx();
        let radius = self.norm.eval(g)?;
        let d = approx.coset_decompose(g)?;
        let gens = approx.n_generators();
        let x: Vec<i128> = match approx.structure() {
            NilpotentStructure::Abelian => approx.n_coordinates(&d.h)?,
            NilpotentStructure::Heisenberg => {
                let c = d.h.coords();
                let ab = c[0].checked_mul(c[1]).ok_or(Error::Overflow("certificate"))?;
                vec![c[0], c[1], c[2].checked_sub(ab).ok_or(Error::Overflow("certificate"))?]
            }
        };
        let budgets: Vec<f64> = match approx.structure() {
            NilpotentStructure::Abelian => self.axis_weights.iter().map(|f| f.eval(radius)).collect(),
            NilpotentStructure::Heisenberg => {
                let f: Vec<f64> = self.axis_weights.iter().map(|f| f.eval(radius)).collect();
                vec![f[0], f[1], f[2].max(f[0] * f[1])]
            }
        };
        let mut factors = Vec::new();
        let mut usage = Vec::new();
        for ((j, &xj), (name, theta)) in x.iter().enumerate().zip(gens) {
            if xj != 0 {
                factors.push(CertificateFactor {
                    name: name.clone(),
                    element: *theta,
                    exponent: xj,
                });
            }
            usage.push(if xj == 0 { 0.0 } else { xj.unsigned_abs() as f64 / budgets[j] });
        }
        if d.rep_index != 0 {
            factors.push(CertificateFactor {
                name: coset_name(self.group, d.rep_index),
                element: d.rep,
                exponent: 1,
            });
        }
        let constant = usage.iter().copied().fold(0.0, f64::max);
        Ok(Certificate {
            factors,
            usage,
            constant,
        })
    }
}
