//! Exact arithmetic for the built-in groups.
//!
//! Normal forms:
//!
//! * `ZK { k }`: `(x_1, ..., x_k)`, ordinary addition. `k` is limited to [`MAX_COORDS`].
//! * `Heisenberg3`: `(x_1, x_2, x_3)` with
//!   `(x) * (x') = (x_1 + x_1', x_2 + x_2', x_3 + x_3' + x_1 x_2')`.
//! * `DihedralInf`: `(n, e)` standing for `(uv)^n u^e`, `e` in `{0, 1}`.
//! * `DeltaGroup`: `(n_1, n_2, n_3, e)` standing for
//!   `(s't)^{n_1} (st)^{n_2} (st')^{n_3} s^e`. The three elements `s't, st, st'`
//!   span a normal copy of `Z^3` on which `s` acts by inversion.
//! * `SemidirectZRotZ2`: `(k, n_1, n_2)` with `(k, n) * (k', n') = (k + k', n + rho^k(n'))`
//!   where `rho(a, b) = (-b, a)`.
//!
//! All coordinate arithmetic is checked: an overflow of the `i128` coordinates
//! returns [`Error::Overflow`] instead of wrapping.

mod approx;
mod element;
mod subgroup;

pub use approx::{CosetDecomposition, NilpotentApprox, NilpotentStructure};
pub use element::{GroupElement, MAX_COORDS};
pub use subgroup::{CoordinateMap, Subgroup, SubgroupSpec};
pub(crate) use subgroup::{binomial, l1_sphere_count};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One of the built-in groups.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", try_from = "RawGroupSpec")]
pub enum GroupSpec {
    #[serde(rename = "ZK")]
    ZK { k: usize },
    Heisenberg3,
    DihedralInf,
    DeltaGroup,
    SemidirectZRotZ2,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGroupSpec {
    kind: String,
    #[serde(default)]
    k: Option<usize>,
}

impl TryFrom<RawGroupSpec> for GroupSpec {
    type Error = String;

    fn try_from(raw: RawGroupSpec) -> std::result::Result<Self, String> {
        let spec = match (raw.kind.as_str(), raw.k) {
            ("ZK", Some(k)) => GroupSpec::ZK { k },
            ("ZK", None) => return Err("ZK requires the field `k`".into()),
            (_, Some(_)) => return Err(format!("group kind {} takes no parameter `k`", raw.kind)),
            ("Heisenberg3", None) => GroupSpec::Heisenberg3,
            ("DihedralInf", None) => GroupSpec::DihedralInf,
            ("DeltaGroup", None) => GroupSpec::DeltaGroup,
            ("SemidirectZRotZ2", None) => GroupSpec::SemidirectZRotZ2,
            (other, None) => return Err(format!("unknown group kind {other}")),
        };
        spec.validate().map_err(|e| e.to_string())?;
        Ok(spec)
    }
}

/// A named generator of a group.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Generator {
    pub name: String,
    pub element: GroupElement,
}

/// A letter of a formal word: generator index and exponent sign.
pub type Letter = (usize, i8);

fn add(a: i128, b: i128) -> Result<i128> {
    a.checked_add(b).ok_or(Error::Overflow("addition"))
}

fn sub(a: i128, b: i128) -> Result<i128> {
    a.checked_sub(b).ok_or(Error::Overflow("subtraction"))
}

fn mulc(a: i128, b: i128) -> Result<i128> {
    a.checked_mul(b).ok_or(Error::Overflow("multiplication"))
}

fn neg(a: i128) -> Result<i128> {
    a.checked_neg().ok_or(Error::Overflow("negation"))
}

/// `rho^k (a, b)` for the quarter-turn rotation `rho(a, b) = (-b, a)`.
fn rotate(k: i128, a: i128, b: i128) -> Result<(i128, i128)> {
    Ok(match k.rem_euclid(4) {
        0 => (a, b),
        1 => (neg(b)?, a),
        2 => (neg(a)?, neg(b)?),
        _ => (b, neg(a)?),
    })
}

impl GroupSpec {
    /// Checks the static parameters of the spec.
    pub fn validate(&self) -> Result<()> {
        if let GroupSpec::ZK { k } = *self {
            if k == 0 {
                return Err(Error::MalformedElement("ZK requires k >= 1".into()));
            }
            if k > MAX_COORDS {
                return Err(Error::MalformedElement(format!(
                    "ZK supports k <= {MAX_COORDS}, got {k}"
                )));
            }
        }
        Ok(())
    }

    /// Number of normal-form coordinates.
    pub fn arity(&self) -> usize {
        match *self {
            GroupSpec::ZK { k } => k,
            GroupSpec::Heisenberg3 => 3,
            GroupSpec::DihedralInf => 2,
            GroupSpec::DeltaGroup => 4,
            GroupSpec::SemidirectZRotZ2 => 3,
        }
    }

    /// Position of the `{0,1}`-valued coordinate, if the normal form has one.
    pub fn parity_slot(&self) -> Option<usize> {
        match self {
            GroupSpec::DihedralInf => Some(1),
            GroupSpec::DeltaGroup => Some(3),
            _ => None,
        }
    }

    pub fn name(&self) -> String {
        match *self {
            GroupSpec::ZK { k } => format!("Z^{k}"),
            GroupSpec::Heisenberg3 => "Heisenberg3".into(),
            GroupSpec::DihedralInf => "DihedralInf".into(),
            GroupSpec::DeltaGroup => "DeltaGroup".into(),
            GroupSpec::SemidirectZRotZ2 => "SemidirectZRotZ2".into(),
        }
    }

    pub fn identity(&self) -> GroupElement {
        GroupElement::zero(self.arity())
    }

    /// Validates raw coordinates and wraps them as an element.
    pub fn element(&self, coords: &[i128]) -> Result<GroupElement> {
        if coords.len() != self.arity() {
            return Err(Error::MalformedElement(format!(
                "{} expects {} coordinates, got {}",
                self.name(),
                self.arity(),
                coords.len()
            )));
        }
        let g = GroupElement::from_coords(coords);
        self.check(&g)?;
        Ok(g)
    }

    /// Checks that `g` is a valid normal form for this group.
    pub fn check(&self, g: &GroupElement) -> Result<()> {
        if g.arity() != self.arity() {
            return Err(Error::MalformedElement(format!(
                "{} expects {} coordinates, got {:?}",
                self.name(),
                self.arity(),
                g
            )));
        }
        if let Some(slot) = self.parity_slot() {
            let e = g.coords()[slot];
            if e != 0 && e != 1 {
                return Err(Error::MalformedElement(format!(
                    "parity coordinate must be 0 or 1 in {g:?}"
                )));
            }
        }
        Ok(())
    }

    /// Normal form of `a * b`.
    pub fn mul(&self, a: &GroupElement, b: &GroupElement) -> Result<GroupElement> {
        self.check(a)?;
        self.check(b)?;
        self.mul_unchecked(a, b)
    }

    /// Product without re-validating the operands (overflow is still checked).
    pub(crate) fn mul_unchecked(&self, a: &GroupElement, b: &GroupElement) -> Result<GroupElement> {
        let x = a.coords();
        let y = b.coords();
        let mut out = *a;
        let o = out.coords_mut();
        match *self {
            GroupSpec::ZK { .. } => {
                for i in 0..o.len() {
                    o[i] = add(x[i], y[i])?;
                }
            }
            GroupSpec::Heisenberg3 => {
                o[0] = add(x[0], y[0])?;
                o[1] = add(x[1], y[1])?;
                o[2] = add(add(x[2], y[2])?, mulc(x[0], y[1])?)?;
            }
            GroupSpec::DihedralInf => {
                // (uv)^n u^e (uv)^m u^f = (uv)^{n +- m} u^{e+f}: u conjugates uv to its inverse.
                o[0] = match x[1] {
                    0 => add(x[0], y[0])?,
                    _ => sub(x[0], y[0])?,
                };
                o[1] = x[1] ^ y[1];
            }
            GroupSpec::DeltaGroup => {
                for i in 0..3 {
                    o[i] = match x[3] {
                        0 => add(x[i], y[i])?,
                        _ => sub(x[i], y[i])?,
                    };
                }
                o[3] = x[3] ^ y[3];
            }
            GroupSpec::SemidirectZRotZ2 => {
                let (r1, r2) = rotate(x[0], y[1], y[2])?;
                o[0] = add(x[0], y[0])?;
                o[1] = add(x[1], r1)?;
                o[2] = add(x[2], r2)?;
            }
        }
        Ok(out)
    }

    /// Normal form of `a^{-1}`.
    pub fn inv(&self, a: &GroupElement) -> Result<GroupElement> {
        self.check(a)?;
        let x = a.coords();
        let mut out = *a;
        let o = out.coords_mut();
        match *self {
            GroupSpec::ZK { .. } => {
                for i in 0..o.len() {
                    o[i] = neg(x[i])?;
                }
            }
            GroupSpec::Heisenberg3 => {
                o[0] = neg(x[0])?;
                o[1] = neg(x[1])?;
                o[2] = sub(mulc(x[0], x[1])?, x[2])?;
            }
            GroupSpec::DihedralInf => {
                if x[1] == 0 {
                    o[0] = neg(x[0])?;
                }
            }
            GroupSpec::DeltaGroup => {
                if x[3] == 0 {
                    for i in 0..3 {
                        o[i] = neg(x[i])?;
                    }
                }
            }
            GroupSpec::SemidirectZRotZ2 => {
                let k = neg(x[0])?;
                let (r1, r2) = rotate(k, x[1], x[2])?;
                o[0] = k;
                o[1] = neg(r1)?;
                o[2] = neg(r2)?;
            }
        }
        Ok(out)
    }

    /// `a^n` by binary exponentiation; negative exponents use the inverse.
    pub fn pow(&self, a: &GroupElement, n: i128) -> Result<GroupElement> {
        self.check(a)?;
        let mut base = if n < 0 { self.inv(a)? } else { *a };
        let mut e = n.unsigned_abs();
        let mut acc = self.identity();
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul_unchecked(&acc, &base)?;
            }
            e >>= 1;
            if e > 0 {
                base = self.mul_unchecked(&base, &base)?;
            }
        }
        Ok(acc)
    }

    /// The standard generating tuple `S_0` of the group.
    pub fn generators(&self) -> Vec<Generator> {
        let g = |name: &str, c: &[i128]| Generator {
            name: name.to_string(),
            element: GroupElement::from_coords(c),
        };
        match *self {
            GroupSpec::ZK { k } => (0..k)
                .map(|i| {
                    let mut c = vec![0i128; k];
                    c[i] = 1;
                    g(&format!("e{}", i + 1), &c)
                })
                .collect(),
            GroupSpec::Heisenberg3 => vec![
                g("s1", &[1, 0, 0]),
                g("s2", &[0, 1, 0]),
                g("s3", &[0, 0, 1]),
            ],
            GroupSpec::DihedralInf => vec![g("u", &[0, 1]), g("v", &[-1, 1])],
            GroupSpec::DeltaGroup => vec![
                g("s", &[0, 0, 0, 1]),
                g("s'", &[1, -1, 0, 1]),
                g("t", &[0, -1, 0, 1]),
                g("t'", &[0, 0, -1, 1]),
            ],
            GroupSpec::SemidirectZRotZ2 => vec![
                g("s", &[1, 0, 0]),
                g("v1", &[0, 1, 0]),
                g("v2", &[0, 0, 1]),
            ],
        }
    }

    /// Index of the standard generator called `name`.
    pub fn generator_id(&self, name: &str) -> Option<usize> {
        self.generators().iter().position(|g| g.name == name)
    }

    /// Evaluates a word over the standard generators, left to right.
    pub fn evaluate_word(&self, letters: &[Letter]) -> Result<GroupElement> {
        let gens: Vec<GroupElement> = self.generators().into_iter().map(|g| g.element).collect();
        self.evaluate_word_over(&gens, letters)
    }

    /// Evaluates a word over an arbitrary generating tuple.
    pub fn evaluate_word_over(
        &self,
        generators: &[GroupElement],
        letters: &[Letter],
    ) -> Result<GroupElement> {
        let mut acc = self.identity();
        for &(id, sign) in letters {
            let g = generators.get(id).ok_or(Error::UnknownGenerator(id))?;
            let step = match sign {
                1 => *g,
                -1 => self.inv(g)?,
                _ => {
                    return Err(Error::MalformedElement(format!(
                        "letter exponent must be +1 or -1, got {sign}"
                    )))
                }
            };
            acc = self.mul(&acc, &step)?;
        }
        Ok(acc)
    }

    /// Parses a word such as `"s1 s2 s1^-1 s2^-1"` over the standard generator names.
    pub fn parse_word(&self, text: &str) -> Result<Vec<Letter>> {
        let mut out = Vec::new();
        for tok in text.split_whitespace() {
            let (name, sign) = match tok.strip_suffix("^-1") {
                Some(n) => (n, -1),
                None => (tok, 1),
            };
            let id = self
                .generator_id(name)
                .ok_or_else(|| Error::MalformedElement(format!("unknown generator name {name}")))?;
            out.push((id, sign));
        }
        Ok(out)
    }
}
