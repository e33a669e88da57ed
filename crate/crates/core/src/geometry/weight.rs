//! Weight functions `F_s`, jump profiles `phi` and the transform `phi -> Phi`.

use std::cmp::Ordering;
use std::f64::consts::E;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{expm1_over, integrate_log, invert_increasing};

const INDEX_TOL: f64 = 1e-12;

/// Regular-variation index at infinity: `t^power (log t)^log_power (log log t)^loglog_power`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct RegIndex {
    pub power: f64,
    pub log_power: f64,
    pub loglog_power: f64,
}

impl RegIndex {
    pub const fn power(p: f64) -> Self {
        RegIndex {
            power: p,
            log_power: 0.0,
            loglog_power: 0.0,
        }
    }

    pub const fn new(power: f64, log_power: f64, loglog_power: f64) -> Self {
        RegIndex {
            power,
            log_power,
            loglog_power,
        }
    }

    /// Lexicographic comparison with a small tolerance on each component.
    pub fn compare(&self, other: &RegIndex) -> Ordering {
        for (a, b) in [
            (self.power, other.power),
            (self.log_power, other.log_power),
            (self.loglog_power, other.loglog_power),
        ] {
            if (a - b).abs() > INDEX_TOL {
                return a.partial_cmp(&b).unwrap_or(Ordering::Equal);
            }
        }
        Ordering::Equal
    }

    pub fn same_class(&self, other: &RegIndex) -> bool {
        self.compare(other) == Ordering::Equal
    }

    /// Index of the inverse function.
    pub fn inverse(&self) -> RegIndex {
        RegIndex {
            power: 1.0 / self.power,
            log_power: -self.log_power / self.power,
            loglog_power: -self.loglog_power / self.power,
        }
    }

    pub fn max(self, other: RegIndex) -> RegIndex {
        if self.compare(&other) == Ordering::Less {
            other
        } else {
            self
        }
    }

    pub fn add(self, other: RegIndex) -> RegIndex {
        RegIndex {
            power: self.power + other.power,
            log_power: self.log_power + other.log_power,
            loglog_power: self.loglog_power + other.loglog_power,
        }
    }

    pub fn scale(self, k: f64) -> RegIndex {
        RegIndex {
            power: self.power * k,
            log_power: self.log_power * k,
            loglog_power: self.loglog_power * k,
        }
    }
}

/// The profile `phi_i` of a jump component.
///
/// Masses use `phi(1 + |h|)` evaluated as `(1 + |h|)^alpha` (resp. `(1+|h|)^w log(e+1+|h|)^beta`);
/// the transform `Phi` integrates `phi(s) = (1 + s)^alpha` for the power family and the
/// linearly extended `s^w log(e+s)^beta` for the power-log family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "camelCase", deny_unknown_fields)]
pub enum JumpProfile {
    Power { alpha: f64 },
    PowerLog { w: f64, beta: f64 },
}

/// Upper bound of `t / ((e + t) ln(e + t))` over `t >= 1`, used for monotonicity checks.
const LOG_SLOPE_BOUND: f64 = 0.3;

impl JumpProfile {
    pub fn validate(&self) -> Result<()> {
        match *self {
            JumpProfile::Power { alpha } => {
                if !(alpha.is_finite() && alpha > 0.0) {
                    return Err(Error::InvalidWeight(format!(
                        "phi must have positive index, got alpha = {alpha}"
                    )));
                }
            }
            JumpProfile::PowerLog { w, beta } => {
                if !(w.is_finite() && w > 0.0 && beta.is_finite()) {
                    return Err(Error::InvalidWeight(format!(
                        "phi must have positive index, got w = {w}, beta = {beta}"
                    )));
                }
                if w + beta.min(0.0) * LOG_SLOPE_BOUND <= 0.0 {
                    return Err(Error::InvalidWeight(format!(
                        "power-log profile with w = {w}, beta = {beta} is not increasing"
                    )));
                }
            }
        }
        Ok(())
    }

    /// `phi(s)` as used inside the `Phi` integral.
    pub fn phi(&self, s: f64) -> f64 {
        match *self {
            JumpProfile::Power { alpha } => (alpha * s.ln_1p()).exp(),
            JumpProfile::PowerLog { w, beta } => {
                if s >= 1.0 {
                    s.powf(w) * (E + s).ln().powf(beta)
                } else {
                    s * (E + 1.0).ln().powf(beta)
                }
            }
        }
    }

    /// `phi(1 + r)` in the mass formula of a component.
    pub fn mass_factor(&self, r: f64) -> f64 {
        let t = 1.0 + r;
        match *self {
            JumpProfile::Power { alpha } => t.powf(alpha),
            JumpProfile::PowerLog { w, beta } => t.powf(w) * (E + t).ln().powf(beta),
        }
    }

    pub fn index(&self) -> RegIndex {
        match *self {
            JumpProfile::Power { alpha } => RegIndex::power(alpha),
            JumpProfile::PowerLog { w, beta } => RegIndex::new(w, beta, 0.0),
        }
    }

    /// Index of `Phi`: `phi`'s index below 2, saturated at 2 above.
    pub fn phi_cap_index(&self) -> RegIndex {
        let near_two = |w: f64| (w - 2.0).abs() <= INDEX_TOL;
        match *self {
            JumpProfile::Power { alpha } => {
                if near_two(alpha) {
                    RegIndex::new(2.0, -1.0, 0.0)
                } else if alpha < 2.0 {
                    RegIndex::power(alpha)
                } else {
                    RegIndex::power(2.0)
                }
            }
            JumpProfile::PowerLog { w, beta } => {
                if near_two(w) {
                    if (beta - 1.0).abs() <= INDEX_TOL {
                        RegIndex::new(2.0, 0.0, -1.0)
                    } else if beta < 1.0 {
                        RegIndex::new(2.0, beta - 1.0, 0.0)
                    } else {
                        RegIndex::power(2.0)
                    }
                } else if w < 2.0 {
                    RegIndex::new(w, beta, 0.0)
                } else {
                    RegIndex::power(2.0)
                }
            }
        }
    }

    /// `int_0^t 2s / phi(s) ds`.
    fn phi_integral(&self, t: f64) -> f64 {
        match *self {
            JumpProfile::Power { alpha } => {
                // u = 1 + s: 2 int_1^{1+t} (u - 1) u^{-alpha} du
                let l = t.ln_1p();
                2.0 * (expm1_over(2.0 - alpha, l) - expm1_over(1.0 - alpha, l))
            }
            JumpProfile::PowerLog { .. } => {
                let head = 2.0 / self.phi(1.0) * t.min(1.0);
                if t <= 1.0 {
                    head
                } else {
                    head + integrate_log(|s| 2.0 * s / self.phi(s), 1.0, t)
                }
            }
        }
    }

    /// `Phi(t) = t^2 / int_0^t 2s/phi(s) ds` on `[1, inf)`, linear on `[0, 1]`.
    pub fn phi_cap(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        if t < 1.0 {
            return self.phi_cap(1.0) * t;
        }
        t * t / self.phi_integral(t)
    }
}

/// A weight function `F_s`: positive, increasing, `F(0) = 0`, linear-like on `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "camelCase", deny_unknown_fields)]
pub enum WeightFunction {
    /// `(1 + t)^w - 1`.
    Power { w: f64 },
    /// `t^w log(e + t)^beta` for `t >= 1`, extended linearly to `[0, 1]`.
    PowerLog { w: f64, beta: f64 },
    /// `(1 + t)^{1/2} - 1`, comparable to `min(t, sqrt t)`.
    LinearSqrtCap,
    /// The transform `Phi` of a jump profile.
    Phi { profile: JumpProfile },
    Inverse { of: Box<WeightFunction> },
    Max { of: Vec<WeightFunction> },
    Product { of: Vec<WeightFunction> },
}

/// `(1 + t)^p - 1`: `expm1` near zero, a direct power otherwise so that integer
/// arguments with integer exponents stay exact.
fn pow_minus_one(t: f64, p: f64) -> f64 {
    if t < 1.0 {
        (p * t.ln_1p()).exp_m1()
    } else {
        (1.0 + t).powf(p) - 1.0
    }
}

/// The transform `phi -> Phi`, validated.
pub fn phi_to_phi_cap(profile: &JumpProfile) -> Result<WeightFunction> {
    profile.validate()?;
    Ok(WeightFunction::Phi { profile: *profile })
}

/// `Phi_0(t) = max(t, t^2)`, whose inverse is realized as [`WeightFunction::LinearSqrtCap`].
pub fn phi0_inverse() -> WeightFunction {
    WeightFunction::LinearSqrtCap
}

impl WeightFunction {
    pub fn validate(&self) -> Result<()> {
        match self {
            WeightFunction::Power { w } => {
                if !(w.is_finite() && *w > 0.0) {
                    return Err(Error::InvalidWeight(format!("power weight needs w > 0, got {w}")));
                }
            }
            WeightFunction::PowerLog { w, beta } => {
                JumpProfile::PowerLog { w: *w, beta: *beta }.validate()?;
            }
            WeightFunction::LinearSqrtCap => {}
            WeightFunction::Phi { profile } => profile.validate()?,
            WeightFunction::Inverse { of } => of.validate()?,
            WeightFunction::Max { of } | WeightFunction::Product { of } => {
                if of.is_empty() {
                    return Err(Error::InvalidWeight("empty combination".into()));
                }
                for f in of {
                    f.validate()?;
                }
            }
        }
        Ok(())
    }

    pub fn eval(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        match self {
            WeightFunction::Power { w } => pow_minus_one(t, *w),
            WeightFunction::PowerLog { w, beta } => {
                if t >= 1.0 {
                    t.powf(*w) * (E + t).ln().powf(*beta)
                } else {
                    t * (E + 1.0).ln().powf(*beta)
                }
            }
            WeightFunction::LinearSqrtCap => pow_minus_one(t, 0.5),
            WeightFunction::Phi { profile } => profile.phi_cap(t),
            WeightFunction::Inverse { of } => of.inverse(t),
            WeightFunction::Max { of } => of.iter().map(|f| f.eval(t)).fold(0.0, f64::max),
            WeightFunction::Product { of } => of.iter().map(|f| f.eval(t)).product(),
        }
    }

    pub fn inverse(&self, y: f64) -> f64 {
        if y <= 0.0 {
            return 0.0;
        }
        match self {
            WeightFunction::Power { w } => pow_minus_one(y, 1.0 / w),
            WeightFunction::LinearSqrtCap => pow_minus_one(y, 2.0),
            WeightFunction::Inverse { of } => of.eval(y),
            WeightFunction::Max { of } => of
                .iter()
                .map(|f| f.inverse(y))
                .fold(f64::INFINITY, f64::min),
            _ => invert_increasing(|t| self.eval(t), y),
        }
    }

    pub fn index(&self) -> RegIndex {
        match self {
            WeightFunction::Power { w } => RegIndex::power(*w),
            WeightFunction::PowerLog { w, beta } => RegIndex::new(*w, *beta, 0.0),
            WeightFunction::LinearSqrtCap => RegIndex::power(0.5),
            WeightFunction::Phi { profile } => profile.phi_cap_index(),
            WeightFunction::Inverse { of } => of.index().inverse(),
            WeightFunction::Max { of } => of
                .iter()
                .map(WeightFunction::index)
                .reduce(RegIndex::max)
                .unwrap_or(RegIndex::power(0.0)),
            WeightFunction::Product { of } => of
                .iter()
                .map(WeightFunction::index)
                .reduce(RegIndex::add)
                .unwrap_or(RegIndex::power(0.0)),
        }
    }

    /// Pointwise maximum, flattening nested maxima and dropping exact duplicates.
    pub fn max_of(functions: Vec<WeightFunction>) -> WeightFunction {
        let mut flat: Vec<WeightFunction> = Vec::new();
        for f in functions {
            let parts = match f {
                WeightFunction::Max { of } => of,
                other => vec![other],
            };
            for p in parts {
                if !flat.contains(&p) {
                    flat.push(p);
                }
            }
        }
        if flat.len() == 1 {
            flat.pop().expect("one element")
        } else {
            WeightFunction::Max { of: flat }
        }
    }

    pub fn inverse_of(f: WeightFunction) -> WeightFunction {
        match f {
            WeightFunction::Inverse { of } => *of,
            other => WeightFunction::Inverse { of: Box::new(other) },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn phi_of_cauchy_profile_at_one() {
        let f = phi_to_phi_cap(&JumpProfile::Power { alpha: 1.0 }).unwrap();
        let expect = 1.0 / (2.0 * (1.0 - 2f64.ln()));
        assert!((f.eval(1.0) - expect).abs() < 1e-14);
        assert!((expect - 1.62945).abs() < 1e-5);
    }

    #[test]
    fn phi_closed_form_matches_quadrature() {
        for alpha in [0.3, 0.5, 1.0, 1.5, 1.999_999_9, 2.0, 2.5, 3.7] {
            let p = JumpProfile::Power { alpha };
            for t in [1.0, 2.0, 17.0, 1e3, 1e6] {
                let numeric = integrate_log(|s| 2.0 * s / p.phi(s), 1e-12, t)
                    + 2.0 * 1e-12f64.powi(2) / 2.0;
                let closed = p.phi_integral(t);
                assert!(
                    (numeric / closed - 1.0).abs() < 1e-9,
                    "alpha={alpha} t={t}: {numeric} vs {closed}"
                );
            }
        }
    }

    #[test]
    fn phi_indices() {
        let idx = |a: f64| JumpProfile::Power { alpha: a }.phi_cap_index();
        assert_eq!(idx(1.5), RegIndex::power(1.5));
        assert_eq!(idx(3.0), RegIndex::power(2.0));
        assert_eq!(idx(2.0), RegIndex::new(2.0, -1.0, 0.0));
        // the numerical slope of log Phi agrees with the index
        for a in [0.5, 1.0, 1.5, 2.5] {
            let p = JumpProfile::Power { alpha: a };
            let (t1, t2) = (1e8, 1e9);
            let slope = (p.phi_cap(t2) / p.phi_cap(t1)).ln() / (t2 / t1).ln();
            assert!((slope - idx(a).power).abs() < 0.02, "alpha={a}: {slope}");
        }
    }

    #[test]
    fn power_log_ordering() {
        let pl = JumpProfile::PowerLog { w: 2.0, beta: -1.0 }.phi_cap_index();
        let p2 = JumpProfile::Power { alpha: 2.0 }.phi_cap_index();
        assert_eq!(pl.compare(&p2), Ordering::Less);
    }

    #[test]
    fn power_log_phi_is_increasing_and_invertible() {
        let f = phi_to_phi_cap(&JumpProfile::PowerLog { w: 1.2, beta: 0.7 }).unwrap();
        let mut prev = 0.0;
        for i in 1..60 {
            let t = 1.3f64.powi(i);
            let v = f.eval(t);
            assert!(v > prev);
            prev = v;
            let back = f.inverse(v);
            assert!((back / t - 1.0).abs() < 1e-10, "t={t}");
        }
    }

    #[test]
    fn non_increasing_profiles_rejected() {
        assert!(phi_to_phi_cap(&JumpProfile::Power { alpha: 0.0 }).is_err());
        assert!(phi_to_phi_cap(&JumpProfile::Power { alpha: -1.0 }).is_err());
        assert!(phi_to_phi_cap(&JumpProfile::PowerLog { w: 0.1, beta: -5.0 }).is_err());
    }

    #[test]
    fn inverse_round_trip_all_families() {
        let fams = vec![
            WeightFunction::Power { w: 0.7 },
            WeightFunction::Power { w: 3.0 },
            WeightFunction::PowerLog { w: 1.5, beta: -0.5 },
            WeightFunction::LinearSqrtCap,
            phi_to_phi_cap(&JumpProfile::Power { alpha: 1.0 }).unwrap(),
            WeightFunction::inverse_of(phi_to_phi_cap(&JumpProfile::Power { alpha: 0.5 }).unwrap()),
            WeightFunction::max_of(vec![WeightFunction::LinearSqrtCap, WeightFunction::Power { w: 1.0 }]),
            WeightFunction::Product {
                of: vec![WeightFunction::Power { w: 1.0 }, WeightFunction::Power { w: 2.0 }],
            },
        ];
        for f in &fams {
            for t in [0.0, 1e-6, 0.3, 1.0, 7.5, 1234.0, 1e6, 1e9] {
                let back = f.inverse(f.eval(t));
                let err = if t == 0.0 { back } else { (back - t).abs() / t };
                assert!(err <= 1e-10, "{f:?} t={t} back={back}");
            }
        }
    }

    #[test]
    fn linear_near_zero() {
        let f = WeightFunction::inverse_of(phi_to_phi_cap(&JumpProfile::Power { alpha: 1.0 }).unwrap());
        let slope = f.eval(1e-3) / 1e-3;
        assert!((f.eval(0.5) / 0.5 - slope).abs() < 1e-12);
    }

    #[test]
    fn serde_round_trip() {
        let f = WeightFunction::inverse_of(phi_to_phi_cap(&JumpProfile::Power { alpha: 1.0 }).unwrap());
        let s = serde_json::to_string(&f).unwrap();
        assert_eq!(s, r#"{"family":"inverse","of":{"family":"phi","profile":{"family":"power","alpha":1.0}}}"#);
        let back: WeightFunction = serde_json::from_str(&s).unwrap();
        assert_eq!(back, f);
    }
}
