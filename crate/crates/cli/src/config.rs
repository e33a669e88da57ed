//! Experiment configuration files: strict parsing, semantic validation, and
//! translation into library objects.

use std::fmt;

use longjump::geometry::{AdaptedGeometry, JumpProfile};
use longjump::group::{GroupElement, GroupSpec, NilpotentApprox, SubgroupSpec};
use longjump::kernel::TruncationPolicy;
use longjump::measures::{Atom, JumpComponentSpec, Measure, MeasureSpec};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct ExperimentConfig {
    pub group: GroupSpec,
    pub subgroups: Vec<SubgroupSpec>,
    #[serde(default = "default_approx")]
    pub nilpotent_approx: String,
    pub measure: MeasureConfig,
    /// Overrides the exponent `w_*` chosen by the geometry builder.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub w_star: Option<f64>,
    /// Power weights on the generators of `N`, replacing the weights derived from the measure.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub axis_weights: Option<Vec<f64>>,
    pub experiment: Experiment,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub policy: Option<TruncationPolicy>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<String>,
}

fn default_approx() -> String {
    "builtin".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct MeasureConfig {
    pub components: Vec<ComponentConfig>,
    #[serde(default)]
    pub p0: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu0: Option<Vec<Atom>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shell_cap: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct ComponentConfig {
    pub p: f64,
    /// Index into `subgroups`.
    pub subgroup: usize,
    pub phi: JumpProfile,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub identity_mass: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReturnMethod {
    Kernel,
    Collision,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct OvershootConfig {
    pub r: f64,
    /// Values of `s / r`, each at least 2.
    pub multiples: Vec<f64>,
    pub walkers: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct HolderGridPoint {
    pub m1: u64,
    pub m2: u64,
    pub y: GroupElement,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", rename_all_fields = "camelCase", deny_unknown_fields)]
pub enum Experiment {
    ReturnExponent {
        n_range: Vec<u64>,
        method: ReturnMethod,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        walkers: Option<usize>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        tolerance: Option<f64>,
    },
    GeometryAudit {
        r_range: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        tolerance: Option<f64>,
    },
    NearDiagonal {
        n: u64,
        eta: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        max_ratio: Option<f64>,
    },
    Control {
        n_range: Vec<u64>,
        walkers: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        max_spread: Option<f64>,
    },
    Exit {
        r_range: Vec<f64>,
        walkers: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        max_spread: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        overshoot: Option<OvershootConfig>,
    },
    Holder {
        n0: u64,
        grid: Vec<HolderGridPoint>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        min_r2: Option<f64>,
    },
    Spectral {
        r_range: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        iterations: Option<usize>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        max_spread: Option<f64>,
    },
    Poincare {
        trials: usize,
        shifts: Vec<GroupElement>,
    },
}

impl Experiment {
    pub fn kind(&self) -> &'static str {
        match self {
            Experiment::ReturnExponent { .. } => "return-exponent",
            Experiment::GeometryAudit { .. } => "geometry-audit",
            Experiment::NearDiagonal { .. } => "near-diagonal",
            Experiment::Control { .. } => "control",
            Experiment::Exit { .. } => "exit",
            Experiment::Holder { .. } => "holder",
            Experiment::Spectral { .. } => "spectral",
            Experiment::Poincare { .. } => "poincare",
        }
    }

    pub fn is_stochastic(&self) -> bool {
        matches!(
            self,
            Experiment::ReturnExponent { method: ReturnMethod::Collision, .. }
                | Experiment::Control { .. }
                | Experiment::Exit { .. }
                | Experiment::Poincare { .. }
        )
    }
}

/// A problem located by a JSON pointer into the configuration document.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FieldError {
    pub pointer: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub errors: Vec<FieldError>,
}

impl ConfigError {
    fn single(pointer: impl Into<String>, message: impl Into<String>) -> Self {
        ConfigError {
            errors: vec![FieldError {
                pointer: pointer.into(),
                message: message.into(),
            }],
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, e) in self.errors.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            let at = if e.pointer.is_empty() { "(root)" } else { e.pointer.as_str() };
            write!(f, "{at}: {}", e.message)?;
        }
        Ok(())
    }
}

impl std::error::Error for ConfigError {}

fn pointer_of(path: &serde_path_to_error::Path) -> String {
    use serde_path_to_error::Segment;
    let mut out = String::new();
    for seg in path.iter() {
        match seg {
            Segment::Seq { index } => out.push_str(&format!("/{index}")),
            Segment::Map { key } => out.push_str(&format!("/{}", key.replace('~', "~0").replace('/', "~1"))),
            Segment::Enum { variant } => out.push_str(&format!("/{variant}")),
            Segment::Unknown => {}
        }
    }
    out
}

/// Parses and validates a configuration document.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let cfg: ExperimentConfig = serde_path_to_error::deserialize(de)
        .map_err(|e| ConfigError::single(pointer_of(e.path()), e.inner().to_string()))?;
    cfg.validate()?;
    Ok(cfg)
}

/// Canonical text of a configuration: pretty JSON with a trailing newline.
pub fn to_canonical_json(cfg: &ExperimentConfig) -> String {
    let mut s = serde_json::to_string_pretty(cfg).expect("configurations always serialize");
    s.push('\n');
    s
}

fn check_range<T: PartialOrd + Copy>(errors: &mut Vec<FieldError>, pointer: &str, xs: &[T], min_len: usize, positive: impl Fn(T) -> bool) {
    if xs.len() < min_len {
        errors.push(FieldError {
            pointer: pointer.into(),
            message: format!("needs at least {min_len} entries, got {}", xs.len()),
        });
    }
    if xs.windows(2).any(|w| w[0] >= w[1]) {
        errors.push(FieldError {
            pointer: pointer.into(),
            message: "entries must be strictly increasing".into(),
        });
    }
    for (i, &x) in xs.iter().enumerate() {
        if !positive(x) {
            errors.push(FieldError {
                pointer: format!("{pointer}/{i}"),
                message: "must be positive".into(),
            });
        }
    }
}

fn check_positive(errors: &mut Vec<FieldError>, pointer: &str, x: f64) {
    if !(x.is_finite() && x > 0.0) {
        errors.push(FieldError {
            pointer: pointer.into(),
            message: format!("must be a positive number, got {x}"),
        });
    }
}

fn check_element(errors: &mut Vec<FieldError>, pointer: &str, group: GroupSpec, g: &GroupElement) {
    if let Err(e) = group.check(g) {
        errors.push(FieldError {
            pointer: pointer.into(),
            message: e.to_string(),
        });
    }
}

impl ExperimentConfig {
    /// Semantic checks that the type system cannot express. All problems are reported together.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let mut errors = Vec::new();
        let mut err = |pointer: String, message: String| errors.push(FieldError { pointer, message });
        if self.nilpotent_approx != "builtin" {
            err(
                "/nilpotentApprox".into(),
                format!("only \"builtin\" is supported, got {:?}", self.nilpotent_approx),
            );
        }
        if self.subgroups.is_empty() {
            err("/subgroups".into(), "at least one subgroup is required".into());
        }
        for (i, s) in self.subgroups.iter().enumerate() {
            for (j, g) in s.generators.iter().enumerate() {
                check_element(&mut errors, &format!("/subgroups/{i}/generators/{j}"), self.group, g);
            }
        }
        let mut err = |pointer: String, message: String| errors.push(FieldError { pointer, message });
        if self.measure.components.is_empty() && self.measure.p0 == 0.0 {
            err(
                "/measure/components".into(),
                "at least one component is required unless p0 is positive".into(),
            );
        }
        for (i, c) in self.measure.components.iter().enumerate() {
            let at = format!("/measure/components/{i}");
            if c.subgroup >= self.subgroups.len() {
                err(
                    format!("{at}/subgroup"),
                    format!("refers to subgroup {} but only {} are declared", c.subgroup, self.subgroups.len()),
                );
            }
            if !(c.p.is_finite() && c.p > 0.0) {
                err(format!("{at}/p"), format!("must be positive, got {}", c.p));
            }
            match c.phi {
                JumpProfile::Power { alpha } if !(alpha.is_finite() && alpha > 0.0) => {
                    err(format!("{at}/phi/alpha"), format!("index must be positive, got {alpha}"))
                }
                JumpProfile::PowerLog { w, .. } if !(w.is_finite() && w > 0.0) => {
                    err(format!("{at}/phi/w"), format!("index must be positive, got {w}"))
                }
                _ => {}
            }
        }
        if !(0.0..=1.0).contains(&self.measure.p0) {
            err("/measure/p0".into(), format!("must lie in [0, 1], got {}", self.measure.p0));
        }
        if let Some(w) = self.w_star {
            if !(w.is_finite() && w > 0.0) {
                err("/wStar".into(), format!("must be positive, got {w}"));
            }
        }
        if let Some(ws) = &self.axis_weights {
            for (i, &w) in ws.iter().enumerate() {
                if !(w.is_finite() && w > 0.0) {
                    err(format!("/axisWeights/{i}"), format!("must be positive, got {w}"));
                }
            }
        }
        if let Some(p) = &self.policy {
            if let Err(e) = p.validate() {
                err("/policy".into(), e.to_string());
            }
        }
        if self.experiment.is_stochastic() && self.seed.is_none() {
            err(
                "/seed".into(),
                format!("experiment {} is stochastic and needs a seed", self.experiment.kind()),
            );
        }
        self.validate_experiment(&mut errors);
        if errors.is_empty() {
            Ok(())
        } else {
            Err(ConfigError { errors })
        }
    }

    fn validate_experiment(&self, errors: &mut Vec<FieldError>) {
        let pos_u = |n: u64| n > 0;
        let pos_f = |x: f64| x.is_finite() && x > 0.0;
        let walkers_ok = |errors: &mut Vec<FieldError>, at: &str, w: usize| {
            if w < 2 {
                errors.push(FieldError {
                    pointer: at.into(),
                    message: "at least 2 walkers are needed".into(),
                });
            }
        };
        match &self.experiment {
            Experiment::ReturnExponent { n_range, method, walkers, tolerance } => {
                check_range(errors, "/experiment/nRange", n_range, 3, pos_u);
                if *method == ReturnMethod::Collision {
                    match walkers {
                        Some(w) => walkers_ok(errors, "/experiment/walkers", *w),
                        None => errors.push(FieldError {
                            pointer: "/experiment/walkers".into(),
                            message: "the collision method needs a walker count".into(),
                        }),
                    }
                }
                if let Some(t) = tolerance {
                    check_positive(errors, "/experiment/tolerance", *t);
                }
            }
            Experiment::GeometryAudit { r_range, tolerance } => {
                check_range(errors, "/experiment/rRange", r_range, 3, pos_f);
                if let Some(t) = tolerance {
                    check_positive(errors, "/experiment/tolerance", *t);
                }
            }
            Experiment::NearDiagonal { n, eta, max_ratio } => {
                if *n == 0 {
                    errors.push(FieldError {
                        pointer: "/experiment/n".into(),
                        message: "must be positive".into(),
                    });
                }
                check_positive(errors, "/experiment/eta", *eta);
                if let Some(r) = max_ratio {
                    check_positive(errors, "/experiment/maxRatio", *r);
                }
            }
            Experiment::Control { n_range, walkers, max_spread } => {
                check_range(errors, "/experiment/nRange", n_range, 1, pos_u);
                walkers_ok(errors, "/experiment/walkers", *walkers);
                if let Some(s) = max_spread {
                    check_positive(errors, "/experiment/maxSpread", *s);
                }
            }
            Experiment::Exit { r_range, walkers, max_spread, overshoot } => {
                check_range(errors, "/experiment/rRange", r_range, 1, pos_f);
                walkers_ok(errors, "/experiment/walkers", *walkers);
                if let Some(s) = max_spread {
                    check_positive(errors, "/experiment/maxSpread", *s);
                }
                if let Some(o) = overshoot {
                    check_positive(errors, "/experiment/overshoot/r", o.r);
                    check_range(errors, "/experiment/overshoot/multiples", &o.multiples, 3, pos_f);
                    for (i, &k) in o.multiples.iter().enumerate() {
                        if k < 2.0 {
                            errors.push(FieldError {
                                pointer: format!("/experiment/overshoot/multiples/{i}"),
                                message: format!("must be at least 2, got {k}"),
                            });
                        }
                    }
                    walkers_ok(errors, "/experiment/overshoot/walkers", o.walkers);
                    if let Some(t) = o.tolerance {
                        check_positive(errors, "/experiment/overshoot/tolerance", t);
                    }
                }
            }
            Experiment::Holder { n0, grid, min_r2 } => {
                if *n0 == 0 {
                    errors.push(FieldError {
                        pointer: "/experiment/n0".into(),
                        message: "must be positive".into(),
                    });
                }
                if grid.len() < 3 {
                    errors.push(FieldError {
                        pointer: "/experiment/grid".into(),
                        message: format!("needs at least 3 points, got {}", grid.len()),
                    });
                }
                for (i, p) in grid.iter().enumerate() {
                    if p.m1 < *n0 || p.m2 < *n0 {
                        errors.push(FieldError {
                            pointer: format!("/experiment/grid/{i}"),
                            message: format!("m1 and m2 must be at least n0 = {n0}"),
                        });
                    }
                    check_element(errors, &format!("/experiment/grid/{i}/y"), self.group, &p.y);
                }
                if let Some(r) = min_r2 {
                    if !(0.0..=1.0).contains(r) {
                        errors.push(FieldError {
                            pointer: "/experiment/minR2".into(),
                            message: format!("must lie in [0, 1], got {r}"),
                        });
                    }
                }
            }
            Experiment::Spectral { r_range, iterations, max_spread } => {
                check_range(errors, "/experiment/rRange", r_range, 1, pos_f);
                if *iterations == Some(0) {
                    errors.push(FieldError {
                        pointer: "/experiment/iterations".into(),
                        message: "must be positive".into(),
                    });
                }
                if let Some(s) = max_spread {
                    check_positive(errors, "/experiment/maxSpread", *s);
                }
            }
            Experiment::Poincare { trials, shifts } => {
                if *trials == 0 {
                    errors.push(FieldError {
                        pointer: "/experiment/trials".into(),
                        message: "must be positive".into(),
                    });
                }
                if shifts.is_empty() {
                    errors.push(FieldError {
                        pointer: "/experiment/shifts".into(),
                        message: "at least one shift is required".into(),
                    });
                }
                for (i, h) in shifts.iter().enumerate() {
                    check_element(errors, &format!("/experiment/shifts/{i}"), self.group, h);
                }
            }
        }
    }

    pub fn measure_spec(&self) -> MeasureSpec {
        MeasureSpec {
            components: self
                .measure
                .components
                .iter()
                .map(|c| JumpComponentSpec {
                    p: c.p,
                    subgroup: self.subgroups[c.subgroup].clone(),
                    phi: c.phi,
                    identity_mass: c.identity_mass,
                })
                .collect(),
            p0: self.measure.p0,
            mu0: self.measure.mu0.clone(),
            shell_cap: self.measure.shell_cap,
        }
    }

    pub fn build_measure(&self) -> Result<Measure, ConfigError> {
        Measure::build(self.group, &self.measure_spec()).map_err(|e| ConfigError::single("/measure", e.to_string()))
    }

    pub fn build_geometry(&self, measure: &Measure) -> Result<AdaptedGeometry, ConfigError> {
        match &self.axis_weights {
            Some(ws) => {
                let approx = NilpotentApprox::builtin(self.group).map_err(|e| ConfigError::single("/group", e.to_string()))?;
                AdaptedGeometry::from_axis_weights(&approx, ws, self.w_star)
                    .map_err(|e| ConfigError::single("/axisWeights", e.to_string()))
            }
            None => measure
                .adapted_geometry(self.w_star)
                .map_err(|e| ConfigError::single(if self.w_star.is_some() { "/wStar" } else { "/measure" }, e.to_string())),
        }
    }

    pub fn policy(&self) -> TruncationPolicy {
        self.policy.unwrap_or_else(|| TruncationPolicy::default_for(self.group))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "group": {"kind": "ZK", "k": 1},
        "subgroups": [{"generators": [[1]], "coordinateMap": "lattice"}],
        "measure": {"components": [{"p": 1.0, "subgroup": 0, "phi": {"family": "power", "alpha": 1.0}}]},
        "experiment": {"kind": "return-exponent", "nRange": [16, 32, 64], "method": "kernel"}
    }"#;

    #[test]
    fn defaults_are_filled_in() {
        let cfg = parse_config(MINIMAL).unwrap();
        assert_eq!(cfg.nilpotent_approx, "builtin");
        assert_eq!(cfg.measure.p0, 0.0);
        assert_eq!(cfg.policy(), TruncationPolicy::default_for(GroupSpec::ZK { k: 1 }));
        assert!(cfg.seed.is_none());
        let geom = cfg.build_geometry(&cfg.build_measure().unwrap()).unwrap();
        assert_eq!(geom.volume.exponent().0, 1.0);
    }

    #[test]
    fn unknown_fields_are_located() {
        let text = MINIMAL.replace("\"method\": \"kernel\"", "\"method\": \"kernel\", \"extra\": 1");
        let e = parse_config(&text).unwrap_err();
        assert_eq!(e.errors.len(), 1);
        assert!(e.errors[0].message.contains("extra"), "{e}");
        let text = MINIMAL.replace("\"p\": 1.0", "\"p\": 1.0, \"bogus\": true");
        let e = parse_config(&text).unwrap_err();
        assert_eq!(e.errors[0].pointer, "/measure/components/0/bogus");
    }

    #[test]
    fn semantic_errors_are_collected() {
        let text = MINIMAL
            .replace("\"alpha\": 1.0", "\"alpha\": 0.0")
            .replace("\"subgroup\": 0", "\"subgroup\": 3")
            .replace("[16, 32, 64]", "[16, 8]");
        let e = parse_config(&text).unwrap_err();
        let pointers: Vec<&str> = e.errors.iter().map(|f| f.pointer.as_str()).collect();
        assert!(pointers.contains(&"/measure/components/0/phi/alpha"), "{pointers:?}");
        assert!(pointers.contains(&"/measure/components/0/subgroup"), "{pointers:?}");
        assert!(pointers.contains(&"/experiment/nRange"), "{pointers:?}");
    }

    #[test]
    fn stochastic_experiments_need_a_seed() {
        let text = MINIMAL.replace("\"method\": \"kernel\"", "\"method\": \"collision\", \"walkers\": 100");
        let e = parse_config(&text).unwrap_err();
        assert_eq!(e.errors[0].pointer, "/seed");
        let text = text.replace("\"experiment\"", "\"seed\": 4, \"experiment\"");
        assert!(parse_config(&text).is_ok());
    }

    #[test]
    fn canonical_text_is_a_fixed_point() {
        let cfg = parse_config(MINIMAL).unwrap();
        let once = to_canonical_json(&cfg);
        assert_eq!(to_canonical_json(&parse_config(&once).unwrap()), once);
    }
}
