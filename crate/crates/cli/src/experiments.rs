use anyhow::{bail, Context, Result};
use longjump::analysis::{dirichlet_eigenvalue, fit_loglog, holder_fit, pseudo_poincare_constant, rayleigh_zeta};
use longjump::geometry::AdaptedGeometry;
use longjump::group::GroupElement;
use longjump::kernel::{near_diagonal_profile, KernelEngine};
use longjump::measures::Measure;
use longjump::walk::{collision_return_estimates, exit_overshoot_probs, exit_time_stats, simulate, WalkConfig};
use serde_json::{json, Map, Value};

use crate::config::{Experiment, ExperimentConfig, ReturnMethod};

/// One CSV field.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(i128),
    Float(f64),
    Text(String),
    Bool(bool),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Int(i) => i.to_string(),
            Cell::Float(x) => format_float(*x),
            Cell::Text(s) => s.clone(),
            Cell::Bool(b) => b.to_string(),
        }
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(v as i128)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i128)
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
    }
}

impl From<&GroupElement> for Cell {
    fn from(g: &GroupElement) -> Self {
        Cell::Text(g.to_semicolon_string())
    }
}

/// Floats are written with 17 significant digits so that they round-trip.
pub fn format_float(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        format!("{x:.16e}")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    fn new(header: &[&'static str]) -> Self {
        Table {
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }

    fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for row in &self.rows {
            let fields: Vec<String> = row.iter().map(Cell::render).collect();
            out.push_str(&fields.join(","));
            out.push('\n');
        }
        out
    }
}

macro_rules! row {
    ($($x:expr),* $(,)?) => { vec![$(Cell::from($x)),*] };
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub results: Table,
    /// Additional tables written next to `results.csv`, by file name.
    pub extra: Vec<(String, Table)>,
    /// Experiment-specific report entries (snake_case keys).
    pub report: Map<String, Value>,
    pub pass: bool,
    /// Lines for the terminal summary.
    pub summary: Vec<String>,
}

fn spread(xs: &[f64]) -> f64 {
    let hi = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lo = xs.iter().cloned().fold(f64::INFINITY, f64::min);
    if lo > 0.0 {
        hi / lo
    } else {
        f64::INFINITY
    }
}

fn walk_config(seed: u64, walkers: usize, n: u64, measure: &Measure) -> WalkConfig {
    WalkConfig {
        seed,
        walkers,
        n,
        start: measure.group().identity(),
    }
}

pub fn run_experiment(cfg: &ExperimentConfig, measure: &Measure, geom: &AdaptedGeometry) -> Result<Outcome> {
    let seed = cfg.seed.unwrap_or(0);
    let d = geom.volume.exponent().0;
    match &cfg.experiment {
        Experiment::ReturnExponent { n_range, method, walkers, tolerance } => {
            let theory = -d;
            let (results, pts) = match method {
                ReturnMethod::Kernel => {
                    let mut engine = KernelEngine::new(measure, cfg.policy())?;
                    let rows = engine.return_series(n_range)?;
                    let mut t = Table::new(&["n", "lower", "upper", "sup_norm", "dropped_mass", "support"]);
                    for r in &rows {
                        t.push(row![r.n, r.lower, r.upper, r.sup_norm, r.dropped_mass, r.support]);
                    }
                    (t, rows.iter().map(|r| (r.n as f64, r.lower)).collect::<Vec<_>>())
                }
                ReturnMethod::Collision => {
                    let walkers = walkers.context("the collision method needs a walker count")?;
                    let wc = walk_config(seed, walkers, *n_range.last().unwrap(), measure);
                    let est = collision_return_estimates(measure, n_range, &wc)?;
                    let mut t = Table::new(&["n", "estimate", "stderr", "walkers", "low_information"]);
                    for e in &est {
                        t.push(row![e.n, e.estimate, e.stderr, e.walkers, e.low_information]);
                    }
                    let pts = est.iter().filter(|e| !e.low_information).map(|e| (e.n as f64, e.estimate)).collect();
                    (t, pts)
                }
            };
            let tol = tolerance.unwrap_or(match method {
                ReturnMethod::Kernel => 0.1,
                ReturnMethod::Collision => 0.5,
            });
            let fit = fit_loglog(&pts, None).context("fitting the return series")?;
            let pass = (fit.slope - theory).abs() <= tol;
            let mut report = Map::new();
            report.insert("method".into(), json!(method));
            report.insert("theory_slope".into(), json!(theory));
            report.insert("fitted_slope".into(), json!(fit.slope));
            report.insert("r2".into(), json!(fit.r2));
            report.insert("tolerance".into(), json!(tol));
            report.insert("points_used".into(), json!(fit.point_count));
            Ok(Outcome {
                results,
                extra: Vec::new(),
                report,
                pass,
                summary: vec![format!("return slope {:.4}, theory {theory}, tolerance {tol}", fit.slope)],
            })
        }
        Experiment::GeometryAudit { r_range, tolerance } => {
            let mut t = Table::new(&["R", "ball_count", "volume", "ratio"]);
            let mut pts = Vec::new();
            for &r in r_range {
                let count = geom.ball_count_capped(r, 1u128 << 100)? as f64;
                let v = geom.volume.eval(r);
                t.push(row![r, count, v, count / v]);
                pts.push((r, count));
            }
            let fit = fit_loglog(&pts, None)?;
            let tol = tolerance.unwrap_or(0.15);
            let pass = (fit.slope - d).abs() <= tol;
            let mut report = Map::new();
            report.insert("theory_exponent".into(), json!(d));
            report.insert("log_exponent".into(), json!(geom.volume.exponent().1));
            report.insert("fitted_slope".into(), json!(fit.slope));
            report.insert("tolerance".into(), json!(tol));
            report.insert("geometry".into(), geom.to_json());
            Ok(Outcome {
                results: t,
                extra: Vec::new(),
                report,
                pass,
                summary: vec![format!("ball growth slope {:.4}, volume exponent {d}, tolerance {tol}", fit.slope)],
            })
        }
        Experiment::NearDiagonal { n, eta, max_ratio } => {
            let mut engine = KernelEngine::new(measure, cfg.policy())?;
            let k = engine.power(*n)?;
            let p = near_diagonal_profile(&k, geom, *eta)?;
            let mut t = Table::new(&["n", "radius", "ball_size", "volume", "min_ratio", "max_ratio", "ratio_at_identity"]);
            t.push(row![p.n, p.radius, p.ball_size, p.volume, p.min_ratio, p.max_ratio, p.ratio_at_identity]);
            let limit = max_ratio.unwrap_or(20.0);
            let ratio = p.max_ratio / p.min_ratio;
            let mut report = Map::new();
            report.insert("max_over_min".into(), json!(ratio));
            report.insert("limit".into(), json!(limit));
            report.insert("dropped_mass".into(), json!(k.dropped_mass()));
            Ok(Outcome {
                results: t,
                extra: Vec::new(),
                report,
                pass: ratio <= limit,
                summary: vec![format!(
                    "k(g) F(n) in [{:.4}, {:.4}] over {} points, ratio {ratio:.3} (limit {limit})",
                    p.min_ratio, p.max_ratio, p.ball_size
                )],
            })
        }
        Experiment::Control { n_range, walkers, max_spread } => {
            let mut t = Table::new(&["n", "epsilon", "gamma"]);
            let mut by_eps: Vec<(f64, Vec<f64>)> = Vec::new();
            for &n in n_range {
                let st = simulate(measure, geom, &walk_config(seed, *walkers, n, measure))?;
                for c in &st.control {
                    t.push(row![n, c.epsilon, c.gamma]);
                    match by_eps.iter_mut().find(|(e, _)| *e == c.epsilon) {
                        Some((_, v)) => v.push(c.gamma),
                        None => by_eps.push((c.epsilon, vec![c.gamma])),
                    }
                }
            }
            let limit = max_spread.unwrap_or(4.0);
            let spreads: Vec<f64> = by_eps.iter().map(|(_, g)| spread(g)).collect();
            let worst = spreads.iter().cloned().fold(1.0, f64::max);
            let mut report = Map::new();
            report.insert("gamma_spread".into(), json!(worst));
            report.insert("max_spread".into(), json!(limit));
            Ok(Outcome {
                results: t,
                extra: Vec::new(),
                report,
                pass: worst <= limit,
                summary: vec![format!("largest spread of gamma across n: {worst:.3} (limit {limit})")],
            })
        }
        Experiment::Exit { r_range, walkers, max_spread, overshoot } => {
            let mut t = Table::new(&["r", "horizon", "mean_lower", "stderr", "censored_fraction", "normalized"]);
            let mut normalized = Vec::new();
            for &r in r_range {
                let st = exit_time_stats(measure, geom, r, &walk_config(seed, *walkers, 0, measure))?;
                let v = st.mean_lower / r.powf(1.0 / geom.w_star);
                normalized.push(v);
                t.push(row![r, st.horizon, st.mean_lower, st.stderr, st.censored_fraction, v]);
            }
            let limit = max_spread.unwrap_or(4.0);
            let s = spread(&normalized);
            let mut pass = s <= limit;
            let mut report = Map::new();
            report.insert("normalized_spread".into(), json!(s));
            report.insert("max_spread".into(), json!(limit));
            let mut summary = vec![format!("E[tau] / r^(1/w_*) spread {s:.3} (limit {limit})")];
            let mut extra = Vec::new();
            if let Some(o) = overshoot {
                let ss: Vec<f64> = o.multiples.iter().map(|k| k * o.r).collect();
                let wc = walk_config(seed.wrapping_add(1), o.walkers, 0, measure);
                let ov = exit_overshoot_probs(measure, geom, o.r, &ss, &wc)?;
                let mut ot = Table::new(&["r", "s", "probability", "stderr", "exited"]);
                for x in &ov {
                    ot.push(row![x.r, x.s, x.probability, x.stderr, x.exited]);
                }
                let pts: Vec<(f64, f64)> = ov.iter().rev().map(|x| (x.r / x.s, x.probability)).collect();
                let fit = fit_loglog(&pts, None).context("fitting overshoot probabilities")?;
                let theory = 1.0 / geom.w_star;
                let tol = o.tolerance.unwrap_or(0.3);
                pass &= (fit.slope - theory).abs() <= tol;
                report.insert("overshoot_theory_slope".into(), json!(theory));
                report.insert("overshoot_fitted_slope".into(), json!(fit.slope));
                report.insert("overshoot_tolerance".into(), json!(tol));
                summary.push(format!("overshoot slope {:.4}, theory {theory}, tolerance {tol}", fit.slope));
                extra.push(("overshoot.csv".to_string(), ot));
            }
            Ok(Outcome {
                results: t,
                extra,
                report,
                pass,
                summary,
            })
        }
        Experiment::Holder { n0, grid, min_r2 } => {
            let mut engine = KernelEngine::new(measure, cfg.policy())?;
            let grid: Vec<(u64, u64, GroupElement)> = grid.iter().map(|p| (p.m1, p.m2, p.y)).collect();
            let fit = holder_fit(&mut engine, geom, *n0, &grid)?;
            let mut t = Table::new(&["m1", "m2", "y", "x", "tv", "slack"]);
            for p in &fit.points {
                t.push(row![p.m1, p.m2, &p.y, p.x, p.tv, p.slack]);
            }
            let floor = min_r2.unwrap_or(0.8);
            let pass = fit.beta > 0.0 && fit.r2 >= floor;
            let mut report = Map::new();
            report.insert("beta".into(), json!(fit.beta));
            report.insert("c".into(), json!(fit.c));
            report.insert("r2".into(), json!(fit.r2));
            report.insert("min_r2".into(), json!(floor));
            Ok(Outcome {
                results: t,
                extra: Vec::new(),
                report,
                pass,
                summary: vec![format!("Hoelder exponent {:.4}, constant {:.4}, r2 {:.4}", fit.beta, fit.c, fit.r2)],
            })
        }
        Experiment::Spectral { r_range, iterations, max_spread } => {
            let iterations = iterations.unwrap_or(100_000);
            let mut t = Table::new(&[
                "R",
                "quotient",
                "lambda",
                "volume",
                "error_bound",
                "converged",
                "normalized",
            ]);
            let mut normalized = Vec::new();
            let mut variational = true;
            for &r in r_range {
                let eig = dirichlet_eigenvalue(measure, geom, r, iterations)?;
                let q = rayleigh_zeta(measure, geom, r)?;
                variational &= eig.converged && eig.lambda > 0.0 && q.quotient >= eig.lambda - eig.error_bound - q.tail_slack;
                let v = eig.lambda * r.powf(1.0 / geom.w_upper);
                normalized.push(v);
                t.push(row![r, q.quotient, eig.lambda, eig.ball_volume, eig.error_bound, eig.converged, v]);
            }
            let limit = max_spread.unwrap_or(10.0);
            let s = spread(&normalized);
            let mut report = Map::new();
            report.insert("normalized_spread".into(), json!(s));
            report.insert("max_spread".into(), json!(limit));
            report.insert("quotient_bounds_lambda".into(), json!(variational));
            Ok(Outcome {
                results: t,
                extra: Vec::new(),
                report,
                pass: s <= limit && variational,
                summary: vec![format!(
                    "lambda R^(1/w^*) spread {s:.3} (limit {limit}), quotient >= lambda: {variational}"
                )],
            })
        }
        Experiment::Poincare { trials, shifts } => {
            let p = pseudo_poincare_constant(measure, geom, *trials, shifts, seed)?;
            let mut t = Table::new(&["trials", "skipped", "constant", "max_ball_radius"]);
            t.push(row![p.trials, p.skipped, p.constant, p.max_ball_radius]);
            if p.skipped == p.trials {
                bail!("every trial was skipped");
            }
            let mut report = Map::new();
            report.insert("constant".into(), json!(p.constant));
            report.insert("skipped".into(), json!(p.skipped));
            Ok(Outcome {
                results: t,
                extra: Vec::new(),
                report,
                pass: p.constant.is_finite(),
                summary: vec![format!("pseudo-Poincare constant {:.4} over {} trials", p.constant, p.trials)],
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip() {
        for x in [0.1, 1.0 / 3.0, 6.02e23, -2.5e-300, 0.0] {
            assert_eq!(format_float(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(format_float(1.0), "1.0000000000000000e0");
        assert_eq!(format_float(f64::NAN), "nan");
    }

    #[test]
    fn tables_render_as_csv() {
        let mut t = Table::new(&["n", "y", "g", "ok"]);
        t.push(row![3u64, 0.5, &GroupElement::from_coords(&[1, -2]), true]);
        assert_eq!(t.to_csv(), "n,y,g,ok\n3,5.0000000000000000e-1,1;-2,true\n");
    }

    #[test]
    fn spread_of_nonpositive_data_is_infinite() {
        assert_eq!(spread(&[1.0, 2.0, 4.0]), 4.0);
        assert!(spread(&[0.0, 1.0]).is_infinite());
    }
}
