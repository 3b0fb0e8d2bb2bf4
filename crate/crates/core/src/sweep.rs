//! One-variable parameter sweeps and the figure recipes built on them.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{self, Params};
use crate::cost::{self, Scenario};
use crate::emit::quantize;
use crate::error::{Error, Result};
use crate::exact;
use crate::mc;
use crate::threshold;

/// The parameter swept along a table's first column.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variable {
    H,
    Sf,
    Beta,
}

impl Variable {
    pub fn name(self) -> &'static str {
        match self {
            Variable::H => "h",
            Variable::Sf => "sf",
            Variable::Beta => "beta",
        }
    }

    fn apply(self, p: &mut Params, value: f64) {
        match self {
            Variable::H => p.h = value,
            Variable::Sf => p.sf = value,
            Variable::Beta => p.beta = value,
        }
    }
}

impl fmt::Display for Variable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variable {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "h" => Ok(Variable::H),
            "sf" | "s_f" => Ok(Variable::Sf),
            "beta" => Ok(Variable::Beta),
            other => Err(Error::Validation(format!(
                "unknown sweep variable `{other}` (expected h, sf or beta)"
            ))),
        }
    }
}

/// The quantity evaluated at each grid point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Target {
    FieldCost,
    CouplingCost,
    RetentionExact,
    RetentionMc,
    ScenarioCost(Scenario),
    TopologyCost,
    CriticalSingle,
    CriticalThree,
    CriticalLineVsTriangle,
}

impl Target {
    pub fn columns(self) -> &'static [&'static str] {
        match self {
            Target::FieldCost => &["field_cost"],
            Target::CouplingCost => &["coupling_cost"],
            Target::RetentionExact => &["tau"],
            Target::RetentionMc => &["tau_mean", "tau_stderr"],
            Target::ScenarioCost(_) | Target::TopologyCost => {
                &["total", "material", "coupling", "field", "replenishment", "tau"]
            }
            Target::CriticalSingle | Target::CriticalThree | Target::CriticalLineVsTriangle => {
                &["c_r0"]
            }
        }
    }

    fn accepts(self, v: Variable) -> bool {
        match self {
            Target::FieldCost => v == Variable::H,
            Target::CouplingCost => v == Variable::Sf,
            Target::CriticalSingle | Target::CriticalThree => v != Variable::Sf,
            _ => true,
        }
    }

    fn evaluate(self, p: &Params) -> Result<Vec<f64>> {
        let costs = p.cost_params();
        Ok(match self {
            Target::FieldCost => vec![cost::field_cost(p.h, p.mu)],
            Target::CouplingCost => vec![cost::coupling_cost(p.sf, &costs)?],
            Target::RetentionExact => {
                vec![exact::retention_time_exact(&p.system_spec()?, p.rule)?.tau]
            }
            Target::RetentionMc => {
                let e = mc::estimate_retention(&p.system_spec()?, p.rule, &p.mc_config())?;
                vec![e.mean, e.stderr]
            }
            Target::ScenarioCost(s) => breakdown(cost::scenario_cost(s, &costs, p.h, p.sf, p.beta)?),
            Target::TopologyCost => {
                breakdown(cost::generalized_cost(&p.system_spec()?, &costs, p.rule)?)
            }
            Target::CriticalSingle => vec![threshold::critical_single(p.h, p.beta, p.mu)?.c_r0],
            Target::CriticalThree => {
                vec![threshold::critical_three_uncoupled(p.h, p.beta, p.mu)?.c_r0]
            }
            Target::CriticalLineVsTriangle => {
                vec![threshold::critical_line_vs_triangle(p.h, p.sf, p.beta, &costs)?.c_r0]
            }
        })
    }
}

fn breakdown(b: cost::CostBreakdown) -> Vec<f64> {
    vec![b.total, b.material, b.coupling, b.field, b.replenishment, b.tau_used]
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Target::FieldCost => f.write_str("field_cost"),
            Target::CouplingCost => f.write_str("coupling_cost"),
            Target::RetentionExact => f.write_str("retention_exact"),
            Target::RetentionMc => f.write_str("retention_mc"),
            Target::ScenarioCost(s) => write!(f, "scenario_cost:{}", s.to_string().to_lowercase()),
            Target::TopologyCost => f.write_str("topology_cost"),
            Target::CriticalSingle => f.write_str("critical_single"),
            Target::CriticalThree => f.write_str("critical_three"),
            Target::CriticalLineVsTriangle => f.write_str("critical_line_vs_triangle"),
        }
    }
}

impl FromStr for Target {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.to_ascii_lowercase();
        if let Some(id) = lower.strip_prefix("scenario_cost:") {
            return Ok(Target::ScenarioCost(id.parse()?));
        }
        match lower.as_str() {
            "field_cost" => Ok(Target::FieldCost),
            "coupling_cost" => Ok(Target::CouplingCost),
            "retention_exact" => Ok(Target::RetentionExact),
            "retention_mc" => Ok(Target::RetentionMc),
            "topology_cost" => Ok(Target::TopologyCost),
            "critical_single" => Ok(Target::CriticalSingle),
            "critical_three" | "critical_three_uncoupled" => Ok(Target::CriticalThree),
            "critical_line_vs_triangle" => Ok(Target::CriticalLineVsTriangle),
            other => Err(Error::Validation(format!("unknown sweep target `{other}`"))),
        }
    }
}

/// A second parameter held at a handful of values, one curve per value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Family {
    pub variable: Variable,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub variable: Variable,
    pub start: f64,
    pub stop: f64,
    pub points: usize,
    pub fixed: Params,
    pub target: Target,
    pub family: Option<Family>,
}

/// Keys a sweep configuration may carry on top of [`Params::KEYS`].
pub const SWEEP_KEYS: [&str; 7] =
    ["variable", "start", "stop", "points", "target", "curve_variable", "curve_values"];

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.start.is_finite() && self.stop.is_finite()) {
            return Err(Error::Validation("sweep range must be finite".into()));
        }
        if !(self.start < self.stop) {
            return Err(Error::Validation(format!(
                "sweep start ({}) must be below stop ({})",
                self.start, self.stop
            )));
        }
        if self.points < 2 {
            return Err(Error::Validation("a sweep needs at least 2 points".into()));
        }
        if !self.target.accepts(self.variable) {
            return Err(Error::Validation(format!(
                "target {} cannot be swept over {}",
                self.target, self.variable
            )));
        }
        if let Some(family) = &self.family {
            if family.variable == self.variable {
                return Err(Error::Validation(
                    "curve variable must differ from the sweep variable".into(),
                ));
            }
            if !self.target.accepts(family.variable) {
                return Err(Error::Validation(format!(
                    "target {} cannot vary {} across curves",
                    self.target, family.variable
                )));
            }
            if family.values.is_empty() || family.values.iter().any(|v| !v.is_finite()) {
                return Err(Error::Validation("curve values must be finite and non-empty".into()));
            }
        }
        self.fixed.validate()
    }

    /// Reads a sweep from flat key/value configuration.
    pub fn from_map(map: &BTreeMap<String, String>) -> Result<Self> {
        let fixed = Params::from_map(map, &SWEEP_KEYS)?;
        let get = |key: &str| {
            map.get(key)
                .ok_or_else(|| Error::Validation(format!("sweep configuration is missing `{key}`")))
        };
        let points = get("points")?;
        let family = match (map.get("curve_variable"), map.get("curve_values")) {
            (None, None) => None,
            (Some(v), Some(values)) => Some(Family {
                variable: v.parse()?,
                values: values
                    .split(',')
                    .map(|x| config::parse_f64("curve_values", x.trim()))
                    .collect::<Result<_>>()?,
            }),
            _ => {
                return Err(Error::Validation(
                    "curve_variable and curve_values must be given together".into(),
                ))
            }
        };
        Ok(SweepSpec {
            variable: get("variable")?.parse()?,
            start: config::parse_f64("start", get("start")?)?,
            stop: config::parse_f64("stop", get("stop")?)?,
            points: points
                .parse()
                .map_err(|_| Error::Parse(format!("`points` expects an integer, got `{points}`")))?,
            fixed,
            target: get("target")?.parse()?,
            family,
        })
    }

    /// Evenly spaced grid including both endpoints.
    pub fn grid(&self) -> Vec<f64> {
        let last = self.points - 1;
        (0..self.points)
            .map(|i| {
                if i == last {
                    self.stop
                } else {
                    self.start + (self.stop - self.start) * i as f64 / last as f64
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DroppedPoint {
    pub x: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub curve: Option<f64>,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub target: String,
    pub variable: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub curve_variable: Option<String>,
    pub params: BTreeMap<String, String>,
    pub version: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub dropped: Vec<DroppedPoint>,
}

/// Sweep output. The first column is the swept variable; for a family sweep
/// the second column holds the curve parameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub metadata: Metadata,
}

impl SweepTable {
    pub fn is_family(&self) -> bool {
        self.metadata.curve_variable.is_some()
    }

    /// Index of the first result column.
    pub fn first_result_column(&self) -> usize {
        if self.is_family() {
            2
        } else {
            1
        }
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let idx = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[idx]).collect())
    }

    /// Rows grouped by curve value, in first-appearance order.
    pub fn curves(&self) -> Vec<(Option<f64>, Vec<&Vec<f64>>)> {
        if !self.is_family() {
            return vec![(None, self.rows.iter().collect())];
        }
        let mut out: Vec<(Option<f64>, Vec<&Vec<f64>>)> = Vec::new();
        for row in &self.rows {
            match out.iter_mut().find(|(c, _)| *c == Some(row[1])) {
                Some((_, rows)) => rows.push(row),
                None => out.push((Some(row[1]), vec![row])),
            }
        }
        out
    }
}

enum PointResult {
    Row(Vec<f64>),
    Dropped(DroppedPoint),
}

/// Evaluates the target over the grid. Degenerate thresholds are recorded in
/// the metadata instead of producing a row; any other error aborts the sweep.
pub fn run_sweep(s: &SweepSpec) -> Result<SweepTable> {
    s.validate()?;
    let curves: Vec<Option<f64>> = match &s.family {
        Some(f) => f.values.iter().copied().map(Some).collect(),
        None => vec![None],
    };
    let grid = s.grid();
    let points: Vec<(Option<f64>, f64)> =
        curves.iter().flat_map(|&c| grid.iter().map(move |&x| (c, x))).collect();

    let results: Vec<PointResult> = points
        .par_iter()
        .map(|&(curve, x)| {
            let mut p = s.fixed.clone();
            s.variable.apply(&mut p, x);
            if let (Some(c), Some(f)) = (curve, &s.family) {
                f.variable.apply(&mut p, c);
            }
            match s.target.evaluate(&p) {
                Ok(values) => {
                    let mut row = vec![quantize(x)];
                    row.extend(curve.map(quantize));
                    row.extend(values.into_iter().map(quantize));
                    Ok(PointResult::Row(row))
                }
                Err(Error::DegenerateThreshold(reason)) => {
                    Ok(PointResult::Dropped(DroppedPoint { x: quantize(x), curve: curve.map(quantize), reason }))
                }
                Err(e) => Err(e),
            }
        })
        .collect::<Result<_>>()?;

    let mut rows = Vec::new();
    let mut dropped = Vec::new();
    for r in results {
        match r {
            PointResult::Row(row) => rows.push(row),
            PointResult::Dropped(d) => dropped.push(d),
        }
    }

    let mut columns = vec![s.variable.name().to_string()];
    if let Some(f) = &s.family {
        columns.push(f.variable.name().to_string());
    }
    columns.extend(s.target.columns().iter().map(|c| c.to_string()));

    let mut params = s.fixed.echo();
    params.insert("start".into(), crate::emit::format_number(s.start));
    params.insert("stop".into(), crate::emit::format_number(s.stop));
    params.insert("points".into(), s.points.to_string());
    if let Some(f) = &s.family {
        let values: Vec<String> = f.values.iter().map(|v| crate::emit::format_number(*v)).collect();
        params.insert("curve_values".into(), values.join(","));
    }

    Ok(SweepTable {
        columns,
        rows,
        metadata: Metadata {
            target: s.target.to_string(),
            variable: s.variable.name().into(),
            curve_variable: s.family.as_ref().map(|f| f.variable.name().into()),
            params,
            version: env!("CARGO_PKG_VERSION").into(),
            seed: (s.target == Target::RetentionMc).then_some(s.fixed.seed),
            dropped,
        },
    })
}

/// Coupling strengths drawn in the line-versus-triangle figure.
pub const FIGURE3_COUPLINGS: [f64; 6] = [0.001, 0.01, 0.1, 1.0, 2.0, 3.0];

/// Sweep reproducing figure `number` (1, 2 or 3) with the given fixed
/// parameters; `Params::default()` gives the reference setting.
pub fn figure_recipe(number: u8, fixed: Params) -> Result<SweepSpec> {
    let (target, stop, points, family) = match number {
        1 => (Target::CriticalSingle, 5.0, 100, None),
        2 => (Target::CriticalThree, 5.0, 100, None),
        3 => (
            Target::CriticalLineVsTriangle,
            3.0,
            60,
            Some(Family { variable: Variable::Sf, values: FIGURE3_COUPLINGS.to_vec() }),
        ),
        other => return Err(Error::Validation(format!("no figure {other} (expected 1, 2 or 3)"))),
    };
    Ok(SweepSpec { variable: Variable::H, start: 0.05, stop, points, fixed, target, family })
}
