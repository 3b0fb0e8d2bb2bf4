//! Net environmental cost rate of a memory block.
//!
//! The total is the sum of four rates:
//!
//! * material, `C_M` per dipole (a one-time cost amortised per unit time),
//! * coupling, `k·s_f^m·C_M^n` per coupling edge,
//! * field, `H²/2μ` once per block while a field is applied,
//! * replenishment, `dipoles·C(R)/τ`, the renewal-reward rate of rewriting
//!   every dipole once per retention time.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::{self, AbsorptionRule, ClosedFormScenario};
use crate::model::{self, SystemSpec, Topology};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostParams {
    /// Material cost rate per dipole.
    pub c_m: f64,
    /// Replenishment cost per dipole per refresh.
    pub c_r: f64,
    /// Permeability.
    pub mu: f64,
    pub k: f64,
    /// Exponent on the coupling strength.
    pub m: f64,
    /// Exponent on the material cost.
    pub n_exp: f64,
}

impl Default for CostParams {
    fn default() -> Self {
        CostParams { c_m: 1.0, c_r: 1.0, mu: 1.0, k: 1.0, m: 1.0, n_exp: 1.0 }
    }
}

impl CostParams {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("c_m", self.c_m),
            ("c_r", self.c_r),
            ("mu", self.mu),
            ("k", self.k),
            ("m", self.m),
            ("n", self.n_exp),
        ];
        if let Some((name, _)) = fields.iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::Validation(format!("cost parameter {name} must be finite")));
        }
        if !(self.mu > 0.0) {
            return Err(Error::Validation(format!("mu must be positive (got {})", self.mu)));
        }
        for (name, v) in [("c_m", self.c_m), ("c_r", self.c_r), ("k", self.k)] {
            if v < 0.0 {
                return Err(Error::Validation(format!("{name} must be nonnegative (got {v})")));
            }
        }
        Ok(())
    }
}

/// Cost rate components of one configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostBreakdown {
    pub material: f64,
    pub coupling: f64,
    pub field: f64,
    pub replenishment: f64,
    pub total: f64,
    pub tau_used: f64,
}

impl CostBreakdown {
    fn new(material: f64, coupling: f64, field: f64, replenishment: f64, tau_used: f64) -> Self {
        CostBreakdown {
            material,
            coupling,
            field,
            replenishment,
            total: material + coupling + field + replenishment,
            tau_used,
        }
    }

    /// Everything except the replenishment term.
    pub fn fixed(&self) -> f64 {
        self.material + self.coupling + self.field
    }
}

/// `k·s_f^m·C_M^n`.
pub fn coupling_cost(s_f: f64, p: &CostParams) -> Result<f64> {
    if !(s_f >= 0.0) || !s_f.is_finite() {
        return Err(Error::Domain(format!("coupling strength must be nonnegative (got {s_f})")));
    }
    if s_f == 0.0 && p.m < 0.0 {
        return Err(Error::Domain("zero coupling with a negative exponent m".into()));
    }
    if s_f == 0.0 && p.m > 0.0 {
        return Ok(0.0);
    }
    let c = p.k * s_f.powf(p.m) * p.c_m.powf(p.n_exp);
    if !c.is_finite() {
        return Err(Error::Domain(format!(
            "coupling cost is not finite for s_f = {s_f}, C_M = {}",
            p.c_m
        )));
    }
    Ok(c)
}

/// `H²/2μ`.
pub fn field_cost(h: f64, mu: f64) -> f64 {
    h * h / (2.0 * mu)
}

/// `dipoles·C(R)/τ`.
pub fn effective_replenishment(c_r: f64, tau: f64, dipoles: usize) -> Result<f64> {
    if !(tau > 0.0) {
        return Err(Error::Domain(format!("retention time must be positive (got {tau})")));
    }
    Ok(dipoles as f64 * c_r / tau)
}

/// The six reference configurations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Scenario {
    /// A single isolated dipole.
    S1,
    /// A single dipole in a field.
    S2,
    /// Three uncoupled dipoles.
    S3,
    /// Three uncoupled dipoles in a field.
    S4,
    /// Three dipoles coupled along a line, in a field.
    S5,
    /// Three dipoles coupled in a triangle, in a field.
    S6,
}

impl Scenario {
    pub const ALL: [Scenario; 6] =
        [Scenario::S1, Scenario::S2, Scenario::S3, Scenario::S4, Scenario::S5, Scenario::S6];

    pub fn has_field(self) -> bool {
        !matches!(self, Scenario::S1 | Scenario::S3)
    }

    pub fn has_coupling(self) -> bool {
        matches!(self, Scenario::S5 | Scenario::S6)
    }

    pub fn topology(self, s_f: f64) -> Topology {
        match self {
            Scenario::S1 | Scenario::S2 => Topology::isolated(),
            Scenario::S3 | Scenario::S4 => Topology::uncoupled3(),
            Scenario::S5 => Topology::line3(s_f),
            Scenario::S6 => Topology::triangle3(s_f),
        }
    }

    /// The physical system this scenario describes; `h` and `s_f` are dropped
    /// where the scenario has no field or coupling.
    pub fn spec(self, h: f64, s_f: f64, beta: f64) -> SystemSpec {
        let h = if self.has_field() { h } else { 0.0 };
        let s_f = if self.has_coupling() { s_f } else { 0.0 };
        SystemSpec::new(self.topology(s_f), h, beta)
    }

    pub fn description(self) -> &'static str {
        match self {
            Scenario::S1 => "single isolated dipole",
            Scenario::S2 => "single dipole in a field",
            Scenario::S3 => "three uncoupled dipoles",
            Scenario::S4 => "three uncoupled dipoles in a field",
            Scenario::S5 => "three dipoles coupled along a line, in a field",
            Scenario::S6 => "three dipoles coupled in a triangle, in a field",
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

impl FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "s1" | "1" => Ok(Scenario::S1),
            "s2" | "2" => Ok(Scenario::S2),
            "s3" | "3" => Ok(Scenario::S3),
            "s4" | "4" => Ok(Scenario::S4),
            "s5" | "5" => Ok(Scenario::S5),
            "s6" | "6" => Ok(Scenario::S6),
            other => Err(Error::Validation(format!("unknown scenario `{other}` (expected s1..s6)"))),
        }
    }
}

/// Cost of a named scenario, following its printed formula term by term.
///
/// `S1`–`S3` use the closed-form retention times; `S4`–`S6` use the exact
/// engine with majority decoding.
pub fn scenario_cost(
    s: Scenario,
    p: &CostParams,
    h: f64,
    s_f: f64,
    beta: f64,
) -> Result<CostBreakdown> {
    p.validate()?;
    let spec = s.spec(h, s_f, beta);
    model::validate(&spec)?;
    let majority = AbsorptionRule::MajorityWrong;
    let tau = match s {
        Scenario::S1 => exact::tau_closed_form(ClosedFormScenario::SingleIsolated, beta, 0.0).tau,
        Scenario::S2 => exact::tau_closed_form(ClosedFormScenario::SingleField, beta, h).tau,
        Scenario::S3 => {
            exact::tau_closed_form(ClosedFormScenario::ThreeUncoupledNoField, beta, 0.0).tau
        }
        Scenario::S4 | Scenario::S5 | Scenario::S6 => {
            exact::retention_time_exact(&spec, majority)?.tau
        }
    };
    let dipoles = spec.dipoles();
    let material = dipoles as f64 * p.c_m;
    let coupling = match s {
        Scenario::S5 => 2.0 * coupling_cost(s_f, p)?,
        Scenario::S6 => 3.0 * coupling_cost(s_f, p)?,
        _ => 0.0,
    };
    let field = if s.has_field() { field_cost(h, p.mu) } else { 0.0 };
    let replenishment = effective_replenishment(p.c_r, tau, dipoles)?;
    Ok(CostBreakdown::new(material, coupling, field, replenishment, tau))
}

/// Cost of an arbitrary topology with the exact retention time.
pub fn generalized_cost(
    spec: &SystemSpec,
    p: &CostParams,
    rule: AbsorptionRule,
) -> Result<CostBreakdown> {
    model::validate(spec)?;
    p.validate()?;
    let dipoles = spec.dipoles();
    let material = dipoles as f64 * p.c_m;
    let coupling = spec
        .topology
        .edges
        .iter()
        .map(|e| coupling_cost(e.coupling, p))
        .sum::<Result<f64>>()?;
    let field = if spec.h != 0.0 { field_cost(spec.h, p.mu) } else { 0.0 };
    let tau = exact::retention_time_exact(spec, rule)?.tau;
    let replenishment = effective_replenishment(p.c_r, tau, dipoles)?;
    Ok(CostBreakdown::new(material, coupling, field, replenishment, tau))
}
