//! Critical replenishment costs `C(R₀)`.
//!
//! Every configuration's total cost rate is affine in the replenishment cost
//! `C(R)`: a fixed part (material, coupling, field) plus `C(R)·dipoles/τ`. Two
//! configurations cost the same at exactly one `C(R)` unless their slopes are
//! equal; above that value the one with the lower slope is cheaper.

use serde::{Deserialize, Serialize};

use crate::cost::{self, CostParams};
use crate::error::{Error, Result};
use crate::exact::{self, AbsorptionRule};
use crate::model::{self, SystemSpec, Topology};

/// Relative gap below which two retention times or slopes count as equal.
const DEGENERACY_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdResult {
    pub c_r0: f64,
    pub comparison: (String, String),
    /// The configuration that is cheaper when `C(R) > c_r0`.
    pub regime_above: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

/// A labelled system compared by [`generic_crossover`].
#[derive(Debug, Clone, PartialEq)]
pub struct Configuration {
    pub label: String,
    pub spec: SystemSpec,
    pub rule: AbsorptionRule,
}

impl Configuration {
    pub fn new(label: impl Into<String>, spec: SystemSpec) -> Self {
        Configuration { label: label.into(), spec, rule: AbsorptionRule::MajorityWrong }
    }
}

fn check_common(h: f64, beta: f64, mu: f64) -> Result<()> {
    if !h.is_finite() {
        return Err(Error::Validation("field h must be finite".into()));
    }
    if !(beta >= 0.0) || !beta.is_finite() {
        return Err(Error::Validation(format!("negative beta ({beta})")));
    }
    if !(mu > 0.0) || !mu.is_finite() {
        return Err(Error::Validation(format!("mu must be positive (got {mu})")));
    }
    if h < 0.0 {
        return Err(Error::Domain(format!(
            "the field comparison is defined for h >= 0 (got {h})"
        )));
    }
    Ok(())
}

/// Single dipole with versus without a field: `(H²/μ)·tanh(βH)`.
///
/// `h = 0` returns 0 by continuity.
pub fn critical_single(h: f64, beta: f64, mu: f64) -> Result<ThresholdResult> {
    check_common(h, beta, mu)?;
    let c_r0 = h * h / mu * (beta * h).tanh();
    Ok(ThresholdResult {
        c_r0,
        comparison: ("S1 single, no field".into(), "S2 single, field on".into()),
        regime_above: "field-on (S2) cheaper".into(),
        note: (h == 0.0).then(|| "h = 0: value taken by continuity; no field to compare".into()),
    })
}

/// Three uncoupled dipoles with versus without a field:
/// `(H²/μ)·τ₄/(τ₄ − 6)`.
pub fn critical_three_uncoupled(h: f64, beta: f64, mu: f64) -> Result<ThresholdResult> {
    check_common(h, beta, mu)?;
    let spec = SystemSpec::new(Topology::uncoupled3(), h, beta);
    let tau4 = exact::retention_time_exact(&spec, AbsorptionRule::MajorityWrong)?.tau;
    if tau4 - 6.0 <= 6.0 * DEGENERACY_TOLERANCE {
        return Err(Error::DegenerateThreshold(format!(
            "three uncoupled dipoles: retention with field ({tau4}) does not exceed 6 at h = {h}"
        )));
    }
    Ok(ThresholdResult {
        c_r0: h * h / mu * tau4 / (tau4 - 6.0),
        comparison: ("S3 three uncoupled, no field".into(), "S4 three uncoupled, field on".into()),
        regime_above: "field-on (S4) cheaper".into(),
        note: None,
    })
}

/// Line versus triangle coupling at the same field and coupling strength:
/// `coupling_cost(s_f)/3 · τ₅τ₆/(τ₆ − τ₅)`.
pub fn critical_line_vs_triangle(
    h: f64,
    s_f: f64,
    beta: f64,
    p: &CostParams,
) -> Result<ThresholdResult> {
    p.validate()?;
    if !(s_f >= 0.0) || !s_f.is_finite() {
        return Err(Error::Domain(format!("coupling strength must be nonnegative (got {s_f})")));
    }
    if s_f == 0.0 {
        return Err(Error::DegenerateThreshold(
            "s_f = 0: line and triangle have identical retention, triangle never wins".into(),
        ));
    }
    let rule = AbsorptionRule::MajorityWrong;
    let line = SystemSpec::new(Topology::line3(s_f), h, beta);
    let triangle = SystemSpec::new(Topology::triangle3(s_f), h, beta);
    model::validate(&line)?;
    let tau5 = exact::retention_time_exact(&line, rule)?.tau;
    let tau6 = exact::retention_time_exact(&triangle, rule)?.tau;
    if tau6 - tau5 <= tau5 * DEGENERACY_TOLERANCE {
        return Err(Error::DegenerateThreshold(format!(
            "triangle retention ({tau6}) does not exceed line retention ({tau5})"
        )));
    }
    let extra_edge = cost::coupling_cost(s_f, p)?;
    Ok(ThresholdResult {
        c_r0: extra_edge / 3.0 * tau5 * tau6 / (tau6 - tau5),
        comparison: ("S5 line".into(), "S6 triangle".into()),
        regime_above: "triangle (S6) cheaper".into(),
        note: None,
    })
}

/// Affine intersection of two configurations' total cost rates in `C(R)`.
pub fn generic_crossover(
    a: &Configuration,
    b: &Configuration,
    p: &CostParams,
) -> Result<ThresholdResult> {
    let cost_a = cost::generalized_cost(&a.spec, p, a.rule)?;
    let cost_b = cost::generalized_cost(&b.spec, p, b.rule)?;
    let slope_a = a.spec.dipoles() as f64 / cost_a.tau_used;
    let slope_b = b.spec.dipoles() as f64 / cost_b.tau_used;
    let comparison = (a.label.clone(), b.label.clone());

    if (slope_a - slope_b).abs() <= DEGENERACY_TOLERANCE * slope_a.max(slope_b) {
        return Err(Error::DegenerateThreshold(format!(
            "`{}` and `{}` have parallel cost lines (replenishment slope {slope_a})",
            a.label, b.label
        )));
    }
    let c_r0 = (cost_b.fixed() - cost_a.fixed()) / (slope_a - slope_b);
    let (winner, loser) = if slope_a < slope_b { (a, b) } else { (b, a) };
    if !(c_r0 >= 0.0) {
        return Err(Error::DegenerateThreshold(format!(
            "no crossover at nonnegative C(R): `{}` is cheaper than `{}` everywhere",
            winner.label, loser.label
        )));
    }
    Ok(ThresholdResult {
        c_r0,
        comparison,
        regime_above: format!("{} cheaper", winner.label),
        note: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    #[test]
    fn critical_single_examples() {
        assert_eq!(critical_single(0.0, 1.0, 1.0).unwrap().c_r0, 0.0);
        assert!(critical_single(0.0, 1.0, 1.0).unwrap().note.is_some());
        assert!(rel(critical_single(1.0, 1.0, 1.0).unwrap().c_r0, 0.761_594_155_955_764_9) < 1e-14);
        assert!(rel(critical_single(2.0, 1.0, 1.0).unwrap().c_r0, 3.856_110_320_303_267_6) < 1e-14);
        assert!(matches!(critical_single(-1.0, 1.0, 1.0), Err(Error::Domain(_))));
        assert!(matches!(critical_single(1.0, 1.0, 0.0), Err(Error::Validation(_))));
    }

    #[test]
    fn critical_three_examples() {
        let r = critical_three_uncoupled(1.0, 1.0, 1.0).unwrap();
        let tau4 = 51.966_243_313_364;
        assert!(rel(r.c_r0, tau4 / (tau4 - 6.0)) < 1e-9);
        assert!(rel(r.c_r0, 1.130_53) < 1e-5);
        assert!(matches!(critical_three_uncoupled(0.0, 1.0, 1.0), Err(Error::DegenerateThreshold(_))));
        // Approaching zero field the crossover vanishes continuously.
        let tiny = critical_three_uncoupled(1e-4, 1.0, 1.0).unwrap().c_r0;
        assert!(tiny > 0.0 && tiny < 1e-3, "{tiny}");
        assert!(matches!(critical_three_uncoupled(-0.5, 1.0, 1.0), Err(Error::Domain(_))));

        let single = critical_single(3.0, 1.0, 1.0).unwrap().c_r0;
        let three = critical_three_uncoupled(3.0, 1.0, 1.0).unwrap().c_r0;
        assert!((three / single - 1.0).abs() < 0.01);
    }

    #[test]
    fn line_vs_triangle_degenerate_and_domain() {
        let p = CostParams::default();
        assert!(matches!(
            critical_line_vs_triangle(0.5, 0.0, 1.0, &p),
            Err(Error::DegenerateThreshold(_))
        ));
        assert!(matches!(critical_line_vs_triangle(0.5, -1.0, 1.0, &p), Err(Error::Domain(_))));
    }

    #[test]
    fn line_vs_triangle_grows_with_coupling() {
        let p = CostParams::default();
        let low = critical_line_vs_triangle(0.5, 0.1, 1.0, &p).unwrap().c_r0;
        let high = critical_line_vs_triangle(0.5, 1.0, 1.0, &p).unwrap().c_r0;
        assert!(high > low);
    }

    #[test]
    fn generic_degenerate_cases() {
        let p = CostParams::default();
        let a = Configuration::new("A", SystemSpec::new(Topology::line3(0.5), 0.5, 1.0));
        assert!(matches!(generic_crossover(&a, &a.clone(), &p), Err(Error::DegenerateThreshold(_))));

        // A field that opposes the data costs more and shortens retention.
        let plain = Configuration::new("plain", SystemSpec::new(Topology::isolated(), 0.0, 1.0));
        let against = Configuration::new("against", SystemSpec::new(Topology::isolated(), -1.0, 1.0));
        let err = generic_crossover(&plain, &against, &p).unwrap_err();
        assert!(err.to_string().contains("`plain` is cheaper"), "{err}");
    }

    #[test]
    fn generic_line_vs_triangle() {
        let p = CostParams { c_m: 1.4, k: 0.7, m: 2.0, n_exp: 0.5, ..CostParams::default() };
        let line = Configuration::new("line", SystemSpec::new(Topology::line3(0.8), 0.5, 1.0));
        let tri = Configuration::new("triangle", SystemSpec::new(Topology::triangle3(0.8), 0.5, 1.0));
        let g = generic_crossover(&line, &tri, &p).unwrap();
        let closed = critical_line_vs_triangle(0.5, 0.8, 1.0, &p).unwrap();
        assert!(rel(g.c_r0, closed.c_r0) < 1e-9);
        assert_eq!(g.regime_above, "triangle cheaper");
    }
}
