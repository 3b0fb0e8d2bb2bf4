//! Exact retention time as the mean first-passage time of the Glauber chain.
//!
//! Each step picks one of the `n` dipoles uniformly and flips it with the
//! heat-bath probability. The retention time is the expected number of steps,
//! starting from the freshly written state, until the block decodes to the
//! wrong value under the [`AbsorptionRule`].

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, DenseMatrix};
use crate::model::{self, SpinState, SystemSpec};

/// Largest dipole count the exact engine enumerates (`2^12` states).
pub const EXACT_DIPOLE_CAP: usize = 12;

/// Largest scaled residual accepted from the linear solve; see
/// [`scaled_residual`].
pub const RESIDUAL_TOLERANCE: f64 = 1e-9;

/// When the stored data counts as lost.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AbsorptionRule {
    /// Strictly more than half of the dipoles are wrong.
    #[default]
    MajorityWrong,
    /// Every dipole is wrong.
    AllWrong,
    /// At least one dipole is wrong.
    AnyWrong,
}

impl AbsorptionRule {
    #[inline]
    pub fn is_absorbing(self, wrong: usize, dipoles: usize) -> bool {
        match self {
            AbsorptionRule::MajorityWrong => 2 * wrong > dipoles,
            AbsorptionRule::AllWrong => wrong == dipoles,
            AbsorptionRule::AnyWrong => wrong > 0,
        }
    }
}

impl fmt::Display for AbsorptionRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AbsorptionRule::MajorityWrong => "majority",
            AbsorptionRule::AllWrong => "all",
            AbsorptionRule::AnyWrong => "any",
        })
    }
}

impl FromStr for AbsorptionRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "majority" | "majority_wrong" => Ok(AbsorptionRule::MajorityWrong),
            "all" | "all_wrong" => Ok(AbsorptionRule::AllWrong),
            "any" | "any_wrong" => Ok(AbsorptionRule::AnyWrong),
            other => Err(Error::Validation(format!(
                "unknown absorption rule `{other}` (expected majority, all or any)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Exact,
    ClosedForm,
    MonteCarlo,
}

/// Expected number of update steps until data loss.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RetentionResult {
    pub tau: f64,
    pub method: Method,
    /// Zero for exact and closed-form results.
    pub stderr: f64,
}

/// The three configurations with a known closed-form retention time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ClosedFormScenario {
    SingleIsolated,
    SingleField,
    ThreeUncoupledNoField,
}

/// Closed-form retention times: `2`, `1 + e^{2βH}` and `6`.
pub fn tau_closed_form(scenario: ClosedFormScenario, beta: f64, h: f64) -> RetentionResult {
    let tau = match scenario {
        ClosedFormScenario::SingleIsolated => 2.0,
        ClosedFormScenario::SingleField => 1.0 + (2.0 * beta * h).exp(),
        ClosedFormScenario::ThreeUncoupledNoField => 6.0,
    };
    RetentionResult { tau, method: Method::ClosedForm, stderr: 0.0 }
}

fn check_capacity(spec: &SystemSpec) -> Result<()> {
    if spec.dipoles() > EXACT_DIPOLE_CAP {
        return Err(Error::Capacity { dipoles: spec.dipoles(), cap: EXACT_DIPOLE_CAP });
    }
    Ok(())
}

/// One-step transition matrix over all `2^n` states, indexed by wrong-mask.
pub fn build_transition_matrix(spec: &SystemSpec) -> Result<DenseMatrix> {
    model::validate(spec)?;
    check_capacity(spec)?;
    let n = spec.dipoles();
    let states = 1usize << n;
    let pick = 1.0 / n as f64;
    let mut p = DenseMatrix::zeros(states, states);
    for x in 0..states {
        let state = SpinState::from_index(x, n);
        let mut leave = 0.0;
        for i in 0..n {
            let de = model::delta_energy_unchecked(spec, state, i);
            let prob = pick * model::flip_probability(de, spec.beta);
            p[(x, state.flipped(i).index())] = prob;
            leave += prob;
        }
        p[(x, x)] = 1.0 - leave;
    }
    Ok(p)
}

/// Mean first-passage time from the all-correct state into the absorbing set.
pub fn retention_time_exact(spec: &SystemSpec, rule: AbsorptionRule) -> Result<RetentionResult> {
    let p = build_transition_matrix(spec)?;
    let n = spec.dipoles();
    let states = p.rows();
    let absorbing: Vec<bool> = (0..states)
        .map(|x| rule.is_absorbing(SpinState::from_index(x, n).wrong_count(), n))
        .collect();
    if absorbing[0] {
        return Err(Error::Model("the freshly written state is already absorbing".into()));
    }

    let reaches = can_reach_absorption(&p, &absorbing);
    if !reaches[0] {
        return Err(Error::Model(
            "absorbing set is unreachable from the written state (infinite retention)".into(),
        ));
    }
    if let Some(x) = (0..states).find(|&x| !absorbing[x] && !reaches[x]) {
        return Err(Error::Model(format!(
            "transient state {x:#b} never reaches the absorbing set; (I - Q) is singular"
        )));
    }

    let transient: Vec<usize> = (0..states).filter(|&x| !absorbing[x]).collect();
    let mut position = vec![usize::MAX; states];
    for (k, &x) in transient.iter().enumerate() {
        position[x] = k;
    }
    let m = transient.len();
    let mut a = DenseMatrix::identity(m);
    for (r, &x) in transient.iter().enumerate() {
        for (c, &y) in transient.iter().enumerate() {
            a[(r, c)] -= p[(x, y)];
        }
    }
    // Rebuild the diagonal from the off-diagonal exits so that
    // 1 - Q_xx does not suffer cancellation when leaving is rare.
    for (r, &x) in transient.iter().enumerate() {
        let exit: f64 = (0..states).filter(|&y| y != x).map(|y| p[(x, y)]).sum();
        a[(r, r)] = exit;
    }

    let ones = vec![1.0; m];
    let t = linalg::solve(&a, &ones)?;
    let residual = scaled_residual(&a, &t, &ones);
    if !(residual < RESIDUAL_TOLERANCE) {
        return Err(Error::Numeric(format!(
            "mean first-passage residual {residual:e} exceeds {RESIDUAL_TOLERANCE:e}"
        )));
    }
    let tau = t[position[0]];
    if !(tau >= 1.0) || !tau.is_finite() {
        return Err(Error::Numeric(format!("retention time {tau} is not a valid step count")));
    }
    Ok(RetentionResult { tau, method: Method::Exact, stderr: 0.0 })
}

/// `max_i |(A·x − b)_i| / (|b_i| + Σ_j |A_ij·x_j|)`.
///
/// Evaluating `A·x` in floating point already costs about `ε·Σ_j |A_ij·x_j|`
/// per row, which for retention times beyond ~10⁷ steps exceeds any fixed
/// absolute bound, so each row is measured against its own magnitude.
pub fn scaled_residual(a: &DenseMatrix, x: &[f64], b: &[f64]) -> f64 {
    (0..a.rows())
        .map(|i| {
            let row = a.row(i);
            let ax: f64 = row.iter().zip(x).map(|(aij, xj)| aij * xj).sum();
            let scale: f64 = b[i].abs() + row.iter().zip(x).map(|(aij, xj)| (aij * xj).abs()).sum::<f64>();
            (ax - b[i]).abs() / scale
        })
        .fold(0.0, f64::max)
}

/// Backward reachability of the absorbing set over positive-probability moves.
fn can_reach_absorption(p: &DenseMatrix, absorbing: &[bool]) -> Vec<bool> {
    let states = p.rows();
    let mut reaches = absorbing.to_vec();
    let mut queue: VecDeque<usize> = (0..states).filter(|&x| absorbing[x]).collect();
    while let Some(y) = queue.pop_front() {
        for x in 0..states {
            if !reaches[x] && x != y && p[(x, y)] > 0.0 {
                reaches[x] = true;
                queue.push_back(x);
            }
        }
    }
    reaches
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Edge, Topology};

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    #[test]
    fn transition_matrix_examples() {
        let free = SystemSpec::new(Topology::isolated(), 0.0, 1.0);
        let p = build_transition_matrix(&free).unwrap();
        assert_eq!(p, DenseMatrix::from_rows(&[vec![0.5, 0.5], vec![0.5, 0.5]]));

        let biased = SystemSpec::new(Topology::isolated(), 1.0, 1.0);
        let p = build_transition_matrix(&biased).unwrap();
        assert!((p[(0, 1)] - 0.119_202_922_022_117_55).abs() < 1e-15);
        assert!((p[(0, 0)] - (1.0 - 0.119_202_922_022_117_55)).abs() < 1e-15);
    }

    #[test]
    fn rows_are_stochastic() {
        let spec = SystemSpec::new(Topology::triangle3(0.7), -0.3, 1.3);
        let p = build_transition_matrix(&spec).unwrap();
        for x in 0..p.rows() {
            let s: f64 = p.row(x).iter().sum();
            assert!((s - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn closed_form_anchors() {
        assert_eq!(tau_closed_form(ClosedFormScenario::SingleIsolated, 1.0, 5.0).tau, 2.0);
        assert_eq!(tau_closed_form(ClosedFormScenario::SingleField, 1.0, 0.0).tau, 2.0);
        assert_eq!(tau_closed_form(ClosedFormScenario::ThreeUncoupledNoField, 1.0, 0.0).tau, 6.0);
        let r = tau_closed_form(ClosedFormScenario::SingleField, 1.0, 1.0);
        assert_eq!(r.method, Method::ClosedForm);
        assert!(rel(r.tau, 8.389_056_098_930_65) < 1e-14);
    }

    #[test]
    fn exact_anchors() {
        let rule = AbsorptionRule::MajorityWrong;
        for beta in [0.0, 0.5, 3.0] {
            let r = retention_time_exact(&SystemSpec::new(Topology::isolated(), 0.0, beta), rule)
                .unwrap();
            assert!(rel(r.tau, 2.0) < 1e-12);
            assert_eq!(r.method, Method::Exact);
        }
        let r = retention_time_exact(&SystemSpec::new(Topology::isolated(), 1.0, 1.0), rule).unwrap();
        assert!(rel(r.tau, 1.0 + 2f64.exp()) < 1e-12);
        let r =
            retention_time_exact(&SystemSpec::new(Topology::uncoupled3(), 0.0, 1.0), rule).unwrap();
        assert!(rel(r.tau, 6.0) < 1e-12);
        for topo in [Topology::line3(0.0), Topology::triangle3(0.0)] {
            let r = retention_time_exact(&SystemSpec::new(topo, 0.0, 1.0), rule).unwrap();
            assert!(rel(r.tau, 6.0) < 1e-12);
        }
    }

    /// Lumped chain over the wrong count k ∈ {0, 1} for three free dipoles in
    /// a field: T₀ = τ₂ + T₁, T₁ = (1 + (p₋/3)·T₀) / ((2/3)·p₊ + (1/3)·p₋).
    fn uncoupled3_lumped(beta: f64, h: f64) -> f64 {
        let p_plus = 1.0 / (1.0 + (2.0 * beta * h).exp());
        let p_minus = 1.0 - p_plus;
        let tau2 = 1.0 + (2.0 * beta * h).exp();
        let leave1 = 2.0 / 3.0 * p_plus + p_minus / 3.0;
        // T₀ = τ₂ + (1 + p₋/3·T₀)/leave1
        (tau2 + 1.0 / leave1) / (1.0 - p_minus / 3.0 / leave1)
    }

    #[test]
    fn uncoupled3_matches_lumped_chain() {
        let frozen = uncoupled3_lumped(1.0, 1.0);
        assert!(rel(frozen, 51.966_243_313_364) < 1e-12);
        for (beta, h) in [(1.0, 1.0), (0.5, 0.3), (2.0, 1.5), (1.0, -0.4)] {
            let r =
                retention_time_exact(&SystemSpec::new(Topology::uncoupled3(), h, beta), Default::default())
                    .unwrap();
            assert!(rel(r.tau, uncoupled3_lumped(beta, h)) < 1e-10, "{beta} {h}");
        }
    }

    #[test]
    fn rules_coincide_for_one_dipole() {
        let spec = SystemSpec::new(Topology::isolated(), 0.7, 1.0);
        let want = retention_time_exact(&spec, AbsorptionRule::MajorityWrong).unwrap().tau;
        for rule in [AbsorptionRule::AllWrong, AbsorptionRule::AnyWrong] {
            assert_eq!(retention_time_exact(&spec, rule).unwrap().tau, want);
        }
    }

    #[test]
    fn any_wrong_on_three_free_dipoles_is_one_step() {
        // Any flip loses the data, and every pick flips with probability 1/2.
        let spec = SystemSpec::new(Topology::uncoupled3(), 0.0, 1.0);
        let r = retention_time_exact(&spec, AbsorptionRule::AnyWrong).unwrap();
        assert!(rel(r.tau, 2.0) < 1e-12);
        let all = retention_time_exact(&spec, AbsorptionRule::AllWrong).unwrap().tau;
        let maj = retention_time_exact(&spec, AbsorptionRule::MajorityWrong).unwrap().tau;
        assert!(all > maj && maj > r.tau);
    }

    #[test]
    fn capacity_error_beyond_cap() {
        let spec = SystemSpec::new(Topology::new(13, vec![]).unwrap(), 0.0, 1.0);
        assert_eq!(
            retention_time_exact(&spec, AbsorptionRule::MajorityWrong),
            Err(Error::Capacity { dipoles: 13, cap: 12 })
        );
        assert!(build_transition_matrix(&spec).is_err());
    }

    #[test]
    fn cap_sized_chain_is_solvable() {
        let edges = (0..11).map(|i| Edge::new(i, i + 1, 0.2)).collect();
        let spec = SystemSpec::new(Topology::new(12, edges).unwrap(), 0.1, 1.0);
        let r = retention_time_exact(&spec, AbsorptionRule::MajorityWrong).unwrap();
        assert!(r.tau > 1.0);
    }

    #[test]
    fn unreachable_absorption_is_a_model_error() {
        // exp(-β·ΔE) underflows, so no flip ever happens.
        let spec = SystemSpec::new(Topology::isolated(), 400.0, 10.0);
        assert!(matches!(
            retention_time_exact(&spec, AbsorptionRule::MajorityWrong),
            Err(Error::Model(_))
        ));
    }

    #[test]
    fn rule_parsing() {
        assert_eq!("majority".parse::<AbsorptionRule>().unwrap(), AbsorptionRule::MajorityWrong);
        assert_eq!("ANY".parse::<AbsorptionRule>().unwrap(), AbsorptionRule::AnyWrong);
        assert!("most".parse::<AbsorptionRule>().is_err());
    }
}
