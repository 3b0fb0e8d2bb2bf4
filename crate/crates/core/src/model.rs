//! Ising energy on a coupling graph and the Glauber single-site update rule.
//!
//! A dipole's physical orientation is `+1` when its bit is set and `-1`
//! otherwise; the field `h` favours `+1`. States are tracked relative to the
//! stored pattern, so a [`SpinState`] only records which dipoles currently
//! disagree with the data written at `t = 0`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest dipole count a [`SpinState`] can represent.
pub const MAX_DIPOLES: usize = 64;

/// A weighted coupling between dipoles `a < b`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub a: usize,
    pub b: usize,
    pub coupling: f64,
}

impl Edge {
    pub fn new(a: usize, b: usize, coupling: f64) -> Self {
        Edge { a, b, coupling }
    }

    fn touches(&self, i: usize) -> Option<usize> {
        if self.a == i {
            Some(self.b)
        } else if self.b == i {
            Some(self.a)
        } else {
            None
        }
    }
}

/// Dipole count plus the coupling edges between them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Topology {
    pub dipoles: usize,
    pub edges: Vec<Edge>,
}

impl Topology {
    /// Builds a topology, rejecting self-loops, duplicate or out-of-range
    /// edges and non-finite couplings.
    pub fn new(dipoles: usize, edges: Vec<Edge>) -> Result<Self> {
        let t = Topology { dipoles, edges };
        t.check()?;
        Ok(t)
    }

    /// A single dipole with no couplings.
    pub fn isolated() -> Self {
        Topology { dipoles: 1, edges: Vec::new() }
    }

    /// Three dipoles with no couplings.
    pub fn uncoupled3() -> Self {
        Topology { dipoles: 3, edges: Vec::new() }
    }

    /// Three dipoles coupled along a line: 0-1-2.
    pub fn line3(coupling: f64) -> Self {
        Topology {
            dipoles: 3,
            edges: vec![Edge::new(0, 1, coupling), Edge::new(1, 2, coupling)],
        }
    }

    /// Three dipoles coupled pairwise.
    pub fn triangle3(coupling: f64) -> Self {
        Topology {
            dipoles: 3,
            edges: vec![
                Edge::new(0, 1, coupling),
                Edge::new(1, 2, coupling),
                Edge::new(0, 2, coupling),
            ],
        }
    }

    /// Looks up a named layout: `isolated`, `uncoupled3`, `line3` or `triangle3`.
    pub fn from_name(name: &str, coupling: f64) -> Result<Self> {
        match name.to_ascii_lowercase().as_str() {
            "isolated" | "single" => Ok(Self::isolated()),
            "uncoupled3" | "uncoupled" => Ok(Self::uncoupled3()),
            "line3" | "line" => Ok(Self::line3(coupling)),
            "triangle3" | "triangle" => Ok(Self::triangle3(coupling)),
            other => Err(Error::Validation(format!(
                "unknown topology `{other}` (expected isolated, uncoupled3, line3 or triangle3)"
            ))),
        }
    }

    /// Neighbours of dipole `i` with the coupling to each.
    pub fn neighbors(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.edges
            .iter()
            .filter_map(move |e| e.touches(i).map(|j| (j, e.coupling)))
    }

    fn check(&self) -> Result<()> {
        if self.dipoles == 0 {
            return Err(Error::Validation("topology must have at least one dipole".into()));
        }
        if self.dipoles > MAX_DIPOLES {
            return Err(Error::Validation(format!(
                "topology has {} dipoles; at most {MAX_DIPOLES} are supported",
                self.dipoles
            )));
        }
        for (k, e) in self.edges.iter().enumerate() {
            if e.a == e.b {
                return Err(Error::Validation(format!("self-loop on dipole {}", e.a)));
            }
            if e.a >= self.dipoles || e.b >= self.dipoles {
                return Err(Error::Validation(format!(
                    "edge ({}, {}) references a dipole outside 0..{}",
                    e.a, e.b, self.dipoles
                )));
            }
            if e.a > e.b {
                return Err(Error::Validation(format!(
                    "edge ({}, {}) must be listed with i < j",
                    e.a, e.b
                )));
            }
            if !e.coupling.is_finite() {
                return Err(Error::Validation(format!(
                    "edge ({}, {}) has a non-finite coupling",
                    e.a, e.b
                )));
            }
            if self.edges[..k].iter().any(|o| o.a == e.a && o.b == e.b) {
                return Err(Error::Validation(format!("duplicate edge ({}, {})", e.a, e.b)));
            }
        }
        Ok(())
    }
}

/// The physical system whose retention is computed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemSpec {
    pub topology: Topology,
    /// External field, in the same energy units as the couplings.
    pub h: f64,
    /// Inverse temperature.
    pub beta: f64,
    /// Data written at `t = 0`; `true` is the orientation the field favours.
    pub stored_pattern: Vec<bool>,
}

impl SystemSpec {
    /// A system storing the all-ones pattern, i.e. data aligned with `h`.
    pub fn new(topology: Topology, h: f64, beta: f64) -> Self {
        let stored_pattern = vec![true; topology.dipoles];
        SystemSpec { topology, h, beta, stored_pattern }
    }

    pub fn with_pattern(mut self, pattern: Vec<bool>) -> Self {
        self.stored_pattern = pattern;
        self
    }

    pub fn dipoles(&self) -> usize {
        self.topology.dipoles
    }

    /// Physical orientation (`±1`) of dipole `i` in `state`.
    #[inline]
    fn spin(&self, state: SpinState, i: usize) -> f64 {
        if self.stored_pattern[i] != state.is_wrong(i) {
            1.0
        } else {
            -1.0
        }
    }
}

/// Which dipoles disagree with the stored pattern.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SpinState {
    pub wrong_mask: u64,
    pub dipoles: usize,
}

impl SpinState {
    /// The state immediately after a write: every dipole correct.
    pub fn all_correct(dipoles: usize) -> Self {
        SpinState { wrong_mask: 0, dipoles }
    }

    /// Decodes a chain state index; bit `i` set means dipole `i` is wrong.
    pub fn from_index(index: usize, dipoles: usize) -> Self {
        SpinState { wrong_mask: index as u64, dipoles }
    }

    pub fn index(self) -> usize {
        self.wrong_mask as usize
    }

    #[inline]
    pub fn is_wrong(self, i: usize) -> bool {
        self.wrong_mask >> i & 1 == 1
    }

    pub fn wrong_count(self) -> usize {
        self.wrong_mask.count_ones() as usize
    }

    #[inline]
    pub fn flipped(self, i: usize) -> Self {
        SpinState { wrong_mask: self.wrong_mask ^ (1 << i), dipoles: self.dipoles }
    }
}

fn check_dimension(spec: &SystemSpec, state: SpinState) -> Result<()> {
    if state.dipoles != spec.dipoles() || spec.stored_pattern.len() != spec.dipoles() {
        return Err(Error::Validation(format!(
            "state has {} dipoles, system has {} (pattern length {})",
            state.dipoles,
            spec.dipoles(),
            spec.stored_pattern.len()
        )));
    }
    if spec.dipoles() < 64 && state.wrong_mask >> spec.dipoles() != 0 {
        return Err(Error::Validation("state mask has bits beyond the dipole count".into()));
    }
    Ok(())
}

/// Ising energy `-h·Σ sᵢ - Σ_edges J·sᵢ·sⱼ`.
pub fn total_energy(spec: &SystemSpec, state: SpinState) -> Result<f64> {
    check_dimension(spec, state)?;
    let field: f64 = (0..spec.dipoles()).map(|i| spec.spin(state, i)).sum();
    let coupling: f64 = spec
        .topology
        .edges
        .iter()
        .map(|e| e.coupling * spec.spin(state, e.a) * spec.spin(state, e.b))
        .sum();
    Ok(-spec.h * field - coupling)
}

/// Energy change from flipping dipole `i`, computed from its neighbourhood only.
pub fn delta_energy(spec: &SystemSpec, state: SpinState, i: usize) -> Result<f64> {
    check_dimension(spec, state)?;
    if i >= spec.dipoles() {
        return Err(Error::Validation(format!(
            "dipole index {i} out of range for {} dipoles",
            spec.dipoles()
        )));
    }
    Ok(delta_energy_unchecked(spec, state, i))
}

#[inline]
pub(crate) fn delta_energy_unchecked(spec: &SystemSpec, state: SpinState, i: usize) -> f64 {
    let local: f64 = spec
        .topology
        .neighbors(i)
        .map(|(j, coupling)| coupling * spec.spin(state, j))
        .sum();
    2.0 * spec.spin(state, i) * (spec.h + local)
}

/// Heat-bath acceptance probability `1 / (1 + e^{β·ΔE})`.
#[inline]
pub fn flip_probability(delta_e: f64, beta: f64) -> f64 {
    let x = beta * delta_e;
    if x > 0.0 {
        let z = (-x).exp();
        z / (1.0 + z)
    } else {
        1.0 / (1.0 + x.exp())
    }
}

/// Checks every invariant of `spec`, reporting the first violation.
pub fn validate(spec: &SystemSpec) -> Result<()> {
    spec.topology.check()?;
    if spec.beta.is_nan() || spec.beta < 0.0 {
        return Err(Error::Validation(format!("negative beta ({})", spec.beta)));
    }
    if !spec.beta.is_finite() {
        return Err(Error::Validation("beta must be finite".into()));
    }
    if !spec.h.is_finite() {
        return Err(Error::Validation("field h must be finite".into()));
    }
    if spec.stored_pattern.len() != spec.dipoles() {
        return Err(Error::Validation(format!(
            "stored pattern has length {}, expected {}",
            spec.stored_pattern.len(),
            spec.dipoles()
        )));
    }
    Ok(())
}
