//! Seeded Monte Carlo simulation of the Glauber chain.
//!
//! Every trial draws from its own ChaCha stream keyed by `(seed, trial index)`
//! and the per-trial step counts are aggregated with exact integer sums, so an
//! estimate is bit-identical whatever the number of worker threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cost::CostParams;
use crate::error::{Error, Result};
use crate::exact::{self, AbsorptionRule};
use crate::model::{self, SpinState, SystemSpec};

/// Default per-trial step cap.
pub const DEFAULT_MAX_STEPS: u64 = 1_000_000_000;

/// Stream id reserved for the refresh ledger so it never collides with a trial.
const LEDGER_STREAM: u64 = u64::MAX;

/// Largest dipole count for which flip probabilities are tabulated up front.
const TABLE_DIPOLE_CAP: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct McConfig {
    pub trials: u64,
    pub seed: u64,
    pub max_steps_per_trial: u64,
}

impl McConfig {
    pub fn new(trials: u64, seed: u64) -> Self {
        McConfig { trials, seed, max_steps_per_trial: DEFAULT_MAX_STEPS }
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::Validation("trials must be at least 1".into()));
        }
        if self.max_steps_per_trial == 0 {
            return Err(Error::Validation("max_steps_per_trial must be at least 1".into()));
        }
        Ok(())
    }

    /// The random stream for trial `index`.
    pub fn trial_rng(&self, index: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(index);
        rng
    }
}

impl Default for McConfig {
    fn default() -> Self {
        McConfig::new(100_000, 0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub mean: f64,
    /// Sample standard deviation over `sqrt(trials_completed)`.
    pub stderr: f64,
    pub trials_completed: u64,
    pub trials_truncated: u64,
}

impl McEstimate {
    pub fn warning(&self) -> Option<String> {
        (self.trials_truncated > 0).then(|| {
            format!(
                "{} trial(s) hit the step cap and were excluded from the mean",
                self.trials_truncated
            )
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrialOutcome {
    Absorbed(u64),
    Truncated,
}

/// Precomputed single-site update rule for one spec.
struct Dynamics<'a> {
    spec: &'a SystemSpec,
    rule: AbsorptionRule,
    dipoles: usize,
    table: Option<Vec<f64>>,
}

impl<'a> Dynamics<'a> {
    fn new(spec: &'a SystemSpec, rule: AbsorptionRule) -> Self {
        let n = spec.dipoles();
        let table = (n <= TABLE_DIPOLE_CAP).then(|| {
            let mut t = Vec::with_capacity((1 << n) * n);
            for x in 0..1usize << n {
                let state = SpinState::from_index(x, n);
                for i in 0..n {
                    let de = model::delta_energy_unchecked(spec, state, i);
                    t.push(model::flip_probability(de, spec.beta));
                }
            }
            t
        });
        Dynamics { spec, rule, dipoles: n, table }
    }

    #[inline]
    fn flip_probability(&self, state: SpinState, i: usize) -> f64 {
        match &self.table {
            Some(t) => t[state.index() * self.dipoles + i],
            None => model::flip_probability(
                model::delta_energy_unchecked(self.spec, state, i),
                self.spec.beta,
            ),
        }
    }

    /// Runs from the all-correct state until absorption or `max_steps`.
    fn run<R: Rng + ?Sized>(&self, rng: &mut R, max_steps: u64) -> TrialOutcome {
        let n = self.dipoles;
        let mut state = SpinState::all_correct(n);
        let mut wrong = 0usize;
        for step in 1..=max_steps {
            let i = if n == 1 { 0 } else { rng.gen_range(0..n) };
            let p = self.flip_probability(state, i);
            if rng.gen::<f64>() < p {
                wrong = if state.is_wrong(i) { wrong - 1 } else { wrong + 1 };
                state = state.flipped(i);
                if self.rule.is_absorbing(wrong, n) {
                    return TrialOutcome::Absorbed(step);
                }
            }
        }
        TrialOutcome::Truncated
    }
}

/// Simulates one decay from a fresh write.
pub fn simulate_trial<R: Rng + ?Sized>(
    spec: &SystemSpec,
    rule: AbsorptionRule,
    rng: &mut R,
    max_steps: u64,
) -> Result<TrialOutcome> {
    model::validate(spec)?;
    Ok(Dynamics::new(spec, rule).run(rng, max_steps))
}

#[derive(Debug, Clone, Copy, Default)]
struct Tally {
    completed: u64,
    truncated: u64,
    sum: u128,
    sum_sq: u128,
}

impl Tally {
    fn add(mut self, outcome: TrialOutcome) -> Self {
        match outcome {
            TrialOutcome::Absorbed(steps) => {
                self.completed += 1;
                self.sum += steps as u128;
                self.sum_sq += (steps as u128) * (steps as u128);
            }
            TrialOutcome::Truncated => self.truncated += 1,
        }
        self
    }

    fn merge(self, other: Tally) -> Self {
        Tally {
            completed: self.completed + other.completed,
            truncated: self.truncated + other.truncated,
            sum: self.sum + other.sum,
            sum_sq: self.sum_sq + other.sum_sq,
        }
    }

    fn estimate(self) -> Result<McEstimate> {
        if self.completed == 0 {
            return Err(Error::Estimate(format!(
                "all {} trials hit the step cap",
                self.truncated
            )));
        }
        let n = self.completed as u128;
        let mean = self.sum as f64 / n as f64;
        let stderr = if n < 2 {
            0.0
        } else {
            // n·Σx² − (Σx)² is exact in integers whenever it fits.
            let spread = n
                .checked_mul(self.sum_sq)
                .zip(self.sum.checked_mul(self.sum))
                .map(|(a, b)| (a - b) as f64)
                .unwrap_or_else(|| {
                    n as f64 * self.sum_sq as f64 - (self.sum as f64) * (self.sum as f64)
                });
            let variance = spread.max(0.0) / (n as f64 * (n - 1) as f64);
            (variance / n as f64).sqrt()
        };
        Ok(McEstimate {
            mean,
            stderr,
            trials_completed: self.completed,
            trials_truncated: self.truncated,
        })
    }
}

fn run_trials(spec: &SystemSpec, rule: AbsorptionRule, cfg: &McConfig) -> Result<McEstimate> {
    model::validate(spec)?;
    cfg.validate()?;
    let dynamics = Dynamics::new(spec, rule);
    (0..cfg.trials)
        .into_par_iter()
        .map(|k| dynamics.run(&mut cfg.trial_rng(k), cfg.max_steps_per_trial))
        .fold(Tally::default, Tally::add)
        .reduce(Tally::default, Tally::merge)
        .estimate()
}

/// Mean retention time over `cfg.trials` independent decays, on the global
/// rayon pool.
pub fn estimate_retention(
    spec: &SystemSpec,
    rule: AbsorptionRule,
    cfg: &McConfig,
) -> Result<McEstimate> {
    run_trials(spec, rule, cfg)
}

/// As [`estimate_retention`], on a dedicated pool of `workers` threads.
pub fn estimate_retention_with_workers(
    spec: &SystemSpec,
    rule: AbsorptionRule,
    cfg: &McConfig,
    workers: usize,
) -> Result<McEstimate> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Numeric(format!("could not start worker pool: {e}")))?;
    pool.install(|| run_trials(spec, rule, cfg))
}

/// Long-run replenishment cost rate measured by simulating write, decay and
/// refresh cycles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LedgerEstimate {
    /// Total replenishment cost charged divided by the horizon.
    pub rate: f64,
    /// Renewal central-limit estimate of the standard error of `rate`.
    pub stderr: f64,
    pub refreshes: u64,
    pub horizon: u64,
    /// Set when the horizon is shorter than 50 exact retention times.
    pub short_horizon: bool,
}

/// Charges `dipoles · C(R)` each time the data is lost, then rewrites it
/// instantly and keeps going until `horizon` steps have elapsed.
pub fn simulate_energy_ledger(
    spec: &SystemSpec,
    rule: AbsorptionRule,
    cfg: &McConfig,
    cost: &CostParams,
    horizon: u64,
) -> Result<LedgerEstimate> {
    model::validate(spec)?;
    cost.validate()?;
    if horizon == 0 {
        return Err(Error::Validation("ledger horizon must be at least 1 step".into()));
    }
    let short_horizon = match exact::retention_time_exact(spec, rule) {
        Ok(r) => (horizon as f64) < 50.0 * r.tau,
        Err(_) => false,
    };

    let dynamics = Dynamics::new(spec, rule);
    let mut rng = cfg.trial_rng(LEDGER_STREAM);
    let mut elapsed = 0u64;
    let mut tally = Tally::default();
    while elapsed < horizon {
        match dynamics.run(&mut rng, horizon - elapsed) {
            TrialOutcome::Absorbed(steps) => {
                elapsed += steps;
                tally = tally.add(TrialOutcome::Absorbed(steps));
            }
            TrialOutcome::Truncated => break,
        }
    }

    let per_refresh = spec.dipoles() as f64 * cost.c_r;
    let refreshes = tally.completed;
    let rate = per_refresh * refreshes as f64 / horizon as f64;
    let stderr = if per_refresh == 0.0 {
        0.0
    } else if refreshes < 2 {
        f64::INFINITY
    } else {
        // Var N(t) ≈ t·σ²/μ³ for a renewal process with cycle mean μ.
        let cycles = tally.estimate()?;
        let mu = cycles.mean;
        let sigma2 = cycles.stderr * cycles.stderr * refreshes as f64;
        per_refresh * (horizon as f64 * sigma2 / mu.powi(3)).sqrt() / horizon as f64
    };
    Ok(LedgerEstimate { rate, stderr, refreshes, horizon, short_horizon })
}
