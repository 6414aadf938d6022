//! Mini-batch sizes, step sizes, and logarithmic averaging weights.
//!
//! Constant batches use `γ_t = C_γ (t + t0)^{-γ}` with `γ ∈ (1/2, 1)`.
//! Increasing batches `n_t = ⌊C_ρ t^ρ⌋` use `γ_t = C_γ n_t^β (t + t0)^{-γ}`
//! and require `γ − βρ ∈ (1/2, 1)` and `γ > (ρ(2β − 1) + 1)/2`.
//! Newton-type methods without averaging use the harmonic step `n_t / N_t`.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BatchSchedule {
    Constant { n: usize },
    Increasing { c_rho: usize, rho: f64 },
}

impl BatchSchedule {
    /// Mini-batch size of block `t` (1-based).
    pub fn batch_size(&self, t: u64) -> usize {
        debug_assert!(t >= 1);
        match *self {
            BatchSchedule::Constant { n } => n,
            BatchSchedule::Increasing { c_rho, rho } => {
                let n = (c_rho as f64 * (t as f64).powf(rho)).floor();
                (n as usize).max(1)
            }
        }
    }

    /// The growth exponent ρ (0 for constant batches).
    pub fn rho(&self) -> f64 {
        match *self {
            BatchSchedule::Constant { .. } => 0.0,
            BatchSchedule::Increasing { rho, .. } => rho,
        }
    }

    pub fn is_increasing(&self) -> bool {
        matches!(self, BatchSchedule::Increasing { .. })
    }

    fn check(&self) -> Result<()> {
        match *self {
            BatchSchedule::Constant { n } if n < 1 => invalid("batch.n >= 1"),
            BatchSchedule::Increasing { c_rho, .. } if c_rho < 1 => invalid("batch.c_rho >= 1"),
            BatchSchedule::Increasing { rho, .. } if !(0.0..1.0).contains(&rho) => {
                invalid("batch.rho in [0, 1)")
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepMode {
    PowerLaw,
    /// `γ_t = n_t / N_t`, i.e. `1/t` for constant batches.
    NewtonHarmonic,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepSchedule {
    pub c_gamma: f64,
    pub gamma: f64,
    pub beta: f64,
    pub t0: u64,
    pub mode: StepMode,
}

impl Default for StepSchedule {
    fn default() -> Self {
        StepSchedule {
            c_gamma: 1.0,
            gamma: 0.75,
            beta: 0.0,
            t0: 0,
            mode: StepMode::PowerLaw,
        }
    }
}

impl StepSchedule {
    pub fn newton_harmonic() -> Self {
        StepSchedule {
            mode: StepMode::NewtonHarmonic,
            ..Default::default()
        }
    }

    /// Step size for block `t` with batch size `n_t` and `N_t` samples seen
    /// once the block is included.
    pub fn step_size(&self, t: u64, n_t: usize, samples_seen: u64) -> f64 {
        debug_assert!(t >= 1 && n_t >= 1 && samples_seen >= n_t as u64);
        match self.mode {
            StepMode::PowerLaw => {
                self.c_gamma * (n_t as f64).powf(self.beta) * ((t + self.t0) as f64).powf(-self.gamma)
            }
            StepMode::NewtonHarmonic => n_t as f64 / samples_seen as f64,
        }
    }
}

/// Averaging exponents: `w` for iterates, `w_prime` for curvature terms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogWeightSchedule {
    pub w: f64,
    pub w_prime: f64,
}

impl Default for LogWeightSchedule {
    fn default() -> Self {
        LogWeightSchedule { w: 2.0, w_prime: 2.0 }
    }
}

/// `ln(t + 1)^exponent`, with `0^0 = 1`.
pub fn log_weight(t: u64, exponent: f64) -> f64 {
    if exponent == 0.0 {
        return 1.0;
    }
    ((t + 1) as f64).ln().powf(exponent)
}

/// Min/max power-law clamps on the Adagrad diagonal:
/// `max(C_β″ t^β″, min(C_β′ t^β′, ·))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClampParams {
    pub c_beta_prime: f64,
    pub beta_prime: f64,
    pub c_beta_dprime: f64,
    pub beta_dprime: f64,
}

impl Default for ClampParams {
    fn default() -> Self {
        ClampParams {
            c_beta_prime: 1.0,
            beta_prime: 0.2,
            c_beta_dprime: 1.0,
            beta_dprime: -0.2,
        }
    }
}

impl ClampParams {
    pub fn upper(&self, t: u64) -> f64 {
        self.c_beta_prime * (t as f64).powf(self.beta_prime)
    }

    pub fn lower(&self, t: u64) -> f64 {
        self.c_beta_dprime * (t as f64).powf(self.beta_dprime)
    }

    pub fn clamp(&self, t: u64, raw: f64) -> f64 {
        self.lower(t).max(self.upper(t).min(raw))
    }
}

/// Mini-batch, step, and weight schedules used by one optimizer run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Schedules {
    pub batch: BatchSchedule,
    pub step: StepSchedule,
    pub weights: LogWeightSchedule,
}

fn invalid<T>(what: &str) -> Result<T> {
    Err(Error::InvalidSchedule(format!("violated: {what}")))
}

fn open_interval(x: f64, lo: f64, hi: f64) -> bool {
    x > lo && x < hi
}

/// Checks the step-size admissibility conditions, plus the clamp exponents
/// when `clamps` is given.
pub fn validate(step: &StepSchedule, batch: &BatchSchedule, clamps: Option<&ClampParams>) -> Result<()> {
    batch.check()?;
    if !(step.c_gamma > 0.0 && step.c_gamma.is_finite()) {
        return invalid("step.c_gamma > 0");
    }
    let rho = batch.rho();
    let effective = step.gamma - step.beta * rho;
    if step.mode == StepMode::PowerLaw {
        if batch.is_increasing() {
            if !open_interval(effective, 0.5, 1.0) {
                return invalid("gamma - beta*rho in (1/2, 1)");
            }
            if !(step.gamma > (rho * (2.0 * step.beta - 1.0) + 1.0) / 2.0) {
                return invalid("gamma > (rho*(2*beta - 1) + 1)/2");
            }
        } else {
            if !open_interval(step.gamma, 0.5, 1.0) {
                return invalid("gamma in (1/2, 1)");
            }
            if step.beta != 0.0 {
                return invalid("beta = 0 with constant batches");
            }
        }
    }
    if let Some(c) = clamps {
        if !(c.c_beta_prime > 0.0 && c.c_beta_dprime > 0.0) {
            return invalid("C_beta' > 0 and C_beta'' > 0");
        }
        if !open_interval(c.beta_prime, 0.0, effective - 0.5) {
            return invalid("beta' in (0, gamma - beta*rho - 1/2)");
        }
        if !open_interval(c.beta_dprime, effective - 1.0, 0.0) {
            return invalid("beta'' in (gamma - beta*rho - 1, 0)");
        }
        if !(2.0 * c.beta_prime - effective - c.beta_dprime < 0.0) {
            return invalid("2*beta' - gamma + beta*rho - beta'' < 0");
        }
    }
    Ok(())
}
