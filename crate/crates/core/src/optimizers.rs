//! Streaming optimizers as single-step state machines over mini-batches.
//!
//! All methods share the recursion `θ_{t+1} = θ_t − γ_{t+1} A_t ḡ_{t+1}`
//! where `ḡ_{t+1}` is the mean gradient of block `t+1` at `θ_t`:
//!
//! | method          | `A_t`                                  | `γ_{t+1}`              |
//! |-----------------|----------------------------------------|------------------------|
//! | `Sgd`           | `I`                                    | power law              |
//! | `Adagrad`       | clamped diagonal inverse RMS           | power law              |
//! | `NewtonDirect`  | `N_{t,Z} H_t⁻¹`, every sample ingested | `n_{t+1}/N_{t+1}`      |
//! | `Ssn`           | `N_{t,Z} H_t⁻¹`, Bernoulli(p) ingests  | `n_{t+1}/N_{t+1}`      |
//! | `Wassn`         | as `Ssn`                               | power law, averaged    |
//!
//! Newton-type methods step with the curvature state built from blocks
//! `1..=t` and only then ingest block `t+1`, with curvature evaluated at the
//! pre-step iterate.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::averaging::AveragerState;
use crate::error::{Error, Result};
use crate::linalg::SymMatrix;
use crate::problems::{CurvaturePair, Problem, Sample};
use crate::schedules::{self, log_weight, ClampParams, Schedules, StepMode, StepSchedule};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    Sgd,
    Adagrad,
    NewtonDirect,
    Ssn,
    Wassn,
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::Sgd => "sgd",
            Method::Adagrad => "adagrad",
            Method::NewtonDirect => "newton_direct",
            Method::Ssn => "ssn",
            Method::Wassn => "wassn",
        }
    }

    pub fn parse(s: &str) -> Option<Method> {
        Some(match s {
            "sgd" => Method::Sgd,
            "adagrad" => Method::Adagrad,
            "newton_direct" => Method::NewtonDirect,
            "ssn" => Method::Ssn,
            "wassn" => Method::Wassn,
            _ => return None,
        })
    }

    pub fn is_newton(&self) -> bool {
        matches!(self, Method::NewtonDirect | Method::Ssn | Method::Wassn)
    }
}

/// Regularization and subsampling of the curvature estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvatureParams {
    /// Bernoulli inclusion probability.
    pub p: f64,
    pub c_iota: f64,
    pub iota: f64,
    /// When false the canonical-direction terms are skipped entirely.
    pub regularize: bool,
}

impl CurvatureParams {
    pub fn for_method(method: Method) -> Self {
        CurvatureParams {
            p: 1.0,
            c_iota: 1.0,
            iota: if method == Method::Wassn { 0.1 } else { 0.25 },
            regularize: true,
        }
    }
}

/// Inverse of the weighted, regularized, subsampled curvature sum
/// `H_{t,w'} = H_0 + Σ_i ln(i+1)^{w'} Σ_j Z_{ij} (ι_{ij} e eᵀ + α_{ij} Φ_{ij} Φ_{ij}ᵀ)`
/// with `H_0 = I`.
#[derive(Debug, Clone)]
pub struct InverseCurvatureState {
    inv: SymMatrix,
    weighted_count: f64,
    reg_counter: u64,
    params: CurvatureParams,
    w_prime: f64,
    rank_one_updates: u64,
    offered: u64,
}

impl InverseCurvatureState {
    pub fn new(dim: usize, params: CurvatureParams, w_prime: f64) -> Self {
        InverseCurvatureState {
            inv: SymMatrix::identity(dim),
            weighted_count: 1.0,
            reg_counter: 1,
            params,
            w_prime,
            rank_one_updates: 0,
            offered: 0,
        }
    }

    pub fn inv(&self) -> &SymMatrix {
        &self.inv
    }

    /// `N_{t,Z} = 1 + Σ ln(i+1)^{w'} Z_{ij}`.
    pub fn weighted_count(&self) -> f64 {
        self.weighted_count
    }

    /// One plus the number of accepted samples.
    pub fn reg_counter(&self) -> u64 {
        self.reg_counter
    }

    pub fn accepted(&self) -> u64 {
        self.reg_counter - 1
    }

    pub fn offered(&self) -> u64 {
        self.offered
    }

    pub fn rank_one_updates(&self) -> u64 {
        self.rank_one_updates
    }

    pub fn params(&self) -> &CurvatureParams {
        &self.params
    }

    /// `N_{t,Z} H_{t,w'}⁻¹ g`.
    pub fn precondition(&self, g: &[f64]) -> Vec<f64> {
        let mut out = self.inv.mul_vec(g);
        out.iter_mut().for_each(|x| *x *= self.weighted_count);
        out
    }

    /// Ingests one sample from block `block` (1-based) whose Bernoulli draw
    /// came out as `accepted`.
    pub fn ingest_with(&mut self, curv: &CurvaturePair, block: u64, accepted: bool) -> Result<()> {
        let d = self.inv.dim();
        if curv.phi.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: curv.phi.len(),
            });
        }
        self.offered += 1;
        if !accepted {
            return Ok(());
        }
        self.reg_counter += 1;
        let weight = log_weight(block, self.w_prime);
        if self.params.regularize {
            let k = ((self.reg_counter - 2) % d as u64) as usize;
            let mut e = vec![0.0; d];
            e[k] = 1.0;
            let iota = self.params.c_iota * (self.reg_counter as f64).powf(-self.params.iota);
            self.apply(&e, weight * iota)?;
        }
        self.apply(&curv.phi, weight * curv.alpha)?;
        self.weighted_count += weight;
        Ok(())
    }

    fn apply(&mut self, v: &[f64], c: f64) -> Result<()> {
        if c != 0.0 {
            self.inv.rank_one_inverse_update(v, c)?;
            self.rank_one_updates += 1;
        }
        Ok(())
    }
}

/// Draws `Z ~ Bernoulli(p)` and ingests `curv` when it is 1. Exactly one
/// uniform is consumed per call, whatever `p` is. Returns `Z`.
pub fn curvature_ingest(
    cstate: &mut InverseCurvatureState,
    curv: &CurvaturePair,
    block: u64,
    rng: &mut impl Rng,
) -> Result<bool> {
    let z = rng.random::<f64>() < cstate.params.p;
    cstate.ingest_with(curv, block, z)?;
    Ok(z)
}

#[derive(Debug, Clone)]
pub struct AdagradState {
    accumulators: Vec<f64>,
    clamp: ClampParams,
    last_scales: Vec<f64>,
    clamp_violations: u64,
}

impl AdagradState {
    pub fn new(dim: usize, g0: f64, clamp: ClampParams) -> Self {
        AdagradState {
            accumulators: vec![g0; dim],
            clamp,
            last_scales: vec![1.0; dim],
            clamp_violations: 0,
        }
    }

    pub fn accumulators(&self) -> &[f64] {
        &self.accumulators
    }

    /// Diagonal scaling used by the most recent step.
    pub fn last_scales(&self) -> &[f64] {
        &self.last_scales
    }

    pub fn clamp(&self) -> &ClampParams {
        &self.clamp
    }

    /// Scales found outside `[C″ t^β″, C′ t^β′]`; stays 0 for validated clamps.
    pub fn clamp_violations(&self) -> u64 {
        self.clamp_violations
    }

    fn refresh_scales(&mut self, t: u64, samples_seen: u64) {
        let (lo, hi) = (self.clamp.lower(t), self.clamp.upper(t));
        for (s, acc) in self.last_scales.iter_mut().zip(&self.accumulators) {
            let raw = (acc / samples_seen as f64).powf(-0.5);
            *s = self.clamp.clamp(t, raw);
            if !(*s >= lo && *s <= hi) {
                self.clamp_violations += 1;
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizerConfig {
    pub method: Method,
    pub problem: Problem,
    pub schedules: Schedules,
    /// Report the weighted average instead of the raw iterate. Defaults to
    /// on for `Wassn` only.
    pub averaging: bool,
    pub curvature: CurvatureParams,
    pub clamp: ClampParams,
    /// Initial Adagrad accumulator `G_0^{(k)}`.
    pub g0: f64,
}

impl OptimizerConfig {
    /// Defaults for `method`, keeping the caller's batch schedule and weights.
    pub fn new(method: Method, problem: Problem, schedules: Schedules) -> Self {
        let step = match method {
            Method::NewtonDirect | Method::Ssn => StepSchedule {
                mode: StepMode::NewtonHarmonic,
                ..schedules.step
            },
            _ => StepSchedule {
                mode: StepMode::PowerLaw,
                ..schedules.step
            },
        };
        OptimizerConfig {
            method,
            problem,
            schedules: Schedules { step, ..schedules },
            averaging: method == Method::Wassn,
            curvature: CurvatureParams::for_method(method),
            clamp: ClampParams::default(),
            g0: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let s = &self.schedules;
        let clamps = (self.method == Method::Adagrad).then_some(&self.clamp);
        schedules::validate(&s.step, &s.batch, clamps)?;
        let needs_harmonic = matches!(self.method, Method::NewtonDirect | Method::Ssn);
        if needs_harmonic != (s.step.mode == StepMode::NewtonHarmonic) {
            return Err(Error::InvalidSchedule(format!(
                "{} requires the {} step",
                self.method.name(),
                if needs_harmonic { "harmonic n_t/N_t" } else { "power-law" }
            )));
        }
        if !(s.weights.w >= 0.0 && s.weights.w_prime >= 0.0) {
            return Err(Error::InvalidSchedule("weights must be nonnegative".into()));
        }
        if self.method == Method::Adagrad && !(self.g0 > 0.0) {
            return Err(Error::InvalidSchedule("adagrad.g0 > 0".into()));
        }
        if self.method.is_newton() {
            let c = &self.curvature;
            if !(c.p > 0.0 && c.p <= 1.0) {
                return Err(Error::InvalidSchedule("p in (0, 1]".into()));
            }
            if self.method == Method::NewtonDirect && c.p != 1.0 {
                return Err(Error::InvalidSchedule("newton_direct requires p = 1".into()));
            }
            if c.regularize {
                if !(c.c_iota > 0.0) {
                    return Err(Error::InvalidSchedule("c_iota > 0".into()));
                }
                let upper = self.iota_upper_bound();
                if !(c.iota > 0.0 && c.iota < upper) {
                    return Err(Error::InvalidSchedule(format!("iota in (0, {upper})")));
                }
            }
        }
        Ok(())
    }

    /// Exclusive upper bound on ι: `(1−ρ)/(2(1+ρ))` for the harmonic step,
    /// `min{γ−ρβ, 2γ−2ρβ−1+ρ}/(2(1+ρ))` for the averaged power-law one.
    pub fn iota_upper_bound(&self) -> f64 {
        let rho = self.schedules.batch.rho();
        let step = &self.schedules.step;
        match step.mode {
            StepMode::NewtonHarmonic => (1.0 - rho) / (2.0 * (1.0 + rho)),
            StepMode::PowerLaw => {
                let eff = step.gamma - rho * step.beta;
                eff.min(2.0 * eff - 1.0 + rho) / (2.0 * (1.0 + rho))
            }
        }
    }

}

#[derive(Debug, Clone)]
pub struct OptimizerState {
    pub theta: Vec<f64>,
    /// Blocks processed so far.
    pub t: u64,
    /// `N_t`.
    pub samples_seen: u64,
    pub averager: Option<AveragerState>,
}

#[derive(Debug, Clone)]
pub struct Optimizer {
    cfg: OptimizerConfig,
    state: OptimizerState,
    adagrad: Option<AdagradState>,
    curvature: Option<InverseCurvatureState>,
    z_rng: ChaCha8Rng,
}

impl Optimizer {
    /// `z_rng` drives the Bernoulli subsampling of Newton-type methods.
    pub fn new(cfg: OptimizerConfig, theta0: Vec<f64>, z_rng: ChaCha8Rng) -> Result<Self> {
        cfg.validate()?;
        let d = theta0.len();
        let adagrad = (cfg.method == Method::Adagrad).then(|| AdagradState::new(d, cfg.g0, cfg.clamp));
        let curvature = cfg
            .method
            .is_newton()
            .then(|| InverseCurvatureState::new(d, cfg.curvature, cfg.schedules.weights.w_prime));
        Ok(Optimizer {
            state: OptimizerState {
                theta: theta0,
                t: 0,
                samples_seen: 0,
                averager: cfg.averaging.then(|| AveragerState::new(d)),
            },
            cfg,
            adagrad,
            curvature,
            z_rng,
        })
    }

    pub fn config(&self) -> &OptimizerConfig {
        &self.cfg
    }

    pub fn state(&self) -> &OptimizerState {
        &self.state
    }

    pub fn theta(&self) -> &[f64] {
        &self.state.theta
    }

    /// The reported estimate: the weighted average when averaging is on.
    pub fn estimate(&self) -> &[f64] {
        match &self.state.averager {
            Some(a) => a.average(),
            None => &self.state.theta,
        }
    }

    pub fn curvature(&self) -> Option<&InverseCurvatureState> {
        self.curvature.as_ref()
    }

    pub fn adagrad(&self) -> Option<&AdagradState> {
        self.adagrad.as_ref()
    }

    pub fn rank_one_updates(&self) -> u64 {
        self.curvature.as_ref().map_or(0, |c| c.rank_one_updates())
    }

    /// Processes one block with the configured method.
    pub fn step(&mut self, batch: &[Sample]) -> Result<()> {
        match self.cfg.method {
            Method::Sgd => self.sgd_step(batch),
            Method::Adagrad => self.adagrad_step(batch),
            Method::NewtonDirect => self.newton_direct_step(batch),
            Method::Ssn => self.ssn_step(batch),
            Method::Wassn => self.wassn_step(batch),
        }
    }

    /// `θ ← θ − γ_{t+1} ḡ`.
    pub fn sgd_step(&mut self, batch: &[Sample]) -> Result<()> {
        let (mean_grad, _) = self.block_terms(batch)?;
        let gamma = self.advance(batch.len());
        let prev = self.state.theta.clone();
        for (th, g) in self.state.theta.iter_mut().zip(&mean_grad) {
            *th -= gamma * g;
        }
        self.finish(&prev, batch.len())
    }

    /// Clamped diagonal scaling from the running sum of squared partials,
    /// current block included.
    pub fn adagrad_step(&mut self, batch: &[Sample]) -> Result<()> {
        let (mean_grad, terms) = self.block_terms(batch)?;
        let gamma = self.advance(batch.len());
        let (t, seen) = (self.state.t, self.state.samples_seen);
        let ada = self
            .adagrad
            .get_or_insert_with(|| AdagradState::new(self.state.theta.len(), self.cfg.g0, self.cfg.clamp));
        for (s, (g, _)) in batch.iter().zip(&terms) {
            for (acc, xk) in ada.accumulators.iter_mut().zip(&s.x) {
                let partial = g * xk;
                *acc += partial * partial;
            }
        }
        ada.refresh_scales(t, seen);
        let prev = self.state.theta.clone();
        for ((th, g), dk) in self.state.theta.iter_mut().zip(&mean_grad).zip(&ada.last_scales) {
            *th -= gamma * dk * g;
        }
        self.finish(&prev, batch.len())
    }

    /// Newton step with every sample ingested (`p = 1`).
    pub fn newton_direct_step(&mut self, batch: &[Sample]) -> Result<()> {
        self.newton_step(batch)
    }

    /// Newton step with Bernoulli(p) curvature subsampling and `n/N` steps.
    pub fn ssn_step(&mut self, batch: &[Sample]) -> Result<()> {
        self.newton_step(batch)
    }

    /// Newton step with a power-law step size; the estimate is averaged.
    pub fn wassn_step(&mut self, batch: &[Sample]) -> Result<()> {
        self.newton_step(batch)
    }

    fn newton_step(&mut self, batch: &[Sample]) -> Result<()> {
        if self.curvature.is_none() {
            return Err(Error::InvalidConfig(format!(
                "{} has no curvature state",
                self.cfg.method.name()
            )));
        }
        let (mean_grad, terms) = self.block_terms(batch)?;
        let gamma = self.advance(batch.len());
        let block = self.state.t;
        let cstate = self.curvature.as_mut().expect("checked above");
        let direction = cstate.precondition(&mean_grad);
        let prev = self.state.theta.clone();
        for (th, g) in self.state.theta.iter_mut().zip(&direction) {
            *th -= gamma * g;
        }
        for (s, &(_, alpha)) in batch.iter().zip(&terms) {
            let curv = CurvaturePair {
                alpha,
                phi: s.x.clone(),
            };
            curvature_ingest(cstate, &curv, block, &mut self.z_rng)?;
        }
        self.finish(&prev, batch.len())
    }

    /// Mean gradient of the block at the current iterate and the per-sample
    /// `(g, α)` terms.
    fn block_terms(&self, batch: &[Sample]) -> Result<(Vec<f64>, Vec<(f64, f64)>)> {
        if batch.is_empty() {
            return Err(Error::EmptyBatch);
        }
        let theta = &self.state.theta;
        let mut mean = vec![0.0; theta.len()];
        let mut terms = Vec::with_capacity(batch.len());
        for s in batch {
            let (g, alpha) = self.cfg.problem.glm_terms(theta, s)?;
            for (m, xk) in mean.iter_mut().zip(&s.x) {
                *m += g * xk;
            }
            terms.push((g, alpha));
        }
        let inv_n = 1.0 / batch.len() as f64;
        mean.iter_mut().for_each(|m| *m *= inv_n);
        Ok((mean, terms))
    }

    /// Advances the block and sample counters, returning `γ_{t+1}`.
    fn advance(&mut self, n: usize) -> f64 {
        self.state.t += 1;
        self.state.samples_seen += n as u64;
        self.cfg
            .schedules
            .step
            .step_size(self.state.t, n, self.state.samples_seen)
    }

    /// Folds the pre-step iterate `θ_t` into the average with weight
    /// `ln(t+1)^w` (times `n_{t+1}` for increasing batches) and checks the
    /// new iterate.
    fn finish(&mut self, prev: &[f64], n: usize) -> Result<()> {
        if let Some(avg) = self.state.averager.as_mut() {
            let mut weight = log_weight(self.state.t - 1, self.cfg.schedules.weights.w);
            if self.cfg.schedules.batch.is_increasing() {
                weight *= n as f64;
            }
            avg.update(prev, weight)?;
        }
        if self.state.theta.iter().all(|x| x.is_finite()) {
            Ok(())
        } else {
            Err(Error::NonFiniteIterate { t: self.state.t })
        }
    }
}
