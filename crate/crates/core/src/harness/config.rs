//! Flat `key=value` experiment configuration.
//!
//! Lines are `key=value`; `#` starts a comment. Unknown keys are errors.
//!
//! ```text
//! problem=ls
//! method=sgd,adagrad,ssn,wassn
//! d=100
//! samples=1000000
//! batch.n=100
//! weights.w=2
//! ```

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::optimizers::{CurvatureParams, Method, OptimizerConfig};
use crate::problems::Problem;
use crate::schedules::{BatchSchedule, ClampParams, LogWeightSchedule, Schedules, StepSchedule};

/// One curve of an experiment: a method and whether its average is reported.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MethodSpec {
    pub method: Method,
    pub averaging: bool,
}

impl MethodSpec {
    pub fn new(method: Method) -> Self {
        MethodSpec {
            method,
            averaging: method == Method::Wassn,
        }
    }

    /// `sgd`, `sgd_avg`, `wassn`, `wassn_raw`, ...
    pub fn label(&self) -> String {
        let default_avg = self.method == Method::Wassn;
        match (self.averaging, default_avg) {
            (true, false) => format!("{}_avg", self.method.name()),
            (false, true) => format!("{}_raw", self.method.name()),
            _ => self.method.name().to_string(),
        }
    }

    pub fn parse(label: &str) -> Option<Self> {
        if let Some(base) = label.strip_suffix("_avg") {
            let method = Method::parse(base)?;
            return Some(MethodSpec { method, averaging: true });
        }
        if let Some(base) = label.strip_suffix("_raw") {
            let method = Method::parse(base)?;
            return Some(MethodSpec { method, averaging: false });
        }
        Method::parse(label).map(MethodSpec::new)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub problem: Problem,
    pub methods: Vec<MethodSpec>,
    pub dim: usize,
    /// Total samples `N` per run.
    pub total_samples: u64,
    pub batch: BatchSchedule,
    pub step: StepSchedule,
    pub weights: LogWeightSchedule,
    pub p: f64,
    pub c_iota: f64,
    /// Overrides the per-method ι default when set.
    pub iota: Option<f64>,
    pub regularize: bool,
    pub clamp: ClampParams,
    pub g0: f64,
    /// Initialization radius `r`.
    pub init_radius: f64,
    pub runs: usize,
    pub seed: u64,
    /// Number of log-spaced checkpoints.
    pub checkpoints: usize,
    pub noise_sd: f64,
    pub output: Option<PathBuf>,
    /// Record wall-clock time per checkpoint. Off keeps output byte-reproducible.
    pub timing: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            problem: Problem::LeastSquares,
            methods: vec![MethodSpec::new(Method::Wassn)],
            dim: 10,
            total_samples: 100_000,
            batch: BatchSchedule::Constant { n: 10 },
            step: StepSchedule::default(),
            weights: LogWeightSchedule::default(),
            p: 1.0,
            c_iota: 1.0,
            iota: None,
            regularize: true,
            clamp: ClampParams::default(),
            g0: 1.0,
            init_radius: 1.0,
            runs: 1,
            seed: 0,
            checkpoints: 30,
            noise_sd: 1.0,
            output: None,
            timing: false,
        }
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::InvalidConfig(format!("{key}: cannot parse {value:?}")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "on" | "1" => Ok(true),
        "false" | "off" | "0" => Ok(false),
        _ => Err(Error::InvalidConfig(format!("{key}: expected a boolean, got {value:?}"))),
    }
}

impl ExperimentConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = ExperimentConfig::default();
        let mut averaging: Option<bool> = None;
        let mut batch_mode = "constant".to_string();
        let (mut batch_n, mut c_rho, mut rho) = (None, 1usize, 0.0f64);
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .map(|(k, v)| (k.trim(), v.trim()))
                .ok_or_else(|| Error::InvalidConfig(format!("line {}: expected key=value", lineno + 1)))?;
            match key {
                "problem" => {
                    cfg.problem = match value {
                        "ls" => Problem::LeastSquares,
                        "logit" => Problem::Logistic,
                        _ => return Err(Error::InvalidConfig(format!("problem: unknown {value:?}"))),
                    }
                }
                "method" => {
                    cfg.methods = value
                        .split(',')
                        .map(|m| {
                            MethodSpec::parse(m.trim())
                                .ok_or_else(|| Error::InvalidConfig(format!("method: unknown {m:?}")))
                        })
                        .collect::<Result<_>>()?;
                }
                "averaging" => averaging = Some(parse_bool(key, value)?),
                "d" => cfg.dim = parse_num(key, value)?,
                "samples" => cfg.total_samples = parse_num(key, value)?,
                "runs" => cfg.runs = parse_num(key, value)?,
                "seed" => cfg.seed = parse_num(key, value)?,
                "r" => cfg.init_radius = parse_num(key, value)?,
                "noise_sd" => cfg.noise_sd = parse_num(key, value)?,
                "checkpoints" => cfg.checkpoints = parse_num(key, value)?,
                "p" => cfg.p = parse_num(key, value)?,
                "batch.mode" => batch_mode = value.to_string(),
                "batch.n" => batch_n = Some(parse_num(key, value)?),
                "batch.c_rho" => c_rho = parse_num(key, value)?,
                "batch.rho" => rho = parse_num(key, value)?,
                "step.c_gamma" => cfg.step.c_gamma = parse_num(key, value)?,
                "step.gamma" => cfg.step.gamma = parse_num(key, value)?,
                "step.beta" => cfg.step.beta = parse_num(key, value)?,
                "step.t0" => cfg.step.t0 = parse_num(key, value)?,
                "weights.w" => cfg.weights.w = parse_num(key, value)?,
                "weights.w_prime" => cfg.weights.w_prime = parse_num(key, value)?,
                "curvature.c_iota" => cfg.c_iota = parse_num(key, value)?,
                "curvature.iota" => cfg.iota = Some(parse_num(key, value)?),
                "curvature.regularize" => cfg.regularize = parse_bool(key, value)?,
                "adagrad.g0" => cfg.g0 = parse_num(key, value)?,
                "adagrad.c_beta_prime" => cfg.clamp.c_beta_prime = parse_num(key, value)?,
                "adagrad.beta_prime" => cfg.clamp.beta_prime = parse_num(key, value)?,
                "adagrad.c_beta_dprime" => cfg.clamp.c_beta_dprime = parse_num(key, value)?,
                "adagrad.beta_dprime" => cfg.clamp.beta_dprime = parse_num(key, value)?,
                "output.path" => cfg.output = Some(PathBuf::from(value)),
                "output.timing" => cfg.timing = parse_bool(key, value)?,
                _ => return Err(Error::InvalidConfig(format!("unknown key {key:?}"))),
            }
        }
        cfg.batch = match batch_mode.as_str() {
            "constant" => BatchSchedule::Constant {
                n: batch_n.unwrap_or(cfg.dim),
            },
            "increasing" => BatchSchedule::Increasing { c_rho, rho },
            other => return Err(Error::InvalidConfig(format!("batch.mode: unknown {other:?}"))),
        };
        if let Some(avg) = averaging {
            cfg.methods.iter_mut().for_each(|m| m.averaging = avg);
        }
        Ok(cfg)
    }

    /// Optimizer configuration for one curve.
    pub fn optimizer_config(&self, spec: MethodSpec) -> OptimizerConfig {
        let schedules = Schedules {
            batch: self.batch,
            step: self.step,
            weights: self.weights,
        };
        let mut oc = OptimizerConfig::new(spec.method, self.problem, schedules);
        oc.averaging = spec.averaging;
        let defaults = CurvatureParams::for_method(spec.method);
        oc.curvature = CurvatureParams {
            p: self.p,
            c_iota: self.c_iota,
            iota: self.iota.unwrap_or(defaults.iota),
            regularize: self.regularize,
        };
        oc.clamp = self.clamp;
        oc.g0 = self.g0;
        oc
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim < 1 {
            return Err(Error::InvalidConfig("d >= 1".into()));
        }
        if self.total_samples < self.dim as u64 {
            return Err(Error::InvalidConfig("samples >= d".into()));
        }
        if self.runs < 1 {
            return Err(Error::InvalidConfig("runs >= 1".into()));
        }
        if self.checkpoints < 1 {
            return Err(Error::InvalidConfig("checkpoints >= 1".into()));
        }
        if self.methods.is_empty() {
            return Err(Error::InvalidConfig("at least one method".into()));
        }
        if !(self.init_radius >= 0.0 && self.noise_sd >= 0.0) {
            return Err(Error::InvalidConfig("r >= 0 and noise_sd >= 0".into()));
        }
        for spec in &self.methods {
            let oc = self.optimizer_config(*spec);
            // p only matters for Newton methods; newton_direct always ingests everything
            let oc = match spec.method {
                Method::NewtonDirect => OptimizerConfig {
                    curvature: CurvatureParams { p: 1.0, ..oc.curvature },
                    ..oc
                },
                _ => oc,
            };
            oc.validate()?;
        }
        Ok(())
    }

    /// The fully resolved configuration in the input format.
    pub fn to_kv(&self) -> String {
        let mut s = String::new();
        let methods: Vec<String> = self.methods.iter().map(|m| m.label()).collect();
        let _ = writeln!(s, "problem={}", self.problem.name());
        let _ = writeln!(s, "method={}", methods.join(","));
        let _ = writeln!(s, "d={}", self.dim);
        let _ = writeln!(s, "samples={}", self.total_samples);
        let _ = writeln!(s, "runs={}", self.runs);
        let _ = writeln!(s, "seed={}", self.seed);
        let _ = writeln!(s, "r={:?}", self.init_radius);
        let _ = writeln!(s, "noise_sd={:?}", self.noise_sd);
        let _ = writeln!(s, "checkpoints={}", self.checkpoints);
        let _ = writeln!(s, "p={:?}", self.p);
        match self.batch {
            BatchSchedule::Constant { n } => {
                let _ = writeln!(s, "batch.mode=constant\nbatch.n={n}");
            }
            BatchSchedule::Increasing { c_rho, rho } => {
                let _ = writeln!(s, "batch.mode=increasing\nbatch.c_rho={c_rho}\nbatch.rho={rho:?}");
            }
        }
        let _ = writeln!(s, "step.c_gamma={:?}", self.step.c_gamma);
        let _ = writeln!(s, "step.gamma={:?}", self.step.gamma);
        let _ = writeln!(s, "step.beta={:?}", self.step.beta);
        let _ = writeln!(s, "step.t0={}", self.step.t0);
        let _ = writeln!(s, "weights.w={:?}", self.weights.w);
        let _ = writeln!(s, "weights.w_prime={:?}", self.weights.w_prime);
        let _ = writeln!(s, "curvature.c_iota={:?}", self.c_iota);
        if let Some(iota) = self.iota {
            let _ = writeln!(s, "curvature.iota={iota:?}");
        }
        let _ = writeln!(s, "curvature.regularize={}", self.regularize);
        let _ = writeln!(s, "adagrad.g0={:?}", self.g0);
        let _ = writeln!(s, "adagrad.c_beta_prime={:?}", self.clamp.c_beta_prime);
        let _ = writeln!(s, "adagrad.beta_prime={:?}", self.clamp.beta_prime);
        let _ = writeln!(s, "adagrad.c_beta_dprime={:?}", self.clamp.c_beta_dprime);
        let _ = writeln!(s, "adagrad.beta_dprime={:?}", self.clamp.beta_dprime);
        if let Some(out) = &self.output {
            let _ = writeln!(s, "output.path={}", out.display());
        }
        let _ = writeln!(s, "output.timing={}", self.timing);
        s
    }
}
