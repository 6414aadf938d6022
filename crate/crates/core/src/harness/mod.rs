//! Replicated experiments over synthetic streams.
//!
//! Each run owns keyed random streams for its data, initialization, and
//! curvature subsampling, so a run's rows do not depend on scheduling or on
//! which other methods share the experiment. All methods of a run see the
//! same data and starting point.

mod config;
mod cost;
mod csv;

use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;

pub use config::{ExperimentConfig, MethodSpec};
pub use cost::{report_cost, CostReport, MethodCost};
pub use csv::{read_csv, write_csv, CSV_HEADER};

use crate::datagen::{sample_batch, sample_init, CovarianceModel, GroundTruth};
use crate::error::Result;
use crate::linalg::sq_dist;
use crate::optimizers::Optimizer;
use crate::problems::Problem;
use crate::rng::{stream, Substream, EXPERIMENT_RUN};

/// Aggregate row ids.
pub const MEAN_RUN: i64 = -1;
pub const STD_RUN: i64 = -2;

#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub method: String,
    /// Replication index, or [`MEAN_RUN`] / [`STD_RUN`] for aggregates.
    pub run_id: i64,
    pub t: u64,
    pub n_seen: u64,
    pub sq_error: f64,
    pub wall_ns: u64,
    pub rank_one_updates: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FailedRun {
    pub method: String,
    pub run_id: u64,
    pub t: u64,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    /// Sorted by `(method, run_id, t)`.
    pub records: Vec<RunRecord>,
    pub failed: Vec<FailedRun>,
}

/// Sample counts at which errors are recorded: `count` points log-spaced
/// from `first` to `total`, deduplicated.
pub fn checkpoint_grid(first: u64, total: u64, count: usize) -> Vec<u64> {
    if count <= 1 || first >= total {
        return vec![total];
    }
    let (lo, hi) = ((first as f64).ln(), (total as f64).ln());
    let mut grid: Vec<u64> = (0..count)
        .map(|i| (lo + (hi - lo) * i as f64 / (count - 1) as f64).exp().round() as u64)
        .map(|n| n.clamp(first, total))
        .collect();
    grid.dedup();
    *grid.last_mut().expect("nonempty") = total;
    grid
}

/// Shared per-experiment state: the feature model and target.
pub struct Environment {
    pub model: CovarianceModel,
    pub truth: GroundTruth,
}

impl Environment {
    pub fn new(cfg: &ExperimentConfig) -> Self {
        let mut rng = stream(cfg.seed, EXPERIMENT_RUN, Substream::Model);
        let model = CovarianceModel::new(cfg.dim, &mut rng);
        let truth = match cfg.problem {
            Problem::LeastSquares => GroundTruth::least_squares(cfg.dim, cfg.noise_sd),
            Problem::Logistic => GroundTruth::logistic(cfg.dim),
        };
        Environment { model, truth }
    }
}

/// Outcome of a single replication of one method.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub records: Vec<RunRecord>,
    pub failure: Option<FailedRun>,
    /// Final reported estimate (the last iterate before a failure).
    pub estimate: Vec<f64>,
}

pub fn run_single(cfg: &ExperimentConfig, env: &Environment, spec: MethodSpec, run_id: u64) -> Result<RunOutcome> {
    let label = spec.label();
    let mut data_rng = stream(cfg.seed, run_id, Substream::Data);
    let mut init_rng = stream(cfg.seed, run_id, Substream::Init);
    let z_rng = stream(cfg.seed, run_id, Substream::Subsample);
    let theta0 = sample_init(&env.truth.theta_star, cfg.init_radius, &mut init_rng);
    let mut opt = Optimizer::new(cfg.optimizer_config(spec), theta0, z_rng)?;

    let first = (cfg.batch.batch_size(1) as u64).min(cfg.total_samples);
    let grid = checkpoint_grid(first, cfg.total_samples, cfg.checkpoints);
    let mut next = 0;
    let mut records = Vec::with_capacity(grid.len());
    let start = Instant::now();
    let mut failure = None;
    while opt.state().samples_seen < cfg.total_samples {
        let t = opt.state().t + 1;
        let remaining = cfg.total_samples - opt.state().samples_seen;
        let n = (cfg.batch.batch_size(t) as u64).min(remaining) as usize;
        let batch = sample_batch(&env.model, &env.truth, n, &mut data_rng);
        if let Err(e) = opt.step(&batch) {
            failure = Some(FailedRun {
                method: label.clone(),
                run_id,
                t,
                reason: e.to_string(),
            });
            break;
        }
        let seen = opt.state().samples_seen;
        if next < grid.len() && seen >= grid[next] {
            while next < grid.len() && seen >= grid[next] {
                next += 1;
            }
            records.push(RunRecord {
                method: label.clone(),
                run_id: run_id as i64,
                t,
                n_seen: seen,
                sq_error: sq_dist(opt.estimate(), &env.truth.theta_star),
                wall_ns: if cfg.timing { start.elapsed().as_nanos() as u64 } else { 0 },
                rank_one_updates: opt.rank_one_updates(),
            });
        }
    }
    Ok(RunOutcome {
        records,
        failure,
        estimate: opt.estimate().to_vec(),
    })
}

/// Runs every method for `cfg.runs` replications on `threads` workers
/// (`None` uses the global rayon pool) and appends mean and standard
/// deviation rows over the runs that did not fail.
pub fn run_experiment(cfg: &ExperimentConfig, threads: Option<usize>) -> Result<ExperimentResult> {
    cfg.validate()?;
    let env = Environment::new(cfg);
    let jobs: Vec<(MethodSpec, u64)> = cfg
        .methods
        .iter()
        .flat_map(|m| (0..cfg.runs as u64).map(move |r| (*m, r)))
        .collect();
    let work = || -> Result<Vec<RunOutcome>> {
        jobs.par_iter()
            .map(|(spec, run)| run_single(cfg, &env, *spec, *run))
            .collect()
    };
    let outcomes = match threads {
        Some(k) => rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build()
            .map_err(|e| crate::Error::InvalidConfig(format!("thread pool: {e}")))?
            .install(work)?,
        None => work()?,
    };

    let mut records = Vec::new();
    let mut failed = Vec::new();
    for spec in &cfg.methods {
        let label = spec.label();
        let runs: Vec<&RunOutcome> = jobs
            .iter()
            .zip(&outcomes)
            .filter(|((s, _), _)| s == spec)
            .map(|(_, o)| o)
            .collect();
        let ok: Vec<&RunOutcome> = runs.iter().copied().filter(|o| o.failure.is_none()).collect();
        records.extend(aggregate(&label, &ok));
        for o in runs {
            records.extend(o.records.iter().cloned());
            failed.extend(o.failure.clone());
        }
    }
    records.sort_by(|a, b| (&a.method, a.run_id, a.t).cmp(&(&b.method, b.run_id, b.t)));
    Ok(ExperimentResult { records, failed })
}

fn aggregate(label: &str, runs: &[&RunOutcome]) -> Vec<RunRecord> {
    let Some(first) = runs.first() else {
        return Vec::new();
    };
    let count = runs.len() as f64;
    let mut out = Vec::with_capacity(2 * first.records.len());
    for (i, proto) in first.records.iter().enumerate() {
        let errs: Vec<f64> = runs.iter().map(|r| r.records[i].sq_error).collect();
        let mean = errs.iter().sum::<f64>() / count;
        let var = if runs.len() > 1 {
            errs.iter().map(|e| (e - mean) * (e - mean)).sum::<f64>() / (count - 1.0)
        } else {
            0.0
        };
        let wall = runs.iter().map(|r| r.records[i].wall_ns as f64).sum::<f64>() / count;
        let updates = runs.iter().map(|r| r.records[i].rank_one_updates as f64).sum::<f64>() / count;
        for (run_id, sq_error) in [(MEAN_RUN, mean), (STD_RUN, var.sqrt())] {
            out.push(RunRecord {
                method: label.to_string(),
                run_id,
                t: proto.t,
                n_seen: proto.n_seen,
                sq_error,
                wall_ns: wall.round() as u64,
                rank_one_updates: updates.round() as u64,
            });
        }
    }
    out
}

/// Writes `<csv>.meta`: the resolved config, crate version, and failed runs.
pub fn write_metadata(cfg: &ExperimentConfig, result: &ExperimentResult, csv_path: &Path) -> Result<()> {
    let mut meta = format!("version={}\n", crate::VERSION);
    meta.push_str(&cfg.to_kv());
    meta.push_str(&format!("failed_runs={}\n", result.failed.len()));
    for f in &result.failed {
        meta.push_str(&format!("failed={},{},{},{}\n", f.method, f.run_id, f.t, f.reason));
    }
    std::fs::write(metadata_path(csv_path), meta)?;
    Ok(())
}

pub fn metadata_path(csv_path: &Path) -> std::path::PathBuf {
    let mut name = csv_path.as_os_str().to_owned();
    name.push(".meta");
    name.into()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optimizers::Method;

    fn small(method: Method, runs: usize) -> ExperimentConfig {
        ExperimentConfig {
            methods: vec![MethodSpec::new(method)],
            dim: 2,
            total_samples: 1000,
            batch: crate::schedules::BatchSchedule::Constant { n: 2 },
            noise_sd: 0.0,
            runs,
            seed: 5,
            checkpoints: 10,
            ..Default::default()
        }
    }

    #[test]
    fn grid_is_increasing_and_ends_at_total() {
        let g = checkpoint_grid(10, 100_000, 25);
        assert!(g.windows(2).all(|w| w[1] > w[0]));
        assert_eq!((g[0], *g.last().unwrap()), (10, 100_000));
        assert_eq!(checkpoint_grid(5, 5, 10), vec![5]);
    }

    #[test]
    fn noiseless_sgd_smoke() {
        let res = run_experiment(&small(Method::Sgd, 1), Some(1)).unwrap();
        let last = res.records.iter().filter(|r| r.run_id == 0).last().unwrap();
        assert_eq!(last.n_seen, 1000);
        assert!(last.sq_error < 1e-2, "{}", last.sq_error);
        assert_eq!(last.rank_one_updates, 0);
    }

    #[test]
    fn aggregate_mean_is_mean_of_runs() {
        let res = run_experiment(&small(Method::Ssn, 4), None).unwrap();
        let finals: Vec<&RunRecord> = res.records.iter().filter(|r| r.n_seen == 1000).collect();
        let per_run: Vec<f64> = finals.iter().filter(|r| r.run_id >= 0).map(|r| r.sq_error).collect();
        assert_eq!(per_run.len(), 4);
        let mean = finals.iter().find(|r| r.run_id == MEAN_RUN).unwrap().sq_error;
        assert_eq!(mean, per_run.iter().sum::<f64>() / 4.0);
    }

    #[test]
    fn every_run_hits_every_checkpoint() {
        let cfg = small(Method::Adagrad, 3);
        let res = run_experiment(&cfg, Some(2)).unwrap();
        let grid = checkpoint_grid(2, 1000, 10);
        for run in 0..3 {
            let seen: Vec<u64> = res.records.iter().filter(|r| r.run_id == run).map(|r| r.n_seen).collect();
            assert_eq!(seen.len(), grid.len());
            assert!(seen.windows(2).all(|w| w[1] > w[0]));
        }
    }

    #[test]
    fn serial_and_parallel_runs_agree() {
        let mut cfg = small(Method::Wassn, 6);
        cfg.methods.push(MethodSpec::new(Method::Ssn));
        cfg.p = 0.5;
        cfg.noise_sd = 1.0;
        let serial = run_experiment(&cfg, Some(1)).unwrap();
        let parallel = run_experiment(&cfg, Some(4)).unwrap();
        assert_eq!(serial, parallel);
    }

    #[test]
    fn divergent_runs_are_flagged_and_excluded() {
        let mut cfg = small(Method::Sgd, 2);
        cfg.step.c_gamma = 1e6;
        cfg.init_radius = 1.0;
        let res = run_experiment(&cfg, Some(1)).unwrap();
        assert_eq!(res.failed.len(), 2);
        assert!(res.records.iter().all(|r| r.run_id >= 0));
    }
}
