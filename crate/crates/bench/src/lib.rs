//! Fixtures shared by the benchmarks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use streamopt::datagen::{sample_batch, CovarianceModel, GroundTruth};
use streamopt::{
    BatchSchedule, LogWeightSchedule, Method, Optimizer, OptimizerConfig, Problem, Sample, Schedules, StepSchedule,
};

pub fn random_vectors(d: usize, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| (0..d).map(|_| rng.random_range(-1.0..1.0)).collect()).collect()
}

/// `blocks` batches of size `d` from a least-squares model.
pub fn ls_blocks(d: usize, blocks: usize, seed: u64) -> Vec<Vec<Sample>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let model = CovarianceModel::new(d, &mut rng);
    let truth = GroundTruth::least_squares(d, 1.0);
    (0..blocks).map(|_| sample_batch(&model, &truth, d, &mut rng)).collect()
}

pub fn optimizer(method: Method, d: usize, p: f64) -> Optimizer {
    let step = match method {
        Method::NewtonDirect | Method::Ssn => StepSchedule::newton_harmonic(),
        _ => StepSchedule::default(),
    };
    let schedules = Schedules {
        batch: BatchSchedule::Constant { n: d },
        step,
        weights: LogWeightSchedule::default(),
    };
    let mut cfg = OptimizerConfig::new(method, Problem::LeastSquares, schedules);
    cfg.curvature.p = p;
    Optimizer::new(cfg, vec![0.0; d], ChaCha8Rng::seed_from_u64(0)).expect("valid config")
}

