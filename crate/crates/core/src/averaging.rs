//! Weighted Polyak-Ruppert averaging.
//!
//! The averager is weight-agnostic: callers pass `ln(t+1)^w` for constant
//! batches or `n_{t+1} ln(t+1)^w` for increasing ones.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct AveragerState {
    average: Vec<f64>,
    cum_weight: f64,
    steps_seen: u64,
}

impl AveragerState {
    pub fn new(dim: usize) -> Self {
        AveragerState {
            average: vec![0.0; dim],
            cum_weight: 0.0,
            steps_seen: 0,
        }
    }

    pub fn dim(&self) -> usize {
        self.average.len()
    }

    pub fn average(&self) -> &[f64] {
        &self.average
    }

    pub fn cum_weight(&self) -> f64 {
        self.cum_weight
    }

    pub fn steps_seen(&self) -> u64 {
        self.steps_seen
    }

    /// Folds `iterate` in with weight `weight >= 0`.
    ///
    /// While no positive weight has been seen the average tracks the latest
    /// iterate, since the weighted mean is 0/0 there.
    pub fn update(&mut self, iterate: &[f64], weight: f64) -> Result<()> {
        if iterate.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: iterate.len(),
            });
        }
        debug_assert!(weight >= 0.0);
        self.steps_seen += 1;
        if self.cum_weight == 0.0 {
            self.cum_weight = weight;
            self.average.copy_from_slice(iterate);
            return Ok(());
        }
        if weight == 0.0 {
            return Ok(());
        }
        self.cum_weight += weight;
        let ratio = weight / self.cum_weight;
        for (a, &x) in self.average.iter_mut().zip(iterate) {
            *a += ratio * (x - *a);
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schedules::log_weight;
    use proptest::prelude::*;

    fn direct_weighted_mean(iterates: &[Vec<f64>], weights: &[f64]) -> Vec<f64> {
        let d = iterates[0].len();
        let total: f64 = weights.iter().sum();
        (0..d)
            .map(|k| iterates.iter().zip(weights).map(|(x, w)| w * x[k]).sum::<f64>() / total)
            .collect()
    }

    #[test]
    fn uniform_weights_give_arithmetic_mean() {
        let mut avg = AveragerState::new(1);
        for i in 0..10 {
            avg.update(&[i as f64], 1.0).unwrap();
        }
        assert!((avg.average()[0] - 4.5).abs() < 1e-14);
        assert_eq!(avg.cum_weight(), 10.0);
    }

    #[test]
    fn zero_first_weight_is_placeholder() {
        let mut avg = AveragerState::new(2);
        avg.update(&[3.0, -1.0], log_weight(0, 2.0)).unwrap();
        assert_eq!(avg.average(), &[3.0, -1.0]);
        assert_eq!(avg.cum_weight(), 0.0);
        avg.update(&[1.0, 1.0], log_weight(1, 2.0)).unwrap();
        assert_eq!(avg.average(), &[1.0, 1.0]);
    }

    #[test]
    fn dimension_mismatch() {
        let mut avg = AveragerState::new(2);
        assert!(matches!(avg.update(&[1.0], 1.0), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn log_weighted_recursion_matches_direct_sum() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let iterates: Vec<Vec<f64>> = (0..1000)
            .map(|_| (0..3).map(|_| rng.random_range(-5.0..5.0)).collect())
            .collect();
        let weights: Vec<f64> = (0..1000).map(|i| log_weight(i, 2.0)).collect();
        let mut avg = AveragerState::new(3);
        for (x, &w) in iterates.iter().zip(&weights) {
            avg.update(x, w).unwrap();
        }
        let direct = direct_weighted_mean(&iterates, &weights);
        for (a, b) in avg.average().iter().zip(&direct) {
            assert!((a - b).abs() <= 1e-10);
        }
    }

    proptest! {
        #[test]
        fn average_stays_in_hull_of_weighted_iterates(
            stream in prop::collection::vec((prop::collection::vec(-100.0f64..100.0, 3), 0.0f64..5.0), 1..200)
        ) {
            let mut avg = AveragerState::new(3);
            let mut lo = [f64::INFINITY; 3];
            let mut hi = [f64::NEG_INFINITY; 3];
            for (x, w) in &stream {
                avg.update(x, *w).unwrap();
                if *w > 0.0 {
                    for k in 0..3 {
                        lo[k] = lo[k].min(x[k]);
                        hi[k] = hi[k].max(x[k]);
                    }
                }
            }
            if avg.cum_weight() > 0.0 {
                for k in 0..3 {
                    prop_assert!(avg.average()[k] >= lo[k] - 1e-9 && avg.average()[k] <= hi[k] + 1e-9);
                }
            }
        }

        #[test]
        fn zero_weight_after_start_is_ignored(x in prop::collection::vec(-10.0f64..10.0, 2)) {
            let mut avg = AveragerState::new(2);
            avg.update(&[1.0, 2.0], 0.5).unwrap();
            let before = avg.average().to_vec();
            avg.update(&x, 0.0).unwrap();
            prop_assert_eq!(avg.average(), &before[..]);
        }
    }
}
