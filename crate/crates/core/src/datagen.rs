//! Synthetic streams with rotated, ill-conditioned Gaussian features.
//!
//! Features are `x = M diag(i/d) z` with `z ~ N(0, I_d)` and `M` a Haar
//! orthogonal matrix, so `Cov(x) = M diag(i²/d²) Mᵀ` and the feature
//! second-moment spectrum spans a ratio of exactly `d²`.

use std::io::Write;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::linalg::{dot, SymMatrix};
use crate::problems::{sigmoid, Sample};

#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceModel {
    dim: usize,
    /// Row-major orthogonal `M`.
    rotation: Vec<f64>,
    scales: Vec<f64>,
}

impl CovarianceModel {
    pub fn new(dim: usize, rng: &mut impl Rng) -> Self {
        CovarianceModel {
            dim,
            rotation: random_orthogonal(dim, rng),
            scales: (1..=dim).map(|i| i as f64 / dim as f64).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rotation(&self) -> &[f64] {
        &self.rotation
    }

    pub fn scales(&self) -> &[f64] {
        &self.scales
    }

    /// Exact `M diag(scales²) Mᵀ`; also the least-squares Hessian.
    pub fn covariance(&self) -> SymMatrix {
        let d = self.dim;
        let mut out = SymMatrix::zeros(d);
        for (k, s) in self.scales.iter().enumerate() {
            let col: Vec<f64> = (0..d).map(|i| self.rotation[i * d + k]).collect();
            out.add_outer(&col, s * s);
        }
        out
    }

    pub fn sample_x(&self, rng: &mut impl Rng) -> Vec<f64> {
        let d = self.dim;
        let scaled: Vec<f64> = self
            .scales
            .iter()
            .map(|s| s * rng.sample::<f64, _>(StandardNormal))
            .collect();
        (0..d).map(|i| dot(&self.rotation[i * d..(i + 1) * d], &scaled)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ResponseModel {
    LeastSquares { noise_sd: f64 },
    Logistic,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub theta_star: Vec<f64>,
    pub response: ResponseModel,
}

impl GroundTruth {
    /// Evenly spaced `θ*` from `−d/2` to `d/2`.
    pub fn least_squares(dim: usize, noise_sd: f64) -> Self {
        let half = dim as f64 / 2.0;
        let theta_star = if dim == 1 {
            vec![half]
        } else {
            (0..dim)
                .map(|k| -half + k as f64 * dim as f64 / (dim - 1) as f64)
                .collect()
        };
        GroundTruth {
            theta_star,
            response: ResponseModel::LeastSquares { noise_sd },
        }
    }

    /// `θ* = (1, …, 1)`.
    pub fn logistic(dim: usize) -> Self {
        GroundTruth {
            theta_star: vec![1.0; dim],
            response: ResponseModel::Logistic,
        }
    }
}

/// Haar-distributed orthogonal matrix (row-major).
///
/// Gram-Schmidt on i.i.d. Gaussian columns is QR with a positive `R`
/// diagonal, which is exactly the sign-corrected Haar construction. Each
/// column is orthogonalized twice to keep `MᵀM = I` to round-off.
pub fn random_orthogonal(d: usize, rng: &mut impl Rng) -> Vec<f64> {
    'draw: loop {
        let mut cols: Vec<Vec<f64>> = Vec::with_capacity(d);
        for _ in 0..d {
            let mut v: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
            let raw_norm = dot(&v, &v).sqrt();
            for _pass in 0..2 {
                for q in &cols {
                    let proj = dot(q, &v);
                    v.iter_mut().zip(q).for_each(|(vi, qi)| *vi -= proj * qi);
                }
            }
            let norm = dot(&v, &v).sqrt();
            if !(norm > 1e-8 * raw_norm) {
                continue 'draw;
            }
            v.iter_mut().for_each(|vi| *vi /= norm);
            cols.push(v);
        }
        let mut m = vec![0.0; d * d];
        for (j, col) in cols.iter().enumerate() {
            for i in 0..d {
                m[i * d + j] = col[i];
            }
        }
        return m;
    }
}

pub fn sample_batch(
    model: &CovarianceModel,
    truth: &GroundTruth,
    n: usize,
    rng: &mut impl Rng,
) -> Vec<Sample> {
    (0..n)
        .map(|_| {
            let x = model.sample_x(rng);
            let u = dot(&x, &truth.theta_star);
            let y = match truth.response {
                ResponseModel::LeastSquares { noise_sd } => {
                    let eps: f64 = rng.sample(StandardNormal);
                    u + noise_sd * eps
                }
                ResponseModel::Logistic => {
                    if rng.random::<f64>() < sigmoid(u) {
                        1.0
                    } else {
                        0.0
                    }
                }
            };
            Sample { x, y }
        })
        .collect()
}

/// Uniform direction on the unit sphere of `R^d`.
pub fn unit_sphere(d: usize, rng: &mut impl Rng) -> Vec<f64> {
    loop {
        let g: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        let norm = dot(&g, &g).sqrt();
        if norm > 0.0 {
            return g.into_iter().map(|x| x / norm).collect();
        }
    }
}

/// `θ₀ = θ* ∘ (1 + rU)` with `U` uniform on the unit sphere.
pub fn sample_init(theta_star: &[f64], r: f64, rng: &mut impl Rng) -> Vec<f64> {
    let u = unit_sphere(theta_star.len(), rng);
    theta_star.iter().zip(&u).map(|(t, uk)| t * (1.0 + r * uk)).collect()
}

/// Writes one sample per line: `x_1,…,x_d,y`.
pub fn dump_stream<W: Write>(samples: &[Sample], mut out: W) -> std::io::Result<()> {
    for s in samples {
        for x in &s.x {
            write!(out, "{x:?},")?;
        }
        writeln!(out, "{:?}", s.y)?;
    }
    Ok(())
}
