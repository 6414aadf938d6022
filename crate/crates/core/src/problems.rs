//! Per-sample loss oracles.
//!
//! Both problems are generalized linear models, so the per-sample gradient is
//! a scalar multiple of `x` and the per-sample Hessian is `α x xᵀ`.

use crate::error::{Error, Result};
use crate::linalg::dot;

/// One streamed observation `(x, y)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub x: Vec<f64>,
    pub y: f64,
}

/// Per-sample Hessian factor: `∇²f(θ; ξ) = alpha · phi phiᵀ`.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvaturePair {
    pub alpha: f64,
    pub phi: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Eval {
    pub loss: f64,
    pub grad: Vec<f64>,
    pub curv: CurvaturePair,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Problem {
    LeastSquares,
    Logistic,
}

impl Problem {
    pub fn eval(&self, theta: &[f64], s: &Sample) -> Result<Eval> {
        match self {
            Problem::LeastSquares => ls_eval(theta, s),
            Problem::Logistic => logit_eval(theta, s),
        }
    }

    /// Returns `(g, α)` with `∇f = g·x` and `∇²f = α·x xᵀ`.
    pub fn glm_terms(&self, theta: &[f64], s: &Sample) -> Result<(f64, f64)> {
        check_dims(theta, s)?;
        let u = dot(&s.x, theta);
        match self {
            Problem::LeastSquares => Ok((u - s.y, 1.0)),
            Problem::Logistic => {
                check_label(s.y)?;
                let p = sigmoid(u);
                Ok((p - s.y, p * (1.0 - p)))
            }
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Problem::LeastSquares => "ls",
            Problem::Logistic => "logit",
        }
    }
}

fn check_dims(theta: &[f64], s: &Sample) -> Result<()> {
    if theta.len() != s.x.len() {
        return Err(Error::DimensionMismatch {
            expected: theta.len(),
            found: s.x.len(),
        });
    }
    Ok(())
}

fn check_label(y: f64) -> Result<()> {
    if y == 0.0 || y == 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidLabel(y))
    }
}

pub fn sigmoid(u: f64) -> f64 {
    if u >= 0.0 {
        1.0 / (1.0 + (-u).exp())
    } else {
        let e = u.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^u)` without overflow.
pub fn softplus(u: f64) -> f64 {
    u.max(0.0) + (-u.abs()).exp().ln_1p()
}

/// Least squares: `f = ½(y − xᵀθ)²`.
pub fn ls_eval(theta: &[f64], s: &Sample) -> Result<Eval> {
    check_dims(theta, s)?;
    let r = s.y - dot(&s.x, theta);
    Ok(Eval {
        loss: 0.5 * r * r,
        grad: s.x.iter().map(|xi| -r * xi).collect(),
        curv: CurvaturePair {
            alpha: 1.0,
            phi: s.x.clone(),
        },
    })
}

/// Logistic regression with labels in {0, 1}: `f = ln(1 + e^{xᵀθ}) − y xᵀθ`.
pub fn logit_eval(theta: &[f64], s: &Sample) -> Result<Eval> {
    check_dims(theta, s)?;
    check_label(s.y)?;
    let u = dot(&s.x, theta);
    let p = sigmoid(u);
    Ok(Eval {
        loss: softplus(u) - s.y * u,
        grad: s.x.iter().map(|xi| (p - s.y) * xi).collect(),
        curv: CurvaturePair {
            alpha: p * (1.0 - p),
            phi: s.x.clone(),
        },
    })
}
