//! Data model for binary-response regression on a fixed design: samples,
//! fitted logits, the empirical contrast (normalized negative log-likelihood)
//! and the divergences used to compare fits.
//!
//! Logits are extended reals: a cell whose empirical success rate is 0 or 1
//! legitimately produces an infinite logit, so ±∞ is carried through instead
//! of being clamped. The Kullback-Leibler divergence to such a fit is +∞
//! while the squared Hellinger distance stays finite.

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("sample must contain at least one observation")]
    EmptySample,
    #[error("design point {value} at index {index} lies outside [0, 1]")]
    DesignOutOfRange { index: usize, value: f64 },
    #[error("label {value} at index {index} is not 0 or 1")]
    InvalidLabel { index: usize, value: u8 },
    #[error("degenerate logit conflicts with its label at index {index} (y = {y}, f = {logit})")]
    NonFiniteContrast { index: usize, y: u8, logit: f64 },
    #[error("|f0({x})| = {value} exceeds the declared bound {bound}")]
    BoundViolated { x: f64, value: f64, bound: f64 },
    #[error("pi_f0({x}) = {value} leaves [{rho}, 1 - {rho}]")]
    FloorViolated { x: f64, value: f64, rho: f64 },
}

/// Design points and binary responses, sorted by design point.
#[derive(Debug, Clone, PartialEq)]
pub struct BinarySample {
    xs: Vec<f64>,
    ys: Vec<u8>,
}

impl BinarySample {
    /// Builds a sample from design points in [0, 1] and labels in {0, 1}.
    ///
    /// Pairs are sorted by design point; the sort is stable so ties keep
    /// their input order.
    pub fn new(xs: Vec<f64>, ys: Vec<u8>) -> Result<Self, ModelError> {
        if xs.len() != ys.len() {
            return Err(ModelError::LengthMismatch { left: xs.len(), right: ys.len() });
        }
        if xs.is_empty() {
            return Err(ModelError::EmptySample);
        }
        for (index, &value) in xs.iter().enumerate() {
            if !(0.0..=1.0).contains(&value) {
                return Err(ModelError::DesignOutOfRange { index, value });
            }
        }
        for (index, &value) in ys.iter().enumerate() {
            if value > 1 {
                return Err(ModelError::InvalidLabel { index, value });
            }
        }
        let mut pairs: Vec<(f64, u8)> = xs.into_iter().zip(ys).collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let (xs, ys) = pairs.into_iter().unzip();
        Ok(Self { xs, ys })
    }

    pub fn n(&self) -> usize {
        self.xs.len()
    }

    pub fn xs(&self) -> &[f64] {
        &self.xs
    }

    pub fn ys(&self) -> &[u8] {
        &self.ys
    }
}

/// Logits f(x_i) at the design points together with their probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct FittedLogit {
    values: Vec<f64>,
    probs: Vec<f64>,
}

impl FittedLogit {
    pub fn from_values(values: Vec<f64>) -> Self {
        let probs = values.iter().map(|&f| sigmoid(f)).collect();
        Self { values, probs }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }
}

/// A regression function together with optional boundedness witnesses.
#[derive(Clone)]
pub struct TrueFunction {
    eval: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    bound: Option<f64>,
    prob_floor: Option<f64>,
}

impl fmt::Debug for TrueFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TrueFunction")
            .field("bound", &self.bound)
            .field("prob_floor", &self.prob_floor)
            .finish_non_exhaustive()
    }
}

impl TrueFunction {
    pub fn new(eval: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self { eval: Arc::new(eval), bound: None, prob_floor: None }
    }

    /// Declares a sup-norm bound: |f0(x_i)| <= bound at the design points.
    pub fn with_bound(mut self, bound: f64) -> Self {
        self.bound = Some(bound);
        self
    }

    /// Declares a probability floor: rho <= pi_f0(x_i) <= 1 - rho.
    pub fn with_prob_floor(mut self, rho: f64) -> Self {
        self.prob_floor = Some(rho);
        self
    }

    pub fn bound(&self) -> Option<f64> {
        self.bound
    }

    pub fn prob_floor(&self) -> Option<f64> {
        self.prob_floor
    }

    pub fn eval(&self, x: f64) -> f64 {
        (self.eval)(x)
    }

    /// Success probabilities pi_f0(x_i) at the design points.
    pub fn probs_at(&self, sample: &BinarySample) -> Vec<f64> {
        sample.xs().iter().map(|&x| sigmoid(self.eval(x))).collect()
    }

    /// Spot-checks the declared witnesses at the design points.
    pub fn validate_at(&self, sample: &BinarySample) -> Result<(), ModelError> {
        for &x in sample.xs() {
            let value = self.eval(x);
            if let Some(bound) = self.bound {
                if value.abs() > bound {
                    return Err(ModelError::BoundViolated { x, value, bound });
                }
            }
            if let Some(rho) = self.prob_floor {
                let p = sigmoid(value);
                if p < rho || p > 1.0 - rho {
                    return Err(ModelError::FloorViolated { x, value: p, rho });
                }
            }
        }
        Ok(())
    }
}

/// Logistic link e^f / (1 + e^f), exact at ±∞.
#[inline]
pub fn sigmoid(f: f64) -> f64 {
    if f >= 0.0 {
        1.0 / (1.0 + (-f).exp())
    } else {
        let e = f.exp();
        e / (1.0 + e)
    }
}

/// log(1 + e^f) without overflow: max(f, 0) + log1p(e^{-|f|}).
#[inline]
pub fn log1p_exp(f: f64) -> f64 {
    f.max(0.0) + (-f.abs()).exp().ln_1p()
}

/// Empirical contrast: gamma_n(f) = n^{-1} sum log(1 + e^{f(x_i)}) - Y_i f(x_i).
///
/// Infinite logits are legal where the data term cancels (y = 1 with f = +∞
/// or y = 0 with f = -∞ contribute 0); a conflicting infinite logit is an
/// error rather than a silent +∞.
pub fn contrast(sample: &BinarySample, logit: &FittedLogit) -> Result<f64, ModelError> {
    if logit.len() != sample.n() {
        return Err(ModelError::LengthMismatch { left: sample.n(), right: logit.len() });
    }
    let mut acc = 0.0;
    for (index, (&f, &y)) in logit.values().iter().zip(sample.ys()).enumerate() {
        if f.is_finite() {
            acc += log1p_exp(f) - f64::from(y) * f;
        } else if f == f64::INFINITY && y == 1 || f == f64::NEG_INFINITY && y == 0 {
            // perfect fit on this point: the limit of the term is 0
        } else {
            return Err(ModelError::NonFiniteContrast { index, y, logit: f });
        }
    }
    Ok(acc / sample.n() as f64)
}

fn check_lengths(p0: &[f64], p: &[f64]) -> Result<(), ModelError> {
    if p0.len() != p.len() || p0.is_empty() {
        return Err(ModelError::LengthMismatch { left: p0.len(), right: p.len() });
    }
    Ok(())
}

/// Kullback-Leibler divergence between Bernoulli product measures, averaged
/// over the design: n^{-1} sum p0 log(p0/p) + (1-p0) log((1-p0)/(1-p)).
///
/// Uses the 0·log 0 = 0 convention and returns +∞ on support violations
/// (p0 > 0 with p = 0, or p0 < 1 with p = 1).
pub fn kl_divergence(p0: &[f64], p: &[f64]) -> Result<f64, ModelError> {
    check_lengths(p0, p)?;
    let mut acc = 0.0;
    for (&a, &b) in p0.iter().zip(p) {
        if a > 0.0 {
            if b == 0.0 {
                return Ok(f64::INFINITY);
            }
            acc += a * (a / b).ln();
        }
        let (qa, qb) = (1.0 - a, 1.0 - b);
        if qa > 0.0 {
            if qb == 0.0 {
                return Ok(f64::INFINITY);
            }
            acc += qa * (qa / qb).ln();
        }
    }
    Ok(acc / p0.len() as f64)
}

/// Squared Hellinger distance between Bernoulli product measures, averaged
/// over the design: (2n)^{-1} sum (√p0 - √p)² + (√(1-p0) - √(1-p))².
///
/// Always finite and bounded by 1, which is why the benchmark uses it even
/// when fits are degenerate.
pub fn hellinger_sq(p0: &[f64], p: &[f64]) -> Result<f64, ModelError> {
    check_lengths(p0, p)?;
    let mut acc = 0.0;
    for (&a, &b) in p0.iter().zip(p) {
        let ds = a.sqrt() - b.sqrt();
        let dc = (1.0 - a).sqrt() - (1.0 - b).sqrt();
        acc += ds * ds + dc * dc;
    }
    Ok(acc / (2.0 * p0.len() as f64))
}

/// Squared empirical norm: n^{-1} sum f(x_i)².
pub fn empirical_norm_sq(values: &[f64]) -> f64 {
    assert!(!values.is_empty(), "empirical norm of an empty vector");
    values.iter().map(|v| v * v).sum::<f64>() / values.len() as f64
}
