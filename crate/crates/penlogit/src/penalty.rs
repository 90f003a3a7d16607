//! Penalty families for dimension-penalized selection, and the weight
//! schemes that keep model collections summable.
//!
//! All penalties are per-observation quantities added to the contrast:
//! criterion(m) = gamma_n(f̂_m) + pen(m). AIC and BIC carry no free
//! constant; the linear, shape and weighted families carry a multiplicative
//! constant that is either user-supplied or calibrated by the dimension-jump
//! heuristic (see the selection module).

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum PenaltyError {
    #[error("dimension {dim} out of range for sample size {n}")]
    DimensionOutOfRange { dim: usize, n: usize },
    #[error("penalty scale must be positive, got {0}")]
    NonPositiveScale(f64),
    #[error("weights must be positive, got {0}")]
    NonPositiveWeight(f64),
    #[error("cannot parse penalty spec '{0}'")]
    Parse(String),
}

/// Per-model weights L_m, keyed by dimension.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum WeightRule {
    /// One constant weight for every dimension; the natural choice when a
    /// collection holds a single model per dimension.
    Constant(f64),
    /// L_D = 2 + log(n/D); compensates the binomial count of irregular
    /// partitions sharing a dimension.
    DimensionDependent,
}

impl WeightRule {
    pub fn weight(&self, dim: usize, n: usize) -> f64 {
        match self {
            WeightRule::Constant(l) => *l,
            WeightRule::DimensionDependent => 2.0 + (n as f64 / dim as f64).ln(),
        }
    }
}

/// Which model count enters the summability diagnostic: one model per
/// dimension (regular partitions) or C(n-1, D-1) of them (irregular).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CollectionKind {
    Regular,
    Irregular,
}

/// A weight rule together with its computed summability diagnostic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightScheme {
    pub rule: WeightRule,
    pub sigma_bound: f64,
}

impl WeightScheme {
    pub fn new(rule: WeightRule, kind: CollectionKind, n: usize) -> Self {
        Self { rule, sigma_bound: sigma_diagnostic(&rule, kind, n) }
    }
}

/// Partial sum of exp(-L_D · D) · card{models of dimension D} over D = 1..n.
///
/// Binomial counts go through log-gamma: C(999, 500) overflows everything
/// else.
pub fn sigma_diagnostic(rule: &WeightRule, kind: CollectionKind, n: usize) -> f64 {
    (1..=n)
        .map(|d| {
            let log_card = match kind {
                CollectionKind::Regular => 0.0,
                CollectionKind::Irregular => ln_binomial(n - 1, d - 1),
            };
            (log_card - rule.weight(d, n) * d as f64).exp()
        })
        .sum()
}

fn ln_binomial(n: usize, k: usize) -> f64 {
    ln_gamma(n as f64 + 1.0) - ln_gamma(k as f64 + 1.0) - ln_gamma((n - k) as f64 + 1.0)
}

/// A penalty family with its evaluation rule pen(m).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum PenaltySpec {
    /// D/n.
    Aic,
    /// (log n / 2n) · D.
    Bic,
    /// c · D/n.
    Linear(f64),
    /// mu · (D/n) · [13 + 6 log(n/D) + 8 sqrt(2 + log(n/D))]; identical to
    /// `Weighted` under the dimension-dependent rule.
    Shape(f64),
    /// mu · (D/n) · (1 + 6 L + 8 sqrt(L)), the partition-collection form.
    Weighted { scale: f64, weights: WeightRule },
    /// lambda · (D/n) · (1/2 + sqrt(5 L))², the form for general dictionary
    /// models under a sup-norm box on fitted values.
    BoxedWeighted { scale: f64, weights: WeightRule },
    /// pen ≡ 0; only useful for overfit diagnostics.
    Zero,
}

impl PenaltySpec {
    pub fn linear(c: f64) -> Result<Self, PenaltyError> {
        check_scale(c)?;
        Ok(PenaltySpec::Linear(c))
    }

    pub fn shape(mu: f64) -> Result<Self, PenaltyError> {
        check_scale(mu)?;
        Ok(PenaltySpec::Shape(mu))
    }

    pub fn weighted(mu: f64, weights: WeightRule) -> Result<Self, PenaltyError> {
        check_scale(mu)?;
        check_weights(&weights)?;
        Ok(PenaltySpec::Weighted { scale: mu, weights })
    }

    pub fn boxed_weighted(lambda: f64, weights: WeightRule) -> Result<Self, PenaltyError> {
        check_scale(lambda)?;
        check_weights(&weights)?;
        Ok(PenaltySpec::BoxedWeighted { scale: lambda, weights })
    }

    /// pen(m) for a model of dimension `dim` at sample size `n`.
    pub fn evaluate(&self, dim: usize, n: usize) -> Result<f64, PenaltyError> {
        if dim < 1 || dim > n {
            return Err(PenaltyError::DimensionOutOfRange { dim, n });
        }
        let d = dim as f64;
        let nf = n as f64;
        Ok(match self {
            PenaltySpec::Aic => d / nf,
            PenaltySpec::Bic => nf.ln() / (2.0 * nf) * d,
            PenaltySpec::Linear(c) => c * d / nf,
            PenaltySpec::Shape(mu) => {
                let r = (nf / d).ln();
                mu * (d / nf) * (13.0 + 6.0 * r + 8.0 * (2.0 + r).sqrt())
            }
            PenaltySpec::Weighted { scale, weights } => {
                let l = weights.weight(dim, n);
                scale * (d / nf) * (1.0 + 6.0 * l + 8.0 * l.sqrt())
            }
            PenaltySpec::BoxedWeighted { scale, weights } => {
                let l = weights.weight(dim, n);
                let root = 0.5 + (5.0 * l).sqrt();
                scale * (d / nf) * root * root
            }
            PenaltySpec::Zero => 0.0,
        })
    }
}

fn check_scale(scale: f64) -> Result<(), PenaltyError> {
    // NaN fails too
    if !scale.is_finite() || scale <= 0.0 {
        return Err(PenaltyError::NonPositiveScale(scale));
    }
    Ok(())
}

fn check_weights(weights: &WeightRule) -> Result<(), PenaltyError> {
    if let WeightRule::Constant(l) = weights {
        if !l.is_finite() || *l <= 0.0 {
            return Err(PenaltyError::NonPositiveWeight(*l));
        }
    }
    Ok(())
}

fn weights_token(weights: &WeightRule) -> String {
    match weights {
        WeightRule::Constant(l) => format!("{l}"),
        WeightRule::DimensionDependent => "auto".to_string(),
    }
}

impl fmt::Display for PenaltySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PenaltySpec::Aic => write!(f, "aic"),
            PenaltySpec::Bic => write!(f, "bic"),
            PenaltySpec::Linear(c) => write!(f, "lin:{c}"),
            PenaltySpec::Shape(mu) => write!(f, "shape:{mu}"),
            PenaltySpec::Weighted { scale, weights } => {
                write!(f, "weighted:{scale}:{}", weights_token(weights))
            }
            PenaltySpec::BoxedWeighted { scale, weights } => {
                write!(f, "boxed:{scale}:{}", weights_token(weights))
            }
            PenaltySpec::Zero => write!(f, "zero"),
        }
    }
}

impl FromStr for PenaltySpec {
    type Err = PenaltyError;

    /// Grammar: "aic" | "bic" | "lin:<c>" | "shape:<mu>" |
    /// "weighted:<mu>:<L|auto>" | "boxed:<lambda>:<L|auto>" | "zero".
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parse_err = || PenaltyError::Parse(s.to_string());
        let parts: Vec<&str> = s.split(':').collect();
        let scalar = |token: &str| token.parse::<f64>().map_err(|_| parse_err());
        let rule = |token: &str| -> Result<WeightRule, PenaltyError> {
            if token == "auto" {
                Ok(WeightRule::DimensionDependent)
            } else {
                Ok(WeightRule::Constant(scalar(token)?))
            }
        };
        match parts.as_slice() {
            ["aic"] => Ok(PenaltySpec::Aic),
            ["bic"] => Ok(PenaltySpec::Bic),
            ["zero"] => Ok(PenaltySpec::Zero),
            ["lin", c] => PenaltySpec::linear(scalar(c)?),
            ["shape", mu] => PenaltySpec::shape(scalar(mu)?),
            ["weighted", mu, l] => PenaltySpec::weighted(scalar(mu)?, rule(l)?),
            ["boxed", lambda, l] => PenaltySpec::boxed_weighted(scalar(lambda)?, rule(l)?),
            _ => Err(parse_err()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn aic_direct_ratio() {
        assert_eq!(PenaltySpec::Aic.evaluate(3, 100).unwrap(), 0.03);
    }

    #[test]
    fn shape_at_full_dimension() {
        // the log term vanishes at D = n
        let expected = 13.0 + 8.0 * 2.0_f64.sqrt();
        let v = PenaltySpec::Shape(1.0).evaluate(50, 50).unwrap();
        assert!((v - expected).abs() < 1e-12);
        assert!((expected - 24.3137).abs() < 1e-4);
    }

    #[test]
    fn weighted_with_dimension_rule_matches_shape() {
        let weighted =
            PenaltySpec::Weighted { scale: 1.0, weights: WeightRule::DimensionDependent };
        let v = weighted.evaluate(50, 50).unwrap();
        assert!((v - (13.0 + 8.0 * 2.0_f64.sqrt())).abs() < 1e-12);
        for n in [10usize, 100, 1000] {
            for dim in 1..=n.min(64) {
                let a = PenaltySpec::Shape(1.7).evaluate(dim, n).unwrap();
                let b = PenaltySpec::Weighted { scale: 1.7, weights: WeightRule::DimensionDependent }
                    .evaluate(dim, n)
                    .unwrap();
                assert!((a - b).abs() < 1e-12, "n = {n}, dim = {dim}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn boxed_weighted_closed_form() {
        // (1/2 + sqrt(5 L))² with L = 5 gives 30.25
        let spec = PenaltySpec::BoxedWeighted { scale: 1.0, weights: WeightRule::Constant(5.0) };
        let v = spec.evaluate(4, 100).unwrap();
        assert!((v - 0.04 * 30.25).abs() < 1e-15);
        let scaled = PenaltySpec::BoxedWeighted { scale: 2.5, weights: WeightRule::Constant(5.0) };
        assert!((scaled.evaluate(4, 100).unwrap() - 2.5 * v).abs() < 1e-15);
    }

    #[test]
    fn every_family_strictly_increasing_in_dimension() {
        let specs = [
            PenaltySpec::Aic,
            PenaltySpec::Bic,
            PenaltySpec::Linear(0.37),
            PenaltySpec::Shape(1.0),
            PenaltySpec::Weighted { scale: 2.0, weights: WeightRule::Constant(1.5) },
            PenaltySpec::Weighted { scale: 1.0, weights: WeightRule::DimensionDependent },
            PenaltySpec::BoxedWeighted { scale: 1.0, weights: WeightRule::DimensionDependent },
            PenaltySpec::BoxedWeighted { scale: 0.5, weights: WeightRule::Constant(0.2) },
        ];
        for n in [10usize, 100, 1000, 10_000] {
            for spec in &specs {
                let mut prev = f64::NEG_INFINITY;
                for dim in 1..=n {
                    let v = spec.evaluate(dim, n).unwrap();
                    assert!(v > prev, "{spec} not increasing at dim {dim}, n {n}");
                    prev = v;
                }
            }
        }
    }

    #[test]
    fn bic_exceeds_aic_iff_log_n_above_two() {
        for (n, expected) in [(5usize, false), (10, true), (1000, true)] {
            let aic = PenaltySpec::Aic.evaluate(3, n).unwrap();
            let bic = PenaltySpec::Bic.evaluate(3, n).unwrap();
            assert_eq!(bic > aic, expected, "n = {n}");
        }
    }

    #[test]
    fn dimension_out_of_range() {
        assert!(matches!(
            PenaltySpec::Aic.evaluate(0, 10),
            Err(PenaltyError::DimensionOutOfRange { .. })
        ));
        assert!(matches!(
            PenaltySpec::Aic.evaluate(11, 10),
            Err(PenaltyError::DimensionOutOfRange { .. })
        ));
    }

    #[test]
    fn sigma_regular_geometric_series() {
        let v = sigma_diagnostic(&WeightRule::Constant(1.0), CollectionKind::Regular, 60);
        let limit = 1.0 / (std::f64::consts::E - 1.0);
        assert!((v - limit).abs() < 1e-15, "{v} vs {limit}");
        assert!((limit - 0.58198).abs() < 1e-5);
    }

    #[test]
    fn sigma_irregular_bounded_by_regular_limit() {
        let limit = 1.0 / (std::f64::consts::E - 1.0);
        let v = sigma_diagnostic(&WeightRule::DimensionDependent, CollectionKind::Irregular, 50);
        assert!(v <= limit, "{v} > {limit}");
        assert!(v > 0.0);
    }

    #[test]
    fn sigma_single_model_zero_weight() {
        assert_eq!(sigma_diagnostic(&WeightRule::Constant(0.0), CollectionKind::Regular, 1), 1.0);
    }

    #[test]
    fn weight_scheme_records_bound() {
        let scheme =
            WeightScheme::new(WeightRule::DimensionDependent, CollectionKind::Irregular, 100);
        assert!(scheme.sigma_bound.is_finite());
        assert!(scheme.sigma_bound > 0.0);
    }

    #[test]
    fn config_string_round_trip() {
        let specs = [
            PenaltySpec::Aic,
            PenaltySpec::Bic,
            PenaltySpec::Linear(0.25),
            PenaltySpec::Shape(2.0),
            PenaltySpec::Weighted { scale: 1.5, weights: WeightRule::Constant(3.0) },
            PenaltySpec::Weighted { scale: 1.5, weights: WeightRule::DimensionDependent },
            PenaltySpec::BoxedWeighted { scale: 0.5, weights: WeightRule::DimensionDependent },
            PenaltySpec::Zero,
        ];
        for spec in specs {
            let text = spec.to_string();
            let parsed: PenaltySpec = text.parse().unwrap();
            assert_eq!(parsed, spec, "{text}");
        }
    }

    #[test]
    fn parse_rejects_bad_specs() {
        for bad in ["", "aicc", "lin", "lin:x", "shape:-1", "weighted:1", "lin:0"] {
            assert!(bad.parse::<PenaltySpec>().is_err(), "{bad} should not parse");
        }
    }
}
