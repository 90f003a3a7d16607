//! Scenario-driven benchmark study: four reference truth functions, seeded
//! data generation, parallel Monte-Carlo replication, and the ratio of the
//! selected estimator's Hellinger risk to the oracle's.
//!
//! Replications draw from counter-based RNG streams split off a master seed,
//! so results are identical for any parallel schedule; aggregation happens
//! sequentially in replication order, which makes reports bit-stable.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{hellinger_sq, sigmoid, BinarySample, TrueFunction};
use crate::regressogram::{fit_regressogram, regular_collection, MaxDimRule};
use crate::selection::{select, KappaGrid, ModelFit, PenaltyConfig, SelectionError};

#[derive(Debug, Error)]
pub enum SimulationError {
    #[error("unknown truth function '{0}'")]
    UnknownTruth(String),
    #[error("scenario needs n >= 10, got {0}")]
    SampleTooSmall(usize),
    #[error("scenario needs at least one replication")]
    NoReplications,
    #[error("scenario needs at least one penalty")]
    NoPenalties,
    #[error(transparent)]
    Selection(#[from] SelectionError),
}

/// The four reference regression functions of the benchmark: two piecewise
/// constant (inside the regressogram collections) and two smooth (outside).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TruthId {
    Mod1,
    Mod2,
    Mod3,
    Mod4,
}

pub const ALL_TRUTHS: [TruthId; 4] = [TruthId::Mod1, TruthId::Mod2, TruthId::Mod3, TruthId::Mod4];

/// Exact evaluation of the named truth at x in [0, 1].
pub fn truth_eval(id: TruthId, x: f64) -> f64 {
    match id {
        TruthId::Mod1 => {
            if x < 1.0 / 3.0 {
                0.5
            } else if x < 0.5 {
                1.0
            } else if x < 2.0 / 3.0 {
                2.0
            } else {
                0.25
            }
        }
        TruthId::Mod2 => {
            if x < 0.25 {
                0.75
            } else if x < 0.5 {
                0.5
            } else if x < 0.75 {
                0.2
            } else {
                0.3
            }
        }
        TruthId::Mod3 => (std::f64::consts::PI * x).sin(),
        TruthId::Mod4 => x.sqrt(),
    }
}

impl TruthId {
    pub fn eval(&self, x: f64) -> f64 {
        truth_eval(*self, x)
    }

    /// Sup-norm bound over [0, 1]; every truth is nonnegative and bounded.
    pub fn bound(&self) -> f64 {
        match self {
            TruthId::Mod1 => 2.0,
            TruthId::Mod2 => 0.75,
            TruthId::Mod3 | TruthId::Mod4 => 1.0,
        }
    }

    pub fn truth(&self) -> TrueFunction {
        let id = *self;
        let bound = self.bound();
        // |f0| <= c1 pins the probabilities inside [sigmoid(-c1), sigmoid(c1)]
        TrueFunction::new(move |x| truth_eval(id, x))
            .with_bound(bound)
            .with_prob_floor(sigmoid(-bound))
    }
}

impl fmt::Display for TruthId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TruthId::Mod1 => write!(f, "Mod1"),
            TruthId::Mod2 => write!(f, "Mod2"),
            TruthId::Mod3 => write!(f, "Mod3"),
            TruthId::Mod4 => write!(f, "Mod4"),
        }
    }
}

impl FromStr for TruthId {
    type Err = SimulationError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "mod1" => Ok(TruthId::Mod1),
            "mod2" => Ok(TruthId::Mod2),
            "mod3" => Ok(TruthId::Mod3),
            "mod4" => Ok(TruthId::Mod4),
            _ => Err(SimulationError::UnknownTruth(s.to_string())),
        }
    }
}

/// One benchmark configuration: a truth, a sample size, a replication count,
/// a master seed, the penalties to compare, and the collection cap.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub truth_id: TruthId,
    pub n: usize,
    pub replications: usize,
    pub seed: u64,
    pub penalties: Vec<PenaltyConfig>,
    pub collection: MaxDimRule,
}

impl Scenario {
    pub fn new(truth_id: TruthId, n: usize, replications: usize, seed: u64) -> Self {
        Self {
            truth_id,
            n,
            replications,
            seed,
            penalties: vec![PenaltyConfig::AutoShape],
            collection: MaxDimRule::NOverLogN,
        }
    }

    pub fn with_penalties(mut self, penalties: Vec<PenaltyConfig>) -> Self {
        self.penalties = penalties;
        self
    }

    pub fn validate(&self) -> Result<(), SimulationError> {
        if self.n < 10 {
            return Err(SimulationError::SampleTooSmall(self.n));
        }
        if self.replications < 1 {
            return Err(SimulationError::NoReplications);
        }
        if self.penalties.is_empty() {
            return Err(SimulationError::NoPenalties);
        }
        Ok(())
    }
}

/// Draws n design points uniformly on [0, 1], sorts them, then draws the
/// labels Bernoulli(sigmoid(f0(x_i))). The RNG stream is derived from
/// (seed, replication), so the same pair always yields the same sample.
pub fn generate_sample(truth: &TrueFunction, n: usize, seed: u64, replication: u64) -> BinarySample {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replication);
    let mut xs: Vec<f64> = (0..n).map(|_| rng.random()).collect();
    xs.sort_by(f64::total_cmp);
    let ys: Vec<u8> = xs
        .iter()
        .map(|&x| u8::from(rng.random::<f64>() < sigmoid(truth.eval(x))))
        .collect();
    BinarySample::new(xs, ys).expect("generated sample is valid")
}

pub fn generate(scenario: &Scenario, replication: u64) -> BinarySample {
    generate_sample(&scenario.truth_id.truth(), scenario.n, scenario.seed, replication)
}

/// Per-penalty benchmark outcome at one sample size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PenaltyBenchmark {
    pub penalty: String,
    /// mean selected risk / mean oracle risk (ratio of means).
    pub c_star: f64,
    /// delta-method standard error of the ratio.
    pub c_star_se: f64,
    pub numerator_mean: f64,
    pub numerator_se: f64,
}

/// Benchmark outcome at one sample size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkPoint {
    pub n: usize,
    pub replications: usize,
    /// Monte-Carlo mean of inf_m h²(pi_f0, pi_f̂_m).
    pub denominator_mean: f64,
    pub denominator_se: f64,
    /// How often each dimension was the oracle.
    pub oracle_dim_histogram: BTreeMap<usize, usize>,
    pub penalties: Vec<PenaltyBenchmark>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub truth_id: TruthId,
    pub seed: u64,
    pub points: Vec<BenchmarkPoint>,
}

impl BenchmarkReport {
    /// Long-format rows: model_id,penalty,n,replication_batch,c_star,se.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("model_id,penalty,n,replication_batch,c_star,se\n");
        for point in &self.points {
            for pb in &point.penalties {
                out.push_str(&format!(
                    "{},{},{},{},{:.16e},{:.16e}\n",
                    self.truth_id, pb.penalty, point.n, point.replications, pb.c_star, pb.c_star_se
                ));
            }
        }
        out
    }

    /// One (label, ns, c_stars) series per penalty, for plotting C* vs n.
    pub fn series(&self) -> Vec<(String, Vec<f64>, Vec<f64>)> {
        let mut labels: Vec<String> = Vec::new();
        for point in &self.points {
            for pb in &point.penalties {
                if !labels.contains(&pb.penalty) {
                    labels.push(pb.penalty.clone());
                }
            }
        }
        labels
            .into_iter()
            .map(|label| {
                let mut ns = Vec::new();
                let mut cs = Vec::new();
                for point in &self.points {
                    if let Some(pb) = point.penalties.iter().find(|pb| pb.penalty == label) {
                        ns.push(point.n as f64);
                        cs.push(pb.c_star);
                    }
                }
                (label, ns, cs)
            })
            .collect()
    }
}

struct Replication {
    oracle_h2: f64,
    oracle_dim: usize,
    selected_h2: Vec<f64>,
}

fn run_replication(
    scenario: &Scenario,
    truth: &TrueFunction,
    models: &[crate::regressogram::PartitionModel],
    replication: u64,
) -> Replication {
    let sample = generate_sample(truth, scenario.n, scenario.seed, replication);
    let p0 = truth.probs_at(&sample);
    let mut fits = Vec::with_capacity(models.len());
    let mut risks = Vec::with_capacity(models.len());
    for (model_id, model) in models.iter().enumerate() {
        let fit = fit_regressogram(&sample, model);
        let h2 = hellinger_sq(&p0, &fit.probs_at_design(&sample)).expect("equal lengths");
        fits.push(ModelFit { model_id, dimension: model.dimension(), contrast: fit.contrast });
        risks.push(h2);
    }
    // models are ordered by dimension, so the first minimum is the
    // smallest-dimension oracle
    let mut oracle_idx = 0;
    for (i, &h2) in risks.iter().enumerate().skip(1) {
        if h2 < risks[oracle_idx] {
            oracle_idx = i;
        }
    }
    let selected_h2 = scenario
        .penalties
        .iter()
        .map(|cfg| {
            let spec = match cfg.resolve(&fits, &KappaGrid::default(), scenario.n) {
                Ok((spec, _)) => spec,
                // a flat dimension path gives the calibration nothing to
                // work with; fall back to the family at unit scale
                Err(SelectionError::NoJump) => match cfg {
                    PenaltyConfig::AutoLinear => crate::penalty::PenaltySpec::Linear(1.0),
                    PenaltyConfig::AutoShape => crate::penalty::PenaltySpec::Shape(1.0),
                    PenaltyConfig::Fixed(spec) => *spec,
                },
                Err(other) => panic!("selection failed: {other}"),
            };
            let path = select(&fits, &spec, scenario.n).expect("non-empty collection");
            risks[path.chosen_entry().model_id]
        })
        .collect();
    Replication {
        oracle_h2: risks[oracle_idx],
        oracle_dim: models[oracle_idx].dimension(),
        selected_h2,
    }
}

/// Runs the full Monte-Carlo benchmark for one scenario.
///
/// C* is the ratio of means, matching the definition with the expectation in
/// the numerator and denominator separately; its standard error comes from
/// the delta method with the Monte-Carlo covariance of the two means.
pub fn run_benchmark(scenario: &Scenario) -> Result<BenchmarkReport, SimulationError> {
    scenario.validate()?;
    let truth = scenario.truth_id.truth();
    let models = regular_collection(scenario.n, scenario.collection);
    let reps: Vec<Replication> = (0..scenario.replications as u64)
        .into_par_iter()
        .map(|r| run_replication(scenario, &truth, &models, r))
        .collect();

    let r = scenario.replications as f64;
    let den_mean = reps.iter().map(|rep| rep.oracle_h2).sum::<f64>() / r;
    let den_var = reps.iter().map(|rep| (rep.oracle_h2 - den_mean).powi(2)).sum::<f64>()
        / (r - 1.0).max(1.0);
    let den_se = (den_var / r).sqrt();
    let mut histogram = BTreeMap::new();
    for rep in &reps {
        *histogram.entry(rep.oracle_dim).or_insert(0usize) += 1;
    }

    let penalties = scenario
        .penalties
        .iter()
        .enumerate()
        .map(|(k, cfg)| {
            let num_mean = reps.iter().map(|rep| rep.selected_h2[k]).sum::<f64>() / r;
            let num_var = reps
                .iter()
                .map(|rep| (rep.selected_h2[k] - num_mean).powi(2))
                .sum::<f64>()
                / (r - 1.0).max(1.0);
            let cov = reps
                .iter()
                .map(|rep| (rep.selected_h2[k] - num_mean) * (rep.oracle_h2 - den_mean))
                .sum::<f64>()
                / (r - 1.0).max(1.0);
            let c_star = num_mean / den_mean;
            // var(x̄/ȳ) ≈ (x̄/ȳ)² (σx²/x̄² − 2σxy/(x̄ȳ) + σy²/ȳ²) / R
            let rel = num_var / (num_mean * num_mean) - 2.0 * cov / (num_mean * den_mean)
                + den_var / (den_mean * den_mean);
            let c_star_se = (c_star * c_star * rel / r).max(0.0).sqrt();
            PenaltyBenchmark {
                penalty: cfg.to_string(),
                c_star,
                c_star_se,
                numerator_mean: num_mean,
                numerator_se: (num_var / r).sqrt(),
            }
        })
        .collect();

    Ok(BenchmarkReport {
        truth_id: scenario.truth_id,
        seed: scenario.seed,
        points: vec![BenchmarkPoint {
            n: scenario.n,
            replications: scenario.replications,
            denominator_mean: den_mean,
            denominator_se: den_se,
            oracle_dim_histogram: histogram,
            penalties,
        }],
    })
}

/// Runs the benchmark at several sample sizes and stitches the points into
/// one report (same truth, seed, penalties).
pub fn run_benchmark_sweep(
    base: &Scenario,
    ns: &[usize],
) -> Result<BenchmarkReport, SimulationError> {
    let mut points = Vec::with_capacity(ns.len());
    for &n in ns {
        let scenario = Scenario { n, ..base.clone() };
        points.extend(run_benchmark(&scenario)?.points);
    }
    Ok(BenchmarkReport { truth_id: base.truth_id, seed: base.seed, points })
}
