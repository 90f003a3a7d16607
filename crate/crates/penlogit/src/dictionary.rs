//! Maximum-likelihood fitting over finite dictionaries of functions under a
//! sup-norm box on the fitted values.
//!
//! A model is the span of selected dictionary functions, orthonormalized
//! against the empirical inner product ⟨u, v⟩_n = n^{-1} Σ u(x_i) v(x_i).
//! The fit minimizes the contrast over {f in span : max_i |f(x_i)| <= C0},
//! a smooth convex problem on a convex set: damped Newton steps with
//! backtracking, made feasible by Dykstra's alternating projection between
//! the coefficient subspace and the box on fitted values.

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::model::{log1p_exp, sigmoid, BinarySample, FittedLogit};
use crate::regressogram::{PartitionCells, PartitionModel};

#[derive(Debug, Error)]
pub enum DictionaryError {
    #[error("model is empty after rank reduction")]
    EmptyModel,
    #[error("dictionary index {index} out of range for {len} functions")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("solver did not reach tolerance within {iterations} iterations")]
    NoConvergence { iterations: usize, best: Box<MleFit> },
}

/// A finite list of named evaluators on [0, 1].
#[derive(Clone)]
pub struct Dictionary {
    functions: Vec<Arc<dyn Fn(f64) -> f64 + Send + Sync>>,
    names: Vec<String>,
}

impl fmt::Debug for Dictionary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Dictionary").field("names", &self.names).finish_non_exhaustive()
    }
}

impl Dictionary {
    pub fn new() -> Self {
        Self { functions: Vec::new(), names: Vec::new() }
    }

    pub fn push(&mut self, name: impl Into<String>, f: impl Fn(f64) -> f64 + Send + Sync + 'static) {
        self.names.push(name.into());
        self.functions.push(Arc::new(f));
    }

    pub fn len(&self) -> usize {
        self.functions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.functions.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn evaluate(&self, j: usize, x: f64) -> f64 {
        (self.functions[j])(x)
    }

    /// Cell indicators of an interval partition.
    ///
    /// Panics on rank-space partitions: their cells are index sets, not
    /// subsets of [0, 1].
    pub fn indicator_basis(model: &PartitionModel) -> Self {
        let breaks = match model.cells() {
            PartitionCells::Intervals(b) => b.clone(),
            PartitionCells::IndexRanges { .. } => {
                panic!("indicator basis requires an interval partition")
            }
        };
        let mut dict = Dictionary::new();
        let dim = breaks.len() + 1;
        for cell in 0..dim {
            let lo = if cell == 0 { 0.0 } else { breaks[cell - 1] };
            let hi = if cell + 1 == dim { f64::INFINITY } else { breaks[cell] };
            dict.push(format!("cell_{cell}"), move |x| {
                if x >= lo && x < hi {
                    1.0
                } else {
                    0.0
                }
            });
        }
        dict
    }
}

impl Default for Dictionary {
    fn default() -> Self {
        Self::new()
    }
}

/// A model span with its basis orthonormalized in ⟨·,·⟩_n.
#[derive(Debug, Clone, PartialEq)]
pub struct DictionaryModel {
    indices: Vec<usize>,
    /// dimension × n rows of basis values at design points.
    basis: Vec<Vec<f64>>,
}

impl DictionaryModel {
    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn dimension(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[Vec<f64>] {
        &self.basis
    }

    /// Fitted values f(x_i) for the coefficient vector.
    pub fn values_of(&self, coefficients: &[f64]) -> Vec<f64> {
        assert_eq!(coefficients.len(), self.dimension());
        let n = self.basis.first().map_or(0, Vec::len);
        let mut values = vec![0.0; n];
        for (c, row) in coefficients.iter().zip(&self.basis) {
            for (v, b) in values.iter_mut().zip(row) {
                *v += c * b;
            }
        }
        values
    }
}

/// Relative residual-norm threshold below which a vector is rank-deficient.
const RANK_TOL: f64 = 1e-10;

fn inner_n(u: &[f64], v: &[f64]) -> f64 {
    u.iter().zip(v).map(|(a, b)| a * b).sum::<f64>() / u.len() as f64
}

fn norm_n(u: &[f64]) -> f64 {
    inner_n(u, u).sqrt()
}

/// Modified Gram-Schmidt against the empirical inner product. Vectors whose
/// residual drops below `RANK_TOL` times their initial norm are dropped and
/// the dimension shrinks accordingly.
pub fn orthonormalize(
    dict: &Dictionary,
    indices: &[usize],
    sample: &BinarySample,
) -> Result<DictionaryModel, DictionaryError> {
    for &j in indices {
        if j >= dict.len() {
            return Err(DictionaryError::IndexOutOfRange { index: j, len: dict.len() });
        }
    }
    let xs = sample.xs();
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for &j in indices {
        let mut v: Vec<f64> = xs.iter().map(|&x| dict.evaluate(j, x)).collect();
        let initial = norm_n(&v);
        if initial == 0.0 {
            continue;
        }
        for psi in &basis {
            let coeff = inner_n(&v, psi);
            for (a, b) in v.iter_mut().zip(psi) {
                *a -= coeff * b;
            }
        }
        let residual = norm_n(&v);
        if residual < RANK_TOL * initial {
            continue;
        }
        for a in &mut v {
            *a /= residual;
        }
        basis.push(v);
    }
    if basis.is_empty() {
        return Err(DictionaryError::EmptyModel);
    }
    Ok(DictionaryModel { indices: indices.to_vec(), basis })
}

/// Solver configuration: sup-norm box C0, KKT tolerance, iteration cap.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitConfig {
    pub c0_bound: f64,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for FitConfig {
    fn default() -> Self {
        // C0 = 10 leaves the box inactive for bounded truths while still
        // stopping separation blow-ups
        Self { c0_bound: 10.0, tol: 1e-8, max_iter: 100 }
    }
}

/// A constrained maximum-likelihood fit.
#[derive(Debug, Clone)]
pub struct MleFit {
    pub logit: FittedLogit,
    pub coefficients: Vec<f64>,
    pub contrast: f64,
    pub iterations: usize,
    pub projected_gradient_norm: f64,
}

/// Contrast and its coefficient gradient at `coefficients`.
pub fn gamma_and_gradient(
    model: &DictionaryModel,
    sample: &BinarySample,
    coefficients: &[f64],
) -> (f64, Vec<f64>) {
    let values = model.values_of(coefficients);
    let n = sample.n() as f64;
    let mut gamma = 0.0;
    let mut residual = vec![0.0; sample.n()];
    for (i, (&f, &y)) in values.iter().zip(sample.ys()).enumerate() {
        gamma += log1p_exp(f) - f64::from(y) * f;
        residual[i] = sigmoid(f) - f64::from(y);
    }
    let grad = model.basis().iter().map(|row| inner_n(&residual, row)).collect();
    (gamma / n, grad)
}

const DYKSTRA_SWEEPS: usize = 1000;
const DYKSTRA_TOL: f64 = 1e-13;

/// Metric projection of a coefficient vector onto
/// {beta : max_i |f_beta(x_i)| <= c0} via Dykstra's alternating projection
/// between the box (clamp) and the span (coefficient recovery). The basis is
/// orthonormal in ⟨·,·⟩_n, so coefficient l2 distance equals the ‖·‖_n
/// distance between the functions.
fn project_feasible(model: &DictionaryModel, beta: &[f64], c0: f64) -> Vec<f64> {
    if !c0.is_finite() {
        return beta.to_vec();
    }
    let values = model.values_of(beta);
    if values.iter().all(|v| v.abs() <= c0) {
        return beta.to_vec();
    }
    let n = values.len();
    let mut x = values;
    let mut p = vec![0.0; n];
    let mut q = vec![0.0; n];
    let mut coeffs = beta.to_vec();
    for _ in 0..DYKSTRA_SWEEPS {
        let mut y = vec![0.0; n];
        for i in 0..n {
            y[i] = (x[i] + p[i]).clamp(-c0, c0);
            p[i] = x[i] + p[i] - y[i];
        }
        let target: Vec<f64> = y.iter().zip(&q).map(|(a, b)| a + b).collect();
        let new_coeffs: Vec<f64> =
            model.basis().iter().map(|row| inner_n(&target, row)).collect();
        let x_new = model.values_of(&new_coeffs);
        for i in 0..n {
            q[i] = target[i] - x_new[i];
        }
        let moved = coeffs
            .iter()
            .zip(&new_coeffs)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        let violation = x_new.iter().fold(0.0f64, |m, v| m.max(v.abs() - c0));
        coeffs = new_coeffs;
        x = x_new;
        if moved < DYKSTRA_TOL && violation < 1e-9 * c0.max(1.0) {
            break;
        }
    }
    coeffs
}

/// Solves L L^T = H and returns H^{-1} rhs, or None when H is not positive
/// definite.
fn cholesky_solve(h: &[Vec<f64>], rhs: &[f64]) -> Option<Vec<f64>> {
    let d = h.len();
    let mut l = vec![vec![0.0; d]; d];
    for i in 0..d {
        for j in 0..=i {
            let mut sum = h[i][j];
            for (a, b) in l[i][..j].iter().zip(&l[j][..j]) {
                sum -= a * b;
            }
            if i == j {
                if sum <= 0.0 || !sum.is_finite() {
                    return None;
                }
                l[i][i] = sum.sqrt();
            } else {
                l[i][j] = sum / l[j][j];
            }
        }
    }
    let mut z = vec![0.0; d];
    for i in 0..d {
        let mut sum = rhs[i];
        for k in 0..i {
            sum -= l[i][k] * z[k];
        }
        z[i] = sum / l[i][i];
    }
    let mut x = vec![0.0; d];
    for i in (0..d).rev() {
        let mut sum = z[i];
        for k in (i + 1)..d {
            sum -= l[k][i] * x[k];
        }
        x[i] = sum / l[i][i];
    }
    Some(x)
}

fn gamma_at(model: &DictionaryModel, sample: &BinarySample, beta: &[f64]) -> f64 {
    let values = model.values_of(beta);
    values
        .iter()
        .zip(sample.ys())
        .map(|(&f, &y)| log1p_exp(f) - f64::from(y) * f)
        .sum::<f64>()
        / sample.n() as f64
}

/// Constrained MLE from the zero function (always feasible).
pub fn fit_mle(
    model: &DictionaryModel,
    sample: &BinarySample,
    cfg: &FitConfig,
) -> Result<MleFit, DictionaryError> {
    fit_mle_from(model, sample, cfg, &vec![0.0; model.dimension()])
}

/// Constrained MLE from an arbitrary start (projected onto the feasible set
/// first). The problem is strictly convex on the span, so every start reaches
/// the same minimum.
#[allow(clippy::needless_range_loop)] // symmetric matrix fill
pub fn fit_mle_from(
    model: &DictionaryModel,
    sample: &BinarySample,
    cfg: &FitConfig,
    start: &[f64],
) -> Result<MleFit, DictionaryError> {
    let dim = model.dimension();
    assert_eq!(start.len(), dim, "start has wrong dimension");
    let c0 = cfg.c0_bound;
    let mut beta = project_feasible(model, start, c0);
    let mut gamma = gamma_at(model, sample, &beta);
    let mut pg_norm = f64::INFINITY;
    let n = sample.n() as f64;

    let finish = |beta: Vec<f64>, gamma: f64, iterations: usize, pg: f64| MleFit {
        logit: FittedLogit::from_values(model.values_of(&beta)),
        contrast: gamma,
        coefficients: beta,
        iterations,
        projected_gradient_norm: pg,
    };

    for iter in 0..cfg.max_iter {
        let values = model.values_of(&beta);
        let probs: Vec<f64> = values.iter().map(|&f| sigmoid(f)).collect();
        let residual: Vec<f64> =
            probs.iter().zip(sample.ys()).map(|(&p, &y)| p - f64::from(y)).collect();
        let grad: Vec<f64> = model.basis().iter().map(|row| inner_n(&residual, row)).collect();

        // KKT residual: distance to the projected unit gradient step
        let step: Vec<f64> = beta.iter().zip(&grad).map(|(b, g)| b - g).collect();
        let projected = project_feasible(model, &step, c0);
        pg_norm = beta
            .iter()
            .zip(&projected)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        if pg_norm <= cfg.tol {
            return Ok(finish(beta, gamma, iter, pg_norm));
        }

        // damped Newton direction with escalating ridge
        let weights: Vec<f64> = probs.iter().map(|&p| p * (1.0 - p)).collect();
        let mut hess = vec![vec![0.0; dim]; dim];
        for j in 0..dim {
            for k in j..dim {
                let sum: f64 = weights
                    .iter()
                    .zip(&model.basis()[j])
                    .zip(&model.basis()[k])
                    .map(|((w, a), b)| w * a * b)
                    .sum();
                hess[j][k] = sum / n;
                hess[k][j] = hess[j][k];
            }
        }
        let neg_grad: Vec<f64> = grad.iter().map(|g| -g).collect();
        let mut ridge = 0.0;
        let direction = loop {
            let mut damped = hess.clone();
            if ridge > 0.0 {
                for (j, row) in damped.iter_mut().enumerate() {
                    row[j] += ridge;
                }
            }
            if let Some(d) = cholesky_solve(&damped, &neg_grad) {
                break d;
            }
            ridge = if ridge == 0.0 { 1e-10 } else { ridge * 100.0 };
            if ridge > 1e6 {
                // fall back to steepest descent
                break neg_grad.clone();
            }
        };

        let mut improved = false;
        for candidate_dir in [&direction, &neg_grad] {
            let mut t = 1.0;
            for _ in 0..60 {
                let trial: Vec<f64> =
                    beta.iter().zip(candidate_dir.iter()).map(|(b, d)| b + t * d).collect();
                let projected = project_feasible(model, &trial, c0);
                let trial_gamma = gamma_at(model, sample, &projected);
                if trial_gamma < gamma {
                    beta = projected;
                    gamma = trial_gamma;
                    improved = true;
                    break;
                }
                t *= 0.5;
            }
            if improved {
                break;
            }
        }
        if !improved {
            // descent exhausted at floating-point resolution
            break;
        }
    }

    let iterations = cfg.max_iter;
    Err(DictionaryError::NoConvergence {
        iterations,
        best: Box::new(finish(beta, gamma, iterations, pg_norm)),
    })
}
