//! Penalized model choice and slope-heuristic calibration of the penalty
//! constant via the dimension-jump method.
//!
//! `select` minimizes criterion(m) = gamma_n(f̂_m) + pen(m) with a
//! deterministic tie-break. `dimension_jump` scans a grid of constants kappa,
//! records the dimension selected under kappa·pen_shape, locates the biggest
//! collapse in selected dimension, and returns twice the constant at the
//! collapse as the calibrated penalty constant (the ideal penalty is
//! approximately twice the minimal one).

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::penalty::{PenaltyError, PenaltySpec};

#[derive(Debug, Error)]
pub enum SelectionError {
    #[error("model collection is empty")]
    EmptyCollection,
    #[error("selected dimension is constant over the whole kappa grid; the collection or the grid is degenerate")]
    NoJump,
    #[error(transparent)]
    Penalty(#[from] PenaltyError),
}

/// One fitted model as seen by the selector: identity, complexity, contrast.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelFit {
    pub model_id: usize,
    pub dimension: usize,
    pub contrast: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionEntry {
    pub model_id: usize,
    pub dimension: usize,
    pub contrast: f64,
    pub penalty: f64,
    pub criterion: f64,
}

/// The full criterion trace over a collection plus the argmin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionPath {
    pub entries: Vec<CriterionEntry>,
    /// Index into `entries` of the minimizer.
    pub chosen: usize,
}

impl CriterionPath {
    pub fn chosen_entry(&self) -> &CriterionEntry {
        &self.entries[self.chosen]
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("model_id,dimension,contrast,penalty,criterion\n");
        for e in &self.entries {
            out.push_str(&format!(
                "{},{},{:.16e},{:.16e},{:.16e}\n",
                e.model_id, e.dimension, e.contrast, e.penalty, e.criterion
            ));
        }
        out
    }
}

/// Ties go to the smallest criterion, then smallest dimension, then smallest
/// model id.
fn better(candidate: &CriterionEntry, incumbent: &CriterionEntry) -> bool {
    if candidate.criterion != incumbent.criterion {
        return candidate.criterion < incumbent.criterion;
    }
    if candidate.dimension != incumbent.dimension {
        return candidate.dimension < incumbent.dimension;
    }
    candidate.model_id < incumbent.model_id
}

fn argmin(entries: &[CriterionEntry]) -> usize {
    let mut best = 0;
    for (i, e) in entries.iter().enumerate().skip(1) {
        if better(e, &entries[best]) {
            best = i;
        }
    }
    best
}

/// Penalized model choice: argmin of contrast + pen over the collection.
pub fn select(
    fits: &[ModelFit],
    pen: &PenaltySpec,
    n: usize,
) -> Result<CriterionPath, SelectionError> {
    if fits.is_empty() {
        return Err(SelectionError::EmptyCollection);
    }
    let entries = fits
        .iter()
        .map(|f| {
            let penalty = pen.evaluate(f.dimension, n)?;
            Ok(CriterionEntry {
                model_id: f.model_id,
                dimension: f.dimension,
                contrast: f.contrast,
                penalty,
                criterion: f.contrast + penalty,
            })
        })
        .collect::<Result<Vec<_>, PenaltyError>>()?;
    let chosen = argmin(&entries);
    Ok(CriterionPath { entries, chosen })
}

/// Trial-constant grid for the dimension jump.
#[derive(Debug, Clone, PartialEq)]
pub enum KappaGrid {
    /// `points` geometric points spanning [1e-3, kappa_top], where kappa_top
    /// starts at 1 and doubles until the selected dimension is minimal.
    Auto { points: usize },
    Explicit(Vec<f64>),
}

impl Default for KappaGrid {
    fn default() -> Self {
        KappaGrid::Auto { points: 200 }
    }
}

const AUTO_GRID_FLOOR: f64 = 1e-3;
const MAX_TOP_DOUBLINGS: usize = 200;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationResult {
    pub kappa_grid: Vec<f64>,
    /// Dimension selected under kappa·pen for each grid point; non-increasing.
    pub selected_dims: Vec<usize>,
    /// Constant immediately after the biggest jump.
    pub kappa_min: f64,
    /// 2 · kappa_min, the calibrated penalty constant.
    pub kappa_hat: f64,
    /// Magnitude of the biggest jump, in dimension units.
    pub jump_size: usize,
}

impl CalibrationResult {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("kappa,selected_dim\n");
        for (k, d) in self.kappa_grid.iter().zip(&self.selected_dims) {
            out.push_str(&format!("{k:.16e},{d}\n"));
        }
        out
    }
}

/// Selected dimension when the criterion is contrast + kappa·shape_value,
/// using the same tie-break as `select`.
fn selected_dim_at(fits: &[ModelFit], shape_values: &[f64], kappa: f64) -> usize {
    let mut best = 0;
    for i in 1..fits.len() {
        let (ci, cb) = (
            fits[i].contrast + kappa * shape_values[i],
            fits[best].contrast + kappa * shape_values[best],
        );
        let better = if ci != cb {
            ci < cb
        } else if fits[i].dimension != fits[best].dimension {
            fits[i].dimension < fits[best].dimension
        } else {
            fits[i].model_id < fits[best].model_id
        };
        if better {
            best = i;
        }
    }
    fits[best].dimension
}

/// Dimension-jump calibration: scan kappa, watch the selected dimension,
/// take the biggest drop. Takes the penalty family with scale 1 (the scan
/// multiplies it by kappa).
pub fn dimension_jump(
    fits: &[ModelFit],
    shape: &PenaltySpec,
    grid: &KappaGrid,
    n: usize,
) -> Result<CalibrationResult, SelectionError> {
    if fits.is_empty() {
        return Err(SelectionError::EmptyCollection);
    }
    let shape_values = fits
        .iter()
        .map(|f| shape.evaluate(f.dimension, n))
        .collect::<Result<Vec<_>, _>>()?;

    let kappa_grid = match grid {
        KappaGrid::Explicit(points) => {
            assert!(
                points.first().is_some_and(|&k| k > 0.0)
                    && points.windows(2).all(|w| w[0] < w[1]),
                "explicit kappa grid must be positive and strictly increasing"
            );
            points.clone()
        }
        KappaGrid::Auto { points } => {
            let min_dim = fits.iter().map(|f| f.dimension).min().expect("non-empty");
            let mut top = 1.0;
            let mut doublings = 0;
            while selected_dim_at(fits, &shape_values, top) > min_dim
                && doublings < MAX_TOP_DOUBLINGS
            {
                top *= 2.0;
                doublings += 1;
            }
            let p = (*points).max(2);
            let ratio = top / AUTO_GRID_FLOOR;
            (0..p)
                .map(|i| AUTO_GRID_FLOOR * ratio.powf(i as f64 / (p - 1) as f64))
                .collect()
        }
    };

    let selected_dims: Vec<usize> =
        kappa_grid.iter().map(|&k| selected_dim_at(fits, &shape_values, k)).collect();
    // monotone by the usual exchange argument; holds for any tie-break
    assert!(
        selected_dims.windows(2).all(|w| w[1] <= w[0]),
        "selected dimension must be non-increasing in kappa"
    );

    let mut jump_size = 0usize;
    let mut jump_at = None;
    for i in 0..selected_dims.len().saturating_sub(1) {
        let drop = selected_dims[i].saturating_sub(selected_dims[i + 1]);
        // ties go to the largest kappa
        if drop > 0 && drop >= jump_size {
            jump_size = drop;
            jump_at = Some(i + 1);
        }
    }
    let Some(at) = jump_at else {
        return Err(SelectionError::NoJump);
    };
    let kappa_min = kappa_grid[at];
    Ok(CalibrationResult {
        kappa_grid,
        selected_dims,
        kappa_min,
        kappa_hat: 2.0 * kappa_min,
        jump_size,
    })
}

/// A penalty request: either a fully specified penalty or a family whose
/// constant is calibrated from the data by the dimension jump.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum PenaltyConfig {
    Fixed(PenaltySpec),
    /// "lin:auto": kappa_hat · D/n.
    AutoLinear,
    /// "shape:auto": kappa_hat · pen_shape.
    AutoShape,
}

impl PenaltyConfig {
    /// The scale-1 family scanned by the calibration, when applicable.
    pub fn family_at_unit_scale(&self) -> Option<PenaltySpec> {
        match self {
            PenaltyConfig::Fixed(_) => None,
            PenaltyConfig::AutoLinear => Some(PenaltySpec::Linear(1.0)),
            PenaltyConfig::AutoShape => Some(PenaltySpec::Shape(1.0)),
        }
    }

    /// Resolves to a concrete penalty, calibrating on `fits` when requested.
    pub fn resolve(
        &self,
        fits: &[ModelFit],
        grid: &KappaGrid,
        n: usize,
    ) -> Result<(PenaltySpec, Option<CalibrationResult>), SelectionError> {
        match self {
            PenaltyConfig::Fixed(spec) => Ok((*spec, None)),
            auto => {
                let family = auto.family_at_unit_scale().expect("auto variant");
                let cal = dimension_jump(fits, &family, grid, n)?;
                let spec = match auto {
                    PenaltyConfig::AutoLinear => PenaltySpec::Linear(cal.kappa_hat),
                    PenaltyConfig::AutoShape => PenaltySpec::Shape(cal.kappa_hat),
                    PenaltyConfig::Fixed(_) => unreachable!(),
                };
                Ok((spec, Some(cal)))
            }
        }
    }
}

impl fmt::Display for PenaltyConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PenaltyConfig::Fixed(spec) => spec.fmt(f),
            PenaltyConfig::AutoLinear => write!(f, "lin:auto"),
            PenaltyConfig::AutoShape => write!(f, "shape:auto"),
        }
    }
}

impl FromStr for PenaltyConfig {
    type Err = PenaltyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "lin:auto" => Ok(PenaltyConfig::AutoLinear),
            "shape:auto" => Ok(PenaltyConfig::AutoShape),
            other => Ok(PenaltyConfig::Fixed(other.parse()?)),
        }
    }
}
