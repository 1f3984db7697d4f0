//! Information-dimension estimators for empirical measures: average log
//! ball mass and grid-cube entropy, each regressed against log ε.

use std::collections::HashMap;
use std::io;
use std::path::Path;

use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::cli::{emit_csv, Field};
use crate::manifold::{embed_ambient, CirclePoint, ProductPoint, AMBIENT_DIM, Q_POINT};
use crate::neighbors::{KdTree, TreeError};
use crate::predictability::{fit_line, quantile, LineFit};

#[derive(Debug, Error)]
pub enum DimensionError {
    #[error("weights must be non-negative and sum to 1 (sum = {0})")]
    BadWeights(f64),
    #[error("points must be finite")]
    NonFinite,
    #[error("need {expected} weights, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("measure needs at least one point")]
    Empty,
    #[error("sample size must be at least 2")]
    TooFewSamples,
    #[error("ladder must be positive and strictly decreasing")]
    BadLadder,
    #[error(transparent)]
    Tree(#[from] TreeError),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Neumaier summation; plain summation of 10⁵ equal weights already
/// drifts by more than 1e−12.
pub fn compensated_sum(xs: &[f64]) -> f64 {
    let (mut sum, mut c) = (0.0f64, 0.0f64);
    for &x in xs {
        let t = sum + x;
        c += if sum.abs() >= x.abs() { (sum - t) + x } else { (x - t) + sum };
        sum = t;
    }
    sum + c
}

/// Weighted point cloud in ℝ^dim, rows stored contiguously.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalMeasure {
    dim: usize,
    points: Vec<f64>,
    weights: Vec<f64>,
}

impl EmpiricalMeasure {
    pub fn new(points: Vec<f64>, dim: usize, weights: Vec<f64>) -> Result<EmpiricalMeasure, DimensionError> {
        if dim == 0 || points.is_empty() {
            return Err(DimensionError::Empty);
        }
        let n = points.len() / dim;
        if points.len() % dim != 0 || weights.len() != n {
            return Err(DimensionError::LengthMismatch { expected: n, got: weights.len() });
        }
        if points.iter().any(|x| !x.is_finite()) {
            return Err(DimensionError::NonFinite);
        }
        let total = compensated_sum(&weights);
        if weights.iter().any(|w| !(*w >= 0.0)) || (total - 1.0).abs() > 1e-12 {
            return Err(DimensionError::BadWeights(total));
        }
        Ok(EmpiricalMeasure { dim, points, weights })
    }

    /// Equal weights 1/n.
    pub fn uniform(points: Vec<f64>, dim: usize) -> Result<EmpiricalMeasure, DimensionError> {
        let n = if dim == 0 { 0 } else { points.len() / dim };
        if n == 0 {
            return Err(DimensionError::Empty);
        }
        EmpiricalMeasure::new(points, dim, vec![1.0 / n as f64; n])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// All points multiplied by `c`.
    pub fn scaled(&self, c: f64) -> EmpiricalMeasure {
        EmpiricalMeasure { dim: self.dim, points: self.points.iter().map(|x| x * c).collect(), weights: self.weights.clone() }
    }
}

/// n independent draws from ½δ_{p₀} + ½ Leb on {q}×S¹, in ambient ℝ⁵.
pub fn sample_model_measure<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<EmpiricalMeasure, DimensionError> {
    if n < 2 {
        return Err(DimensionError::TooFewSamples);
    }
    let mut pts = Vec::with_capacity(n * AMBIENT_DIM);
    for _ in 0..n {
        let x = if rng.gen_bool(0.5) {
            ProductPoint::p0()
        } else {
            ProductPoint::new(Q_POINT, CirclePoint::wrap_unchecked(rng.gen::<f64>()))
        };
        pts.extend_from_slice(&embed_ambient(&x).coords);
    }
    EmpiricalMeasure::uniform(pts, AMBIENT_DIM)
}

/// n uniform draws from [0, 1] ⊂ ℝ.
pub fn sample_unit_segment<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<EmpiricalMeasure, DimensionError> {
    EmpiricalMeasure::uniform((0..n).map(|_| rng.gen::<f64>()).collect(), 1)
}

/// n copies of one point.
pub fn point_mass(x: &[f64], n: usize) -> Result<EmpiricalMeasure, DimensionError> {
    let pts: Vec<f64> = (0..n).flat_map(|_| x.iter().copied()).collect();
    EmpiricalMeasure::uniform(pts, x.len())
}

#[derive(Debug, Clone, PartialEq)]
pub struct DimLevel {
    pub eps: f64,
    /// Ball mass: mean of log μ(B(x,ε)) / log ε. Box counting: Σ μ(C) log μ(C).
    pub value: f64,
    /// Regressed quantity: mean log μ(B(x,ε)), or the box entropy sum.
    pub log_scale_value: f64,
    /// Centers with a non-empty ball, or occupied cubes.
    pub n_centers_used: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DimensionEstimate {
    pub levels: Vec<DimLevel>,
    /// Levels dropped for empty balls or ε ≥ 1.
    pub dropped: Vec<f64>,
    pub fit: Option<LineFit>,
    /// Lower decile of per-center local slopes; ball-mass only. A proxy
    /// for the Hausdorff dimension of the measure, not an estimate of it.
    pub dim_h_proxy: Option<f64>,
}

impl DimensionEstimate {
    /// Slope of the regressed quantity against ln ε.
    pub fn estimate(&self) -> Option<f64> {
        self.fit.map(|f| f.slope)
    }

    pub fn window(&self) -> Option<(f64, f64)> {
        Some((self.levels.first()?.eps, self.levels.last()?.eps))
    }

    /// Rows `eps,value,n_centers_used`.
    pub fn write_csv(&self, path: &Path) -> Result<(), DimensionError> {
        let rows = self
            .levels
            .iter()
            .map(|l| vec![Field::Real(l.eps), Field::Real(l.value), Field::from(l.n_centers_used)]);
        emit_csv(path, &["eps", "value", "n_centers_used"], rows)?;
        Ok(())
    }

    pub fn summary(&self, name: &str) -> String {
        let f = |x: Option<f64>| x.map_or("undefined".to_string(), |v| format!("{v}"));
        let (hi, lo) = self.window().map_or((None, None), |(a, b)| (Some(a), Some(b)));
        format!(
            "{name}_estimate = {}\n{name}_r_squared = {}\n{name}_window_max = {}\n{name}_window_min = {}\n{name}_dim_h_proxy = {}\n",
            f(self.estimate()),
            f(self.fit.map(|x| x.r_squared)),
            f(hi),
            f(lo),
            f(self.dim_h_proxy),
        )
    }
}

fn check_ladder(ladder: &[f64]) -> Result<(), DimensionError> {
    let ok = !ladder.is_empty() && ladder.iter().all(|e| e.is_finite() && *e > 0.0) && ladder.windows(2).all(|w| w[1] < w[0]);
    if ok {
        Ok(())
    } else {
        Err(DimensionError::BadLadder)
    }
}

/// ε = 2^{−a}, …, 2^{−b}.
pub fn dyadic_ladder(a: i32, b: i32) -> Vec<f64> {
    (a..=b).map(|j| 2f64.powi(-j)).collect()
}

/// Ball-mass estimator over `n_centers` centers drawn from μ. Each level
/// reports the mean ratio log μ(B(x,ε))/log ε; the estimate is the slope of
/// the mean log μ(B(x,ε)) against ln ε.
pub fn ball_mass_dimension<R: Rng + ?Sized>(
    mu: &EmpiricalMeasure,
    ladder: &[f64],
    n_centers: usize,
    rng: &mut R,
) -> Result<DimensionEstimate, DimensionError> {
    check_ladder(ladder)?;
    let pick = WeightedIndex::new(mu.weights()).map_err(|_| DimensionError::BadWeights(compensated_sum(mu.weights())))?;
    let centers: Vec<usize> = (0..n_centers.max(1)).map(|_| pick.sample(rng)).collect();
    let tree = KdTree::build(mu.points(), mu.dim(), Some(mu.weights()), None)?;

    // log masses per center and level; NaN for empty balls
    let logs: Vec<Vec<f64>> = centers
        .par_iter()
        .map(|&c| {
            let x = mu.point(c);
            ladder
                .iter()
                .map(|&eps| {
                    let m = tree.mass_within(x, eps);
                    if m > 0.0 {
                        m.min(1.0).ln()
                    } else {
                        f64::NAN
                    }
                })
                .collect()
        })
        .collect();

    let mut levels = Vec::new();
    let mut dropped = Vec::new();
    let mut kept = Vec::new();
    for (j, &eps) in ladder.iter().enumerate() {
        let col: Vec<f64> = logs.iter().map(|row| row[j]).filter(|v| !v.is_nan()).collect();
        if col.is_empty() || eps >= 1.0 {
            dropped.push(eps);
            continue;
        }
        let n = col.len() as f64;
        let mean_log = col.iter().sum::<f64>() / n;
        levels.push(DimLevel { eps, value: mean_log / eps.ln(), log_scale_value: mean_log, n_centers_used: col.len() });
        kept.push(j);
    }
    let pts: Vec<(f64, f64)> = levels.iter().map(|l| (l.eps.ln(), l.log_scale_value)).collect();

    let dim_h_proxy = match (kept.first(), kept.last()) {
        (Some(&a), Some(&b)) if a != b => {
            let dl = ladder[b].ln() - ladder[a].ln();
            let mut local: Vec<f64> = logs
                .iter()
                .filter(|row| !row[a].is_nan() && !row[b].is_nan())
                .map(|row| (row[b] - row[a]) / dl)
                .collect();
            local.sort_by(f64::total_cmp);
            (!local.is_empty()).then(|| quantile(&local, 0.1))
        }
        _ => None,
    };
    Ok(DimensionEstimate { levels, dropped, fit: fit_line(&pts), dim_h_proxy })
}

/// Σ μ(C) log μ(C) over cubes of the lattice (εℤ)^dim.
pub fn box_entropy(mu: &EmpiricalMeasure, eps: f64) -> (f64, usize) {
    let mut cubes: HashMap<Vec<i64>, f64> = HashMap::new();
    for (i, &w) in mu.weights().iter().enumerate() {
        let key: Vec<i64> = mu.point(i).iter().map(|x| (x / eps).floor() as i64).collect();
        *cubes.entry(key).or_insert(0.0) += w;
    }
    let mut cells: Vec<(Vec<i64>, f64)> = cubes.into_iter().collect();
    cells.sort_by(|a, b| a.0.cmp(&b.0));
    let h = cells.iter().filter(|(_, m)| *m > 0.0).map(|(_, m)| m * m.ln()).sum();
    (h, cells.len())
}

/// Box-counting estimator: slope of Σ μ(C) log μ(C) against ln ε.
pub fn box_counting_idim(mu: &EmpiricalMeasure, ladder: &[f64]) -> Result<DimensionEstimate, DimensionError> {
    check_ladder(ladder)?;
    let levels: Vec<DimLevel> = ladder
        .par_iter()
        .map(|&eps| {
            let (h, cells) = box_entropy(mu, eps);
            DimLevel { eps, value: h, log_scale_value: h, n_centers_used: cells }
        })
        .collect();
    let pts: Vec<(f64, f64)> = levels.iter().map(|l| (l.eps.ln(), l.value)).collect();
    Ok(DimensionEstimate { levels, dropped: Vec::new(), fit: fit_line(&pts), dim_h_proxy: None })
}
