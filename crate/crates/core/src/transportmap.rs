//! Recovering the transport map from a solved level, and error measures.
//!
//! The map is the conditional mean of the coupling,
//! `y(x) = sum_j λ_ij ρ_i(x) m_ij(x) / sum_j λ_ij ρ_i(x)`. Cell densities have
//! disjoint supports, so only the cell `i` containing `x` contributes and the
//! density factor cancels: `y(x)` is the `λ`-weighted mean of the partner maps.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Grid, SampleSet};
use crate::localtransport::{cell_pair_map, CellPairMap};
use crate::lpsolver::FEASIBILITY_TOL;
use crate::refinement::{LevelSolution, TransportSolution};

/// Most offending indices kept in an out-of-support error.
const MAX_REPORTED: usize = 32;

#[derive(Debug, Clone)]
pub struct MapEvaluator {
    grid: Grid,
    /// Linear indices of the occupied source cells, sorted.
    occupied: Vec<usize>,
    /// Per occupied source cell: `(λ_ij, m_ij)` for partners with `λ > 0`.
    partners: Vec<Vec<(f64, CellPairMap)>>,
    dim: usize,
}

impl MapEvaluator {
    pub fn new(level: &LevelSolution) -> Result<Self> {
        let n_rows = level.source.cells.len();
        let mut partners: Vec<Vec<(f64, CellPairMap)>> = vec![Vec::new(); n_rows];
        for (&(i, j), &v) in level.pattern.pairs().iter().zip(&level.coupling.values) {
            if v > 0.0 {
                partners[i].push((
                    v,
                    cell_pair_map(&level.source.cells[i], &level.target.cells[j])?,
                ));
            }
        }
        for (i, list) in partners.iter().enumerate() {
            let mass: f64 = list.iter().map(|(v, _)| v).sum();
            let p = level.source.cells[i].weight;
            if !(mass > 0.0) || (mass - p).abs() > FEASIBILITY_TOL {
                return Err(Error::Internal(format!(
                    "source cell {i} carries coupling mass {mass}, expected {p}"
                )));
            }
        }
        Ok(Self {
            grid: level.source.grid().clone(),
            occupied: level
                .source
                .partition
                .cells()
                .iter()
                .map(|c| c.linear)
                .collect(),
            partners,
            dim: level.source.grid().dim(),
        })
    }

    /// Evaluator for the finest level of a solution.
    pub fn from_solution(solution: &TransportSolution) -> Result<Self> {
        Self::new(solution.final_level())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    fn row_of(&self, x: &[f64]) -> Option<usize> {
        let cell = self.grid.try_locate(x)?;
        self.occupied
            .binary_search(&self.grid.linear_index(&cell))
            .ok()
    }

    /// Partner cell maps and their weights for the cell containing `x`.
    pub fn partners_at(&self, x: &[f64]) -> Option<&[(f64, CellPairMap)]> {
        self.row_of(x).map(|i| self.partners[i].as_slice())
    }

    fn eval_row(&self, i: usize, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.dim];
        let mut mass = 0.0;
        for (lam, map) in &self.partners[i] {
            map.accumulate(x, *lam, &mut y);
            mass += lam;
        }
        y.iter_mut().for_each(|v| *v /= mass);
        y
    }

    pub fn evaluate_map(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                left: x.len(),
                right: self.dim,
            });
        }
        let i = self
            .row_of(x)
            .ok_or_else(|| Error::PointOutside { point: x.to_vec() })?;
        Ok(self.eval_row(i, x))
    }

    /// Maps every sample; the output keeps the input order.
    pub fn push_samples(&self, samples: &SampleSet) -> Result<SampleSet> {
        if samples.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                left: samples.dim(),
                right: self.dim,
            });
        }
        let mapped: Vec<Option<Vec<f64>>> = (0..samples.len())
            .into_par_iter()
            .map(|k| {
                let x = samples.point(k);
                self.row_of(x).map(|i| self.eval_row(i, x))
            })
            .collect();
        let bad: Vec<usize> = mapped
            .iter()
            .enumerate()
            .filter(|(_, m)| m.is_none())
            .map(|(k, _)| k)
            .collect();
        if !bad.is_empty() {
            return Err(Error::OutOfSupportMany {
                count: bad.len(),
                indices: bad.into_iter().take(MAX_REPORTED).collect(),
            });
        }
        SampleSet::new(self.dim, mapped.into_iter().flatten().flatten().collect())
    }
}

/// Known optimal maps used as references for the map error.
#[derive(Debug, Clone, PartialEq)]
pub enum ReferenceMap {
    /// `y = A (x - m1) + m2`, with `A` row-major.
    Affine {
        matrix: Vec<f64>,
        source_mean: Vec<f64>,
        target_mean: Vec<f64>,
    },
    /// Coordinate-wise real cube root.
    CubeRoot,
    /// Coordinate-wise cube, the inverse of `CubeRoot`.
    Cube,
}

impl ReferenceMap {
    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        match self {
            ReferenceMap::Affine {
                matrix,
                source_mean,
                target_mean,
            } => {
                let d = x.len();
                (0..d)
                    .map(|r| {
                        target_mean[r]
                            + (0..d)
                                .map(|c| matrix[r * d + c] * (x[c] - source_mean[c]))
                                .sum::<f64>()
                    })
                    .collect()
            }
            ReferenceMap::CubeRoot => x.iter().map(|v| v.cbrt()).collect(),
            ReferenceMap::Cube => x.iter().map(|v| v * v * v).collect(),
        }
    }

    /// The inverse map, used for the error measured from the target side.
    pub fn inverse(&self) -> Option<ReferenceMap> {
        match self {
            ReferenceMap::Affine {
                matrix,
                source_mean,
                target_mean,
            } => {
                let d = source_mean.len();
                let inv = nalgebra::DMatrix::from_row_slice(d, d, matrix).try_inverse()?;
                Some(ReferenceMap::Affine {
                    matrix: (0..d * d).map(|k| inv[(k / d, k % d)]).collect(),
                    source_mean: target_mean.clone(),
                    target_mean: source_mean.clone(),
                })
            }
            ReferenceMap::CubeRoot => Some(ReferenceMap::Cube),
            ReferenceMap::Cube => Some(ReferenceMap::CubeRoot),
        }
    }
}

/// Root-mean-square distance between the numerical and reference maps over
/// `samples`.
pub fn map_error_e1<F>(evaluator: &MapEvaluator, samples: &SampleSet, reference: F) -> Result<f64>
where
    F: Fn(&[f64]) -> Vec<f64> + Sync,
{
    let mapped = evaluator.push_samples(samples)?;
    Ok(rms_distance(&mapped, samples, reference))
}

/// E1 against precomputed reference values `ȳ(x_k)` in sample order.
pub fn map_error_e1_table(
    evaluator: &MapEvaluator,
    samples: &SampleSet,
    reference: &SampleSet,
) -> Result<f64> {
    if reference.len() != samples.len() || reference.dim() != samples.dim() {
        return Err(Error::domain(format!(
            "reference table has {} rows of dimension {}, expected {} of dimension {}",
            reference.len(),
            reference.dim(),
            samples.len(),
            samples.dim()
        )));
    }
    let mapped = evaluator.push_samples(samples)?;
    let sum: f64 = mapped
        .points()
        .zip(reference.points())
        .map(|(y, r)| sq_dist(y, r))
        .sum();
    Ok((sum / samples.len() as f64).sqrt())
}

fn rms_distance<F>(mapped: &SampleSet, samples: &SampleSet, reference: F) -> f64
where
    F: Fn(&[f64]) -> Vec<f64> + Sync,
{
    let sum: f64 = (0..samples.len())
        .into_par_iter()
        .map(|k| sq_dist(mapped.point(k), &reference(samples.point(k))))
        .collect::<Vec<_>>()
        .iter()
        .sum();
    (sum / samples.len() as f64).sqrt()
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// `W = sqrt(2 · objective)`: the internal cost carries a factor 1/2.
pub fn wasserstein_distance(solution: &TransportSolution) -> f64 {
    solution.final_level().wasserstein()
}

/// Signed error `W_numerical - W_reference`.
pub fn distance_error_e2(w_numerical: f64, w_reference: f64) -> f64 {
    w_numerical - w_reference
}

/// Metrics of one level, serialised with the field names used by the CLI.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelMetrics {
    pub level: usize,
    #[serde(rename = "E1_source_side")]
    pub e1_source_side: Option<f64>,
    #[serde(
        rename = "E1_target_side",
        default,
        skip_serializing_if = "Option::is_none"
    )]
    pub e1_target_side: Option<f64>,
    #[serde(rename = "W")]
    pub w: f64,
    #[serde(rename = "E2")]
    pub e2: Option<f64>,
}

/// Metrics for every level of a solution.
pub fn level_metrics(
    solution: &TransportSolution,
    source: &SampleSet,
    reference: Option<&ReferenceMap>,
    w_reference: Option<f64>,
) -> Result<Vec<LevelMetrics>> {
    solution
        .levels
        .iter()
        .map(|lvl| {
            let e1 = match reference {
                Some(r) => {
                    let ev = MapEvaluator::new(lvl)?;
                    Some(map_error_e1(&ev, source, |x| r.eval(x))?)
                }
                None => None,
            };
            let w = lvl.wasserstein();
            Ok(LevelMetrics {
                level: lvl.level,
                e1_source_side: e1,
                e1_target_side: None,
                w,
                e2: w_reference.map(|wr| distance_error_e2(w, wr)),
            })
        })
        .collect()
}

/// Two-sample Kolmogorov–Smirnov statistic.
pub fn ks_statistic(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// Per-axis two-sample KS statistics.
pub fn per_axis_ks(a: &SampleSet, b: &SampleSet) -> Vec<f64> {
    (0..a.dim())
        .map(|l| ks_statistic(&a.axis_values(l), &b.axis_values(l)))
        .collect()
}

/// 99% two-sample Kolmogorov threshold `1.63 sqrt((m + n) / (m n))`.
pub fn ks_threshold(m: usize, n: usize) -> f64 {
    let (m, n) = (m as f64, n as f64);
    1.63 * ((m + n) / (m * n)).sqrt()
}
