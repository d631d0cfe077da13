//! Fixed-point iteration for Wasserstein barycenters of sample sets.
//!
//! Each step solves a transport problem from the current sample set to every
//! marginal, pushes the current samples through each map and averages the
//! images with the barycentric weights.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::SampleSet;
use crate::refinement::{solve, SolveConfig};
use crate::transportmap::MapEvaluator;

pub const DEFAULT_MAX_ITERS: usize = 10;
/// Stop when the mean displacement falls below this fraction of the
/// diameter of the current samples.
pub const DEFAULT_TOLERANCE: f64 = 1e-3;

#[derive(Debug, Clone)]
pub struct BarycenterProblem {
    pub marginals: Vec<SampleSet>,
    pub weights: Vec<f64>,
    /// Starting samples; the first marginal when absent.
    pub init: Option<SampleSet>,
    pub config: SolveConfig,
    pub max_iters: usize,
    pub tolerance: f64,
}

impl BarycenterProblem {
    pub fn new(marginals: Vec<SampleSet>, weights: Vec<f64>) -> Self {
        Self {
            marginals,
            weights,
            init: None,
            config: SolveConfig::default(),
            max_iters: DEFAULT_MAX_ITERS,
            tolerance: DEFAULT_TOLERANCE,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.marginals.is_empty() {
            return Err(Error::domain("no marginals given"));
        }
        if self.weights.len() != self.marginals.len() {
            return Err(Error::domain(format!(
                "{} weights for {} marginals",
                self.weights.len(),
                self.marginals.len()
            )));
        }
        if self.weights.iter().any(|w| !(*w >= 0.0)) {
            return Err(Error::domain("weights must be nonnegative"));
        }
        let total: f64 = self.weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::domain(format!("weights sum to {total}, expected 1")));
        }
        let d = self.marginals[0].dim();
        let dims = self.marginals.iter().map(SampleSet::dim);
        for other in dims.chain(self.init.as_ref().map(SampleSet::dim)) {
            if other != d {
                return Err(Error::DimensionMismatch {
                    left: d,
                    right: other,
                });
            }
        }
        if !(self.tolerance >= 0.0) {
            return Err(Error::domain("tolerance must be nonnegative"));
        }
        self.config.validate()
    }
}

/// Result of one fixed-point step.
#[derive(Debug, Clone)]
pub struct StepResult {
    pub samples: SampleSet,
    /// `sum_i w_i W(current, marginal_i)^2`.
    pub objective: f64,
    /// Weighted mean of the finest source-side mean cell diameters.
    pub mean_cell_diameter: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub mean_displacement: f64,
    pub objective: f64,
    pub mean_cell_diameter: f64,
}

#[derive(Debug, Clone)]
pub struct BarycenterResult {
    pub samples: SampleSet,
    pub history: Vec<IterationRecord>,
    pub converged: bool,
}

/// Maps `current` towards the weighted average of its images under the
/// optimal maps to each marginal. Marginals with zero weight are skipped.
pub fn barycenter_step(current: &SampleSet, problem: &BarycenterProblem) -> Result<StepResult> {
    let active: Vec<usize> = (0..problem.marginals.len())
        .filter(|&i| problem.weights[i] > 0.0)
        .collect();
    let images: Vec<(SampleSet, f64, f64)> = active
        .par_iter()
        .map(|&i| {
            let run = || -> Result<_> {
                let sol = solve(current, &problem.marginals[i], &problem.config)?;
                let ev = MapEvaluator::from_solution(&sol)?;
                let pushed = ev.push_samples(current)?;
                let lvl = sol.final_level();
                Ok((
                    pushed,
                    lvl.wasserstein().powi(2),
                    lvl.source.mean_cell_diameter(),
                ))
            };
            run().map_err(|e| Error::Marginal {
                marginal: i,
                source: Box::new(e),
            })
        })
        .collect::<Result<_>>()?;

    // fixed summation order, independent of scheduling
    let mut coords = vec![0.0; current.coords().len()];
    let (mut objective, mut diameter) = (0.0, 0.0);
    for (&i, (pushed, w2, diam)) in active.iter().zip(&images) {
        let w = problem.weights[i];
        coords
            .iter_mut()
            .zip(pushed.coords())
            .for_each(|(c, v)| *c += w * v);
        objective += w * w2;
        diameter += w * diam;
    }
    Ok(StepResult {
        samples: SampleSet::new(current.dim(), coords)?,
        objective,
        mean_cell_diameter: diameter,
    })
}

/// Mean Euclidean distance between corresponding samples.
pub fn mean_displacement(a: &SampleSet, b: &SampleSet) -> f64 {
    a.points()
        .zip(b.points())
        .map(|(x, y)| {
            x.iter()
                .zip(y)
                .map(|(u, v)| (u - v) * (u - v))
                .sum::<f64>()
                .sqrt()
        })
        .sum::<f64>()
        / a.len() as f64
}

pub fn barycenter(problem: &BarycenterProblem) -> Result<BarycenterResult> {
    problem.validate()?;
    let mut current = problem
        .init
        .clone()
        .unwrap_or_else(|| problem.marginals[0].clone());
    let mut history = Vec::new();
    let mut converged = false;
    for iteration in 1..=problem.max_iters {
        let step = barycenter_step(&current, problem)?;
        let disp = mean_displacement(&current, &step.samples);
        let scale = current.diameter();
        history.push(IterationRecord {
            iteration,
            mean_displacement: disp,
            objective: step.objective,
            mean_cell_diameter: step.mean_cell_diameter,
        });
        log::info!("barycenter iteration {iteration}: displacement {disp:.3e}");
        current = step.samples;
        if disp <= problem.tolerance * scale {
            converged = true;
            break;
        }
    }
    Ok(BarycenterResult {
        samples: current,
        history,
        converged,
    })
}

/// Displacement interpolation: the barycenter with weights `(1 - t, t)`,
/// started from the source samples.
pub fn interpolate(
    source: &SampleSet,
    target: &SampleSet,
    t: f64,
    config: &SolveConfig,
) -> Result<SampleSet> {
    Ok(barycenter(&interpolation_problem(source, target, t, config)?)?.samples)
}

/// The barycenter problem behind [`interpolate`], for callers that want to
/// adjust the iteration controls.
pub fn interpolation_problem(
    source: &SampleSet,
    target: &SampleSet,
    t: f64,
    config: &SolveConfig,
) -> Result<BarycenterProblem> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::domain(format!(
            "interpolation parameter {t} outside [0, 1]"
        )));
    }
    let mut problem =
        BarycenterProblem::new(vec![source.clone(), target.clone()], vec![1.0 - t, t]);
    problem.config = config.clone();
    Ok(problem)
}
