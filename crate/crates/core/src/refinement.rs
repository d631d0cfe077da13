//! Multilevel driver: weights, densities, sparse LP, refinement, repeat.
//!
//! Level 1 starts from grids with two segments per axis and the dense
//! pattern of occupied cell pairs. Every later level keeps only the children
//! of parent pairs that carried mass (the minimal set, which is always
//! feasible) plus, optionally, the pairs reached by moving one end of such a
//! pair to a touching cell.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::density1d::{fit_linear_density, LinearDensity1D};
use crate::error::{Error, Result};
use crate::geometry::{
    assign_weights, cell_neighbors, initial_grid, refine_grid, Grid, Refinement, RefinementPolicy,
    SampleSet, WeightedPartition, DEFAULT_N_MIN,
};
use crate::localtransport::{cell_pair_map, CellDensity, CellPairMap, CostEvaluator};
use crate::lpsolver::{
    marginal_violation, solve_transportation, solve_transportation_warm, CouplingSolution,
    SolveStatus, SparsityPattern, TransportationProblem, FEASIBILITY_TOL,
};

/// Coupling values at or below this are treated as zero when building the
/// next level's minimal pattern.
pub const SUPPORT_THRESHOLD: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DensityModel {
    /// Constant density per cell (a histogram).
    Uniform,
    /// Per-axis linear densities fitted to the cell's samples.
    #[default]
    Linear,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolveConfig {
    pub max_levels: usize,
    pub n_min: usize,
    pub policy: RefinementPolicy,
    pub neighbor_expansion: bool,
    pub density_model: DensityModel,
    pub quadrature_order: usize,
    pub support_threshold: f64,
}

impl Default for SolveConfig {
    fn default() -> Self {
        Self {
            max_levels: 5,
            n_min: DEFAULT_N_MIN,
            policy: RefinementPolicy::Standard,
            neighbor_expansion: true,
            density_model: DensityModel::Linear,
            quadrature_order: crate::localtransport::DEFAULT_QUADRATURE_ORDER,
            support_threshold: SUPPORT_THRESHOLD,
        }
    }
}

impl SolveConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_levels < 1 {
            return Err(Error::domain("max_levels must be at least 1"));
        }
        if self.n_min < 1 {
            return Err(Error::domain("n_min must be at least 1"));
        }
        if self.quadrature_order < 1 {
            return Err(Error::domain("quadrature_order must be at least 1"));
        }
        if !(self.support_threshold >= 0.0) {
            return Err(Error::domain("support_threshold must be nonnegative"));
        }
        Ok(())
    }
}

/// One marginal's grid and per-cell densities at one level.
#[derive(Debug, Clone, PartialEq)]
pub struct MarginalLevel {
    pub partition: WeightedPartition,
    /// One density per occupied cell, in the order of `partition.cells()`.
    pub cells: Vec<CellDensity>,
    /// Axis factors that fell back to uniform for lack of samples.
    pub uniform_fallbacks: usize,
}

impl MarginalLevel {
    pub fn grid(&self) -> &Grid {
        self.partition.grid()
    }

    pub fn weights(&self) -> Vec<f64> {
        self.cells.iter().map(|c| c.weight).collect()
    }

    /// Position of the occupied cell containing `x`.
    pub fn row_of(&self, x: &[f64]) -> Option<usize> {
        let cell = self.grid().try_locate(x)?;
        self.partition.position(self.grid().linear_index(&cell))
    }

    /// Unweighted mean diagonal length of the occupied cells.
    pub fn mean_cell_diameter(&self) -> f64 {
        self.cells.iter().map(CellDensity::diameter).sum::<f64>() / self.cells.len() as f64
    }

    /// Unweighted mean width of the occupied cells along `axis`.
    pub fn mean_cell_width(&self, axis: usize) -> f64 {
        self.cells
            .iter()
            .map(|c| c.factors[axis].width())
            .sum::<f64>()
            / self.cells.len() as f64
    }
}

/// Fits one product density per occupied cell.
pub fn build_marginal(
    samples: &SampleSet,
    grid: &Grid,
    model: DensityModel,
) -> Result<MarginalLevel> {
    let partition = assign_weights(samples, grid)?;
    let fitted: Vec<(CellDensity, usize)> = partition
        .cells()
        .par_iter()
        .map(|cell| {
            let bounds = grid.cell_bounds(&cell.index);
            let mut fallbacks = 0;
            let mut factors = Vec::with_capacity(bounds.len());
            for (l, &(a, b)) in bounds.iter().enumerate() {
                let f = if model == DensityModel::Uniform || cell.members.len() <= 1 {
                    LinearDensity1D::uniform(a, b)?
                } else {
                    let values: Vec<f64> =
                        cell.members.iter().map(|&k| samples.point(k)[l]).collect();
                    let fit = fit_linear_density(&values, a, b)?;
                    fallbacks += usize::from(fit.empty_fallback);
                    fit.density
                };
                factors.push(f);
            }
            Ok((
                CellDensity {
                    cell: cell.index.clone(),
                    weight: cell.weight,
                    factors,
                },
                fallbacks,
            ))
        })
        .collect::<Result<_>>()?;
    let uniform_fallbacks = fitted.iter().map(|(_, f)| f).sum();
    Ok(MarginalLevel {
        partition,
        cells: fitted.into_iter().map(|(c, _)| c).collect(),
        uniform_fallbacks,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct LevelSolution {
    pub level: usize,
    pub source: MarginalLevel,
    pub target: MarginalLevel,
    pub pattern: SparsityPattern,
    /// Cost per pattern pair.
    pub costs: Vec<f64>,
    pub coupling: CouplingSolution,
    pub objective: f64,
    /// Size of the minimal pattern before neighbour expansion (the full
    /// pattern size on level 1).
    pub minimal_pattern_size: usize,
    pub wall_time_s: f64,
}

impl LevelSolution {
    /// Coupling value of row `i`, column `j` (zero off the pattern).
    pub fn lambda(&self, i: usize, j: usize) -> f64 {
        self.pattern
            .position(i, j)
            .map_or(0.0, |k| self.coupling.values[k])
    }

    pub fn wasserstein(&self) -> f64 {
        (2.0 * self.objective).max(0.0).sqrt()
    }

    pub fn record(&self) -> LevelRecord {
        LevelRecord {
            level: self.level,
            source_cells_per_dim: self.source.grid().shape(),
            target_cells_per_dim: self.target.grid().shape(),
            occupied_source_cells: self.source.cells.len(),
            occupied_target_cells: self.target.cells.len(),
            pattern_size: self.pattern.len(),
            minimal_pattern_size: self.minimal_pattern_size,
            objective: self.objective,
            wasserstein: self.wasserstein(),
            pivots: self.coupling.pivots,
            wall_time_s: self.wall_time_s,
        }
    }
}

/// Per-level telemetry, emitted as one JSON line per level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelRecord {
    pub level: usize,
    pub source_cells_per_dim: Vec<usize>,
    pub target_cells_per_dim: Vec<usize>,
    pub occupied_source_cells: usize,
    pub occupied_target_cells: usize,
    pub pattern_size: usize,
    pub minimal_pattern_size: usize,
    pub objective: f64,
    pub wasserstein: f64,
    pub pivots: usize,
    pub wall_time_s: f64,
}

/// A cell pair of the final level with positive mass.
#[derive(Debug, Clone, PartialEq)]
pub struct PairMap {
    pub row: usize,
    pub col: usize,
    pub lambda: f64,
    pub map: CellPairMap,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransportSolution {
    pub levels: Vec<LevelSolution>,
    pub final_maps: Vec<PairMap>,
}

impl TransportSolution {
    pub fn final_level(&self) -> &LevelSolution {
        self.levels
            .last()
            .expect("a solution has at least one level")
    }

    pub fn objective(&self) -> f64 {
        self.final_level().objective
    }

    pub fn records(&self) -> Vec<LevelRecord> {
        self.levels.iter().map(LevelSolution::record).collect()
    }
}

/// For each occupied child cell, the position of its occupied parent cell.
pub fn parent_rows(
    child: &MarginalLevel,
    refinement: &Refinement,
    parent: &MarginalLevel,
) -> Result<Vec<usize>> {
    child
        .partition
        .cells()
        .iter()
        .map(|c| {
            let pc = refinement.parent_cell(&c.index);
            parent
                .partition
                .position(parent.grid().linear_index(&pc))
                .ok_or_else(|| {
                    Error::Internal(format!("occupied cell {:?} has an empty parent", c.index))
                })
        })
        .collect()
}

fn children_of(parents: &[usize], n_parents: usize) -> Vec<Vec<usize>> {
    let mut children = vec![Vec::new(); n_parents];
    for (child, &p) in parents.iter().enumerate() {
        children[p].push(child);
    }
    children
}

/// Children of every previous pair whose coupling exceeds `threshold`.
pub fn minimal_pattern(
    previous: &LevelSolution,
    source_parents: &[usize],
    target_parents: &[usize],
    threshold: f64,
) -> Result<SparsityPattern> {
    let src_children = children_of(source_parents, previous.source.cells.len());
    let tgt_children = children_of(target_parents, previous.target.cells.len());
    let mut pairs = Vec::new();
    for (&(h, k), &v) in previous
        .pattern
        .pairs()
        .iter()
        .zip(&previous.coupling.values)
    {
        if v > threshold {
            for &i in &src_children[h] {
                for &j in &tgt_children[k] {
                    pairs.push((i, j));
                }
            }
        }
    }
    SparsityPattern::new(source_parents.len(), target_parents.len(), pairs)
}

/// The feasible coupling `λ_ij = p_i q_j Λ_hk / (P_h Q_k)` spread from the
/// previous level's solution onto `pattern` (zero outside the children of
/// supported parent pairs).
pub fn scaled_feasible(
    previous: &LevelSolution,
    p: &[f64],
    q: &[f64],
    source_parents: &[usize],
    target_parents: &[usize],
    pattern: &SparsityPattern,
) -> Result<CouplingSolution> {
    let big_p = previous.source.weights();
    let big_q = previous.target.weights();
    let check = |child_w: &[f64], parents: &[usize], parent_w: &[f64]| -> Result<()> {
        for (c, (&w, &h)) in child_w.iter().zip(parents).enumerate() {
            if w > 0.0 && parent_w[h] <= 0.0 {
                return Err(Error::Internal(format!(
                    "child {c} has weight {w} but its parent {h} has none"
                )));
            }
        }
        Ok(())
    };
    check(p, source_parents, &big_p)?;
    check(q, target_parents, &big_q)?;
    let values = pattern
        .pairs()
        .iter()
        .map(|&(i, j)| {
            let (h, k) = (source_parents[i], target_parents[j]);
            let lam = previous.lambda(h, k);
            if lam == 0.0 {
                0.0
            } else {
                p[i] * q[j] / (big_p[h] * big_q[k]) * lam
            }
        })
        .collect();
    Ok(CouplingSolution {
        values,
        objective: 0.0,
        status: SolveStatus::Feasible,
        pivots: 0,
    })
}

/// Occupied touching cells of every occupied cell, as positions.
fn occupied_neighbors(marginal: &MarginalLevel) -> Vec<Vec<usize>> {
    let grid = marginal.grid();
    marginal
        .partition
        .cells()
        .iter()
        .map(|c| {
            cell_neighbors(grid, &c.index)
                .iter()
                .filter_map(|n| marginal.partition.position(grid.linear_index(n)))
                .collect()
        })
        .collect()
}

/// Adds `(i, J_j)` and `(I_i, j)` for every `(i, j)` of `minimal`, where
/// `I_i`, `J_j` are the occupied cells touching `i` and `j`.
pub fn expand_pattern(
    minimal: &SparsityPattern,
    source: &MarginalLevel,
    target: &MarginalLevel,
) -> Result<SparsityPattern> {
    let src_nb = occupied_neighbors(source);
    let tgt_nb = occupied_neighbors(target);
    let mut pairs = minimal.pairs().to_vec();
    for &(i, j) in minimal.pairs() {
        pairs.extend(tgt_nb[j].iter().map(|&jj| (i, jj)));
        pairs.extend(src_nb[i].iter().map(|&ii| (ii, j)));
    }
    SparsityPattern::new(minimal.n_rows(), minimal.n_cols(), pairs)
}

fn pair_costs(
    evaluator: &CostEvaluator,
    pattern: &SparsityPattern,
    source: &MarginalLevel,
    target: &MarginalLevel,
) -> Result<Vec<f64>> {
    pattern
        .pairs()
        .par_iter()
        .map(|&(i, j)| evaluator.cell_pair_cost(&source.cells[i], &target.cells[j]))
        .collect()
}

fn diagnostic(pattern: &SparsityPattern, source: &MarginalLevel, target: &MarginalLevel) -> String {
    let p = source.weights();
    let q = target.weights();
    let empty_rows = (0..pattern.n_rows())
        .filter(|&i| pattern.row(i).is_empty())
        .count();
    let empty_cols = (0..pattern.n_cols())
        .filter(|&j| pattern.col(j).is_empty())
        .count();
    format!(
        "{} rows (mass {}), {} cols (mass {}), {} pairs, {} uncovered rows, {} uncovered cols",
        pattern.n_rows(),
        p.iter().sum::<f64>(),
        pattern.n_cols(),
        q.iter().sum::<f64>(),
        pattern.len(),
        empty_rows,
        empty_cols
    )
}

/// Runs the multilevel solve from `source` to `target`.
pub fn solve(
    source: &SampleSet,
    target: &SampleSet,
    config: &SolveConfig,
) -> Result<TransportSolution> {
    config.validate()?;
    if source.dim() != target.dim() {
        return Err(Error::DimensionMismatch {
            left: source.dim(),
            right: target.dim(),
        });
    }
    let evaluator = CostEvaluator::new(config.quadrature_order);
    let mut src_grid = initial_grid(source);
    let mut tgt_grid = initial_grid(target);
    let mut levels: Vec<LevelSolution> = Vec::new();
    let mut refinements: Option<(Refinement, Refinement)> = None;

    for level in 1..=config.max_levels {
        let started = Instant::now();
        let src = build_marginal(source, &src_grid, config.density_model)?;
        let tgt = build_marginal(target, &tgt_grid, config.density_model)?;
        let p = src.weights();
        let q = tgt.weights();

        let (pattern, minimal_size, warm) = match (levels.last(), refinements.take()) {
            (Some(prev), Some((rs, rt))) => {
                let sp = parent_rows(&src, &rs, &prev.source)?;
                let tp = parent_rows(&tgt, &rt, &prev.target)?;
                let minimal = minimal_pattern(prev, &sp, &tp, config.support_threshold)?;
                let minimal_size = minimal.len();
                let pattern = if config.neighbor_expansion {
                    expand_pattern(&minimal, &src, &tgt)?
                } else {
                    minimal
                };
                let warm = scaled_feasible(prev, &p, &q, &sp, &tp, &pattern)?;
                (pattern, minimal_size, Some(warm.values))
            }
            _ => {
                let pattern = SparsityPattern::dense(src.cells.len(), tgt.cells.len());
                let n = pattern.len();
                (pattern, n, None)
            }
        };
        if !pattern.covers(&p, &q) {
            return Err(Error::Infeasible {
                level,
                diagnostic: diagnostic(&pattern, &src, &tgt),
            });
        }

        let costs = pair_costs(&evaluator, &pattern, &src, &tgt)?;
        let problem = TransportationProblem::new(p.clone(), q.clone(), costs)?;
        let coupling = match &warm {
            Some(w) => solve_transportation_warm(&problem, &pattern, w)?,
            None => solve_transportation(&problem, &pattern)?,
        };
        if coupling.status != SolveStatus::Optimal {
            return Err(Error::Infeasible {
                level,
                diagnostic: diagnostic(&pattern, &src, &tgt),
            });
        }
        let violation = marginal_violation(&coupling.values, &pattern, &p, &q);
        if violation > FEASIBILITY_TOL {
            return Err(Error::Internal(format!(
                "level {level} coupling violates marginals by {violation}"
            )));
        }
        let objective = coupling.objective;
        let solution = LevelSolution {
            level,
            source: src,
            target: tgt,
            costs: problem.costs().to_vec(),
            pattern,
            coupling,
            objective,
            minimal_pattern_size: minimal_size,
            wall_time_s: started.elapsed().as_secs_f64(),
        };
        log::info!(
            "level {level}: cells {:?}/{:?}, |S| = {}, objective {:.6e}",
            solution.source.grid().shape(),
            solution.target.grid().shape(),
            solution.pattern.len(),
            objective
        );
        levels.push(solution);

        if level == config.max_levels {
            break;
        }
        let last = levels.last().unwrap();
        let rs = refine_grid(
            &src_grid,
            &last.source.partition,
            config.policy,
            config.n_min,
        );
        let rt = refine_grid(
            &tgt_grid,
            &last.target.partition,
            config.policy,
            config.n_min,
        );
        if rs.fixpoint && rt.fixpoint {
            break;
        }
        src_grid = rs.grid.clone();
        tgt_grid = rt.grid.clone();
        refinements = Some((rs, rt));
    }

    let final_maps = final_pair_maps(levels.last().unwrap())?;
    Ok(TransportSolution { levels, final_maps })
}

fn final_pair_maps(level: &LevelSolution) -> Result<Vec<PairMap>> {
    level
        .pattern
        .pairs()
        .iter()
        .zip(&level.coupling.values)
        .filter(|(_, &v)| v > 0.0)
        .map(|(&(i, j), &v)| {
            Ok(PairMap {
                row: i,
                col: j,
                lambda: v,
                map: cell_pair_map(&level.source.cells[i], &level.target.cells[j])?,
            })
        })
        .collect()
}
