//! Sample ingestion, tensor-product grids, cell membership and refinement.
//!
//! A [`Grid`] is the cartesian product of one [`AxisPartition`] per
//! dimension. Cells are addressed either by a [`CellIndex`] (one segment
//! index per axis) or by a linear index in row-major order, with the last
//! axis varying fastest.
//!
//! Boundary convention: a coordinate lying exactly on an interior breakpoint
//! belongs to the segment on its right; a coordinate equal to the last
//! breakpoint belongs to the last segment.

use std::io::Read;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative padding applied to the sample range when building the support.
pub const SUPPORT_PADDING: f64 = 1e-9;

/// Default occupancy threshold above which a segment is split.
pub const DEFAULT_N_MIN: usize = 10;

/// A cloud of `dim`-dimensional points stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    dim: usize,
    coords: Vec<f64>,
}

impl SampleSet {
    pub fn new(dim: usize, coords: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::domain("sample dimension must be positive"));
        }
        if coords.is_empty() {
            return Err(Error::EmptyInput);
        }
        if !coords.len().is_multiple_of(dim) {
            return Err(Error::domain(format!(
                "{} coordinates do not form points of dimension {dim}",
                coords.len()
            )));
        }
        if let Some(pos) = coords.iter().position(|c| !c.is_finite()) {
            return Err(Error::Parse {
                row: pos / dim + 1,
                message: "non-finite coordinate".into(),
            });
        }
        Ok(Self { dim, coords })
    }

    pub fn from_points<P: AsRef<[f64]>>(points: &[P]) -> Result<Self> {
        let first = points.first().ok_or(Error::EmptyInput)?;
        let dim = first.as_ref().len();
        let mut coords = Vec::with_capacity(points.len() * dim);
        for (row, p) in points.iter().enumerate() {
            let p = p.as_ref();
            if p.len() != dim {
                return Err(Error::Parse {
                    row: row + 1,
                    message: format!("expected {dim} fields, found {}", p.len()),
                });
            }
            coords.extend_from_slice(p);
        }
        Self::new(dim, coords)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.coords.chunks_exact(self.dim)
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    /// Per-axis `(min, max)` of the samples.
    pub fn bounds(&self) -> Vec<(f64, f64)> {
        let mut b = vec![(f64::INFINITY, f64::NEG_INFINITY); self.dim];
        for p in self.points() {
            for (slot, &c) in b.iter_mut().zip(p) {
                slot.0 = slot.0.min(c);
                slot.1 = slot.1.max(c);
            }
        }
        b
    }

    /// Euclidean length of the diagonal of the bounding box.
    pub fn diameter(&self) -> f64 {
        self.bounds()
            .iter()
            .map(|(lo, hi)| (hi - lo) * (hi - lo))
            .sum::<f64>()
            .sqrt()
    }

    /// Coordinate-wise mean.
    pub fn mean(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.dim];
        for p in self.points() {
            for (acc, &c) in m.iter_mut().zip(p) {
                *acc += c;
            }
        }
        let n = self.len() as f64;
        m.iter_mut().for_each(|v| *v /= n);
        m
    }

    /// Coordinate-wise standard deviation (population).
    pub fn std_dev(&self) -> Vec<f64> {
        let mean = self.mean();
        let mut v = vec![0.0; self.dim];
        for p in self.points() {
            for l in 0..self.dim {
                let d = p[l] - mean[l];
                v[l] += d * d;
            }
        }
        let n = self.len() as f64;
        v.into_iter().map(|s| (s / n).sqrt()).collect()
    }

    /// Values of one coordinate across all samples.
    pub fn axis_values(&self, axis: usize) -> Vec<f64> {
        self.points().map(|p| p[axis]).collect()
    }
}

/// Parses CSV rows of decimal literals into a [`SampleSet`].
///
/// Rows are numbered from 1, counting the header row when `has_header` is set.
pub fn load_samples<R: Read>(source: R, has_header: bool) -> Result<SampleSet> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(has_header)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(source);
    let offset = usize::from(has_header);
    let mut dim = None;
    let mut coords = Vec::new();
    for (k, record) in reader.records().enumerate() {
        let row = k + 1 + offset;
        let record = record.map_err(|e| Error::Parse {
            row,
            message: e.to_string(),
        })?;
        let arity = record.len();
        match dim {
            None => dim = Some(arity),
            Some(d) if d != arity => {
                return Err(Error::Parse {
                    row,
                    message: format!("expected {d} fields, found {arity}"),
                })
            }
            _ => {}
        }
        for field in record.iter() {
            let v: f64 = field.parse().map_err(|_| Error::Parse {
                row,
                message: format!("non-numeric field {field:?}"),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse {
                    row,
                    message: format!("non-finite field {field:?}"),
                });
            }
            coords.push(v);
        }
    }
    match dim {
        None | Some(0) => Err(Error::EmptyInput),
        Some(d) => SampleSet::new(d, coords),
    }
}

/// Strictly increasing breakpoints `b_0 < ... < b_K` defining `K` segments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxisPartition {
    breakpoints: Vec<f64>,
}

impl AxisPartition {
    pub fn new(breakpoints: Vec<f64>) -> Result<Self> {
        if breakpoints.len() < 2 {
            return Err(Error::domain(
                "an axis partition needs at least two breakpoints",
            ));
        }
        if breakpoints.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::domain("breakpoints must be strictly increasing"));
        }
        Ok(Self { breakpoints })
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn num_segments(&self) -> usize {
        self.breakpoints.len() - 1
    }

    pub fn lo(&self) -> f64 {
        self.breakpoints[0]
    }

    pub fn hi(&self) -> f64 {
        *self.breakpoints.last().unwrap()
    }

    pub fn segment(&self, k: usize) -> (f64, f64) {
        (self.breakpoints[k], self.breakpoints[k + 1])
    }

    pub fn width(&self, k: usize) -> f64 {
        self.breakpoints[k + 1] - self.breakpoints[k]
    }

    /// Segment containing `x`, or `None` outside `[b_0, b_K]`.
    pub fn segment_of(&self, x: f64) -> Option<usize> {
        if !(x >= self.lo() && x <= self.hi()) {
            return None;
        }
        let k = self.breakpoints.partition_point(|&b| b <= x);
        Some((k - 1).min(self.num_segments() - 1))
    }
}

/// One segment index per axis.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CellIndex(pub Vec<usize>);

impl CellIndex {
    pub fn coords(&self) -> &[usize] {
        &self.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    partitions: Vec<AxisPartition>,
    /// Axes whose samples were all equal; they carry one tiny segment.
    degenerate: Vec<bool>,
}

impl Grid {
    pub fn new(partitions: Vec<AxisPartition>) -> Result<Self> {
        if partitions.is_empty() {
            return Err(Error::domain("grid needs at least one axis"));
        }
        let degenerate = vec![false; partitions.len()];
        Ok(Self {
            partitions,
            degenerate,
        })
    }

    pub fn dim(&self) -> usize {
        self.partitions.len()
    }

    pub fn partitions(&self) -> &[AxisPartition] {
        &self.partitions
    }

    pub fn axis(&self, l: usize) -> &AxisPartition {
        &self.partitions[l]
    }

    pub fn degenerate_axes(&self) -> &[bool] {
        &self.degenerate
    }

    pub fn is_degenerate(&self) -> bool {
        self.degenerate.iter().any(|&d| d)
    }

    /// Segment count per axis.
    pub fn shape(&self) -> Vec<usize> {
        self.partitions.iter().map(|p| p.num_segments()).collect()
    }

    pub fn num_cells(&self) -> usize {
        self.shape().iter().product()
    }

    pub fn linear_index(&self, cell: &CellIndex) -> usize {
        let mut idx = 0;
        for (p, &c) in self.partitions.iter().zip(&cell.0) {
            idx = idx * p.num_segments() + c;
        }
        idx
    }

    pub fn cell_at(&self, mut linear: usize) -> CellIndex {
        let mut coords = vec![0; self.dim()];
        for l in (0..self.dim()).rev() {
            let k = self.partitions[l].num_segments();
            coords[l] = linear % k;
            linear /= k;
        }
        CellIndex(coords)
    }

    pub fn contains_cell(&self, cell: &CellIndex) -> bool {
        cell.0.len() == self.dim()
            && cell
                .0
                .iter()
                .zip(&self.partitions)
                .all(|(&c, p)| c < p.num_segments())
    }

    /// Per-axis `(left, right)` bounds of a cell.
    pub fn cell_bounds(&self, cell: &CellIndex) -> Vec<(f64, f64)> {
        cell.0
            .iter()
            .zip(&self.partitions)
            .map(|(&c, p)| p.segment(c))
            .collect()
    }

    /// Euclidean length of a cell's diagonal.
    pub fn cell_diameter(&self, cell: &CellIndex) -> f64 {
        self.cell_bounds(cell)
            .iter()
            .map(|(a, b)| (b - a) * (b - a))
            .sum::<f64>()
            .sqrt()
    }

    pub fn try_locate(&self, point: &[f64]) -> Option<CellIndex> {
        if point.len() != self.dim() {
            return None;
        }
        point
            .iter()
            .zip(&self.partitions)
            .map(|(&x, p)| p.segment_of(x))
            .collect::<Option<Vec<_>>>()
            .map(CellIndex)
    }
}

/// Builds the starting grid: each axis support split into two equal halves.
///
/// The support is the sample range inflated by [`SUPPORT_PADDING`] so that
/// every sample lies strictly inside. An axis whose samples are all equal gets
/// a single segment centred on that value and is flagged as degenerate.
pub fn initial_grid(samples: &SampleSet) -> Grid {
    let mut partitions = Vec::with_capacity(samples.dim());
    let mut degenerate = Vec::with_capacity(samples.dim());
    for (lo, hi) in samples.bounds() {
        let scale = lo.abs().max(hi.abs());
        if hi > lo {
            let pad = (SUPPORT_PADDING * (hi - lo)).max(4.0 * f64::EPSILON * scale);
            let (a, b) = (lo - pad, hi + pad);
            let mid = 0.5 * (a + b);
            partitions.push(AxisPartition {
                breakpoints: vec![a, mid, b],
            });
            degenerate.push(false);
        } else {
            let half = SUPPORT_PADDING * scale.max(1.0);
            partitions.push(AxisPartition {
                breakpoints: vec![lo - half, lo + half],
            });
            degenerate.push(true);
        }
    }
    Grid {
        partitions,
        degenerate,
    }
}

/// An occupied cell together with the samples it holds.
#[derive(Debug, Clone, PartialEq)]
pub struct OccupiedCell {
    pub index: CellIndex,
    pub linear: usize,
    pub weight: f64,
    pub members: Vec<usize>,
}

/// Sample counts per occupied cell; cells with no samples are omitted.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedPartition {
    grid: Grid,
    cells: Vec<OccupiedCell>,
    total: usize,
}

impl WeightedPartition {
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// Occupied cells sorted by linear index.
    pub fn cells(&self) -> &[OccupiedCell] {
        &self.cells
    }

    pub fn weights(&self) -> Vec<f64> {
        self.cells.iter().map(|c| c.weight).collect()
    }

    pub fn total(&self) -> usize {
        self.total
    }

    /// Position of the occupied cell with this linear index.
    pub fn position(&self, linear: usize) -> Option<usize> {
        self.cells.binary_search_by_key(&linear, |c| c.linear).ok()
    }

    /// Number of sample coordinates falling in each segment of `axis`.
    pub fn segment_counts(&self, axis: usize) -> Vec<usize> {
        let mut counts = vec![0; self.grid.axis(axis).num_segments()];
        for c in &self.cells {
            counts[c.index.0[axis]] += c.members.len();
        }
        counts
    }
}

/// Assigns every sample to its cell; weights are occupancy fractions.
pub fn assign_weights(samples: &SampleSet, grid: &Grid) -> Result<WeightedPartition> {
    if samples.dim() != grid.dim() {
        return Err(Error::DimensionMismatch {
            left: samples.dim(),
            right: grid.dim(),
        });
    }
    let mut keyed = Vec::with_capacity(samples.len());
    for (i, p) in samples.points().enumerate() {
        let cell = grid.try_locate(p).ok_or(Error::OutOfSupport { index: i })?;
        keyed.push((grid.linear_index(&cell), i));
    }
    keyed.sort_unstable();
    let total = samples.len();
    let mut cells: Vec<OccupiedCell> = Vec::new();
    for (linear, i) in keyed {
        match cells.last_mut() {
            Some(c) if c.linear == linear => c.members.push(i),
            _ => cells.push(OccupiedCell {
                index: grid.cell_at(linear),
                linear,
                weight: 0.0,
                members: vec![i],
            }),
        }
    }
    for c in &mut cells {
        c.weight = c.members.len() as f64 / total as f64;
    }
    Ok(WeightedPartition {
        grid: grid.clone(),
        cells,
        total,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RefinementPolicy {
    /// Bisect every eligible segment on every axis.
    #[default]
    Standard,
    /// Bisect the eligible segments of a single axis: the one with the widest
    /// eligible segment, lowest axis index on ties.
    LongestAxis,
}

/// Result of one refinement step.
#[derive(Debug, Clone, PartialEq)]
pub struct Refinement {
    pub grid: Grid,
    /// For each axis, the parent segment of every child segment.
    pub parent_segments: Vec<Vec<usize>>,
    /// No segment was eligible; `grid` equals the input.
    pub fixpoint: bool,
}

impl Refinement {
    /// Parent cell of a child cell in the coarser grid.
    pub fn parent_cell(&self, child: &CellIndex) -> CellIndex {
        CellIndex(
            child
                .0
                .iter()
                .zip(&self.parent_segments)
                .map(|(&c, map)| map[c])
                .collect(),
        )
    }

    pub fn identity(grid: &Grid) -> Self {
        Self {
            parent_segments: grid.shape().into_iter().map(|k| (0..k).collect()).collect(),
            grid: grid.clone(),
            fixpoint: true,
        }
    }
}

/// Splits segments holding more than `n_min` sample coordinates into two
/// equal-length halves.
pub fn refine_grid(
    grid: &Grid,
    partition: &WeightedPartition,
    policy: RefinementPolicy,
    n_min: usize,
) -> Refinement {
    let d = grid.dim();
    let eligible: Vec<Vec<bool>> = (0..d)
        .map(|l| {
            let p = grid.axis(l);
            partition
                .segment_counts(l)
                .iter()
                .enumerate()
                .map(|(k, &n)| {
                    let (a, b) = p.segment(k);
                    let mid = 0.5 * (a + b);
                    !grid.degenerate[l] && n > n_min && a < mid && mid < b
                })
                .collect()
        })
        .collect();

    let axes: Vec<bool> = match policy {
        RefinementPolicy::Standard => eligible.iter().map(|e| e.iter().any(|&x| x)).collect(),
        RefinementPolicy::LongestAxis => {
            let mut best: Option<(usize, f64)> = None;
            for (l, e) in eligible.iter().enumerate() {
                let widest = e
                    .iter()
                    .enumerate()
                    .filter(|(_, &ok)| ok)
                    .map(|(k, _)| grid.axis(l).width(k))
                    .fold(f64::NEG_INFINITY, f64::max);
                if widest.is_finite() {
                    match best {
                        Some((_, w)) if widest <= w * (1.0 + 1e-12) => {}
                        _ => best = Some((l, widest)),
                    }
                }
            }
            (0..d).map(|l| best.is_some_and(|(b, _)| b == l)).collect()
        }
    };

    if !axes.iter().any(|&a| a) {
        return Refinement::identity(grid);
    }

    let mut partitions = Vec::with_capacity(d);
    let mut parent_segments = Vec::with_capacity(d);
    for l in 0..d {
        let p = grid.axis(l);
        let mut bps = vec![p.lo()];
        let mut parents = Vec::new();
        for k in 0..p.num_segments() {
            let (a, b) = p.segment(k);
            if axes[l] && eligible[l][k] {
                bps.push(0.5 * (a + b));
                parents.push(k);
            }
            bps.push(b);
            parents.push(k);
        }
        partitions.push(AxisPartition { breakpoints: bps });
        parent_segments.push(parents);
    }
    Refinement {
        grid: Grid {
            partitions,
            degenerate: grid.degenerate.clone(),
        },
        parent_segments,
        fixpoint: false,
    }
}

/// Cells whose closed rectangles touch `cell`, excluding `cell` itself,
/// ordered by linear index.
pub fn cell_neighbors(grid: &Grid, cell: &CellIndex) -> Vec<CellIndex> {
    let shape = grid.shape();
    let ranges: Vec<(usize, usize)> = cell
        .0
        .iter()
        .zip(&shape)
        .map(|(&c, &k)| (c.saturating_sub(1), (c + 1).min(k - 1)))
        .collect();
    let mut out = Vec::new();
    let mut cur: Vec<usize> = ranges.iter().map(|r| r.0).collect();
    loop {
        if cur != cell.0 {
            out.push(CellIndex(cur.clone()));
        }
        let mut l = cur.len();
        loop {
            if l == 0 {
                return out;
            }
            l -= 1;
            if cur[l] < ranges[l].1 {
                cur[l] += 1;
                for (m, slot) in cur.iter_mut().enumerate().skip(l + 1) {
                    *slot = ranges[m].0;
                }
                break;
            }
        }
    }
}

/// The cell containing `point` under the rightward boundary convention.
pub fn locate(grid: &Grid, point: &[f64]) -> Result<CellIndex> {
    if point.len() != grid.dim() {
        return Err(Error::DimensionMismatch {
            left: point.len(),
            right: grid.dim(),
        });
    }
    grid.try_locate(point).ok_or_else(|| Error::PointOutside {
        point: point.to_vec(),
    })
}
