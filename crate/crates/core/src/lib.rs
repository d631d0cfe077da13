//! Sample-based optimal transport on adaptive tensor-product grids.
//!
//! Both marginals are given as point samples. Each level partitions the
//! samples into grid cells, fits a product of linear densities per cell,
//! solves a sparse transportation problem between the occupied cells and
//! refines the grids. Transport maps and Wasserstein barycenters are built on
//! top of the multilevel solve.

// `!(x >= 0.0)` style checks are used on purpose: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::needless_range_loop)]

pub mod barycenter;
pub mod density1d;
pub mod error;
pub mod generators;
pub mod geometry;
pub mod io;
pub mod localtransport;
pub mod lpsolver;
pub mod quadrature;
pub mod refinement;
pub mod transportmap;

pub use error::{Error, Result};
pub use geometry::{RefinementPolicy, SampleSet};
pub use refinement::{solve, DensityModel, SolveConfig, TransportSolution};
pub use transportmap::MapEvaluator;
