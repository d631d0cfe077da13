//! Seeded synthetic sample sets and closed-form Gaussian references.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::SampleSet;
use crate::transportmap::ReferenceMap;

/// The random generator used by every sampler; seeded, portable.
pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A Gaussian with row-major covariance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Gaussian {
    pub mean: Vec<f64>,
    pub cov: Vec<f64>,
}

impl Gaussian {
    pub fn new(mean: Vec<f64>, cov: Vec<f64>) -> Result<Self> {
        let d = mean.len();
        if d == 0 {
            return Err(Error::domain("gaussian mean is empty"));
        }
        if cov.len() != d * d {
            return Err(Error::domain(format!(
                "covariance has {} entries, expected {}",
                cov.len(),
                d * d
            )));
        }
        let g = Self { mean, cov };
        let m = g.cov_matrix();
        if (&m - m.transpose()).abs().max() > 1e-12 * m.abs().max().max(1.0) {
            return Err(Error::domain("covariance is not symmetric"));
        }
        if m.cholesky().is_none() {
            return Err(Error::domain("covariance is not positive definite"));
        }
        Ok(g)
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn cov_matrix(&self) -> DMatrix<f64> {
        let d = self.dim();
        DMatrix::from_row_slice(d, d, &self.cov)
    }

    pub fn sample(&self, n: usize, rng: &mut impl Rng) -> Result<SampleSet> {
        let d = self.dim();
        let l = self
            .cov_matrix()
            .cholesky()
            .ok_or_else(|| Error::domain("covariance is not positive definite"))?
            .l();
        let mu = DVector::from_column_slice(&self.mean);
        let mut coords = Vec::with_capacity(n * d);
        for _ in 0..n {
            let z = DVector::from_fn(d, |_, _| rng.sample::<f64, _>(StandardNormal));
            coords.extend((&l * z + &mu).iter());
        }
        SampleSet::new(d, coords)
    }
}

fn sym_sqrt(m: &DMatrix<f64>) -> DMatrix<f64> {
    let e = SymmetricEigen::new(m.clone());
    let s = e.eigenvalues.map(|v| v.max(0.0).sqrt());
    &e.eigenvectors * DMatrix::from_diagonal(&s) * e.eigenvectors.transpose()
}

/// Optimal affine map between two Gaussians,
/// `A = S2^{1/2} (S2^{1/2} S1 S2^{1/2})^{-1/2} S2^{1/2}`.
pub fn gaussian_map(source: &Gaussian, target: &Gaussian) -> Result<ReferenceMap> {
    if source.dim() != target.dim() {
        return Err(Error::DimensionMismatch {
            left: source.dim(),
            right: target.dim(),
        });
    }
    let s1 = source.cov_matrix();
    let r2 = sym_sqrt(&target.cov_matrix());
    let mid = sym_sqrt(&(&r2 * s1 * &r2));
    let mid_inv = mid
        .try_inverse()
        .ok_or_else(|| Error::domain("singular covariance product"))?;
    let a = &r2 * mid_inv * &r2;
    let d = source.dim();
    let matrix = (0..d * d).map(|k| a[(k / d, k % d)]).collect();
    Ok(ReferenceMap::Affine {
        matrix,
        source_mean: source.mean.clone(),
        target_mean: target.mean.clone(),
    })
}

/// Closed-form Wasserstein-2 distance between two Gaussians.
pub fn gaussian_w2(source: &Gaussian, target: &Gaussian) -> Result<f64> {
    if source.dim() != target.dim() {
        return Err(Error::DimensionMismatch {
            left: source.dim(),
            right: target.dim(),
        });
    }
    let s1 = source.cov_matrix();
    let s2 = target.cov_matrix();
    let r2 = sym_sqrt(&s2);
    let cross = sym_sqrt(&(&r2 * &s1 * &r2));
    let mean_sq: f64 = source
        .mean
        .iter()
        .zip(&target.mean)
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    Ok(((s1 + s2 - cross * 2.0).trace() + mean_sq).max(0.0).sqrt())
}

/// Uniform samples on the unit square.
pub fn uniform_square(n: usize, rng: &mut impl Rng) -> SampleSet {
    let coords = (0..2 * n).map(|_| rng.random::<f64>()).collect();
    SampleSet::new(2, coords).expect("well-formed coordinates")
}

/// Whether `(x, y)` lies on the cross made of the horizontal and vertical
/// middle-third bands of the unit square.
pub fn in_cross(x: f64, y: f64) -> bool {
    let band = |t: f64| (1.0 / 3.0..=2.0 / 3.0).contains(&t);
    (0.0..=1.0).contains(&x) && (0.0..=1.0).contains(&y) && (band(x) || band(y))
}

/// Uniform samples on the cross, by rejection from the unit square.
pub fn uniform_cross(n: usize, rng: &mut impl Rng) -> SampleSet {
    let mut coords = Vec::with_capacity(2 * n);
    while coords.len() < 2 * n {
        let (x, y) = (rng.random::<f64>(), rng.random::<f64>());
        if in_cross(x, y) {
            coords.push(x);
            coords.push(y);
        }
    }
    SampleSet::new(2, coords).expect("well-formed coordinates")
}

/// Standard normal samples in `dim` dimensions.
pub fn standard_normal(n: usize, dim: usize, rng: &mut impl Rng) -> SampleSet {
    let coords = (0..n * dim)
        .map(|_| rng.sample::<f64, _>(StandardNormal))
        .collect();
    SampleSet::new(dim, coords).expect("well-formed coordinates")
}

/// Coordinate-wise cube roots of standard normal samples.
pub fn cube_root_normal(n: usize, dim: usize, rng: &mut impl Rng) -> SampleSet {
    let coords = (0..n * dim)
        .map(|_| rng.sample::<f64, _>(StandardNormal).cbrt())
        .collect();
    SampleSet::new(dim, coords).expect("well-formed coordinates")
}
