//! Lossy coding length of Gaussian-modelled texture regions.

use nalgebra::{Cholesky, DMatrix, DVector};

use crate::error::{Error, Result};
use crate::features::RegionStats;
use crate::scalar::Scalar;

/// Distortion, window size and feature dimension for one coding-length
/// evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CodingParams<T> {
    pub epsilon: T,
    pub window: usize,
    pub dim: usize,
}

impl<T: Scalar> CodingParams<T> {
    pub fn new(epsilon: T, window: usize, dim: usize) -> Result<Self> {
        if !(epsilon > T::zero()) {
            return Err(Error::InvalidArgument(format!(
                "distortion must be positive, got {}",
                epsilon.as_f64()
            )));
        }
        if window == 0 || window % 2 == 0 {
            return Err(Error::InvalidArgument(format!("window size {window} must be odd")));
        }
        if dim == 0 {
            return Err(Error::InvalidArgument("feature dimension must be positive".into()));
        }
        Ok(Self {
            epsilon,
            window,
            dim,
        })
    }
}

/// `log2 det(I + scale * cov)` through a Cholesky factorization.
fn log2_det_shifted<T: Scalar>(cov: &DMatrix<T>, scale: T) -> Result<T> {
    let n = cov.nrows();
    let m = DMatrix::<T>::identity(n, n) + cov * scale;
    let chol = Cholesky::new(m).ok_or(Error::NotPositiveSemidefinite)?;
    let l = chol.l_dirty();
    let mut acc = T::zero();
    for i in 0..n {
        acc += l[(i, i)].ln();
    }
    Ok((acc * T::lit(2.0) / T::ln_2()).max(T::zero()))
}

fn check_shapes<T: Scalar>(mean: &DVector<T>, cov: &DMatrix<T>, dim: usize) -> Result<()> {
    if mean.len() != dim || cov.nrows() != dim || cov.ncols() != dim {
        return Err(Error::DimensionMismatch {
            expected: format!("dimension {dim}"),
            actual: format!("mean {}, covariance {}x{}", mean.len(), cov.nrows(), cov.ncols()),
        });
    }
    Ok(())
}

// codebook + data + mean terms with `vectors` coded samples
fn gaussian_bits<T: Scalar>(
    mean: &DVector<T>,
    cov: &DMatrix<T>,
    vectors: T,
    params: &CodingParams<T>,
) -> Result<T> {
    check_shapes(mean, cov, params.dim)?;
    let d = T::from_count(params.dim);
    let eps2 = params.epsilon * params.epsilon;
    let two = T::lit(2.0);
    let logdet = log2_det_shifted(cov, d / eps2)?;
    let mean_bits = d / two * (T::one() + mean.norm_squared() / eps2).log2();
    Ok((d / two + vectors / two) * logdet + mean_bits)
}

/// Bits to code `n` feature vectors with the given mean and covariance up to
/// distortion `epsilon`: codebook, data and mean terms.
pub fn coding_length_full<T: Scalar>(
    mean: &DVector<T>,
    cov: &DMatrix<T>,
    n: usize,
    params: &CodingParams<T>,
) -> Result<T> {
    gaussian_bits(mean, cov, T::from_count(n), params)
}

/// Bits to code a region counting only the `N / w^2` non-overlapping
/// windows that tile it.
pub fn region_coding_length<T: Scalar>(stats: &RegionStats<T>, params: &CodingParams<T>) -> Result<T> {
    let w2 = T::from_count(params.window * params.window);
    let tiles = T::from_count(stats.pixel_count) / w2;
    gaussian_bits(&stats.mean, &stats.covariance, tiles, params)
}
