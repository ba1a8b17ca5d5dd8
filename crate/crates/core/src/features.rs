//! Texture features: stacked color windows, their PCA projection, region
//! interiors and per-region Gaussian statistics.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::imagecore::RasterImage;
use crate::labelmap::LabelMap;
use crate::mask::RegionMask;
use crate::scalar::Scalar;

/// Reduced feature dimension used throughout segmentation.
pub const DEFAULT_FEATURE_DIM: usize = 8;

/// Ridge added to every region covariance so log-determinants stay finite
/// for tiny or flat interiors.
pub const COVARIANCE_RIDGE: f64 = 1e-9;

const CHUNK: usize = 1024;

/// One stacked `3 w^2` window per pixel, stored pixel-major.
#[derive(Debug, Clone)]
pub struct WindowMatrix<T> {
    window: usize,
    raw_dim: usize,
    num_pixels: usize,
    data: Vec<T>,
}

impl<T: Scalar> WindowMatrix<T> {
    /// Wraps pixel-major columns, e.g. synthetic samples.
    pub fn from_columns(window: usize, raw_dim: usize, data: Vec<T>) -> Result<Self> {
        if raw_dim == 0 || data.len() % raw_dim != 0 {
            return Err(Error::DimensionMismatch {
                expected: format!("a multiple of {raw_dim}"),
                actual: data.len().to_string(),
            });
        }
        Ok(Self {
            window,
            raw_dim,
            num_pixels: data.len() / raw_dim,
            data,
        })
    }

    pub fn window(&self) -> usize {
        self.window
    }

    pub fn raw_dim(&self) -> usize {
        self.raw_dim
    }

    pub fn num_pixels(&self) -> usize {
        self.num_pixels
    }

    pub fn column(&self, p: usize) -> &[T] {
        &self.data[p * self.raw_dim..(p + 1) * self.raw_dim]
    }
}

trait WindowSource<T> {
    fn raw_dim(&self) -> usize;
    fn num_pixels(&self) -> usize;
    fn fill(&self, p: usize, out: &mut [T]);
}

impl<T: Scalar> WindowSource<T> for WindowMatrix<T> {
    fn raw_dim(&self) -> usize {
        self.raw_dim
    }
    fn num_pixels(&self) -> usize {
        self.num_pixels
    }
    fn fill(&self, p: usize, out: &mut [T]) {
        out.copy_from_slice(self.column(p));
    }
}

/// Lazily stacked windows of an image, so the full matrix never needs to be
/// materialized for large images.
struct ImageWindows<'a, T> {
    img: &'a RasterImage<T>,
    window: usize,
}

#[inline]
fn mirror(i: isize, n: usize) -> usize {
    let n = n as isize;
    let j = if i < 0 {
        -i - 1
    } else if i >= n {
        2 * n - i - 1
    } else {
        i
    };
    j as usize
}

impl<T: Scalar> WindowSource<T> for ImageWindows<'_, T> {
    fn raw_dim(&self) -> usize {
        3 * self.window * self.window
    }
    fn num_pixels(&self) -> usize {
        self.img.width() * self.img.height()
    }
    fn fill(&self, p: usize, out: &mut [T]) {
        let (w, h) = (self.img.width(), self.img.height());
        let (row, col) = ((p / w) as isize, (p % w) as isize);
        let r = (self.window / 2) as isize;
        let data = self.img.data();
        let mut k = 0;
        for dy in -r..=r {
            let y = mirror(row + dy, h);
            for dx in -r..=r {
                let x = mirror(col + dx, w);
                let i = (y * w + x) * 3;
                out[k..k + 3].copy_from_slice(&data[i..i + 3]);
                k += 3;
            }
        }
    }
}

fn check_window<T: Scalar>(img: &RasterImage<T>, w: usize) -> Result<()> {
    if w == 0 || w % 2 == 0 {
        return Err(Error::InvalidArgument(format!("window size {w} must be odd and positive")));
    }
    let limit = 2 * img.width().min(img.height());
    if w > limit {
        return Err(Error::InvalidArgument(format!(
            "window size {w} exceeds twice the smaller image side ({limit})"
        )));
    }
    Ok(())
}

/// Stacks the `w x w x 3` neighbourhood of every pixel (row-major within the
/// window, channels interleaved). Border windows use symmetric mirroring.
pub fn extract_windows<T: Scalar>(img: &RasterImage<T>, w: usize) -> Result<WindowMatrix<T>> {
    check_window(img, w)?;
    let src = ImageWindows { img, window: w };
    let raw_dim = src.raw_dim();
    let n = WindowSource::num_pixels(&src);
    let mut data = vec![T::zero(); raw_dim * n];
    for (p, col) in data.chunks_exact_mut(raw_dim).enumerate() {
        src.fill(p, col);
    }
    Ok(WindowMatrix {
        window: w,
        raw_dim,
        num_pixels: n,
        data,
    })
}

/// Principal subspace of the stacked windows for one window size.
#[derive(Debug, Clone)]
pub struct PcaBasis<T: Scalar> {
    window: usize,
    mean: DVector<T>,
    /// `reduced_dim x raw_dim`, orthonormal rows.
    components: DMatrix<T>,
    /// All eigenvalues of the sample covariance, descending.
    eigenvalues: Vec<T>,
    energy_fraction: T,
}

impl<T: Scalar> PcaBasis<T> {
    pub fn window(&self) -> usize {
        self.window
    }

    pub fn raw_dim(&self) -> usize {
        self.components.ncols()
    }

    pub fn reduced_dim(&self) -> usize {
        self.components.nrows()
    }

    pub fn mean(&self) -> &DVector<T> {
        &self.mean
    }

    pub fn components(&self) -> &DMatrix<T> {
        &self.components
    }

    pub fn eigenvalues(&self) -> &[T] {
        &self.eigenvalues
    }

    pub fn energy_fraction(&self) -> T {
        self.energy_fraction
    }

    /// Squared distance between a raw column and its reconstruction from the
    /// first `d` components.
    pub fn reconstruction_error(&self, raw: &[T], d: usize) -> T {
        let x = DVector::from_column_slice(raw) - &self.mean;
        let d = d.min(self.reduced_dim());
        let basis = self.components.rows(0, d);
        let coeffs = &basis * &x;
        let recon = basis.transpose() * coeffs;
        (x - recon).norm_squared()
    }
}

/// Fits a PCA basis over all columns of `raw`, keeping `d` components
/// (clamped to the raw dimension).
pub fn fit_pca<T: Scalar>(raw: &WindowMatrix<T>, d: usize) -> Result<PcaBasis<T>> {
    fit_pca_from(raw, raw.window, d)
}

fn fit_pca_from<T: Scalar, S: WindowSource<T>>(src: &S, window: usize, d: usize) -> Result<PcaBasis<T>> {
    let raw_dim = src.raw_dim();
    let n = src.num_pixels();
    let d = d.min(raw_dim);
    if d == 0 {
        return Err(Error::InvalidArgument("reduced dimension must be positive".into()));
    }
    if n < d {
        return Err(Error::InvalidArgument(format!(
            "{n} samples cannot support {d} principal components"
        )));
    }

    let mut col = vec![T::zero(); raw_dim];
    let mut mean = DVector::<T>::zeros(raw_dim);
    for p in 0..n {
        src.fill(p, &mut col);
        for (m, &v) in mean.iter_mut().zip(&col) {
            *m += v;
        }
    }
    mean /= T::from_count(n);

    // scatter accumulated chunk by chunk in a fixed order
    let mut scatter = DMatrix::<T>::zeros(raw_dim, raw_dim);
    let mut chunk = DMatrix::<T>::zeros(raw_dim, CHUNK.min(n));
    let mut start = 0;
    while start < n {
        let len = CHUNK.min(n - start);
        if chunk.ncols() != len {
            chunk = DMatrix::zeros(raw_dim, len);
        }
        for j in 0..len {
            src.fill(start + j, &mut col);
            for (i, &v) in col.iter().enumerate() {
                chunk[(i, j)] = v - mean[i];
            }
        }
        scatter.gemm(T::one(), &chunk, &chunk.transpose(), T::one());
        start += len;
    }
    scatter /= T::from_count(n);

    let eig = SymmetricEigen::new(scatter);
    let mut order: Vec<usize> = (0..raw_dim).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .partial_cmp(&eig.eigenvalues[a])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    let eigenvalues: Vec<T> = order.iter().map(|&i| eig.eigenvalues[i].max(T::zero())).collect();
    let mut components = DMatrix::<T>::zeros(d, raw_dim);
    for (row, &i) in order.iter().take(d).enumerate() {
        let v = eig.eigenvectors.column(i);
        // sign convention: largest-magnitude entry positive, first on ties
        let mut pivot = 0;
        for k in 1..raw_dim {
            if v[k].abs() > v[pivot].abs() {
                pivot = k;
            }
        }
        let sign = if v[pivot] < T::zero() { -T::one() } else { T::one() };
        for k in 0..raw_dim {
            components[(row, k)] = v[k] * sign;
        }
    }
    let total = eigenvalues.iter().fold(T::zero(), |a, &b| a + b);
    let kept = eigenvalues.iter().take(d).fold(T::zero(), |a, &b| a + b);
    let energy_fraction = if total > T::zero() {
        (kept / total).min(T::one())
    } else {
        T::one()
    };
    Ok(PcaBasis {
        window,
        mean,
        components,
        eigenvalues,
        energy_fraction,
    })
}

/// Reduced-dimension feature vector for every pixel at one window size.
#[derive(Debug, Clone)]
pub struct FeatureField<T> {
    window: usize,
    dim: usize,
    width: usize,
    height: usize,
    data: Vec<T>,
}

impl<T: Scalar> FeatureField<T> {
    pub fn window(&self) -> usize {
        self.window
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn num_pixels(&self) -> usize {
        self.width * self.height
    }

    pub fn vector(&self, p: usize) -> &[T] {
        &self.data[p * self.dim..(p + 1) * self.dim]
    }
}

/// Projects every column of `raw` onto the basis. The resulting field is laid
/// out as a single row when the matrix did not come from an image; use
/// [`FeatureField::reshape`] to restore image geometry.
pub fn project<T: Scalar>(basis: &PcaBasis<T>, raw: &WindowMatrix<T>) -> Result<FeatureField<T>> {
    if raw.raw_dim != basis.raw_dim() {
        return Err(Error::DimensionMismatch {
            expected: format!("raw dimension {}", basis.raw_dim()),
            actual: format!("raw dimension {}", raw.raw_dim),
        });
    }
    Ok(project_from(basis, raw, raw.num_pixels, 1))
}

impl<T: Scalar> FeatureField<T> {
    /// Reinterprets the pixel sequence as a `width x height` grid.
    pub fn reshape(mut self, width: usize, height: usize) -> Result<Self> {
        if width * height != self.num_pixels() {
            return Err(Error::DimensionMismatch {
                expected: format!("{} pixels", self.num_pixels()),
                actual: format!("{width}x{height}"),
            });
        }
        self.width = width;
        self.height = height;
        Ok(self)
    }

    /// Multiplies every feature by `factor`.
    pub fn scaled(mut self, factor: T) -> Self {
        for v in &mut self.data {
            *v *= factor;
        }
        self
    }
}

fn project_from<T: Scalar, S: WindowSource<T>>(
    basis: &PcaBasis<T>,
    src: &S,
    width: usize,
    height: usize,
) -> FeatureField<T> {
    let d = basis.reduced_dim();
    let raw_dim = basis.raw_dim();
    let n = src.num_pixels();
    let mut data = vec![T::zero(); n * d];
    let mut col = vec![T::zero(); raw_dim];
    for (p, out) in data.chunks_exact_mut(d).enumerate() {
        src.fill(p, &mut col);
        for (k, o) in out.iter_mut().enumerate() {
            let row = basis.components.row(k);
            let mut acc = T::zero();
            for i in 0..raw_dim {
                acc += row[i] * (col[i] - basis.mean[i]);
            }
            *o = acc;
        }
    }
    FeatureField {
        window: basis.window,
        dim: d,
        width,
        height,
        data,
    }
}

/// PCA fit plus projection for one window size, streaming windows straight
/// from the image.
pub fn image_features<T: Scalar>(
    img: &RasterImage<T>,
    w: usize,
    d: usize,
) -> Result<(PcaBasis<T>, FeatureField<T>)> {
    check_window(img, w)?;
    let src = ImageWindows { img, window: w };
    let basis = fit_pca_from(&src, w, d)?;
    let field = project_from(&basis, &src, img.width(), img.height());
    Ok((basis, field))
}

/// Pixels of `region` whose full `w x w` window lies inside the region.
/// Windows that leave the image disqualify the pixel.
pub fn interior_pixels(labels: &LabelMap, region: u32, w: usize) -> Result<Vec<usize>> {
    if w == 0 || w % 2 == 0 {
        return Err(Error::InvalidArgument(format!("window size {w} must be odd and positive")));
    }
    let mask = RegionMask::from_region(labels, region).ok_or(Error::UnknownRegion(region))?;
    Ok(mask.interior(w))
}

/// Gaussian summary of one region's interior features.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionStats<T: Scalar> {
    pub region_id: u32,
    pub pixel_count: usize,
    pub interior_count: usize,
    pub mean: DVector<T>,
    pub covariance: DMatrix<T>,
}

/// Mean and biased covariance (plus a small ridge) over the interior pixels.
pub fn region_stats<T: Scalar>(
    field: &FeatureField<T>,
    interior: &[usize],
    region_id: u32,
    pixel_count: usize,
) -> Result<RegionStats<T>> {
    if interior.is_empty() {
        return Err(Error::DegenerateRegion {
            region: region_id,
            window: field.window,
        });
    }
    let d = field.dim;
    let n = T::from_count(interior.len());
    let mut mean = DVector::<T>::zeros(d);
    for &p in interior {
        for (m, &v) in mean.iter_mut().zip(field.vector(p)) {
            *m += v;
        }
    }
    mean /= n;
    let mut cov = DMatrix::<T>::zeros(d, d);
    let mut centered = vec![T::zero(); d];
    for &p in interior {
        for (c, (&v, &m)) in centered.iter_mut().zip(field.vector(p).iter().zip(mean.iter())) {
            *c = v - m;
        }
        for i in 0..d {
            for j in 0..=i {
                cov[(i, j)] += centered[i] * centered[j];
            }
        }
    }
    let ridge = T::lit(COVARIANCE_RIDGE);
    for i in 0..d {
        for j in 0..=i {
            let v = cov[(i, j)] / n;
            cov[(i, j)] = v;
            cov[(j, i)] = v;
        }
        cov[(i, i)] += ridge;
    }
    Ok(RegionStats {
        region_id,
        pixel_count,
        interior_count: interior.len(),
        mean,
        covariance: cov,
    })
}
