//! Image ingestion, color-space conversion and the color-space
//! normalization factor used when comparing compressibility across spaces.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::netpbm;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ColorSpace {
    Rgb,
    Lab,
    Yuv,
    Xyz,
    Hsv,
}

impl ColorSpace {
    pub const ALL: [ColorSpace; 5] = [
        ColorSpace::Lab,
        ColorSpace::Yuv,
        ColorSpace::Rgb,
        ColorSpace::Xyz,
        ColorSpace::Hsv,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ColorSpace::Rgb => "RGB",
            ColorSpace::Lab => "Lab",
            ColorSpace::Yuv => "YUV",
            ColorSpace::Xyz => "XYZ",
            ColorSpace::Hsv => "HSV",
        }
    }
}

impl fmt::Display for ColorSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ColorSpace {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "rgb" => Ok(ColorSpace::Rgb),
            "lab" => Ok(ColorSpace::Lab),
            "yuv" => Ok(ColorSpace::Yuv),
            "xyz" => Ok(ColorSpace::Xyz),
            "hsv" => Ok(ColorSpace::Hsv),
            _ => Err(Error::Unsupported(format!("color space {s:?}"))),
        }
    }
}

/// A three-channel raster, row-major with interleaved channels.
#[derive(Debug, Clone, PartialEq)]
pub struct RasterImage<T> {
    width: usize,
    height: usize,
    colorspace: ColorSpace,
    data: Vec<T>,
}

impl<T: Scalar> RasterImage<T> {
    pub fn new(width: usize, height: usize, colorspace: ColorSpace, data: Vec<T>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidArgument("image dimensions must be positive".into()));
        }
        if data.len() != width * height * 3 {
            return Err(Error::DimensionMismatch {
                expected: format!("{} samples", width * height * 3),
                actual: format!("{} samples", data.len()),
            });
        }
        Ok(Self {
            width,
            height,
            colorspace,
            data,
        })
    }

    /// Builds an image by evaluating `f(row, col)` at every pixel.
    pub fn from_fn(
        width: usize,
        height: usize,
        colorspace: ColorSpace,
        mut f: impl FnMut(usize, usize) -> [T; 3],
    ) -> Result<Self> {
        let mut data = Vec::with_capacity(width * height * 3);
        for r in 0..height {
            for c in 0..width {
                data.extend_from_slice(&f(r, c));
            }
        }
        Self::new(width, height, colorspace, data)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn colorspace(&self) -> ColorSpace {
        self.colorspace
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn pixel(&self, row: usize, col: usize) -> [T; 3] {
        let i = (row * self.width + col) * 3;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    pub fn pixels(&self) -> impl Iterator<Item = [T; 3]> + '_ {
        self.data.chunks_exact(3).map(|c| [c[0], c[1], c[2]])
    }

    fn map_pixels(&self, target: ColorSpace, f: impl Fn([T; 3]) -> [T; 3]) -> Self {
        let data = self.pixels().flat_map(f).collect();
        Self {
            width: self.width,
            height: self.height,
            colorspace: target,
            data,
        }
    }
}

/// Loads an 8-bit RGB image from a binary PPM (P6) or PNG file, scaling
/// channels to `[0, 1]`.
pub fn load_image<T: Scalar>(path: &Path) -> Result<RasterImage<T>> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.starts_with(b"P") {
        let pnm = netpbm::decode(&bytes)?;
        if pnm.channels != 3 {
            return Err(Error::Unsupported("expected a 3-channel image".into()));
        }
        if pnm.maxval != 255 {
            return Err(Error::Unsupported(format!(
                "bit depth with maxval {} (only 8-bit is supported)",
                pnm.maxval
            )));
        }
        let scale = T::lit(255.0);
        let data = pnm.samples.iter().map(|&s| T::lit(s as f64) / scale).collect();
        return RasterImage::new(pnm.width, pnm.height, ColorSpace::Rgb, data);
    }
    let decoded = image::load_from_memory_with_format(&bytes, image::ImageFormat::Png)
        .map_err(|e| Error::Format(e.to_string()))?;
    match decoded {
        image::DynamicImage::ImageRgb8(rgb) => {
            let (w, h) = rgb.dimensions();
            let scale = T::lit(255.0);
            let data = rgb.into_raw().into_iter().map(|s| T::lit(s as f64) / scale).collect();
            RasterImage::new(w as usize, h as usize, ColorSpace::Rgb, data)
        }
        other => {
            let color = other.color();
            if color.channel_count() != 3 {
                Err(Error::Unsupported(format!(
                    "{}-channel image",
                    color.channel_count()
                )))
            } else {
                Err(Error::Unsupported(format!(
                    "{} bits per channel",
                    color.bits_per_pixel() / 3
                )))
            }
        }
    }
}

// sRGB primaries. The white point is the row sum of the matrix so that
// RGB white lands exactly on the neutral axis.
const RGB_TO_XYZ: [[f64; 3]; 3] = [
    [0.412453, 0.357580, 0.180423],
    [0.212671, 0.715160, 0.072169],
    [0.019334, 0.119193, 0.950227],
];
const XYZ_TO_RGB: [[f64; 3]; 3] = [
    [3.240481343200526, -1.5371515162713185, -0.4985363261688878],
    [-0.9692549499965682, 1.8759900014898907, 0.04155592655829284],
    [0.05564663913517716, -0.20404133836651123, 1.0573110696453443],
];
const WHITE_D65: [f64; 3] = [0.950456, 1.0, 1.088754];

const YUV_U: f64 = 0.492111;
const YUV_V: f64 = 0.877283;

fn mat3<T: Scalar>(m: &[[f64; 3]; 3], v: [T; 3]) -> [T; 3] {
    let row = |r: &[f64; 3]| T::lit(r[0]) * v[0] + T::lit(r[1]) * v[1] + T::lit(r[2]) * v[2];
    [row(&m[0]), row(&m[1]), row(&m[2])]
}

fn srgb_to_linear<T: Scalar>(c: T) -> T {
    if c <= T::lit(0.04045) {
        c / T::lit(12.92)
    } else {
        ((c + T::lit(0.055)) / T::lit(1.055)).powf(T::lit(2.4))
    }
}

fn linear_to_srgb<T: Scalar>(c: T) -> T {
    if c <= T::lit(0.0031308) {
        c * T::lit(12.92)
    } else {
        T::lit(1.055) * c.powf(T::lit(1.0 / 2.4)) - T::lit(0.055)
    }
}

fn rgb_to_xyz<T: Scalar>(p: [T; 3]) -> [T; 3] {
    mat3(&RGB_TO_XYZ, p.map(srgb_to_linear))
}

fn xyz_to_rgb<T: Scalar>(p: [T; 3]) -> [T; 3] {
    mat3(&XYZ_TO_RGB, p).map(linear_to_srgb)
}

fn lab_f<T: Scalar>(t: T) -> T {
    let d = T::lit(6.0 / 29.0);
    if t > d * d * d {
        t.cbrt()
    } else {
        t / (T::lit(3.0) * d * d) + T::lit(4.0 / 29.0)
    }
}

fn lab_f_inv<T: Scalar>(f: T) -> T {
    let d = T::lit(6.0 / 29.0);
    if f > d {
        f * f * f
    } else {
        T::lit(3.0) * d * d * (f - T::lit(4.0 / 29.0))
    }
}

fn xyz_to_lab<T: Scalar>(p: [T; 3]) -> [T; 3] {
    let fx = lab_f(p[0] / T::lit(WHITE_D65[0]));
    let fy = lab_f(p[1] / T::lit(WHITE_D65[1]));
    let fz = lab_f(p[2] / T::lit(WHITE_D65[2]));
    [
        T::lit(116.0) * fy - T::lit(16.0),
        T::lit(500.0) * (fx - fy),
        T::lit(200.0) * (fy - fz),
    ]
}

fn lab_to_xyz<T: Scalar>(p: [T; 3]) -> [T; 3] {
    let fy = (p[0] + T::lit(16.0)) / T::lit(116.0);
    let fx = fy + p[1] / T::lit(500.0);
    let fz = fy - p[2] / T::lit(200.0);
    [
        lab_f_inv(fx) * T::lit(WHITE_D65[0]),
        lab_f_inv(fy) * T::lit(WHITE_D65[1]),
        lab_f_inv(fz) * T::lit(WHITE_D65[2]),
    ]
}

fn rgb_to_yuv<T: Scalar>([r, g, b]: [T; 3]) -> [T; 3] {
    let y = T::lit(0.299) * r + T::lit(0.587) * g + T::lit(0.114) * b;
    [y, T::lit(YUV_U) * (b - y), T::lit(YUV_V) * (r - y)]
}

fn yuv_to_rgb<T: Scalar>([y, u, v]: [T; 3]) -> [T; 3] {
    let b = y + u / T::lit(YUV_U);
    let r = y + v / T::lit(YUV_V);
    let g = (y - T::lit(0.299) * r - T::lit(0.114) * b) / T::lit(0.587);
    [r, g, b]
}

/// Hue in degrees `[0, 360)`, saturation and value in `[0, 1]`.
fn rgb_to_hsv<T: Scalar>([r, g, b]: [T; 3]) -> [T; 3] {
    let max = r.max(g).max(b);
    let min = r.min(g).min(b);
    let delta = max - min;
    let sixty = T::lit(60.0);
    let h = if delta <= T::zero() {
        T::zero()
    } else if max == r {
        let h = sixty * ((g - b) / delta);
        if h < T::zero() {
            h + T::lit(360.0)
        } else {
            h
        }
    } else if max == g {
        sixty * ((b - r) / delta + T::lit(2.0))
    } else {
        sixty * ((r - g) / delta + T::lit(4.0))
    };
    let s = if max > T::zero() { delta / max } else { T::zero() };
    [h, s, max]
}

fn hsv_to_rgb<T: Scalar>([h, s, v]: [T; 3]) -> [T; 3] {
    let c = v * s;
    let hp = h / T::lit(60.0);
    let sector = hp.floor();
    let x = c * (T::one() - ((hp - T::lit(2.0) * (hp / T::lit(2.0)).floor()) - T::one()).abs());
    let m = v - c;
    let z = T::zero();
    let (r, g, b) = match sector.as_f64() as i64 {
        0 => (c, x, z),
        1 => (x, c, z),
        2 => (z, c, x),
        3 => (z, x, c),
        4 => (x, z, c),
        _ => (c, z, x),
    };
    [r + m, g + m, b + m]
}

/// Converts an RGB image into `target`.
pub fn convert_color<T: Scalar>(img: &RasterImage<T>, target: ColorSpace) -> Result<RasterImage<T>> {
    if img.colorspace != ColorSpace::Rgb {
        return Err(Error::Unsupported(format!(
            "conversion from {} (only RGB sources are supported)",
            img.colorspace
        )));
    }
    Ok(match target {
        ColorSpace::Rgb => img.clone(),
        ColorSpace::Lab => img.map_pixels(target, |p| xyz_to_lab(rgb_to_xyz(p))),
        ColorSpace::Xyz => img.map_pixels(target, rgb_to_xyz),
        ColorSpace::Yuv => img.map_pixels(target, rgb_to_yuv),
        ColorSpace::Hsv => img.map_pixels(target, rgb_to_hsv),
    })
}

/// Inverse of [`convert_color`]: brings any supported space back to RGB.
pub fn to_rgb<T: Scalar>(img: &RasterImage<T>) -> RasterImage<T> {
    let target = ColorSpace::Rgb;
    match img.colorspace {
        ColorSpace::Rgb => img.clone(),
        ColorSpace::Lab => img.map_pixels(target, |p| xyz_to_rgb(lab_to_xyz(p))),
        ColorSpace::Xyz => img.map_pixels(target, xyz_to_rgb),
        ColorSpace::Yuv => img.map_pixels(target, yuv_to_rgb),
        ColorSpace::Hsv => img.map_pixels(target, hsv_to_rgb),
    }
}

/// Normalization factor `1 / sqrt(mean of max eigenvalues)` that puts
/// features from different color spaces on a comparable scale.
pub fn color_scale_factor<T: Scalar>(max_eigenvalues: &[T]) -> Result<T> {
    if max_eigenvalues.is_empty() {
        return Err(Error::Empty("eigenvalue list"));
    }
    if let Some(bad) = max_eigenvalues.iter().find(|&&v| !(v > T::zero())) {
        return Err(Error::InvalidArgument(format!(
            "eigenvalue {} is not positive",
            bad.as_f64()
        )));
    }
    let mean = max_eigenvalues.iter().fold(T::zero(), |acc, &v| acc + v)
        / T::from_count(max_eigenvalues.len());
    Ok(T::one() / mean.sqrt())
}
