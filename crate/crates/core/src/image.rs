//! Fundamental image container and the shift / finite-difference /
//! convolution primitives everything else is built on.
//!
//! Conventions fixed here and used crate-wide:
//!
//! - images are row-major, `(i, j)` = (row, column), index `i * width + j`;
//! - `shift_image(img, dx, dy)` moves content right/down for positive
//!   shifts: `out(i, j) = in(i - dy, j - dx)` with replicate boundary;
//! - the forward difference along x is `(S_x - I) x (i, j) = x(i, j+1) -
//!   x(i, j)`, where `S_x = shift_image(.., -1, 0)`, so the last column
//!   (row for y) of the gradient is zero under the replicate boundary;
//! - all boundary handling is replicate (Neumann). Circular padding would
//!   fabricate gradients across the wrap seam.
//!
//! Intensities are stored as `f64` regardless of the source bit depth;
//! integer conversion happens only at I/O.

use crate::error::{Error, Result};
use crate::par;

/// 2-D scalar field with explicit dimensions and row-major `f64` samples.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl GrayImage {
    /// Wrap raw row-major data. Rejects empty dimensions, length
    /// mismatches, and non-finite samples.
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::invalid("image dimensions must be at least 1x1"));
        }
        if data.len() != width * height {
            return Err(Error::invalid(format!(
                "data length {} does not match {}x{}",
                data.len(),
                width,
                height
            )));
        }
        if !data.iter().all(|v| v.is_finite()) {
            return Err(Error::invalid("image contains non-finite values"));
        }
        Ok(Self { width, height, data })
    }

    /// Image filled with a constant value.
    pub fn constant(width: usize, height: usize, value: f64) -> Self {
        Self { width, height, data: vec![value; width * height] }
    }

    pub fn zeros(width: usize, height: usize) -> Self {
        Self::constant(width, height, 0.0)
    }

    /// Build from a per-pixel function of `(row, col)`.
    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for i in 0..height {
            for j in 0..width {
                data.push(f(i, j));
            }
        }
        Self { width, height, data }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    /// `(height, width)` pair, the shape used by the linear operators.
    pub fn shape(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.width + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.width + j] = v;
    }

    /// Sample with replicate (clamp-to-edge) boundary, signed indices.
    #[inline]
    pub fn at_clamped(&self, i: isize, j: isize) -> f64 {
        let ci = i.clamp(0, self.height as isize - 1) as usize;
        let cj = j.clamp(0, self.width as isize - 1) as usize;
        self.data[ci * self.width + cj]
    }

    pub fn same_shape(&self, other: &GrayImage) -> bool {
        self.width == other.width && self.height == other.height
    }

    /// Elementwise map into a new image.
    pub fn map(&self, f: impl Fn(f64) -> f64 + Send + Sync) -> GrayImage {
        let mut out = GrayImage::zeros(self.width, self.height);
        let w = self.width;
        let src = &self.data;
        par::fill_rows(&mut out.data, w, |i, row| {
            for (j, o) in row.iter_mut().enumerate() {
                *o = f(src[i * w + j]);
            }
        });
        out
    }

    /// Elementwise combination of two same-shaped images.
    pub fn zip_map(&self, other: &GrayImage, f: impl Fn(f64, f64) -> f64 + Send + Sync) -> GrayImage {
        assert!(self.same_shape(other), "zip_map shape mismatch");
        let mut out = GrayImage::zeros(self.width, self.height);
        let w = self.width;
        let (a, b) = (&self.data, &other.data);
        par::fill_rows(&mut out.data, w, |i, row| {
            for (j, o) in row.iter_mut().enumerate() {
                *o = f(a[i * w + j], b[i * w + j]);
            }
        });
        out
    }

    /// Inner product. Per-row partials folded in row order, so the result
    /// is independent of threading.
    pub fn dot(&self, other: &GrayImage) -> f64 {
        assert!(self.same_shape(other), "dot shape mismatch");
        let w = self.width;
        let (a, b) = (&self.data, &other.data);
        par::sum_rows(self.height, |i| {
            let mut s = 0.0;
            for j in 0..w {
                s += a[i * w + j] * b[i * w + j];
            }
            s
        })
    }

    pub fn norm_sq(&self) -> f64 {
        self.dot(self)
    }

    /// Sum of absolute values, reduced in fixed row order.
    pub fn norm_l1(&self) -> f64 {
        let w = self.width;
        let a = &self.data;
        par::sum_rows(self.height, |i| {
            let mut s = 0.0;
            for j in 0..w {
                s += a[i * w + j].abs();
            }
            s
        })
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn sum(&self) -> f64 {
        let w = self.width;
        let a = &self.data;
        par::sum_rows(self.height, |i| {
            let mut s = 0.0;
            for j in 0..w {
                s += a[i * w + j];
            }
            s
        })
    }

    pub fn mean(&self) -> f64 {
        self.sum() / self.len() as f64
    }

    /// `self + alpha * other`.
    pub fn axpy(&self, alpha: f64, other: &GrayImage) -> GrayImage {
        self.zip_map(other, |a, b| a + alpha * b)
    }

    pub fn scaled(&self, alpha: f64) -> GrayImage {
        self.map(|v| alpha * v)
    }
}

/// Square convolution kernel with odd side `2 * radius + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel2D {
    radius: usize,
    weights: Vec<f64>,
}

impl Kernel2D {
    /// Wrap explicit nonnegative weights of length `(2r+1)^2`.
    pub fn new(radius: usize, weights: Vec<f64>) -> Result<Self> {
        let side = 2 * radius + 1;
        if weights.len() != side * side {
            return Err(Error::invalid(format!(
                "kernel weights length {} does not match radius {}",
                weights.len(),
                radius
            )));
        }
        if !weights.iter().all(|w| w.is_finite() && *w >= 0.0) {
            return Err(Error::invalid("kernel weights must be finite and nonnegative"));
        }
        Ok(Self { radius, weights })
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Weight at offset `(u, v)`, each in `[-radius, radius]`.
    #[inline]
    pub fn at(&self, u: isize, v: isize) -> f64 {
        let side = 2 * self.radius + 1;
        let r = self.radius as isize;
        self.weights[((u + r) as usize) * side + (v + r) as usize]
    }
}

/// Shift an image by whole pixels with replicate boundary:
/// `out(i, j) = in(i - dy, j - dx)`, clamped to the image extent.
///
/// Positive `dx` moves content right, positive `dy` moves it down. The
/// operation is linear in the input.
pub fn shift_image(img: &GrayImage, dx: isize, dy: isize) -> Result<GrayImage> {
    let limit = img.width().min(img.height()) as isize;
    if dx.abs() > limit || dy.abs() > limit {
        return Err(Error::invalid(format!(
            "shift ({dx}, {dy}) exceeds image extent {}x{}",
            img.width(),
            img.height()
        )));
    }
    let mut out = GrayImage::zeros(img.width(), img.height());
    let w = img.width();
    par::fill_rows(out.data_mut(), w, |i, row| {
        for (j, o) in row.iter_mut().enumerate() {
            *o = img.at_clamped(i as isize - dy, j as isize - dx);
        }
    });
    Ok(out)
}

/// Anisotropic forward differences: `gx(i, j) = x(i, j+1) - x(i, j)` and
/// `gy(i, j) = x(i+1, j) - x(i, j)`, replicate boundary, so the last
/// column of `gx` and last row of `gy` are zero.
///
/// Equals `(shift_image(x, -1, 0) - x, shift_image(x, 0, -1) - x)`.
pub fn gradient_forward(img: &GrayImage) -> (GrayImage, GrayImage) {
    let (w, h) = (img.width(), img.height());
    let mut gx = GrayImage::zeros(w, h);
    let mut gy = GrayImage::zeros(w, h);
    par::fill_rows(gx.data_mut(), w, |i, row| {
        for (j, o) in row.iter_mut().enumerate() {
            *o = img.at_clamped(i as isize, j as isize + 1) - img.at(i, j);
        }
    });
    par::fill_rows(gy.data_mut(), w, |i, row| {
        for (j, o) in row.iter_mut().enumerate() {
            *o = img.at_clamped(i as isize + 1, j as isize) - img.at(i, j);
        }
    });
    (gx, gy)
}

/// Central differences halved: `gx(i, j) = (x(i, j+1) - x(i, j-1)) / 2`,
/// replicate boundary; `gy` analogous.
pub fn gradient_central(img: &GrayImage) -> (GrayImage, GrayImage) {
    let (w, h) = (img.width(), img.height());
    let mut gx = GrayImage::zeros(w, h);
    let mut gy = GrayImage::zeros(w, h);
    par::fill_rows(gx.data_mut(), w, |i, row| {
        for (j, o) in row.iter_mut().enumerate() {
            *o = 0.5
                * (img.at_clamped(i as isize, j as isize + 1)
                    - img.at_clamped(i as isize, j as isize - 1));
        }
    });
    par::fill_rows(gy.data_mut(), w, |i, row| {
        for (j, o) in row.iter_mut().enumerate() {
            *o = 0.5
                * (img.at_clamped(i as isize + 1, j as isize)
                    - img.at_clamped(i as isize - 1, j as isize));
        }
    });
    (gx, gy)
}

/// Isotropic 2-D Gaussian kernel, radius `ceil(3 sigma)` (captures
/// > 99.7% of the mass), weights normalized to sum 1.
pub fn gaussian_kernel(sigma: f64) -> Result<Kernel2D> {
    if !(sigma > 0.0) {
        return Err(Error::invalid(format!("gaussian sigma must be positive, got {sigma}")));
    }
    gaussian_kernel_with_radius(sigma, (3.0 * sigma).ceil() as usize)
}

/// Gaussian kernel with an explicit support radius (e.g. the fixed 3x3
/// degradation blur uses radius 1 regardless of sigma).
pub fn gaussian_kernel_with_radius(sigma: f64, radius: usize) -> Result<Kernel2D> {
    if !(sigma > 0.0) {
        return Err(Error::invalid(format!("gaussian sigma must be positive, got {sigma}")));
    }
    let side = 2 * radius + 1;
    let mut weights = Vec::with_capacity(side * side);
    let inv = 1.0 / (2.0 * sigma * sigma);
    for u in -(radius as isize)..=radius as isize {
        for v in -(radius as isize)..=radius as isize {
            weights.push((-((u * u + v * v) as f64) * inv).exp());
        }
    }
    let total: f64 = weights.iter().sum();
    for w in &mut weights {
        *w /= total;
    }
    Kernel2D::new(radius, weights)
}

/// Correlate `img` with `k` under the replicate boundary. For the
/// symmetric kernels used here correlation and convolution coincide;
/// normalized kernels preserve constant images.
pub fn convolve(img: &GrayImage, k: &Kernel2D) -> GrayImage {
    let (w, h) = (img.width(), img.height());
    let mut out = GrayImage::zeros(w, h);
    let r = k.radius() as isize;
    par::fill_rows(out.data_mut(), w, |i, row| {
        for (j, o) in row.iter_mut().enumerate() {
            let mut acc = 0.0;
            for u in -r..=r {
                for v in -r..=r {
                    acc += k.at(u, v) * img.at_clamped(i as isize + u, j as isize + v);
                }
            }
            *o = acc;
        }
    });
    let _ = h;
    out
}

/// Catmull-Rom cubic interpolation weight (a = -0.5).
#[inline]
fn cubic_weight(t: f64) -> f64 {
    const A: f64 = -0.5;
    let t = t.abs();
    if t <= 1.0 {
        ((A + 2.0) * t - (A + 3.0)) * t * t + 1.0
    } else if t < 2.0 {
        ((A * t - 5.0 * A) * t + 8.0 * A) * t - 4.0 * A
    } else {
        0.0
    }
}

/// Bicubic (Catmull-Rom) upsampling by an integer factor, replicate
/// boundary. Output pixel `(i, j)` samples the input at `(i / f, j / f)`,
/// so the result interpolates the input exactly on the decimation grid.
pub fn bicubic_upsample(img: &GrayImage, factor: usize) -> Result<GrayImage> {
    if factor == 0 {
        return Err(Error::invalid("upsample factor must be at least 1"));
    }
    if factor == 1 {
        return Ok(img.clone());
    }
    let (w, h) = (img.width() * factor, img.height() * factor);
    let mut out = GrayImage::zeros(w, h);
    let inv = 1.0 / factor as f64;
    par::fill_rows(out.data_mut(), w, |i, row| {
        let sy = i as f64 * inv;
        let iy = sy.floor() as isize;
        let fy = sy - iy as f64;
        let wy: [f64; 4] = [
            cubic_weight(fy + 1.0),
            cubic_weight(fy),
            cubic_weight(fy - 1.0),
            cubic_weight(fy - 2.0),
        ];
        for (j, o) in row.iter_mut().enumerate() {
            let sx = j as f64 * inv;
            let ix = sx.floor() as isize;
            let fx = sx - ix as f64;
            let wx: [f64; 4] = [
                cubic_weight(fx + 1.0),
                cubic_weight(fx),
                cubic_weight(fx - 1.0),
                cubic_weight(fx - 2.0),
            ];
            let mut acc = 0.0;
            for (dy, wyv) in wy.iter().enumerate() {
                for (dx, wxv) in wx.iter().enumerate() {
                    acc += wyv
                        * wxv
                        * img.at_clamped(iy + dy as isize - 1, ix + dx as isize - 1);
                }
            }
            *o = acc;
        }
    });
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ramp_x(w: usize, h: usize, slope: f64) -> GrayImage {
        GrayImage::from_fn(w, h, |_, j| slope * j as f64)
    }

    #[test]
    fn shift_of_constant_is_constant() {
        let img = GrayImage::constant(5, 4, 3.25);
        for (dx, dy) in [(1, 0), (0, 1), (-2, 3), (3, -3)] {
            let out = shift_image(&img, dx, dy).unwrap();
            assert!(out.data().iter().all(|&v| v == 3.25));
        }
    }

    #[test]
    fn zero_shift_is_identity() {
        let img = ramp_x(4, 4, 1.0);
        let out = shift_image(&img, 0, 0).unwrap();
        assert_eq!(out, img);
    }

    #[test]
    fn shift_matches_index_remap_oracle() {
        // Independent oracle: direct index remapping with clamping.
        let img = GrayImage::from_fn(3, 3, |i, j| (3 * i + j) as f64);
        let out = shift_image(&img, 1, 0).unwrap();
        for i in 0..3usize {
            for j in 0..3usize {
                let src_j = (j as isize - 1).clamp(0, 2) as usize;
                assert_eq!(out.at(i, j), img.at(i, src_j), "mismatch at ({i},{j})");
            }
        }
        // Left column replicated.
        for i in 0..3 {
            assert_eq!(out.at(i, 0), img.at(i, 0));
        }
    }

    #[test]
    fn oversized_shift_is_rejected() {
        let img = GrayImage::zeros(4, 4);
        assert!(shift_image(&img, 5, 0).is_err());
        assert!(shift_image(&img, 0, -5).is_err());
    }

    #[test]
    fn gradient_forward_constant_is_zero() {
        let img = GrayImage::constant(6, 5, 7.0);
        let (gx, gy) = gradient_forward(&img);
        assert!(gx.data().iter().all(|&v| v == 0.0));
        assert!(gy.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn gradient_forward_on_ramp() {
        let img = ramp_x(5, 4, 1.0);
        let (gx, gy) = gradient_forward(&img);
        for i in 0..4 {
            for j in 0..5 {
                let expect = if j == 4 { 0.0 } else { 1.0 };
                assert_eq!(gx.at(i, j), expect);
                assert_eq!(gy.at(i, j), 0.0);
            }
        }
    }

    #[test]
    fn gradient_forward_equals_shift_formulation() {
        let img = GrayImage::from_fn(7, 5, |i, j| ((i * 31 + j * 17) % 13) as f64);
        let (gx, gy) = gradient_forward(&img);
        let sx = shift_image(&img, -1, 0).unwrap();
        let sy = shift_image(&img, 0, -1).unwrap();
        for idx in 0..img.len() {
            assert_eq!(gx.data()[idx], sx.data()[idx] - img.data()[idx]);
            assert_eq!(gy.data()[idx], sy.data()[idx] - img.data()[idx]);
        }
    }

    /// Dense oracle: materialize (S_x - I) as an N x N matrix from the
    /// index-map definition and compare the matrix-vector product.
    #[test]
    fn gradient_forward_matches_dense_matrix() {
        let (w, h) = (5, 5);
        let n = w * h;
        let img = GrayImage::from_fn(w, h, |i, j| ((i * 131 + j * 29 + 7) % 23) as f64 - 11.0);
        let mut sx = vec![0.0; n * n];
        for i in 0..h {
            for j in 0..w {
                let row = i * w + j;
                let src = i * w + (j + 1).min(w - 1);
                sx[row * n + src] += 1.0;
                sx[row * n + row] -= 1.0;
            }
        }
        let (gx, _) = gradient_forward(&img);
        for r in 0..n {
            let mut acc = 0.0;
            for c in 0..n {
                acc += sx[r * n + c] * img.data()[c];
            }
            assert!((acc - gx.data()[r]).abs() < 1e-12);
        }
    }

    #[test]
    fn gradient_central_basics() {
        let img = GrayImage::constant(5, 5, 2.0);
        let (gx, gy) = gradient_central(&img);
        assert!(gx.data().iter().all(|&v| v == 0.0));
        assert!(gy.data().iter().all(|&v| v == 0.0));

        let ramp = ramp_x(6, 4, 2.0);
        let (gx, _) = gradient_central(&ramp);
        for i in 0..4 {
            for j in 1..5 {
                assert_eq!(gx.at(i, j), 2.0);
            }
        }
    }

    #[test]
    fn gaussian_kernel_normalizes_and_peaks() {
        let k = gaussian_kernel(0.1).unwrap();
        assert!(k.at(0, 0) > 0.99, "delta limit: center weight {}", k.at(0, 0));

        for sigma in [0.4, 1.0, 2.3] {
            let k = gaussian_kernel(sigma).unwrap();
            let sum: f64 = k.weights().iter().sum();
            assert!((sum - 1.0).abs() < 1e-12, "sigma {sigma}: sum {sum}");
            assert_eq!(k.radius(), (3.0 * sigma).ceil() as usize);
        }
    }

    #[test]
    fn gaussian_kernel_ratio_matches_formula_oracle() {
        let k = gaussian_kernel(1.0).unwrap();
        // center / edge-midpoint = exp(0) / exp(-1/2), independent of the
        // normalization constant.
        let ratio = k.at(0, 0) / k.at(0, 1);
        let expect = (0.0f64).exp() / (-0.5f64).exp();
        assert!((ratio - expect).abs() < 1e-12);
    }

    #[test]
    fn gaussian_kernel_rejects_nonpositive_sigma() {
        assert!(gaussian_kernel(0.0).is_err());
        assert!(gaussian_kernel(-1.0).is_err());
    }

    #[test]
    fn gaussian_kernel_is_rotation_symmetric() {
        let k = gaussian_kernel(1.7).unwrap();
        let r = k.radius() as isize;
        for u in -r..=r {
            for v in -r..=r {
                // 90-degree rotation (u, v) -> (v, -u).
                assert_eq!(k.at(u, v), k.at(v, -u));
            }
        }
    }

    #[test]
    fn convolve_preserves_constants() {
        let img = GrayImage::constant(9, 9, 5.5);
        let k = gaussian_kernel(1.0).unwrap();
        let out = convolve(&img, &k);
        for &v in out.data() {
            assert!((v - 5.5).abs() < 1e-12);
        }
    }

    #[test]
    fn convolve_imprints_kernel_on_impulse() {
        let mut img = GrayImage::zeros(7, 7);
        img.set(3, 3, 1.0);
        let k = gaussian_kernel_with_radius(0.8, 1).unwrap();
        let out = convolve(&img, &k);
        for u in -1..=1isize {
            for v in -1..=1isize {
                // Correlation of an impulse reflects the kernel; symmetric
                // kernels imprint it unchanged.
                let got = out.at((3 + u) as usize, (3 + v) as usize);
                assert!((got - k.at(-u, -v)).abs() < 1e-15);
            }
        }
    }

    /// Naive quadruple-loop oracle with explicit clamping.
    #[test]
    fn convolve_matches_naive_oracle() {
        let img = GrayImage::from_fn(7, 7, |i, j| ((i * 37 + j * 101 + 3) % 17) as f64 - 8.0);
        let k = gaussian_kernel(0.9).unwrap();
        let out = convolve(&img, &k);
        let r = k.radius() as isize;
        for i in 0..7isize {
            for j in 0..7isize {
                let mut acc = 0.0;
                for u in -r..=r {
                    for v in -r..=r {
                        let ci = (i + u).clamp(0, 6) as usize;
                        let cj = (j + v).clamp(0, 6) as usize;
                        acc += k.at(u, v) * img.at(ci, cj);
                    }
                }
                assert!((acc - out.at(i as usize, j as usize)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn bicubic_reproduces_linear_fields_and_grid_samples() {
        let img = GrayImage::from_fn(8, 8, |i, j| 3.0 * i as f64 + 2.0 * j as f64 + 1.0);
        let up = bicubic_upsample(&img, 2).unwrap();
        // Catmull-Rom reproduces affine functions exactly away from the
        // replicate boundary.
        for i in 2..13 {
            for j in 2..13 {
                let expect = 3.0 * (i as f64 / 2.0) + 2.0 * (j as f64 / 2.0) + 1.0;
                assert!((up.at(i, j) - expect).abs() < 1e-12, "at ({i},{j})");
            }
        }
        // Interpolates input samples exactly on the decimation grid.
        let noisy = GrayImage::from_fn(6, 6, |i, j| ((i * 7 + j * 13) % 11) as f64);
        let up = bicubic_upsample(&noisy, 2).unwrap();
        for i in 0..6 {
            for j in 0..6 {
                assert!((up.at(2 * i, 2 * j) - noisy.at(i, j)).abs() < 1e-12);
            }
        }
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        fn arb_image(w: usize, h: usize) -> impl Strategy<Value = GrayImage> {
            prop::collection::vec(-100.0f64..100.0, w * h)
                .prop_map(move |data| GrayImage::new(w, h, data).unwrap())
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(64))]

            #[test]
            fn linear_ops_are_linear(
                u in arb_image(6, 5),
                v in arb_image(6, 5),
                a in -3.0f64..3.0,
                b in -3.0f64..3.0,
            ) {
                let combo = u.scaled(a).axpy(b, &v);
                let k = gaussian_kernel(0.8).unwrap();

                let lhs = convolve(&combo, &k);
                let rhs = convolve(&u, &k).scaled(a).axpy(b, &convolve(&v, &k));
                for idx in 0..lhs.len() {
                    prop_assert!((lhs.data()[idx] - rhs.data()[idx]).abs() < 1e-10);
                }

                let lhs = shift_image(&combo, 2, -1).unwrap();
                let rhs = shift_image(&u, 2, -1).unwrap().scaled(a)
                    .axpy(b, &shift_image(&v, 2, -1).unwrap());
                for idx in 0..lhs.len() {
                    prop_assert!((lhs.data()[idx] - rhs.data()[idx]).abs() < 1e-10);
                }

                let (lgx, lgy) = gradient_forward(&combo);
                let (ugx, ugy) = gradient_forward(&u);
                let (vgx, vgy) = gradient_forward(&v);
                for idx in 0..lgx.len() {
                    prop_assert!((lgx.data()[idx] - (a * ugx.data()[idx] + b * vgx.data()[idx])).abs() < 1e-10);
                    prop_assert!((lgy.data()[idx] - (a * ugy.data()[idx] + b * vgy.data()[idx])).abs() < 1e-10);
                }

                let (lcx, _) = gradient_central(&combo);
                let (ucx, _) = gradient_central(&u);
                let (vcx, _) = gradient_central(&v);
                for idx in 0..lcx.len() {
                    prop_assert!((lcx.data()[idx] - (a * ucx.data()[idx] + b * vcx.data()[idx])).abs() < 1e-10);
                }
            }
        }
    }
}
