//! Weighting maps for the weighted total-variation regularizers.
//!
//! The BSWTV map assigns each pixel `phi_i = exp(-|l1 - l2| / eta^2)`
//! where `l1, l2` are the eigenvalues of the 2x2 covariance of the
//! bilaterally shrink-weighted forward-difference gradients collected
//! over the `r x r` patch around the pixel. Flat regions have isotropic
//! noise gradients (small eigen gap, `phi` near 1, smoothing on); edges
//! have anisotropic gradients (large gap, `phi` near 0, smoothing off).
//!
//! The shrink field `xi` decays multiplicatively across solver
//! iterations, faster where the previous map was white (flat regions)
//! and barely at all on structures, which progressively squeezes the
//! gradient spread and thins the edge mask. Each refreshed map is
//! Gaussian-smoothed with an iteratively narrowed kernel and blended
//! with its predecessor in a momentum fashion.
//!
//! The NLTV baseline weights live here too: patch-similarity maps for
//! every nonzero shift in an `R x R` search window.

use crate::error::{Error, Result};
use crate::image::{convolve, gaussian_kernel, gradient_forward, GrayImage};
use crate::par;

/// Parameters of the BSWTV weighting-map recursion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BswtvParams {
    /// Smoothing parameter `eta` controlling the dynamic range of the map
    /// (intensity units; larger values whiten the map).
    pub eta: f64,
    /// Decay scalar in `[0, 1]`; 1 disables the shrink/width/momentum
    /// decays entirely.
    pub gamma: f64,
    /// Initial momentum coefficient in `[0, 1]`.
    pub beta0: f64,
    /// Odd patch size `r` (the covariance pools `r^2` gradients).
    pub patch: usize,
    /// Initial Gaussian smoothing width for the map.
    pub sigma_phi0: f64,
    /// Floor for the smoothing width.
    pub sigma_min: f64,
    /// Amplitude of the whitening control `f(m) = a (m - b)`.
    pub a: f64,
    /// Shift of `f`, in `[0, 1]`: patches whose mean map value exceeds
    /// `b` shrink toward `gamma`, patches below keep their coefficient.
    pub b: f64,
}

impl Default for BswtvParams {
    fn default() -> Self {
        Self {
            eta: 5.0,
            gamma: 0.8,
            beta0: 0.5,
            patch: 3,
            sigma_phi0: 3.0,
            sigma_min: 0.5,
            a: 20.0,
            b: 0.5,
        }
    }
}

impl BswtvParams {
    pub fn validate(&self) -> Result<()> {
        if self.patch % 2 == 0 || self.patch < 3 {
            return Err(Error::invalid(format!("patch size must be odd and >= 3, got {}", self.patch)));
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(Error::invalid(format!("gamma must lie in [0, 1], got {}", self.gamma)));
        }
        if !(0.0..=1.0).contains(&self.beta0) {
            return Err(Error::invalid(format!("beta0 must lie in [0, 1], got {}", self.beta0)));
        }
        if !(self.eta > 0.0) {
            return Err(Error::invalid(format!("eta must be positive, got {}", self.eta)));
        }
        if !(self.sigma_min > 0.0) || self.sigma_phi0 < self.sigma_min {
            return Err(Error::invalid(format!(
                "need sigma_phi0 >= sigma_min > 0, got {} and {}",
                self.sigma_phi0, self.sigma_min
            )));
        }
        if !(self.a > 0.0) {
            return Err(Error::invalid(format!("amplitude a must be positive, got {}", self.a)));
        }
        if !(0.0..=1.0).contains(&self.b) {
            return Err(Error::invalid(format!("shift b must lie in [0, 1], got {}", self.b)));
        }
        Ok(())
    }
}

/// The evolving weighting-map state: the map `phi`, the shrink field
/// `xi`, the current momentum coefficient and smoothing width, and the
/// iteration counter.
#[derive(Debug, Clone)]
pub struct WeightState {
    pub phi: GrayImage,
    pub xi: GrayImage,
    pub beta: f64,
    pub sigma_phi: f64,
    pub iteration: usize,
}

impl WeightState {
    /// All-pass initialization: `phi = xi = 1`, so the first iteration is
    /// plain weighted TV with bilateral distance weights only.
    pub fn init(shape: (usize, usize), params: &BswtvParams) -> Self {
        let (h, w) = shape;
        Self {
            phi: GrayImage::constant(w, h, 1.0),
            xi: GrayImage::constant(w, h, 1.0),
            beta: params.beta0,
            sigma_phi: params.sigma_phi0,
            iteration: 0,
        }
    }
}

/// Per-pixel eigenvalue gap `|l1 - l2|` of the 2x2 covariance
/// `C_i = G_i G_i' / q` of the shrink-weighted forward-difference
/// gradients over the `r x r` patch, with weights `xi_j^{d(i,j)}` and
/// `d(i,j) = |dx| + |dy|`. Patch lookups off the image replicate both
/// gradients and `xi`.
pub fn eigen_gap_map(x: &GrayImage, xi: &GrayImage, patch: usize) -> Result<GrayImage> {
    if patch % 2 == 0 {
        return Err(Error::invalid(format!("patch size must be odd, got {patch}")));
    }
    if !x.same_shape(xi) {
        return Err(Error::invalid("image and shrink field shapes differ"));
    }
    let (gx, gy) = gradient_forward(x);
    let (h, w) = x.shape();
    let half = (patch / 2) as isize;
    let q = (patch * patch) as f64;
    let mut out = GrayImage::zeros(w, h);
    par::fill_rows(out.data_mut(), w, |i, row| {
        for (j, o) in row.iter_mut().enumerate() {
            let mut c11 = 0.0;
            let mut c12 = 0.0;
            let mut c22 = 0.0;
            for du in -half..=half {
                for dv in -half..=half {
                    let ni = (i as isize + du).clamp(0, h as isize - 1) as usize;
                    let nj = (j as isize + dv).clamp(0, w as isize - 1) as usize;
                    let d = (du.abs() + dv.abs()) as i32;
                    let omega = xi.at(ni, nj).powi(d);
                    let wgx = omega * gx.at(ni, nj);
                    let wgy = omega * gy.at(ni, nj);
                    c11 += wgx * wgx;
                    c12 += wgx * wgy;
                    c22 += wgy * wgy;
                }
            }
            c11 /= q;
            c12 /= q;
            c22 /= q;
            let diff = c11 - c22;
            *o = (diff * diff + 4.0 * c12 * c12).sqrt();
        }
    });
    Ok(out)
}

/// `phi = exp(-gap / eta^2)`, elementwise; range `(0, 1]`.
pub fn phi_from_gap(gap: &GrayImage, eta: f64) -> Result<GrayImage> {
    if !(eta > 0.0) {
        return Err(Error::invalid(format!("eta must be positive, got {eta}")));
    }
    let inv = 1.0 / (eta * eta);
    Ok(gap.map(|g| (-g * inv).exp()))
}

/// One multiplicative shrink step:
/// `xi_j <- xi_j * (gamma + (1 - gamma) / (1 + exp(a (mean phi(N_j) - b))))`.
///
/// The factor lies in `(gamma, 1)`: whitened neighborhoods (mean near 1)
/// shrink toward `gamma`, structure neighborhoods (mean near 0) keep
/// their coefficient.
pub fn update_xi(phi_prev: &GrayImage, xi_prev: &GrayImage, params: &BswtvParams) -> GrayImage {
    let (h, w) = phi_prev.shape();
    let half = (params.patch / 2) as isize;
    let q = (params.patch * params.patch) as f64;
    let (gamma, a, b) = (params.gamma, params.a, params.b);
    let mut out = GrayImage::zeros(w, h);
    par::fill_rows(out.data_mut(), w, |i, row| {
        for (j, o) in row.iter_mut().enumerate() {
            let mut mean = 0.0;
            for du in -half..=half {
                for dv in -half..=half {
                    mean += phi_prev.at_clamped(i as isize + du, j as isize + dv);
                }
            }
            mean /= q;
            let f = a * (mean - b);
            // exp overflow saturates the logistic gracefully.
            let factor = gamma + (1.0 - gamma) / (1.0 + f.exp());
            *o = xi_prev.at(i, j) * factor;
        }
    });
    out
}

/// One full weighting-map refresh, the five sub-updates in order:
/// shrink step, raw map from the eigen gap, smoothing-width decay
/// `sigma <- max(sigma_min, gamma sigma)`, Gaussian smoothing, momentum
/// decay `beta <- gamma beta` and blend
/// `phi <- beta phi_prev + (1 - beta) phi`.
pub fn update_weighting_map(
    state: &WeightState,
    x: &GrayImage,
    params: &BswtvParams,
) -> Result<WeightState> {
    params.validate()?;
    let xi = update_xi(&state.phi, &state.xi, params);
    let gap = eigen_gap_map(x, &xi, params.patch)?;
    let raw = phi_from_gap(&gap, params.eta)?;
    let sigma_phi = params.sigma_min.max(params.gamma * state.sigma_phi);
    let smoothed = convolve(&raw, &gaussian_kernel(sigma_phi)?);
    let beta = params.gamma * state.beta;
    let phi = state.phi.scaled(beta).axpy(1.0 - beta, &smoothed);
    Ok(WeightState { phi, xi, beta, sigma_phi, iteration: state.iteration + 1 })
}

/// NLTV baseline weights: for every nonzero shift `(dx, dy)` in the
/// `R x R` search window, `exp(-||N(i,j) - N(i+dy, j+dx)||^2 / eta^2)`
/// with unweighted squared patch distance over `r x r` patches. Returns
/// `R^2 - 1` maps keyed by their shift.
pub fn nltv_weights(
    x: &GrayImage,
    window: usize,
    patch: usize,
    eta: f64,
) -> Result<Vec<((isize, isize), GrayImage)>> {
    if window % 2 == 0 || patch % 2 == 0 {
        return Err(Error::invalid(format!(
            "window and patch sizes must be odd, got {window} and {patch}"
        )));
    }
    if !(eta > 0.0) {
        return Err(Error::invalid(format!("eta must be positive, got {eta}")));
    }
    let wh = (window / 2) as isize;
    let ph = (patch / 2) as isize;
    let (h, w) = x.shape();
    let inv = 1.0 / (eta * eta);
    let mut maps = Vec::new();
    for dy in -wh..=wh {
        for dx in -wh..=wh {
            if dx == 0 && dy == 0 {
                continue;
            }
            let mut map = GrayImage::zeros(w, h);
            par::fill_rows(map.data_mut(), w, |i, row| {
                for (j, o) in row.iter_mut().enumerate() {
                    let mut dist = 0.0;
                    for du in -ph..=ph {
                        for dv in -ph..=ph {
                            let a = x.at_clamped(i as isize + du, j as isize + dv);
                            let b = x.at_clamped(i as isize + dy + du, j as isize + dx + dv);
                            dist += (a - b) * (a - b);
                        }
                    }
                    *o = (-dist * inv).exp();
                }
            });
            maps.push(((dx, dy), map));
        }
    }
    Ok(maps)
}
