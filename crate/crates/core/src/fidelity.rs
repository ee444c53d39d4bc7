//! Mixed Poisson-Gaussian data term: the Gaussian-approximated negative
//! log-likelihood, its intensity-dependent diagonal weight matrix, and the
//! analytic gradient used by the SCG data-block updates.
//!
//! With `u = A z`, per-pixel variance `d_j = alpha u_j + sigma_j^2` and
//! residual `r_j = y_j - u_j - mu_j`, the per-frame term is
//!
//! ```text
//! g(z) = 1/2 * sum_j ( r_j^2 / d_j + ln d_j )
//! ```
//!
//! (the additive constant of the Gaussian density is dropped throughout,
//! so objective traces are comparable across runs but are not absolute
//! likelihoods). Differentiating through both `r` and `d` gives
//!
//! ```text
//! dg/du_j = -r_j / d_j - alpha r_j^2 / (2 d_j^2) + alpha / (2 d_j)
//! ```
//!
//! and `grad_z = A' (dg/du)`.
//!
//! Domain guard: `d` is clamped below at [`DOMAIN_FLOOR`] before any
//! reciprocal or logarithm. When `alpha > 0` (so `d` depends on `z`) an
//! iterate that would clamp more than 1% of the pixels raises
//! [`Error::NumericalDomain`] instead, because silently flattening that
//! much of the likelihood corrupts the SCG line search. Where a clamp is
//! active the `d`-derivative terms vanish, keeping the gradient exactly
//! consistent with the evaluated (clamped) objective. With `alpha = 0`
//! the weights are constants and clamping is harmless, so no error is
//! raised; this covers the noiseless `sigma = 0` limit.

use crate::degrade::FrameModel;
use crate::error::{Error, Result};
use crate::image::GrayImage;
use crate::par;

/// Lower clamp for likelihood denominators, mirroring the 1e-6 floor used
/// for estimated noise parameters.
pub const DOMAIN_FLOOR: f64 = 1e-6;

/// Value and gradient of a data term at one point.
#[derive(Debug, Clone)]
pub struct FidelityEval {
    pub value: f64,
    /// Gradient with respect to the (latent-shaped) block variable.
    pub gradient: GrayImage,
}

#[inline]
fn sigma_sq(frame: &FrameModel, idx: usize) -> f64 {
    match &frame.sigma_map {
        Some(map) => {
            let s = map.data()[idx];
            s * s
        }
        None => frame.noise.sigma * frame.noise.sigma,
    }
}

/// Check the clamp budget for a signal-dependent frame. Returns the
/// clamped-pixel count.
fn check_clamp_budget(frame: &FrameModel, u: &GrayImage) -> Result<usize> {
    let alpha = frame.noise.alpha;
    let w = u.width();
    let clamped = par::sum_rows(u.height(), |i| {
        let mut c = 0.0;
        for j in 0..w {
            let idx = i * w + j;
            if alpha * u.data()[idx] + sigma_sq(frame, idx) < DOMAIN_FLOOR {
                c += 1.0;
            }
        }
        c
    }) as usize;
    if alpha > 0.0 && clamped * 100 > u.len() {
        return Err(Error::domain(format!(
            "{clamped} of {} pixels fall below the likelihood floor (alpha = {alpha})",
            u.len()
        )));
    }
    Ok(clamped)
}

/// Diagonal weights `w_j = 1 / (alpha [A x]_j + sigma_j^2)`, evaluated at
/// `x` and shaped like the frame's observation.
pub fn weight_diag(frame: &FrameModel, x: &GrayImage) -> Result<GrayImage> {
    let u = frame.op.apply(x)?;
    check_clamp_budget(frame, &u)?;
    let alpha = frame.noise.alpha;
    let w = u.width();
    let mut out = GrayImage::zeros(u.width(), u.height());
    par::fill_rows(out.data_mut(), w, |i, row| {
        for (j, o) in row.iter_mut().enumerate() {
            let idx = i * w + j;
            let d = (alpha * u.data()[idx] + sigma_sq(frame, idx)).max(DOMAIN_FLOOR);
            *o = 1.0 / d;
        }
    });
    Ok(out)
}

/// Per-frame negative log-likelihood (constant dropped) and its gradient,
/// evaluated at the block variable `z`.
pub fn mpg_value_grad(frame: &FrameModel, z: &GrayImage) -> Result<FidelityEval> {
    let u = frame.op.apply(z)?;
    check_clamp_budget(frame, &u)?;
    let alpha = frame.noise.alpha;
    let mu = frame.noise.mu;
    let y = &frame.observation;
    let w = u.width();

    let value = 0.5
        * par::sum_rows(u.height(), |i| {
            let mut s = 0.0;
            for j in 0..w {
                let idx = i * w + j;
                let d = (alpha * u.data()[idx] + sigma_sq(frame, idx)).max(DOMAIN_FLOOR);
                let r = y.data()[idx] - u.data()[idx] - mu;
                s += r * r / d + d.ln();
            }
            s
        });

    let mut du = GrayImage::zeros(u.width(), u.height());
    par::fill_rows(du.data_mut(), w, |i, row| {
        for (j, o) in row.iter_mut().enumerate() {
            let idx = i * w + j;
            let d_raw = alpha * u.data()[idx] + sigma_sq(frame, idx);
            let d = d_raw.max(DOMAIN_FLOOR);
            let r = y.data()[idx] - u.data()[idx] - mu;
            let mut g = -r / d;
            if d_raw >= DOMAIN_FLOOR {
                g += -alpha * r * r / (2.0 * d * d) + alpha / (2.0 * d);
            }
            *o = g;
        }
    });
    let gradient = frame.op.adjoint(&du)?;
    Ok(FidelityEval { value, gradient })
}

/// Value-only variant of [`mpg_value_grad`].
pub fn mpg_value(frame: &FrameModel, z: &GrayImage) -> Result<f64> {
    let u = frame.op.apply(z)?;
    check_clamp_budget(frame, &u)?;
    let alpha = frame.noise.alpha;
    let mu = frame.noise.mu;
    let y = &frame.observation;
    let w = u.width();
    Ok(0.5
        * par::sum_rows(u.height(), |i| {
            let mut s = 0.0;
            for j in 0..w {
                let idx = i * w + j;
                let d = (alpha * u.data()[idx] + sigma_sq(frame, idx)).max(DOMAIN_FLOOR);
                let r = y.data()[idx] - u.data()[idx] - mu;
                s += r * r / d + d.ln();
            }
            s
        }))
}

/// Gradient of the per-frame negative log-likelihood at `z`.
pub fn nll_grad(frame: &FrameModel, z: &GrayImage) -> Result<GrayImage> {
    Ok(mpg_value_grad(frame, z)?.gradient)
}

/// Multi-frame negative log-likelihood: the sum of per-frame terms at a
/// common latent image, in fixed frame order. Errors name the offending
/// frame.
pub fn nll(frames: &[FrameModel], x: &GrayImage) -> Result<f64> {
    let mut total = 0.0;
    for (i, frame) in frames.iter().enumerate() {
        total += mpg_value(frame, x)
            .map_err(|e| Error::domain(format!("frame {i}: {e}")))?;
    }
    Ok(total)
}

/// Plain least-squares data term `1/2 ||y - A z - mu||^2`, the "L2"
/// baseline fidelity.
pub fn l2_value_grad(frame: &FrameModel, z: &GrayImage) -> Result<FidelityEval> {
    let u = frame.op.apply(z)?;
    let mu = frame.noise.mu;
    let y = &frame.observation;
    let w = u.width();
    let value = 0.5
        * par::sum_rows(u.height(), |i| {
            let mut s = 0.0;
            for j in 0..w {
                let idx = i * w + j;
                let r = y.data()[idx] - u.data()[idx] - mu;
                s += r * r;
            }
            s
        });
    let du = u.zip_map(y, |uv, yv| uv + mu - yv);
    let gradient = frame.op.adjoint(&du)?;
    Ok(FidelityEval { value, gradient })
}

/// Value-only variant of [`l2_value_grad`].
pub fn l2_value(frame: &FrameModel, z: &GrayImage) -> Result<f64> {
    let u = frame.op.apply(z)?;
    let mu = frame.noise.mu;
    let y = &frame.observation;
    let w = u.width();
    Ok(0.5
        * par::sum_rows(u.height(), |i| {
            let mut s = 0.0;
            for j in 0..w {
                let idx = i * w + j;
                let r = y.data()[idx] - u.data()[idx] - mu;
                s += r * r;
            }
            s
        }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::degrade::{LinearOp, NoiseParams};
    use crate::image::gaussian_kernel_with_radius;

    fn pseudo(w: usize, h: usize, salt: u64, lo: f64, hi: f64) -> GrayImage {
        GrayImage::from_fn(w, h, |i, j| {
            let v = (i as u64)
                .wrapping_mul(6364136223846793005)
                .wrapping_add((j as u64).wrapping_mul(1442695040888963407))
                .wrapping_add(salt.wrapping_mul(104729));
            lo + (hi - lo) * ((v >> 11) % 10_000) as f64 / 10_000.0
        })
    }

    fn identity_frame(y: GrayImage, noise: NoiseParams) -> FrameModel {
        let op = LinearOp::identity(y.shape());
        FrameModel::new(y, op, noise).unwrap()
    }

    #[test]
    fn gaussian_weights_are_inverse_variance() {
        let y = GrayImage::constant(4, 4, 1.0);
        let frame = identity_frame(y, NoiseParams::new(0.0, 0.0, 2.0).unwrap());
        let x = GrayImage::constant(4, 4, 5.0);
        let w = weight_diag(&frame, &x).unwrap();
        for &v in w.data() {
            assert!((v - 0.25).abs() < 1e-15);
        }
    }

    #[test]
    fn poisson_weights_direct_substitution() {
        let y = GrayImage::constant(3, 3, 1.0);
        let frame = identity_frame(y, NoiseParams::new(1.0, 0.0, 2.0).unwrap());
        let x = GrayImage::constant(3, 3, 100.0);
        let w = weight_diag(&frame, &x).unwrap();
        for &v in w.data() {
            assert!((v - 1.0 / 104.0).abs() < 1e-15);
        }
    }

    #[test]
    fn weights_match_scalar_loop_oracle() {
        let x = pseudo(6, 6, 1, 10.0, 90.0);
        let kernel = gaussian_kernel_with_radius(0.5, 1).unwrap();
        let op = LinearOp::blur((6, 6), kernel);
        let noise = NoiseParams::new(0.7, 0.0, 1.5).unwrap();
        let y = op.apply(&x).unwrap();
        let frame = FrameModel::new(y, op.clone(), noise).unwrap();
        let w = weight_diag(&frame, &x).unwrap();
        let u = op.apply(&x).unwrap();
        for idx in 0..u.len() {
            let expect = 1.0 / (0.7 * u.data()[idx] + 1.5 * 1.5);
            assert!((w.data()[idx] - expect).abs() < 1e-14);
        }
    }

    #[test]
    fn zero_residual_gaussian_value_is_log_term() {
        let x = pseudo(5, 5, 2, 20.0, 60.0);
        let mu = 1.5;
        let sigma = 2.0;
        let y = x.map(|v| v + mu);
        let frame = identity_frame(y, NoiseParams::new(0.0, mu, sigma).unwrap());
        let value = nll(&[frame], &x).unwrap();
        let expect = 25.0 * (sigma * sigma).ln() / 2.0;
        assert!((value - expect).abs() < 1e-10, "{value} vs {expect}");
    }

    #[test]
    fn single_pixel_direct_substitution() {
        let x = GrayImage::constant(1, 1, 100.0);
        let y = GrayImage::constant(1, 1, 110.0);
        let frame = identity_frame(y, NoiseParams::new(1.0, 0.0, 0.0).unwrap());
        let value = nll(&[frame], &x).unwrap();
        let expect = 0.5 * (100.0 / 100.0 + (100.0f64).ln());
        assert!((value - expect).abs() < 1e-12);
    }

    /// Independent density oracle: nll equals the negated sum of Gaussian
    /// log-densities N(y; Ax + mu, alpha Ax + sigma^2) minus the dropped
    /// constant n/2 * ln(2 pi).
    #[test]
    fn nll_matches_density_oracle() {
        let x = pseudo(6, 5, 3, 30.0, 120.0);
        let noise = NoiseParams::new(0.8, 0.5, 1.2).unwrap();
        let op = LinearOp::identity((5, 6));
        let y = pseudo(6, 5, 4, 30.0, 120.0);
        let frame = FrameModel::new(y.clone(), op, noise).unwrap();
        let value = nll(&[frame], &x).unwrap();

        let mut neg_log_density = 0.0;
        for idx in 0..x.len() {
            let mean = x.data()[idx] + 0.5;
            let var = 0.8 * x.data()[idx] + 1.2 * 1.2;
            let r = y.data()[idx] - mean;
            let pdf = (-r * r / (2.0 * var)).exp() / (2.0 * std::f64::consts::PI * var).sqrt();
            neg_log_density -= pdf.ln();
        }
        let dropped = x.len() as f64 * 0.5 * (2.0 * std::f64::consts::PI).ln();
        assert!((value - (neg_log_density - dropped)).abs() < 1e-9);
    }

    #[test]
    fn nll_is_frame_order_invariant() {
        let x = pseudo(5, 5, 7, 40.0, 90.0);
        let mk = |salt| {
            identity_frame(pseudo(5, 5, salt, 40.0, 90.0), NoiseParams::new(0.5, 0.0, 1.0).unwrap())
        };
        let (a, b, c) = (mk(8), mk(9), mk(10));
        let v1 = nll(&[a.clone(), b.clone(), c.clone()], &x).unwrap();
        let v2 = nll(&[c, a, b], &x).unwrap();
        assert!((v1 - v2).abs() < 1e-12);
    }

    #[test]
    fn gaussian_limit_reduces_to_least_squares() {
        let x = pseudo(6, 6, 11, 0.0, 50.0);
        let y = pseudo(6, 6, 12, 0.0, 50.0);
        let frame = identity_frame(y.clone(), NoiseParams::new(0.0, 0.0, 1.0).unwrap());
        let value = nll(&[frame], &x).unwrap();
        let lsq: f64 =
            x.data().iter().zip(y.data()).map(|(&a, &b)| (b - a) * (b - a)).sum::<f64>() / 2.0;
        // sigma = 1 makes the log term vanish.
        assert!((value - lsq).abs() < 1e-9);
    }

    #[test]
    fn gaussian_limit_gradient_is_weighted_least_squares() {
        let z = pseudo(5, 4, 13, 10.0, 80.0);
        let y = pseudo(5, 4, 14, 10.0, 80.0);
        let sigma = 1.7;
        let mu = 0.3;
        let frame = identity_frame(y.clone(), NoiseParams::new(0.0, mu, sigma).unwrap());
        let g = nll_grad(&frame, &z).unwrap();
        for idx in 0..z.len() {
            let expect = (z.data()[idx] + mu - y.data()[idx]) / (sigma * sigma);
            assert!((g.data()[idx] - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_residual_gradient_is_log_det_pushback() {
        let z = pseudo(4, 4, 15, 50.0, 100.0);
        let alpha = 1.0;
        let sigma = 2.0;
        let y = z.clone();
        let frame = identity_frame(y, NoiseParams::new(alpha, 0.0, sigma).unwrap());
        let g = nll_grad(&frame, &z).unwrap();
        for idx in 0..z.len() {
            let d = alpha * z.data()[idx] + sigma * sigma;
            let expect = alpha / (2.0 * d);
            assert!((g.data()[idx] - expect).abs() < 1e-12);
            assert!(g.data()[idx] > 0.0);
        }
    }

    fn finite_difference_check(frame: &FrameModel, z: &GrayImage) -> f64 {
        let g = nll_grad(frame, z).unwrap();
        let scale = z.data().iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
        let step = 1e-5 * scale;
        let mut max_abs_grad = 0.0f64;
        let mut max_err = 0.0f64;
        for idx in 0..z.len() {
            let mut zp = z.clone();
            zp.data_mut()[idx] += step;
            let mut zm = z.clone();
            zm.data_mut()[idx] -= step;
            let fd = (mpg_value(frame, &zp).unwrap() - mpg_value(frame, &zm).unwrap())
                / (2.0 * step);
            max_err = max_err.max((fd - g.data()[idx]).abs());
            max_abs_grad = max_abs_grad.max(g.data()[idx].abs());
        }
        max_err / max_abs_grad.max(1e-12)
    }

    #[test]
    fn gradient_matches_finite_differences() {
        for salt in 0..6u64 {
            let z = pseudo(8, 8, 20 + salt, 40.0, 150.0);
            let kernel = gaussian_kernel_with_radius(0.6, 1).unwrap();
            let op = LinearOp::compose(vec![
                LinearOp::shift_subpixel((8, 8), 0.25, -0.25),
                LinearOp::blur((8, 8), kernel),
            ])
            .unwrap();
            let y = pseudo(8, 8, 30 + salt, 40.0, 150.0);
            let noise = NoiseParams::new(0.5 + 0.2 * salt as f64, 0.1, 1.0 + salt as f64 * 0.3)
                .unwrap();
            let frame = FrameModel::new(y, op, noise).unwrap();
            let rel = finite_difference_check(&frame, &z);
            assert!(rel < 1e-4, "salt {salt}: relative error {rel}");
        }
    }

    #[test]
    fn domain_violation_names_frame() {
        let z = GrayImage::constant(10, 10, -50.0);
        let y = GrayImage::constant(10, 10, 5.0);
        let frame = identity_frame(y, NoiseParams::new(1.0, 0.0, 0.001).unwrap());
        let err = nll(&[frame], &z).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("frame 0"), "message was: {msg}");
    }

    #[test]
    fn per_pixel_sigma_map_is_honored() {
        let z = GrayImage::constant(2, 2, 10.0);
        let y = GrayImage::constant(2, 2, 12.0);
        let sigma_map = GrayImage::new(2, 2, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let frame = identity_frame(y, NoiseParams::new(0.0, 0.0, 9.0).unwrap())
            .with_sigma_map(sigma_map)
            .unwrap();
        let value = nll(&[frame], &z).unwrap();
        let expect: f64 = [1.0f64, 4.0, 9.0, 16.0]
            .iter()
            .map(|&v| 0.5 * (4.0 / v + v.ln()))
            .sum();
        assert!((value - expect).abs() < 1e-12);
    }
}
