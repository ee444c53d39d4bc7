//! PSNR and SSIM quality metrics.

use crate::error::{Error, Result};
use crate::image::GrayImage;
use crate::par;

/// PSNR / SSIM / MSE bundle for one reference-test pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QualityReport {
    /// `+inf` for identical images (zero MSE).
    pub psnr_db: f64,
    pub ssim: f64,
    pub mse: f64,
}

/// Mean squared error over all pixels.
pub fn mse(reference: &GrayImage, test: &GrayImage) -> Result<f64> {
    if !reference.same_shape(test) {
        return Err(Error::invalid("mse: shape mismatch"));
    }
    let w = reference.width();
    let (a, b) = (reference.data(), test.data());
    let total = par::sum_rows(reference.height(), |i| {
        let mut s = 0.0;
        for j in 0..w {
            let d = a[i * w + j] - b[i * w + j];
            s += d * d;
        }
        s
    });
    Ok(total / reference.len() as f64)
}

/// `10 log10(peak^2 / MSE)`; identical images report the infinity
/// sentinel.
pub fn psnr(reference: &GrayImage, test: &GrayImage, peak: f64) -> Result<f64> {
    if !(peak > 0.0) {
        return Err(Error::invalid(format!("peak must be positive, got {peak}")));
    }
    let err = mse(reference, test)?;
    if err == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (peak * peak / err).log10())
}

/// Mean local SSIM with the standard 11x11 Gaussian window (sigma 1.5),
/// `K1 = 0.01`, `K2 = 0.03`, dynamic range `peak`. Windows are fully
/// interior ("valid" placement), hence the minimum-dimension
/// precondition.
pub fn ssim(reference: &GrayImage, test: &GrayImage, peak: f64) -> Result<f64> {
    const WINDOW: usize = 11;
    const SIGMA: f64 = 1.5;
    const K1: f64 = 0.01;
    const K2: f64 = 0.03;

    if !reference.same_shape(test) {
        return Err(Error::invalid("ssim: shape mismatch"));
    }
    if !(peak > 0.0) {
        return Err(Error::invalid(format!("peak must be positive, got {peak}")));
    }
    if reference.width() < WINDOW || reference.height() < WINDOW {
        return Err(Error::invalid(format!(
            "ssim needs both dimensions >= {WINDOW}, got {}x{}",
            reference.height(),
            reference.width()
        )));
    }

    // Normalized Gaussian window.
    let half = (WINDOW / 2) as isize;
    let mut win = [0.0f64; WINDOW * WINDOW];
    let mut total = 0.0;
    for u in -half..=half {
        for v in -half..=half {
            let w = (-((u * u + v * v) as f64) / (2.0 * SIGMA * SIGMA)).exp();
            win[((u + half) as usize) * WINDOW + (v + half) as usize] = w;
            total += w;
        }
    }
    for w in &mut win {
        *w /= total;
    }

    let c1 = (K1 * peak) * (K1 * peak);
    let c2 = (K2 * peak) * (K2 * peak);
    let (h, w) = reference.shape();
    let rows = h - WINDOW + 1;
    let cols = w - WINDOW + 1;

    let sum = par::sum_rows(rows, |i| {
        let mut acc = 0.0;
        for j in 0..cols {
            let mut mu_x = 0.0;
            let mut mu_y = 0.0;
            let mut xx = 0.0;
            let mut yy = 0.0;
            let mut xy = 0.0;
            for u in 0..WINDOW {
                for v in 0..WINDOW {
                    let wt = win[u * WINDOW + v];
                    let a = reference.at(i + u, j + v);
                    let b = test.at(i + u, j + v);
                    mu_x += wt * a;
                    mu_y += wt * b;
                    xx += wt * a * a;
                    yy += wt * b * b;
                    xy += wt * a * b;
                }
            }
            let var_x = xx - mu_x * mu_x;
            let var_y = yy - mu_y * mu_y;
            let cov = xy - mu_x * mu_y;
            acc += ((2.0 * mu_x * mu_y + c1) * (2.0 * cov + c2))
                / ((mu_x * mu_x + mu_y * mu_y + c1) * (var_x + var_y + c2));
        }
        acc
    });
    Ok(sum / (rows * cols) as f64)
}

/// Convenience bundle of all three metrics.
pub fn quality_report(reference: &GrayImage, test: &GrayImage, peak: f64) -> Result<QualityReport> {
    Ok(QualityReport {
        psnr_db: psnr(reference, test, peak)?,
        ssim: ssim(reference, test, peak)?,
        mse: mse(reference, test)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::degrade::{add_mpg_noise, NoiseParams};

    fn pseudo(w: usize, h: usize, salt: u64, lo: f64, hi: f64) -> GrayImage {
        GrayImage::from_fn(w, h, |i, j| {
            let v = (i as u64)
                .wrapping_mul(0x9e3779b97f4a7c15)
                .wrapping_add((j as u64).wrapping_mul(0xff51afd7ed558ccd))
                .wrapping_add(salt.wrapping_mul(0xc4ceb9fe1a85ec53));
            lo + (hi - lo) * ((v >> 19) % 100_000) as f64 / 100_000.0
        })
    }

    #[test]
    fn psnr_formula_case() {
        // MSE forced to exactly 1.
        let a = GrayImage::zeros(10, 10);
        let b = GrayImage::constant(10, 10, 1.0);
        let got = psnr(&a, &b, 255.0).unwrap();
        assert!((got - 48.13080361).abs() < 1e-6, "got {got}");
    }

    #[test]
    fn psnr_identical_is_infinite() {
        let a = pseudo(8, 8, 1, 0.0, 255.0);
        assert_eq!(psnr(&a, &a.clone(), 255.0).unwrap(), f64::INFINITY);
    }

    #[test]
    fn mse_matches_two_pass_oracle() {
        let a = pseudo(12, 9, 2, 0.0, 200.0);
        let b = pseudo(12, 9, 3, 0.0, 200.0);
        let got = mse(&a, &b).unwrap();
        // Two-pass oracle: accumulate differences first, square after.
        let diffs: Vec<f64> =
            a.data().iter().zip(b.data()).map(|(&x, &y)| x - y).collect();
        let expect = diffs.iter().map(|d| d * d).sum::<f64>() / diffs.len() as f64;
        assert!((got - expect).abs() < 1e-10);
    }

    #[test]
    fn psnr_decreases_with_noise_level() {
        let reference = pseudo(32, 32, 4, 50.0, 200.0);
        let mut last = f64::INFINITY;
        for (k, sigma) in [1.0, 2.0, 4.0, 8.0].into_iter().enumerate() {
            let noisy = add_mpg_noise(
                &reference,
                &NoiseParams::gaussian(0.0, sigma).unwrap(),
                900 + k as u64,
            )
            .unwrap();
            let p = psnr(&reference, &noisy, 255.0).unwrap();
            assert!(p < last, "sigma {sigma}: psnr {p} did not decrease from {last}");
            last = p;
        }
    }

    #[test]
    fn ssim_identical_is_one() {
        let a = pseudo(16, 16, 5, 0.0, 255.0);
        let s = ssim(&a, &a.clone(), 255.0).unwrap();
        assert!((s - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ssim_is_symmetric() {
        let a = pseudo(16, 16, 6, 0.0, 255.0);
        let b = pseudo(16, 16, 7, 0.0, 255.0);
        let ab = ssim(&a, &b, 255.0).unwrap();
        let ba = ssim(&b, &a, 255.0).unwrap();
        assert!((ab - ba).abs() < 1e-12);
        assert!((-1.0..=1.0).contains(&ab));
    }

    #[test]
    fn ssim_rejects_small_images() {
        let a = GrayImage::zeros(10, 12);
        assert!(ssim(&a, &a.clone(), 255.0).is_err());
    }

    /// Direct per-window oracle for the constant-offset case: variance
    /// and covariance are unchanged, only the luminance term drops.
    #[test]
    fn ssim_offset_matches_per_window_oracle() {
        let a = pseudo(14, 14, 8, 50.0, 150.0);
        let b = a.map(|v| v + 20.0);
        let got = ssim(&a, &b, 255.0).unwrap();

        // Oracle: recompute windows with plain loops and the closed
        // SSIM formula, Gaussian weights rebuilt independently.
        let mut weights = vec![];
        let sig = 1.5f64;
        let mut tot = 0.0;
        for u in -5i32..=5 {
            for v in -5i32..=5 {
                let w = (-(u * u + v * v) as f64 / (2.0 * sig * sig)).exp();
                weights.push(w);
                tot += w;
            }
        }
        for w in &mut weights {
            *w /= tot;
        }
        let c1 = (0.01f64 * 255.0).powi(2);
        let c2 = (0.03f64 * 255.0).powi(2);
        let mut acc = 0.0;
        let mut count = 0;
        for i in 0..4 {
            for j in 0..4 {
                let mut mx = 0.0;
                let mut my = 0.0;
                let mut sxx = 0.0;
                let mut syy = 0.0;
                let mut sxy = 0.0;
                for u in 0..11 {
                    for v in 0..11 {
                        let w = weights[u * 11 + v];
                        let xa = a.at(i + u, j + v);
                        let xb = b.at(i + u, j + v);
                        mx += w * xa;
                        my += w * xb;
                        sxx += w * xa * xa;
                        syy += w * xb * xb;
                        sxy += w * xa * xb;
                    }
                }
                let vx = sxx - mx * mx;
                let vy = syy - my * my;
                let cv = sxy - mx * my;
                acc += ((2.0 * mx * my + c1) * (2.0 * cv + c2))
                    / ((mx * mx + my * my + c1) * (vx + vy + c2));
                count += 1;
            }
        }
        let oracle = acc / count as f64;
        assert!((got - oracle).abs() < 1e-12, "{got} vs {oracle}");
        assert!(got < 1.0, "offset image cannot have SSIM 1");
    }
}
