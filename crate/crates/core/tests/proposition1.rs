//! Statistical property of central-difference gradients on a homogeneous
//! region under mixed Poisson-Gaussian noise: zero-mean isotropic white
//! Gaussian with variance `(alpha z + sigma^2) / 2`, and uncorrelated
//! x/y components.

use bswtv::degrade::{add_mpg_noise, NoiseParams};
use bswtv::image::{gradient_central, GrayImage};

struct Stats {
    mean: f64,
    var: f64,
    n: usize,
}

fn interior_stats(field: &GrayImage) -> Stats {
    let (h, w) = field.shape();
    let mut sum = 0.0;
    let mut n = 0usize;
    for i in 1..h - 1 {
        for j in 1..w - 1 {
            sum += field.at(i, j);
            n += 1;
        }
    }
    let mean = sum / n as f64;
    let mut ss = 0.0;
    for i in 1..h - 1 {
        for j in 1..w - 1 {
            let d = field.at(i, j) - mean;
            ss += d * d;
        }
    }
    Stats { mean, var: ss / (n - 1) as f64, n }
}

#[test]
fn flat_field_gradients_are_isotropic_white_gaussian() {
    // z = 100, alpha = 1, sigma = 2: predicted gradient variance
    // (alpha z + sigma^2) / 2 = 52.
    let side = 1026; // >= 1e6 interior pixels
    let z = 100.0;
    let clean = GrayImage::constant(side, side, z);
    let noise = NoiseParams::new(1.0, 0.0, 2.0).unwrap();
    let noisy = add_mpg_noise(&clean, &noise, 20_240_817).unwrap();
    let (gx, gy) = gradient_central(&noisy);

    let sx = interior_stats(&gx);
    let sy = interior_stats(&gy);
    assert!(sx.n >= 1_000_000, "not enough samples: {}", sx.n);

    let predicted = (1.0 * z + 4.0) / 2.0;
    for (name, s) in [("gx", &sx), ("gy", &sy)] {
        let rel = (s.var - predicted).abs() / predicted;
        assert!(rel < 0.05, "{name}: variance {} vs predicted {predicted} (rel {rel})", s.var);
        let se = (s.var / s.n as f64).sqrt();
        assert!(
            s.mean.abs() < 3.0 * se,
            "{name}: mean {} exceeds 3 standard errors ({se})",
            s.mean
        );
    }

    // Correlation between the two components over the interior.
    let (h, w) = gx.shape();
    let mut cov = 0.0;
    for i in 1..h - 1 {
        for j in 1..w - 1 {
            cov += (gx.at(i, j) - sx.mean) * (gy.at(i, j) - sy.mean);
        }
    }
    cov /= (sx.n - 1) as f64;
    let corr = cov / (sx.var * sy.var).sqrt();
    assert!(corr.abs() < 0.01, "corr(gx, gy) = {corr}");
}
