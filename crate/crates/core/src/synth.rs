//! Deterministic synthetic test targets: piecewise-constant shape scenes
//! and flat fields, scaled to a chosen peak intensity. Used by the
//! experiment harness and tests; no randomness involved.

use crate::image::GrayImage;

/// A scene of basic shapes (ellipse, rectangles, bars) on a flat
/// background, with multiple edge contrasts. Coordinates are fractional
/// so the layout scales with the requested size. Region values are
/// rounded to whole grey levels so integer-peak scenes survive integer
/// image I/O bit-exactly.
pub fn shapes_image(width: usize, height: usize, peak: f64) -> GrayImage {
    let fw = width as f64;
    let fh = height as f64;
    GrayImage::from_fn(width, height, |i, j| {
        let y = i as f64 / fh;
        let x = j as f64 / fw;
        let mut v = 0.2 * peak;

        // Ellipse, high contrast.
        let (cy, cx, ry, rx) = (0.30, 0.28, 0.17, 0.20);
        if ((y - cy) / ry).powi(2) + ((x - cx) / rx).powi(2) <= 1.0 {
            v = 0.85 * peak;
        }
        // Rectangle, medium contrast.
        if (0.55..0.80).contains(&y) && (0.12..0.40).contains(&x) {
            v = 0.55 * peak;
        }
        // Three vertical bars at full intensity.
        if (0.12..0.46).contains(&y) {
            for (lo, hi) in [(0.55, 0.60), (0.66, 0.71), (0.77, 0.82)] {
                if (lo..hi).contains(&x) {
                    v = peak;
                }
            }
        }
        // Horizontal bar, lower contrast.
        if (0.58..0.66).contains(&y) && (0.50..0.90).contains(&x) {
            v = 0.70 * peak;
        }
        v.round()
    })
}

/// Natural-statistics scene: a smooth multi-scale intensity field with
/// an embedded textured ellipse, sharp bars, and a fine high-frequency
/// texture band, so gradients exist everywhere and exact patch matches
/// are rare (unlike the piecewise-constant scenes, which are the
/// degenerate best case for patch-similarity weighting).
pub fn textured_scene(width: usize, height: usize, peak: f64) -> GrayImage {
    let pi = std::f64::consts::PI;
    GrayImage::from_fn(width, height, |i, j| {
        let y = i as f64 / height as f64;
        let x = j as f64 / width as f64;
        let mut t = 0.0;
        t += 0.30 * ((3.1 * x + 1.7 * y) * pi).sin();
        t += 0.22 * ((1.3 * x - 2.9 * y + 0.4) * pi).cos();
        t += 0.12 * ((7.3 * x + 4.1 * y + 1.1) * pi).sin();
        t += 0.08 * ((9.7 * x - 6.3 * y + 2.3) * pi).cos();
        let mut v = peak * (0.45 + 0.28 * t);
        if ((y - 0.30) / 0.16).powi(2) + ((x - 0.30) / 0.19).powi(2) <= 1.0 {
            v = peak * (0.80 + 0.10 * ((11.0 * x + 5.0 * y) * 3.0).sin());
        }
        if (0.15..0.45).contains(&y) {
            for (lo, hi) in [(0.60, 0.64), (0.70, 0.74), (0.80, 0.84)] {
                if (lo..hi).contains(&x) {
                    v = peak;
                }
            }
        }
        if (0.60..0.85).contains(&y) && (0.55..0.95).contains(&x) {
            let t2 = ((x * 40.0).sin() + (y * 34.0).cos()) * 0.5;
            v = peak * (0.55 + 0.12 * t2);
        }
        v.clamp(0.05 * peak, peak)
    })
}

/// Flat regions separated by step edges: a bright half-plane and a dark
/// horizontal band, rounded to whole grey levels.
pub fn flat_edges_image(width: usize, height: usize, peak: f64) -> GrayImage {
    GrayImage::from_fn(width, height, |i, j| {
        let y = i as f64 / height as f64;
        let x = j as f64 / width as f64;
        let mut v = if x < 0.5 { 0.3 * peak } else { peak };
        if (0.40..0.60).contains(&y) {
            v = 0.65 * peak;
        }
        v.round()
    })
}
