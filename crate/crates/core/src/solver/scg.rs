//! Moller's scaled conjugate gradient: Hessian-free descent with a
//! Levenberg-Marquardt style scale on the finite-difference curvature.
//! Used for the nonconvex data-block subproblems.
//!
//! Trial evaluations that leave the likelihood domain are treated as
//! failed steps (the scale is raised and the step retried), so the
//! method never accepts a point it could not evaluate. Accepted steps
//! never increase the objective; if no step is ever accepted the warm
//! start is returned with `stagnated` set.

use crate::error::Result;
use crate::image::GrayImage;

pub struct ScgOutcome {
    pub z: GrayImage,
    pub value: f64,
    pub iterations: usize,
    pub stagnated: bool,
}

const SIGMA0: f64 = 1e-4;
const LAMBDA_MIN: f64 = 1e-18;
const LAMBDA_MAX: f64 = 1e20;

/// Minimize a smooth objective given by `value_grad` (value and gradient
/// at a point) starting from `z0`. Stops after `max_iters` steps, when
/// the search direction vanishes, when the scale saturates, or when the
/// relative decrease of an accepted step falls below `tol`.
pub fn minimize<VG>(
    value_grad: VG,
    z0: &GrayImage,
    max_iters: usize,
    tol: f64,
) -> Result<ScgOutcome>
where
    VG: Fn(&GrayImage) -> Result<(f64, GrayImage)>,
{
    // The warm start must be evaluable; domain errors here propagate.
    let (mut fw, gw) = value_grad(z0)?;
    let mut w = z0.clone();
    let mut r = gw.scaled(-1.0);
    let mut p = r.clone();
    let mut lambda = 1e-6;
    let mut success = true;
    let mut theta = 0.0; // raw curvature p' H p along the current p
    let mut accepted_any = false;
    let restart_every = w.len();
    let mut since_restart = 0usize;
    let mut iterations = 0usize;

    for _ in 0..max_iters {
        iterations += 1;
        let p_norm_sq = p.norm_sq();
        if p_norm_sq < 1e-30 {
            break;
        }

        if success {
            // Finite-difference curvature along p. A trial point outside
            // the likelihood domain leaves theta at 0, making the step
            // below a pure scaled-gradient step.
            let sigma = SIGMA0 / p_norm_sq.sqrt();
            let trial = w.axpy(sigma, &p);
            theta = match value_grad(&trial) {
                Ok((_, g_trial)) => {
                    // (grad(w + sigma p) - grad(w)) / sigma, dotted with p;
                    // r = -grad(w).
                    let s = g_trial.axpy(1.0, &r).scaled(1.0 / sigma);
                    p.dot(&s)
                }
                Err(_) => 0.0,
            };
        }

        let mut delta = theta + lambda * p_norm_sq;
        if delta <= 0.0 {
            // Indefinite direction: shift the scale until positive.
            lambda -= theta / p_norm_sq;
            delta = lambda * p_norm_sq;
        }

        let mu = p.dot(&r);
        if mu <= 0.0 {
            // Not a descent direction; restart along the gradient.
            p = r.clone();
            since_restart = 0;
            success = false;
            continue;
        }
        let alpha = mu / delta;
        let candidate = w.axpy(alpha, &p);
        let cand_eval = value_grad(&candidate);
        let f_cand = cand_eval.as_ref().map(|(v, _)| *v).unwrap_or(f64::INFINITY);
        let comparison = 2.0 * delta * (fw - f_cand) / (mu * mu);

        if comparison >= 0.0 && f_cand.is_finite() {
            let (_, g_new) = cand_eval.expect("finite candidate evaluated");
            let decrease = fw - f_cand;
            w = candidate;
            fw = f_cand;
            let r_new = g_new.scaled(-1.0);
            success = true;
            accepted_any = true;
            since_restart += 1;
            if since_restart >= restart_every {
                p = r_new.clone();
                since_restart = 0;
            } else {
                let beta = (r_new.norm_sq() - r_new.dot(&r)) / mu;
                p = r_new.axpy(beta, &p);
            }
            r = r_new;
            if comparison >= 0.75 {
                lambda = (0.25 * lambda).max(LAMBDA_MIN);
            }
            if decrease <= tol * (1.0 + fw.abs()) {
                break;
            }
        } else {
            success = false;
        }

        if comparison < 0.25 {
            lambda = (4.0 * lambda).min(LAMBDA_MAX);
        }
        if lambda >= LAMBDA_MAX {
            break;
        }
    }

    Ok(ScgOutcome { z: w, value: fw, iterations, stagnated: !accepted_any })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimizes_diagonal_quadratic() {
        // f(z) = 1/2 sum c_i (z_i - t_i)^2
        let t = GrayImage::from_fn(4, 4, |i, j| (i + 2 * j) as f64);
        let c = GrayImage::from_fn(4, 4, |i, j| 1.0 + ((i * j) % 3) as f64);
        let f = |z: &GrayImage| -> Result<(f64, GrayImage)> {
            let diff = z.axpy(-1.0, &t);
            let val = 0.5 * diff.zip_map(&c, |d, cc| cc * d * d).sum();
            let grad = diff.zip_map(&c, |d, cc| cc * d);
            Ok((val, grad))
        };
        let z0 = GrayImage::zeros(4, 4);
        let out = minimize(f, &z0, 200, 1e-14).unwrap();
        for idx in 0..t.len() {
            assert!((out.z.data()[idx] - t.data()[idx]).abs() < 1e-6, "idx {idx}");
        }
        assert!(!out.stagnated);
    }

    #[test]
    fn never_returns_worse_than_warm_start() {
        // Nonconvex scalar field with multiple wells.
        let f = |z: &GrayImage| -> Result<(f64, GrayImage)> {
            let val = z.data().iter().map(|&v| v.powi(4) - 2.0 * v * v + 0.5 * v).sum::<f64>();
            let grad = z.map(|v| 4.0 * v.powi(3) - 4.0 * v + 0.5);
            Ok((val, grad))
        };
        let z0 = GrayImage::from_fn(3, 3, |i, j| 0.3 * (i as f64) - 0.2 * (j as f64));
        let (f0, _) = f(&z0).unwrap();
        let out = minimize(f, &z0, 50, 1e-12).unwrap();
        assert!(out.value <= f0 + 1e-12);
    }
}
