//! Matrix-free conjugate gradient for the quadratic x-update.
//!
//! Solves the normal equations `(sum_i rho_i T_i' T_i) x = b` with
//! `b = sum_i T_i' (rho_i z_i - p_i)`; the system operator is assembled
//! from forward/adjoint applications of the constraint operators.

use crate::degrade::LinearOp;
use crate::error::{Error, Result};
use crate::image::GrayImage;

pub struct CgResult {
    pub x: GrayImage,
    pub iterations: usize,
    /// Final residual norm relative to `||b||`.
    pub rel_residual: f64,
}

/// Apply `Q = sum_i rho_i T_i' T_i` to `x`.
fn apply_normal(ops: &[LinearOp], rho: &[f64], x: &GrayImage) -> Result<GrayImage> {
    let mut acc = GrayImage::zeros(x.width(), x.height());
    for (op, &r) in ops.iter().zip(rho) {
        let t = op.apply(x)?;
        let tt = op.adjoint(&t)?;
        acc = acc.axpy(r, &tt);
    }
    Ok(acc)
}

/// Right-hand side `b = sum_i T_i' (rho_i z_i - p_i)`.
pub fn normal_rhs(ops: &[LinearOp], rho: &[f64], z: &[GrayImage], p: &[GrayImage]) -> Result<GrayImage> {
    let shape = ops[0].in_shape();
    let mut b = GrayImage::zeros(shape.1, shape.0);
    for i in 0..ops.len() {
        let term = z[i].scaled(rho[i]).axpy(-1.0, &p[i]);
        b = b.axpy(1.0, &ops[i].adjoint(&term)?);
    }
    Ok(b)
}

/// Conjugate gradient on the SPD normal system, warm-started at `x0`.
/// Stops when the residual falls below `tol * ||b||` or after
/// `max_iters` steps; nonpositive curvature (numerical breakdown of
/// positive-definiteness) is a solver error.
pub fn solve_normal_equations(
    ops: &[LinearOp],
    rho: &[f64],
    b: &GrayImage,
    x0: &GrayImage,
    max_iters: usize,
    tol: f64,
) -> Result<CgResult> {
    let b_norm = b.norm();
    if b_norm == 0.0 {
        return Ok(CgResult { x: GrayImage::zeros(b.width(), b.height()), iterations: 0, rel_residual: 0.0 });
    }
    let mut x = x0.clone();
    let mut r = b.axpy(-1.0, &apply_normal(ops, rho, &x)?);
    let mut p = r.clone();
    let mut rs_old = r.norm_sq();
    let mut iterations = 0;
    for _ in 0..max_iters {
        if rs_old.sqrt() <= tol * b_norm {
            break;
        }
        let qp = apply_normal(ops, rho, &p)?;
        let curvature = p.dot(&qp);
        if curvature <= 0.0 {
            return Err(Error::solver(format!(
                "CG breakdown at iteration {iterations}: curvature {curvature:e} (residual {:e})",
                rs_old.sqrt()
            )));
        }
        let alpha = rs_old / curvature;
        x = x.axpy(alpha, &p);
        r = r.axpy(-alpha, &qp);
        let rs_new = r.norm_sq();
        p = r.axpy(rs_new / rs_old, &p);
        rs_old = rs_new;
        iterations += 1;
    }
    Ok(CgResult { x, iterations, rel_residual: rs_old.sqrt() / b_norm })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_system_returns_rhs() {
        let z = GrayImage::from_fn(4, 4, |i, j| (i * 4 + j) as f64);
        let ops = vec![LinearOp::identity((4, 4))];
        let rho = vec![1.0];
        let p = vec![GrayImage::zeros(4, 4)];
        let b = normal_rhs(&ops, &rho, std::slice::from_ref(&z), &p).unwrap();
        let res = solve_normal_equations(&ops, &rho, &b, &GrayImage::zeros(4, 4), 50, 1e-12).unwrap();
        for idx in 0..z.len() {
            assert!((res.x.data()[idx] - z.data()[idx]).abs() < 1e-10);
        }
    }

    #[test]
    fn two_identity_blocks_average() {
        let za = GrayImage::constant(3, 3, 2.0);
        let zb = GrayImage::constant(3, 3, 6.0);
        let ops = vec![LinearOp::identity((3, 3)), LinearOp::identity((3, 3))];
        let rho = vec![1.5, 1.5];
        let p = vec![GrayImage::zeros(3, 3), GrayImage::zeros(3, 3)];
        let b = normal_rhs(&ops, &rho, &[za, zb], &p).unwrap();
        let res = solve_normal_equations(&ops, &rho, &b, &GrayImage::zeros(3, 3), 50, 1e-12).unwrap();
        for &v in res.x.data() {
            assert!((v - 4.0).abs() < 1e-10);
        }
    }
}
