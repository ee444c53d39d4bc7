//! Consensus ADMM for the weighted-TV restoration objective.
//!
//! The objective `sum_i g_i(x) + lambda ||Phi grad x||_1` is split into
//! `m + 2` blocks (`m + R^2 - 1` for the NLTV baseline) with consensus
//! constraints `T_i x = z_i`: the data blocks carry the fidelity terms
//! through `T_i = I`, the regularizer blocks carry the L1 terms through
//! the weighted difference operators. Each iteration runs, in order:
//!
//! 1. the weighting-map refresh (BSWTV only; TV and NLTV weights are
//!    fixed),
//! 2. the CG x-update on the stacked quadratic,
//! 3. per-block z-updates: SCG for the data blocks, the closed-form
//!    soft threshold for the regularizer blocks,
//! 4. per-block penalty adaptation and dual ascent,
//! 5. the residual-based early-stopping test.
//!
//! The per-block work inside one iteration is independent and runs on
//! the rayon pool when the `parallel` feature is on; results are merged
//! in block order so runs are bitwise reproducible.

mod cg;
mod scg;

pub use cg::CgResult;
pub use scg::ScgOutcome;

use std::time::Instant;

use crate::degrade::{FrameModel, LinearOp};
use crate::error::{Error, Result};
use crate::fidelity;
use crate::image::{bicubic_upsample, GrayImage};
use crate::par;
use crate::weighting::{nltv_weights, update_weighting_map, BswtvParams, WeightState};

/// Which regularizer builds the constraint operators.
#[derive(Debug, Clone, PartialEq)]
pub enum Regularizer {
    /// The iteratively refined eigen-gap weighting map.
    Bswtv(BswtvParams),
    /// Nonlocal TV: `R^2 - 1` fixed patch-similarity maps computed from
    /// the initialization image.
    Nltv { window: usize, patch: usize, eta: f64 },
    /// Plain anisotropic TV (weighting map frozen at all-ones).
    Tv,
}

/// Which data term the data blocks minimize.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DataTerm {
    /// Mixed Poisson-Gaussian negative log-likelihood.
    Mpg,
    /// Plain least squares (the "L2" baseline).
    L2,
}

/// Everything the solver needs besides the frames and the initial guess.
#[derive(Debug, Clone)]
pub struct SolverConfig {
    /// Regularizer weight `lambda >= 0`.
    pub lambda: f64,
    /// Initial penalty for every block.
    pub rho0: f64,
    /// ADMM iteration cap.
    pub max_iter: usize,
    /// Penalty adaptation constants, all > 1.
    pub c1: f64,
    pub c2: f64,
    pub c: f64,
    /// Early-stopping thresholds on the relative decrease of the summed
    /// squared primal/dual residual norms.
    pub eps1: f64,
    pub eps2: f64,
    /// CG budget for the x-update.
    pub cg_iters: usize,
    pub cg_tol: f64,
    /// SCG budget per data-block update.
    pub scg_iters: usize,
    pub scg_tol: f64,
    pub regularizer: Regularizer,
    pub data_term: DataTerm,
    /// Apply the penalty adaptation rule (disable for controlled
    /// experiments).
    pub adapt_rho: bool,
    /// Apply the residual-based stopping test (disable to force exactly
    /// `max_iter` iterations).
    pub early_stop: bool,
    /// Compute the first weighting map from the initialization image
    /// rather than from the zero initial latent.
    pub phi_from_init: bool,
}

impl SolverConfig {
    /// Defaults around the regularizer choice; experiment configs
    /// override individual fields.
    pub fn new(lambda: f64, regularizer: Regularizer) -> Self {
        Self {
            lambda,
            rho0: 1.0,
            max_iter: 20,
            c1: 2.0,
            c2: 2.0,
            c: 10.0,
            eps1: 1e-4,
            eps2: 1e-4,
            cg_iters: 100,
            cg_tol: 1e-8,
            scg_iters: 25,
            scg_tol: 1e-8,
            regularizer,
            data_term: DataTerm::Mpg,
            adapt_rho: true,
            early_stop: true,
            phi_from_init: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda >= 0.0) {
            return Err(Error::invalid(format!("lambda must be >= 0, got {}", self.lambda)));
        }
        if !(self.rho0 > 0.0) {
            return Err(Error::invalid(format!("rho0 must be positive, got {}", self.rho0)));
        }
        for (name, v) in [("c1", self.c1), ("c2", self.c2), ("c", self.c)] {
            if !(v > 1.0) {
                return Err(Error::invalid(format!("{name} must be > 1, got {v}")));
            }
        }
        if self.max_iter < 1 || self.cg_iters < 1 || self.scg_iters < 1 {
            return Err(Error::invalid("iteration budgets must be at least 1"));
        }
        if !self.eps1.is_finite() || !self.eps2.is_finite() {
            return Err(Error::invalid("stopping thresholds must be finite"));
        }
        if let Regularizer::Bswtv(params) = &self.regularizer {
            params.validate()?;
        }
        if let Regularizer::Nltv { window, patch, .. } = &self.regularizer {
            if window % 2 == 0 || patch % 2 == 0 {
                return Err(Error::invalid("NLTV window and patch sizes must be odd"));
            }
        }
        Ok(())
    }
}

/// The regularizer weights feeding the constraint operators.
pub enum RegWeights {
    /// One shared map for the two gradient directions (BSWTV / TV).
    Phi(GrayImage),
    /// One map per nonzero shift (NLTV).
    NltvMaps(Vec<((isize, isize), GrayImage)>),
}

/// Build the full block operator list: `m` identities over the latent
/// shape followed by the weighted difference operators of the
/// regularizer. Every operator passes the adjoint identity.
pub fn make_constraint_ops(
    frames: &[FrameModel],
    hr_shape: (usize, usize),
    weights: &RegWeights,
) -> Result<Vec<LinearOp>> {
    let mut ops: Vec<LinearOp> =
        (0..frames.len()).map(|_| LinearOp::identity(hr_shape)).collect();
    match weights {
        RegWeights::Phi(phi) => {
            if phi.shape() != hr_shape {
                return Err(Error::invalid(format!(
                    "weighting map shape {:?} does not match latent shape {:?}",
                    phi.shape(),
                    hr_shape
                )));
            }
            ops.push(LinearOp::weighted_diff(phi.clone(), 1, 0));
            ops.push(LinearOp::weighted_diff(phi.clone(), 0, 1));
        }
        RegWeights::NltvMaps(maps) => {
            for ((dx, dy), map) in maps {
                if map.shape() != hr_shape {
                    return Err(Error::invalid("NLTV map shape does not match latent shape"));
                }
                ops.push(LinearOp::weighted_diff(map.clone(), *dx, *dy));
            }
        }
    }
    Ok(ops)
}

/// The CG x-update: approximately solves
/// `(sum_i rho_i T_i' T_i) x = sum_i T_i' (rho_i z_i - p_i)`,
/// warm-started at the current latent image.
pub fn x_update(
    x_warm: &GrayImage,
    ops: &[LinearOp],
    rho: &[f64],
    z: &[GrayImage],
    p: &[GrayImage],
    cfg: &SolverConfig,
) -> Result<CgResult> {
    let b = cg::normal_rhs(ops, rho, z, p)?;
    cg::solve_normal_equations(ops, rho, &b, x_warm, cfg.cg_iters, cfg.cg_tol)
}

/// One data-block update: minimize `g_i(z) + rho/2 ||z - v||^2` with
/// `v = T_i x + p / rho` by SCG, warm-started at the previous block
/// value. Returns the new block and whether the search stagnated (in
/// which case the warm start is returned unchanged).
pub fn z_data_update(
    frame: &FrameModel,
    data_term: DataTerm,
    z_prev: &GrayImage,
    tx: &GrayImage,
    p: &GrayImage,
    rho: f64,
    cfg: &SolverConfig,
) -> Result<(GrayImage, bool)> {
    let v = tx.axpy(1.0 / rho, p);
    let objective = |z: &GrayImage| -> Result<(f64, GrayImage)> {
        let eval = match data_term {
            DataTerm::Mpg => fidelity::mpg_value_grad(frame, z)?,
            DataTerm::L2 => fidelity::l2_value_grad(frame, z)?,
        };
        let diff = z.axpy(-1.0, &v);
        let value = eval.value + 0.5 * rho * diff.norm_sq();
        let gradient = eval.gradient.axpy(rho, &diff);
        Ok((value, gradient))
    };
    let out = scg::minimize(objective, z_prev, cfg.scg_iters, cfg.scg_tol)?;
    Ok((out.z, out.stagnated))
}

/// Closed-form regularizer-block update: the soft threshold
/// `out = sign(v) * max(|v| - lambda / rho, 0)` with `v = T_i x + p / rho`.
pub fn z_reg_update(tx: &GrayImage, p: &GrayImage, rho: f64, lambda: f64) -> GrayImage {
    let thr = lambda / rho;
    tx.zip_map(p, move |t, pv| {
        let v = t + pv / rho;
        if v >= thr {
            v - thr
        } else if v <= -thr {
            v + thr
        } else {
            0.0
        }
    })
}

/// Dual ascent `p <- p + rho (T x - z)`.
pub fn dual_update(p: &GrayImage, tx: &GrayImage, z: &GrayImage, rho: f64) -> GrayImage {
    p.axpy(rho, &tx.axpy(-1.0, z))
}

/// The three-case penalty rule: grow by `c1` when the primal residual
/// dominates, shrink by `c2` when the dual residual dominates, hold
/// otherwise.
pub fn penalty_update(rho: f64, r_norm: f64, s_norm: f64, cfg: &SolverConfig) -> f64 {
    if r_norm > cfg.c * s_norm {
        cfg.c1 * rho
    } else if s_norm > cfg.c * r_norm {
        rho / cfg.c2
    } else {
        rho
    }
}

/// Primal and dual residual blocks: `r_i = T_i x - z_i` and
/// `s_i = -rho_i T_i' (z_i - z_i_old)`.
pub fn residuals(
    ops: &[LinearOp],
    x_new: &GrayImage,
    z_new: &[GrayImage],
    z_old: &[GrayImage],
    rho: &[f64],
) -> Result<(Vec<GrayImage>, Vec<GrayImage>)> {
    let mut r = Vec::with_capacity(ops.len());
    let mut s = Vec::with_capacity(ops.len());
    for i in 0..ops.len() {
        r.push(ops[i].apply(x_new)?.axpy(-1.0, &z_new[i]));
        let dz = z_new[i].axpy(-1.0, &z_old[i]);
        s.push(ops[i].adjoint(&dz)?.scaled(-rho[i]));
    }
    Ok((r, s))
}

/// Per-iteration log record, consumed by the CLI's CSV writer.
#[derive(Debug, Clone)]
pub struct IterationRecord {
    pub iteration: usize,
    /// Objective (fidelity plus weighted-TV seminorm) at the new latent;
    /// NaN if the fidelity left its domain there. Diagnostics only.
    pub objective: f64,
    pub r_norms: Vec<f64>,
    pub s_norms: Vec<f64>,
    pub rho: Vec<f64>,
    pub wall_ms: f64,
}

/// Full solver state returned next to the restored image.
#[derive(Debug, Clone)]
pub struct AdmmState {
    pub x: GrayImage,
    pub z: Vec<GrayImage>,
    pub p: Vec<GrayImage>,
    pub rho: Vec<f64>,
    /// Evolving BSWTV state; `None` for the TV/NLTV baselines.
    pub weights: Option<WeightState>,
    pub trace: Vec<IterationRecord>,
    pub stopped_early: bool,
    pub iterations: usize,
}

/// Algorithm-standard initialization of the data blocks: the first
/// observation for denoising, its bicubic upsample for super-resolution.
pub fn initial_estimate(first_observation: &GrayImage, upscale: usize) -> Result<GrayImage> {
    if upscale <= 1 {
        Ok(first_observation.clone())
    } else {
        // Clamp bicubic undershoot: intensities are nonnegative and the
        // Poisson branch of the likelihood is only defined there.
        Ok(bicubic_upsample(first_observation, upscale)?.map(|v| v.max(0.0)))
    }
}

/// Run the solver; see [`solve_with_observer`].
pub fn solve(
    frames: &[FrameModel],
    cfg: &SolverConfig,
    init: &GrayImage,
) -> Result<(GrayImage, AdmmState)> {
    solve_with_observer(frames, cfg, init, |_, _, _| {})
}

/// Run the ADMM loop. `observer` is called once per iteration with the
/// fresh record, the current latent, and the current weighting state
/// (when one evolves); the CLI uses it for CSV logging and map dumps.
pub fn solve_with_observer(
    frames: &[FrameModel],
    cfg: &SolverConfig,
    init: &GrayImage,
    mut observer: impl FnMut(&IterationRecord, &GrayImage, Option<&WeightState>),
) -> Result<(GrayImage, AdmmState)> {
    cfg.validate()?;
    if frames.is_empty() {
        return Err(Error::invalid("at least one frame is required"));
    }
    let hr_shape = init.shape();
    for (i, f) in frames.iter().enumerate() {
        if f.op.in_shape() != hr_shape {
            return Err(Error::invalid(format!(
                "frame {i}: operator input shape {:?} does not match initialization {:?}",
                f.op.in_shape(),
                hr_shape
            )));
        }
    }
    let m = frames.len();

    // Fixed weights for the baselines; evolving state for BSWTV.
    let mut weight_state: Option<WeightState> = None;
    let fixed_weights: Option<RegWeights> = match &cfg.regularizer {
        Regularizer::Bswtv(params) => {
            weight_state = Some(WeightState::init(hr_shape, params));
            None
        }
        Regularizer::Nltv { window, patch, eta } => {
            Some(RegWeights::NltvMaps(nltv_weights(init, *window, *patch, *eta)?))
        }
        Regularizer::Tv => Some(RegWeights::Phi(GrayImage::constant(hr_shape.1, hr_shape.0, 1.0))),
    };

    let fixed_ops: Option<Vec<LinearOp>> = match &fixed_weights {
        Some(wts) => Some(make_constraint_ops(frames, hr_shape, wts)?),
        None => None,
    };

    let n_reg = match &cfg.regularizer {
        Regularizer::Nltv { window, .. } => window * window - 1,
        _ => 2,
    };
    let blocks = m + n_reg;

    let mut x = GrayImage::zeros(hr_shape.1, hr_shape.0);
    let mut z: Vec<GrayImage> = (0..blocks)
        .map(|i| if i < m { init.clone() } else { GrayImage::zeros(hr_shape.1, hr_shape.0) })
        .collect();
    let mut p: Vec<GrayImage> =
        (0..blocks).map(|_| GrayImage::zeros(hr_shape.1, hr_shape.0)).collect();
    let mut rho = vec![cfg.rho0; blocks];

    let mut trace: Vec<IterationRecord> = Vec::with_capacity(cfg.max_iter);
    let mut prev_r_sum: Option<f64> = None;
    let mut prev_s_sum: Option<f64> = None;
    let mut stopped_early = false;

    for k in 0..cfg.max_iter {
        let tick = Instant::now();

        // 1. Weighting-map refresh, the first step of the iteration.
        if let (Regularizer::Bswtv(params), Some(state)) = (&cfg.regularizer, weight_state.as_ref())
        {
            let source = if k == 0 && cfg.phi_from_init { init } else { &x };
            let next = update_weighting_map(state, source, params)
                .map_err(|e| Error::solver(format!("iteration {k}: weighting map: {e}")))?;
            weight_state = Some(next);
        }
        let evolving_ops;
        let ops: &[LinearOp] = match (&fixed_ops, &weight_state) {
            (Some(fixed), _) => fixed,
            (None, Some(state)) => {
                evolving_ops =
                    make_constraint_ops(frames, hr_shape, &RegWeights::Phi(state.phi.clone()))?;
                &evolving_ops
            }
            (None, None) => unreachable!("one weighting source always exists"),
        };

        // 2. CG x-update.
        let cg_out = x_update(&x, ops, &rho, &z, &p, cfg)
            .map_err(|e| Error::solver(format!("iteration {k}: x-update: {e}")))?;
        x = cg_out.x;

        // 3/4. Independent per-block z, residual, penalty, and dual
        // updates, merged in block order.
        struct BlockOut {
            z: GrayImage,
            p: GrayImage,
            rho: f64,
            r_norm: f64,
            s_norm: f64,
        }
        let x_ref = &x;
        let z_ref = &z;
        let p_ref = &p;
        let rho_ref = &rho;
        let ops_ref = &ops;
        let outs: Vec<Result<BlockOut>> = par::map_indexed(blocks, |i| {
            let tx = ops_ref[i].apply(x_ref)?;
            let z_new = if i < m {
                let (zi, _stagnated) = z_data_update(
                    &frames[i],
                    cfg.data_term,
                    &z_ref[i],
                    &tx,
                    &p_ref[i],
                    rho_ref[i],
                    cfg,
                )?;
                zi
            } else {
                z_reg_update(&tx, &p_ref[i], rho_ref[i], cfg.lambda)
            };
            let r_block = tx.axpy(-1.0, &z_new);
            let dz = z_new.axpy(-1.0, &z_ref[i]);
            let s_block = ops_ref[i].adjoint(&dz)?.scaled(-rho_ref[i]);
            let r_norm = r_block.norm();
            let s_norm = s_block.norm();
            let rho_new = if cfg.adapt_rho {
                penalty_update(rho_ref[i], r_norm, s_norm, cfg)
            } else {
                rho_ref[i]
            };
            // Dual ascent uses the penalty that weighted this iteration's
            // subproblems; the adapted value takes effect next iteration.
            let p_new = p_ref[i].axpy(rho_ref[i], &r_block);
            Ok(BlockOut { z: z_new, p: p_new, rho: rho_new, r_norm, s_norm })
        });

        let mut r_norms = Vec::with_capacity(blocks);
        let mut s_norms = Vec::with_capacity(blocks);
        for (i, out) in outs.into_iter().enumerate() {
            let out = out.map_err(|e| Error::solver(format!("iteration {k}, block {i}: {e}")))?;
            z[i] = out.z;
            p[i] = out.p;
            rho[i] = out.rho;
            r_norms.push(out.r_norm);
            s_norms.push(out.s_norm);
        }

        // Diagnostic objective at the new latent with the current weights.
        let fid_value: f64 = {
            let mut acc = 0.0;
            let mut ok = true;
            for f in frames {
                let v = match cfg.data_term {
                    DataTerm::Mpg => fidelity::mpg_value(f, &x),
                    DataTerm::L2 => fidelity::l2_value(f, &x),
                };
                match v {
                    Ok(val) => acc += val,
                    Err(_) => {
                        ok = false;
                        break;
                    }
                }
            }
            if ok {
                acc
            } else {
                f64::NAN
            }
        };
        let reg_value: f64 = if fid_value.is_nan() {
            f64::NAN
        } else {
            let mut acc = 0.0;
            for op in ops.iter().skip(m) {
                acc += op.apply(&x)?.norm_l1();
            }
            cfg.lambda * acc
        };

        let record = IterationRecord {
            iteration: k,
            objective: fid_value + reg_value,
            r_norms,
            s_norms,
            rho: rho.clone(),
            wall_ms: tick.elapsed().as_secs_f64() * 1e3,
        };
        observer(&record, &x, weight_state.as_ref());

        let r_sum: f64 = record.r_norms.iter().map(|v| v * v).sum();
        let s_sum: f64 = record.s_norms.iter().map(|v| v * v).sum();
        trace.push(record);

        // 5. Early stopping on the relative decrease of both residual
        // sums.
        if cfg.early_stop {
            if let (Some(pr), Some(ps)) = (prev_r_sum, prev_s_sum) {
                let rel_r = if pr > 0.0 { (pr - r_sum) / pr } else { 0.0 };
                let rel_s = if ps > 0.0 { (ps - s_sum) / ps } else { 0.0 };
                if rel_r < cfg.eps1 && rel_s < cfg.eps2 {
                    stopped_early = true;
                }
            }
        }
        prev_r_sum = Some(r_sum);
        prev_s_sum = Some(s_sum);
        if stopped_early {
            break;
        }
    }

    let iterations = trace.len();
    let state = AdmmState {
        x: x.clone(),
        z,
        p,
        rho,
        weights: weight_state,
        trace,
        stopped_early,
        iterations,
    };
    Ok((x, state))
}
