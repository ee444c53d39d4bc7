//! Composable linear degradation operators `A = DBM` with exact adjoints,
//! plus the mixed Poisson-Gaussian noise simulator used to fabricate
//! low-resolution test frames.
//!
//! Every operator kind implements a gather-style forward pass and the
//! exact transpose as a scatter, so the adjoint inner-product identity
//! `<A u, v> = <u, A' v>` holds to machine precision including the
//! replicate-boundary clamping. Scatters run sequentially; they are cheap
//! and a parallel scatter would race.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Normal, Poisson};

use crate::error::{Error, Result};
use crate::image::{convolve, GrayImage, Kernel2D};
use crate::par;

/// One stage of a degradation chain.
#[derive(Debug, Clone)]
pub enum OpKind {
    Identity,
    /// Bilinear warp by a fractional offset: `out(i, j)` samples the input
    /// at `(i + dy, j + dx)`, replicate boundary. Linear in the input.
    ShiftSubpixel { dx: f64, dy: f64 },
    /// Correlation with a (typically Gaussian) kernel, replicate boundary.
    Blur(Kernel2D),
    /// Pure decimation: keeps every `factor`-th pixel starting at (0, 0).
    /// Anti-aliasing is the blur stage's job.
    Downsample { factor: usize },
    /// `Phi (S_d - I)`: one-pixel-family shifted difference scaled by a
    /// per-pixel weight map, where `S_d x (i, j) = x(i + dy, j + dx)`.
    /// These are the TV / NLTV constraint operators.
    WeightedDiff { phi: GrayImage, dx: isize, dy: isize },
    /// Stages applied first-to-last, so `A = DBM` is
    /// `compose([M, B, D])`.
    Compose(Vec<LinearOp>),
}

/// A linear operator with matched forward and adjoint applications and
/// explicit `(height, width)` shapes.
#[derive(Debug, Clone)]
pub struct LinearOp {
    in_shape: (usize, usize),
    out_shape: (usize, usize),
    kind: OpKind,
}

impl LinearOp {
    pub fn identity(shape: (usize, usize)) -> Self {
        Self { in_shape: shape, out_shape: shape, kind: OpKind::Identity }
    }

    pub fn shift_subpixel(shape: (usize, usize), dx: f64, dy: f64) -> Self {
        Self { in_shape: shape, out_shape: shape, kind: OpKind::ShiftSubpixel { dx, dy } }
    }

    pub fn blur(shape: (usize, usize), kernel: Kernel2D) -> Self {
        Self { in_shape: shape, out_shape: shape, kind: OpKind::Blur(kernel) }
    }

    pub fn downsample(shape: (usize, usize), factor: usize) -> Result<Self> {
        if factor == 0 {
            return Err(Error::invalid("downsample factor must be at least 1"));
        }
        if shape.0 % factor != 0 || shape.1 % factor != 0 {
            return Err(Error::invalid(format!(
                "shape {}x{} not divisible by downsample factor {factor}",
                shape.0, shape.1
            )));
        }
        Ok(Self {
            in_shape: shape,
            out_shape: (shape.0 / factor, shape.1 / factor),
            kind: OpKind::Downsample { factor },
        })
    }

    pub fn weighted_diff(phi: GrayImage, dx: isize, dy: isize) -> Self {
        let shape = phi.shape();
        Self { in_shape: shape, out_shape: shape, kind: OpKind::WeightedDiff { phi, dx, dy } }
    }

    /// Chain stages; each stage's output shape must match the next
    /// stage's input shape.
    pub fn compose(stages: Vec<LinearOp>) -> Result<Self> {
        if stages.is_empty() {
            return Err(Error::invalid("composition needs at least one stage"));
        }
        for pair in stages.windows(2) {
            if pair[0].out_shape != pair[1].in_shape {
                return Err(Error::invalid(format!(
                    "composition shape break: {:?} feeds {:?}",
                    pair[0].out_shape, pair[1].in_shape
                )));
            }
        }
        Ok(Self {
            in_shape: stages.first().unwrap().in_shape,
            out_shape: stages.last().unwrap().out_shape,
            kind: OpKind::Compose(stages),
        })
    }

    pub fn in_shape(&self) -> (usize, usize) {
        self.in_shape
    }

    pub fn out_shape(&self) -> (usize, usize) {
        self.out_shape
    }

    pub fn kind(&self) -> &OpKind {
        &self.kind
    }

    /// Forward action `A x`.
    pub fn apply(&self, x: &GrayImage) -> Result<GrayImage> {
        if x.shape() != self.in_shape {
            return Err(Error::invalid(format!(
                "apply: input shape {:?} does not match operator {:?}",
                x.shape(),
                self.in_shape
            )));
        }
        Ok(match &self.kind {
            OpKind::Identity => x.clone(),
            OpKind::ShiftSubpixel { dx, dy } => warp_forward(x, *dx, *dy),
            OpKind::Blur(k) => convolve(x, k),
            OpKind::Downsample { factor } => {
                let (oh, ow) = self.out_shape;
                let f = *factor;
                let mut out = GrayImage::zeros(ow, oh);
                par::fill_rows(out.data_mut(), ow, |i, row| {
                    for (j, o) in row.iter_mut().enumerate() {
                        *o = x.at(i * f, j * f);
                    }
                });
                out
            }
            OpKind::WeightedDiff { phi, dx, dy } => {
                let (h, w) = x.shape();
                let mut out = GrayImage::zeros(w, h);
                par::fill_rows(out.data_mut(), w, |i, row| {
                    for (j, o) in row.iter_mut().enumerate() {
                        let shifted = x.at_clamped(i as isize + dy, j as isize + dx);
                        *o = phi.at(i, j) * (shifted - x.at(i, j));
                    }
                });
                out
            }
            OpKind::Compose(stages) => {
                let mut cur = x.clone();
                for s in stages {
                    cur = s.apply(&cur)?;
                }
                cur
            }
        })
    }

    /// Adjoint action `A' y`: the exact transpose of `apply`'s matrix
    /// representation, composition adjoints in reverse stage order.
    pub fn adjoint(&self, y: &GrayImage) -> Result<GrayImage> {
        if y.shape() != self.out_shape {
            return Err(Error::invalid(format!(
                "adjoint: input shape {:?} does not match operator {:?}",
                y.shape(),
                self.out_shape
            )));
        }
        Ok(match &self.kind {
            OpKind::Identity => y.clone(),
            OpKind::ShiftSubpixel { dx, dy } => warp_adjoint(y, *dx, *dy),
            OpKind::Blur(k) => blur_adjoint(y, k),
            OpKind::Downsample { factor } => {
                let (ih, iw) = self.in_shape;
                let f = *factor;
                let mut out = GrayImage::zeros(iw, ih);
                for i in 0..y.height() {
                    for j in 0..y.width() {
                        out.set(i * f, j * f, y.at(i, j));
                    }
                }
                out
            }
            OpKind::WeightedDiff { phi, dx, dy } => {
                let (h, w) = y.shape();
                let t = phi.zip_map(y, |p, v| p * v);
                let mut out = GrayImage::zeros(w, h);
                // S' scatter minus the identity part.
                for i in 0..h {
                    for j in 0..w {
                        let si = (i as isize + dy).clamp(0, h as isize - 1) as usize;
                        let sj = (j as isize + dx).clamp(0, w as isize - 1) as usize;
                        let v = t.at(i, j);
                        out.set(si, sj, out.at(si, sj) + v);
                        out.set(i, j, out.at(i, j) - v);
                    }
                }
                out
            }
            OpKind::Compose(stages) => {
                let mut cur = y.clone();
                for s in stages.iter().rev() {
                    cur = s.adjoint(&cur)?;
                }
                cur
            }
        })
    }
}

fn warp_forward(x: &GrayImage, dx: f64, dy: f64) -> GrayImage {
    let (h, w) = x.shape();
    let mut out = GrayImage::zeros(w, h);
    par::fill_rows(out.data_mut(), w, |i, row| {
        let sy = i as f64 + dy;
        let y0 = sy.floor();
        let fy = sy - y0;
        for (j, o) in row.iter_mut().enumerate() {
            let sx = j as f64 + dx;
            let x0 = sx.floor();
            let fx = sx - x0;
            let (y0, x0) = (y0 as isize, x0 as isize);
            *o = (1.0 - fy) * (1.0 - fx) * x.at_clamped(y0, x0)
                + (1.0 - fy) * fx * x.at_clamped(y0, x0 + 1)
                + fy * (1.0 - fx) * x.at_clamped(y0 + 1, x0)
                + fy * fx * x.at_clamped(y0 + 1, x0 + 1);
        }
    });
    out
}

fn warp_adjoint(y: &GrayImage, dx: f64, dy: f64) -> GrayImage {
    let (h, w) = y.shape();
    let mut out = GrayImage::zeros(w, h);
    let clamp = |i: isize, lim: usize| i.clamp(0, lim as isize - 1) as usize;
    for i in 0..h {
        let sy = i as f64 + dy;
        let y0 = sy.floor();
        let fy = sy - y0;
        let y0 = y0 as isize;
        for j in 0..w {
            let sx = j as f64 + dx;
            let x0 = sx.floor();
            let fx = sx - x0;
            let x0 = x0 as isize;
            let v = y.at(i, j);
            for (ci, cj, wgt) in [
                (y0, x0, (1.0 - fy) * (1.0 - fx)),
                (y0, x0 + 1, (1.0 - fy) * fx),
                (y0 + 1, x0, fy * (1.0 - fx)),
                (y0 + 1, x0 + 1, fy * fx),
            ] {
                let (ci, cj) = (clamp(ci, h), clamp(cj, w));
                out.set(ci, cj, out.at(ci, cj) + wgt * v);
            }
        }
    }
    out
}

fn blur_adjoint(y: &GrayImage, k: &Kernel2D) -> GrayImage {
    let (h, w) = y.shape();
    let mut out = GrayImage::zeros(w, h);
    let r = k.radius() as isize;
    for i in 0..h as isize {
        for j in 0..w as isize {
            let v = y.at(i as usize, j as usize);
            for u in -r..=r {
                for t in -r..=r {
                    let ci = (i + u).clamp(0, h as isize - 1) as usize;
                    let cj = (j + t).clamp(0, w as isize - 1) as usize;
                    out.set(ci, cj, out.at(ci, cj) + k.at(u, t) * v);
                }
            }
        }
    }
    out
}

/// Mixed Poisson-Gaussian noise parameters of one frame: gain `alpha`,
/// Gaussian mean `mu` and standard deviation `sigma`.
///
/// `sigma = 0` is accepted so the simulator has an exact noiseless limit;
/// the likelihood side guards its denominators with
/// [`crate::fidelity::DOMAIN_FLOOR`] instead.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseParams {
    pub alpha: f64,
    pub mu: f64,
    pub sigma: f64,
}

impl NoiseParams {
    pub fn new(alpha: f64, mu: f64, sigma: f64) -> Result<Self> {
        if !(alpha >= 0.0) || !alpha.is_finite() {
            return Err(Error::invalid(format!("alpha must be finite and >= 0, got {alpha}")));
        }
        if !(sigma >= 0.0) || !sigma.is_finite() {
            return Err(Error::invalid(format!("sigma must be finite and >= 0, got {sigma}")));
        }
        if !mu.is_finite() {
            return Err(Error::invalid("mu must be finite"));
        }
        Ok(Self { alpha, mu, sigma })
    }

    /// Pure Gaussian noise (no signal-dependent component).
    pub fn gaussian(mu: f64, sigma: f64) -> Result<Self> {
        Self::new(0.0, mu, sigma)
    }

    pub fn noiseless() -> Self {
        Self { alpha: 0.0, mu: 0.0, sigma: 0.0 }
    }
}

/// One observed frame: the observation `y_i`, its degradation operator
/// `A_i`, and its noise parameters.
#[derive(Debug, Clone)]
pub struct FrameModel {
    pub observation: GrayImage,
    pub op: LinearOp,
    pub noise: NoiseParams,
    /// Optional per-pixel Gaussian std overriding the scalar `noise.sigma`
    /// in the likelihood; shaped like the observation.
    pub sigma_map: Option<GrayImage>,
}

impl FrameModel {
    pub fn new(observation: GrayImage, op: LinearOp, noise: NoiseParams) -> Result<Self> {
        if op.out_shape() != observation.shape() {
            return Err(Error::invalid(format!(
                "frame operator output shape {:?} does not match observation {:?}",
                op.out_shape(),
                observation.shape()
            )));
        }
        Ok(Self { observation, op, noise, sigma_map: None })
    }

    pub fn with_sigma_map(mut self, sigma_map: GrayImage) -> Result<Self> {
        if !sigma_map.same_shape(&self.observation) {
            return Err(Error::invalid("sigma map shape does not match observation"));
        }
        self.sigma_map = Some(sigma_map);
        Ok(self)
    }
}

/// Corrupt a clean image with mixed Poisson-Gaussian noise:
/// `y = alpha * k + mu + sigma * n` with `k ~ Poisson(z / alpha)` and
/// `n ~ N(0, 1)`, per pixel. Deterministic given the seed.
pub fn add_mpg_noise(clean: &GrayImage, noise: &NoiseParams, seed: u64) -> Result<GrayImage> {
    if noise.alpha > 0.0 {
        if let Some(bad) = clean.data().iter().find(|&&z| z < 0.0) {
            return Err(Error::invalid(format!(
                "Poisson rate must be nonnegative: clean value {bad} with alpha {}",
                noise.alpha
            )));
        }
    }
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let gauss = Normal::new(0.0, 1.0).expect("unit normal");
    let mut out = clean.clone();
    for v in out.data_mut() {
        let mut y = if noise.alpha > 0.0 {
            let mean = *v / noise.alpha;
            let k = if mean > 0.0 {
                Poisson::new(mean).expect("positive Poisson mean").sample(&mut rng)
            } else {
                0.0
            };
            noise.alpha * k
        } else {
            *v
        };
        y += noise.mu;
        if noise.sigma > 0.0 {
            y += noise.sigma * gauss.sample(&mut rng);
        }
        *v = y;
    }
    Ok(out)
}

/// Fabricate low-resolution frames from a ground-truth image: for each
/// subpixel shift, compose `A_i = D B M_i` (skipping absent stages),
/// apply it, and corrupt the result with an independent noise stream
/// derived as `seed + frame_index`.
pub fn make_lr_frames(
    gt: &GrayImage,
    shifts: &[(f64, f64)],
    blur: Option<&Kernel2D>,
    factor: usize,
    noise: &NoiseParams,
    seed: u64,
) -> Result<Vec<FrameModel>> {
    if factor == 0 {
        return Err(Error::invalid("decimation factor must be at least 1"));
    }
    if gt.height() % factor != 0 || gt.width() % factor != 0 {
        return Err(Error::invalid(format!(
            "ground truth {}x{} not divisible by factor {factor}",
            gt.height(),
            gt.width()
        )));
    }
    if shifts.is_empty() {
        return Err(Error::invalid("at least one shift is required"));
    }
    let shape = gt.shape();
    let frames: Vec<Result<FrameModel>> = par::map_indexed(shifts.len(), |idx| {
        let (dx, dy) = shifts[idx];
        let mut stages = vec![LinearOp::shift_subpixel(shape, dx, dy)];
        if let Some(k) = blur {
            stages.push(LinearOp::blur(shape, k.clone()));
        }
        if factor > 1 {
            stages.push(LinearOp::downsample(shape, factor)?);
        }
        let op = LinearOp::compose(stages)?;
        let clean = op.apply(gt)?;
        let observation = add_mpg_noise(&clean, noise, seed.wrapping_add(idx as u64))?;
        FrameModel::new(observation, op, *noise)
    });
    frames.into_iter().collect()
}
