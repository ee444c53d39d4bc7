//! JSON run configurations and the degradation manifest.
//!
//! One JSON document per run; command-line flags (`--seed`, `--peak`,
//! `--dump-phi`) override the corresponding config fields. Unknown keys
//! are rejected so typos surface as config errors.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use bswtv::degrade::NoiseParams;
use bswtv::solver::{DataTerm, Regularizer, SolverConfig};
use bswtv::weighting::BswtvParams;

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseConfig {
    pub alpha: f64,
    #[serde(default)]
    pub mu: f64,
    pub sigma: f64,
}

impl NoiseConfig {
    pub fn to_params(self) -> Result<NoiseParams> {
        NoiseParams::new(self.alpha, self.mu, self.sigma).map_err(CliError::from)
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlurConfig {
    pub sigma: f64,
    /// Kernel radius; 1 gives the fixed 3x3 kernel of the degradation
    /// protocol.
    #[serde(default = "default_blur_radius")]
    pub radius: usize,
}

fn default_blur_radius() -> usize {
    1
}

/// Configuration of the `degrade` subcommand.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DegradeConfig {
    /// Ground-truth image (binary PGM).
    pub gt: PathBuf,
    /// Decimation factor (1 = denoising frames).
    pub factor: usize,
    /// Subpixel shifts (dx, dy), one frame per entry.
    #[serde(default = "default_shifts")]
    pub shifts: Vec<(f64, f64)>,
    /// Blur stage; omit for no blur.
    #[serde(default = "default_blur")]
    pub blur: Option<BlurConfig>,
    pub noise: NoiseConfig,
    #[serde(default)]
    pub seed: u64,
    pub out_dir: PathBuf,
    /// Rescale the ground truth so its maximum equals this peak before
    /// degradation (the synthetic-experiment convention).
    #[serde(default)]
    pub rescale_peak: Option<f64>,
    #[serde(default = "default_bit_depth")]
    pub bit_depth: u8,
}

fn default_shifts() -> Vec<(f64, f64)> {
    vec![(0.0, 0.0), (0.5, 0.0), (0.5, 0.5), (0.0, 0.5)]
}

fn default_blur() -> Option<BlurConfig> {
    Some(BlurConfig { sigma: 0.5, radius: 1 })
}

fn default_bit_depth() -> u8 {
    16
}

/// Replay manifest written next to the degraded frames; `sr`/`denoise`
/// rebuild the exact degradation operators from it.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub factor: usize,
    pub shifts: Vec<(f64, f64)>,
    pub blur: Option<BlurConfig>,
    pub noise: NoiseConfig,
    pub seed: u64,
    /// Frame files, relative to the manifest location.
    pub frames: Vec<PathBuf>,
    pub bit_depth: u8,
    /// Peak the ground truth was rescaled to, if any.
    pub rescale_peak: Option<f64>,
    /// Ground-truth path as given to `degrade` (for convenience reruns).
    pub gt: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TaskKind {
    Denoise,
    Sr,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum RegularizerConfig {
    Bswtv {
        eta: f64,
        #[serde(default = "d_gamma")]
        gamma: f64,
        #[serde(default = "d_beta0")]
        beta0: f64,
        #[serde(default = "d_patch")]
        patch: usize,
        #[serde(default = "d_sigma_phi0")]
        sigma_phi0: f64,
        #[serde(default = "d_sigma_min")]
        sigma_min: f64,
        #[serde(default = "d_amp")]
        a: f64,
        #[serde(default = "d_shift")]
        b: f64,
    },
    Nltv {
        window: usize,
        patch: usize,
        eta: f64,
    },
    Tv,
}

fn d_gamma() -> f64 {
    BswtvParams::default().gamma
}
fn d_beta0() -> f64 {
    BswtvParams::default().beta0
}
fn d_patch() -> usize {
    BswtvParams::default().patch
}
fn d_sigma_phi0() -> f64 {
    BswtvParams::default().sigma_phi0
}
fn d_sigma_min() -> f64 {
    BswtvParams::default().sigma_min
}
fn d_amp() -> f64 {
    BswtvParams::default().a
}
fn d_shift() -> f64 {
    BswtvParams::default().b
}

impl RegularizerConfig {
    pub fn to_core(&self) -> Regularizer {
        match *self {
            RegularizerConfig::Bswtv { eta, gamma, beta0, patch, sigma_phi0, sigma_min, a, b } => {
                Regularizer::Bswtv(BswtvParams {
                    eta,
                    gamma,
                    beta0,
                    patch,
                    sigma_phi0,
                    sigma_min,
                    a,
                    b,
                })
            }
            RegularizerConfig::Nltv { window, patch, eta } => {
                Regularizer::Nltv { window, patch, eta }
            }
            RegularizerConfig::Tv => Regularizer::Tv,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    pub lambda: f64,
    pub regularizer: RegularizerConfig,
    #[serde(default = "ds_rho0")]
    pub rho0: f64,
    #[serde(default = "ds_max_iter")]
    pub max_iter: usize,
    #[serde(default = "ds_c1")]
    pub c1: f64,
    #[serde(default = "ds_c1")]
    pub c2: f64,
    #[serde(default = "ds_c")]
    pub c: f64,
    #[serde(default = "ds_eps")]
    pub eps1: f64,
    #[serde(default = "ds_eps")]
    pub eps2: f64,
    #[serde(default = "ds_cg_iters")]
    pub cg_iters: usize,
    #[serde(default = "ds_cg_tol")]
    pub cg_tol: f64,
    #[serde(default = "ds_scg_iters")]
    pub scg_iters: usize,
    #[serde(default = "ds_scg_tol")]
    pub scg_tol: f64,
    #[serde(default = "ds_data_term")]
    pub data_term: String,
    #[serde(default = "ds_true")]
    pub adapt_rho: bool,
    #[serde(default = "ds_true")]
    pub early_stop: bool,
    #[serde(default = "ds_true")]
    pub phi_from_init: bool,
}

fn ds_rho0() -> f64 {
    1.0
}
fn ds_max_iter() -> usize {
    20
}
fn ds_c1() -> f64 {
    2.0
}
fn ds_c() -> f64 {
    10.0
}
fn ds_eps() -> f64 {
    1e-4
}
fn ds_cg_iters() -> usize {
    100
}
fn ds_cg_tol() -> f64 {
    1e-8
}
fn ds_scg_iters() -> usize {
    25
}
fn ds_scg_tol() -> f64 {
    1e-8
}
fn ds_data_term() -> String {
    "mpg".to_owned()
}
fn ds_true() -> bool {
    true
}

impl SolverSection {
    pub fn to_core(&self) -> Result<SolverConfig> {
        let data_term = match self.data_term.as_str() {
            "mpg" => DataTerm::Mpg,
            "l2" => DataTerm::L2,
            other => {
                return Err(CliError::config(format!(
                    "data_term must be \"mpg\" or \"l2\", got {other:?}"
                )))
            }
        };
        let cfg = SolverConfig {
            lambda: self.lambda,
            rho0: self.rho0,
            max_iter: self.max_iter,
            c1: self.c1,
            c2: self.c2,
            c: self.c,
            eps1: self.eps1,
            eps2: self.eps2,
            cg_iters: self.cg_iters,
            cg_tol: self.cg_tol,
            scg_iters: self.scg_iters,
            scg_tol: self.scg_tol,
            regularizer: self.regularizer.to_core(),
            data_term,
            adapt_rho: self.adapt_rho,
            early_stop: self.early_stop,
            phi_from_init: self.phi_from_init,
        };
        cfg.validate().map_err(CliError::from)?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub image: PathBuf,
    #[serde(default)]
    pub csv: Option<PathBuf>,
    #[serde(default = "default_bit_depth")]
    pub bit_depth: u8,
    /// Dynamic range used for the per-iteration and final PSNR/SSIM.
    #[serde(default = "default_peak")]
    pub peak: f64,
    /// Directory receiving per-iteration weighting-map dumps.
    #[serde(default)]
    pub dump_phi_dir: Option<PathBuf>,
    /// Record wall-clock times in the CSV. Off by default so identical
    /// runs produce byte-identical logs.
    #[serde(default)]
    pub timing: bool,
}

fn default_peak() -> f64 {
    255.0
}

/// Configuration of the `denoise` and `sr` subcommands.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub task: TaskKind,
    #[serde(default = "ds_upscale")]
    pub upscale: usize,
    /// Direct frame paths (used when no manifest is given; denoising).
    #[serde(default)]
    pub frames: Vec<PathBuf>,
    /// Degradation manifest to replay (usual route for SR).
    #[serde(default)]
    pub manifest: Option<PathBuf>,
    /// Optional reference image for quality reporting.
    #[serde(default)]
    pub gt: Option<PathBuf>,
    /// Noise parameters; required when frames are given directly.
    #[serde(default)]
    pub noise: Option<NoiseConfig>,
    pub solver: SolverSection,
    #[serde(default)]
    pub seed: u64,
    pub output: OutputSection,
}

fn ds_upscale() -> usize {
    1
}

/// Configuration of the `sweep` subcommand: run the base config once per
/// value of one parameter, each run fully isolated in `out_dir`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    /// One of: "rho0", "lambda", "eta", "gamma", "regularizer".
    pub param: String,
    pub values: Vec<serde_json::Value>,
    pub base: RunConfig,
    pub out_dir: PathBuf,
}

pub fn load_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::io(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::config(format!("{}: {e}", path.display())))
}

pub fn save_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::config(e.to_string()))?;
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)
                .map_err(|e| CliError::io(format!("{}: {e}", parent.display())))?;
        }
    }
    fs::write(path, text + "\n").map_err(|e| CliError::io(format!("{}: {e}", path.display())))
}
