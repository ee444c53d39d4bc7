//! Implementations of the five subcommands.

use std::fs;
use std::path::{Path, PathBuf};

use bswtv::degrade::{make_lr_frames, FrameModel, LinearOp};
use bswtv::image::gaussian_kernel_with_radius;
use bswtv::metrics;
use bswtv::solver::{initial_estimate, solve_with_observer, AdmmState};
use bswtv::GrayImage;

use crate::config::{
    load_json, save_json, DegradeConfig, Manifest, RegularizerConfig, RunConfig, SweepConfig,
    TaskKind,
};
use crate::csvlog::{self, QualityCells};
use crate::error::{CliError, Result};
use crate::pgm;

/// Command-line flag overrides; flags win over config fields.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub peak: Option<f64>,
    pub dump_phi: bool,
}

/// `degrade`: fabricate low-resolution frames from a ground-truth image
/// and write them next to a replay manifest.
pub fn cmd_degrade(config_path: &Path, overrides: &Overrides) -> Result<()> {
    let mut cfg: DegradeConfig = load_json(config_path)?;
    if let Some(seed) = overrides.seed {
        cfg.seed = seed;
    }
    let gt = pgm::read_image(&cfg.gt)?.image;
    let gt = match cfg.rescale_peak {
        Some(peak) => {
            // Rejects NaN along with nonpositive values.
            #[allow(clippy::neg_cmp_op_on_partial_ord)]
            if !(peak > 0.0) {
                return Err(CliError::config(format!("rescale_peak must be positive, got {peak}")));
            }
            let max = gt.data().iter().cloned().fold(f64::MIN, f64::max);
            if max <= 0.0 {
                return Err(CliError::config("cannot rescale an all-nonpositive image"));
            }
            gt.map(|v| v * peak / max)
        }
        None => gt,
    };
    let kernel = match &cfg.blur {
        Some(b) => Some(
            gaussian_kernel_with_radius(b.sigma, b.radius).map_err(CliError::from)?,
        ),
        None => None,
    };
    let noise = cfg.noise.to_params()?;
    let frames = make_lr_frames(&gt, &cfg.shifts, kernel.as_ref(), cfg.factor, &noise, cfg.seed)
        .map_err(CliError::from)?;

    fs::create_dir_all(&cfg.out_dir)
        .map_err(|e| CliError::io(format!("{}: {e}", cfg.out_dir.display())))?;
    let mut frame_files = Vec::new();
    let mut total_clamped = 0usize;
    for (idx, frame) in frames.iter().enumerate() {
        let name = PathBuf::from(format!("frame_{idx:03}.pgm"));
        total_clamped +=
            pgm::write_image(&cfg.out_dir.join(&name), &frame.observation, cfg.bit_depth)?;
        frame_files.push(name);
    }
    if total_clamped > 0 {
        eprintln!("warning: {total_clamped} out-of-range pixels clamped while writing frames");
    }
    let manifest = Manifest {
        factor: cfg.factor,
        shifts: cfg.shifts.clone(),
        blur: cfg.blur,
        noise: cfg.noise,
        seed: cfg.seed,
        frames: frame_files,
        bit_depth: cfg.bit_depth,
        rescale_peak: cfg.rescale_peak,
        gt: Some(cfg.gt.clone()),
    };
    let manifest_path = cfg.out_dir.join("manifest.json");
    save_json(&manifest_path, &manifest)?;
    println!(
        "{}",
        serde_json::json!({
            "command": "degrade",
            "frames": frames.len(),
            "frame_shape": [frames[0].observation.height(), frames[0].observation.width()],
            "manifest": manifest_path,
        })
    );
    Ok(())
}

/// Resolve the frame models a restore run works on.
fn resolve_frames(cfg: &RunConfig) -> Result<Vec<FrameModel>> {
    if let Some(manifest_path) = &cfg.manifest {
        let manifest: Manifest = load_json(manifest_path)?;
        if manifest.factor != cfg.upscale {
            return Err(CliError::config(format!(
                "manifest factor {} does not match configured upscale {}",
                manifest.factor, cfg.upscale
            )));
        }
        let base = manifest_path.parent().unwrap_or_else(|| Path::new("."));
        let noise = manifest.noise.to_params()?;
        let kernel = match &manifest.blur {
            Some(b) => Some(
                gaussian_kernel_with_radius(b.sigma, b.radius).map_err(CliError::from)?,
            ),
            None => None,
        };
        let mut frames = Vec::new();
        for (idx, rel) in manifest.frames.iter().enumerate() {
            let observation = pgm::read_image(&base.join(rel))?.image;
            let (lh, lw) = observation.shape();
            let hr_shape = (lh * manifest.factor, lw * manifest.factor);
            let (dx, dy) = manifest.shifts.get(idx).copied().ok_or_else(|| {
                CliError::config(format!("manifest lists {idx} shifts but more frames", ))
            })?;
            let mut stages = vec![LinearOp::shift_subpixel(hr_shape, dx, dy)];
            if let Some(k) = &kernel {
                stages.push(LinearOp::blur(hr_shape, k.clone()));
            }
            if manifest.factor > 1 {
                stages.push(LinearOp::downsample(hr_shape, manifest.factor).map_err(CliError::from)?);
            }
            let op = LinearOp::compose(stages).map_err(CliError::from)?;
            frames.push(FrameModel::new(observation, op, noise).map_err(CliError::from)?);
        }
        Ok(frames)
    } else {
        if cfg.frames.is_empty() {
            return Err(CliError::config("either frames or a manifest must be given"));
        }
        if cfg.task == TaskKind::Sr {
            return Err(CliError::config(
                "sr needs a degradation manifest (the operators are unknown otherwise)",
            ));
        }
        let noise = cfg
            .noise
            .ok_or_else(|| CliError::config("noise parameters are required with direct frames"))?
            .to_params()?;
        let mut frames = Vec::new();
        for path in &cfg.frames {
            let observation = pgm::read_image(path)?.image;
            let op = LinearOp::identity(observation.shape());
            frames.push(FrameModel::new(observation, op, noise).map_err(CliError::from)?);
        }
        Ok(frames)
    }
}

/// Outcome of a restore run, reused by `sweep`.
pub struct RestoreOutcome {
    pub iterations: usize,
    pub stopped_early: bool,
    pub quality: Option<metrics::QualityReport>,
}

/// `denoise` / `sr`: run the solver end to end, write the restored
/// image, the per-iteration CSV, and optional weighting-map dumps.
pub fn cmd_restore(task: TaskKind, config_path: &Path, overrides: &Overrides) -> Result<RestoreOutcome> {
    let mut cfg: RunConfig = load_json(config_path)?;
    if cfg.task != task {
        return Err(CliError::config(format!(
            "config task {:?} does not match the invoked subcommand",
            cfg.task
        )));
    }
    if let Some(seed) = overrides.seed {
        cfg.seed = seed;
    }
    if let Some(peak) = overrides.peak {
        cfg.output.peak = peak;
    }
    if overrides.dump_phi && cfg.output.dump_phi_dir.is_none() {
        let parent = cfg.output.image.parent().unwrap_or_else(|| Path::new(".")).to_path_buf();
        cfg.output.dump_phi_dir = Some(parent.join("phi"));
    }
    match cfg.task {
        TaskKind::Denoise => {
            if cfg.upscale != 1 {
                return Err(CliError::config("denoise fixes upscale = 1"));
            }
        }
        TaskKind::Sr => {
            if cfg.upscale < 2 {
                return Err(CliError::config("sr requires upscale >= 2"));
            }
        }
    }

    let frames = resolve_frames(&cfg)?;
    let gt = match &cfg.gt {
        Some(path) => Some(pgm::read_image(path)?.image),
        None => None,
    };
    let solver_cfg = cfg.solver.to_core()?;
    let init = initial_estimate(&frames[0].observation, cfg.upscale).map_err(CliError::from)?;
    if let Some(gt) = &gt {
        if gt.shape() != init.shape() {
            return Err(CliError::config(format!(
                "reference shape {:?} does not match latent shape {:?}",
                gt.shape(),
                init.shape()
            )));
        }
    }

    if let Some(dir) = &cfg.output.dump_phi_dir {
        fs::create_dir_all(dir).map_err(|e| CliError::io(format!("{}: {e}", dir.display())))?;
    }

    let peak = cfg.output.peak;
    let timing = cfg.output.timing;
    let mut rows: Vec<String> = Vec::new();
    let mut dump_err: Option<CliError> = None;
    let (x, state): (GrayImage, AdmmState) = solve_with_observer(
        &frames,
        &solver_cfg,
        &init,
        |record, x, weights| {
            let quality = gt.as_ref().map(|gt| QualityCells {
                psnr_db: metrics::psnr(gt, x, peak).unwrap_or(f64::NAN),
                ssim: metrics::ssim(gt, x, peak).unwrap_or(f64::NAN),
            });
            rows.push(csvlog::format_row(record, quality, timing));
            if let (Some(dir), Some(ws)) = (&cfg.output.dump_phi_dir, weights) {
                if dump_err.is_none() {
                    let k = record.iteration;
                    let phi16 = ws.phi.map(|v| v * 65535.0);
                    let xi16 = ws.xi.map(|v| v * 65535.0);
                    let r = pgm::write_image(&dir.join(format!("phi_{k:03}.pgm")), &phi16, 16)
                        .and_then(|_| {
                            pgm::write_image(&dir.join(format!("xi_{k:03}.pgm")), &xi16, 16)
                        });
                    if let Err(e) = r {
                        dump_err = Some(e);
                    }
                }
            }
        },
    )
    .map_err(CliError::from)?;
    if let Some(e) = dump_err {
        return Err(e);
    }

    let clamped = pgm::write_image(&cfg.output.image, &x, cfg.output.bit_depth)?;
    if clamped > 0 {
        eprintln!("warning: {clamped} out-of-range pixels clamped while writing the result");
    }
    if let Some(csv_path) = &cfg.output.csv {
        let mut text = String::from(csvlog::CSV_HEADER);
        text.push('\n');
        for row in &rows {
            text.push_str(row);
            text.push('\n');
        }
        if let Some(parent) = csv_path.parent() {
            if !parent.as_os_str().is_empty() {
                fs::create_dir_all(parent)
                    .map_err(|e| CliError::io(format!("{}: {e}", parent.display())))?;
            }
        }
        fs::write(csv_path, text).map_err(|e| CliError::io(format!("{}: {e}", csv_path.display())))?;
    }

    let quality = match &gt {
        Some(gt) => Some(metrics::quality_report(gt, &x, peak).map_err(CliError::from)?),
        None => None,
    };
    println!(
        "{}",
        serde_json::json!({
            "command": match task { TaskKind::Denoise => "denoise", TaskKind::Sr => "sr" },
            "iterations": state.iterations,
            "stopped_early": state.stopped_early,
            "seed": cfg.seed,
            "output": cfg.output.image,
            "quality": quality.map(|q| serde_json::json!({
                "psnr_db": q.psnr_db,
                "ssim": q.ssim,
                "mse": q.mse,
            })),
        })
    );
    Ok(RestoreOutcome {
        iterations: state.iterations,
        stopped_early: state.stopped_early,
        quality,
    })
}

/// `eval`: PSNR/SSIM/MSE between a reference and a test image.
pub fn cmd_eval(reference: &Path, test: &Path, peak: f64) -> Result<()> {
    let r = pgm::read_image(reference)?.image;
    let t = pgm::read_image(test)?.image;
    let q = metrics::quality_report(&r, &t, peak).map_err(CliError::from)?;
    println!(
        "{}",
        serde_json::json!({
            "command": "eval",
            "psnr_db": q.psnr_db,
            "ssim": q.ssim,
            "mse": q.mse,
        })
    );
    Ok(())
}

fn value_label(value: &serde_json::Value) -> String {
    match value {
        serde_json::Value::Number(n) => n.to_string(),
        serde_json::Value::String(s) => s.clone(),
        serde_json::Value::Object(map) => map
            .get("type")
            .and_then(|t| t.as_str())
            .map(str::to_owned)
            .unwrap_or_else(|| "object".to_owned()),
        other => other.to_string(),
    }
}

fn apply_sweep_value(cfg: &mut RunConfig, param: &str, value: &serde_json::Value) -> Result<()> {
    let as_f64 = || {
        value
            .as_f64()
            .ok_or_else(|| CliError::config(format!("sweep value {value} is not a number")))
    };
    match param {
        "rho0" => cfg.solver.rho0 = as_f64()?,
        "lambda" => cfg.solver.lambda = as_f64()?,
        "eta" => match &mut cfg.solver.regularizer {
            RegularizerConfig::Bswtv { eta, .. } => *eta = as_f64()?,
            RegularizerConfig::Nltv { eta, .. } => *eta = as_f64()?,
            RegularizerConfig::Tv => {
                return Err(CliError::config("plain TV has no eta to sweep"))
            }
        },
        "gamma" => match &mut cfg.solver.regularizer {
            RegularizerConfig::Bswtv { gamma, .. } => *gamma = as_f64()?,
            _ => return Err(CliError::config("gamma only applies to the bswtv regularizer")),
        },
        "regularizer" => {
            cfg.solver.regularizer = serde_json::from_value(value.clone())
                .map_err(|e| CliError::config(format!("bad regularizer value: {e}")))?;
        }
        other => {
            return Err(CliError::config(format!(
                "unknown sweep parameter {other:?} (expected rho0, lambda, eta, gamma, or regularizer)"
            )))
        }
    }
    Ok(())
}

/// `sweep`: run the base config once per parameter value; one CSV and
/// restored image per run plus a summary CSV.
pub fn cmd_sweep(config_path: &Path, overrides: &Overrides) -> Result<()> {
    let sweep: SweepConfig = load_json(config_path)?;
    if sweep.values.is_empty() {
        return Err(CliError::config("sweep needs at least one value"));
    }
    fs::create_dir_all(&sweep.out_dir)
        .map_err(|e| CliError::io(format!("{}: {e}", sweep.out_dir.display())))?;

    let mut summary = String::from("param,value,iterations,psnr_db,ssim\n");
    for value in &sweep.values {
        let mut run = sweep.base.clone();
        apply_sweep_value(&mut run, &sweep.param, value)?;
        let label = value_label(value);
        run.output.image = sweep.out_dir.join(format!("run_{}_{label}.pgm", sweep.param));
        run.output.csv = Some(sweep.out_dir.join(format!("run_{}_{label}.csv", sweep.param)));
        if let Some(dir) = run.output.dump_phi_dir.take() {
            let _ = dir;
            run.output.dump_phi_dir =
                Some(sweep.out_dir.join(format!("phi_{}_{label}", sweep.param)));
        }
        let run_path = sweep.out_dir.join(format!("run_{}_{label}.json", sweep.param));
        save_json(&run_path, &run)?;
        let outcome = cmd_restore(run.task, &run_path, overrides)?;
        let (psnr, ssim) = match outcome.quality {
            Some(q) => (format!("{:.6}", q.psnr_db), format!("{:.6}", q.ssim)),
            None => (String::new(), String::new()),
        };
        summary.push_str(&format!(
            "{},{},{},{},{}\n",
            sweep.param, label, outcome.iterations, psnr, ssim
        ));
    }
    let summary_path = sweep.out_dir.join("summary.csv");
    fs::write(&summary_path, summary)
        .map_err(|e| CliError::io(format!("{}: {e}", summary_path.display())))?;
    println!(
        "{}",
        serde_json::json!({
            "command": "sweep",
            "param": sweep.param,
            "runs": sweep.values.len(),
            "summary": summary_path,
        })
    );
    Ok(())
}
