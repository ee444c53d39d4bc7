//! Iteration CSV writer with the fixed column order
//! `iter,objective,sum_r2,sum_s2,rho_min,rho_max,psnr_db,ssim,wall_ms`.
//!
//! PSNR/SSIM cells are empty without a reference image; `wall_ms` is
//! empty unless timing was requested, keeping default logs byte-identical
//! across replays.

use std::fmt::Write as _;

use bswtv::solver::IterationRecord;

pub const CSV_HEADER: &str = "iter,objective,sum_r2,sum_s2,rho_min,rho_max,psnr_db,ssim,wall_ms";

/// One row of quality numbers attached to an iteration record.
#[derive(Debug, Clone, Copy)]
pub struct QualityCells {
    pub psnr_db: f64,
    pub ssim: f64,
}

fn fmt_float(v: f64) -> String {
    if v.is_nan() {
        "nan".to_owned()
    } else if v.is_infinite() {
        if v > 0.0 { "inf".to_owned() } else { "-inf".to_owned() }
    } else {
        format!("{v:.10e}")
    }
}

pub fn format_row(
    record: &IterationRecord,
    quality: Option<QualityCells>,
    timing: bool,
) -> String {
    let sum_r2: f64 = record.r_norms.iter().map(|v| v * v).sum();
    let sum_s2: f64 = record.s_norms.iter().map(|v| v * v).sum();
    let rho_min = record.rho.iter().cloned().fold(f64::INFINITY, f64::min);
    let rho_max = record.rho.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut row = String::new();
    write!(
        row,
        "{},{},{},{},{},{}",
        record.iteration,
        fmt_float(record.objective),
        fmt_float(sum_r2),
        fmt_float(sum_s2),
        fmt_float(rho_min),
        fmt_float(rho_max),
    )
    .expect("in-memory write");
    match quality {
        Some(q) => {
            write!(row, ",{},{}", fmt_float(q.psnr_db), fmt_float(q.ssim)).expect("write")
        }
        None => row.push_str(",,"),
    }
    if timing {
        write!(row, ",{:.3}", record.wall_ms).expect("write");
    } else {
        row.push(',');
    }
    row
}
