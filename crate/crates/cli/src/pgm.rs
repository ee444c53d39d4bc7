//! Binary PGM (P5) reader/writer for 8-bit and 16-bit grayscale images.
//! 16-bit samples are big-endian per the format specification, which
//! keeps files bit-exact across platforms. Values are carried as raw
//! integers in `f64` (no normalization); conversion back to integers
//! rounds and clamps, reporting how many pixels were clamped.

use std::fs;
use std::io::Write;
use std::path::Path;

use bswtv::GrayImage;

use crate::error::{CliError, Result};

/// Parsed image plus the maxval-derived bit depth (8 or 16).
#[derive(Debug)]
pub struct PgmImage {
    pub image: GrayImage,
    pub bit_depth: u8,
}

fn parse_error(path: &Path, offset: usize, msg: impl Into<String>) -> CliError {
    CliError::io(format!("{}: byte {offset}: {}", path.display(), msg.into()))
}

/// Skip whitespace and `#` comment lines, advancing the cursor.
fn skip_separators(bytes: &[u8], mut pos: usize) -> usize {
    loop {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if pos < bytes.len() && bytes[pos] == b'#' {
            while pos < bytes.len() && bytes[pos] != b'\n' {
                pos += 1;
            }
            continue;
        }
        return pos;
    }
}

fn parse_number(path: &Path, bytes: &[u8], pos: usize) -> Result<(u64, usize)> {
    let mut end = pos;
    while end < bytes.len() && bytes[end].is_ascii_digit() {
        end += 1;
    }
    if end == pos {
        return Err(parse_error(path, pos, "expected ASCII decimal value"));
    }
    let text = std::str::from_utf8(&bytes[pos..end]).expect("digits are utf8");
    let value = text
        .parse::<u64>()
        .map_err(|e| parse_error(path, pos, format!("bad number: {e}")))?;
    Ok((value, end))
}

/// Read a binary PGM file. Maxval up to 255 reads one byte per pixel,
/// up to 65535 two big-endian bytes.
pub fn read_image(path: &Path) -> Result<PgmImage> {
    let bytes = fs::read(path)
        .map_err(|e| CliError::io(format!("{}: {e}", path.display())))?;
    if bytes.len() < 2 || &bytes[0..2] != b"P5" {
        return Err(parse_error(path, 0, "expected magic \"P5\" (binary PGM)"));
    }
    let pos = skip_separators(&bytes, 2);
    let (width, pos) = parse_number(path, &bytes, pos)?;
    let pos = skip_separators(&bytes, pos);
    let (height, pos) = parse_number(path, &bytes, pos)?;
    let pos = skip_separators(&bytes, pos);
    let (maxval, pos) = parse_number(path, &bytes, pos)?;
    if maxval == 0 || maxval > 65535 {
        return Err(parse_error(path, pos, format!("maxval {maxval} out of range 1..=65535")));
    }
    if pos >= bytes.len() || !bytes[pos].is_ascii_whitespace() {
        return Err(parse_error(path, pos, "expected single whitespace before raster"));
    }
    let data_start = pos + 1;
    let (w, h) = (width as usize, height as usize);
    let n = w * h;
    let bit_depth: u8 = if maxval <= 255 { 8 } else { 16 };
    let bytes_per = if bit_depth == 8 { 1 } else { 2 };
    if bytes.len() < data_start + n * bytes_per {
        return Err(parse_error(
            path,
            bytes.len(),
            format!("raster truncated: need {} bytes", n * bytes_per),
        ));
    }
    let mut data = Vec::with_capacity(n);
    if bit_depth == 8 {
        for &b in &bytes[data_start..data_start + n] {
            data.push(b as f64);
        }
    } else {
        for k in 0..n {
            let hi = bytes[data_start + 2 * k] as u16;
            let lo = bytes[data_start + 2 * k + 1] as u16;
            data.push(((hi << 8) | lo) as f64);
        }
    }
    let image = GrayImage::new(w, h, data).map_err(CliError::from)?;
    Ok(PgmImage { image, bit_depth })
}

/// Write a binary PGM file at the given bit depth. Values are rounded;
/// out-of-range values are clamped and counted.
pub fn write_image(path: &Path, image: &GrayImage, bit_depth: u8) -> Result<usize> {
    let maxval: u32 = match bit_depth {
        8 => 255,
        16 => 65535,
        other => return Err(CliError::config(format!("unsupported bit depth {other}"))),
    };
    let mut clamped = 0usize;
    let mut payload: Vec<u8> =
        Vec::with_capacity(image.len() * if bit_depth == 8 { 1 } else { 2 });
    for &v in image.data() {
        let r = v.round();
        let q = if r < 0.0 {
            clamped += 1;
            0
        } else if r > maxval as f64 {
            clamped += 1;
            maxval
        } else {
            r as u32
        };
        if bit_depth == 8 {
            payload.push(q as u8);
        } else {
            payload.push((q >> 8) as u8);
            payload.push((q & 0xff) as u8);
        }
    }
    let mut out = Vec::new();
    write!(out, "P5\n{} {}\n{}\n", image.width(), image.height(), maxval)
        .expect("in-memory write");
    out.extend_from_slice(&payload);
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)
                .map_err(|e| CliError::io(format!("{}: {e}", parent.display())))?;
        }
    }
    fs::write(path, out).map_err(|e| CliError::io(format!("{}: {e}", path.display())))?;
    Ok(clamped)
}
