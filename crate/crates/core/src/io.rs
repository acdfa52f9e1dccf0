//! Image files, masks, nearest-neighbour expansion and trace CSV files.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use image::{DynamicImage, ImageError, ImageFormat, ImageReader};

use crate::error::{InpaintError, Result};
use crate::flow::{ConvergenceTrace, TraceRecord};
use crate::grid::{GrayImage, Mask};

pub const TRACE_HEADER: &str = "iter,energy,residual2,error,step,kappa,wall_ms";

fn map_image_error(e: ImageError) -> InpaintError {
    match e {
        ImageError::IoError(e) => InpaintError::Io(e),
        other => InpaintError::UnsupportedFormat(other.to_string()),
    }
}

fn format_of(path: &Path) -> Result<ImageFormat> {
    let ext = path
        .extension()
        .and_then(|e| e.to_str())
        .map(|e| e.to_ascii_lowercase())
        .unwrap_or_default();
    match ext.as_str() {
        "png" => Ok(ImageFormat::Png),
        "pgm" | "pnm" => Ok(ImageFormat::Pnm),
        _ => Err(InpaintError::UnsupportedFormat(format!(
            "{}: expected a .png or .pgm file",
            path.display()
        ))),
    }
}

/// Decodes an 8-bit grayscale or RGB file into raw intensities in `0..=255`.
/// Colour is reduced with the weights 0.299, 0.587, 0.114.
pub fn read_intensities(path: &Path) -> Result<(usize, usize, Vec<f64>)> {
    let reader = ImageReader::open(path)?.with_guessed_format()?;
    match reader.format() {
        Some(ImageFormat::Png) | Some(ImageFormat::Pnm) => {}
        _ => {
            return Err(InpaintError::UnsupportedFormat(format!(
                "{}: not a PNG or PGM file",
                path.display()
            )))
        }
    }
    let img = reader.decode().map_err(map_image_error)?;
    let (w, h) = (img.width() as usize, img.height() as usize);
    let data: Vec<f64> = match img {
        DynamicImage::ImageLuma8(b) => b.into_raw().into_iter().map(f64::from).collect(),
        DynamicImage::ImageLumaA8(b) => b.pixels().map(|p| f64::from(p.0[0])).collect(),
        DynamicImage::ImageRgb8(b) => b.pixels().map(|p| luma(p.0[0], p.0[1], p.0[2])).collect(),
        DynamicImage::ImageRgba8(b) => b.pixels().map(|p| luma(p.0[0], p.0[1], p.0[2])).collect(),
        other => {
            return Err(InpaintError::UnsupportedFormat(format!(
                "{}: only 8-bit images are supported, found {:?}",
                path.display(),
                other.color()
            )))
        }
    };
    Ok((h, w, data))
}

fn luma(r: u8, g: u8, b: u8) -> f64 {
    0.299 * f64::from(r) + 0.587 * f64::from(g) + 0.114 * f64::from(b)
}

/// Loads an image and divides it by its maximum.
pub fn load_image(path: impl AsRef<Path>) -> Result<GrayImage> {
    let (h, w, data) = read_intensities(path.as_ref())?;
    let mut img = GrayImage::new(h, w, data)?;
    img.set_scale(1.0);
    img.normalize_max()?;
    Ok(img)
}

/// Loads a mask image; every nonzero pixel is to be inpainted.
pub fn load_mask(path: impl AsRef<Path>) -> Result<Mask> {
    let (h, w, data) = read_intensities(path.as_ref())?;
    Mask::new(h, w, data.into_iter().map(|v| v > 0.0).collect())
}

/// Writes `round(scale * clamp(u, 0, 1))` as 8-bit PNG or binary PGM,
/// chosen by extension.
pub fn save_image(image: &GrayImage, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let bytes = image.to_u8();
    match format_of(path)? {
        ImageFormat::Png => image::save_buffer_with_format(
            path,
            &bytes,
            image.width() as u32,
            image.height() as u32,
            image::ExtendedColorType::L8,
            ImageFormat::Png,
        )
        .map_err(map_image_error),
        _ => {
            let mut out = BufWriter::new(File::create(path)?);
            write!(out, "P5\n{} {}\n255\n", image.width(), image.height())?;
            out.write_all(&bytes)?;
            out.flush()?;
            Ok(())
        }
    }
}

/// Spreads each pixel `(i, j)` to `(i f, j f)` in an image `f` times larger.
/// Every other pixel copies its nearest anchor (ties towards the smaller
/// index) and is marked in the returned mask.
pub fn expand_nearest(image: &GrayImage, factor: usize) -> Result<(GrayImage, Mask)> {
    if factor < 2 {
        return Err(InpaintError::FactorTooSmall(factor));
    }
    let (h, w) = image.shape();
    let (hh, ww) = (h * factor, w * factor);
    let nearest = |a: usize, n: usize| ((a + (factor - 1) / 2) / factor).min(n - 1);
    let mut out = GrayImage::from_fn(hh, ww, |a, b| image.get(nearest(a, h), nearest(b, w)));
    out.set_scale(image.scale());
    let mask = Mask::from_fn(hh, ww, |a, b| a % factor != 0 || b % factor != 0);
    Ok((out, mask))
}

fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_trace_to(trace: &ConvergenceTrace, mut out: impl Write) -> Result<()> {
    writeln!(out, "{TRACE_HEADER}")?;
    for r in &trace.records {
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.iter,
            fmt_f64(r.energy),
            fmt_f64(r.residual2),
            fmt_f64(r.error),
            fmt_f64(r.step),
            fmt_f64(r.kappa),
            fmt_f64(r.wall_ms)
        )?;
    }
    Ok(())
}

pub fn write_trace(trace: &ConvergenceTrace, path: impl AsRef<Path>) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    write_trace_to(trace, &mut out)?;
    out.flush()?;
    Ok(())
}

pub fn read_trace_from(input: impl Read) -> Result<ConvergenceTrace> {
    let mut lines = BufReader::new(input).lines();
    let header = lines.next().transpose()?;
    if header.as_deref() != Some(TRACE_HEADER) {
        return Err(InpaintError::MalformedTrace("missing header".into()));
    }
    let mut trace = ConvergenceTrace::new();
    for (n, line) in lines.enumerate() {
        let line = line?;
        if line.is_empty() {
            continue;
        }
        let bad = |what: &str| InpaintError::MalformedTrace(format!("row {}: {what}", n + 1));
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 7 {
            return Err(bad("expected 7 fields"));
        }
        let iter = fields[0].parse::<usize>().map_err(|_| bad("bad iteration"))?;
        let mut v = [0.0; 6];
        for (slot, s) in v.iter_mut().zip(&fields[1..]) {
            *slot = s.parse::<f64>().map_err(|_| bad("bad number"))?;
        }
        if trace.records.last().is_some_and(|r| r.iter >= iter) {
            return Err(bad("iterations not increasing"));
        }
        trace.push(TraceRecord {
            iter,
            energy: v[0],
            residual2: v[1],
            error: v[2],
            step: v[3],
            kappa: v[4],
            wall_ms: v[5],
        });
    }
    Ok(trace)
}

pub fn read_trace(path: impl AsRef<Path>) -> Result<ConvergenceTrace> {
    read_trace_from(File::open(path)?)
}
