//! File formats: PNG color images and masks, PFM depth maps, sparse depth sample text files,
//! and ASCII PLY point clouds.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use image::{GrayImage, ImageReader, RgbImage};

use crate::align::SparseDepthSample;
use crate::error::{Error, Result};
use crate::raster::{is_valid_depth, BinaryMask, ColorImage, DepthMap};
use crate::reproject::SeedPoint;

fn image_err(path: &Path, source: image::ImageError) -> Error {
    Error::Image {
        path: path.to_owned(),
        source,
    }
}

fn decode(path: &Path) -> Result<image::DynamicImage> {
    ImageReader::open(path)
        .map_err(|e| Error::io(path, e))?
        .with_guessed_format()
        .map_err(|e| Error::io(path, e))?
        .decode()
        .map_err(|e| image_err(path, e))
}

/// Reads an 8-bit RGB image; any alpha channel is dropped.
pub fn read_color_png(path: &Path) -> Result<ColorImage> {
    let rgb = decode(path)?.to_rgb8();
    let (w, h) = (rgb.width() as usize, rgb.height() as usize);
    let px = rgb.pixels().map(|p| p.0).collect();
    ColorImage::from_vec(w, h, px)
}

pub fn write_color_png(path: &Path, img: &ColorImage) -> Result<()> {
    let raw: Vec<u8> = img.as_slice().iter().flatten().copied().collect();
    let buf = RgbImage::from_raw(img.width() as u32, img.height() as u32, raw)
        .expect("buffer sized from raster");
    buf.save_with_format(path, image::ImageFormat::Png)
        .map_err(|e| image_err(path, e))
}

/// Reads a grayscale mask: values `>= 128` are object pixels.
pub fn read_mask_png(path: &Path) -> Result<BinaryMask> {
    let gray = decode(path)?.to_luma8();
    let (w, h) = (gray.width() as usize, gray.height() as usize);
    BinaryMask::from_vec(w, h, gray.pixels().map(|p| p.0[0] >= 128).collect())
}

/// Writes a mask as 8-bit grayscale with values {0, 255}.
pub fn write_mask_png(path: &Path, mask: &BinaryMask) -> Result<()> {
    let raw = mask.as_slice().iter().map(|&b| if b { 255 } else { 0 }).collect();
    let buf = GrayImage::from_raw(mask.width() as u32, mask.height() as u32, raw)
        .expect("buffer sized from raster");
    buf.save_with_format(path, image::ImageFormat::Png)
        .map_err(|e| image_err(path, e))
}

fn pfm_err(path: &Path, reason: impl Into<String>) -> Error {
    Error::Format {
        kind: "PFM",
        path: path.to_owned(),
        reason: reason.into(),
    }
}

/// Reads a single-channel (`Pf`) PFM depth map. Rows are stored bottom-to-top; the sign of
/// the scale line selects the byte order.
pub fn read_pfm(path: &Path) -> Result<DepthMap> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let mut pos = 0;
    let mut token = || -> Result<String> {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(pfm_err(path, "truncated header"));
        }
        Ok(String::from_utf8_lossy(&bytes[start..pos]).into_owned())
    };
    let magic = token()?;
    if magic != "Pf" {
        return Err(pfm_err(path, format!("expected grayscale `Pf`, found `{magic}`")));
    }
    let width: usize = token()?
        .parse()
        .map_err(|_| pfm_err(path, "bad width"))?;
    let height: usize = token()?
        .parse()
        .map_err(|_| pfm_err(path, "bad height"))?;
    let scale: f64 = token()?
        .parse()
        .map_err(|_| pfm_err(path, "bad scale"))?;
    if scale == 0.0 || !scale.is_finite() {
        return Err(pfm_err(path, "scale must be non-zero"));
    }
    drop(token);
    // Exactly one whitespace byte separates the header from the raster.
    let data_start = pos + 1;
    let need = width * height * 4;
    if bytes.len() < data_start + need {
        return Err(pfm_err(
            path,
            format!(
                "expected {need} data bytes, found {}",
                bytes.len().saturating_sub(data_start)
            ),
        ));
    }
    let little = scale < 0.0;
    let raw = &bytes[data_start..data_start + need];
    let mut out = DepthMap::filled(width, height, 0.0);
    for (i, chunk) in raw.chunks_exact(4).enumerate() {
        let b = [chunk[0], chunk[1], chunk[2], chunk[3]];
        let v = if little {
            f32::from_le_bytes(b)
        } else {
            f32::from_be_bytes(b)
        };
        let (x, file_row) = (i % width, i / width);
        let d = f64::from(v);
        out.set(x, height - 1 - file_row, if is_valid_depth(d) { d } else { 0.0 });
    }
    Ok(out)
}

/// Writes a little-endian `Pf` file. Invalid depths are stored as `0`.
pub fn write_pfm(path: &Path, depth: &DepthMap) -> Result<()> {
    let (w, h) = depth.dims();
    let mut buf = Vec::with_capacity(32 + w * h * 4);
    write!(buf, "Pf\n{w} {h}\n-1.0\n").expect("write to vec");
    for row in (0..h).rev() {
        for x in 0..w {
            let d = *depth.get(x, row);
            let v = if is_valid_depth(d) { d as f32 } else { 0.0 };
            buf.extend_from_slice(&v.to_le_bytes());
        }
    }
    fs::write(path, buf).map_err(|e| Error::io(path, e))
}

/// Parses `u v depth` lines; blank lines and `#` comments are ignored.
pub fn parse_sparse_samples(text: &str, path: &Path) -> Result<Vec<SparseDepthSample>> {
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let vals: Vec<f64> = line
            .split_whitespace()
            .map(str::parse)
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Format {
                kind: "sparse sample",
                path: path.to_owned(),
                reason: format!("line {}: {e}", lineno + 1),
            })?;
        if vals.len() != 3 {
            return Err(Error::Format {
                kind: "sparse sample",
                path: path.to_owned(),
                reason: format!("line {}: expected `u v depth`", lineno + 1),
            });
        }
        out.push(SparseDepthSample::new(vals[0], vals[1], vals[2]));
    }
    Ok(out)
}

pub fn read_sparse_samples(path: &Path) -> Result<Vec<SparseDepthSample>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_sparse_samples(&text, path)
}

pub fn write_sparse_samples(path: &Path, samples: &[SparseDepthSample]) -> Result<()> {
    let mut text = String::from("# u v depth\n");
    for s in samples {
        text.push_str(&format!("{} {} {}\n", s.u, s.v, s.depth));
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// ASCII PLY with `x y z` and 8-bit `red green blue` per vertex.
pub fn write_ply(path: &Path, points: &[SeedPoint]) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let write_all = |w: &mut BufWriter<fs::File>| -> std::io::Result<()> {
        writeln!(w, "ply\nformat ascii 1.0\nelement vertex {}", points.len())?;
        writeln!(w, "property double x\nproperty double y\nproperty double z")?;
        writeln!(w, "property uchar red\nproperty uchar green\nproperty uchar blue")?;
        writeln!(w, "end_header")?;
        for p in points {
            let [r, g, b] = p.color;
            writeln!(
                w,
                "{} {} {} {r} {g} {b}",
                p.position.x, p.position.y, p.position.z
            )?;
        }
        w.flush()
    };
    write_all(&mut w).map_err(|e| Error::io(path, e))
}
