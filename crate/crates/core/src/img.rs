//! Minimal image and raster containers shared by every pipeline stage.
//!
//! All buffers are row-major with `(x, y)` addressing, `y` growing downward.
//! Binary formats are deliberately boring: PPM (P6) for color frames, PGM (P5)
//! for masks, and raw little-endian `f32` rasters with a JSON sidecar for
//! floating-point maps.

use serde::{Deserialize, Serialize};
use std::io::{Read, Write};
use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ImageError {
    #[error("image dimensions {0}x{1} are invalid")]
    BadDimensions(usize, usize),
    #[error("pnm parse error: {0}")]
    PnmParse(String),
    #[error("raster sidecar mismatch: {0}")]
    SidecarMismatch(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Single-channel 8-bit image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    pub width: usize,
    pub height: usize,
    pub data: Vec<u8>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize) -> Self {
        Self { width, height, data: vec![0; width * height] }
    }

    pub fn filled(width: usize, height: usize, value: u8) -> Self {
        Self { width, height, data: vec![value; width * height] }
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: u8) {
        self.data[y * self.width + x] = v;
    }

    #[inline]
    pub fn row(&self, y: usize) -> &[u8] {
        &self.data[y * self.width..(y + 1) * self.width]
    }

    /// Clamped read; out-of-bounds coordinates replicate the nearest edge.
    #[inline]
    pub fn get_clamped(&self, x: i64, y: i64) -> u8 {
        let xc = x.clamp(0, self.width as i64 - 1) as usize;
        let yc = y.clamp(0, self.height as i64 - 1) as usize;
        self.get(xc, yc)
    }

    pub fn flip_horizontal(&self) -> GrayImage {
        let mut out = GrayImage::new(self.width, self.height);
        for y in 0..self.height {
            for x in 0..self.width {
                out.set(x, y, self.get(self.width - 1 - x, y));
            }
        }
        out
    }
}

/// Interleaved 8-bit RGB image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RgbImage {
    pub width: usize,
    pub height: usize,
    pub data: Vec<u8>,
}

impl RgbImage {
    pub fn new(width: usize, height: usize) -> Self {
        Self { width, height, data: vec![0; width * height * 3] }
    }

    pub fn filled(width: usize, height: usize, rgb: [u8; 3]) -> Self {
        let mut data = Vec::with_capacity(width * height * 3);
        for _ in 0..width * height {
            data.extend_from_slice(&rgb);
        }
        Self { width, height, data }
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> [u8; 3] {
        let i = (y * self.width + x) * 3;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, rgb: [u8; 3]) {
        let i = (y * self.width + x) * 3;
        self.data[i..i + 3].copy_from_slice(&rgb);
    }

    /// Exact pixel copy of `rect` into a new image.
    pub fn crop(&self, rect: Rect) -> RgbImage {
        let mut out = RgbImage::new(rect.width(), rect.height());
        for y in 0..rect.height() {
            let src = ((rect.y0 + y) * self.width + rect.x0) * 3;
            let dst = y * rect.width() * 3;
            out.data[dst..dst + rect.width() * 3]
                .copy_from_slice(&self.data[src..src + rect.width() * 3]);
        }
        out
    }

    pub fn paste(&mut self, src: &RgbImage, x0: usize, y0: usize) {
        for y in 0..src.height {
            let s = y * src.width * 3;
            let d = ((y0 + y) * self.width + x0) * 3;
            self.data[d..d + src.width * 3].copy_from_slice(&src.data[s..s + src.width * 3]);
        }
    }

    /// 180-degree rotation (flip along both axes).
    pub fn flip_both(&self) -> RgbImage {
        let mut out = RgbImage::new(self.width, self.height);
        for y in 0..self.height {
            for x in 0..self.width {
                out.set(x, y, self.get(self.width - 1 - x, self.height - 1 - y));
            }
        }
        out
    }

    /// Integer Rec.601 luma, identical on every platform.
    pub fn to_gray(&self) -> GrayImage {
        let mut out = GrayImage::new(self.width, self.height);
        for (i, px) in self.data.chunks_exact(3).enumerate() {
            let y = (77 * px[0] as u32 + 150 * px[1] as u32 + 29 * px[2] as u32 + 128) >> 8;
            out.data[i] = y as u8;
        }
        out
    }
}

/// Single-channel `f32` raster (depth, disparity, displacement planes).
#[derive(Debug, Clone, PartialEq)]
pub struct Raster {
    pub width: usize,
    pub height: usize,
    pub data: Vec<f32>,
}

impl Raster {
    pub fn new(width: usize, height: usize) -> Self {
        Self { width, height, data: vec![0.0; width * height] }
    }

    pub fn filled(width: usize, height: usize, v: f32) -> Self {
        Self { width, height, data: vec![v; width * height] }
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f32 {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: f32) {
        self.data[y * self.width + x] = v;
    }
}

/// Boolean mask with image addressing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mask {
    pub width: usize,
    pub height: usize,
    pub data: Vec<bool>,
}

impl Mask {
    pub fn new(width: usize, height: usize) -> Self {
        Self { width, height, data: vec![false; width * height] }
    }

    pub fn filled(width: usize, height: usize, v: bool) -> Self {
        Self { width, height, data: vec![v; width * height] }
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> bool {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: bool) {
        self.data[y * self.width + x] = v;
    }

    pub fn count(&self) -> usize {
        self.data.iter().filter(|&&b| b).count()
    }
}

/// Half-open pixel rectangle `[x0, x1) x [y0, y1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rect {
    pub x0: usize,
    pub y0: usize,
    pub x1: usize,
    pub y1: usize,
}

impl Rect {
    pub fn new(x0: usize, y0: usize, x1: usize, y1: usize) -> Self {
        Self { x0, y0, x1, y1 }
    }

    pub fn width(&self) -> usize {
        self.x1 - self.x0
    }

    pub fn height(&self) -> usize {
        self.y1 - self.y0
    }

    pub fn area(&self) -> usize {
        self.width() * self.height()
    }

    pub fn contains(&self, x: usize, y: usize) -> bool {
        x >= self.x0 && x < self.x1 && y >= self.y0 && y < self.y1
    }

    pub fn fits_in(&self, width: usize, height: usize) -> bool {
        self.x0 < self.x1 && self.y0 < self.y1 && self.x1 <= width && self.y1 <= height
    }

    pub fn intersects(&self, other: &Rect) -> bool {
        self.x0 < other.x1 && other.x0 < self.x1 && self.y0 < other.y1 && other.y0 < self.y1
    }
}

// ---------------------------------------------------------------------------
// PNM encode/decode
// ---------------------------------------------------------------------------

pub fn write_ppm(path: &Path, img: &RgbImage) -> Result<(), ImageError> {
    let mut f = std::fs::File::create(path)?;
    write!(f, "P6\n{} {}\n255\n", img.width, img.height)?;
    f.write_all(&img.data)?;
    Ok(())
}

pub fn read_ppm(path: &Path) -> Result<RgbImage, ImageError> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut bytes)?;
    let (magic, w, h, maxval, off) = parse_pnm_header(&bytes)?;
    if magic != b"P6" {
        return Err(ImageError::PnmParse(format!("expected P6, got {:?}", magic)));
    }
    if maxval != 255 {
        return Err(ImageError::PnmParse(format!("unsupported maxval {maxval}")));
    }
    let need = w * h * 3;
    if bytes.len() < off + need {
        return Err(ImageError::PnmParse("truncated pixel data".into()));
    }
    Ok(RgbImage { width: w, height: h, data: bytes[off..off + need].to_vec() })
}

pub fn write_pgm(path: &Path, img: &GrayImage) -> Result<(), ImageError> {
    let mut f = std::fs::File::create(path)?;
    write!(f, "P5\n{} {}\n255\n", img.width, img.height)?;
    f.write_all(&img.data)?;
    Ok(())
}

pub fn read_pgm(path: &Path) -> Result<GrayImage, ImageError> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut bytes)?;
    let (magic, w, h, maxval, off) = parse_pnm_header(&bytes)?;
    if magic != b"P5" {
        return Err(ImageError::PnmParse(format!("expected P5, got {:?}", magic)));
    }
    if maxval != 255 {
        return Err(ImageError::PnmParse(format!("unsupported maxval {maxval}")));
    }
    let need = w * h;
    if bytes.len() < off + need {
        return Err(ImageError::PnmParse("truncated pixel data".into()));
    }
    Ok(GrayImage { width: w, height: h, data: bytes[off..off + need].to_vec() })
}

pub fn mask_to_gray(mask: &Mask) -> GrayImage {
    let mut g = GrayImage::new(mask.width, mask.height);
    for (o, &b) in g.data.iter_mut().zip(mask.data.iter()) {
        *o = if b { 255 } else { 0 };
    }
    g
}

pub fn gray_to_mask(img: &GrayImage) -> Mask {
    let mut m = Mask::new(img.width, img.height);
    for (o, &v) in m.data.iter_mut().zip(img.data.iter()) {
        *o = v >= 128;
    }
    m
}

fn parse_pnm_header(bytes: &[u8]) -> Result<(&[u8], usize, usize, u32, usize), ImageError> {
    if bytes.len() < 2 {
        return Err(ImageError::PnmParse("too short".into()));
    }
    let magic = &bytes[0..2];
    let mut pos = 2;
    let mut fields = [0usize; 3];
    for field in fields.iter_mut() {
        // skip whitespace and comments
        loop {
            while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if pos < bytes.len() && bytes[pos] == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
            } else {
                break;
            }
        }
        let start = pos;
        while pos < bytes.len() && bytes[pos].is_ascii_digit() {
            pos += 1;
        }
        if start == pos {
            return Err(ImageError::PnmParse("missing header field".into()));
        }
        *field = std::str::from_utf8(&bytes[start..pos])
            .map_err(|e| ImageError::PnmParse(e.to_string()))?
            .parse()
            .map_err(|e: std::num::ParseIntError| ImageError::PnmParse(e.to_string()))?;
    }
    // single whitespace byte separates header from raster
    pos += 1;
    Ok((magic, fields[0], fields[1], fields[2] as u32, pos))
}

// ---------------------------------------------------------------------------
// f32 raster + JSON sidecar
// ---------------------------------------------------------------------------

/// Sidecar describing a raw `.f32` raster file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RasterHeader {
    pub width: usize,
    pub height: usize,
    /// Interleaved channels per element (1 for depth, 2 for displacement grids).
    pub channels: usize,
    /// Always "row-major"; recorded so files are self-describing.
    pub order: String,
    pub units: String,
    /// Sentinel for invalid samples, written as a quiet NaN.
    pub invalid: String,
}

impl RasterHeader {
    pub fn new(width: usize, height: usize, channels: usize, units: &str) -> Self {
        Self {
            width,
            height,
            channels,
            order: "row-major".into(),
            units: units.into(),
            invalid: "nan".into(),
        }
    }
}

/// Canonical quiet-NaN bit pattern so exports are byte-identical across runs.
pub const INVALID_F32_BITS: u32 = 0x7fc0_0000;

/// Writes `values` as little-endian `f32` to `path` and a JSON sidecar to
/// `path` + ".json". NaNs are canonicalized.
pub fn write_f32_raster(path: &Path, header: &RasterHeader, values: &[f32]) -> Result<(), ImageError> {
    let expect = header.width * header.height * header.channels;
    if values.len() != expect {
        return Err(ImageError::SidecarMismatch(format!(
            "raster has {} values, header wants {}",
            values.len(),
            expect
        )));
    }
    let mut buf = Vec::with_capacity(values.len() * 4);
    for &v in values {
        let bits = if v.is_nan() { INVALID_F32_BITS } else { v.to_bits() };
        buf.extend_from_slice(&bits.to_le_bytes());
    }
    std::fs::write(path, &buf)?;
    let sidecar = path_with_json_ext(path);
    std::fs::write(sidecar, serde_json::to_string_pretty(header)?)?;
    Ok(())
}

pub fn read_f32_raster(path: &Path) -> Result<(RasterHeader, Vec<f32>), ImageError> {
    let sidecar = path_with_json_ext(path);
    let header: RasterHeader = serde_json::from_str(&std::fs::read_to_string(sidecar)?)?;
    let bytes = std::fs::read(path)?;
    let expect = header.width * header.height * header.channels * 4;
    if bytes.len() != expect {
        return Err(ImageError::SidecarMismatch(format!(
            "raster file has {} bytes, header wants {}",
            bytes.len(),
            expect
        )));
    }
    let values = bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect();
    Ok((header, values))
}

fn path_with_json_ext(path: &Path) -> std::path::PathBuf {
    let mut s = path.as_os_str().to_os_string();
    s.push(".json");
    std::path::PathBuf::from(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ppm_roundtrip() {
        let dir = std::env::temp_dir().join("ommatid_img_test");
        std::fs::create_dir_all(&dir).unwrap();
        let mut img = RgbImage::new(7, 3);
        for (i, b) in img.data.iter_mut().enumerate() {
            *b = (i * 11 % 256) as u8;
        }
        let p = dir.join("t.ppm");
        write_ppm(&p, &img).unwrap();
        let back = read_ppm(&p).unwrap();
        assert_eq!(img, back);
    }

    #[test]
    fn f32_raster_roundtrip_with_nan() {
        let dir = std::env::temp_dir().join("ommatid_img_test");
        std::fs::create_dir_all(&dir).unwrap();
        let header = RasterHeader::new(3, 2, 1, "mm");
        let vals = vec![1.0f32, f32::NAN, -2.5, 0.0, 35.0, 7.25];
        let p = dir.join("t.f32");
        write_f32_raster(&p, &header, &vals).unwrap();
        let (h2, back) = read_f32_raster(&p).unwrap();
        assert_eq!(h2.width, 3);
        assert!(back[1].is_nan());
        assert_eq!(back[1].to_bits(), INVALID_F32_BITS);
        assert_eq!(back[4], 35.0);
    }

    #[test]
    fn gray_conversion_is_integer_rec601() {
        let mut img = RgbImage::new(1, 1);
        img.set(0, 0, [200, 100, 50]);
        let g = img.to_gray();
        assert_eq!(g.get(0, 0), ((77 * 200 + 150 * 100 + 29 * 50 + 128) >> 8) as u8);
    }

    #[test]
    fn crop_is_exact_copy() {
        let mut img = RgbImage::new(10, 10);
        for (i, b) in img.data.iter_mut().enumerate() {
            *b = (i % 251) as u8;
        }
        let r = Rect::new(2, 3, 7, 9);
        let c = img.crop(r);
        assert_eq!(c.width, 5);
        assert_eq!(c.height, 6);
        assert_eq!(c.get(0, 0), img.get(2, 3));
        assert_eq!(c.get(4, 5), img.get(6, 8));
    }
}
