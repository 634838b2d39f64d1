//! Raster loading, crop extraction, bilinear resizing to `S x S`, and
//! portfolio overlays.

use std::path::Path;

use image::{ImageFormat, ImageReader, Rgb, RgbImage};

use crate::error::{Error, Result};
use crate::geometry::CropRect;
use crate::portfolio::Portfolio;

/// Outline colors for focal, immediate, broader and any further levels.
pub const LEVEL_COLORS: [[u8; 3]; 4] =
    [[230, 25, 75], [60, 180, 75], [0, 130, 200], [145, 30, 180]];
pub const BASELINE_COLOR: [u8; 3] = [255, 225, 25];
pub const STROKE_WIDTH: u32 = 2;

pub fn level_color(level: usize) -> [u8; 3] {
    LEVEL_COLORS[level.min(LEVEL_COLORS.len() - 1)]
}

/// 8-bit RGB image. Grayscale inputs are promoted and alpha is dropped on load.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RasterImage(RgbImage);

impl RasterImage {
    pub fn new(width: u32, height: u32) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::invalid(format!("image {width}x{height} is empty")));
        }
        Ok(Self(RgbImage::new(width, height)))
    }

    pub fn from_rgb(img: RgbImage) -> Result<Self> {
        if img.width() == 0 || img.height() == 0 {
            return Err(Error::invalid("image is empty"));
        }
        Ok(Self(img))
    }

    pub fn from_fn(width: u32, height: u32, f: impl FnMut(u32, u32) -> [u8; 3]) -> Result<Self> {
        let mut f = f;
        Self::from_rgb(RgbImage::from_fn(width, height, |x, y| Rgb(f(x, y))))
    }

    /// Load a PNG or JPEG file.
    pub fn load(path: &Path) -> Result<Self> {
        let reader = ImageReader::open(path)
            .map_err(|e| Error::io(path, e))?
            .with_guessed_format()
            .map_err(|e| Error::io(path, e))?;
        match reader.format() {
            Some(ImageFormat::Png | ImageFormat::Jpeg) => {}
            _ => return Err(Error::UnsupportedFormat(path.to_path_buf())),
        }
        Self::from_rgb(reader.decode()?.to_rgb8())
    }

    pub fn save_png(&self, path: &Path) -> Result<()> {
        self.0.save_with_format(path, ImageFormat::Png)?;
        Ok(())
    }

    pub fn width(&self) -> u32 {
        self.0.width()
    }

    pub fn height(&self) -> u32 {
        self.0.height()
    }

    pub fn pixel(&self, x: u32, y: u32) -> [u8; 3] {
        self.0.get_pixel(x, y).0
    }

    pub fn as_rgb(&self) -> &RgbImage {
        &self.0
    }

    pub fn into_rgb(self) -> RgbImage {
        self.0
    }
}

/// Exact pixel copy of `rect`.
pub fn extract_crop(img: &RasterImage, rect: &CropRect) -> Result<RasterImage> {
    if rect.right > img.width() || rect.bottom > img.height() || rect.area() == 0 {
        return Err(Error::invalid(format!(
            "rect {:?} is not inside the {}x{} image",
            rect.as_array(),
            img.width(),
            img.height()
        )));
    }
    let view = image::imageops::crop_imm(&img.0, rect.left, rect.top, rect.width(), rect.height());
    Ok(RasterImage(view.to_image()))
}

/// Per-axis bilinear taps: lower index, upper index and weight of the upper.
fn taps(src: u32, dst: u32) -> Vec<(usize, usize, f64)> {
    let scale = src as f64 / dst as f64;
    let last = (src - 1) as f64;
    (0..dst)
        .map(|d| {
            let pos = ((d as f64 + 0.5) * scale - 0.5).clamp(0.0, last);
            let lo = pos.floor();
            let hi = (lo + 1.0).min(last);
            (lo as usize, hi as usize, pos - lo)
        })
        .collect()
}

/// Bilinear resize to `s x s` with half-pixel center alignment. An input that
/// is already `s x s` is returned unchanged.
pub fn resize_to_s(img: &RasterImage, s: u32) -> Result<RasterImage> {
    if s == 0 {
        return Err(Error::invalid("target resolution must be at least 1"));
    }
    if img.width() == s && img.height() == s {
        return Ok(img.clone());
    }
    let xs = taps(img.width(), s);
    let ys = taps(img.height(), s);
    let src = img.0.as_raw();
    let stride = img.width() as usize * 3;
    let mut out = Vec::with_capacity(s as usize * s as usize * 3);
    for &(y0, y1, fy) in &ys {
        let row0 = &src[y0 * stride..(y0 + 1) * stride];
        let row1 = &src[y1 * stride..(y1 + 1) * stride];
        for &(x0, x1, fx) in &xs {
            for c in 0..3 {
                let top = row0[x0 * 3 + c] as f64 * (1.0 - fx) + row0[x1 * 3 + c] as f64 * fx;
                let bot = row1[x0 * 3 + c] as f64 * (1.0 - fx) + row1[x1 * 3 + c] as f64 * fx;
                let v = top * (1.0 - fy) + bot * fy;
                out.push(v.round().clamp(0.0, 255.0) as u8);
            }
        }
    }
    let buf = RgbImage::from_raw(s, s, out).expect("buffer sized for s x s");
    Ok(RasterImage(buf))
}

fn stroke_rect(img: &mut RgbImage, rect: &CropRect, color: [u8; 3]) {
    let right = rect.right.min(img.width());
    let bottom = rect.bottom.min(img.height());
    let on_stroke = |x: u32, y: u32| {
        x < rect.left + STROKE_WIDTH
            || x + STROKE_WIDTH >= right
            || y < rect.top + STROKE_WIDTH
            || y + STROKE_WIDTH >= bottom
    };
    for y in rect.top..bottom {
        for x in rect.left..right {
            if on_stroke(x, y) {
                img.put_pixel(x, y, Rgb(color));
            }
        }
    }
}

/// Copy of `img` with each portfolio level outlined in its level color,
/// followed by any baseline rects. Later outlines paint over earlier ones.
pub fn render_overlay(
    img: &RasterImage,
    portfolio: &Portfolio,
    baseline: Option<&[CropRect]>,
) -> RasterImage {
    let mut out = img.0.clone();
    for level in &portfolio.levels {
        stroke_rect(&mut out, &level.rect, level_color(level.level));
    }
    for rect in baseline.unwrap_or_default() {
        stroke_rect(&mut out, rect, BASELINE_COLOR);
    }
    RasterImage(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::attention::{normalize, AttentionGrid};
    use crate::geometry::GridGeometry;
    use crate::portfolio::{build_portfolio, ScaleConfig};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn noise(w: u32, h: u32, seed: u64) -> RasterImage {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        RasterImage::from_fn(w, h, |_, _| [rng.gen(), rng.gen(), rng.gen()]).unwrap()
    }

    #[test]
    fn full_rect_crop_is_identity() {
        let img = noise(17, 9, 1);
        let rect = CropRect::new(0, 0, 17, 9).unwrap();
        assert_eq!(extract_crop(&img, &rect).unwrap(), img);
    }

    #[test]
    fn checkerboard_corner() {
        let img = RasterImage::from_fn(4, 4, |x, y| {
            if (x / 2 + y / 2) % 2 == 0 {
                [255, 255, 255]
            } else {
                [0, 0, 0]
            }
        })
        .unwrap();
        let c = extract_crop(&img, &CropRect::new(0, 0, 2, 2).unwrap()).unwrap();
        assert_eq!((c.width(), c.height()), (2, 2));
        for y in 0..2 {
            for x in 0..2 {
                assert_eq!(c.pixel(x, y), [255, 255, 255]);
            }
        }
    }

    #[test]
    fn random_crop_matches_per_pixel_copy() {
        let img = noise(40, 30, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let l = rng.gen_range(0..39);
            let t = rng.gen_range(0..29);
            let r = rng.gen_range(l + 1..=40);
            let b = rng.gen_range(t + 1..=30);
            let c = extract_crop(&img, &CropRect::new(l, t, r, b).unwrap()).unwrap();
            assert_eq!((c.width(), c.height()), (r - l, b - t));
            for y in 0..c.height() {
                for x in 0..c.width() {
                    assert_eq!(c.pixel(x, y), img.pixel(l + x, t + y));
                }
            }
        }
    }

    #[test]
    fn nested_crops_compose() {
        let img = noise(50, 50, 4);
        let outer = CropRect::new(5, 10, 45, 40).unwrap();
        let inner = CropRect::new(12, 15, 30, 33).unwrap();
        let relative = CropRect::new(7, 5, 25, 23).unwrap();
        let a = extract_crop(&extract_crop(&img, &outer).unwrap(), &relative).unwrap();
        assert_eq!(a, extract_crop(&img, &inner).unwrap());
    }

    #[test]
    fn crop_outside_image_rejected() {
        let img = noise(10, 10, 5);
        assert!(extract_crop(&img, &CropRect::new(5, 5, 11, 10).unwrap()).is_err());
    }

    #[test]
    fn resize_passthrough() {
        let img = noise(8, 8, 6);
        assert_eq!(resize_to_s(&img, 8).unwrap(), img);
    }

    #[test]
    fn resize_constant_stays_constant() {
        let img = RasterImage::from_fn(2, 2, |_, _| [17, 200, 93]).unwrap();
        let out = resize_to_s(&img, 4).unwrap();
        for y in 0..4 {
            for x in 0..4 {
                assert_eq!(out.pixel(x, y), [17, 200, 93]);
            }
        }
        let img = RasterImage::from_fn(13, 7, |_, _| [1, 2, 3]).unwrap();
        let out = resize_to_s(&img, 5).unwrap();
        assert!(out.as_rgb().pixels().all(|p| p.0 == [1, 2, 3]));
    }

    /// Scalar reference: sample at the source position of each destination
    /// pixel center using the four neighbouring samples.
    fn oracle_sample(img: &RasterImage, s: u32, x: u32, y: u32, c: usize) -> f64 {
        let sx = ((x as f64 + 0.5) * img.width() as f64 / s as f64 - 0.5)
            .max(0.0)
            .min((img.width() - 1) as f64);
        let sy = ((y as f64 + 0.5) * img.height() as f64 / s as f64 - 0.5)
            .max(0.0)
            .min((img.height() - 1) as f64);
        let x0 = sx.floor() as u32;
        let y0 = sy.floor() as u32;
        let x1 = (x0 + 1).min(img.width() - 1);
        let y1 = (y0 + 1).min(img.height() - 1);
        let (ax, ay) = (sx - x0 as f64, sy - y0 as f64);
        let p = |px: u32, py: u32| img.pixel(px, py)[c] as f64;
        p(x0, y0) * (1.0 - ax) * (1.0 - ay)
            + p(x1, y0) * ax * (1.0 - ay)
            + p(x0, y1) * (1.0 - ax) * ay
            + p(x1, y1) * ax * ay
    }

    #[test]
    fn gradient_downscale_matches_oracle() {
        let img = RasterImage::from_fn(4, 4, |x, y| {
            [(x * 60) as u8, (y * 70) as u8, (x * 20 + y * 40) as u8]
        })
        .unwrap();
        let out = resize_to_s(&img, 2).unwrap();
        for y in 0..2 {
            for x in 0..2 {
                for c in 0..3 {
                    let expect = oracle_sample(&img, 2, x, y, c);
                    assert!((out.pixel(x, y)[c] as f64 - expect).abs() <= 1.0);
                }
            }
        }
        // Downscaling by two samples exactly between source pixels.
        assert_eq!(out.pixel(0, 0), [30, 35, 30]);
    }

    #[test]
    fn random_resizes_match_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for seed in 0..20 {
            let w = rng.gen_range(1..40);
            let h = rng.gen_range(1..40);
            let s = rng.gen_range(1..50);
            let img = noise(w, h, seed);
            let out = resize_to_s(&img, s).unwrap();
            assert_eq!((out.width(), out.height()), (s, s));
            for y in 0..s {
                for x in 0..s {
                    for c in 0..3 {
                        let expect = oracle_sample(&img, s, x, y, c);
                        assert!((out.pixel(x, y)[c] as f64 - expect).abs() <= 1.0);
                    }
                }
            }
        }
    }

    #[test]
    fn resize_is_deterministic() {
        let img = noise(31, 17, 9);
        assert_eq!(
            resize_to_s(&img, 24).unwrap(),
            resize_to_s(&img, 24).unwrap()
        );
    }

    fn portfolio(levels: usize) -> Portfolio {
        let geom = GridGeometry::new(120, 100, 5, 6).unwrap();
        let mut w = vec![0.1; 30];
        w[2 * 6 + 3] = 5.0;
        w[2 * 6 + 4] = 2.0;
        let grid = normalize(&AttentionGrid::new(5, 6, w).unwrap()).unwrap();
        build_portfolio(&grid, &geom, &ScaleConfig::with_levels(30, levels).unwrap()).unwrap()
    }

    #[test]
    fn overlay_without_levels_is_copy() {
        let img = noise(120, 100, 10);
        assert_eq!(render_overlay(&img, &portfolio(0), None), img);
    }

    #[test]
    fn overlay_strokes_match_manifest_rects() {
        let img = RasterImage::from_fn(120, 100, |_, _| [128, 128, 128]).unwrap();
        let p = portfolio(3);
        let baseline = [CropRect::new(0, 0, 20, 20).unwrap()];
        let out = render_overlay(&img, &p, Some(&baseline));

        let mut painted: Vec<(CropRect, [u8; 3])> = p
            .levels
            .iter()
            .map(|l| (l.rect, LEVEL_COLORS[l.level]))
            .collect();
        painted.push((baseline[0], BASELINE_COLOR));

        let on_border = |r: &CropRect, x: u32, y: u32| {
            x >= r.left
                && x < r.right
                && y >= r.top
                && y < r.bottom
                && (x - r.left < 2 || r.right - 1 - x < 2 || y - r.top < 2 || r.bottom - 1 - y < 2)
        };
        for y in 0..100 {
            for x in 0..120 {
                let expect = painted
                    .iter()
                    .rev()
                    .find(|(r, _)| on_border(r, x, y))
                    .map_or([128, 128, 128], |(_, c)| *c);
                assert_eq!(out.pixel(x, y), expect, "pixel ({x}, {y})");
            }
        }
        // Each level keeps at least part of its outline.
        for (rect, color) in &painted {
            assert!((rect.left..rect.right).any(
                |x| out.pixel(x, rect.top) == *color || out.pixel(x, rect.bottom - 1) == *color
            ));
        }
    }
}
