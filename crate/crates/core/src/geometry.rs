//! Mapping between the patch grid and pixel space, plus square crop clamping.
//!
//! Pixel origin is the top-left corner, `x` grows rightward and `y` downward.
//! Rectangles are half-open: `[left, right) x [top, bottom)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Slack used when snapping real coordinates to integer pixels, so that
/// values a few ulps below an integer are treated as that integer.
const SNAP_EPS: f64 = 1e-9;

pub(crate) fn floor_snapped(v: f64) -> f64 {
    (v + SNAP_EPS).floor()
}

pub(crate) fn ceil_snapped(v: f64) -> f64 {
    (v - SNAP_EPS).ceil()
}

/// Round half up to an integer, with the same ulp slack as [`floor_snapped`].
pub(crate) fn round_half_up(v: f64) -> f64 {
    floor_snapped(v + 0.5)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance_sq(&self, other: &Point) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        dx * dx + dy * dy
    }
}

/// An image of `image_width x image_height` pixels tiled by a `rows x cols`
/// patch grid. Blocks need not have integral pixel size.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GridGeometry {
    image_width: u32,
    image_height: u32,
    rows: usize,
    cols: usize,
}

impl GridGeometry {
    pub fn new(image_width: u32, image_height: u32, rows: usize, cols: usize) -> Result<Self> {
        if image_width == 0 || image_height == 0 {
            return Err(Error::invalid(format!(
                "image {image_width}x{image_height} is empty"
            )));
        }
        if rows == 0 || cols == 0 {
            return Err(Error::invalid(format!("grid {rows}x{cols} is empty")));
        }
        Ok(Self {
            image_width,
            image_height,
            rows,
            cols,
        })
    }

    pub fn image_width(&self) -> u32 {
        self.image_width
    }

    pub fn image_height(&self) -> u32 {
        self.image_height
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn block_width(&self) -> f64 {
        self.image_width as f64 / self.cols as f64
    }

    pub fn block_height(&self) -> f64 {
        self.image_height as f64 / self.rows as f64
    }

    /// Pixel center of block `(i, j)`.
    pub fn block_center(&self, i: usize, j: usize) -> Result<Point> {
        if i >= self.rows || j >= self.cols {
            return Err(Error::invalid(format!(
                "block ({i}, {j}) outside {}x{} grid",
                self.rows, self.cols
            )));
        }
        Ok(self.center_unchecked(i, j))
    }

    pub(crate) fn center_unchecked(&self, i: usize, j: usize) -> Point {
        Point {
            x: (j as f64 + 0.5) * self.image_width as f64 / self.cols as f64,
            y: (i as f64 + 0.5) * self.image_height as f64 / self.rows as f64,
        }
    }

    pub fn full_image(&self) -> CropRect {
        CropRect {
            left: 0,
            top: 0,
            right: self.image_width,
            bottom: self.image_height,
        }
    }
}

/// Integer pixel rectangle `[left, right) x [top, bottom)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CropRect {
    pub left: u32,
    pub top: u32,
    pub right: u32,
    pub bottom: u32,
}

impl CropRect {
    pub fn new(left: u32, top: u32, right: u32, bottom: u32) -> Result<Self> {
        if left >= right || top >= bottom {
            return Err(Error::invalid(format!(
                "rect ({left}, {top}, {right}, {bottom}) has no area"
            )));
        }
        Ok(Self {
            left,
            top,
            right,
            bottom,
        })
    }

    pub fn width(&self) -> u32 {
        self.right - self.left
    }

    pub fn height(&self) -> u32 {
        self.bottom - self.top
    }

    pub fn area(&self) -> u64 {
        self.width() as u64 * self.height() as u64
    }

    pub fn is_square(&self) -> bool {
        self.width() == self.height()
    }

    pub fn center(&self) -> Point {
        Point {
            x: (self.left as f64 + self.right as f64) / 2.0,
            y: (self.top as f64 + self.bottom as f64) / 2.0,
        }
    }

    /// Half-open containment, used for block membership.
    pub fn contains(&self, p: Point) -> bool {
        p.x >= self.left as f64
            && p.x < self.right as f64
            && p.y >= self.top as f64
            && p.y < self.bottom as f64
    }

    /// Closed containment, used for refined centers.
    pub fn contains_closed(&self, p: Point) -> bool {
        p.x >= self.left as f64
            && p.x <= self.right as f64
            && p.y >= self.top as f64
            && p.y <= self.bottom as f64
    }

    pub fn fits_in(&self, geom: &GridGeometry) -> bool {
        self.right <= geom.image_width() && self.bottom <= geom.image_height()
    }

    pub fn intersection_area(&self, other: &CropRect) -> u64 {
        let w = self
            .right
            .min(other.right)
            .saturating_sub(self.left.max(other.left));
        let h = self
            .bottom
            .min(other.bottom)
            .saturating_sub(self.top.max(other.top));
        w as u64 * h as u64
    }

    /// Positive-area intersection. Rects that only share an edge do not overlap.
    pub fn overlaps(&self, other: &CropRect) -> bool {
        self.intersection_area(other) > 0
    }

    pub fn iou(&self, other: &CropRect) -> f64 {
        let inter = self.intersection_area(other) as f64;
        let union = self.area() as f64 + other.area() as f64 - inter;
        inter / union
    }

    pub fn as_array(&self) -> [u32; 4] {
        [self.left, self.top, self.right, self.bottom]
    }
}

/// Square rect of (at most) `side` pixels centered as close to `center` as the
/// image allows.
///
/// The side is rounded up to whole pixels and capped at the smaller image
/// dimension. The window is shifted, never truncated, to stay in bounds, so
/// the result is always square.
pub fn clamp_square(center: Point, side: f64, geom: &GridGeometry) -> Result<CropRect> {
    if !(side.is_finite() && side > 0.0) {
        return Err(Error::invalid(format!(
            "crop side must be positive, got {side}"
        )));
    }
    if !(center.x.is_finite() && center.y.is_finite()) {
        return Err(Error::invalid("crop center is not finite"));
    }
    let max_side = geom.image_width().min(geom.image_height());
    let side = (ceil_snapped(side).max(1.0) as u64).min(max_side as u64) as u32;

    let place = |c: f64, extent: u32| -> u32 {
        let lead = floor_snapped(c - side as f64 / 2.0);
        lead.clamp(0.0, (extent - side) as f64) as u32
    };
    let left = place(center.x, geom.image_width());
    let top = place(center.y, geom.image_height());
    Ok(CropRect {
        left,
        top,
        right: left + side,
        bottom: top + side,
    })
}

/// Blocks of the grid covered by a rect.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RectBlocks {
    /// Row-major `(row, col)` indices.
    pub blocks: Vec<(usize, usize)>,
    /// No block center fell inside the rect; `blocks` holds the single block
    /// nearest to the rect center.
    pub nearest_fallback: bool,
}

/// Blocks whose center lies inside `rect`. Never empty: when no center is
/// covered, the block nearest the rect center is returned (smallest row, then
/// smallest column on ties).
pub fn blocks_in_rect(rect: &CropRect, geom: &GridGeometry) -> RectBlocks {
    let mut blocks = Vec::new();
    for i in 0..geom.rows() {
        for j in 0..geom.cols() {
            if rect.contains(geom.center_unchecked(i, j)) {
                blocks.push((i, j));
            }
        }
    }
    if !blocks.is_empty() {
        return RectBlocks {
            blocks,
            nearest_fallback: false,
        };
    }

    let target = rect.center();
    let mut best = (0, 0);
    let mut best_d = f64::INFINITY;
    for i in 0..geom.rows() {
        for j in 0..geom.cols() {
            let d = geom.center_unchecked(i, j).distance_sq(&target);
            if d < best_d {
                best_d = d;
                best = (i, j);
            }
        }
    }
    RectBlocks {
        blocks: vec![best],
        nearest_fallback: true,
    }
}
