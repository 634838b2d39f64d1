//! Entropy-scaled portfolio construction and the unstructured top-k baseline.
//!
//! A portfolio is a chain of square crops. Level 0 is an `S x S` focal crop at
//! the attention centroid of the whole image. Each later level `k` re-estimates
//! the centroid inside the previous level's (clamped) crop and takes a crop of
//! side `round(alpha_k * S)`, where `alpha_k = beta_k + gamma_k * H` grows with
//! the normalized attention entropy `H`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::attention::{entropy_norm, AttentionGrid};
use crate::error::{Error, Result};
use crate::geometry::{blocks_in_rect, clamp_square, round_half_up, CropRect, GridGeometry, Point};

pub const DEFAULT_RESOLUTION: u32 = 336;
pub const DEFAULT_LEVELS: usize = 3;

/// Default `(beta, gamma)` for levels 1, 2 and 3. Levels 1 and 2 are the
/// published defaults; level 3 ("global context") has no published value and
/// is an extrapolation.
pub const DEFAULT_LEVEL_PARAMS: [LevelParams; 3] = [
    LevelParams::new(1.2, 0.6),
    LevelParams::new(1.6, 1.2),
    LevelParams::new(2.0, 1.6),
];

/// First level index whose default parameters are extrapolated.
pub const FIRST_EXTRAPOLATED_LEVEL: usize = 3;

const ALPHA_QUANTUM: f64 = 1e12;

/// Expansion parameters for one context level: `alpha = beta + gamma * H`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LevelParams {
    pub beta: f64,
    pub gamma: f64,
}

impl LevelParams {
    pub const fn new(beta: f64, gamma: f64) -> Self {
        Self { beta, gamma }
    }

    /// Snapped to a 1e-12 grid so decimal endpoints such as `1.2 + 0.6` come
    /// out as the literal `1.8` rather than `1.7999999999999998`.
    pub fn alpha(&self, h_norm: f64) -> f64 {
        let raw = self.beta + self.gamma * h_norm;
        (raw * ALPHA_QUANTUM).round() / ALPHA_QUANTUM
    }
}

/// Default parameters for context level `k >= 1`, if any exist.
pub fn default_level_params(k: usize) -> Option<LevelParams> {
    k.checked_sub(1)
        .and_then(|i| DEFAULT_LEVEL_PARAMS.get(i).copied())
}

/// Input resolution `S`, level count `K` and per-level expansion parameters
/// for levels `1..K`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaleConfig {
    resolution: u32,
    levels: usize,
    params: Vec<LevelParams>,
}

impl ScaleConfig {
    /// `params[k - 1]` configures level `k`; exactly `levels - 1` entries are
    /// required (none when `levels` is 0 or 1).
    pub fn new(resolution: u32, levels: usize, params: Vec<LevelParams>) -> Result<Self> {
        if resolution == 0 {
            return Err(Error::invalid("input resolution must be at least 1"));
        }
        let expected = levels.saturating_sub(1);
        if params.len() != expected {
            return Err(Error::invalid(format!(
                "{levels} levels need {expected} (beta, gamma) pairs, got {}",
                params.len()
            )));
        }
        for (i, p) in params.iter().enumerate() {
            let k = i + 1;
            if !p.beta.is_finite() || p.beta < 1.0 {
                return Err(Error::invalid(format!(
                    "beta_{k} must be >= 1, got {}",
                    p.beta
                )));
            }
            if !p.gamma.is_finite() || p.gamma < 0.0 {
                return Err(Error::invalid(format!(
                    "gamma_{k} must be >= 0, got {}",
                    p.gamma
                )));
            }
        }
        Ok(Self {
            resolution,
            levels,
            params,
        })
    }

    /// Default parameters for `levels` levels at resolution `resolution`.
    /// Fails beyond the levels that have defaults.
    pub fn with_levels(resolution: u32, levels: usize) -> Result<Self> {
        let params = (1..levels)
            .map(|k| {
                default_level_params(k).ok_or_else(|| {
                    Error::invalid(format!(
                        "no default (beta, gamma) for level {k}; supply them explicitly"
                    ))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(resolution, levels, params)
    }

    pub fn resolution(&self) -> u32 {
        self.resolution
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn params(&self) -> &[LevelParams] {
        &self.params
    }

    /// Parameters of context level `k` (`1 <= k < levels`).
    pub fn level(&self, k: usize) -> Option<LevelParams> {
        k.checked_sub(1).and_then(|i| self.params.get(i).copied())
    }

    /// Same config with every `gamma` zeroed (fixed crop sizes).
    pub fn to_static(&self) -> Self {
        Self {
            params: self
                .params
                .iter()
                .map(|p| LevelParams::new(p.beta, 0.0))
                .collect(),
            ..self.clone()
        }
    }

    /// Whether level `k` uses the extrapolated default parameters.
    pub fn is_extrapolated(&self, k: usize) -> bool {
        k >= FIRST_EXTRAPOLATED_LEVEL && self.level(k) == default_level_params(k)
    }
}

impl Default for ScaleConfig {
    fn default() -> Self {
        Self::with_levels(DEFAULT_RESOLUTION, DEFAULT_LEVELS).expect("defaults are valid")
    }
}

/// Named configurations from the sensitivity and portfolio-size ablations.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    Static,
    Weak,
    Default,
    Strong,
    BetaMinus,
    BetaPlus,
    Levels(usize),
}

impl Preset {
    pub const ALL: [Preset; 11] = [
        Preset::Static,
        Preset::Weak,
        Preset::Default,
        Preset::Strong,
        Preset::BetaMinus,
        Preset::BetaPlus,
        Preset::Levels(0),
        Preset::Levels(1),
        Preset::Levels(2),
        Preset::Levels(3),
        Preset::Levels(4),
    ];

    pub fn label(&self) -> String {
        match self {
            Preset::Static => "static".into(),
            Preset::Weak => "weak".into(),
            Preset::Default => "default".into(),
            Preset::Strong => "strong".into(),
            Preset::BetaMinus => "beta-0.2".into(),
            Preset::BetaPlus => "beta+0.2".into(),
            Preset::Levels(k) => format!("k{k}"),
        }
    }

    pub fn parse(label: &str) -> Option<Self> {
        let label = label.trim().replace('\u{2212}', "-");
        Self::ALL.into_iter().find(|p| p.label() == label)
    }

    pub fn valid_labels() -> Vec<String> {
        Self::ALL.iter().map(Preset::label).collect()
    }

    pub fn config(&self, resolution: u32) -> Result<ScaleConfig> {
        let pairs = |b1: f64, g1: f64, b2: f64, g2: f64| {
            ScaleConfig::new(
                resolution,
                3,
                vec![LevelParams::new(b1, g1), LevelParams::new(b2, g2)],
            )
        };
        match self {
            Preset::Static => pairs(1.2, 0.0, 1.6, 0.0),
            Preset::Weak => pairs(1.2, 0.3, 1.6, 0.6),
            Preset::Default => ScaleConfig::with_levels(resolution, 3),
            Preset::Strong => pairs(1.2, 0.9, 1.6, 1.8),
            Preset::BetaMinus => pairs(1.0, 0.6, 1.4, 1.2),
            Preset::BetaPlus => pairs(1.4, 0.6, 1.8, 1.2),
            Preset::Levels(k) => ScaleConfig::with_levels(resolution, *k),
        }
    }
}

/// Role of a crop within the portfolio.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LevelLabel {
    Focal,
    Immediate,
    Broader,
    Global,
    Extra(usize),
}

impl LevelLabel {
    pub fn for_level(k: usize) -> Self {
        match k {
            0 => LevelLabel::Focal,
            1 => LevelLabel::Immediate,
            2 => LevelLabel::Broader,
            3 => LevelLabel::Global,
            k => LevelLabel::Extra(k),
        }
    }
}

impl fmt::Display for LevelLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LevelLabel::Focal => f.write_str("focal"),
            LevelLabel::Immediate => f.write_str("immediate"),
            LevelLabel::Broader => f.write_str("broader"),
            LevelLabel::Global => f.write_str("global"),
            LevelLabel::Extra(k) => write!(f, "level{k}"),
        }
    }
}

/// Why a refined center did not come from a plain weighted mean.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RefineFlag {
    /// The region holds no attention mass; its geometric center was used.
    ZeroMass,
    /// No block center lies inside the region; the nearest block's center was
    /// projected into the region.
    NearestBlock,
}

impl fmt::Display for RefineFlag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RefineFlag::ZeroMass => "zero_mass",
            RefineFlag::NearestBlock => "nearest_block",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Refinement {
    pub center: Point,
    pub flag: Option<RefineFlag>,
}

fn check_grid(grid: &AttentionGrid, geom: &GridGeometry) -> Result<()> {
    if !grid.is_normalized() {
        return Err(Error::invalid("attention grid must be normalized"));
    }
    if grid.dims() != (geom.rows(), geom.cols()) {
        return Err(Error::invalid(format!(
            "grid is {}x{} but geometry expects {}x{}",
            grid.rows(),
            grid.cols(),
            geom.rows(),
            geom.cols()
        )));
    }
    Ok(())
}

/// `alpha_k = beta_k + gamma_k * h` for context level `k` (`1 <= k < K`).
pub fn expansion_factor(k: usize, h_norm: f64, cfg: &ScaleConfig) -> Result<f64> {
    if !(0.0..=1.0).contains(&h_norm) {
        return Err(Error::invalid(format!(
            "normalized entropy must be in [0, 1], got {h_norm}"
        )));
    }
    let params = cfg.level(k).ok_or_else(|| {
        Error::invalid(format!(
            "level {k} has no expansion factor (config has {} levels)",
            cfg.levels()
        ))
    })?;
    Ok(params.alpha(h_norm))
}

/// Attention-weighted mean of block centers over the blocks covered by `region`.
pub fn refine_center(
    grid: &AttentionGrid,
    region: &CropRect,
    geom: &GridGeometry,
) -> Result<Refinement> {
    check_grid(grid, geom)?;
    if !region.fits_in(geom) {
        return Err(Error::invalid(format!(
            "region {:?} exceeds the {}x{} image",
            region.as_array(),
            geom.image_width(),
            geom.image_height()
        )));
    }
    let covered = blocks_in_rect(region, geom);
    let (mut mass, mut sx, mut sy) = (0.0, 0.0, 0.0);
    for &(i, j) in &covered.blocks {
        let w = grid.get(i, j);
        let c = geom.center_unchecked(i, j);
        mass += w;
        sx += w * c.x;
        sy += w * c.y;
    }
    if mass <= 0.0 {
        return Ok(Refinement {
            center: region.center(),
            flag: Some(RefineFlag::ZeroMass),
        });
    }
    let center = Point::new(sx / mass, sy / mass);
    if covered.nearest_fallback {
        let projected = Point::new(
            center.x.clamp(region.left as f64, region.right as f64),
            center.y.clamp(region.top as f64, region.bottom as f64),
        );
        return Ok(Refinement {
            center: projected,
            flag: Some(RefineFlag::NearestBlock),
        });
    }
    Ok(Refinement { center, flag: None })
}

/// One crop of a portfolio.
#[derive(Debug, Clone, PartialEq)]
pub struct PortfolioLevel {
    pub level: usize,
    pub label: LevelLabel,
    /// Expansion factor; 1 for the focal level.
    pub alpha: f64,
    /// `round(alpha * S)` before clamping to the image.
    pub requested_side: u32,
    /// Region the center was refined in: the full image for level 0, the
    /// previous level's rect otherwise.
    pub region: CropRect,
    pub center: Point,
    pub rect: CropRect,
    pub flag: Option<RefineFlag>,
}

impl PortfolioLevel {
    /// The image was too small for the requested side.
    pub fn side_clamped(&self) -> bool {
        self.rect.width() < self.requested_side
    }
}

/// Ordered crop hierarchy plus everything needed to audit it.
#[derive(Debug, Clone, PartialEq)]
pub struct Portfolio {
    pub image_width: u32,
    pub image_height: u32,
    pub h_norm: f64,
    /// The attention grid had no mass and was replaced by a uniform grid.
    pub grid_degenerate: bool,
    pub levels: Vec<PortfolioLevel>,
    pub config: ScaleConfig,
}

impl Portfolio {
    pub fn alphas(&self) -> Vec<f64> {
        self.levels.iter().skip(1).map(|l| l.alpha).collect()
    }

    pub fn rects(&self) -> Vec<CropRect> {
        self.levels.iter().map(|l| l.rect).collect()
    }

    /// Human-readable degeneracy notes, e.g. `grid:zero_sum`, `level1:zero_mass`.
    pub fn flags(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.grid_degenerate {
            out.push("grid:zero_sum".to_string());
        }
        for l in &self.levels {
            if let Some(f) = l.flag {
                out.push(format!("level{}:{f}", l.level));
            }
            if l.side_clamped() {
                out.push(format!("level{}:side_clamped", l.level));
            }
        }
        out
    }
}

/// Build the entropy-scaled crop hierarchy for a normalized grid.
pub fn build_portfolio(
    grid: &AttentionGrid,
    geom: &GridGeometry,
    cfg: &ScaleConfig,
) -> Result<Portfolio> {
    check_grid(grid, geom)?;
    let h_norm = entropy_norm(grid)?;
    let s = cfg.resolution();

    let mut levels: Vec<PortfolioLevel> = Vec::with_capacity(cfg.levels());
    for k in 0..cfg.levels() {
        let (region, alpha) = match levels.last() {
            None => (geom.full_image(), 1.0),
            Some(prev) => (prev.rect, expansion_factor(k, h_norm, cfg)?),
        };
        let requested_side = if k == 0 {
            s
        } else {
            round_half_up(alpha * s as f64) as u32
        };
        let refined = refine_center(grid, &region, geom)?;
        let rect = clamp_square(refined.center, requested_side as f64, geom)?;
        levels.push(PortfolioLevel {
            level: k,
            label: LevelLabel::for_level(k),
            alpha,
            requested_side,
            region,
            center: refined.center,
            rect,
            flag: refined.flag,
        });
    }

    Ok(Portfolio {
        image_width: geom.image_width(),
        image_height: geom.image_height(),
        h_norm,
        grid_degenerate: grid.is_degenerate(),
        levels,
        config: cfg.clone(),
    })
}

/// Options for the unstructured top-k baseline.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TopKOptions {
    pub k: usize,
    pub window_side: f64,
    /// Largest IoU allowed between selected windows. `0.0` forbids any
    /// positive-area intersection.
    pub max_iou: f64,
}

impl TopKOptions {
    pub fn new(k: usize, window_side: f64) -> Self {
        Self {
            k,
            window_side,
            max_iou: 0.0,
        }
    }
}

/// A selected top-k window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoredCrop {
    /// Block whose center anchors the window.
    pub anchor: (usize, usize),
    pub rect: CropRect,
    /// Mean attention over the blocks covered by the window.
    pub score: f64,
}

/// Greedy selection of the `k` highest-mean, mutually non-overlapping windows
/// of side `window_side` anchored at block centers.
pub fn top_k_crops(
    grid: &AttentionGrid,
    geom: &GridGeometry,
    k: usize,
    window_side: f64,
) -> Result<Vec<ScoredCrop>> {
    top_k_crops_with(grid, geom, &TopKOptions::new(k, window_side))
}

pub fn top_k_crops_with(
    grid: &AttentionGrid,
    geom: &GridGeometry,
    opts: &TopKOptions,
) -> Result<Vec<ScoredCrop>> {
    check_grid(grid, geom)?;
    if opts.k == 0 {
        return Err(Error::invalid("top-k needs k >= 1"));
    }
    if !(0.0..1.0).contains(&opts.max_iou) {
        return Err(Error::invalid(format!(
            "max IoU must be in [0, 1), got {}",
            opts.max_iou
        )));
    }

    let mut candidates = Vec::with_capacity(geom.rows() * geom.cols());
    for i in 0..geom.rows() {
        for j in 0..geom.cols() {
            let rect = clamp_square(geom.center_unchecked(i, j), opts.window_side, geom)?;
            let covered = blocks_in_rect(&rect, geom).blocks;
            let sum: f64 = covered.iter().map(|&(bi, bj)| grid.get(bi, bj)).sum();
            candidates.push(ScoredCrop {
                anchor: (i, j),
                rect,
                score: sum / covered.len() as f64,
            });
        }
    }
    // Row-major order is already the tie-break order, so a stable sort on
    // score alone keeps it.
    candidates.sort_by(|a, b| b.score.total_cmp(&a.score));

    let conflicts = |a: &CropRect, b: &CropRect| {
        if opts.max_iou == 0.0 {
            a.overlaps(b)
        } else {
            a.iou(b) > opts.max_iou
        }
    };
    let mut picked: Vec<ScoredCrop> = Vec::with_capacity(opts.k);
    for cand in candidates {
        if picked.len() == opts.k {
            break;
        }
        if picked.iter().all(|p| !conflicts(&p.rect, &cand.rect)) {
            picked.push(cand);
        }
    }
    Ok(picked)
}
