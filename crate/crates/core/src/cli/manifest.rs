//! `manifest.json` layout.
//!
//! Keys are emitted in declaration order and reals are rendered in fixed-point
//! notation with a configurable number of decimals, so identical inputs give
//! byte-identical manifests.

use serde::Serialize;
use serde_json::value::RawValue;

use super::dump::{AttentionDump, Provenance};
use crate::portfolio::{Portfolio, ScoredCrop};

pub const MANIFEST_FORMAT: &str = "funnel-manifest";
pub const MANIFEST_VERSION: u32 = 1;

/// Real number pre-rendered at a fixed precision.
#[derive(Debug, Clone)]
pub struct Fixed(Box<RawValue>);

impl Fixed {
    pub fn new(v: f64, precision: usize) -> Self {
        let mut text = format!("{v:.precision$}");
        if text.starts_with('-') && text[1..].chars().all(|c| c == '0' || c == '.') {
            text.remove(0);
        }
        Fixed(RawValue::from_string(text).expect("fixed-point decimal is valid JSON"))
    }

    pub fn as_str(&self) -> &str {
        self.0.get()
    }
}

impl Serialize for Fixed {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.0.serialize(s)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ImageInfo {
    pub file: String,
    pub width: u32,
    pub height: u32,
}

#[derive(Debug, Clone, Serialize)]
pub struct GridInfo {
    pub rows: usize,
    pub cols: usize,
    pub source: &'static str,
    pub degenerate: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct LevelConfig {
    pub level: usize,
    pub beta: Fixed,
    pub gamma: Fixed,
    pub extrapolated: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConfigEcho {
    pub mode: String,
    pub resolution: u32,
    pub levels: usize,
    pub params: Vec<LevelConfig>,
}

#[derive(Debug, Clone, Serialize)]
pub struct LevelCrop {
    pub index: usize,
    pub file: String,
    pub level: usize,
    pub label: String,
    pub alpha: Fixed,
    pub requested_side: u32,
    pub region: [u32; 4],
    pub center: [Fixed; 2],
    pub rect: [u32; 4],
    pub flag: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct TopKCrop {
    pub index: usize,
    pub file: String,
    pub label: &'static str,
    pub anchor: [usize; 2],
    pub rect: [u32; 4],
    pub score: Fixed,
}

#[derive(Debug, Clone, Serialize)]
#[serde(untagged)]
pub enum CropEntry {
    Level(LevelCrop),
    TopK(TopKCrop),
}

#[derive(Debug, Clone, Serialize)]
pub struct TopKInfo {
    pub k: usize,
    pub window_side: u32,
    pub anchoring: &'static str,
    pub max_iou: Fixed,
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub format: &'static str,
    pub version: u32,
    pub image: ImageInfo,
    pub grid: GridInfo,
    pub config: ConfigEcho,
    pub h_norm: Fixed,
    pub alphas: Vec<Fixed>,
    /// Order in which the original image and crops are meant to be fed to
    /// the model.
    pub input_order: Vec<String>,
    pub crops: Vec<CropEntry>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub topk: Option<TopKInfo>,
    pub flags: Vec<String>,
    pub provenance: Provenance,
}

pub fn crop_file_name(index: usize) -> String {
    format!("crop_{index}.png")
}

impl Manifest {
    /// Manifest for a hierarchical (funnel or static) portfolio.
    pub fn for_portfolio(
        image_file: &str,
        dump: &AttentionDump,
        mode: &str,
        portfolio: &Portfolio,
        precision: usize,
    ) -> Self {
        let crops = portfolio
            .levels
            .iter()
            .enumerate()
            .map(|(index, l)| {
                CropEntry::Level(LevelCrop {
                    index,
                    file: crop_file_name(index),
                    level: l.level,
                    label: l.label.to_string(),
                    alpha: Fixed::new(l.alpha, precision),
                    requested_side: l.requested_side,
                    region: l.region.as_array(),
                    center: [
                        Fixed::new(l.center.x, precision),
                        Fixed::new(l.center.y, precision),
                    ],
                    rect: l.rect.as_array(),
                    flag: l.flag.map(|f| f.to_string()),
                })
            })
            .collect();
        let mut input_order = vec!["original".to_string()];
        input_order.extend(portfolio.levels.iter().map(|l| l.label.to_string()));
        Self::assemble(
            image_file,
            dump,
            mode,
            portfolio,
            precision,
            crops,
            input_order,
            None,
        )
    }

    /// Manifest for the top-k baseline. `portfolio` supplies the entropy and
    /// configuration echo; its levels are not used.
    pub fn for_top_k(
        image_file: &str,
        dump: &AttentionDump,
        mode: &str,
        portfolio: &Portfolio,
        picked: &[ScoredCrop],
        info: TopKInfo,
        precision: usize,
    ) -> Self {
        let crops = picked
            .iter()
            .enumerate()
            .map(|(index, c)| {
                CropEntry::TopK(TopKCrop {
                    index,
                    file: crop_file_name(index),
                    label: "topk",
                    anchor: [c.anchor.0, c.anchor.1],
                    rect: c.rect.as_array(),
                    score: Fixed::new(c.score, precision),
                })
            })
            .collect();
        let mut input_order = vec!["original".to_string()];
        input_order.extend((0..picked.len()).map(|i| format!("topk_{i}")));
        Self::assemble(
            image_file,
            dump,
            mode,
            portfolio,
            precision,
            crops,
            input_order,
            Some(info),
        )
    }

    #[allow(clippy::too_many_arguments)]
    fn assemble(
        image_file: &str,
        dump: &AttentionDump,
        mode: &str,
        portfolio: &Portfolio,
        precision: usize,
        crops: Vec<CropEntry>,
        input_order: Vec<String>,
        topk: Option<TopKInfo>,
    ) -> Self {
        let cfg = &portfolio.config;
        let (rows, cols) = dump.grid_dims();
        let mut flags: Vec<String> = dump
            .degenerate_flags
            .iter()
            .map(|f| format!("dump:{f}"))
            .collect();
        flags.extend(portfolio.flags());
        Manifest {
            format: MANIFEST_FORMAT,
            version: MANIFEST_VERSION,
            image: ImageInfo {
                file: image_file.to_string(),
                width: portfolio.image_width,
                height: portfolio.image_height,
            },
            grid: GridInfo {
                rows,
                cols,
                source: dump.source(),
                degenerate: portfolio.grid_degenerate,
            },
            config: ConfigEcho {
                mode: mode.to_string(),
                resolution: cfg.resolution(),
                levels: cfg.levels(),
                params: cfg
                    .params()
                    .iter()
                    .enumerate()
                    .map(|(i, p)| LevelConfig {
                        level: i + 1,
                        beta: Fixed::new(p.beta, precision),
                        gamma: Fixed::new(p.gamma, precision),
                        extrapolated: cfg.is_extrapolated(i + 1),
                    })
                    .collect(),
            },
            h_norm: Fixed::new(portfolio.h_norm, precision),
            alphas: portfolio
                .alphas()
                .into_iter()
                .map(|a| Fixed::new(a, precision))
                .collect(),
            input_order,
            crops,
            topk,
            flags,
            provenance: dump.provenance.clone(),
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serializes");
        s.push('\n');
        s
    }
}
