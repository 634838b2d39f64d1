//! `generate`, `batch` and `sweep`.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{Mode, RunConfig};
use super::dump::AttentionDump;
use super::manifest::{crop_file_name, Fixed, Manifest, TopKInfo};
use crate::attention::normalize;
use crate::error::{Error, Result};
use crate::geometry::CropRect;
use crate::imaging::{extract_crop, render_overlay, resize_to_s, RasterImage};
use crate::portfolio::{build_portfolio, top_k_crops, LevelParams, Preset, ScaleConfig};

pub const EXIT_OK: u8 = 0;
pub const EXIT_FAILURE: u8 = 1;
pub const EXIT_PARTIAL: u8 = 2;

/// Everything `generate` writes, held in memory until it is committed.
#[derive(Debug, Clone)]
pub struct GeneratedPortfolio {
    pub h_norm: f64,
    pub manifest: Manifest,
    pub crops: Vec<RasterImage>,
    pub overlay: Option<RasterImage>,
}

fn file_label(path: &Path) -> String {
    path.file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default()
}

/// Compute a portfolio for one (image, dump) pair without touching the disk.
pub fn compute_portfolio(
    image_path: &Path,
    image: &RasterImage,
    dump: &AttentionDump,
    config: &RunConfig,
) -> Result<GeneratedPortfolio> {
    dump.validate()?;
    if (image.width(), image.height()) != (dump.image.width, dump.image.height) {
        return Err(Error::dump(
            "image",
            format!(
                "dump declares {}x{} but the image is {}x{}",
                dump.image.width,
                dump.image.height,
                image.width(),
                image.height()
            ),
        ));
    }
    let geom = dump.geometry()?;
    let grid = normalize(&dump.to_grid()?)?;
    let scale = config.scale_config()?;
    let s = scale.resolution();
    let image_file = file_label(image_path);
    let mode = config.mode.to_string();

    let (manifest, rects, portfolio, baseline) = match config.mode {
        Mode::Funnel | Mode::Static => {
            let portfolio = build_portfolio(&grid, &geom, &scale)?;
            let manifest =
                Manifest::for_portfolio(&image_file, dump, &mode, &portfolio, config.precision);
            (manifest, portfolio.rects(), portfolio, None)
        }
        Mode::TopK(k) => {
            // Entropy and config echo only; the crops come from top-k.
            let no_levels = ScaleConfig::new(s, 0, vec![])?;
            let portfolio = build_portfolio(&grid, &geom, &no_levels)?;
            let picked = top_k_crops(&grid, &geom, k, s as f64)?;
            let info = TopKInfo {
                k,
                window_side: s,
                anchoring: "block_center",
                max_iou: Fixed::new(0.0, config.precision),
            };
            let manifest = Manifest::for_top_k(
                &image_file,
                dump,
                &mode,
                &portfolio,
                &picked,
                info,
                config.precision,
            );
            let rects: Vec<CropRect> = picked.iter().map(|c| c.rect).collect();
            (manifest, rects.clone(), portfolio, Some(rects))
        }
    };

    let crops = rects
        .iter()
        .map(|r| resize_to_s(&extract_crop(image, r)?, s))
        .collect::<Result<Vec<_>>>()?;
    let overlay = config
        .overlay
        .then(|| render_overlay(image, &portfolio, baseline.as_deref()));
    Ok(GeneratedPortfolio {
        h_norm: portfolio.h_norm,
        manifest,
        crops,
        overlay,
    })
}

/// Write a computed portfolio to `out` through a sibling staging directory,
/// so `out` is either fully written or untouched.
pub fn commit_portfolio(generated: &GeneratedPortfolio, out: &Path) -> Result<()> {
    let parent = match out.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    fs::create_dir_all(&parent).map_err(|e| Error::io(&parent, e))?;
    let staging = tempfile::Builder::new()
        .prefix(".funnel-staging-")
        .tempdir_in(&parent)
        .map_err(|e| Error::io(&parent, e))?;

    for (i, crop) in generated.crops.iter().enumerate() {
        crop.save_png(&staging.path().join(crop_file_name(i)))?;
    }
    let manifest_path = staging.path().join("manifest.json");
    fs::write(&manifest_path, generated.manifest.to_json())
        .map_err(|e| Error::io(&manifest_path, e))?;
    if let Some(overlay) = &generated.overlay {
        overlay.save_png(&staging.path().join("overlay.png"))?;
    }

    if out.exists() {
        fs::remove_dir_all(out).map_err(|e| Error::io(out, e))?;
    }
    let staged = staging.keep();
    fs::rename(&staged, out).map_err(|e| {
        let _ = fs::remove_dir_all(&staged);
        Error::io(out, e)
    })?;
    Ok(())
}

/// Load inputs, build the portfolio and write it to `out`.
pub fn cmd_generate(
    image_path: &Path,
    dump_path: &Path,
    out: &Path,
    config: &RunConfig,
) -> Result<GeneratedPortfolio> {
    let dump = AttentionDump::from_path(dump_path)?;
    let image = RasterImage::load(image_path)?;
    let generated = compute_portfolio(image_path, &image, &dump, config)?;
    commit_portfolio(&generated, out)?;
    Ok(generated)
}

/// One entry of a batch listing. Relative paths are resolved against the
/// listing file's directory.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BatchPair {
    pub image: PathBuf,
    pub attn: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum Listing {
    Pairs(Vec<BatchPair>),
    Wrapped { pairs: Vec<BatchPair> },
}

pub fn read_listing(path: &Path) -> Result<Vec<BatchPair>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let listing: Listing = serde_json::from_str(&text)?;
    let pairs = match listing {
        Listing::Pairs(p) | Listing::Wrapped { pairs: p } => p,
    };
    let base = path.parent().unwrap_or(Path::new(""));
    Ok(pairs
        .into_iter()
        .map(|p| BatchPair {
            image: base.join(p.image),
            attn: base.join(p.attn),
            name: p.name,
        })
        .collect())
}

#[derive(Debug, Clone, Serialize)]
pub struct ErrorInfo {
    pub kind: &'static str,
    pub message: String,
}

impl From<&Error> for ErrorInfo {
    fn from(e: &Error) -> Self {
        Self {
            kind: e.kind(),
            message: e.to_string(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PairSummary {
    pub index: usize,
    pub name: String,
    pub image: String,
    pub attn: String,
    pub status: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub h_norm: Option<Fixed>,
    pub flags: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<ErrorInfo>,
}

#[derive(Debug, Clone, Serialize)]
pub struct DegenerateTally {
    /// Portfolios whose grid had no attention mass.
    pub zero_sum_grids: usize,
    /// Portfolios carrying at least one flag of any kind.
    pub flagged_portfolios: usize,
    /// Total flags across all portfolios.
    pub total_flags: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct HNormStats {
    pub count: usize,
    pub min: Fixed,
    pub max: Fixed,
    pub mean: Fixed,
    pub median: Fixed,
    pub std: Fixed,
}

impl HNormStats {
    pub fn from_values(values: &[f64], precision: usize) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        let n = sorted.len();
        let mean = sorted.iter().sum::<f64>() / n as f64;
        let var = sorted.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64;
        let median = if n % 2 == 1 {
            sorted[n / 2]
        } else {
            (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
        };
        let f = |v: f64| Fixed::new(v, precision);
        Some(Self {
            count: n,
            min: f(sorted[0]),
            max: f(sorted[n - 1]),
            mean: f(mean),
            median: f(median),
            std: f(var.sqrt()),
        })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BatchSummary {
    pub total: usize,
    pub ok: usize,
    pub failed: usize,
    pub degenerate: DegenerateTally,
    pub h_norm: Option<HNormStats>,
    pub pairs: Vec<PairSummary>,
}

impl BatchSummary {
    pub fn exit_code(&self) -> u8 {
        match (self.ok, self.failed) {
            (_, 0) => EXIT_OK,
            (0, _) => EXIT_FAILURE,
            _ => EXIT_PARTIAL,
        }
    }
}

fn pair_dir_name(index: usize, pair: &BatchPair) -> String {
    pair.name.clone().unwrap_or_else(|| {
        let stem = pair
            .image
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        format!("{index:04}-{stem}")
    })
}

/// Generate a portfolio for every pair under `out/<name>/` and write
/// `out/summary.json`. Failures are recorded per pair.
pub fn cmd_batch(listing: &Path, out: &Path, config: &RunConfig) -> Result<BatchSummary> {
    let pairs = read_listing(listing)?;
    let names: Vec<String> = pairs
        .iter()
        .enumerate()
        .map(|(i, p)| pair_dir_name(i, p))
        .collect();
    if let Some(bad) = names
        .iter()
        .find(|n| n.is_empty() || n.contains(['/', '\\']) || *n == "." || *n == "..")
    {
        return Err(Error::invalid(format!("invalid pair name `{bad}`")));
    }
    fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;

    let results: Vec<Result<GeneratedPortfolio>> = pairs
        .par_iter()
        .zip(names.par_iter())
        .map(|(pair, name)| cmd_generate(&pair.image, &pair.attn, &out.join(name), config))
        .collect();

    let mut h_values = Vec::new();
    let mut tally = DegenerateTally {
        zero_sum_grids: 0,
        flagged_portfolios: 0,
        total_flags: 0,
    };
    let mut summaries = Vec::with_capacity(pairs.len());
    for (index, ((pair, name), result)) in pairs.iter().zip(&names).zip(results).enumerate() {
        let mut entry = PairSummary {
            index,
            name: name.clone(),
            image: pair.image.display().to_string(),
            attn: pair.attn.display().to_string(),
            status: "ok",
            h_norm: None,
            flags: vec![],
            error: None,
        };
        match result {
            Ok(generated) => {
                h_values.push(generated.h_norm);
                let m = &generated.manifest;
                tally.zero_sum_grids += usize::from(m.grid.degenerate);
                tally.flagged_portfolios += usize::from(!m.flags.is_empty());
                tally.total_flags += m.flags.len();
                entry.h_norm = Some(m.h_norm.clone());
                entry.flags = m.flags.clone();
            }
            Err(e) => {
                entry.status = "failed";
                entry.error = Some(ErrorInfo::from(&e));
            }
        }
        summaries.push(entry);
    }
    let ok = summaries.iter().filter(|s| s.status == "ok").count();
    let summary = BatchSummary {
        total: summaries.len(),
        ok,
        failed: summaries.len() - ok,
        degenerate: tally,
        h_norm: HNormStats::from_values(&h_values, config.precision),
        pairs: summaries,
    };
    let path = out.join("summary.json");
    let mut text = serde_json::to_string_pretty(&summary)?;
    text.push('\n');
    fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    Ok(summary)
}

/// A named configuration in a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepEntry {
    pub label: String,
    pub config: ScaleConfig,
}

/// Parse one sweep token: a preset label, or `custom:K:b1:g1:...:b{K-1}:g{K-1}`.
pub fn parse_sweep_entry(token: &str, resolution: u32) -> Result<SweepEntry> {
    let token = token.trim();
    if let Some(rest) = token.strip_prefix("custom:") {
        let parts: Vec<&str> = rest.split(':').collect();
        let bad = || {
            Error::invalid(format!(
                "bad custom config `{token}`; expected custom:K:b1:g1:...:b(K-1):g(K-1)"
            ))
        };
        let levels: usize = parts[0].parse().map_err(|_| bad())?;
        let values = parts[1..]
            .iter()
            .map(|v| v.parse::<f64>().map_err(|_| bad()))
            .collect::<Result<Vec<_>>>()?;
        if values.len() != 2 * levels.saturating_sub(1) {
            return Err(bad());
        }
        let params = values
            .chunks(2)
            .map(|c| LevelParams::new(c[0], c[1]))
            .collect();
        return Ok(SweepEntry {
            label: token.to_string(),
            config: ScaleConfig::new(resolution, levels, params)?,
        });
    }
    let preset = Preset::parse(token).ok_or_else(|| {
        Error::invalid(format!(
            "unknown sweep config `{token}`; valid labels: {}, or custom:K:b1:g1:...",
            Preset::valid_labels().join(", ")
        ))
    })?;
    Ok(SweepEntry {
        label: preset.label(),
        config: preset.config(resolution)?,
    })
}

/// One portfolio per entry, tabulated as CSV: label, level count, crop count,
/// entropy, then per level the requested side, final side and center.
pub fn sweep_table(
    dump: &AttentionDump,
    entries: &[SweepEntry],
    precision: usize,
) -> Result<String> {
    let geom = dump.geometry()?;
    let grid = normalize(&dump.to_grid()?)?;
    let portfolios = entries
        .iter()
        .map(|e| build_portfolio(&grid, &geom, &e.config))
        .collect::<Result<Vec<_>>>()?;
    let max_levels = entries.iter().map(|e| e.config.levels()).max().unwrap_or(0);

    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec![
        "label".to_string(),
        "levels".into(),
        "crops".into(),
        "h_norm".into(),
    ];
    for l in 0..max_levels {
        header.extend([
            format!("alpha_{l}"),
            format!("side_{l}"),
            format!("width_{l}"),
            format!("center_x_{l}"),
            format!("center_y_{l}"),
        ]);
    }
    w.write_record(&header)?;
    let fx = |v: f64| Fixed::new(v, precision).as_str().to_string();
    for (entry, p) in entries.iter().zip(&portfolios) {
        let mut row = vec![
            entry.label.clone(),
            entry.config.levels().to_string(),
            p.levels.len().to_string(),
            fx(p.h_norm),
        ];
        for l in 0..max_levels {
            match p.levels.get(l) {
                Some(level) => row.extend([
                    fx(level.alpha),
                    level.requested_side.to_string(),
                    level.rect.width().to_string(),
                    fx(level.center.x),
                    fx(level.center.y),
                ]),
                None => row.extend(std::iter::repeat_n(String::new(), 5)),
            }
        }
        w.write_record(&row)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| Error::invalid(format!("csv buffer: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv of utf-8 fields"))
}

/// Run a sweep over `tokens`, optionally checking the image against the dump.
pub fn cmd_sweep(
    image_path: Option<&Path>,
    dump_path: &Path,
    tokens: &[String],
    resolution: u32,
    precision: usize,
) -> Result<String> {
    let dump = AttentionDump::from_path(dump_path)?;
    if let Some(path) = image_path {
        let image = RasterImage::load(path)?;
        if (image.width(), image.height()) != (dump.image.width, dump.image.height) {
            return Err(Error::dump(
                "image",
                format!(
                    "dump declares {}x{} but the image is {}x{}",
                    dump.image.width,
                    dump.image.height,
                    image.width(),
                    image.height()
                ),
            ));
        }
    }
    if tokens.is_empty() {
        return Err(Error::invalid(format!(
            "no sweep configs given; valid labels: {}",
            Preset::valid_labels().join(", ")
        )));
    }
    let entries = tokens
        .iter()
        .map(|t| parse_sweep_entry(t, resolution))
        .collect::<Result<Vec<_>>>()?;
    sweep_table(&dump, &entries, precision)
}
