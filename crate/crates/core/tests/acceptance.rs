//! Acceptance gate: one PASS/FAIL line per criterion, nonzero exit on failure.
//!
//! Every check compares the library against an oracle written here from the
//! definitions, not against the library's own helpers.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use funnel::attention::{entropy_norm, normalize, AttentionGrid};
use funnel::cli::commands::{cmd_sweep, parse_sweep_entry};
use funnel::cli::dump::{AttentionDump, GridData, ImageDims, Provenance, DUMP_VERSION};
use funnel::cli::manifest::Manifest;
use funnel::geometry::{CropRect, GridGeometry};
use funnel::portfolio::{
    build_portfolio, expansion_factor, refine_center, top_k_crops, LevelParams, Portfolio,
    RefineFlag, ScaleConfig,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check, Option<Duration>);

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn random_weights(r: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let sparsity: f64 = r.gen_range(0.0..0.8);
    let mut w: Vec<f64> = (0..n)
        .map(|_| {
            if r.gen_bool(sparsity) {
                0.0
            } else {
                r.gen::<f64>()
            }
        })
        .collect();
    if w.iter().all(|&v| v == 0.0) {
        w[r.gen_range(0..n)] = 1.0;
    }
    w
}

fn normalized(rows: usize, cols: usize, w: Vec<f64>) -> AttentionGrid {
    normalize(&AttentionGrid::new(rows, cols, w).unwrap()).unwrap()
}

// ---------------------------------------------------------------------------
// Oracles

/// Entropy in bits over a sorted copy with compensated summation, rescaled by
/// log2 of the cell count.
fn oracle_entropy(p: &[f64]) -> f64 {
    let mut terms: Vec<f64> = p
        .iter()
        .filter(|&&v| v > 0.0)
        .map(|&v| v * (1.0 / v).log2())
        .collect();
    terms.sort_by(f64::total_cmp);
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    for t in terms {
        let y = t - comp;
        let s = sum + y;
        comp = (s - sum) - y;
        sum = s;
    }
    sum / (p.len() as f64).log2()
}

fn center_of(w: u32, h: u32, rows: usize, cols: usize, i: usize, j: usize) -> (f64, f64) {
    (
        (j as f64 + 0.5) * w as f64 / cols as f64,
        (i as f64 + 0.5) * h as f64 / rows as f64,
    )
}

fn inside_half_open(r: [u32; 4], (x, y): (f64, f64)) -> bool {
    x >= r[0] as f64 && x < r[2] as f64 && y >= r[1] as f64 && y < r[3] as f64
}

/// Covered blocks by center inclusion, or the single nearest block.
fn oracle_cover(
    w: u32,
    h: u32,
    rows: usize,
    cols: usize,
    r: [u32; 4],
) -> (Vec<(usize, usize)>, bool) {
    let all: Vec<(usize, usize)> = (0..rows)
        .flat_map(|i| (0..cols).map(move |j| (i, j)))
        .collect();
    let covered: Vec<_> = all
        .iter()
        .copied()
        .filter(|&(i, j)| inside_half_open(r, center_of(w, h, rows, cols, i, j)))
        .collect();
    if !covered.is_empty() {
        return (covered, false);
    }
    let mid = ((r[0] + r[2]) as f64 / 2.0, (r[1] + r[3]) as f64 / 2.0);
    let dist = |&(i, j): &(usize, usize)| {
        let c = center_of(w, h, rows, cols, i, j);
        (c.0 - mid.0).powi(2) + (c.1 - mid.1).powi(2)
    };
    let mut best = all[0];
    for b in &all {
        if dist(b) < dist(&best) {
            best = *b;
        }
    }
    (vec![best], true)
}

fn oracle_centroid(
    p: &[f64],
    w: u32,
    h: u32,
    rows: usize,
    cols: usize,
    r: [u32; 4],
) -> ((f64, f64), Option<RefineFlag>) {
    let (blocks, fallback) = oracle_cover(w, h, rows, cols, r);
    let (mut m, mut sx, mut sy) = (0.0, 0.0, 0.0);
    for (i, j) in blocks {
        let (x, y) = center_of(w, h, rows, cols, i, j);
        let wt = p[i * cols + j];
        m += wt;
        sx += wt * x;
        sy += wt * y;
    }
    if m == 0.0 {
        let mid = ((r[0] + r[2]) as f64 / 2.0, (r[1] + r[3]) as f64 / 2.0);
        return (mid, Some(RefineFlag::ZeroMass));
    }
    let (x, y) = (sx / m, sy / m);
    if fallback {
        let x = x.max(r[0] as f64).min(r[2] as f64);
        let y = y.max(r[1] as f64).min(r[3] as f64);
        return ((x, y), Some(RefineFlag::NearestBlock));
    }
    ((x, y), None)
}

/// Square window of integer side centered on `c`, shifted to stay inside.
fn oracle_window(c: (f64, f64), side: u32, w: u32, h: u32) -> [u32; 4] {
    let side = side.min(w).min(h);
    let lead = |v: f64, ext: u32| -> u32 {
        let l = (v - side as f64 / 2.0 + 1e-9).floor();
        l.max(0.0).min((ext - side) as f64) as u32
    };
    let (l, t) = (lead(c.0, w), lead(c.1, h));
    [l, t, l + side, t + side]
}

fn intersects(a: [u32; 4], b: [u32; 4]) -> bool {
    a[0].max(b[0]) < a[2].min(b[2]) && a[1].max(b[1]) < a[3].min(b[3])
}

/// Greedy by repeated arg-max over the remaining candidates.
fn oracle_top_k(
    p: &[f64],
    w: u32,
    h: u32,
    rows: usize,
    cols: usize,
    k: usize,
    side: u32,
) -> Vec<((usize, usize), [u32; 4], f64)> {
    let mut pool = Vec::new();
    for i in 0..rows {
        for j in 0..cols {
            let rect = oracle_window(center_of(w, h, rows, cols, i, j), side, w, h);
            let (blocks, _) = oracle_cover(w, h, rows, cols, rect);
            let sum: f64 = blocks.iter().map(|&(bi, bj)| p[bi * cols + bj]).sum();
            pool.push(Some(((i, j), rect, sum / blocks.len() as f64)));
        }
    }
    let mut out: Vec<((usize, usize), [u32; 4], f64)> = Vec::new();
    while out.len() < k {
        let mut best: Option<usize> = None;
        for (idx, c) in pool.iter().enumerate() {
            let Some(c) = c else { continue };
            if out.iter().any(|o| intersects(o.1, c.1)) {
                continue;
            }
            if best.is_none_or(|b| c.2 > pool[b].unwrap().2) {
                best = Some(idx);
            }
        }
        match best {
            Some(b) => out.push(pool[b].take().unwrap()),
            None => break,
        }
    }
    out
}

fn round_half_up(v: f64) -> u32 {
    (v + 0.5 + 1e-9).floor() as u32
}

// ---------------------------------------------------------------------------
// Criteria

fn entropy_suite() -> Check {
    let mut r = rng(1);
    let mut worst: f64 = 0.0;
    for n in 0..1000 {
        let (rows, cols) = (r.gen_range(2..=32), r.gen_range(2..=32));
        let grid = normalized(rows, cols, random_weights(&mut r, rows * cols));
        let h = entropy_norm(&grid).map_err(|e| e.to_string())?;
        ensure((0.0..=1.0).contains(&h), || {
            format!("grid {n}: H={h} outside [0,1]")
        })?;
        let d = (h - oracle_entropy(grid.weights()).clamp(0.0, 1.0)).abs();
        worst = worst.max(d);
        ensure(d <= 1e-12, || {
            format!("grid {n}: differs from oracle by {d:e}")
        })?;
    }
    for rows in 1..=32 {
        for cols in 1..=32 {
            if rows * cols < 2 {
                continue;
            }
            let n = rows * cols;
            let h = entropy_norm(&normalized(rows, cols, vec![1.0; n])).unwrap();
            ensure((h - 1.0).abs() <= 1e-12, || {
                format!("uniform {rows}x{cols}: H={h}")
            })?;
            let hot = r.gen_range(0..n);
            let w = (0..n).map(|i| if i == hot { 1.0 } else { 0.0 }).collect();
            let h = entropy_norm(&normalized(rows, cols, w)).unwrap();
            ensure(h == 0.0, || format!("one-hot {rows}x{cols}: H={h}"))?;
        }
    }
    let h = entropy_norm(&normalized(2, 2, vec![0.5, 0.5, 0.0, 0.0])).unwrap();
    ensure((h - 0.5).abs() <= 1e-12, || format!("half mass: H={h}"))?;
    Ok(format!("1000 random grids, max oracle gap {worst:.1e}"))
}

fn alpha_bounds() -> Check {
    let cfg = ScaleConfig::default();
    let mut r = rng(2);
    for _ in 0..1000 {
        let h: f64 = r.gen();
        let a1 = expansion_factor(1, h, &cfg).unwrap();
        let a2 = expansion_factor(2, h, &cfg).unwrap();
        ensure((1.2..=1.8).contains(&a1), || format!("h={h}: alpha1={a1}"))?;
        ensure((1.6..=2.8).contains(&a2), || format!("h={h}: alpha2={a2}"))?;
        ensure((a1 - (1.2 + 0.6 * h)).abs() < 1e-11, || {
            format!("h={h}: alpha1={a1}")
        })?;
        ensure((a2 - (1.6 + 1.2 * h)).abs() < 1e-11, || {
            format!("h={h}: alpha2={a2}")
        })?;
    }
    let ends = [
        expansion_factor(1, 0.0, &cfg).unwrap(),
        expansion_factor(1, 1.0, &cfg).unwrap(),
        expansion_factor(2, 0.0, &cfg).unwrap(),
        expansion_factor(2, 1.0, &cfg).unwrap(),
    ];
    ensure(ends == [1.2, 1.8, 1.6, 2.8], || {
        format!("endpoints {ends:?}")
    })?;
    Ok("1000 samples, endpoints exact".into())
}

fn centroid_oracle() -> Check {
    let mut r = rng(3);
    let (mut fallbacks, mut zero) = (0, 0);
    for n in 0..500 {
        let (w, h) = (r.gen_range(16..1600u32), r.gen_range(16..1600u32));
        let (rows, cols) = (r.gen_range(1..=24), r.gen_range(1..=24));
        let mut weights = random_weights(&mut r, rows * cols);
        if n % 10 == 0 {
            // Concentrate mass so some regions see none of it.
            let keep = r.gen_range(0..weights.len());
            for (i, v) in weights.iter_mut().enumerate() {
                if i != keep {
                    *v = 0.0;
                }
            }
        }
        let grid = normalized(rows, cols, weights);
        let geom = GridGeometry::new(w, h, rows, cols).unwrap();
        let (rw, rh) = if n % 5 == 0 {
            (r.gen_range(1..=w.min(8)), r.gen_range(1..=h.min(8)))
        } else {
            (r.gen_range(1..=w), r.gen_range(1..=h))
        };
        let (l, t) = (r.gen_range(0..=w - rw), r.gen_range(0..=h - rh));
        let region = CropRect::new(l, t, l + rw, t + rh).unwrap();
        let got = refine_center(&grid, &region, &geom).map_err(|e| e.to_string())?;
        let (want, flag) = oracle_centroid(grid.weights(), w, h, rows, cols, region.as_array());
        let d = (got.center.x - want.0)
            .abs()
            .max((got.center.y - want.1).abs());
        ensure(d <= 1e-9, || format!("instance {n}: center off by {d:e}"))?;
        ensure(got.flag == flag, || {
            format!("instance {n}: flag {:?} vs {flag:?}", got.flag)
        })?;
        match flag {
            Some(RefineFlag::NearestBlock) => fallbacks += 1,
            Some(RefineFlag::ZeroMass) => zero += 1,
            None => {}
        }
    }
    Ok(format!(
        "500 instances ({fallbacks} nearest-block, {zero} zero-mass)"
    ))
}

fn dump_for(w: u32, h: u32, rows: usize, cols: usize, weights: Vec<f64>) -> AttentionDump {
    AttentionDump {
        version: DUMP_VERSION,
        image: ImageDims {
            width: w,
            height: h,
        },
        grid: Some(GridData {
            rows,
            cols,
            weights,
        }),
        connector: None,
        provenance: Provenance::default(),
        degenerate_flags: vec![],
    }
}

fn random_config(r: &mut ChaCha8Rng) -> ScaleConfig {
    let s = r.gen_range(16..=448);
    let levels = r.gen_range(1..=6);
    if levels <= 4 && r.gen_bool(0.5) {
        return ScaleConfig::with_levels(s, levels).unwrap();
    }
    let params = (1..levels)
        .map(|_| LevelParams::new(r.gen_range(1.0..2.5), r.gen_range(0.0..2.0)))
        .collect();
    ScaleConfig::new(s, levels, params).unwrap()
}

fn hierarchy_invariants() -> Check {
    let mut r = rng(4);
    let mut levels_seen = 0;
    for n in 0..500 {
        let (w, h) = (r.gen_range(32..2400u32), r.gen_range(32..2400u32));
        let (rows, cols) = (r.gen_range(2..=24), r.gen_range(2..=24));
        let weights = random_weights(&mut r, rows * cols);
        let geom = GridGeometry::new(w, h, rows, cols).unwrap();
        let grid = normalized(rows, cols, weights.clone());
        let cfg = random_config(&mut r);
        let p = build_portfolio(&grid, &geom, &cfg).map_err(|e| e.to_string())?;
        ensure(p.levels.len() == cfg.levels(), || {
            format!("portfolio {n}: level count")
        })?;
        let full = [0, 0, w, h];
        for (k, l) in p.levels.iter().enumerate() {
            let region = l.region.as_array();
            let expect = if k == 0 {
                full
            } else {
                p.levels[k - 1].rect.as_array()
            };
            ensure(region == expect, || {
                format!("portfolio {n} level {k}: region {region:?} vs {expect:?}")
            })?;
            let c = (l.center.x, l.center.y);
            ensure(
                c.0 >= region[0] as f64
                    && c.0 <= region[2] as f64
                    && c.1 >= region[1] as f64
                    && c.1 <= region[3] as f64,
                || format!("portfolio {n} level {k}: center {c:?} outside {region:?}"),
            )?;
            let rect = l.rect.as_array();
            ensure(
                rect[2] <= w && rect[3] <= h && rect[0] < rect[2] && rect[1] < rect[3],
                || format!("portfolio {n} level {k}: rect {rect:?} outside {w}x{h}"),
            )?;
            ensure(rect[2] - rect[0] == rect[3] - rect[1], || {
                format!("portfolio {n} level {k}: not square")
            })?;
            levels_seen += 1;
        }
        let dump = dump_for(w, h, rows, cols, weights);
        let once = Manifest::for_portfolio("img.png", &dump, "funnel", &p, 9).to_json();
        let again_p = build_portfolio(&grid, &geom, &cfg).unwrap();
        let again = Manifest::for_portfolio("img.png", &dump, "funnel", &again_p, 9).to_json();
        ensure(once == again, || format!("portfolio {n}: manifests differ"))?;
    }
    Ok(format!("500 portfolios, {levels_seen} levels"))
}

fn same_portfolio(a: &Portfolio, b: &Portfolio, tol: f64) -> Result<bool, String> {
    let close =
        |x: f64, y: f64, what: &str| ensure((x - y).abs() <= tol, || format!("{what}: {x} vs {y}"));
    close(a.h_norm, b.h_norm, "h_norm")?;
    ensure(a.grid_degenerate == b.grid_degenerate, || {
        "degenerate flag".into()
    })?;
    ensure(a.flags() == b.flags(), || {
        format!("flags {:?} vs {:?}", a.flags(), b.flags())
    })?;
    let mut exact = a.h_norm == b.h_norm;
    for (x, y) in a.levels.iter().zip(&b.levels) {
        ensure(x.rect == y.rect && x.region == y.region, || {
            format!("level {} rects", x.level)
        })?;
        ensure(x.requested_side == y.requested_side, || {
            format!("level {} side", x.level)
        })?;
        ensure(x.label == y.label && x.flag == y.flag, || {
            format!("level {} label/flag", x.level)
        })?;
        close(x.alpha, y.alpha, "alpha")?;
        close(x.center.x, y.center.x, "center x")?;
        close(x.center.y, y.center.y, "center y")?;
        exact &= x.alpha == y.alpha && x.center == y.center;
    }
    ensure(a.levels.len() == b.levels.len(), || "level count".into())?;
    Ok(exact)
}

fn scale_invariance() -> Check {
    let mut r = rng(5);
    let mut bit_exact = 0;
    for n in 0..100 {
        let (w, h) = (r.gen_range(64..2000u32), r.gen_range(64..2000u32));
        let (rows, cols) = (r.gen_range(2..=24), r.gen_range(2..=24));
        let a = random_weights(&mut r, rows * cols);
        let c = if n % 2 == 0 {
            1e3 * (1.0 - r.gen::<f64>())
        } else {
            10f64.powf(r.gen_range(-6.0..3.0))
        };
        let ca: Vec<f64> = a.iter().map(|v| v * c).collect();
        let geom = GridGeometry::new(w, h, rows, cols).unwrap();
        let cfg = random_config(&mut r);
        let p1 = build_portfolio(
            &normalize(&AttentionGrid::new(rows, cols, a).unwrap()).unwrap(),
            &geom,
            &cfg,
        )
        .unwrap();
        let p2 = build_portfolio(
            &normalize(&AttentionGrid::new(rows, cols, ca).unwrap()).unwrap(),
            &geom,
            &cfg,
        )
        .unwrap();
        if same_portfolio(&p1, &p2, 1e-9).map_err(|e| format!("grid {n} (c={c}): {e}"))? {
            bit_exact += 1;
        }
    }
    Ok(format!(
        "100 grids, integer fields equal, reals within 1e-9 ({bit_exact} bit-identical)"
    ))
}

fn top_k_oracle() -> Check {
    let mut r = rng(6);
    let mut picked_total = 0;
    for n in 0..200 {
        let (rows, cols) = (r.gen_range(1..=6), r.gen_range(1..=6));
        let (w, h) = (r.gen_range(8..900u32), r.gen_range(8..900u32));
        let k = r.gen_range(1..=3);
        let side = r.gen_range(1..=w.max(h));
        let mut weights = random_weights(&mut r, rows * cols);
        if n % 7 == 0 {
            weights.iter_mut().for_each(|v| *v = 1.0);
        }
        let grid = normalized(rows, cols, weights);
        let geom = GridGeometry::new(w, h, rows, cols).unwrap();
        let got = top_k_crops(&grid, &geom, k, side as f64).map_err(|e| e.to_string())?;
        let want = oracle_top_k(grid.weights(), w, h, rows, cols, k, side);
        ensure(got.len() == want.len(), || {
            format!("instance {n}: {} vs {} crops", got.len(), want.len())
        })?;
        for (g, o) in got.iter().zip(&want) {
            ensure(
                g.anchor == o.0 && g.rect.as_array() == o.1 && g.score == o.2,
                || {
                    format!(
                        "instance {n}: got {:?}/{:?}/{} want {:?}",
                        g.anchor,
                        g.rect.as_array(),
                        g.score,
                        o
                    )
                },
            )?;
        }
        for (a, g) in got.iter().enumerate() {
            for b in &got[a + 1..] {
                ensure(!intersects(g.rect.as_array(), b.rect.as_array()), || {
                    format!("instance {n}: overlap")
                })?;
                ensure(g.score >= b.score, || {
                    format!("instance {n}: scores increase")
                })?;
            }
        }
        picked_total += got.len();
    }
    Ok(format!("200 instances, {picked_total} windows"))
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures/golden")
        .join(name)
}

fn ablation_sweep() -> Check {
    let tokens: Vec<String> = ["k0", "k1", "k2", "k3", "k4"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let csv = cmd_sweep(
        Some(&fixture("scene.png")),
        &fixture("scene_attn.json"),
        &tokens,
        336,
        9,
    )
    .map_err(|e| e.to_string())?;
    let crops: Vec<String> = csv
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(2).unwrap_or_default().to_string())
        .collect();
    ensure(crops == ["0", "1", "2", "3", "4"], || {
        format!("crop counts {crops:?}")
    })?;

    let mut r = rng(7);
    let entry = parse_sweep_entry("static", 336).map_err(|e| e.to_string())?;
    let (mut h_min, mut h_max) = (f64::INFINITY, f64::NEG_INFINITY);
    let mut sides: Option<Vec<u32>> = None;
    for n in 0..100 {
        let (rows, cols) = (r.gen_range(2..=16), r.gen_range(2..=16));
        let weights = if n == 0 {
            vec![1.0; rows * cols]
        } else if n == 1 {
            (0..rows * cols).map(|i| (i == 0) as u8 as f64).collect()
        } else {
            random_weights(&mut r, rows * cols)
        };
        let geom = GridGeometry::new(4000, 3000, rows, cols).unwrap();
        let p = build_portfolio(&normalized(rows, cols, weights), &geom, &entry.config).unwrap();
        h_min = h_min.min(p.h_norm);
        h_max = h_max.max(p.h_norm);
        let s: Vec<u32> = p.levels.iter().map(|l| l.requested_side).collect();
        let expect = vec![336, round_half_up(1.2 * 336.0), round_half_up(1.6 * 336.0)];
        ensure(s == expect, || {
            format!("static sides {s:?} vs {expect:?} at H={}", p.h_norm)
        })?;
        let widths: Vec<u32> = p.levels.iter().map(|l| l.rect.width()).collect();
        ensure(widths == expect, || format!("static widths {widths:?}"))?;
        if let Some(prev) = &sides {
            ensure(*prev == s, || "static sides vary with entropy".into())?;
        }
        sides = Some(s);
    }
    Ok(format!(
        "k0..k4 -> 0..4 crops; static sides {:?} for H in [{h_min:.3}, {h_max:.3}]",
        sides.unwrap()
    ))
}

fn cli_golden() -> Check {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let out = tmp.path().join("golden");
    let status = Command::new(env!("CARGO_BIN_EXE_funnel"))
        .args(["generate", "--image"])
        .arg(fixture("scene.png"))
        .arg("--attn")
        .arg(fixture("scene_attn.json"))
        .arg("--config")
        .arg(fixture("config.json"))
        .arg("--out")
        .arg(&out)
        .output()
        .map_err(|e| e.to_string())?;
    ensure(status.status.success(), || {
        String::from_utf8_lossy(&status.stderr).into_owned()
    })?;
    let got = fs::read(out.join("manifest.json")).map_err(|e| e.to_string())?;
    let want = fs::read(fixture("expected_manifest.json")).map_err(|e| e.to_string())?;
    ensure(got == want, || {
        "manifest differs from checked-in golden".into()
    })?;

    let bad_out = tmp.path().join("corrupt");
    let status = Command::new(env!("CARGO_BIN_EXE_funnel"))
        .args(["generate", "--image"])
        .arg(fixture("scene.png"))
        .arg("--attn")
        .arg(fixture("corrupt_attn.json"))
        .arg("--out")
        .arg(&bad_out)
        .output()
        .map_err(|e| e.to_string())?;
    ensure(!status.status.success(), || "corrupt dump accepted".into())?;
    let leftovers: Vec<_> = fs::read_dir(tmp.path())
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .filter(|n| n != "golden")
        .collect();
    ensure(leftovers.is_empty(), || {
        format!("partial outputs left: {leftovers:?}")
    })?;
    Ok(format!(
        "{} manifest bytes match; corrupt dump exit {:?}",
        got.len(),
        status.status.code()
    ))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("entropy suite", entropy_suite, Some(Duration::from_secs(5))),
        (
            "expansion-factor bounds",
            alpha_bounds,
            Some(Duration::from_secs(1)),
        ),
        (
            "centroid oracle",
            centroid_oracle,
            Some(Duration::from_secs(5)),
        ),
        (
            "hierarchy invariants",
            hierarchy_invariants,
            Some(Duration::from_secs(10)),
        ),
        ("scale invariance", scale_invariance, None),
        ("top-k oracle", top_k_oracle, None),
        ("ablation sweep shape", ablation_sweep, None),
        ("cli golden files", cli_golden, None),
    ];
    let mut failed = 0;
    for (name, check, budget) in criteria {
        let start = Instant::now();
        let result = check();
        let took = start.elapsed();
        let over = budget.filter(|b| took > *b);
        match (result, over) {
            (Ok(detail), None) => println!("PASS {name} ({detail}; {took:.2?})"),
            (Ok(detail), Some(b)) => {
                failed += 1;
                println!("FAIL {name} ({detail}; {took:.2?} exceeds {b:?})");
            }
            (Err(why), _) => {
                failed += 1;
                println!("FAIL {name}: {why}");
            }
        }
    }
    println!("{} of 8 criteria passed", 8 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
