//! Attention-grid math: head averaging, connector composition, normalization
//! and normalized Shannon entropy.
//!
//! Grids are stored row-major; index `(i, j)` is `(row, col)`.

use crate::error::{Error, Result};

/// Prompt used for the single localization forward pass. `{question}` is the
/// only placeholder.
pub const LOCALIZATION_PROMPT_TEMPLATE: &str =
    "To answer '{question}', where in the image should I look?";

/// Fill the localization prompt template with a question.
pub fn localization_prompt(question: &str) -> String {
    LOCALIZATION_PROMPT_TEMPLATE.replace("{question}", question)
}

fn check_weights(values: &[f64], what: &str) -> Result<()> {
    for (idx, &v) in values.iter().enumerate() {
        if !v.is_finite() {
            return Err(Error::invalid(format!("{what}[{idx}] is not finite ({v})")));
        }
        if v < 0.0 {
            return Err(Error::invalid(format!("{what}[{idx}] is negative ({v})")));
        }
    }
    Ok(())
}

/// Post-softmax attention of the first response token to `T` image tokens,
/// one row per head.
#[derive(Debug, Clone, PartialEq)]
pub struct RawHeadAttention {
    heads: Vec<Vec<f64>>,
}

impl RawHeadAttention {
    pub fn new(heads: Vec<Vec<f64>>) -> Result<Self> {
        let Some(first) = heads.first() else {
            return Err(Error::invalid("attention has no heads"));
        };
        let tokens = first.len();
        if tokens == 0 {
            return Err(Error::invalid("attention has no image tokens"));
        }
        for (h, row) in heads.iter().enumerate() {
            if row.len() != tokens {
                return Err(Error::invalid(format!(
                    "head {h} has {} tokens, expected {tokens}",
                    row.len()
                )));
            }
            check_weights(row, &format!("head[{h}]"))?;
        }
        Ok(Self { heads })
    }

    pub fn num_heads(&self) -> usize {
        self.heads.len()
    }

    pub fn num_tokens(&self) -> usize {
        self.heads[0].len()
    }

    pub fn heads(&self) -> &[Vec<f64>] {
        &self.heads
    }
}

/// Head-averaged attention over image tokens.
#[derive(Debug, Clone, PartialEq)]
pub struct TokenAttention(Vec<f64>);

impl TokenAttention {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::invalid("token attention is empty"));
        }
        check_weights(&weights, "tokens")?;
        Ok(Self(weights))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn weights(&self) -> &[f64] {
        &self.0
    }
}

/// Token-to-patch cross-attention of a query-transformer style connector.
///
/// Row `t` holds the attention of LLM image token `t` over the `rows * cols`
/// vision-encoder patches, flattened row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ConnectorMatrix {
    rows: usize,
    cols: usize,
    token_to_patch: Vec<Vec<f64>>,
}

impl ConnectorMatrix {
    pub fn new(token_to_patch: Vec<Vec<f64>>, rows: usize, cols: usize) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::invalid(format!("patch grid {rows}x{cols} is empty")));
        }
        if token_to_patch.is_empty() {
            return Err(Error::invalid("connector matrix has no tokens"));
        }
        let patches = rows * cols;
        for (t, row) in token_to_patch.iter().enumerate() {
            if row.len() != patches {
                return Err(Error::invalid(format!(
                    "connector row {t} has {} patches, expected {rows}x{cols} = {patches}",
                    row.len()
                )));
            }
            check_weights(row, &format!("connector[{t}]"))?;
        }
        Ok(Self {
            rows,
            cols,
            token_to_patch,
        })
    }

    pub fn num_tokens(&self) -> usize {
        self.token_to_patch.len()
    }

    pub fn grid_dims(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn token_to_patch(&self) -> &[Vec<f64>] {
        &self.token_to_patch
    }
}

/// Dense `rows x cols` grid of non-negative attention weights.
#[derive(Debug, Clone, PartialEq)]
pub struct AttentionGrid {
    rows: usize,
    cols: usize,
    weights: Vec<f64>,
    normalized: bool,
    degenerate: bool,
}

impl AttentionGrid {
    /// Unnormalized grid from row-major weights.
    pub fn new(rows: usize, cols: usize, weights: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::invalid(format!("grid {rows}x{cols} is empty")));
        }
        if weights.len() != rows * cols {
            return Err(Error::invalid(format!(
                "grid {rows}x{cols} needs {} weights, got {}",
                rows * cols,
                weights.len()
            )));
        }
        check_weights(&weights, "grid")?;
        Ok(Self {
            rows,
            cols,
            weights,
            normalized: false,
            degenerate: false,
        })
    }

    /// Unnormalized grid from nested rows.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::invalid("ragged grid rows"));
        }
        Self::new(rows.len(), cols, rows.concat())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.weights[i * self.cols + j]
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    /// Set when normalization fell back to a uniform grid because the input
    /// carried no mass.
    pub fn is_degenerate(&self) -> bool {
        self.degenerate
    }

    pub fn total(&self) -> f64 {
        self.weights.iter().sum()
    }
}

/// Mean over heads.
pub fn average_heads(raw: &RawHeadAttention) -> Result<TokenAttention> {
    let heads = raw.num_heads();
    if heads == 0 {
        return Err(Error::invalid("attention has no heads"));
    }
    let mut out = vec![0.0; raw.num_tokens()];
    for row in raw.heads() {
        for (acc, &w) in out.iter_mut().zip(row) {
            *acc += w;
        }
    }
    let scale = heads as f64;
    out.iter_mut().for_each(|v| *v /= scale);
    TokenAttention::new(out)
}

/// Push token attention through the connector onto the patch grid:
/// `grid[p] = sum_t tok[t] * conn[t][p]`.
pub fn compose_connector(tok: &TokenAttention, conn: &ConnectorMatrix) -> Result<AttentionGrid> {
    if tok.len() != conn.num_tokens() {
        return Err(Error::invalid(format!(
            "token attention has {} entries but connector has {} token rows",
            tok.len(),
            conn.num_tokens()
        )));
    }
    let (rows, cols) = conn.grid_dims();
    let mut grid = vec![0.0; rows * cols];
    for (&w, row) in tok.weights().iter().zip(conn.token_to_patch()) {
        if w == 0.0 {
            continue;
        }
        for (acc, &c) in grid.iter_mut().zip(row) {
            *acc += w * c;
        }
    }
    AttentionGrid::new(rows, cols, grid)
}

/// Row-major reshape for models whose image tokens map one-to-one onto patches.
pub fn reshape_direct(tok: &TokenAttention, rows: usize, cols: usize) -> Result<AttentionGrid> {
    if tok.len() != rows * cols {
        return Err(Error::invalid(format!(
            "{} tokens cannot be reshaped into {rows}x{cols}",
            tok.len()
        )));
    }
    AttentionGrid::new(rows, cols, tok.weights().to_vec())
}

/// Scale the grid to sum to one. A grid with no mass becomes uniform and is
/// marked degenerate.
pub fn normalize(grid: &AttentionGrid) -> Result<AttentionGrid> {
    check_weights(grid.weights(), "grid")?;
    let total = grid.total();
    if !total.is_finite() {
        return Err(Error::invalid("grid total overflows"));
    }
    let n = grid.len();
    let (weights, degenerate) = if total > 0.0 {
        (grid.weights.iter().map(|&w| w / total).collect(), false)
    } else {
        (vec![1.0 / n as f64; n], true)
    };
    Ok(AttentionGrid {
        rows: grid.rows,
        cols: grid.cols,
        weights,
        normalized: true,
        degenerate,
    })
}

/// Shannon entropy of a normalized grid divided by `ln(rows * cols)`, in `[0, 1]`.
///
/// Uses `0 * ln 0 = 0`.
pub fn entropy_norm(grid: &AttentionGrid) -> Result<f64> {
    if !grid.is_normalized() {
        return Err(Error::invalid("entropy requires a normalized grid"));
    }
    let n = grid.len();
    if n < 2 {
        return Err(Error::invalid(
            "entropy is undefined for a 1x1 grid (log of cell count is zero)",
        ));
    }
    let h: f64 = grid
        .weights()
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| -p * p.ln())
        .sum();
    let h = h / (n as f64).ln();
    // Sums can drift a few ulps outside the unit interval.
    Ok(if h <= 0.0 { 0.0 } else { h.min(1.0) })
}
