//! Attention dump: the JSON document an attention extractor writes for one
//! (image, question) pair.
//!
//! ```json
//! {
//!   "version": 1,
//!   "image": { "width": 640, "height": 480 },
//!   "grid": { "rows": 24, "cols": 24, "weights": [ ... ] },
//!   "provenance": { "model_id": "...", "prompt": "...", "question": "..." }
//! }
//! ```
//!
//! Instead of `grid`, a dump may carry `connector` factors (head-averaged
//! token attention plus the connector's token-to-patch attention); the grid is
//! then composed here. Exactly one of the two must be present.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::attention::{compose_connector, AttentionGrid, ConnectorMatrix, TokenAttention};
use crate::error::{Error, Result};
use crate::geometry::GridGeometry;

pub const DUMP_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ImageDims {
    pub width: u32,
    pub height: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridData {
    pub rows: usize,
    pub cols: usize,
    /// Row-major.
    pub weights: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConnectorData {
    /// Patch grid rows.
    pub rows: usize,
    /// Patch grid cols.
    pub cols: usize,
    /// Head-averaged attention over the `T` connector tokens.
    pub tokens: Vec<f64>,
    /// `T` rows of `rows * cols` patch weights.
    pub token_to_patch: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Provenance {
    pub model_id: String,
    pub prompt: String,
    pub question: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttentionDump {
    pub version: u32,
    pub image: ImageDims,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridData>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub connector: Option<ConnectorData>,
    #[serde(default)]
    pub provenance: Provenance,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub degenerate_flags: Vec<String>,
}

/// A single schema violation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub field: String,
    pub reason: String,
}

fn weight_violations(field: &str, values: &[f64], out: &mut Vec<Violation>) {
    if let Some((i, v)) = values
        .iter()
        .enumerate()
        .find(|(_, v)| !v.is_finite() || **v < 0.0)
    {
        out.push(Violation {
            field: format!("{field}[{i}]"),
            reason: format!("weight must be finite and non-negative, got {v}"),
        });
    }
}

impl AttentionDump {
    pub fn from_json_str(s: &str) -> Result<Self> {
        let dump: Self = serde_json::from_str(s)?;
        dump.validate()?;
        Ok(dump)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json_str(&text)
    }

    pub fn to_json_string(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Every schema, shape and sign violation in the dump.
    pub fn violations(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let mut push = |field: &str, reason: String| {
            out.push(Violation {
                field: field.to_string(),
                reason,
            })
        };
        if self.version != DUMP_VERSION {
            push(
                "version",
                format!(
                    "unsupported version {}, expected {DUMP_VERSION}",
                    self.version
                ),
            );
        }
        if self.image.width == 0 {
            push("image.width", "must be at least 1".into());
        }
        if self.image.height == 0 {
            push("image.height", "must be at least 1".into());
        }
        match (&self.grid, &self.connector) {
            (Some(_), Some(_)) => push(
                "grid",
                "`grid` and `connector` are mutually exclusive".into(),
            ),
            (None, None) => push("grid", "one of `grid` or `connector` is required".into()),
            _ => {}
        }
        if let Some(g) = &self.grid {
            if g.rows == 0 {
                push("grid.rows", "must be at least 1".into());
            }
            if g.cols == 0 {
                push("grid.cols", "must be at least 1".into());
            }
            if g.weights.len() != g.rows * g.cols {
                push(
                    "grid.weights",
                    format!(
                        "length {} does not match rows x cols = {}x{}",
                        g.weights.len(),
                        g.rows,
                        g.cols
                    ),
                );
            }
            weight_violations("grid.weights", &g.weights, &mut out);
        }
        if let Some(c) = &self.connector {
            let mut push = |field: &str, reason: String| {
                out.push(Violation {
                    field: field.to_string(),
                    reason,
                })
            };
            if c.rows == 0 {
                push("connector.rows", "must be at least 1".into());
            }
            if c.cols == 0 {
                push("connector.cols", "must be at least 1".into());
            }
            if c.tokens.is_empty() {
                push("connector.tokens", "must not be empty".into());
            }
            if c.token_to_patch.len() != c.tokens.len() {
                push(
                    "connector.token_to_patch",
                    format!(
                        "has {} rows but there are {} tokens",
                        c.token_to_patch.len(),
                        c.tokens.len()
                    ),
                );
            }
            if let Some((t, row)) = c
                .token_to_patch
                .iter()
                .enumerate()
                .find(|(_, r)| r.len() != c.rows * c.cols)
            {
                push(
                    &format!("connector.token_to_patch[{t}]"),
                    format!(
                        "length {} does not match rows x cols = {}x{}",
                        row.len(),
                        c.rows,
                        c.cols
                    ),
                );
            }
            weight_violations("connector.tokens", &c.tokens, &mut out);
            for (t, row) in c.token_to_patch.iter().enumerate() {
                weight_violations(&format!("connector.token_to_patch[{t}]"), row, &mut out);
            }
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        match self.violations().into_iter().next() {
            None => Ok(()),
            Some(v) => Err(Error::dump(v.field, v.reason)),
        }
    }

    pub fn grid_dims(&self) -> (usize, usize) {
        match (&self.grid, &self.connector) {
            (Some(g), _) => (g.rows, g.cols),
            (None, Some(c)) => (c.rows, c.cols),
            (None, None) => (0, 0),
        }
    }

    /// `"grid"` or `"connector"`.
    pub fn source(&self) -> &'static str {
        if self.grid.is_some() {
            "grid"
        } else {
            "connector"
        }
    }

    pub fn geometry(&self) -> Result<GridGeometry> {
        let (rows, cols) = self.grid_dims();
        GridGeometry::new(self.image.width, self.image.height, rows, cols)
    }

    /// The unnormalized spatial attention grid, composing connector factors
    /// when present.
    pub fn to_grid(&self) -> Result<AttentionGrid> {
        self.validate()?;
        match (&self.grid, &self.connector) {
            (Some(g), None) => AttentionGrid::new(g.rows, g.cols, g.weights.clone()),
            (None, Some(c)) => {
                let tok = TokenAttention::new(c.tokens.clone())?;
                let conn = ConnectorMatrix::new(c.token_to_patch.clone(), c.rows, c.cols)?;
                compose_connector(&tok, &conn)
            }
            _ => unreachable!("validated above"),
        }
    }
}
