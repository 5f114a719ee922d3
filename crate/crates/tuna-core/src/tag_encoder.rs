//! Image-aware tag encoding.
//!
//! A tag string becomes a tuple of (a) a tag-aware image token: the tag's
//! text embedding used as a cross-attention query over the image's grid
//! features, passed through the two-layer MLP connector, and (b) the tag's
//! per-token text embeddings projected through the same connector. Each
//! tuple also carries a raw relevance score, the cosine between the tag's
//! text embedding and the image's global feature; [`tune_weights`]
//! min-max-normalizes those scores into [0, 1] per query.
//!
//! The connector activation is the tanh approximation of GELU,
//! `0.5 x (1 + tanh(sqrt(2/pi) (x + 0.044715 x^3)))`, fixed across the
//! crate.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::embedder::{
    cosine, dot_f64, stub_text_embed, EmbedError, EmbeddingVector, EncoderSpec, GridFeatures,
};

#[derive(Debug, Error, PartialEq)]
pub enum EncodeError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("non-finite value encountered")]
    NonFinite,
    #[error("input is empty")]
    EmptyInput,
    #[error("tag is empty")]
    EmptyTag,
    #[error(transparent)]
    Embed(#[from] EmbedError),
}

/// Softmax attention row over the grid cells plus the attended output.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AttentionTrace {
    pub attention_weights: Vec<f64>,
    pub output: Vec<f64>,
}

impl AttentionTrace {
    /// CSV with one weight per grid cell, for heatmap tooling.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("cell,weight\n");
        for (i, w) in self.attention_weights.iter().enumerate() {
            out.push_str(&format!("{i},{w:.6}\n"));
        }
        out
    }
}

/// Cross-attention of a single query over the grid: logits are scaled dot
/// products `q . row / sqrt(D)`, weights a max-subtracted softmax, output
/// the weighted sum of grid rows.
pub fn cross_attention(
    q: &EmbeddingVector,
    grid: &GridFeatures,
) -> Result<AttentionTrace, EncodeError> {
    if q.dim() != grid.dim() {
        return Err(EncodeError::DimensionMismatch {
            expected: grid.dim(),
            got: q.dim(),
        });
    }
    let scale = 1.0 / (grid.dim() as f64).sqrt();
    let logits: Vec<f64> = grid
        .rows()
        .map(|row| dot_f64(q.as_slice(), row) * scale)
        .collect();
    if logits.iter().any(|l| !l.is_finite()) {
        return Err(EncodeError::NonFinite);
    }

    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&l| (l - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    let attention_weights: Vec<f64> = exps.iter().map(|&e| e / total).collect();

    let mut output = vec![0.0f64; grid.dim()];
    for (w, row) in attention_weights.iter().zip(grid.rows()) {
        for (acc, &x) in output.iter_mut().zip(row) {
            *acc += w * f64::from(x);
        }
    }
    Ok(AttentionTrace {
        attention_weights,
        output,
    })
}

/// Tanh approximation of the Gaussian error linear unit.
fn gelu(x: f64) -> f64 {
    const SQRT_2_OVER_PI: f64 = 0.797_884_560_802_865_4;
    0.5 * x * (1.0 + (SQRT_2_OVER_PI * (x + 0.044_715 * x * x * x)).tanh())
}

#[derive(Debug, Clone, Deserialize)]
struct ConnectorParamsRaw {
    dim_in: usize,
    dim_hidden: usize,
    dim_out: usize,
    w1: Vec<f64>,
    b1: Vec<f64>,
    w2: Vec<f64>,
    b2: Vec<f64>,
}

/// Two-layer MLP connector mapping vision-space vectors into the text
/// embedding space: `layer2(gelu(layer1(z)))`, applied row-wise. Weights
/// are row-major `[rows x cols]`; immutable after construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ConnectorParamsRaw")]
pub struct ConnectorParams {
    dim_in: usize,
    dim_hidden: usize,
    dim_out: usize,
    w1: Vec<f64>,
    b1: Vec<f64>,
    w2: Vec<f64>,
    b2: Vec<f64>,
}

impl TryFrom<ConnectorParamsRaw> for ConnectorParams {
    type Error = EncodeError;

    fn try_from(raw: ConnectorParamsRaw) -> Result<Self, EncodeError> {
        ConnectorParams::new(
            raw.dim_in, raw.dim_hidden, raw.dim_out, raw.w1, raw.b1, raw.w2, raw.b2,
        )
    }
}

impl ConnectorParams {
    pub fn new(
        dim_in: usize,
        dim_hidden: usize,
        dim_out: usize,
        w1: Vec<f64>,
        b1: Vec<f64>,
        w2: Vec<f64>,
        b2: Vec<f64>,
    ) -> Result<Self, EncodeError> {
        if dim_in == 0 || dim_hidden == 0 || dim_out == 0 {
            return Err(EncodeError::ShapeMismatch("zero dimension".into()));
        }
        let check = |name: &str, v: &[f64], expect: usize| -> Result<(), EncodeError> {
            if v.len() != expect {
                return Err(EncodeError::ShapeMismatch(format!(
                    "{name}: expected {expect} values, got {}",
                    v.len()
                )));
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(EncodeError::NonFinite);
            }
            Ok(())
        };
        check("w1", &w1, dim_hidden * dim_in)?;
        check("b1", &b1, dim_hidden)?;
        check("w2", &w2, dim_out * dim_hidden)?;
        check("b2", &b2, dim_out)?;
        Ok(Self {
            dim_in,
            dim_hidden,
            dim_out,
            w1,
            b1,
            w2,
            b2,
        })
    }

    /// Identity-shaped connector (square identity weights, zero biases), so
    /// the whole map reduces to the activation alone.
    pub fn identity(dim: usize) -> Self {
        let mut eye = vec![0.0; dim * dim];
        for i in 0..dim {
            eye[i * dim + i] = 1.0;
        }
        Self::new(dim, dim, dim, eye.clone(), vec![0.0; dim], eye, vec![0.0; dim])
            .expect("identity shapes are consistent")
    }

    /// Deterministic Xavier-uniform initialization from a seed; biases are
    /// zero.
    pub fn seeded(dim_in: usize, dim_hidden: usize, dim_out: usize, seed: u64) -> Self {
        // "conn_v1" domain separation so connector draws never collide with
        // embedding draws for the same seed.
        let mut rng = crate::rng::XorShift64Star::new(seed ^ 0x636f_6e6e_5f76_3161);
        let mut layer = |rows: usize, cols: usize| -> Vec<f64> {
            let bound = (6.0 / (rows + cols) as f64).sqrt();
            (0..rows * cols)
                .map(|_| rng.next_symmetric_f64() * bound)
                .collect()
        };
        let w1 = layer(dim_hidden, dim_in);
        let w2 = layer(dim_out, dim_hidden);
        Self::new(dim_in, dim_hidden, dim_out, w1, vec![0.0; dim_hidden], w2, vec![0.0; dim_out])
            .expect("seeded shapes are consistent")
    }

    pub fn dim_in(&self) -> usize {
        self.dim_in
    }

    pub fn dim_out(&self) -> usize {
        self.dim_out
    }

    fn affine(w: &[f64], b: &[f64], x: &[f64], rows: usize, cols: usize) -> Vec<f64> {
        let mut out = Vec::with_capacity(rows);
        for r in 0..rows {
            let mut acc = b[r];
            let row = &w[r * cols..(r + 1) * cols];
            for (wi, xi) in row.iter().zip(x) {
                acc += wi * xi;
            }
            out.push(acc);
        }
        out
    }

    /// Applies the connector to one row vector of `dim_in` values.
    pub fn apply_row(&self, z: &[f64]) -> Result<Vec<f64>, EncodeError> {
        if z.len() != self.dim_in {
            return Err(EncodeError::ShapeMismatch(format!(
                "input has {} columns, connector expects {}",
                z.len(),
                self.dim_in
            )));
        }
        if z.iter().any(|x| !x.is_finite()) {
            return Err(EncodeError::NonFinite);
        }
        let hidden: Vec<f64> = Self::affine(&self.w1, &self.b1, z, self.dim_hidden, self.dim_in)
            .into_iter()
            .map(gelu)
            .collect();
        Ok(Self::affine(&self.w2, &self.b2, &hidden, self.dim_out, self.dim_hidden))
    }

    /// Row-wise application to a matrix.
    pub fn apply_rows(&self, rows: &[Vec<f64>]) -> Result<Vec<Vec<f64>>, EncodeError> {
        rows.iter().map(|r| self.apply_row(r)).collect()
    }
}

/// Min-max normalization of relevance scores into [0, 1], order preserved.
/// A degenerate spread (all scores equal, or a single score) maps to the
/// maximum weight 1.0 so a lone tag is always fully weighted.
pub fn tune_weights(raw_scores: &[f64]) -> Result<Vec<f64>, EncodeError> {
    if raw_scores.is_empty() {
        return Err(EncodeError::EmptyInput);
    }
    if raw_scores.iter().any(|s| !s.is_finite()) {
        return Err(EncodeError::NonFinite);
    }
    let min = raw_scores.iter().copied().fold(f64::INFINITY, f64::min);
    let max = raw_scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let spread = max - min;
    if spread <= 1e-12 {
        return Ok(vec![1.0; raw_scores.len()]);
    }
    Ok(raw_scores.iter().map(|&s| (s - min) / spread).collect())
}

/// A tag's encoded representation: its tag-aware image token, per-token
/// text embeddings (both unweighted), the raw relevance score, and the
/// tuned weight once assigned.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TagTuple {
    pub tag: String,
    pub image_token: Vec<f64>,
    pub text_tokens: Vec<Vec<f64>>,
    pub raw_score: f64,
    pub weight: Option<f64>,
}

/// Encodes one tag against one image. The tag's stub text embedding serves
/// both as the attention query over the grid and as the relevance probe
/// against the global feature `cls`. Text tokens are whitespace-split and
/// stub-embedded one by one; the connector doubles as the projection into
/// the output space for them.
pub fn encode_tag(
    tag: &str,
    grid: &GridFeatures,
    cls: &EmbeddingVector,
    params: &ConnectorParams,
    spec: &EncoderSpec,
) -> Result<TagTuple, EncodeError> {
    if tag.trim().is_empty() {
        return Err(EncodeError::EmptyTag);
    }
    if grid.dim() != spec.dim || params.dim_in() != grid.dim() {
        return Err(EncodeError::DimensionMismatch {
            expected: grid.dim(),
            got: params.dim_in(),
        });
    }
    let query = stub_text_embed(tag, spec)?;
    let raw_score = cosine(&query, cls)?;
    let trace = cross_attention(&query, grid)?;
    let image_token = params.apply_row(&trace.output)?;

    let mut text_tokens = Vec::new();
    for token in tag.split_whitespace() {
        let embedded = stub_text_embed(token, spec)?;
        let row: Vec<f64> = embedded.as_slice().iter().map(|&x| f64::from(x)).collect();
        text_tokens.push(params.apply_row(&row)?);
    }
    debug_assert!(!text_tokens.is_empty());

    Ok(TagTuple {
        tag: tag.to_string(),
        image_token,
        text_tokens,
        raw_score,
        weight: None,
    })
}
