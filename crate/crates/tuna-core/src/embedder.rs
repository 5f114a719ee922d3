//! Vector primitives and the deterministic stub encoder.
//!
//! The stub encoder replaces the frozen CLIP image/text encoders so the
//! pipeline runs without model weights. Outputs are pure functions of
//! `(input, EncoderSpec)`: text and image ids are hashed with FNV-1a 64,
//! xor-mixed with the spec seed, and expanded through xorshift64* (see
//! [`crate::rng`] for the exact constants). Repeated invocations across
//! process restarts yield identical bytes.
//!
//! Text and image streams are domain-separated so that an image id never
//! collides with the same string used as text.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::{fnv1a64, XorShift64Star};

/// Domain separation constant xored into image-embedding seeds.
const IMAGE_DOMAIN: u64 = 0x696d_6167_655f_7631; // "image_v1"

#[derive(Debug, Error, PartialEq)]
pub enum EmbedError {
    #[error("cannot normalize a vector with norm <= 1e-12")]
    ZeroVector,
    #[error("vector contains a NaN or infinite entry")]
    NonFinite,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("text is empty after trimming")]
    EmptyText,
    #[error("image id is empty")]
    EmptyId,
    #[error("vector is empty")]
    EmptyVector,
}

/// A finite, non-empty float vector. Unit norm is not enforced at
/// construction; [`l2_normalize`] produces unit vectors and the datastore
/// checks unit norm on insert.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EmbeddingVector {
    values: Vec<f32>,
}

impl EmbeddingVector {
    /// Validates finiteness and non-emptiness.
    pub fn new(values: Vec<f32>) -> Result<Self, EmbedError> {
        if values.is_empty() {
            return Err(EmbedError::EmptyVector);
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(EmbedError::NonFinite);
        }
        Ok(Self { values })
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn as_slice(&self) -> &[f32] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f32> {
        self.values
    }

    /// Euclidean norm, accumulated in f64.
    pub fn norm(&self) -> f64 {
        self.values
            .iter()
            .map(|&v| f64::from(v) * f64::from(v))
            .sum::<f64>()
            .sqrt()
    }
}

/// Grid of per-patch feature vectors in row-major order, plus shape.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFeatures {
    dim: usize,
    grid_h: usize,
    grid_w: usize,
    data: Vec<f32>,
}

impl GridFeatures {
    /// Builds a grid from row-major data; `data.len()` must equal
    /// `grid_h * grid_w * dim` and every entry must be finite.
    pub fn new(dim: usize, grid_h: usize, grid_w: usize, data: Vec<f32>) -> Result<Self, EmbedError> {
        if dim == 0 || grid_h == 0 || grid_w == 0 {
            return Err(EmbedError::EmptyVector);
        }
        let expected = grid_h * grid_w * dim;
        if data.len() != expected {
            return Err(EmbedError::DimensionMismatch {
                expected,
                got: data.len(),
            });
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(EmbedError::NonFinite);
        }
        Ok(Self {
            dim,
            grid_h,
            grid_w,
            data,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn grid_h(&self) -> usize {
        self.grid_h
    }

    pub fn grid_w(&self) -> usize {
        self.grid_w
    }

    /// Number of grid cells (rows of the feature matrix).
    pub fn len(&self) -> usize {
        self.grid_h * self.grid_w
    }

    pub fn is_empty(&self) -> bool {
        false // construction forbids empty grids
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f32]> {
        self.data.chunks_exact(self.dim)
    }
}

/// Stub encoder configuration: output dimension, grid shape, and seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EncoderSpec {
    pub dim: usize,
    pub grid_h: usize,
    pub grid_w: usize,
    pub seed: u64,
}

impl EncoderSpec {
    pub fn new(dim: usize, grid_h: usize, grid_w: usize, seed: u64) -> Self {
        Self {
            dim,
            grid_h,
            grid_w,
            seed,
        }
    }

    /// Desk-scale default: 64 dimensions over a 4x4 grid, seed 0.
    pub fn desk_default() -> Self {
        Self::new(64, 4, 4, 0)
    }

    /// Preset matching the shape of CLIP-ViT-L/14 at 336px input
    /// (24x24 patch grid). Values are still stub-generated.
    pub fn clip_vit_l14_336(seed: u64) -> Self {
        Self::new(768, 24, 24, seed)
    }
}

impl Default for EncoderSpec {
    fn default() -> Self {
        Self::desk_default()
    }
}

/// Scales `v` to unit Euclidean norm.
pub fn l2_normalize(v: &[f32]) -> Result<EmbeddingVector, EmbedError> {
    if v.is_empty() {
        return Err(EmbedError::EmptyVector);
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(EmbedError::NonFinite);
    }
    let norm = v
        .iter()
        .map(|&x| f64::from(x) * f64::from(x))
        .sum::<f64>()
        .sqrt();
    if norm <= 1e-12 {
        return Err(EmbedError::ZeroVector);
    }
    let values = v.iter().map(|&x| (f64::from(x) / norm) as f32).collect();
    Ok(EmbeddingVector { values })
}

/// Cosine similarity of two unit vectors: their dot product, accumulated in
/// f64 and clamped to [-1, 1] against rounding.
pub fn cosine(u: &EmbeddingVector, v: &EmbeddingVector) -> Result<f64, EmbedError> {
    if u.dim() != v.dim() {
        return Err(EmbedError::DimensionMismatch {
            expected: u.dim(),
            got: v.dim(),
        });
    }
    Ok(dot_f64(u.as_slice(), v.as_slice()).clamp(-1.0, 1.0))
}

/// Dot product of two equal-length slices, accumulated left-to-right in f64.
/// Exposed for the datastore scan so index and oracle share one definition
/// of score arithmetic.
pub(crate) fn dot_f64(a: &[f32], b: &[f32]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = 0.0f64;
    for (&x, &y) in a.iter().zip(b.iter()) {
        acc += f64::from(x) * f64::from(y);
    }
    acc
}

fn draw_unit_vector(rng: &mut XorShift64Star, dim: usize) -> Result<EmbeddingVector, EmbedError> {
    // A fresh uniform draw is zero with probability 0; retry keeps the
    // contract total anyway.
    loop {
        let raw: Vec<f32> = (0..dim).map(|_| rng.next_symmetric_f64() as f32).collect();
        match l2_normalize(&raw) {
            Ok(v) => return Ok(v),
            Err(EmbedError::ZeroVector) => continue,
            Err(e) => return Err(e),
        }
    }
}

/// Deterministic stand-in for a frozen text encoder: unit vector of
/// dimension `spec.dim`, a pure function of `(text, spec)`.
pub fn stub_text_embed(text: &str, spec: &EncoderSpec) -> Result<EmbeddingVector, EmbedError> {
    if text.trim().is_empty() {
        return Err(EmbedError::EmptyText);
    }
    let mut rng = XorShift64Star::new(fnv1a64(text.as_bytes()) ^ spec.seed);
    draw_unit_vector(&mut rng, spec.dim)
}

/// Deterministic stand-in for a frozen vision encoder. Returns the grid of
/// unit-normalized patch features plus the global feature, computed as the
/// normalized mean of the grid rows so global and grid features stay
/// correlated the way a real encoder's do.
pub fn stub_image_embed(
    image_id: &str,
    spec: &EncoderSpec,
) -> Result<(GridFeatures, EmbeddingVector), EmbedError> {
    if image_id.trim().is_empty() {
        return Err(EmbedError::EmptyId);
    }
    let mut rng = XorShift64Star::new(fnv1a64(image_id.as_bytes()) ^ spec.seed ^ IMAGE_DOMAIN);
    let cells = spec.grid_h * spec.grid_w;
    let mut data = Vec::with_capacity(cells * spec.dim);
    for _ in 0..cells {
        let row = draw_unit_vector(&mut rng, spec.dim)?;
        data.extend_from_slice(row.as_slice());
    }
    let grid = GridFeatures::new(spec.dim, spec.grid_h, spec.grid_w, data)?;

    let mut mean = vec![0.0f64; spec.dim];
    for row in grid.rows() {
        for (m, &x) in mean.iter_mut().zip(row) {
            *m += f64::from(x);
        }
    }
    let inv = 1.0 / cells as f64;
    let mean_f32: Vec<f32> = mean.iter().map(|&m| (m * inv) as f32).collect();
    let cls = l2_normalize(&mean_f32)?;
    Ok((grid, cls))
}
