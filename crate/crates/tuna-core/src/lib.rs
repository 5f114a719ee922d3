//! Tag-grounded retrieval augmentation for visual instruction pipelines.
//!
//! The crate covers the full offline path from raw captions to an LLM-ready
//! prompt layout:
//!
//! - [`embedder`] — vector math primitives and a deterministic stub encoder
//!   that stands in for frozen CLIP image/text encoders, so everything here
//!   runs without model weights.
//! - [`tagminer`] — rule-based mining of object/attribute tags and named
//!   entities from captions, plus corpus statistics.
//! - [`datastore`] — an embedding-keyed tag store with exact and IVF
//!   approximate k-NN cosine retrieval and a checksummed binary format.
//! - [`tag_encoder`] — cross-attention over image grid features, the MLP
//!   connector, tag tuple construction, and the adaptive weight tuner.
//! - [`assembler`] — end-to-end prompt layout construction with ablation
//!   modes (no tuner, no tags, random tags, captions).
//! - [`evalkit`] — binary confusion metrics, weight heatmap export, and
//!   relative judged-score aggregation.
//!
//! All operations are deterministic given their inputs and seeds; sealed
//! indices and encoder parameters are immutable and safe to share across
//! threads.

pub mod assembler;
pub mod datastore;
pub mod embedder;
pub mod evalkit;
pub mod tag_encoder;
pub mod tagminer;

pub(crate) mod rng;

pub use assembler::{assemble, AblationMode, AssembleConfig, PromptLayout, RetrievalPool, Segment};
pub use datastore::{FlatIndex, IvfIndex, LoadedIndex, QueryHit, StoreEntry};
pub use embedder::{EmbeddingVector, EncoderSpec, GridFeatures};
pub use tag_encoder::{AttentionTrace, ConnectorParams, TagTuple};
pub use tagminer::{CaptionRecord, CorpusStats, MinerConfig, TagSet};
