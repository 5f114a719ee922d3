//! End-to-end prompt layout construction.
//!
//! Given an image id and an instruction, assembly embeds the image with the
//! stub encoder, retrieves the nearest stored images, pools and dedups
//! their tags, encodes every pooled tag against the image, tunes the tag
//! weights, and emits an ordered token-slot sequence: connector-projected
//! image grid tokens first, then per-tag groups (the tag's image token
//! immediately followed by its text tokens), then the instruction tokens.
//!
//! Ablation modes mirror the controlled variants of the full pipeline:
//! `no-tuner` forces every weight to the maximum value 1.0, `no-tags`
//! skips retrieval entirely, `random-tags` replaces the pool with a seeded
//! uniform sample from the store's tag vocabulary, and `captions` runs the
//! retrieved entries' captions through the same encoder path.
//!
//! Tag groups are emitted in descending weight order (ties broken by tag
//! string) so the strongest grounding comes first; `no-tuner` keeps pooled
//! order since all weights are equal.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::Serialize;
use thiserror::Error;

use crate::datastore::{FlatIndex, QueryHit, StoreError};
use crate::embedder::{stub_image_embed, EmbedError, EmbeddingVector, EncoderSpec};
use crate::rng::{sample_indices, XorShift64Star};
use crate::tag_encoder::{encode_tag, tune_weights, ConnectorParams, EncodeError, TagTuple};

#[derive(Debug, Error)]
pub enum AssembleError {
    #[error("instruction is empty")]
    EmptyInstruction,
    #[error("captions mode requires stored captions; missing for ids: {}", .0.join(", "))]
    MissingCaption(Vec<String>),
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error(transparent)]
    Encode(#[from] EncodeError),
    #[error(transparent)]
    Embed(#[from] EmbedError),
}

/// Controlled pipeline variants.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum AblationMode {
    Full,
    NoTuner,
    NoTags,
    RandomTags,
    Captions,
}

impl AblationMode {
    pub const ALL: [AblationMode; 5] = [
        AblationMode::Full,
        AblationMode::NoTuner,
        AblationMode::NoTags,
        AblationMode::RandomTags,
        AblationMode::Captions,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            AblationMode::Full => "full",
            AblationMode::NoTuner => "no-tuner",
            AblationMode::NoTags => "no-tags",
            AblationMode::RandomTags => "random-tags",
            AblationMode::Captions => "captions",
        }
    }
}

impl fmt::Display for AblationMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AblationMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        AblationMode::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| format!("unknown mode {s:?}; expected one of full, no-tuner, no-tags, random-tags, captions"))
    }
}

/// Retrieval outcome: the raw hits plus their tags pooled in hit-rank
/// order, first-occurrence deduplicated, with per-tag contributor counts.
#[derive(Debug, Clone, PartialEq)]
pub struct RetrievalPool {
    pub hits: Vec<QueryHit>,
    pub pooled_tags: Vec<String>,
    pub per_tag_source_count: BTreeMap<String, u32>,
}

/// Retrieves the top-k neighbors of `cls` and pools their tags.
pub fn retrieve_tag_pool(
    cls: &EmbeddingVector,
    store: &FlatIndex,
    k: usize,
    exclude_id: Option<&str>,
) -> Result<RetrievalPool, AssembleError> {
    if store.is_empty() {
        return Ok(RetrievalPool {
            hits: Vec::new(),
            pooled_tags: Vec::new(),
            per_tag_source_count: BTreeMap::new(),
        });
    }
    let hits = store.knn_filtered(cls, k, exclude_id)?;
    let mut pooled = Vec::new();
    let mut counts: BTreeMap<String, u32> = BTreeMap::new();
    for hit in &hits {
        for tag in hit.tags.iter() {
            let count = counts.entry(tag.clone()).or_insert(0);
            if *count == 0 {
                pooled.push(tag.clone());
            }
            *count += 1;
        }
    }
    Ok(RetrievalPool {
        hits,
        pooled_tags: pooled,
        per_tag_source_count: counts,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SegmentKind {
    ImageGrid,
    TagImageToken,
    TagTextToken,
    InstructionToken,
}

/// One token slot of the layout. Vector slots carry `dim`/`values`;
/// instruction slots carry the token string.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Segment {
    pub kind: SegmentKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tag: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub weight: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub token: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
}

impl Segment {
    fn vector(kind: SegmentKind, tag: Option<String>, weight: Option<f64>, values: Vec<f64>) -> Self {
        Segment {
            kind,
            tag,
            weight,
            token: None,
            dim: Some(values.len()),
            values: Some(values),
        }
    }

    fn instruction(token: &str) -> Self {
        Segment {
            kind: SegmentKind::InstructionToken,
            tag: None,
            weight: None,
            token: Some(token.to_string()),
            dim: None,
            values: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PoolSummary {
    pub tags: Vec<String>,
    pub source_counts: BTreeMap<String, u32>,
}

/// The ordered token-slot sequence handed to a downstream LLM, plus the
/// pool it was built from and the encoded tag tuples behind the segments.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PromptLayout {
    pub mode: AblationMode,
    pub segments: Vec<Segment>,
    pub pool: PoolSummary,
    /// Encoded tuples in segment emission order; not part of the JSON
    /// layout, retained for weight export and diagnostics.
    #[serde(skip)]
    pub tuples: Vec<TagTuple>,
}

impl PromptLayout {
    /// Compact JSON with stable key order.
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("layout serialization cannot fail")
    }

    /// CSV `tag,raw_score,weight` in segment emission order, four decimals.
    pub fn weights_csv(&self) -> String {
        let mut out = String::from("tag,raw_score,weight\n");
        for tuple in &self.tuples {
            let weight = tuple.weight.unwrap_or(1.0);
            out.push_str(&format!(
                "{},{:.4},{:.4}\n",
                csv_field(&tuple.tag),
                tuple.raw_score,
                weight
            ));
        }
        out
    }
}

/// RFC 4180 quoting for fields that contain a comma, quote, or newline.
pub(crate) fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Assembly configuration: stub encoder spec, connector parameters, and
/// retrieval depth.
#[derive(Debug, Clone)]
pub struct AssembleConfig {
    pub encoder: EncoderSpec,
    pub connector: ConnectorParams,
    pub k: usize,
}

impl AssembleConfig {
    pub fn new(encoder: EncoderSpec, connector: ConnectorParams) -> Self {
        Self {
            encoder,
            connector,
            k: 5,
        }
    }

    pub fn with_k(mut self, k: usize) -> Self {
        self.k = k;
        self
    }
}

/// Builds the prompt layout for one image/instruction pair under the given
/// mode. Pure given a sealed store and fixed seed.
pub fn assemble(
    image_id: &str,
    instruction: &str,
    store: &FlatIndex,
    mode: AblationMode,
    config: &AssembleConfig,
    seed: u64,
) -> Result<PromptLayout, AssembleError> {
    if instruction.trim().is_empty() {
        return Err(AssembleError::EmptyInstruction);
    }
    let (grid, cls) = stub_image_embed(image_id, &config.encoder)?;

    let mut segments = Vec::new();
    for row in grid.rows() {
        let row_f64: Vec<f64> = row.iter().map(|&x| f64::from(x)).collect();
        let projected = config.connector.apply_row(&row_f64)?;
        segments.push(Segment::vector(SegmentKind::ImageGrid, None, None, projected));
    }

    let (pool_summary, mut tuples) = match mode {
        AblationMode::NoTags => (
            PoolSummary {
                tags: Vec::new(),
                source_counts: BTreeMap::new(),
            },
            Vec::new(),
        ),
        AblationMode::Full | AblationMode::NoTuner => {
            let pool = retrieve_tag_pool(&cls, store, config.k, None)?;
            let tuples = encode_all(&pool.pooled_tags, &grid, &cls, config)?;
            (
                PoolSummary {
                    tags: pool.pooled_tags,
                    source_counts: pool.per_tag_source_count,
                },
                tuples,
            )
        }
        AblationMode::RandomTags => {
            let pool = retrieve_tag_pool(&cls, store, config.k, None)?;
            let vocabulary = store.tag_vocabulary();
            let m = pool.pooled_tags.len().min(vocabulary.len());
            let mut rng = XorShift64Star::new(seed);
            let tags: Vec<String> = sample_indices(&mut rng, vocabulary.len(), m)
                .into_iter()
                .map(|i| vocabulary[i].clone())
                .collect();
            let tuples = encode_all(&tags, &grid, &cls, config)?;
            (
                PoolSummary {
                    tags,
                    source_counts: BTreeMap::new(),
                },
                tuples,
            )
        }
        AblationMode::Captions => {
            let pool = retrieve_tag_pool(&cls, store, config.k, None)?;
            let missing: Vec<String> = pool
                .hits
                .iter()
                .filter(|h| {
                    store
                        .get(&h.image_id)
                        .is_none_or(|e| e.caption.is_none())
                })
                .map(|h| h.image_id.clone())
                .collect();
            if !missing.is_empty() {
                return Err(AssembleError::MissingCaption(missing));
            }
            let mut captions = Vec::new();
            let mut counts: BTreeMap<String, u32> = BTreeMap::new();
            for hit in &pool.hits {
                let caption = store
                    .get(&hit.image_id)
                    .and_then(|e| e.caption.clone())
                    .expect("checked above");
                let count = counts.entry(caption.clone()).or_insert(0);
                if *count == 0 {
                    captions.push(caption);
                }
                *count += 1;
            }
            let tuples = encode_all(&captions, &grid, &cls, config)?;
            (
                PoolSummary {
                    tags: captions,
                    source_counts: counts,
                },
                tuples,
            )
        }
    };

    if !tuples.is_empty() {
        match mode {
            AblationMode::NoTuner => {
                // all weights set to the maximum value; pooled order kept
                for tuple in &mut tuples {
                    tuple.weight = Some(1.0);
                }
            }
            _ => {
                let scores: Vec<f64> = tuples.iter().map(|t| t.raw_score).collect();
                let weights = tune_weights(&scores)?;
                for (tuple, w) in tuples.iter_mut().zip(weights) {
                    tuple.weight = Some(w);
                }
                tuples.sort_by(|a, b| {
                    b.weight
                        .unwrap_or(0.0)
                        .total_cmp(&a.weight.unwrap_or(0.0))
                        .then_with(|| a.tag.cmp(&b.tag))
                });
            }
        }
    }

    for tuple in &tuples {
        let weight = tuple.weight.expect("weight assigned above");
        let weighted_image: Vec<f64> = tuple.image_token.iter().map(|v| v * weight).collect();
        segments.push(Segment::vector(
            SegmentKind::TagImageToken,
            Some(tuple.tag.clone()),
            Some(weight),
            weighted_image,
        ));
        for row in &tuple.text_tokens {
            let weighted: Vec<f64> = row.iter().map(|v| v * weight).collect();
            segments.push(Segment::vector(
                SegmentKind::TagTextToken,
                Some(tuple.tag.clone()),
                Some(weight),
                weighted,
            ));
        }
    }

    for token in instruction.split_whitespace() {
        segments.push(Segment::instruction(token));
    }

    Ok(PromptLayout {
        mode,
        segments,
        pool: pool_summary,
        tuples,
    })
}

fn encode_all(
    tags: &[String],
    grid: &crate::embedder::GridFeatures,
    cls: &EmbeddingVector,
    config: &AssembleConfig,
) -> Result<Vec<TagTuple>, AssembleError> {
    tags.iter()
        .map(|tag| Ok(encode_tag(tag, grid, cls, &config.connector, &config.encoder)?))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datastore::StoreEntry;
    use crate::embedder::stub_text_embed;
    use crate::tagminer::TagSet;

    const DIM: usize = 8;

    fn spec() -> EncoderSpec {
        EncoderSpec::new(DIM, 2, 2, 0)
    }

    fn config() -> AssembleConfig {
        AssembleConfig::new(spec(), ConnectorParams::seeded(DIM, DIM, DIM, 0)).with_k(3)
    }

    fn store(with_captions: bool) -> FlatIndex {
        let entries: Vec<StoreEntry> = (0..6)
            .map(|i| {
                let image_id = format!("img-{i}");
                let (_, cls) = stub_image_embed(&image_id, &spec()).unwrap();
                StoreEntry {
                    image_id,
                    key: cls,
                    tags: TagSet::new(vec![format!("tag-{i}"), "shared".into()]).unwrap(),
                    caption: with_captions.then(|| format!("caption {i}, with a comma")),
                }
            })
            .collect();
        FlatIndex::build(DIM, entries).unwrap()
    }

    fn hit(id: &str, rank: usize, tags: &[&str]) -> QueryHit {
        QueryHit {
            image_id: id.into(),
            score: 1.0 - rank as f64 * 0.1,
            tags: TagSet::new(tags.iter().map(|t| t.to_string()).collect()).unwrap(),
            rank,
        }
    }

    #[test]
    fn pool_dedups_in_rank_order() {
        // hand-built hits mirror the dedup contract directly
        let hits = [hit("a", 1, &["cat", "mat"]), hit("b", 2, &["mat", "sun"])];
        let mut pooled = Vec::new();
        let mut counts: BTreeMap<String, u32> = BTreeMap::new();
        for h in &hits {
            for t in h.tags.iter() {
                let c = counts.entry(t.clone()).or_insert(0);
                if *c == 0 {
                    pooled.push(t.clone());
                }
                *c += 1;
            }
        }
        assert_eq!(pooled, vec!["cat", "mat", "sun"]);
        assert_eq!(counts["mat"], 2);
        assert_eq!(counts["cat"], 1);
    }

    #[test]
    fn pool_from_store_counts_shared_tag() {
        let store = store(false);
        let (_, cls) = stub_image_embed("query", &spec()).unwrap();
        let pool = retrieve_tag_pool(&cls, &store, 3, None).unwrap();
        assert_eq!(pool.hits.len(), 3);
        assert_eq!(pool.per_tag_source_count["shared"], 3);
        assert!(pool.pooled_tags.len() <= 4);
    }

    #[test]
    fn empty_store_gives_empty_pool() {
        let empty = FlatIndex::build(DIM, []).unwrap();
        let (_, cls) = stub_image_embed("query", &spec()).unwrap();
        let pool = retrieve_tag_pool(&cls, &empty, 5, None).unwrap();
        assert!(pool.hits.is_empty());
        assert!(pool.pooled_tags.is_empty());
    }

    #[test]
    fn k_one_pool_equals_top_hit_tags() {
        let store = store(false);
        let (_, cls) = stub_image_embed("query", &spec()).unwrap();
        let pool = retrieve_tag_pool(&cls, &store, 1, None).unwrap();
        assert_eq!(pool.pooled_tags, pool.hits[0].tags.tags());
    }

    #[test]
    fn no_tags_layout_has_grid_and_instruction_only() {
        let layout = assemble("q", "describe the image", &store(false), AblationMode::NoTags, &config(), 0).unwrap();
        let grids = layout
            .segments
            .iter()
            .filter(|s| s.kind == SegmentKind::ImageGrid)
            .count();
        assert_eq!(grids, 4); // 2x2 grid
        let tags = layout
            .segments
            .iter()
            .filter(|s| matches!(s.kind, SegmentKind::TagImageToken | SegmentKind::TagTextToken))
            .count();
        assert_eq!(tags, 0);
        let instr: Vec<&str> = layout
            .segments
            .iter()
            .filter_map(|s| s.token.as_deref())
            .collect();
        assert_eq!(instr, vec!["describe", "the", "image"]);
    }

    #[test]
    fn no_tuner_forces_unit_weights_in_pool_order() {
        let layout = assemble("q", "what is this", &store(false), AblationMode::NoTuner, &config(), 0).unwrap();
        assert!(!layout.tuples.is_empty());
        for s in &layout.segments {
            if let Some(w) = s.weight {
                assert_eq!(w, 1.0);
            }
        }
        let emitted: Vec<&String> = layout.tuples.iter().map(|t| &t.tag).collect();
        let pooled: Vec<&String> = layout.pool.tags.iter().collect();
        assert_eq!(emitted, pooled);
    }

    #[test]
    fn full_mode_weights_sorted_and_max_is_one() {
        let layout = assemble("q", "what is this", &store(false), AblationMode::Full, &config(), 0).unwrap();
        let weights: Vec<f64> = layout.tuples.iter().map(|t| t.weight.unwrap()).collect();
        assert!(weights.windows(2).all(|w| w[0] >= w[1]));
        assert_eq!(weights[0], 1.0);
        assert!(weights.iter().all(|w| (0.0..=1.0).contains(w)));
    }

    #[test]
    fn full_and_no_tuner_share_tag_multiset() {
        let full = assemble("q", "i", &store(false), AblationMode::Full, &config(), 0).unwrap();
        let no_tuner = assemble("q", "i", &store(false), AblationMode::NoTuner, &config(), 0).unwrap();
        let mut a: Vec<String> = full.tuples.iter().map(|t| t.tag.clone()).collect();
        let mut b: Vec<String> = no_tuner.tuples.iter().map(|t| t.tag.clone()).collect();
        a.sort();
        b.sort();
        assert_eq!(a, b);
    }

    #[test]
    fn random_tags_reproducible_and_seed_sensitive() {
        let store = store(false);
        let a = assemble("q", "i", &store, AblationMode::RandomTags, &config(), 7).unwrap();
        let b = assemble("q", "i", &store, AblationMode::RandomTags, &config(), 7).unwrap();
        assert_eq!(a.to_json(), b.to_json());
        let c = assemble("q", "i", &store, AblationMode::RandomTags, &config(), 8).unwrap();
        assert_ne!(
            a.pool.tags, c.pool.tags,
            "different seeds drew identical tag samples"
        );
    }

    #[test]
    fn captions_mode_uses_caption_strings() {
        let layout = assemble("q", "i", &store(true), AblationMode::Captions, &config(), 0).unwrap();
        assert!(layout.pool.tags.iter().all(|t| t.starts_with("caption ")));
        assert_eq!(layout.tuples.len(), layout.pool.tags.len());
    }

    #[test]
    fn captions_mode_fails_cleanly_without_captions() {
        let err = assemble("q", "i", &store(false), AblationMode::Captions, &config(), 0).unwrap_err();
        match err {
            AssembleError::MissingCaption(ids) => assert_eq!(ids.len(), 3),
            other => panic!("expected MissingCaption, got {other:?}"),
        }
    }

    #[test]
    fn segment_order_invariant_across_modes() {
        for mode in AblationMode::ALL {
            if mode == AblationMode::Captions {
                continue; // captions need the caption store, same check below
            }
            let layout = assemble("q", "check order", &store(false), mode, &config(), 3).unwrap();
            assert_segment_order(&layout);
        }
        let layout =
            assemble("q", "check order", &store(true), AblationMode::Captions, &config(), 3).unwrap();
        assert_segment_order(&layout);
    }

    fn assert_segment_order(layout: &PromptLayout) {
        let phase = |kind: SegmentKind| match kind {
            SegmentKind::ImageGrid => 0,
            SegmentKind::TagImageToken | SegmentKind::TagTextToken => 1,
            SegmentKind::InstructionToken => 2,
        };
        let phases: Vec<u8> = layout.segments.iter().map(|s| phase(s.kind)).collect();
        assert!(phases.windows(2).all(|w| w[0] <= w[1]), "{phases:?}");
        // within the tag phase, an image token leads each group
        let mut current_tag: Option<&str> = None;
        for s in &layout.segments {
            match s.kind {
                SegmentKind::TagImageToken => current_tag = s.tag.as_deref(),
                SegmentKind::TagTextToken => assert_eq!(s.tag.as_deref(), current_tag),
                _ => {}
            }
        }
    }

    #[test]
    fn empty_instruction_rejected() {
        let err = assemble("q", "  ", &store(false), AblationMode::NoTags, &config(), 0).unwrap_err();
        assert!(matches!(err, AssembleError::EmptyInstruction));
    }

    #[test]
    fn weights_csv_quotes_commas() {
        let layout = assemble("q", "i", &store(true), AblationMode::Captions, &config(), 0).unwrap();
        let csv = layout.weights_csv();
        assert!(csv.starts_with("tag,raw_score,weight\n"));
        assert!(csv.contains("\"caption "), "caption fields must be quoted: {csv}");
    }

    #[test]
    fn weight_of_best_tag_matches_independent_minmax() {
        // independent recomputation of cosine + min-max for the full mode
        let store = store(false);
        let cfg = config();
        let layout = assemble("q", "i", &store, AblationMode::Full, &cfg, 0).unwrap();

        let (_, cls) = stub_image_embed("q", &spec()).unwrap();
        let pool = retrieve_tag_pool(&cls, &store, cfg.k, None).unwrap();
        let scores: Vec<f64> = pool
            .pooled_tags
            .iter()
            .map(|tag| {
                let q = stub_text_embed(tag, &spec()).unwrap();
                crate::embedder::cosine(&q, &cls).unwrap()
            })
            .collect();
        let min = scores.iter().copied().fold(f64::INFINITY, f64::min);
        let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        for (tag, score) in pool.pooled_tags.iter().zip(&scores) {
            let expect = if max - min <= 1e-12 {
                1.0
            } else {
                (score - min) / (max - min)
            };
            let tuple = layout.tuples.iter().find(|t| &t.tag == tag).unwrap();
            assert!((tuple.weight.unwrap() - expect).abs() < 1e-12);
        }
    }
}
