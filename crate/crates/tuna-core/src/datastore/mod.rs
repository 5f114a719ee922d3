//! Embedding-keyed tag store with exact and approximate cosine retrieval.
//!
//! A [`FlatIndex`] is a sealed, insertion-ordered list of entries whose keys
//! are unit vectors; k-NN is an exact scan. An [`IvfIndex`] partitions the
//! same entries with spherical k-means and probes only the closest
//! partitions; with `nprobe == nlist` it degenerates to the exact scan and
//! returns bit-identical results.
//!
//! Keys are unit-normalized at insert, so cosine similarity is a plain dot
//! product. Scores are accumulated in f64 from the stored f32 components,
//! and ties are broken by lower insertion index, which makes every query
//! reproducible byte-for-byte.
//!
//! Sealed indices are immutable: concurrent queries need no locking.

mod format;
mod ivf;

pub use format::{load, LoadedIndex};
pub use ivf::{train_ivf, IvfIndex};

use std::collections::hash_map::Entry as MapEntry;
use std::collections::HashMap;

use serde::Serialize;
use thiserror::Error;

use crate::embedder::{dot_f64, EmbeddingVector};
use crate::tagminer::TagSet;

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("duplicate image id {0:?}")]
    DuplicateId(String),
    #[error("key for {id:?} is not unit-norm (norm {norm})")]
    NonUnitKey { id: String, norm: f64 },
    #[error("index is empty")]
    EmptyIndex,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("bad magic: not a tag datastore file")]
    BadMagic,
    #[error("unsupported format version {0}")]
    VersionUnsupported(u16),
    #[error("checksum mismatch: file corrupt or truncated")]
    ChecksumMismatch,
    #[error("malformed store file: {0}")]
    Malformed(&'static str),
}

/// One datastore record: image embedding key, its tags, optional caption.
#[derive(Debug, Clone, PartialEq)]
pub struct StoreEntry {
    pub image_id: String,
    pub key: EmbeddingVector,
    pub tags: TagSet,
    pub caption: Option<String>,
}

/// One retrieval result. Within a result list scores are nonincreasing and
/// ranks are contiguous from 1.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QueryHit {
    #[serde(rename = "id")]
    pub image_id: String,
    pub score: f64,
    pub tags: TagSet,
    pub rank: usize,
}

/// Tolerance for the unit-norm check on inserted keys.
const NORM_TOLERANCE: f64 = 1e-6;

/// Sealed exact index over insertion-ordered entries.
#[derive(Debug, Clone)]
pub struct FlatIndex {
    dim: usize,
    entries: Vec<StoreEntry>,
    by_id: HashMap<String, u32>,
}

impl FlatIndex {
    /// Validates and seals a stream of entries. Keys must be unit vectors of
    /// dimension `dim` and image ids must be unique.
    pub fn build<I>(dim: usize, entries: I) -> Result<Self, StoreError>
    where
        I: IntoIterator<Item = StoreEntry>,
    {
        if dim == 0 {
            return Err(StoreError::InvalidParameter("dim must be >= 1".into()));
        }
        let mut sealed = Vec::new();
        let mut by_id = HashMap::new();
        for entry in entries {
            if entry.key.dim() != dim {
                return Err(StoreError::DimensionMismatch {
                    expected: dim,
                    got: entry.key.dim(),
                });
            }
            let norm = entry.key.norm();
            if (norm - 1.0).abs() > NORM_TOLERANCE {
                return Err(StoreError::NonUnitKey {
                    id: entry.image_id.clone(),
                    norm,
                });
            }
            match by_id.entry(entry.image_id.clone()) {
                MapEntry::Occupied(_) => {
                    return Err(StoreError::DuplicateId(entry.image_id));
                }
                MapEntry::Vacant(slot) => {
                    slot.insert(sealed.len() as u32);
                }
            }
            sealed.push(entry);
        }
        Ok(Self {
            dim,
            entries: sealed,
            by_id,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[StoreEntry] {
        &self.entries
    }

    pub fn entry(&self, idx: usize) -> &StoreEntry {
        &self.entries[idx]
    }

    pub fn get(&self, image_id: &str) -> Option<&StoreEntry> {
        self.by_id.get(image_id).map(|&i| &self.entries[i as usize])
    }

    /// Distinct tags across all entries, in first-occurrence order over the
    /// insertion order.
    pub fn tag_vocabulary(&self) -> Vec<String> {
        let mut seen = std::collections::HashSet::new();
        let mut vocab = Vec::new();
        for entry in &self.entries {
            for tag in entry.tags.iter() {
                if seen.insert(tag.clone()) {
                    vocab.push(tag.clone());
                }
            }
        }
        vocab
    }

    /// Exact k-NN by cosine: the `min(k, N)` entries with highest dot
    /// product against `query`, descending, ties broken by lower insertion
    /// index.
    pub fn knn(&self, query: &EmbeddingVector, k: usize) -> Result<Vec<QueryHit>, StoreError> {
        self.knn_filtered(query, k, None)
    }

    /// As [`FlatIndex::knn`], optionally excluding one image id (for
    /// self-retrieval of entries that exist in the store).
    pub fn knn_filtered(
        &self,
        query: &EmbeddingVector,
        k: usize,
        exclude_id: Option<&str>,
    ) -> Result<Vec<QueryHit>, StoreError> {
        self.check_query(query, k)?;
        let candidates = self.entries.iter().enumerate().filter_map(|(i, e)| {
            if exclude_id == Some(e.image_id.as_str()) {
                None
            } else {
                Some((i, dot_f64(query.as_slice(), e.key.as_slice())))
            }
        });
        Ok(self.to_hits(select_top_k(candidates, k)))
    }

    pub(crate) fn check_query(&self, query: &EmbeddingVector, k: usize) -> Result<(), StoreError> {
        if query.dim() != self.dim {
            return Err(StoreError::DimensionMismatch {
                expected: self.dim,
                got: query.dim(),
            });
        }
        if k == 0 {
            return Err(StoreError::InvalidParameter("k must be >= 1".into()));
        }
        Ok(())
    }

    pub(crate) fn to_hits(&self, ranked: Vec<(usize, f64)>) -> Vec<QueryHit> {
        ranked
            .into_iter()
            .enumerate()
            .map(|(rank, (idx, score))| {
                let entry = &self.entries[idx];
                QueryHit {
                    image_id: entry.image_id.clone(),
                    score: score.clamp(-1.0, 1.0),
                    tags: entry.tags.clone(),
                    rank: rank + 1,
                }
            })
            .collect()
    }
}

/// Candidate ordering for top-k selection: `a < b` means a is a better hit
/// (higher score; equal scores fall back to lower insertion index).
#[derive(Debug)]
struct Candidate {
    idx: usize,
    score: f64,
}

impl PartialEq for Candidate {
    fn eq(&self, other: &Self) -> bool {
        self.idx == other.idx && self.score.total_cmp(&other.score).is_eq()
    }
}

impl Eq for Candidate {}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        other
            .score
            .total_cmp(&self.score)
            .then_with(|| self.idx.cmp(&other.idx))
    }
}

/// Keeps the k best candidates from an arbitrary-order stream. The result
/// is sorted best-first and is independent of stream order because the
/// candidate ordering is total.
pub(crate) fn select_top_k<I>(candidates: I, k: usize) -> Vec<(usize, f64)>
where
    I: IntoIterator<Item = (usize, f64)>,
{
    let mut heap = std::collections::BinaryHeap::with_capacity(k + 1);
    for (idx, score) in candidates {
        let cand = Candidate { idx, score };
        if heap.len() < k {
            heap.push(cand);
        } else if let Some(worst) = heap.peek() {
            if cand < *worst {
                heap.pop();
                heap.push(cand);
            }
        }
    }
    heap.into_sorted_vec()
        .into_iter()
        .map(|c| (c.idx, c.score))
        .collect()
}


#[cfg(test)]
mod tests {
    use super::test_support::*;
    use super::*;
    use crate::embedder::{stub_text_embed, EncoderSpec};
    use crate::rng::XorShift64Star;

    fn query(text: &str, dim: usize, seed: u64) -> EmbeddingVector {
        stub_text_embed(text, &EncoderSpec::new(dim, 1, 1, seed)).unwrap()
    }

    #[test]
    fn empty_index_returns_no_hits() {
        let index = FlatIndex::build(4, []).unwrap();
        let hits = index.knn(&query("q", 4, 0), 3).unwrap();
        assert!(hits.is_empty());
    }

    #[test]
    fn duplicate_id_rejected() {
        let mut entries = stub_entries(2, 8, 0, false);
        entries[1].image_id = entries[0].image_id.clone();
        assert!(matches!(
            FlatIndex::build(8, entries),
            Err(StoreError::DuplicateId(_))
        ));
    }

    #[test]
    fn non_unit_key_rejected() {
        let mut entries = stub_entries(1, 4, 0, false);
        entries[0].key = EmbeddingVector::new(vec![1.0, 1.0, 0.0, 0.0]).unwrap();
        assert!(matches!(
            FlatIndex::build(4, entries),
            Err(StoreError::NonUnitKey { .. })
        ));
    }

    #[test]
    fn self_query_is_rank_one() {
        let entries = stub_entries(50, 16, 0, false);
        let target = entries[17].key.clone();
        let index = FlatIndex::build(16, entries).unwrap();
        let hits = index.knn(&target, 5).unwrap();
        assert_eq!(hits[0].image_id, "id-17");
        assert_eq!(hits[0].rank, 1);
        assert!((hits[0].score - 1.0).abs() < 1e-6);
    }

    #[test]
    fn k_larger_than_store_returns_all() {
        let index = FlatIndex::build(8, stub_entries(3, 8, 0, false)).unwrap();
        let hits = index.knn(&query("q", 8, 0), 10).unwrap();
        assert_eq!(hits.len(), 3);
        assert_eq!(
            hits.iter().map(|h| h.rank).collect::<Vec<_>>(),
            vec![1, 2, 3]
        );
    }

    #[test]
    fn exclude_id_removes_self() {
        let entries = stub_entries(10, 8, 0, false);
        let target = entries[3].key.clone();
        let index = FlatIndex::build(8, entries).unwrap();
        let hits = index.knn_filtered(&target, 3, Some("id-3")).unwrap();
        assert!(hits.iter().all(|h| h.image_id != "id-3"));
    }

    #[test]
    fn dimension_mismatch_on_query() {
        let index = FlatIndex::build(8, stub_entries(3, 8, 0, false)).unwrap();
        assert!(matches!(
            index.knn(&query("q", 4, 0), 2),
            Err(StoreError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn matches_brute_force_oracle() {
        let entries = stub_entries(1000, 32, 7, false);
        let index = FlatIndex::build(32, entries.clone()).unwrap();
        for qi in 0..100 {
            let q = query(&format!("query-{qi}"), 32, 99);
            let hits = index.knn(&q, 5).unwrap();
            let expected = brute_force_knn(&entries, &q, 5);
            assert_eq!(hits.len(), expected.len());
            for (hit, (id, rank, score)) in hits.iter().zip(&expected) {
                assert_eq!(&hit.image_id, id);
                assert_eq!(hit.rank, *rank);
                assert!((hit.score - score).abs() <= 1e-7);
            }
        }
    }

    #[test]
    fn k_prefix_monotonicity() {
        let entries = stub_entries(200, 16, 1, false);
        let index = FlatIndex::build(16, entries).unwrap();
        let q = query("prefix", 16, 5);
        let five = index.knn(&q, 5).unwrap();
        let six = index.knn(&q, 6).unwrap();
        for (a, b) in five.iter().zip(&six) {
            assert_eq!(a.image_id, b.image_id);
            assert_eq!(a.rank, b.rank);
        }
    }

    #[test]
    fn scores_bounded() {
        let entries = stub_entries(100, 8, 2, false);
        let index = FlatIndex::build(8, entries).unwrap();
        let hits = index.knn(&query("bounds", 8, 0), 100).unwrap();
        assert!(hits.iter().all(|h| (-1.0..=1.0).contains(&h.score)));
        for pair in hits.windows(2) {
            assert!(pair[0].score >= pair[1].score);
        }
    }

    #[test]
    fn top_k_selection_order_independent() {
        let mut rng = XorShift64Star::new(11);
        let scored: Vec<(usize, f64)> = (0..500)
            .map(|i| (i, (rng.next_unit_f64() * 16.0).floor() / 16.0))
            .collect();
        let forward = select_top_k(scored.clone(), 10);
        let mut shuffled = scored;
        for i in (1..shuffled.len()).rev() {
            let j = rng.next_index(i + 1);
            shuffled.swap(i, j);
        }
        let reversed = select_top_k(shuffled, 10);
        assert_eq!(forward, reversed);
    }
}
