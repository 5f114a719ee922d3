//! Inverted-file approximate retrieval over a sealed flat index.
//!
//! Training runs spherical k-means: assignment by maximum cosine, centroid
//! re-estimation as the normalized member mean, empty clusters reseeded
//! from the point currently farthest from its own centroid. Everything is
//! driven by the training seed, so identical inputs give identical
//! partitions.

use crate::embedder::{dot_f64, l2_normalize, EmbeddingVector};
use crate::rng::{sample_indices, XorShift64Star};

use super::{select_top_k, FlatIndex, QueryHit, StoreError};

/// Approximate index: `nlist` unit centroids with per-centroid posting
/// lists into the owned flat index. Every entry index appears in exactly
/// one posting list.
#[derive(Debug, Clone)]
pub struct IvfIndex {
    flat: FlatIndex,
    centroids: Vec<EmbeddingVector>,
    postings: Vec<Vec<u32>>,
    /// Seed used for training. Not part of the persisted format; loading
    /// restores it as 0.
    train_seed: u64,
}

impl IvfIndex {
    pub(crate) fn from_parts(
        flat: FlatIndex,
        centroids: Vec<EmbeddingVector>,
        postings: Vec<Vec<u32>>,
        train_seed: u64,
    ) -> Self {
        debug_assert_eq!(centroids.len(), postings.len());
        Self {
            flat,
            centroids,
            postings,
            train_seed,
        }
    }

    pub fn flat(&self) -> &FlatIndex {
        &self.flat
    }

    pub fn nlist(&self) -> usize {
        self.centroids.len()
    }

    pub fn dim(&self) -> usize {
        self.flat.dim()
    }

    pub fn len(&self) -> usize {
        self.flat.len()
    }

    pub fn is_empty(&self) -> bool {
        self.flat.is_empty()
    }

    pub fn centroids(&self) -> &[EmbeddingVector] {
        &self.centroids
    }

    pub fn postings(&self) -> &[Vec<u32>] {
        &self.postings
    }

    pub fn train_seed(&self) -> u64 {
        self.train_seed
    }

    /// Posting sizes, in centroid order.
    pub fn partition_sizes(&self) -> Vec<usize> {
        self.postings.iter().map(Vec::len).collect()
    }

    /// Scans the `nprobe` centroids closest to `query` and ranks their
    /// members exactly. `nprobe == nlist` scans everything and matches
    /// [`FlatIndex::knn`] bit-for-bit.
    pub fn knn(
        &self,
        query: &EmbeddingVector,
        k: usize,
        nprobe: usize,
    ) -> Result<Vec<QueryHit>, StoreError> {
        self.flat.check_query(query, k)?;
        if nprobe == 0 || nprobe > self.nlist() {
            return Err(StoreError::InvalidParameter(format!(
                "nprobe must be in 1..={}, got {nprobe}",
                self.nlist()
            )));
        }
        let probes = select_top_k(
            self.centroids
                .iter()
                .enumerate()
                .map(|(i, c)| (i, dot_f64(query.as_slice(), c.as_slice()))),
            nprobe,
        );
        let candidates = probes.into_iter().flat_map(|(list, _)| {
            self.postings[list].iter().map(|&entry_idx| {
                let idx = entry_idx as usize;
                let key = self.flat.entry(idx).key.as_slice();
                (idx, dot_f64(query.as_slice(), key))
            })
        });
        Ok(self.flat.to_hits(select_top_k(candidates, k)))
    }
}

/// Assigns each entry to its highest-cosine centroid (ties to the lower
/// centroid index).
fn assign_all(flat: &FlatIndex, centroids: &[EmbeddingVector]) -> Vec<usize> {
    flat.entries()
        .iter()
        .map(|entry| {
            let mut best = 0usize;
            let mut best_score = f64::NEG_INFINITY;
            for (j, c) in centroids.iter().enumerate() {
                let score = dot_f64(entry.key.as_slice(), c.as_slice());
                if score > best_score {
                    best_score = score;
                    best = j;
                }
            }
            best
        })
        .collect()
}

/// Trains an IVF index over the sealed flat index with spherical k-means.
pub fn train_ivf(
    flat: FlatIndex,
    nlist: usize,
    seed: u64,
    iters: usize,
) -> Result<IvfIndex, StoreError> {
    let n = flat.len();
    if n == 0 {
        return Err(StoreError::EmptyIndex);
    }
    if nlist == 0 || nlist > n {
        return Err(StoreError::InvalidParameter(format!(
            "nlist must be in 1..={n}, got {nlist}"
        )));
    }

    let mut rng = XorShift64Star::new(seed);
    let mut centroids: Vec<EmbeddingVector> = sample_indices(&mut rng, n, nlist)
        .into_iter()
        .map(|i| flat.entry(i).key.clone())
        .collect();

    for _ in 0..iters {
        let assignment = assign_all(&flat, &centroids);

        // Accumulate member sums per cluster.
        let dim = flat.dim();
        let mut sums = vec![vec![0.0f64; dim]; nlist];
        let mut counts = vec![0usize; nlist];
        for (i, &cluster) in assignment.iter().enumerate() {
            counts[cluster] += 1;
            for (acc, &x) in sums[cluster].iter_mut().zip(flat.entry(i).key.as_slice()) {
                *acc += f64::from(x);
            }
        }

        for (j, count) in counts.iter().enumerate() {
            if *count == 0 {
                continue;
            }
            let mean: Vec<f32> = sums[j].iter().map(|&s| (s / *count as f64) as f32).collect();
            if let Ok(unit) = l2_normalize(&mean) {
                centroids[j] = unit;
            }
            // A near-zero mean (members cancel out) keeps the old centroid.
        }

        // Reseed empty clusters from the points farthest from their own
        // centroids, worst first, each point used at most once.
        let empties: Vec<usize> = (0..nlist).filter(|&j| counts[j] == 0).collect();
        if !empties.is_empty() {
            let mut farness: Vec<(usize, f64)> = assignment
                .iter()
                .enumerate()
                .map(|(i, &cluster)| {
                    (
                        i,
                        dot_f64(flat.entry(i).key.as_slice(), centroids[cluster].as_slice()),
                    )
                })
                .collect();
            farness.sort_by(|(ia, sa), (ib, sb)| sa.total_cmp(sb).then_with(|| ia.cmp(ib)));
            for (slot, &j) in empties.iter().enumerate() {
                if let Some(&(point, _)) = farness.get(slot) {
                    centroids[j] = flat.entry(point).key.clone();
                }
            }
        }
    }

    // Final assignment pass builds the postings.
    let assignment = assign_all(&flat, &centroids);
    let mut postings = vec![Vec::new(); nlist];
    for (i, &cluster) in assignment.iter().enumerate() {
        postings[cluster].push(i as u32);
    }

    Ok(IvfIndex::from_parts(flat, centroids, postings, seed))
}
