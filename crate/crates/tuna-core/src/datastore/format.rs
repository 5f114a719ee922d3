//! Binary store format, little-endian throughout.
//!
//! ```text
//! offset  size        field
//! 0       8           magic "TUNADS\0\0"
//! 8       2           version (u16) = 1
//! 10      1           kind (u8): 0 = flat, 1 = ivf
//! 11      4           dim (u32)
//! 15      8           count (u64)
//! 23      16          reserved (zeros)
//! 39      count*dim*4 keys, f32 row-major
//! ...                 string table: u32 count, then per string
//!                     u32 byte length + UTF-8 bytes
//! ...                 per-entry records: id ref (u32), tag count (u16),
//!                     tag refs (u32 each), caption ref (u32,
//!                     0xFFFFFFFF = none); refs index the string table
//! ...     [ivf only]  nlist (u32), centroids (nlist*dim*4, f32),
//!                     posting lists (u32 length + u32 entry indices)
//! end-4   4           CRC32 (IEEE) of all preceding bytes
//! ```
//!
//! Writes are deterministic: the string table interns strings in entry
//! order (id, tags, caption), so identical inputs produce identical bytes
//! and save -> load -> save round-trips bit-exactly.

use std::collections::HashMap;
use std::path::Path;

use crate::embedder::EmbeddingVector;
use crate::tagminer::TagSet;

use super::{FlatIndex, IvfIndex, StoreEntry, StoreError};

const MAGIC: &[u8; 8] = b"TUNADS\0\0";
const VERSION: u16 = 1;
const KIND_FLAT: u8 = 0;
const KIND_IVF: u8 = 1;
const NO_CAPTION: u32 = u32::MAX;

/// Either kind of persisted index.
#[derive(Debug, Clone)]
pub enum LoadedIndex {
    Flat(FlatIndex),
    Ivf(IvfIndex),
}

impl LoadedIndex {
    /// The exact view: the flat index itself, or the one underlying an IVF.
    pub fn flat(&self) -> &FlatIndex {
        match self {
            LoadedIndex::Flat(f) => f,
            LoadedIndex::Ivf(ivf) => ivf.flat(),
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            LoadedIndex::Flat(_) => "flat",
            LoadedIndex::Ivf(_) => "ivf",
        }
    }
}

struct TableBuilder {
    strings: Vec<String>,
    lookup: HashMap<String, u32>,
}

impl TableBuilder {
    fn new() -> Self {
        Self {
            strings: Vec::new(),
            lookup: HashMap::new(),
        }
    }

    fn intern(&mut self, s: &str) -> u32 {
        if let Some(&i) = self.lookup.get(s) {
            return i;
        }
        let i = self.strings.len() as u32;
        self.strings.push(s.to_string());
        self.lookup.insert(s.to_string(), i);
        i
    }
}

fn encode_body(flat: &FlatIndex, ivf: Option<&IvfIndex>) -> Vec<u8> {
    let mut buf = Vec::new();
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&VERSION.to_le_bytes());
    buf.push(if ivf.is_some() { KIND_IVF } else { KIND_FLAT });
    buf.extend_from_slice(&(flat.dim() as u32).to_le_bytes());
    buf.extend_from_slice(&(flat.len() as u64).to_le_bytes());
    buf.extend_from_slice(&[0u8; 16]);

    for entry in flat.entries() {
        for &x in entry.key.as_slice() {
            buf.extend_from_slice(&x.to_le_bytes());
        }
    }

    let mut table = TableBuilder::new();
    let mut records: Vec<(u32, Vec<u32>, u32)> = Vec::with_capacity(flat.len());
    for entry in flat.entries() {
        let id_ref = table.intern(&entry.image_id);
        let tag_refs: Vec<u32> = entry.tags.iter().map(|t| table.intern(t)).collect();
        let caption_ref = entry
            .caption
            .as_deref()
            .map_or(NO_CAPTION, |c| table.intern(c));
        records.push((id_ref, tag_refs, caption_ref));
    }

    buf.extend_from_slice(&(table.strings.len() as u32).to_le_bytes());
    for s in &table.strings {
        buf.extend_from_slice(&(s.len() as u32).to_le_bytes());
        buf.extend_from_slice(s.as_bytes());
    }

    for (id_ref, tag_refs, caption_ref) in &records {
        buf.extend_from_slice(&id_ref.to_le_bytes());
        buf.extend_from_slice(&(tag_refs.len() as u16).to_le_bytes());
        for r in tag_refs {
            buf.extend_from_slice(&r.to_le_bytes());
        }
        buf.extend_from_slice(&caption_ref.to_le_bytes());
    }

    if let Some(ivf) = ivf {
        buf.extend_from_slice(&(ivf.nlist() as u32).to_le_bytes());
        for centroid in ivf.centroids() {
            for &x in centroid.as_slice() {
                buf.extend_from_slice(&x.to_le_bytes());
            }
        }
        for posting in ivf.postings() {
            buf.extend_from_slice(&(posting.len() as u32).to_le_bytes());
            for idx in posting {
                buf.extend_from_slice(&idx.to_le_bytes());
            }
        }
    }

    buf
}

fn finish(mut body: Vec<u8>) -> Vec<u8> {
    let crc = crc32fast::hash(&body);
    body.extend_from_slice(&crc.to_le_bytes());
    body
}

impl FlatIndex {
    /// Serializes the sealed index; identical indices produce identical
    /// bytes.
    pub fn to_bytes(&self) -> Vec<u8> {
        finish(encode_body(self, None))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), StoreError> {
        std::fs::write(path, self.to_bytes())?;
        Ok(())
    }
}

impl IvfIndex {
    pub fn to_bytes(&self) -> Vec<u8> {
        finish(encode_body(self.flat(), Some(self)))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), StoreError> {
        std::fs::write(path, self.to_bytes())?;
        Ok(())
    }
}

struct Cursor<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], StoreError> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.data.len())
            .ok_or(StoreError::Malformed("unexpected end of data"))?;
        let slice = &self.data[self.pos..end];
        self.pos = end;
        Ok(slice)
    }

    fn u16(&mut self) -> Result<u16, StoreError> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<u32, StoreError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64, StoreError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f32_vec(&mut self, n: usize) -> Result<Vec<f32>, StoreError> {
        let bytes = self.take(n.checked_mul(4).ok_or(StoreError::Malformed("overflow"))?)?;
        Ok(bytes
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }

    fn done(&self) -> bool {
        self.pos == self.data.len()
    }
}

/// Loads either kind of store. Corrupt or truncated files fail with
/// [`StoreError::BadMagic`] / [`StoreError::ChecksumMismatch`] before any
/// index is constructed.
pub fn load(path: impl AsRef<Path>) -> Result<LoadedIndex, StoreError> {
    let data = std::fs::read(path)?;
    load_bytes(&data)
}

pub fn load_bytes(data: &[u8]) -> Result<LoadedIndex, StoreError> {
    if data.len() < MAGIC.len() + 4 || &data[..MAGIC.len()] != MAGIC {
        return Err(StoreError::BadMagic);
    }
    let version = u16::from_le_bytes([data[8], data[9]]);
    if version != VERSION {
        return Err(StoreError::VersionUnsupported(version));
    }
    let body = &data[..data.len() - 4];
    let stored_crc = u32::from_le_bytes(data[data.len() - 4..].try_into().unwrap());
    if crc32fast::hash(body) != stored_crc {
        return Err(StoreError::ChecksumMismatch);
    }

    let mut cur = Cursor {
        data: body,
        pos: 10,
    };
    let kind = cur.take(1)?[0];
    if kind != KIND_FLAT && kind != KIND_IVF {
        return Err(StoreError::Malformed("unknown index kind"));
    }
    let dim = cur.u32()? as usize;
    let count = cur.u64()? as usize;
    cur.take(16)?; // reserved

    let mut keys = Vec::with_capacity(count);
    for _ in 0..count {
        keys.push(cur.f32_vec(dim)?);
    }

    let table_len = cur.u32()? as usize;
    let mut table = Vec::with_capacity(table_len);
    for _ in 0..table_len {
        let len = cur.u32()? as usize;
        let bytes = cur.take(len)?;
        let s = std::str::from_utf8(bytes)
            .map_err(|_| StoreError::Malformed("string table is not UTF-8"))?;
        table.push(s.to_string());
    }
    let lookup = |r: u32| -> Result<String, StoreError> {
        table
            .get(r as usize)
            .cloned()
            .ok_or(StoreError::Malformed("string ref out of range"))
    };

    let mut entries = Vec::with_capacity(count);
    for key in keys {
        let id = lookup(cur.u32()?)?;
        let tag_count = cur.u16()? as usize;
        let mut tags = Vec::with_capacity(tag_count);
        for _ in 0..tag_count {
            tags.push(lookup(cur.u32()?)?);
        }
        let caption_ref = cur.u32()?;
        let caption = if caption_ref == NO_CAPTION {
            None
        } else {
            Some(lookup(caption_ref)?)
        };
        entries.push(StoreEntry {
            image_id: id,
            key: EmbeddingVector::new(key).map_err(|_| StoreError::Malformed("bad key vector"))?,
            tags: TagSet::new(tags).map_err(|_| StoreError::Malformed("bad tag set"))?,
            caption,
        });
    }

    // Rebuilding runs the same validation as the original build.
    let flat = FlatIndex::build(dim, entries)?;

    if kind == KIND_FLAT {
        if !cur.done() {
            return Err(StoreError::Malformed("trailing bytes after flat index"));
        }
        return Ok(LoadedIndex::Flat(flat));
    }

    let nlist = cur.u32()? as usize;
    if nlist == 0 || nlist > count {
        return Err(StoreError::Malformed("nlist out of range"));
    }
    let mut centroids = Vec::with_capacity(nlist);
    for _ in 0..nlist {
        let c = cur.f32_vec(dim)?;
        centroids
            .push(EmbeddingVector::new(c).map_err(|_| StoreError::Malformed("bad centroid"))?);
    }
    let mut postings = Vec::with_capacity(nlist);
    let mut seen = vec![false; count];
    for _ in 0..nlist {
        let len = cur.u32()? as usize;
        let mut list = Vec::with_capacity(len);
        for _ in 0..len {
            let idx = cur.u32()?;
            if idx as usize >= count || seen[idx as usize] {
                return Err(StoreError::Malformed("bad posting entry"));
            }
            seen[idx as usize] = true;
            list.push(idx);
        }
        postings.push(list);
    }
    if seen.iter().any(|s| !s) {
        return Err(StoreError::Malformed("posting lists do not cover all entries"));
    }
    if !cur.done() {
        return Err(StoreError::Malformed("trailing bytes after ivf index"));
    }
    Ok(LoadedIndex::Ivf(IvfIndex::from_parts(
        flat, centroids, postings, 0,
    )))
}

#[cfg(test)]
mod tests {
    use super::super::test_support::stub_entries;
    use super::super::train_ivf;
    use super::*;
    use crate::embedder::{stub_text_embed, EncoderSpec};

    fn build_flat(n: usize) -> FlatIndex {
        FlatIndex::build(16, stub_entries(n, 16, 0, true)).unwrap()
    }

    #[test]
    fn flat_round_trip_preserves_queries() {
        let flat = build_flat(64);
        let bytes = flat.to_bytes();
        let loaded = match load_bytes(&bytes).unwrap() {
            LoadedIndex::Flat(f) => f,
            _ => panic!("expected flat"),
        };
        let q = stub_text_embed("roundtrip", &EncoderSpec::new(16, 1, 1, 0)).unwrap();
        assert_eq!(flat.knn(&q, 5).unwrap(), loaded.knn(&q, 5).unwrap());
        assert_eq!(flat.entries(), loaded.entries());
    }

    #[test]
    fn save_load_save_is_byte_identical() {
        let flat = build_flat(16);
        let bytes = flat.to_bytes();
        let loaded = load_bytes(&bytes).unwrap();
        let again = match loaded {
            LoadedIndex::Flat(f) => f.to_bytes(),
            _ => panic!("expected flat"),
        };
        assert_eq!(bytes, again);
    }

    #[test]
    fn ivf_round_trip_preserves_queries() {
        let flat = build_flat(128);
        let ivf = train_ivf(flat, 8, 7, 4).unwrap();
        let bytes = ivf.to_bytes();
        let loaded = match load_bytes(&bytes).unwrap() {
            LoadedIndex::Ivf(i) => i,
            _ => panic!("expected ivf"),
        };
        let q = stub_text_embed("ivf-roundtrip", &EncoderSpec::new(16, 1, 1, 0)).unwrap();
        for nprobe in [1, 3, 8] {
            assert_eq!(
                ivf.knn(&q, 5, nprobe).unwrap(),
                loaded.knn(&q, 5, nprobe).unwrap()
            );
        }
        let again = loaded.to_bytes();
        assert_eq!(bytes, again);
    }

    #[test]
    fn truncated_file_rejected() {
        let bytes = build_flat(8).to_bytes();
        for cut in [0, 3, 7, 11, 40, bytes.len() - 5, bytes.len() - 1] {
            let err = load_bytes(&bytes[..cut]).unwrap_err();
            assert!(
                matches!(err, StoreError::BadMagic | StoreError::ChecksumMismatch),
                "cut at {cut} gave {err:?}"
            );
        }
    }

    #[test]
    fn flipped_bit_rejected() {
        let mut bytes = build_flat(8).to_bytes();
        let mid = bytes.len() / 2;
        bytes[mid] ^= 0x40;
        assert!(matches!(
            load_bytes(&bytes).unwrap_err(),
            StoreError::ChecksumMismatch
        ));
    }

    #[test]
    fn wrong_magic_rejected() {
        let mut bytes = build_flat(4).to_bytes();
        bytes[0] = b'X';
        assert!(matches!(load_bytes(&bytes).unwrap_err(), StoreError::BadMagic));
    }

    #[test]
    fn unsupported_version_rejected() {
        let mut bytes = build_flat(4).to_bytes();
        bytes[8] = 9; // version low byte
        assert!(matches!(
            load_bytes(&bytes).unwrap_err(),
            StoreError::VersionUnsupported(9)
        ));
    }

    #[test]
    fn save_and_load_via_files() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("store.tunads");
        let flat = build_flat(10);
        flat.save(&path).unwrap();
        let loaded = load(&path).unwrap();
        assert_eq!(loaded.flat().len(), 10);
        assert_eq!(loaded.kind_name(), "flat");
    }

    #[test]
    fn captions_survive_round_trip() {
        let flat = build_flat(6);
        let loaded = load_bytes(&flat.to_bytes()).unwrap();
        for (a, b) in flat.entries().iter().zip(loaded.flat().entries()) {
            assert_eq!(a.caption, b.caption);
        }
        // and entries without captions stay caption-free
        let no_caps = FlatIndex::build(16, stub_entries(6, 16, 1, false)).unwrap();
        let loaded = load_bytes(&no_caps.to_bytes()).unwrap();
        assert!(loaded.flat().entries().iter().all(|e| e.caption.is_none()));
    }
}
