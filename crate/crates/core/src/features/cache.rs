//! Memoisation of computed representations, in memory and optionally on disk.

use std::fs::{self, File};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use dashmap::DashMap;
use ndarray::{Array1, ArrayD, IxDyn};
use ndarray_npy::{ReadNpyExt, WriteNpyExt};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::interchange::atomic_write;
use super::Representation;
use crate::error::Result;

/// Identifies one computed representation: which sample, padded to which
/// length, under which feature configuration.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CacheKey {
    pub sample: String,
    pub padded_len: Option<usize>,
    pub config: String,
}

impl CacheKey {
    fn digest(&self) -> String {
        let mut h = Sha256::new();
        h.update(self.sample.as_bytes());
        h.update([0]);
        h.update(format!("{:?}", self.padded_len).as_bytes());
        h.update([0]);
        h.update(self.config.as_bytes());
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[derive(Serialize, Deserialize)]
struct DiskMeta {
    sample: String,
    padded_len: Option<usize>,
    config: String,
    shapes: Vec<Vec<usize>>,
    time_axis: Option<usize>,
    source_id: String,
}

/// Concurrent cache of representations.
///
/// Entries are inserted only once fully computed, so readers never observe
/// partial values. The in-memory part stops accepting entries once its byte
/// budget is used up; the disk part (if any) writes through temporary files.
pub struct FeatureCache {
    entries: DashMap<CacheKey, Arc<Representation>>,
    bytes: AtomicUsize,
    budget: usize,
    disk: Option<PathBuf>,
}

impl Default for FeatureCache {
    fn default() -> Self {
        FeatureCache::new(512 << 20)
    }
}

impl FeatureCache {
    pub fn new(budget_bytes: usize) -> Self {
        FeatureCache {
            entries: DashMap::new(),
            bytes: AtomicUsize::new(0),
            budget: budget_bytes,
            disk: None,
        }
    }

    pub fn with_disk(mut self, dir: impl Into<PathBuf>) -> Result<Self> {
        let dir = dir.into();
        fs::create_dir_all(&dir).map_err(|e| crate::Error::io(&dir, e))?;
        self.disk = Some(dir);
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, key: &CacheKey) -> Option<Arc<Representation>> {
        self.entries.get(key).map(|e| Arc::clone(e.value()))
    }

    pub fn get_or_compute(
        &self,
        key: CacheKey,
        compute: impl FnOnce() -> Result<Representation>,
    ) -> Result<Arc<Representation>> {
        if let Some(hit) = self.get(&key) {
            return Ok(hit);
        }
        let rep = match self.disk.as_deref().and_then(|d| read_disk(d, &key)) {
            Some(rep) => rep,
            None => {
                let rep = compute()?;
                if let Some(dir) = &self.disk {
                    if let Err(e) = write_disk(dir, &key, &rep) {
                        log::warn!("feature cache write failed: {e}");
                    }
                }
                rep
            }
        };
        let rep = Arc::new(rep);
        let size = rep.dim() * std::mem::size_of::<f64>();
        if self.bytes.fetch_add(size, Ordering::Relaxed) + size <= self.budget {
            let stored = self.entries.entry(key).or_insert_with(|| Arc::clone(&rep));
            return Ok(Arc::clone(stored.value()));
        }
        self.bytes.fetch_sub(size, Ordering::Relaxed);
        Ok(rep)
    }
}

fn read_disk(dir: &Path, key: &CacheKey) -> Option<Representation> {
    let stem = key.digest();
    let meta: DiskMeta =
        serde_json::from_slice(&fs::read(dir.join(format!("{stem}.json"))).ok()?).ok()?;
    if meta.sample != key.sample || meta.padded_len != key.padded_len || meta.config != key.config {
        return None;
    }
    let flat = Array1::<f64>::read_npy(File::open(dir.join(format!("{stem}.npy"))).ok()?).ok()?;
    let mut offset = 0;
    let mut blocks = Vec::with_capacity(meta.shapes.len());
    for shape in &meta.shapes {
        let n: usize = shape.iter().product();
        let values = flat.as_slice()?.get(offset..offset + n)?.to_vec();
        blocks.push(ArrayD::from_shape_vec(IxDyn(shape), values).ok()?);
        offset += n;
    }
    Representation::from_blocks(blocks, meta.time_axis, meta.source_id).ok()
}

fn write_disk(dir: &Path, key: &CacheKey, rep: &Representation) -> Result<()> {
    let stem = key.digest();
    let flat = Array1::from(rep.flatten());
    atomic_write(&dir.join(format!("{stem}.npy")), |w| {
        flat.write_npy(w).map_err(std::io::Error::other)
    })?;
    let meta = DiskMeta {
        sample: key.sample.clone(),
        padded_len: key.padded_len,
        config: key.config.clone(),
        shapes: rep.blocks().iter().map(|b| b.shape().to_vec()).collect(),
        time_axis: rep.time_axis(),
        source_id: rep.source_id().to_string(),
    };
    let text = serde_json::to_vec(&meta).expect("metadata serializes");
    // The metadata file is written last; its presence marks a complete entry.
    atomic_write(&dir.join(format!("{stem}.json")), |w| {
        std::io::Write::write_all(w, &text)
    })
}
