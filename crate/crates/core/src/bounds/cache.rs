//! On-disk cache of bound vectors. Bounds do not depend on the tested
//! state, so one computation serves every detection run on the same POVM.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{BoundResult, Method};
use crate::error::Result;
use crate::measurements::Povm;

pub const TOOL_VERSION: &str = concat!("majorfame-", env!("CARGO_PKG_VERSION"));

fn to_hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// SHA-256 over the dimensions and the exact bit patterns of every POVM
/// element. Labels are ignored.
pub fn povm_hash(povm: &Povm) -> String {
    let mut h = Sha256::new();
    for &d in povm.spec().dims() {
        h.update((d as u64).to_le_bytes());
    }
    h.update((povm.len() as u64).to_le_bytes());
    for e in povm.elements() {
        for z in e.matrix().iter() {
            h.update(z.re.to_bits().to_le_bytes());
            h.update(z.im.to_bits().to_le_bytes());
        }
    }
    to_hex(&h.finalize())
}

/// Everything that determines a cached bound.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CacheKey {
    pub povm_hash: String,
    /// Partition letters, `k=<k>` for k-separable bounds, or `all`.
    pub class: String,
    pub method: Method,
    pub seed: u64,
    pub restarts: usize,
    pub samples: Option<usize>,
    pub version: String,
}

impl CacheKey {
    pub fn new(povm: &Povm, class: impl Into<String>, method: Method, seed: u64, restarts: usize, samples: Option<usize>) -> Self {
        Self {
            povm_hash: povm_hash(povm),
            class: class.into(),
            method,
            seed,
            restarts,
            samples,
            version: TOOL_VERSION.to_string(),
        }
    }

    pub fn file_name(&self) -> String {
        let json = serde_json::to_vec(self).expect("key serializes");
        format!("{}.json", &to_hex(&Sha256::digest(&json))[..32])
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CacheEntry {
    pub key: CacheKey,
    pub povm_hash: String,
    pub partition: String,
    pub prefix_maxima: Vec<f64>,
    pub omega: Vec<f64>,
    pub method: Method,
    pub seed: u64,
    pub version: String,
    pub result: BoundResult,
}

#[derive(Clone, Debug)]
pub struct BoundCache {
    dir: PathBuf,
}

impl BoundCache {
    pub fn new(dir: impl Into<PathBuf>) -> Result<Self> {
        let dir = dir.into();
        fs::create_dir_all(&dir)?;
        Ok(Self { dir })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn path_for(&self, key: &CacheKey) -> PathBuf {
        self.dir.join(key.file_name())
    }

    /// A stored entry for exactly this key. Unreadable or mismatching files
    /// count as misses.
    pub fn get(&self, key: &CacheKey) -> Option<CacheEntry> {
        let bytes = fs::read(self.path_for(key)).ok()?;
        let entry: CacheEntry = serde_json::from_slice(&bytes).ok()?;
        (entry.key == *key).then_some(entry)
    }

    /// Writes the entry to a temporary file in the cache directory and
    /// renames it into place.
    pub fn put(&self, key: &CacheKey, result: &BoundResult) -> Result<PathBuf> {
        let entry = CacheEntry {
            key: key.clone(),
            povm_hash: key.povm_hash.clone(),
            partition: key.class.clone(),
            prefix_maxima: result.prefix_maxima.clone(),
            omega: result.omega.as_slice().to_vec(),
            method: result.method,
            seed: key.seed,
            version: key.version.clone(),
            result: result.clone(),
        };
        let path = self.path_for(key);
        let tmp = self.dir.join(format!(".{}.{}.tmp", key.file_name(), std::process::id()));
        {
            let mut f = fs::File::create(&tmp)?;
            f.write_all(&serde_json::to_vec_pretty(&entry)?)?;
            f.write_all(b"\n")?;
            f.sync_all()?;
        }
        fs::rename(&tmp, &path)?;
        Ok(path)
    }
}
