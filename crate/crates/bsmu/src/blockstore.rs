//! Replicated block storage, modeled on a distributed file system but
//! desk-scale: datasets are split into fixed-size blocks, each block is
//! copied onto `replication_factor` simulated storage nodes, and every
//! byte that crosses the store is metered for the counter report.

use std::collections::HashMap;
use std::fs;
use std::io::{self, BufRead};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::RwLock;

use thiserror::Error;

use crate::hash::fnv1a_64;

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("path {path:?} already exists in the store")]
    PathExists { path: String },
    #[error("empty path")]
    EmptyPath,
    #[error("path {path:?} not found")]
    NotFound { path: String },
    #[error("block {block_index} of {path:?}: all replicas fail their checksum")]
    CorruptBlock { path: String, block_index: u32 },
    #[error("invalid store config: {reason}")]
    InvalidConfig { reason: String },
    #[error("no replica of block {block_index} of {path:?} on node {node_id}")]
    NoSuchReplica {
        path: String,
        block_index: u32,
        node_id: usize,
    },
    #[error("persistence error: {0}")]
    Io(#[from] io::Error),
    #[error("bad manifest line {line:?}: {reason}")]
    BadManifest { line: String, reason: String },
}

/// Block size, replication and node layout for a store instance.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StoreConfig {
    pub block_size_bytes: usize,
    pub replication_factor: usize,
    pub node_count: usize,
}

impl Default for StoreConfig {
    fn default() -> StoreConfig {
        StoreConfig {
            block_size_bytes: 1024,
            replication_factor: 3,
            node_count: 4,
        }
    }
}

impl StoreConfig {
    pub fn validate(&self) -> Result<(), StoreError> {
        if self.block_size_bytes == 0 {
            return Err(StoreError::InvalidConfig {
                reason: "block_size_bytes must be >= 1".into(),
            });
        }
        if self.replication_factor == 0 || self.node_count == 0 {
            return Err(StoreError::InvalidConfig {
                reason: "replication_factor and node_count must be >= 1".into(),
            });
        }
        if self.replication_factor > self.node_count {
            return Err(StoreError::InvalidConfig {
                reason: format!(
                    "replication_factor {} exceeds node_count {}",
                    self.replication_factor, self.node_count
                ),
            });
        }
        Ok(())
    }
}

/// Placement and checksum of one stored block.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockInfo {
    pub index: u32,
    pub length: usize,
    /// FNV-1a 64 over the block payload.
    pub checksum: u64,
    /// Node ids holding a copy, in placement order.
    pub replicas: Vec<usize>,
}

/// Everything needed to reassemble one stored path.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockManifest {
    pub path: String,
    pub total_bytes: usize,
    pub blocks: Vec<BlockInfo>,
}

impl BlockManifest {
    pub fn block_count(&self) -> usize {
        self.blocks.len()
    }
}

/// Snapshot of the store's I/O meters. All values are monotone over the
/// store's lifetime.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct IOCounters {
    pub bytes_read: u64,
    pub bytes_written: u64,
    pub blocks_read: u64,
    pub blocks_written: u64,
}

type BlockKey = (String, u32);

#[derive(Default)]
struct Inner {
    files: HashMap<String, BlockManifest>,
    /// One payload map per simulated storage node.
    nodes: Vec<HashMap<BlockKey, Vec<u8>>>,
}

/// In-memory replicated block store. Shareable across threads; reads are
/// concurrent, writes serialize on the store lock, counters are atomic.
pub struct BlockStore {
    config: StoreConfig,
    inner: RwLock<Inner>,
    bytes_read: AtomicU64,
    bytes_written: AtomicU64,
    blocks_read: AtomicU64,
    blocks_written: AtomicU64,
}

impl BlockStore {
    pub fn new(config: StoreConfig) -> Result<BlockStore, StoreError> {
        config.validate()?;
        let inner = Inner {
            files: HashMap::new(),
            nodes: vec![HashMap::new(); config.node_count],
        };
        Ok(BlockStore {
            config,
            inner: RwLock::new(inner),
            bytes_read: AtomicU64::new(0),
            bytes_written: AtomicU64::new(0),
            blocks_read: AtomicU64::new(0),
            blocks_written: AtomicU64::new(0),
        })
    }

    pub fn config(&self) -> StoreConfig {
        self.config
    }

    /// Split `data` into blocks, replicate each block onto
    /// `replication_factor` nodes and record the manifest.
    ///
    /// Block `i` is placed on nodes `(i + k) % node_count` for
    /// `k in 0..replication_factor`, so placement is deterministic.
    pub fn put(&self, path: &str, data: &[u8]) -> Result<BlockManifest, StoreError> {
        if path.is_empty() {
            return Err(StoreError::EmptyPath);
        }
        let mut inner = self.inner.write().unwrap();
        if inner.files.contains_key(path) {
            return Err(StoreError::PathExists { path: path.to_string() });
        }

        let mut blocks = Vec::new();
        for (i, chunk) in data.chunks(self.config.block_size_bytes).enumerate() {
            let index = i as u32;
            let replicas: Vec<usize> = (0..self.config.replication_factor)
                .map(|k| (i + k) % self.config.node_count)
                .collect();
            for &node in &replicas {
                inner.nodes[node].insert((path.to_string(), index), chunk.to_vec());
            }
            blocks.push(BlockInfo {
                index,
                length: chunk.len(),
                checksum: fnv1a_64(chunk),
                replicas,
            });
        }

        let manifest = BlockManifest {
            path: path.to_string(),
            total_bytes: data.len(),
            blocks,
        };
        let block_count = manifest.block_count() as u64;
        inner.files.insert(path.to_string(), manifest.clone());
        drop(inner);

        let replication = self.config.replication_factor as u64;
        self.bytes_written
            .fetch_add(data.len() as u64 * replication, Ordering::Relaxed);
        self.blocks_written
            .fetch_add(block_count * replication, Ordering::Relaxed);
        Ok(manifest)
    }

    /// Reassemble a path from the first intact replica of each block.
    pub fn get(&self, path: &str) -> Result<Vec<u8>, StoreError> {
        let inner = self.inner.read().unwrap();
        let manifest = inner
            .files
            .get(path)
            .ok_or_else(|| StoreError::NotFound { path: path.to_string() })?;

        let mut data = Vec::with_capacity(manifest.total_bytes);
        for block in &manifest.blocks {
            let key = (path.to_string(), block.index);
            let intact = block.replicas.iter().find_map(|&node| {
                inner.nodes[node]
                    .get(&key)
                    .filter(|bytes| bytes.len() == block.length && fnv1a_64(bytes) == block.checksum)
            });
            match intact {
                Some(bytes) => data.extend_from_slice(bytes),
                None => {
                    return Err(StoreError::CorruptBlock {
                        path: path.to_string(),
                        block_index: block.index,
                    })
                }
            }
        }
        let block_count = manifest.block_count() as u64;
        drop(inner);

        self.bytes_read.fetch_add(data.len() as u64, Ordering::Relaxed);
        self.blocks_read.fetch_add(block_count, Ordering::Relaxed);
        Ok(data)
    }

    pub fn exists(&self, path: &str) -> bool {
        self.inner.read().unwrap().files.contains_key(path)
    }

    pub fn manifest(&self, path: &str) -> Option<BlockManifest> {
        self.inner.read().unwrap().files.get(path).cloned()
    }

    pub fn counters(&self) -> IOCounters {
        IOCounters {
            bytes_read: self.bytes_read.load(Ordering::Relaxed),
            bytes_written: self.bytes_written.load(Ordering::Relaxed),
            blocks_read: self.blocks_read.load(Ordering::Relaxed),
            blocks_written: self.blocks_written.load(Ordering::Relaxed),
        }
    }

    /// Fault injection: overwrite the first byte of one replica so its
    /// checksum no longer matches. `get` must survive as long as at least
    /// one replica of every block stays intact.
    pub fn corrupt_replica(
        &self,
        path: &str,
        block_index: u32,
        node_id: usize,
    ) -> Result<(), StoreError> {
        let mut inner = self.inner.write().unwrap();
        if !inner.files.contains_key(path) {
            return Err(StoreError::NotFound { path: path.to_string() });
        }
        let missing = || StoreError::NoSuchReplica {
            path: path.to_string(),
            block_index,
            node_id,
        };
        let bytes = inner
            .nodes
            .get_mut(node_id)
            .ok_or_else(missing)?
            .get_mut(&(path.to_string(), block_index))
            .ok_or_else(missing)?;
        if bytes.is_empty() {
            return Err(missing());
        }
        bytes[0] ^= 0xFF;
        Ok(())
    }

    /// Write every stored path under `root`: one `block_<i>` file per block
    /// (the first intact replica) plus a `manifest.txt` with one line per
    /// block: `index length checksum_hex node_ids_csv`.
    pub fn persist(&self, root: &Path) -> Result<(), StoreError> {
        let inner = self.inner.read().unwrap();
        for (path, manifest) in &inner.files {
            let dir = root.join(path);
            fs::create_dir_all(&dir)?;
            let mut lines = String::new();
            for block in &manifest.blocks {
                let key = (path.clone(), block.index);
                let bytes = block
                    .replicas
                    .iter()
                    .find_map(|&node| {
                        inner.nodes[node]
                            .get(&key)
                            .filter(|b| fnv1a_64(b) == block.checksum)
                    })
                    .ok_or_else(|| StoreError::CorruptBlock {
                        path: path.clone(),
                        block_index: block.index,
                    })?;
                fs::write(dir.join(format!("block_{}", block.index)), bytes)?;
                let nodes_csv = block
                    .replicas
                    .iter()
                    .map(|n| n.to_string())
                    .collect::<Vec<_>>()
                    .join(",");
                lines.push_str(&format!(
                    "{} {} {:016x} {}\n",
                    block.index, block.length, block.checksum, nodes_csv
                ));
            }
            fs::write(dir.join("manifest.txt"), lines)?;
        }
        Ok(())
    }

    /// Rebuild a store from a directory written by [`BlockStore::persist`].
    /// Loaded data is not metered; counters start at zero.
    pub fn load(root: &Path, config: StoreConfig) -> Result<BlockStore, StoreError> {
        let store = BlockStore::new(config)?;
        let mut dirs = vec![root.to_path_buf()];
        while let Some(dir) = dirs.pop() {
            let manifest_file = dir.join("manifest.txt");
            if manifest_file.is_file() {
                let rel = dir
                    .strip_prefix(root)
                    .expect("walked path is under root")
                    .to_string_lossy()
                    .replace(std::path::MAIN_SEPARATOR, "/");
                store.load_one(&dir, &rel, &manifest_file)?;
            }
            for entry in fs::read_dir(&dir)? {
                let entry_path = entry?.path();
                if entry_path.is_dir() {
                    dirs.push(entry_path);
                }
            }
        }
        Ok(store)
    }

    fn load_one(&self, dir: &PathBuf, path: &str, manifest_file: &Path) -> Result<(), StoreError> {
        let mut blocks = Vec::new();
        let mut total_bytes = 0usize;
        let reader = io::BufReader::new(fs::File::open(manifest_file)?);
        let mut inner = self.inner.write().unwrap();
        for line in reader.lines() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let bad = |reason: &str| StoreError::BadManifest {
                line: line.clone(),
                reason: reason.to_string(),
            };
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 4 {
                return Err(bad("expected 4 fields"));
            }
            let index: u32 = fields[0].parse().map_err(|_| bad("bad index"))?;
            let length: usize = fields[1].parse().map_err(|_| bad("bad length"))?;
            let checksum = u64::from_str_radix(fields[2], 16).map_err(|_| bad("bad checksum"))?;
            let replicas: Vec<usize> = fields[3]
                .split(',')
                .map(|n| n.parse().map_err(|_| bad("bad node id")))
                .collect::<Result<_, _>>()?;
            if replicas.iter().any(|&n| n >= self.config.node_count) {
                return Err(bad("node id out of range"));
            }

            let bytes = fs::read(dir.join(format!("block_{index}")))?;
            if bytes.len() != length || fnv1a_64(&bytes) != checksum {
                return Err(StoreError::CorruptBlock {
                    path: path.to_string(),
                    block_index: index,
                });
            }
            for &node in &replicas {
                inner.nodes[node].insert((path.to_string(), index), bytes.clone());
            }
            total_bytes += length;
            blocks.push(BlockInfo {
                index,
                length,
                checksum,
                replicas,
            });
        }
        blocks.sort_by_key(|b| b.index);
        inner.files.insert(
            path.to_string(),
            BlockManifest {
                path: path.to_string(),
                total_bytes,
                blocks,
            },
        );
        Ok(())
    }
}
