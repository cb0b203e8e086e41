//! Deterministic map/combine/shuffle/reduce engine over block-stored
//! datasets.
//!
//! Determinism contract: output bytes depend only on the job and the input,
//! never on `worker_count` or scheduling. That holds because
//!  - input splits are derived from block boundaries, not from workers,
//!  - shuffled pairs are tagged with (split index, emission index) and each
//!    reduce group sees its values sorted by that tag,
//!  - reducer keys run in ascending byte-lexicographic order within a
//!    partition, and partition outputs concatenate in index order.

use std::collections::BTreeMap;
use std::ops::Range;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Instant;

use thiserror::Error;

use crate::blockstore::{BlockStore, StoreError};
use crate::hash::fnv1a_64;
use crate::sensor::{Dataset, FormatError, SensorRecord, HEADER_LEN, RECORD_LEN};

#[derive(Debug, Error)]
pub enum JobError {
    #[error("malformed input: {0}")]
    MalformedInput(#[from] FormatError),
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error("{phase} failed at {context}: {message}")]
    JobFailure {
        phase: &'static str,
        context: String,
        message: String,
    },
    #[error("invalid job: {reason}")]
    InvalidJob { reason: String },
}

/// One intermediate pair. Keys of shuffled pairs must be non-empty.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KeyValue {
    pub key: Vec<u8>,
    pub value: Vec<u8>,
}

impl KeyValue {
    pub fn new(key: Vec<u8>, value: Vec<u8>) -> KeyValue {
        KeyValue { key, value }
    }
}

/// User map function: record in, intermediate pairs out.
pub type MapFn = dyn Fn(&SensorRecord) -> Result<Vec<KeyValue>, String> + Send + Sync;
/// Optional map-side pre-aggregation. Must not change the final output
/// (checked in tests for the jobs shipped here).
pub type CombineFn = dyn Fn(&[u8], Vec<Vec<u8>>) -> Result<Vec<Vec<u8>>, String> + Send + Sync;
/// User reduce function: key plus ordered values in, output byte pieces out.
pub type ReduceFn = dyn Fn(&[u8], Vec<Vec<u8>>) -> Result<Vec<Vec<u8>>, String> + Send + Sync;

/// Declarative job: pure map/combine/reduce functions plus a partition count.
#[derive(Clone)]
pub struct JobSpec {
    pub job_name: String,
    pub partition_count: u32,
    mapper: Arc<MapFn>,
    combiner: Option<Arc<CombineFn>>,
    reducer: Arc<ReduceFn>,
}

impl JobSpec {
    pub fn new(
        job_name: impl Into<String>,
        partition_count: u32,
        mapper: Arc<MapFn>,
        reducer: Arc<ReduceFn>,
    ) -> Result<JobSpec, JobError> {
        if partition_count == 0 {
            return Err(JobError::InvalidJob {
                reason: "partition_count must be >= 1".into(),
            });
        }
        Ok(JobSpec {
            job_name: job_name.into(),
            partition_count,
            mapper,
            combiner: None,
            reducer,
        })
    }

    pub fn with_combiner(mut self, combiner: Arc<CombineFn>) -> JobSpec {
        self.combiner = Some(combiner);
        self
    }

    /// Drop the combiner; used by the combiner-soundness checks.
    pub fn without_combiner(mut self) -> JobSpec {
        self.combiner = None;
        self
    }

    pub fn has_combiner(&self) -> bool {
        self.combiner.is_some()
    }
}

/// Record and byte meters for one job run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct JobCounters {
    pub map_input_records: u64,
    pub map_output_records: u64,
    pub map_output_bytes: u64,
    pub reduce_input_groups: u64,
    pub reduce_input_records: u64,
    pub reduce_output_records: u64,
    pub input_read_bytes: u64,
    pub system_read_bytes: u64,
    pub system_write_bytes: u64,
    pub output_write_bytes: u64,
}

/// Wall-clock time per phase. Reported, never asserted: host-dependent.
#[derive(Debug, Clone, Copy, Default)]
pub struct PhaseElapsed {
    pub map_ms: u64,
    pub shuffle_ms: u64,
    pub reduce_ms: u64,
}

impl PhaseElapsed {
    pub fn total_ms(&self) -> u64 {
        self.map_ms + self.shuffle_ms + self.reduce_ms
    }
}

#[derive(Debug, Clone)]
pub struct JobResult {
    pub output_path: String,
    pub counters: JobCounters,
    pub elapsed: PhaseElapsed,
    /// Post-combine pair count that each partition received.
    pub shuffle_pairs_per_partition: Vec<u64>,
}

/// Assign a key to a partition: FNV-1a 64 of the key modulo the partition
/// count. Stable across platforms and runs.
pub fn partition(key: &[u8], partition_count: u32) -> u32 {
    debug_assert!(partition_count >= 1);
    (fnv1a_64(key) % u64::from(partition_count)) as u32
}

/// A pair in flight between map and reduce, tagged for deterministic
/// value ordering.
struct ShuffleItem {
    key: Vec<u8>,
    value: Vec<u8>,
    split: u32,
    idx: u32,
}

struct MapTaskOutput {
    per_partition: Vec<Vec<ShuffleItem>>,
    input_records: u64,
    output_records: u64,
    output_bytes: u64,
}

/// Run `task_count` tasks on up to `worker_count` threads, pulling task
/// indices from a shared counter. Results come back in task order; the
/// lowest-indexed error wins, so failures are deterministic too.
fn run_parallel<R, F>(task_count: usize, worker_count: usize, run: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Sync,
{
    let threads = worker_count.max(1).min(task_count.max(1));
    let results: Vec<Mutex<Option<R>>> = (0..task_count).map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    std::thread::scope(|scope| {
        for _ in 0..threads {
            scope.spawn(|| loop {
                let task = next.fetch_add(1, Ordering::Relaxed);
                if task >= task_count {
                    break;
                }
                let result = run(task);
                *results[task].lock().unwrap() = Some(result);
            });
        }
    });
    results
        .into_iter()
        .map(|slot| slot.into_inner().unwrap().expect("task ran"))
        .collect()
}

/// Record ranges per block: a record belongs to the block containing its
/// first byte. The final block may carry only padding and yield an empty
/// split; that split still becomes a (no-op) map task.
fn record_splits(total_len: usize, block_size: usize, record_count: usize) -> Vec<Range<usize>> {
    let block_count = total_len.div_ceil(block_size).max(1);
    let first_record_in = |byte: usize| -> usize {
        if byte <= HEADER_LEN {
            0
        } else {
            (byte - HEADER_LEN).div_ceil(RECORD_LEN)
        }
    };
    (0..block_count)
        .map(|b| {
            let lo = first_record_in(b * block_size).min(record_count);
            let hi = first_record_in(((b + 1) * block_size).min(total_len)).min(record_count);
            lo..hi
        })
        .collect()
}

/// Execute a job against a dataset stored at `input_path`, writing the
/// output bytes to `output_path` in the same store.
pub fn run_job(
    store: &BlockStore,
    job: &JobSpec,
    input_path: &str,
    output_path: &str,
    worker_count: usize,
) -> Result<JobResult, JobError> {
    if worker_count == 0 {
        return Err(JobError::InvalidJob {
            reason: "worker_count must be >= 1".into(),
        });
    }
    let mut counters = JobCounters::default();
    let mut elapsed = PhaseElapsed::default();

    let data = store.get(input_path)?;
    counters.input_read_bytes = data.len() as u64;
    let dataset = Dataset::parse(&data)?;
    let splits = record_splits(data.len(), store.config().block_size_bytes, dataset.records.len());

    // Map phase: one task per split.
    let map_start = Instant::now();
    let map_outputs: Vec<Result<MapTaskOutput, JobError>> =
        run_parallel(splits.len(), worker_count, |s| {
            map_task(job, s as u32, &dataset.records[splits[s].clone()])
        });
    let mut collected = Vec::with_capacity(map_outputs.len());
    for output in map_outputs {
        let output = output?;
        counters.map_input_records += output.input_records;
        counters.map_output_records += output.output_records;
        counters.map_output_bytes += output.output_bytes;
        collected.push(output);
    }
    elapsed.map_ms = map_start.elapsed().as_millis() as u64;

    // Shuffle: group each partition's pairs by key.
    let shuffle_start = Instant::now();
    type Group = BTreeMap<Vec<u8>, Vec<(u32, u32, Vec<u8>)>>;
    let partition_count = job.partition_count as usize;
    let groups: Vec<(Group, u64, u64)> = run_parallel(partition_count, worker_count, |p| {
        let mut group: Group = BTreeMap::new();
        let mut pairs = 0u64;
        let mut bytes = 0u64;
        for output in &collected {
            for item in &output.per_partition[p] {
                pairs += 1;
                bytes += (item.key.len() + item.value.len()) as u64;
                group
                    .entry(item.key.clone())
                    .or_default()
                    .push((item.split, item.idx, item.value.clone()));
            }
        }
        (group, pairs, bytes)
    });
    let shuffle_pairs_per_partition: Vec<u64> = groups.iter().map(|(_, pairs, _)| *pairs).collect();
    let shuffle_bytes: u64 = groups.iter().map(|(_, _, bytes)| *bytes).sum();
    counters.system_write_bytes = shuffle_bytes;
    counters.system_read_bytes = shuffle_bytes;
    elapsed.shuffle_ms = shuffle_start.elapsed().as_millis() as u64;

    // Reduce phase: one task per partition, keys in ascending order.
    let reduce_start = Instant::now();
    type ReduceOut = Result<(Vec<u8>, u64, u64, u64), JobError>;
    let reduce_outputs: Vec<ReduceOut> = run_parallel(partition_count, worker_count, |p| {
        let mut buffer = Vec::new();
        let mut groups_n = 0u64;
        let mut records_in = 0u64;
        let mut records_out = 0u64;
        for (key, mut tagged) in groups[p].0.clone() {
            tagged.sort_by_key(|&(split, idx, _)| (split, idx));
            let values: Vec<Vec<u8>> = tagged.into_iter().map(|(_, _, v)| v).collect();
            groups_n += 1;
            records_in += values.len() as u64;
            let pieces = (job.reducer)(&key, values).map_err(|message| JobError::JobFailure {
                phase: "reduce",
                context: format!("partition {p}, key {key:02x?}"),
                message,
            })?;
            records_out += pieces.len() as u64;
            for piece in pieces {
                buffer.extend_from_slice(&piece);
            }
        }
        Ok((buffer, groups_n, records_in, records_out))
    });
    let mut output = Vec::new();
    for reduced in reduce_outputs {
        let (buffer, groups_n, records_in, records_out) = reduced?;
        counters.reduce_input_groups += groups_n;
        counters.reduce_input_records += records_in;
        counters.reduce_output_records += records_out;
        output.extend_from_slice(&buffer);
    }
    elapsed.reduce_ms = reduce_start.elapsed().as_millis() as u64;

    counters.output_write_bytes = output.len() as u64;
    store.put(output_path, &output)?;

    Ok(JobResult {
        output_path: output_path.to_string(),
        counters,
        elapsed,
        shuffle_pairs_per_partition,
    })
}

fn map_task(job: &JobSpec, split: u32, records: &[SensorRecord]) -> Result<MapTaskOutput, JobError> {
    let partition_count = job.partition_count as usize;
    let mut emitted: Vec<ShuffleItem> = Vec::new();
    let mut output_records = 0u64;
    let mut output_bytes = 0u64;
    for (r, record) in records.iter().enumerate() {
        let context = || {
            format!(
                "split {split}, record {r} (device {}, seq {})",
                record.device_id, record.seq_no
            )
        };
        let pairs = (job.mapper)(record).map_err(|message| JobError::JobFailure {
            phase: "map",
            context: context(),
            message,
        })?;
        for kv in pairs {
            if kv.key.is_empty() {
                return Err(JobError::JobFailure {
                    phase: "map",
                    context: context(),
                    message: "mapper emitted an empty key".into(),
                });
            }
            output_records += 1;
            output_bytes += (kv.key.len() + kv.value.len()) as u64;
            let idx = emitted.len() as u32;
            emitted.push(ShuffleItem {
                key: kv.key,
                value: kv.value,
                split,
                idx,
            });
        }
    }

    if let Some(combiner) = &job.combiner {
        // Combine per key within this split; combined values take fresh
        // emission indices so cross-split ordering stays well defined.
        let mut by_key: BTreeMap<Vec<u8>, Vec<Vec<u8>>> = BTreeMap::new();
        for item in emitted {
            by_key.entry(item.key).or_default().push(item.value);
        }
        let mut combined: Vec<ShuffleItem> = Vec::new();
        for (key, values) in by_key {
            let folded = combiner(&key, values).map_err(|message| JobError::JobFailure {
                phase: "combine",
                context: format!("split {split}, key {key:02x?}"),
                message,
            })?;
            for (idx, value) in folded.into_iter().enumerate() {
                combined.push(ShuffleItem {
                    key: key.clone(),
                    value,
                    split,
                    idx: idx as u32,
                });
            }
        }
        emitted = combined;
    }

    let mut per_partition: Vec<Vec<ShuffleItem>> = (0..partition_count).map(|_| Vec::new()).collect();
    for item in emitted {
        let p = partition(&item.key, job.partition_count) as usize;
        per_partition[p].push(item);
    }
    Ok(MapTaskOutput {
        per_partition,
        input_records: records.len() as u64,
        output_records,
        output_bytes,
    })
}

/// Single-pass in-memory reference run of the same job semantics, without
/// splits, workers or combining. Exists so the engine has an independent
/// check; production paths should call [`run_job`].
pub fn run_sequential_oracle(
    store: &BlockStore,
    job: &JobSpec,
    input_path: &str,
) -> Result<Vec<u8>, JobError> {
    let data = store.get(input_path)?;
    let dataset = Dataset::parse(&data)?;
    let partition_count = job.partition_count as usize;
    let mut partitions: Vec<BTreeMap<Vec<u8>, Vec<Vec<u8>>>> = vec![BTreeMap::new(); partition_count];
    for (r, record) in dataset.records.iter().enumerate() {
        let pairs = (job.mapper)(record).map_err(|message| JobError::JobFailure {
            phase: "map",
            context: format!("record {r}"),
            message,
        })?;
        for kv in pairs {
            if kv.key.is_empty() {
                return Err(JobError::JobFailure {
                    phase: "map",
                    context: format!("record {r}"),
                    message: "mapper emitted an empty key".into(),
                });
            }
            let p = partition(&kv.key, job.partition_count) as usize;
            partitions[p].entry(kv.key).or_default().push(kv.value);
        }
    }
    let mut output = Vec::new();
    for part in partitions {
        for (key, values) in part {
            let pieces = (job.reducer)(&key, values).map_err(|message| JobError::JobFailure {
                phase: "reduce",
                context: format!("key {key:02x?}"),
                message,
            })?;
            for piece in pieces {
                output.extend_from_slice(&piece);
            }
        }
    }
    Ok(output)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::blockstore::StoreConfig;
    use crate::sensor::{generate_dataset, SensorSpec, SensorType};

    fn test_store() -> BlockStore {
        BlockStore::new(StoreConfig::default()).unwrap()
    }

    /// Counts records per sensor type; reducer emits `code:count` text.
    fn count_by_type_job(partitions: u32) -> JobSpec {
        let mapper: Arc<MapFn> =
            Arc::new(|r| Ok(vec![KeyValue::new(vec![r.sensor_type.code()], vec![1])]));
        let reducer: Arc<ReduceFn> = Arc::new(|key, values| {
            Ok(vec![format!("{}:{};", key[0], values.len()).into_bytes()])
        });
        JobSpec::new("count_by_type", partitions, mapper, reducer).unwrap()
    }

    fn put_records(store: &BlockStore, path: &str, records: Vec<SensorRecord>) {
        let bytes = Dataset::new(records, 0).to_bytes();
        store.put(path, &bytes).unwrap();
    }

    fn record(sensor_type: SensorType, device: u16, seq: u32, value: i32) -> SensorRecord {
        SensorRecord {
            sensor_type,
            flags: 0,
            device_id: device,
            seq_no: seq,
            timestamp_ms: u64::from(seq) * 100,
            value_milli: value,
        }
    }

    // Independent FNV-1a 64 written out step by step, used only to check
    // the partitioner against a second implementation.
    fn fnv_reference(data: &[u8]) -> u64 {
        let mut h: u64 = 14695981039346656037;
        for &b in data {
            h ^= b as u64;
            h = h.wrapping_mul(1099511628211);
        }
        h
    }

    #[test]
    fn single_partition_maps_everything_to_zero() {
        for key in [&b"a"[..], b"zz", b"\x00\xff", b"anything at all"] {
            assert_eq!(partition(key, 1), 0);
        }
    }

    #[test]
    fn partition_matches_reference_fnv() {
        assert_eq!(fnv_reference(b"a"), 0xaf63dc4c8601ec8c);
        assert_eq!(partition(b"a", 4), (0xaf63dc4c8601ec8cu64 % 4) as u32);
        assert_eq!(partition(b"a", 4), 0);
        for i in 0u32..50 {
            let key = i.to_be_bytes();
            assert_eq!(partition(&key, 7), (fnv_reference(&key) % 7) as u32);
        }
    }

    #[test]
    fn partition_distribution_is_not_degenerate() {
        let mut counts = [0u32; 8];
        for i in 0..10_000u32 {
            let key = format!("key-{i}");
            counts[partition(key.as_bytes(), 8) as usize] += 1;
        }
        for &c in &counts {
            assert!(c > 500, "partition got only {c} of 10000 keys");
        }
    }

    #[test]
    fn empty_dataset_produces_empty_output_and_zero_counters() {
        let store = test_store();
        put_records(&store, "empty", vec![]);
        let result = run_job(&store, &count_by_type_job(4), "empty", "empty.out", 2).unwrap();
        assert_eq!(store.get("empty.out").unwrap(), Vec::<u8>::new());
        assert_eq!(result.counters.map_input_records, 0);
        assert_eq!(result.counters.map_output_records, 0);
        assert_eq!(result.counters.reduce_input_groups, 0);
        assert_eq!(result.counters.reduce_output_records, 0);
        assert_eq!(result.counters.output_write_bytes, 0);
    }

    #[test]
    fn counts_per_sensor_type_match_brute_force() {
        let store = test_store();
        put_records(
            &store,
            "mixed",
            vec![
                record(SensorType::Moisture, 0, 0, 10),
                record(SensorType::Smoke, 0, 0, 20),
                record(SensorType::Moisture, 1, 0, 30),
                record(SensorType::Smoke, 1, 0, 40),
                record(SensorType::Moisture, 0, 1, 50),
            ],
        );
        let result = run_job(&store, &count_by_type_job(4), "mixed", "mixed.out", 2).unwrap();
        let output = String::from_utf8(store.get("mixed.out").unwrap()).unwrap();
        // Moisture=code 0 x3, Smoke=code 2 x2; key order within partitions.
        assert!(output.contains("0:3;"));
        assert!(output.contains("2:2;"));
        assert_eq!(result.counters.map_input_records, 5);
        assert_eq!(result.counters.map_output_records, 5);
        assert_eq!(result.counters.reduce_input_groups, 2);
        assert_eq!(result.counters.reduce_input_records, 5);
    }

    #[test]
    fn output_is_identical_for_any_worker_count() {
        let store = test_store();
        let spec = SensorSpec::default_for(SensorType::Smoke);
        let bytes = generate_dataset(&spec, 16 + 20 * 10_000).unwrap().to_bytes();
        store.put("big", &bytes).unwrap();
        let job = count_by_type_job(8);
        let mut outputs = Vec::new();
        for workers in [1usize, 2, 4, 8] {
            let out_path = format!("big.out.{workers}");
            let result = run_job(&store, &job, "big", &out_path, workers).unwrap();
            assert_eq!(result.counters.map_input_records, 10_000);
            outputs.push(store.get(&out_path).unwrap());
        }
        for other in &outputs[1..] {
            assert_eq!(&outputs[0], other);
        }
    }

    #[test]
    fn shuffle_pair_counts_conserve_map_output() {
        let store = test_store();
        let spec = SensorSpec::default_for(SensorType::Temperature);
        store
            .put("data", &generate_dataset(&spec, 2016).unwrap().to_bytes())
            .unwrap();
        let result = run_job(&store, &count_by_type_job(8), "data", "data.out", 3).unwrap();
        let shuffled: u64 = result.shuffle_pairs_per_partition.iter().sum();
        assert_eq!(shuffled, result.counters.map_output_records);
        assert_eq!(result.counters.reduce_input_records, result.counters.map_output_records);
        assert_eq!(result.counters.system_read_bytes, result.counters.system_write_bytes);
    }

    #[test]
    fn mapper_error_carries_record_context() {
        let store = test_store();
        put_records(
            &store,
            "data",
            vec![
                record(SensorType::Moisture, 0, 0, 1),
                record(SensorType::Moisture, 7, 1, 2),
            ],
        );
        let mapper: Arc<MapFn> = Arc::new(|r| {
            if r.device_id == 7 {
                Err("device 7 is cursed".into())
            } else {
                Ok(vec![KeyValue::new(vec![1], vec![])])
            }
        });
        let reducer: Arc<ReduceFn> = Arc::new(|_, _| Ok(vec![]));
        let job = JobSpec::new("failing", 2, mapper, reducer).unwrap();
        let err = run_job(&store, &job, "data", "data.out", 1).unwrap_err();
        match err {
            JobError::JobFailure { phase, context, message } => {
                assert_eq!(phase, "map");
                assert!(context.contains("device 7"), "context: {context}");
                assert_eq!(message, "device 7 is cursed");
            }
            other => panic!("expected JobFailure, got {other:?}"),
        }
    }

    #[test]
    fn garbage_input_is_malformed() {
        let store = test_store();
        store.put("junk", b"this is not a dataset").unwrap();
        let err = run_job(&store, &count_by_type_job(2), "junk", "junk.out", 1).unwrap_err();
        assert!(matches!(err, JobError::MalformedInput(_)));
    }

    #[test]
    fn empty_keys_are_rejected() {
        let store = test_store();
        put_records(&store, "data", vec![record(SensorType::Moisture, 0, 0, 1)]);
        let mapper: Arc<MapFn> = Arc::new(|_| Ok(vec![KeyValue::new(vec![], vec![1])]));
        let reducer: Arc<ReduceFn> = Arc::new(|_, _| Ok(vec![]));
        let job = JobSpec::new("empty_key", 2, mapper, reducer).unwrap();
        assert!(matches!(
            run_job(&store, &job, "data", "data.out", 1),
            Err(JobError::JobFailure { phase: "map", .. })
        ));
    }

    #[test]
    fn oracle_matches_engine_on_identity_job() {
        let store = test_store();
        let spec = SensorSpec::default_for(SensorType::Pressure);
        store
            .put("data", &generate_dataset(&spec, 4096).unwrap().to_bytes())
            .unwrap();
        // Identity: key by (device, seq), emit the record bytes unchanged.
        let mapper: Arc<MapFn> = Arc::new(|r| {
            let mut key = r.device_id.to_be_bytes().to_vec();
            key.extend_from_slice(&r.seq_no.to_be_bytes());
            Ok(vec![KeyValue::new(key, r.to_bytes().to_vec())])
        });
        let reducer: Arc<ReduceFn> = Arc::new(|_, values| Ok(values));
        let job = JobSpec::new("identity", 3, mapper, reducer).unwrap();
        let result = run_job(&store, &job, "data", "data.out", 4).unwrap();
        let via_engine = store.get(&result.output_path).unwrap();
        let via_oracle = run_sequential_oracle(&store, &job, "data").unwrap();
        assert_eq!(via_engine, via_oracle);

        // The identity job reproduces the input record multiset.
        let input = Dataset::parse(&store.get("data").unwrap()).unwrap();
        let mut expected: Vec<[u8; RECORD_LEN]> = input.records.iter().map(|r| r.to_bytes()).collect();
        let mut actual: Vec<[u8; RECORD_LEN]> = via_engine
            .chunks(RECORD_LEN)
            .map(|c| <[u8; RECORD_LEN]>::try_from(c).unwrap())
            .collect();
        expected.sort();
        actual.sort();
        assert_eq!(expected, actual);
    }

    #[test]
    fn record_splits_cover_all_records_without_overlap() {
        for (total, block, count) in [
            (5000usize, 1024usize, 249usize),
            (36, 1024, 1),
            (16, 1024, 0),
            (2016, 100, 100),
            (5234, 512, 260),
        ] {
            let splits = record_splits(total, block, count);
            assert_eq!(splits.len(), total.div_ceil(block).max(1));
            let mut next = 0usize;
            for split in &splits {
                assert_eq!(split.start, next);
                assert!(split.end >= split.start);
                next = split.end;
            }
            assert_eq!(next, count);
        }
    }

    #[test]
    fn reducer_keys_ascend_within_partitions() {
        let store = test_store();
        let spec = SensorSpec::default_for(SensorType::DieselLevel);
        store
            .put("data", &generate_dataset(&spec, 2500).unwrap().to_bytes())
            .unwrap();
        // Reducer emits its key; with one partition the concatenated output
        // must be globally sorted.
        let mapper: Arc<MapFn> = Arc::new(|r| {
            Ok(vec![KeyValue::new(
                r.seq_no.to_be_bytes().to_vec(),
                vec![],
            )])
        });
        let reducer: Arc<ReduceFn> = Arc::new(|key, _| Ok(vec![key.to_vec()]));
        let job = JobSpec::new("keys", 1, mapper, reducer).unwrap();
        let result = run_job(&store, &job, "data", "keys.out", 4).unwrap();
        let output = store.get(&result.output_path).unwrap();
        let keys: Vec<&[u8]> = output.chunks(4).collect();
        for pair in keys.windows(2) {
            assert!(pair[0] < pair[1]);
        }
    }
}
