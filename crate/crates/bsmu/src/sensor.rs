//! Sensor sampling simulation and the dataset wire format.
//!
//! This is the acquisition front of the pipeline: it produces deterministic
//! synthetic datasets of an exact byte size. A dataset is a 16-byte header,
//! a run of fixed 20-byte records, and up to 19 zero pad bytes so that any
//! requested size >= 36 can be hit exactly. All integers are big-endian.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

/// Serialized size of one record.
pub const RECORD_LEN: usize = 20;
/// Serialized size of the dataset header.
pub const HEADER_LEN: usize = 16;
/// Smallest dataset that holds the header plus one record.
pub const MIN_DATASET_LEN: usize = HEADER_LEN + RECORD_LEN;

/// Dataset files start with these four bytes.
pub const DATASET_MAGIC: [u8; 4] = *b"BSMU";
/// Current dataset format version.
pub const DATASET_VERSION: u8 = 1;

/// Record flag bit: value exceeded the alert threshold when sampled or filtered.
pub const FLAG_ALERT: u8 = 0b0000_0001;
/// Record flag bit: this record is a window summary, not a raw sample.
pub const FLAG_SUMMARY: u8 = 0b0000_0010;

/// Errors from record and dataset encoding, decoding, and generation.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum FormatError {
    #[error("malformed record: {reason}")]
    MalformedRecord { reason: String },
    #[error("malformed dataset: {reason}")]
    MalformedDataset { reason: String },
    #[error("invalid target size {target_bytes}: datasets need at least {MIN_DATASET_LEN} bytes")]
    InvalidTarget { target_bytes: usize },
    #[error("invalid sensor spec: {reason}")]
    InvalidSpec { reason: String },
}

/// The five monitored quantities. The 1-byte codes are part of the wire
/// format and must never be renumbered.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SensorType {
    Moisture,
    DieselLevel,
    Smoke,
    Temperature,
    Pressure,
}

impl SensorType {
    /// All variants in code order.
    pub const ALL: [SensorType; 5] = [
        SensorType::Moisture,
        SensorType::DieselLevel,
        SensorType::Smoke,
        SensorType::Temperature,
        SensorType::Pressure,
    ];

    /// Stable wire code, 0..=4.
    pub fn code(self) -> u8 {
        match self {
            SensorType::Moisture => 0,
            SensorType::DieselLevel => 1,
            SensorType::Smoke => 2,
            SensorType::Temperature => 3,
            SensorType::Pressure => 4,
        }
    }

    pub fn from_code(code: u8) -> Option<SensorType> {
        SensorType::ALL.get(code as usize).copied()
    }

    /// Lower-snake name used in config and report files.
    pub fn name(self) -> &'static str {
        match self {
            SensorType::Moisture => "moisture",
            SensorType::DieselLevel => "diesel_level",
            SensorType::Smoke => "smoke",
            SensorType::Temperature => "temperature",
            SensorType::Pressure => "pressure",
        }
    }

    pub fn from_name(name: &str) -> Option<SensorType> {
        SensorType::ALL.iter().copied().find(|s| s.name() == name)
    }

    /// Human-readable label for report tables.
    pub fn label(self) -> &'static str {
        match self {
            SensorType::Moisture => "Moisture",
            SensorType::DieselLevel => "Diesel Level",
            SensorType::Smoke => "Smoke",
            SensorType::Temperature => "Temperature",
            SensorType::Pressure => "Pressure",
        }
    }
}

/// One timestamped sample from one device.
///
/// Wire layout (20 bytes, big-endian):
///
/// ```text
/// [0]      sensor type code
/// [1]      flags (bit 0 alert, bit 1 summary, rest reserved zero)
/// [2..4]   device_id  u16
/// [4..8]   seq_no     u32
/// [8..16]  timestamp_ms u64
/// [16..20] value_milli  i32  (physical value x 1000)
/// ```
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SensorRecord {
    pub sensor_type: SensorType,
    pub flags: u8,
    pub device_id: u16,
    pub seq_no: u32,
    pub timestamp_ms: u64,
    pub value_milli: i32,
}

impl SensorRecord {
    /// Encode to the fixed 20-byte wire form.
    pub fn to_bytes(&self) -> [u8; RECORD_LEN] {
        let mut buf = [0u8; RECORD_LEN];
        buf[0] = self.sensor_type.code();
        buf[1] = self.flags;
        buf[2..4].copy_from_slice(&self.device_id.to_be_bytes());
        buf[4..8].copy_from_slice(&self.seq_no.to_be_bytes());
        buf[8..16].copy_from_slice(&self.timestamp_ms.to_be_bytes());
        buf[16..20].copy_from_slice(&self.value_milli.to_be_bytes());
        buf
    }

    /// Decode from exactly 20 bytes.
    pub fn from_bytes(bytes: &[u8]) -> Result<SensorRecord, FormatError> {
        if bytes.len() != RECORD_LEN {
            return Err(FormatError::MalformedRecord {
                reason: format!("expected {RECORD_LEN} bytes, got {}", bytes.len()),
            });
        }
        let sensor_type = SensorType::from_code(bytes[0]).ok_or(FormatError::MalformedRecord {
            reason: format!("unknown sensor code {:#04x}", bytes[0]),
        })?;
        Ok(SensorRecord {
            sensor_type,
            flags: bytes[1],
            device_id: u16::from_be_bytes(bytes[2..4].try_into().unwrap()),
            seq_no: u32::from_be_bytes(bytes[4..8].try_into().unwrap()),
            timestamp_ms: u64::from_be_bytes(bytes[8..16].try_into().unwrap()),
            value_milli: i32::from_be_bytes(bytes[16..20].try_into().unwrap()),
        })
    }

    pub fn is_alert(&self) -> bool {
        self.flags & FLAG_ALERT != 0
    }

    pub fn is_summary(&self) -> bool {
        self.flags & FLAG_SUMMARY != 0
    }
}

/// Generation parameters for one sensor's synthetic data stream.
#[derive(Debug, Clone, PartialEq)]
pub struct SensorSpec {
    pub sensor_type: SensorType,
    pub device_count: u16,
    pub sample_period_ms: u64,
    pub value_mean: f64,
    pub value_stddev: f64,
    pub alert_threshold: f64,
    pub seed: u64,
}

impl SensorSpec {
    pub fn new(
        sensor_type: SensorType,
        device_count: u16,
        sample_period_ms: u64,
        value_mean: f64,
        value_stddev: f64,
        alert_threshold: f64,
        seed: u64,
    ) -> Result<SensorSpec, FormatError> {
        if device_count == 0 {
            return Err(FormatError::InvalidSpec {
                reason: "device_count must be >= 1".into(),
            });
        }
        if sample_period_ms == 0 {
            return Err(FormatError::InvalidSpec {
                reason: "sample_period_ms must be >= 1".into(),
            });
        }
        if !value_mean.is_finite() || !value_stddev.is_finite() || !alert_threshold.is_finite() {
            return Err(FormatError::InvalidSpec {
                reason: "mean, stddev and alert_threshold must be finite".into(),
            });
        }
        if value_stddev < 0.0 {
            return Err(FormatError::InvalidSpec {
                reason: "value_stddev must be >= 0".into(),
            });
        }
        Ok(SensorSpec {
            sensor_type,
            device_count,
            sample_period_ms,
            value_mean,
            value_stddev,
            alert_threshold,
            seed,
        })
    }

    /// Per-sensor defaults: mean/stddev in the sensor's physical unit, an
    /// alert threshold roughly two standard deviations above the mean, and
    /// a distinct seed per sensor.
    pub fn default_for(sensor_type: SensorType) -> SensorSpec {
        let (mean, stddev, threshold) = match sensor_type {
            SensorType::Moisture => (40.0, 5.0, 50.0),
            SensorType::DieselLevel => (60.0, 10.0, 75.0),
            SensorType::Smoke => (50.0, 30.0, 110.0),
            SensorType::Temperature => (25.0, 4.0, 33.0),
            SensorType::Pressure => (101.3, 1.0, 103.3),
        };
        SensorSpec {
            sensor_type,
            device_count: 4,
            sample_period_ms: 1000,
            value_mean: mean,
            value_stddev: stddev,
            alert_threshold: threshold,
            seed: 1000 + u64::from(sensor_type.code()),
        }
    }
}

/// A parsed or generated dataset: records plus the trailing pad length.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dataset {
    pub records: Vec<SensorRecord>,
    pub pad_len: u32,
}

impl Dataset {
    pub fn new(records: Vec<SensorRecord>, pad_len: u32) -> Dataset {
        Dataset { records, pad_len }
    }

    /// Total serialized size in bytes.
    pub fn byte_len(&self) -> usize {
        HEADER_LEN + RECORD_LEN * self.records.len() + self.pad_len as usize
    }

    /// Serialize header, records and zero padding.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut buf = Vec::with_capacity(self.byte_len());
        buf.extend_from_slice(&DATASET_MAGIC);
        buf.push(DATASET_VERSION);
        buf.extend_from_slice(&(self.records.len() as u32).to_be_bytes());
        buf.extend_from_slice(&self.pad_len.to_be_bytes());
        buf.extend_from_slice(&[0u8; 3]);
        for record in &self.records {
            buf.extend_from_slice(&record.to_bytes());
        }
        buf.extend(std::iter::repeat(0u8).take(self.pad_len as usize));
        buf
    }

    /// Parse a serialized dataset, validating magic, version, declared
    /// counts against the actual length, and the all-zero padding.
    pub fn parse(bytes: &[u8]) -> Result<Dataset, FormatError> {
        let malformed = |reason: String| FormatError::MalformedDataset { reason };
        if bytes.len() < HEADER_LEN {
            return Err(malformed(format!("{} bytes is shorter than the header", bytes.len())));
        }
        if bytes[0..4] != DATASET_MAGIC {
            return Err(malformed("bad magic".into()));
        }
        if bytes[4] != DATASET_VERSION {
            return Err(malformed(format!("unsupported version {}", bytes[4])));
        }
        let record_count = u32::from_be_bytes(bytes[5..9].try_into().unwrap()) as usize;
        let pad_len = u32::from_be_bytes(bytes[9..13].try_into().unwrap());
        if bytes[13..16] != [0, 0, 0] {
            return Err(malformed("reserved header bytes are not zero".into()));
        }
        if pad_len as usize >= RECORD_LEN {
            return Err(malformed(format!("pad length {pad_len} exceeds a record")));
        }
        let expected = HEADER_LEN + RECORD_LEN * record_count + pad_len as usize;
        if bytes.len() != expected {
            return Err(malformed(format!(
                "length {} does not match declared {expected}",
                bytes.len()
            )));
        }
        let mut records = Vec::with_capacity(record_count);
        for i in 0..record_count {
            let start = HEADER_LEN + i * RECORD_LEN;
            records.push(SensorRecord::from_bytes(&bytes[start..start + RECORD_LEN])?);
        }
        if bytes[expected - pad_len as usize..].iter().any(|&b| b != 0) {
            return Err(malformed("non-zero pad bytes".into()));
        }
        Ok(Dataset { records, pad_len })
    }

    /// Frame a run of serialized records as a dataset (no padding).
    ///
    /// Used to re-frame reduction job output so it can be re-stored and
    /// transmitted like any other dataset.
    pub fn frame_payload(payload: &[u8]) -> Result<Vec<u8>, FormatError> {
        if payload.len() % RECORD_LEN != 0 {
            return Err(FormatError::MalformedDataset {
                reason: format!("payload length {} is not a whole number of records", payload.len()),
            });
        }
        let mut buf = Vec::with_capacity(HEADER_LEN + payload.len());
        buf.extend_from_slice(&DATASET_MAGIC);
        buf.push(DATASET_VERSION);
        buf.extend_from_slice(&((payload.len() / RECORD_LEN) as u32).to_be_bytes());
        buf.extend_from_slice(&0u32.to_be_bytes());
        buf.extend_from_slice(&[0u8; 3]);
        buf.extend_from_slice(payload);
        Ok(buf)
    }
}

/// How many records a dataset of `target_bytes` holds.
pub fn records_for_target(target_bytes: usize) -> Result<(usize, u32), FormatError> {
    if target_bytes < MIN_DATASET_LEN {
        return Err(FormatError::InvalidTarget { target_bytes });
    }
    let record_count = (target_bytes - HEADER_LEN) / RECORD_LEN;
    let pad_len = (target_bytes - HEADER_LEN - RECORD_LEN * record_count) as u32;
    Ok((record_count, pad_len))
}

/// Generate a dataset of exactly `target_bytes` bytes.
///
/// Samples are dealt round-robin across `device_count` devices; each device's
/// clock starts at zero and advances by `sample_period_ms` per sample. Values
/// come from a ChaCha8 stream keyed by the spec seed, shaped into an
/// approximate normal by summing twelve uniforms. The shaping uses only IEEE
/// add/mul/round, so identical spec, seed and target reproduce identical
/// bytes on any platform.
pub fn generate_dataset(spec: &SensorSpec, target_bytes: usize) -> Result<Dataset, FormatError> {
    let (record_count, pad_len) = records_for_target(target_bytes)?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let threshold_milli = milli_units(spec.alert_threshold);
    let mut records = Vec::with_capacity(record_count);
    for i in 0..record_count {
        let device_id = (i % spec.device_count as usize) as u16;
        let seq_no = (i / spec.device_count as usize) as u32;
        let value = spec.value_mean + spec.value_stddev * approx_gaussian(&mut rng);
        let value_milli = milli_units(value);
        let flags = if value_milli > threshold_milli { FLAG_ALERT } else { 0 };
        records.push(SensorRecord {
            sensor_type: spec.sensor_type,
            flags,
            device_id,
            seq_no,
            timestamp_ms: u64::from(seq_no) * spec.sample_period_ms,
            value_milli,
        });
    }
    Ok(Dataset { records, pad_len })
}

/// Convert a physical value to milli-units with round-half-away-from-zero,
/// saturating at the i32 range.
pub fn milli_units(value: f64) -> i32 {
    (value * 1000.0).round() as i32
}

fn unit_double(rng: &mut ChaCha8Rng) -> f64 {
    // 53 random mantissa bits -> uniform in [0, 1).
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Sum of twelve uniforms minus six: mean 0, variance 1, adequate tails for
/// synthetic telemetry, and free of transcendental functions whose rounding
/// could differ between platforms.
fn approx_gaussian(rng: &mut ChaCha8Rng) -> f64 {
    (0..12).map(|_| unit_double(rng)).sum::<f64>() - 6.0
}
