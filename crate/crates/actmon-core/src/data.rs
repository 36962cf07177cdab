//! Dataset ingestion and synthetic data generation.
//!
//! Two on-disk formats are supported: headerless CSV with one row per input
//! vector, and a raw little-endian f32 dump (`RF32` magic, version, row
//! count and dimension in a 16-byte header) for loss-free activation dumps.
//!
//! Synthetic data comes from Gaussian clusters driven by a xoshiro256++
//! generator seeded through splitmix64 (`seed_from_u64`). Gaussians use the
//! basic Box-Muller transform, two uniform draws per value, with uniforms
//! taken as `((next_u64 >> 11) + 0.5) * 2^-53`; given a seed, every byte of
//! the output is reproducible.

use rand::{RngCore, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;
use serde::{Deserialize, Serialize};
use std::io::{Read, Write};
use thiserror::Error;

const RAW_MAGIC: [u8; 4] = *b"RF32";
const RAW_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum DataError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("row {row}: expected {expected} fields, got {got}")]
    RaggedRow {
        row: usize,
        expected: usize,
        got: usize,
    },
    #[error("row {row}, field {field}: {message}")]
    BadField {
        row: usize,
        field: usize,
        message: String,
    },
    #[error("row {row}: non-finite value")]
    NonFinite { row: usize },
    #[error("dataset contains no rows")]
    Empty,
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("raw file too short for its header")]
    TruncatedHeader,
    #[error("bad magic bytes (expected RF32)")]
    BadMagic,
    #[error("unsupported raw format version {0}")]
    BadVersion(u32),
    #[error("raw payload has {got} bytes, expected {expected}")]
    TruncatedPayload { expected: usize, got: usize },
    #[error("dimension must be at least 1")]
    ZeroDim,
    #[error("synthetic spec error: {0}")]
    BadSpec(String),
    #[error("spec parse error: {0}")]
    SpecParse(#[from] serde_json::Error),
}

/// Input format accepted by [`load_dataset`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DataFormat {
    Csv,
    RawF32,
}

/// A set of real vectors of uniform dimension; immutable after load.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    rows: Vec<Vec<f64>>,
    dim: usize,
}

impl Dataset {
    pub fn new(dim: usize, rows: Vec<Vec<f64>>) -> Result<Self, DataError> {
        if dim == 0 {
            return Err(DataError::ZeroDim);
        }
        for (i, row) in rows.iter().enumerate() {
            if row.len() != dim {
                return Err(DataError::RaggedRow {
                    row: i,
                    expected: dim,
                    got: row.len(),
                });
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(DataError::NonFinite { row: i });
            }
        }
        Ok(Dataset { rows, dim })
    }

    /// A dataset with no rows but a known dimension.
    pub fn empty(dim: usize) -> Self {
        Dataset {
            rows: Vec::new(),
            dim,
        }
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Concatenation preserving row order: `self` first, then `other`.
    pub fn concat(&self, other: &Dataset) -> Result<Dataset, DataError> {
        if other.dim != self.dim {
            return Err(DataError::RaggedRow {
                row: self.rows.len(),
                expected: self.dim,
                got: other.dim,
            });
        }
        let mut rows = self.rows.clone();
        rows.extend(other.rows.iter().cloned());
        Ok(Dataset {
            rows,
            dim: self.dim,
        })
    }
}

/// Reads a dataset in the given format, validating uniform row length and
/// finiteness.
pub fn load_dataset<R: Read>(reader: R, format: DataFormat) -> Result<Dataset, DataError> {
    match format {
        DataFormat::Csv => load_csv(reader),
        DataFormat::RawF32 => load_raw_f32(reader),
    }
}

fn load_csv<R: Read>(reader: R) -> Result<Dataset, DataError> {
    let mut csv_reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut dim = 0;
    for (i, record) in csv_reader.records().enumerate() {
        let record = record?;
        let mut row = Vec::with_capacity(record.len());
        for (j, field) in record.iter().enumerate() {
            let value: f64 = field.parse().map_err(|e| DataError::BadField {
                row: i,
                field: j,
                message: format!("{e} in {field:?}"),
            })?;
            row.push(value);
        }
        if i == 0 {
            dim = row.len();
        } else if row.len() != dim {
            return Err(DataError::RaggedRow {
                row: i,
                expected: dim,
                got: row.len(),
            });
        }
        if row.iter().any(|v| !v.is_finite()) {
            return Err(DataError::NonFinite { row: i });
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(DataError::Empty);
    }
    Dataset::new(dim, rows)
}

fn load_raw_f32<R: Read>(mut reader: R) -> Result<Dataset, DataError> {
    let mut bytes = Vec::new();
    reader.read_to_end(&mut bytes)?;
    if bytes.len() < 16 {
        return Err(DataError::TruncatedHeader);
    }
    if bytes[0..4] != RAW_MAGIC {
        return Err(DataError::BadMagic);
    }
    let word = |at: usize| u32::from_le_bytes(bytes[at..at + 4].try_into().unwrap());
    let version = word(4);
    if version != RAW_VERSION {
        return Err(DataError::BadVersion(version));
    }
    let count = word(8) as usize;
    let dim = word(12) as usize;
    if dim == 0 {
        return Err(DataError::ZeroDim);
    }
    let expected = count * dim * 4;
    let payload = &bytes[16..];
    if payload.len() != expected {
        return Err(DataError::TruncatedPayload {
            expected,
            got: payload.len(),
        });
    }
    let rows: Vec<Vec<f64>> = (0..count)
        .map(|r| {
            (0..dim)
                .map(|c| {
                    let at = (r * dim + c) * 4;
                    f64::from(f32::from_le_bytes(payload[at..at + 4].try_into().unwrap()))
                })
                .collect()
        })
        .collect();
    Dataset::new(dim, rows)
}

/// Writes headerless CSV; floats use the shortest representation that parses
/// back to the identical value.
pub fn save_csv<W: Write>(mut writer: W, data: &Dataset) -> Result<(), DataError> {
    for row in &data.rows {
        let line = row
            .iter()
            .map(|v| v.to_string())
            .collect::<Vec<_>>()
            .join(",");
        writer.write_all(line.as_bytes())?;
        writer.write_all(b"\n")?;
    }
    Ok(())
}

/// Writes the raw f32 format. Values are narrowed to f32.
pub fn save_raw_f32<W: Write>(mut writer: W, data: &Dataset) -> Result<(), DataError> {
    writer.write_all(&RAW_MAGIC)?;
    writer.write_all(&RAW_VERSION.to_le_bytes())?;
    writer.write_all(&(data.len() as u32).to_le_bytes())?;
    writer.write_all(&(data.dim() as u32).to_le_bytes())?;
    for row in &data.rows {
        for &v in row {
            writer.write_all(&(v as f32).to_le_bytes())?;
        }
    }
    Ok(())
}

/// One Gaussian cluster: diagonal covariance around a center.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ClusterSpec {
    pub center: Vec<f64>,
    pub spread: Vec<f64>,
    pub count: usize,
}

/// Recipe for the synthetic train / held-out / out-of-distribution triple.
/// The OOD split draws from the same clusters with `shift` added to every
/// center.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub seed: u64,
    pub dim: usize,
    pub clusters: Vec<ClusterSpec>,
    pub shift: Vec<f64>,
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<(), DataError> {
        if self.dim == 0 {
            return Err(DataError::ZeroDim);
        }
        if self.clusters.is_empty() {
            return Err(DataError::BadSpec("no clusters".into()));
        }
        if self.shift.len() != self.dim {
            return Err(DataError::BadSpec(format!(
                "shift has dimension {}, expected {}",
                self.shift.len(),
                self.dim
            )));
        }
        if self.shift.iter().any(|v| !v.is_finite()) {
            return Err(DataError::BadSpec("non-finite shift".into()));
        }
        for (i, cluster) in self.clusters.iter().enumerate() {
            if cluster.center.len() != self.dim || cluster.spread.len() != self.dim {
                return Err(DataError::BadSpec(format!(
                    "cluster {i}: center/spread dimension mismatch"
                )));
            }
            if cluster.count == 0 {
                return Err(DataError::BadSpec(format!("cluster {i}: zero count")));
            }
            let finite = cluster
                .center
                .iter()
                .chain(cluster.spread.iter())
                .all(|v| v.is_finite());
            if !finite || cluster.spread.iter().any(|&s| s <= 0.0) {
                return Err(DataError::BadSpec(format!(
                    "cluster {i}: spreads must be positive and finite"
                )));
            }
        }
        Ok(())
    }

    pub fn from_json(bytes: &[u8]) -> Result<Self, DataError> {
        let spec: SyntheticSpec = serde_json::from_slice(bytes)?;
        spec.validate()?;
        Ok(spec)
    }
}

/// Uniform draw in (0, 1), exclusive on both ends.
fn unit_open(rng: &mut Xoshiro256PlusPlus) -> f64 {
    ((rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
}

/// Standard normal by the basic Box-Muller transform.
fn gaussian(rng: &mut Xoshiro256PlusPlus) -> f64 {
    let u1 = unit_open(rng);
    let u2 = unit_open(rng);
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

fn draw_split(
    rng: &mut Xoshiro256PlusPlus,
    spec: &SyntheticSpec,
    shift: Option<&[f64]>,
) -> Dataset {
    let mut rows = Vec::new();
    for cluster in &spec.clusters {
        for _ in 0..cluster.count {
            let row = (0..spec.dim)
                .map(|axis| {
                    let center = cluster.center[axis] + shift.map_or(0.0, |s| s[axis]);
                    center + cluster.spread[axis] * gaussian(rng)
                })
                .collect();
            rows.push(row);
        }
    }
    Dataset {
        rows,
        dim: spec.dim,
    }
}

/// Generates the train / held-out / OOD triple. Train and held-out are
/// disjoint draws from the same clusters; OOD uses shifted centers. The
/// result is fully determined by the spec.
pub fn generate(spec: &SyntheticSpec) -> Result<(Dataset, Dataset, Dataset), DataError> {
    spec.validate()?;
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(spec.seed);
    let train = draw_split(&mut rng, spec, None);
    let held_out = draw_split(&mut rng, spec, None);
    let ood = draw_split(&mut rng, spec, Some(&spec.shift));
    Ok((train, held_out, ood))
}
